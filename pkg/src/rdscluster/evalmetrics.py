"""Clustering-quality metrics and the tuning-parameter sweep.

Modularity and normalized mutual information come in plain and
sampling-weighted forms.  The weighted forms divide tie indicators by edge
observation probabilities and node indicators by node inclusion
probabilities, estimating the population quantities from a link-traced
sample; with unit probabilities they reduce exactly to the plain forms.
Passing ``probs=None`` to a weighted variant means unit weights.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np

from .mixfit import FitCollapseError, fit
from .netcore import NumericalDomainError, UndefinedMetricError, expand_probs

logger = logging.getLogger(__name__)

DEFAULT_ALPHA_GRID = (0.0, 0.025, 0.05, 0.075, 0.1, 0.2, 0.4, 0.7, 1.0)

FEATURE_NAMES = ("x1", "x2")


@dataclass
class WeightedNmiResult:
    """Average and per-feature weighted NMI, with the bin count actually
    used per feature after merging colliding boundaries."""

    average: float
    per_feature: dict
    effective_bins: dict


@dataclass
class SweepReport:
    """Per-alpha fit quality along a grid, plus an advisory knee pick."""

    alphas: np.ndarray
    modularity: np.ndarray
    nmi: np.ndarray
    per_feature_nmi: np.ndarray
    feature_names: tuple
    suggested_alpha: float
    suggestion: str

    def __post_init__(self):
        m = len(self.alphas)
        if not (
            len(self.modularity) == m
            and len(self.nmi) == m
            and self.per_feature_nmi.shape[0] == m
        ):
            raise ValueError("sweep vectors must share one length")


def _encode(values):
    return np.unique(np.asarray(values), return_inverse=True)[1]


def _entropy(p):
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def modularity(adj, labels):
    """Fraction of edge ends inside clusters minus the random expectation,
    Q = sum_k (e_kk - a_k^2), in [-1, 1].  Raises UndefinedMetricError on an
    edgeless relation."""
    A = np.asarray(adj, dtype=np.float64).copy()
    np.fill_diagonal(A, 0.0)
    z = _encode(labels)
    if A.shape[0] != z.shape[0]:
        raise ValueError("adjacency and labels disagree on n")
    total = A.sum()
    if total <= 0:
        raise UndefinedMetricError("modularity undefined without edges")
    K = int(z.max()) + 1
    onehot = np.zeros((z.shape[0], K))
    onehot[np.arange(z.shape[0]), z] = 1.0
    E = onehot.T @ A @ onehot / total
    return float((np.diag(E) - E.sum(axis=1) ** 2).sum())


def weighted_modularity(sample, probs, labels):
    """Modularity of the estimated complete network: each observed tie
    counts 1/R_ij.  Invariant under uniform rescaling of all R_ij; equals
    plain modularity of the observed ties when R is identically 1."""
    z = _encode(labels)
    if z.shape[0] != sample.n:
        raise ValueError("labels and sample disagree on n")
    W = sample.adjY.astype(np.float64)
    if probs is not None:
        _, _, R = expand_probs(probs, sample)
        W = W / R
    np.fill_diagonal(W, 0.0)
    total = W.sum()
    if total <= 0:
        raise UndefinedMetricError(
            "weighted modularity undefined without observed ties"
        )
    K = int(z.max()) + 1
    onehot = np.zeros((sample.n, K))
    onehot[np.arange(sample.n), z] = 1.0
    E = onehot.T @ W @ onehot / total
    return float((np.diag(E) - E.sum(axis=1) ** 2).sum())


def nmi(feature, labels):
    """Plug-in normalized mutual information I/sqrt(H(X)H(C)) in [0, 1];
    0 by convention when either marginal entropy is 0."""
    xi = _encode(feature)
    ci = _encode(labels)
    if xi.shape != ci.shape:
        raise ValueError("feature and labels disagree on n")
    return _nmi_encoded(xi, ci, np.ones(xi.shape[0]))


def _nmi_encoded(xi, ci, w):
    joint = np.zeros((int(xi.max()) + 1, int(ci.max()) + 1))
    np.add.at(joint, (xi, ci), w)
    joint /= joint.sum()
    hx = _entropy(joint.sum(axis=1))
    hc = _entropy(joint.sum(axis=0))
    if hx <= 0.0 or hc <= 0.0:
        return 0.0
    hxc = _entropy(joint.ravel())
    val = (hx + hc - hxc) / np.sqrt(hx * hc)
    return float(min(max(val, 0.0), 1.0))


def _weighted_bins(x, w, bins):
    """Equal-frequency codes via weighted quantiles.

    Features with at most `bins` distinct values are used as categories
    directly.  Colliding boundaries merge; returns (codes, effective bins).
    """
    ux = np.unique(x)
    if ux.shape[0] <= bins:
        return np.searchsorted(ux, x), int(ux.shape[0])
    order = np.argsort(x, kind="stable")
    cw = np.cumsum(w[order])
    total = cw[-1]
    qs = np.arange(1, bins) / bins
    cut_idx = np.searchsorted(cw, qs * total, side="left")
    bounds = np.unique(x[order][np.minimum(cut_idx, x.shape[0] - 1)])
    codes = np.searchsorted(bounds, x, side="right")
    eff = int(np.unique(codes).shape[0])
    if eff < bins:
        logger.info(
            "quantile boundaries collided; %d effective bins instead of %d",
            eff, bins,
        )
    return codes, eff


def weighted_nmi(sample, probs, labels, bins=4):
    """Per-feature weighted NMI between sample features and cluster labels.

    Continuous features are cut into `bins` weighted-quantile bins; the
    categorical feature is used as-is.  Cell masses are inverse node
    inclusion probabilities, so the entropies estimate population ones.
    Returns the per-feature values and their average.
    """
    ci = _encode(labels)
    if ci.shape[0] != sample.n:
        raise ValueError("labels and sample disagree on n")
    if probs is not None:
        S, _, _ = expand_probs(probs, sample)
        w = 1.0 / S
    else:
        w = np.ones(sample.n)
    x1_codes, eff = _weighted_bins(sample.x1, w, bins)
    per = {
        "x1": _nmi_encoded(x1_codes, ci, w),
        "x2": _nmi_encoded(_encode(sample.x2), ci, w),
    }
    effective = {"x1": eff, "x2": int(np.unique(sample.x2).shape[0])}
    avg = float(np.mean([per[name] for name in FEATURE_NAMES]))
    return WeightedNmiResult(
        average=avg, per_feature=per, effective_bins=effective
    )


def _knee_suggestion(alphas, mod, nm):
    """Advisory pick: the alpha with the largest modularity among grid
    points whose NMI stays within 10% of its observed range from the top."""
    ok = np.isfinite(mod) & np.isfinite(nm)
    if not np.any(ok):
        return float("nan"), "suggestion: none (no successful fits)"
    top = np.nanmax(nm[ok])
    bottom = np.nanmin(nm[ok])
    floor = top - 0.1 * (top - bottom)
    keep = ok & (nm >= floor)
    idx = int(np.where(keep)[0][np.argmax(mod[keep])])
    a = float(alphas[idx])
    note = (
        f"suggestion: alpha={a:g} (largest modularity with NMI within 10% "
        "of its peak); advisory only, read the curves"
    )
    return a, note


def alpha_sweep(sample, probs, cfg, alpha_grid=None):
    """Fit once per grid alpha (shared restart seeding), score each result
    by weighted modularity and weighted NMI, and report the curves.

    Per-alpha failures are recorded as NaN gaps rather than raised.  The
    included knee pick is advisory; selection is meant to be a human read
    of the two curves.
    """
    if alpha_grid is None:
        alpha_grid = DEFAULT_ALPHA_GRID
    alphas = np.asarray(list(alpha_grid), dtype=np.float64)
    if alphas.size == 0:
        raise ValueError("alpha grid must be nonempty")
    mod = np.full(alphas.shape, np.nan)
    nm = np.full(alphas.shape, np.nan)
    per_feat = np.full((alphas.size, len(FEATURE_NAMES)), np.nan)
    for t, a in enumerate(alphas):
        cfg_a = replace(cfg, alpha=float(a))
        try:
            res = fit(sample, probs, cfg_a)
            mod[t] = weighted_modularity(sample, probs, res.labels)
            wn = weighted_nmi(sample, probs, res.labels)
        except (FitCollapseError, NumericalDomainError,
                UndefinedMetricError) as exc:
            logger.warning("alpha=%g failed: %s", a, exc)
            continue
        nm[t] = wn.average
        per_feat[t] = [wn.per_feature[name] for name in FEATURE_NAMES]
    suggested, note = _knee_suggestion(alphas, mod, nm)
    return SweepReport(
        alphas=alphas,
        modularity=mod,
        nmi=nm,
        per_feature_nmi=per_feat,
        feature_names=FEATURE_NAMES,
        suggested_alpha=suggested,
        suggestion=note,
    )
