"""Variational EM for the attributed-network mixture model.

Two modes share one code path.  Unweighted mode treats the observed
recruitment network as if complete.  Weighted mode divides attribute and
entropy terms by node inclusion probabilities, divides tie terms by edge
observation probabilities, and rescales non-tie terms by
(1 - phi)/(SS - R*phi), approximating the full-population objective from the
sampled one.  Passing unit probabilities through the weighted path reproduces
the unweighted computation exactly; the kernels arrange the arithmetic so the
reduction is bit-for-bit.

The tuning parameter alpha multiplies the network portion of the objective
and of the membership update; alpha=0 clusters on attributes alone.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .netcore import (
    PHI_MAX,
    PHI_MIN,
    SIGMA_FLOOR,
    TAU_FLOOR,
    FitCollapseError,
    ModelParams,
    NumericalDomainError,
    Responsibilities,
    expand_probs,
)

logger = logging.getLogger(__name__)

INITS = ("random", "kmeans")
_INIT_ALIASES = {
    "random": "random",
    "random-responsibilities": "random",
    "kmeans": "kmeans",
    "kmeans-attributes": "kmeans",
}

_THETA_FLOOR = 1e-12
_COLLAPSE_EPS = 1e-8


@dataclass
class FitConfig:
    """EM settings: cluster count, mode, tuning parameter, stopping rules,
    restart count, and initialization scheme ("random" responsibilities or
    "kmeans" on attributes)."""

    K: int
    weighted: bool = False
    alpha: float = 1.0
    max_iter: int = 500
    tol: float = 1e-6
    restarts: int = 10
    init: str = "random"
    newton_max: int = 50
    newton_tol: float = 1e-10
    rng_seed: int = 0

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.max_iter < 1 or self.restarts < 1 or self.newton_max < 1:
            raise ValueError("iteration counts must be positive")
        if self.tol <= 0 or self.newton_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.init not in _INIT_ALIASES:
            raise ValueError(f"init must be one of {sorted(_INIT_ALIASES)}")
        self.init = _INIT_ALIASES[self.init]


@dataclass
class FitResult:
    """Best-restart outcome: fitted parameters, soft and hard memberships,
    per-iteration objective values, and convergence status."""

    params: ModelParams
    tau: Responsibilities
    labels: np.ndarray
    objective_trace: np.ndarray
    converged: bool
    restart_index: int


@dataclass
class _Expanded:
    """Per-sample probability arrays plus degree-pair class tables used by
    the phi update (class code = inv_i * C + inv_j)."""

    S: np.ndarray
    SS: np.ndarray
    R: np.ndarray
    class_idx: np.ndarray
    ss_class: np.ndarray
    r_class: np.ndarray


def _expand_bundle(sample, probs, weighted):
    n = sample.n
    if not weighted:
        ones2 = np.ones((n, n))
        return _Expanded(
            S=np.ones(n),
            SS=ones2,
            R=ones2.copy(),
            class_idx=np.zeros((n, n), dtype=np.int64),
            ss_class=np.ones(1),
            r_class=np.ones(1),
        )
    if probs is None:
        raise ValueError("weighted mode requires inclusion probabilities")
    S, SS, R = expand_probs(probs, sample)
    uniq, inv = np.unique(sample.degree, return_inverse=True)
    C = len(uniq)
    ss_class = np.empty(C * C)
    r_class = np.empty(C * C)
    for a in range(C):
        for b in range(C):
            key = (int(uniq[a]), int(uniq[b]))
            if key[0] > key[1]:
                key = (key[1], key[0])
            ss_class[a * C + b] = probs.pair[key]
            r_class[a * C + b] = probs.edge[key]
    class_idx = (inv[:, None] * C + inv[None, :]).astype(np.int64)
    return _Expanded(S, SS, R, class_idx, ss_class, r_class)


def _locate_domain_error(sample, ex, phi):
    """First (i, j, k, h) whose non-tie denominator cannot be rescued by
    clamping phi; mirrors the kernel's bad-cell condition."""
    n = ex.SS.shape[0]
    offdiag = ~np.eye(n, dtype=bool)
    nonedge = (sample.adjY == 0) & offdiag
    hopeless = (ex.SS - _kernels.DENOM_MIN) / ex.R < _kernels.PHI_LO
    for k in range(phi.shape[0]):
        for h in range(phi.shape[1]):
            mask = nonedge & hopeless & (
                ex.SS - ex.R * phi[k, h] < _kernels.DENOM_MIN
            )
            if mask.any():
                i, j = np.argwhere(mask)[0]
                return int(i), int(j), int(k), int(h)
    return None


def _check_domain(bad, clamped, where, sample, ex, phi):
    if bad:
        loc = _locate_domain_error(sample, ex, phi)
        detail = ""
        if loc is not None:
            i, j, k, h = loc
            detail = (
                f"; first at node pair (i={i}, j={j}), cluster cell "
                f"(k={k}, h={h}): pair probability {ex.SS[i, j]:.3g} vs "
                f"edge probability {ex.R[i, j]:.3g}"
            )
        raise NumericalDomainError(
            f"{bad} non-tie terms in {where} have no admissible phi{detail}"
        )
    if clamped:
        logger.warning(
            "%d non-tie terms in %s ran against the denominator floor; "
            "phi clamped locally", clamped, where,
        )


def _attr_loglik(sample, params):
    """(n, K) log of cluster weight times feature likelihood per node."""
    x1 = sample.x1[:, None]
    mu = params.mu[None, :]
    sig = params.sigma[None, :]
    with np.errstate(divide="ignore"):
        ll = (
            -0.5 * np.log(2.0 * np.pi)
            - np.log(sig)
            - (x1 - mu) ** 2 / (2.0 * sig * sig)
        )
        ll = ll + np.log(params.lam)[None, :]
        ll = ll + np.log(params.theta)[sample.x2, :]
    return ll


def _as_tau(tau):
    return np.ascontiguousarray(
        np.asarray(getattr(tau, "tau", tau), dtype=np.float64)
    )


def _objective_arrays(sample, ex, params, tau, alpha):
    w = 1.0 / ex.S
    wt = tau * w[:, None]
    attr = float(np.sum(wt * _attr_loglik(sample, params)))
    ent = float(np.sum(wt * np.log(tau)))
    if alpha != 0.0:
        net, clamped, bad = _kernels.objective_net(
            tau, sample.adjY, params.phi, ex.R, ex.SS
        )
        _check_domain(bad, clamped, "objective", sample, ex, params.phi)
    else:
        net = 0.0
    return attr + alpha * net - ent


def objective_unweighted(sample, params, tau):
    """Complete-network objective: attribute log-likelihood, half the sum of
    pairwise tie/non-tie log-likelihoods, and the entropy bonus."""
    tau = _as_tau(tau)
    ex = _expand_bundle(sample, None, weighted=False)
    return _objective_arrays(sample, ex, params, tau, alpha=1.0)


def objective_weighted(sample, probs, params, tau):
    """Inverse-probability-weighted objective; reduces to the unweighted one
    under unit probabilities."""
    tau = _as_tau(tau)
    ex = _expand_bundle(sample, probs, weighted=True)
    return _objective_arrays(sample, ex, params, tau, alpha=1.0)


def _update_tau_arrays(sample, ex, params, tau_prev, alpha):
    logits = _attr_loglik(sample, params)
    if alpha != 0.0:
        net, clamped, bad = _kernels.tau_net_terms(
            tau_prev, sample.adjY, params.phi, ex.R, ex.SS
        )
        _check_domain(
            bad, clamped, "membership update", sample, ex, params.phi
        )
        logits = logits + (alpha * ex.S)[:, None] * net
    m = logits.max(axis=1)
    if not np.all(np.isfinite(m)):
        raise NumericalDomainError(
            "a node has no cluster with finite log-likelihood"
        )
    p = np.exp(logits - m[:, None])
    p /= p.sum(axis=1, keepdims=True)
    np.maximum(p, TAU_FLOOR, out=p)
    p /= p.sum(axis=1, keepdims=True)
    np.maximum(p, TAU_FLOOR, out=p)
    return p


def update_tau(sample, probs, params, tau_prev, cfg):
    """One membership update.

    Log-proportional to cluster weight times feature likelihood, plus
    alpha * S_i times the tie/non-tie evidence against the previous soft
    memberships.  Rows are normalized by log-sum-exp, floored, and
    renormalized.
    """
    ex = _expand_bundle(sample, probs, cfg.weighted)
    tau_prev = _as_tau(tau_prev)
    return Responsibilities(
        _update_tau_arrays(sample, ex, params, tau_prev, cfg.alpha)
    )


def _phi_closed_form(sample, tau):
    colsum = tau.sum(axis=0)
    num = tau.T @ (sample.adjY.astype(np.float64) @ tau)
    den = np.outer(colsum, colsum) - tau.T @ tau
    den = np.maximum(den, 1e-300)
    phi = num / den
    phi = 0.5 * (phi + phi.T)
    return np.clip(phi, PHI_MIN, PHI_MAX)


def _score_terms(x, A, V, ss, r):
    """Score of the weighted objective slice in one phi cell, and its
    derivative, from tie mass A and per-class non-tie masses V."""
    L = np.log1p(-x)
    D = ss - r * x
    h = (r - ss) * L / (D * D) - 1.0 / D
    g = A / x + float(np.sum(V * h))
    hp = (r - ss) * (-1.0 / (1.0 - x) / (D * D) + 2.0 * r * L / (D * D * D)) \
        - r / (D * D)
    gp = -A / (x * x) + float(np.sum(V * hp))
    return g, gp


def _phi_root(A, V, ss, r, x0, cfg, cell):
    """First downward zero crossing of the phi score on (lo, hi), by grid
    bracketing plus bracket-guarded Newton with bisection fallback.

    Returns the boundary value with a logged diagnostic when the score never
    changes sign.
    """
    lo = PHI_MIN
    hi = PHI_MAX
    if V.size:
        hi = min(hi, float(np.min(ss / r)) - 1e-8)
    if hi <= lo:
        return lo
    if A <= 0.0:
        # no tie mass: the objective slice decreases in phi everywhere
        return lo

    grid = np.geomspace(lo, hi, 48)
    gs = np.empty(grid.shape)
    for i, x in enumerate(grid):
        gs[i], _ = _score_terms(x, A, V, ss, r)
    pos = gs > 0.0
    neg = gs < 0.0
    bracket = None
    for i in range(len(grid) - 1):
        if pos[i] and neg[i + 1]:
            bracket = (grid[i], grid[i + 1])
            break
    if bracket is None:
        if not pos.any():
            # negative throughout: the maximizer sits at the lower clamp,
            # which happens routinely while a cluster's tie mass is tiny
            logger.debug(
                "phi score for cell %s negative on the whole bracket; "
                "returning lower boundary", cell,
            )
            return lo
        # No interior maximum: the tie mass momentarily dominates and the
        # surrogate increases toward the upper clamp, where its non-tie
        # penalty saturates.  Jumping there destabilizes the outer
        # iteration, so hold the warm-start value and let the memberships
        # move first; the interior root reappears once they rebalance.
        held = min(max(x0, lo), hi)
        logger.warning(
            "phi score for cell %s has no downward crossing; holding at "
            "%.4g", cell, held,
        )
        return held

    a, b = bracket  # g(a) > 0 > g(b)
    x = x0 if a < x0 < b else float(np.sqrt(a * b))
    dxold = b - a
    dx = dxold
    f, fp = _score_terms(x, A, V, ss, r)
    for _ in range(cfg.newton_max):
        if abs(f) <= cfg.newton_tol:
            break
        newton_ok = fp != 0.0
        if newton_ok:
            step = f / fp
            inside = a < x - step < b
            newton_ok = inside and abs(2.0 * f) <= abs(dxold * fp)
        if newton_ok:
            dxold = dx
            dx = step
            x = x - dx
        else:
            dxold = dx
            dx = 0.5 * (b - a)
            x = 0.5 * (a + b)
        if abs(dx) < 1e-15 * max(1.0, x):
            break
        f, fp = _score_terms(x, A, V, ss, r)
        if f > 0.0:
            a = x
        else:
            b = x
    return min(max(x, lo), hi)


def _phi_weighted(sample, ex, tau, phi_prev, cfg):
    K = tau.shape[1]
    n_cls2 = ex.ss_class.shape[0]
    if phi_prev is None:
        phi_prev = _phi_closed_form(sample, tau)
    phi = np.empty((K, K))
    for k in range(K):
        for h in range(k, K):
            A, V = _kernels.phi_pair_stats(
                tau, sample.adjY, ex.R, ex.class_idx, n_cls2, k, h
            )
            mask = V > 0.0
            root = _phi_root(
                float(A), V[mask], ex.ss_class[mask], ex.r_class[mask],
                float(phi_prev[k, h]), cfg, (k, h),
            )
            phi[k, h] = root
            phi[h, k] = root
    return np.clip(phi, PHI_MIN, PHI_MAX)


def update_phi(sample, probs, tau, phi_prev, cfg):
    """Tie-probability update: closed-form ratio of soft tie mass to soft
    pair mass in unweighted mode; per-cell safeguarded Newton root of the
    weighted score in weighted mode (warm-started from phi_prev)."""
    tau = _as_tau(tau)
    ex = _expand_bundle(sample, probs, cfg.weighted)
    if not cfg.weighted:
        return _phi_closed_form(sample, tau)
    return _phi_weighted(sample, ex, tau, phi_prev, cfg)


def phi_score(sample, probs, params, tau):
    """Gradient of objective_weighted with respect to the free entries of
    the symmetric phi matrix, as a full (K, K) array.

    Off-diagonal cells hold the ordered-pair sum (the derivative when
    phi[k,h] and phi[h,k] move together); diagonal cells hold half their
    ordered-pair sum.
    """
    tau = _as_tau(tau)
    ex = _expand_bundle(sample, probs, weighted=True)
    K = params.K
    n_cls2 = ex.ss_class.shape[0]
    out = np.empty((K, K))
    for k in range(K):
        for h in range(k, K):
            A, V = _kernels.phi_pair_stats(
                tau, sample.adjY, ex.R, ex.class_idx, n_cls2, k, h
            )
            mask = V > 0.0
            g, _ = _score_terms(
                float(params.phi[k, h]), float(A), V[mask],
                ex.ss_class[mask], ex.r_class[mask],
            )
            if k == h:
                g *= 0.5
            out[k, h] = g
            out[h, k] = g
    return out


def _update_params_arrays(sample, ex, tau, cfg, phi_prev):
    w = 1.0 / ex.S
    wt = tau * w[:, None]
    denom = wt.sum(axis=0)
    if np.any(denom < _COLLAPSE_EPS):
        raise FitCollapseError(
            f"effective cluster mass collapsed (min {denom.min():.3g})"
        )
    lam = denom / denom.sum()
    mu = (wt * sample.x1[:, None]).sum(axis=0) / denom
    var = (wt * (sample.x1[:, None] - mu[None, :]) ** 2).sum(axis=0) / denom
    sigma = np.maximum(np.sqrt(var), SIGMA_FLOOR)
    M = sample.num_categories
    onehot = np.zeros((sample.n, M))
    onehot[np.arange(sample.n), sample.x2] = 1.0
    theta = (onehot.T @ wt) / denom[None, :]
    theta = np.maximum(theta, _THETA_FLOOR)
    theta /= theta.sum(axis=0, keepdims=True)
    if cfg.weighted:
        phi = _phi_weighted(sample, ex, tau, phi_prev, cfg)
    else:
        phi = _phi_closed_form(sample, tau)
    return ModelParams(lam=lam, mu=mu, sigma=sigma, theta=theta, phi=phi)


def update_params(sample, probs, tau, cfg, phi_prev=None):
    """One parameter update from soft memberships.

    Weighted mode replaces each tau_ik by tau_ik/S_i in the closed forms
    (cluster weights renormalized to the simplex) and solves for phi by
    Newton; unit probabilities reproduce the unweighted closed forms
    exactly.  Raises FitCollapseError when a cluster's effective mass
    vanishes.
    """
    tau = _as_tau(tau)
    ex = _expand_bundle(sample, probs, cfg.weighted)
    return _update_params_arrays(sample, ex, tau, cfg, phi_prev)


def _init_tau(sample, cfg, rng):
    n, K = sample.n, cfg.K
    if cfg.init == "random":
        t = rng.dirichlet(np.ones(K), size=n)
    else:
        t = np.full((n, K), TAU_FLOOR)
        labels = _kmeans_attributes(sample, K, rng)
        t[np.arange(n), labels] = 1.0
    t = np.maximum(t, TAU_FLOOR)
    t /= t.sum(axis=1, keepdims=True)
    np.maximum(t, TAU_FLOOR, out=t)
    return t


def _kmeans_attributes(sample, K, rng, iters=25):
    """Small Lloyd's algorithm on standardized x1 plus one-hot x2."""
    x1 = sample.x1
    spread = x1.std()
    z1 = (x1 - x1.mean()) / (spread if spread > 0 else 1.0)
    M = sample.num_categories
    feats = np.zeros((sample.n, 1 + M))
    feats[:, 0] = z1
    feats[np.arange(sample.n), 1 + sample.x2] = 1.0
    idx = rng.choice(sample.n, size=min(K, sample.n), replace=False)
    centers = feats[idx].copy()
    if K > sample.n:
        centers = np.vstack([centers, feats[rng.integers(0, sample.n, K - sample.n)]])
    labels = np.zeros(sample.n, dtype=np.int64)
    for _ in range(iters):
        d2 = ((feats[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        for k in range(K):
            sel = new_labels == k
            if np.any(sel):
                centers[k] = feats[sel].mean(axis=0)
            else:
                centers[k] = feats[int(d2.min(axis=1).argmax())]
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
    return labels


def _em_single(sample, ex, cfg, tau0):
    tau = tau0
    phi_prev = None
    trace = []
    converged = False
    last = None
    second_last = None
    for _ in range(cfg.max_iter):
        params = _update_params_arrays(sample, ex, tau, cfg, phi_prev)
        phi_prev = params.phi
        tau = _update_tau_arrays(sample, ex, params, tau, cfg.alpha)
        obj = _objective_arrays(sample, ex, params, tau, cfg.alpha)
        trace.append(obj)
        second_last = last
        last = (obj, tau, params)
        if len(trace) >= 2:
            prev = trace[-2]
            if obj < prev - 1e-6:
                # guaranteed ascent only holds without sampling weights
                level = logging.WARNING if not cfg.weighted else logging.INFO
                logger.log(level, "objective decreased by %.3g in one cycle",
                           prev - obj)
            if abs(obj - prev) <= cfg.tol * (abs(prev) + 1e-12):
                converged = True
                break
        # the simultaneous membership update can settle into a period-2
        # flip-flop; treat a stationary two-step window as converged too
        if len(trace) >= 3:
            prev2 = trace[-3]
            if abs(obj - prev2) <= cfg.tol * (abs(prev2) + 1e-12):
                converged = True
                break
    # report the better of the last two iterates so a limit cycle yields
    # its upper state regardless of where the iteration count landed;
    # monotone runs keep their final iterate
    if second_last is not None and second_last[0] > last[0]:
        best_obj, tau, params = second_last
    else:
        best_obj, tau, params = last
    return tau, params, np.asarray(trace), converged, best_obj


def fit(sample, probs, cfg):
    """Run the EM with restarts and keep the best final objective.

    Deterministic given cfg.rng_seed (restart initializations use spawned
    seed streams).  Weighted mode requires `probs`.  Raises FitCollapseError
    when every restart collapses a cluster.
    """
    ex = _expand_bundle(sample, probs, cfg.weighted)
    seeds = np.random.SeedSequence(cfg.rng_seed).spawn(cfg.restarts)
    best = None
    collapses = 0
    for ridx in range(cfg.restarts):
        rng = np.random.default_rng(seeds[ridx])
        tau0 = _init_tau(sample, cfg, rng)
        try:
            tau, params, trace, converged, obj = _em_single(
                sample, ex, cfg, tau0
            )
        except FitCollapseError:
            collapses += 1
            logger.info("restart %d collapsed", ridx)
            continue
        if best is None or obj > best[0]:
            best = (obj, ridx, tau, params, trace, converged)
    if best is None:
        raise FitCollapseError(
            f"all {collapses} restarts collapsed a cluster; try a smaller K"
        )
    _, ridx, tau, params, trace, converged = best
    resp = Responsibilities(tau)
    return FitResult(
        params=params,
        tau=resp,
        labels=resp.labels(),
        objective_trace=trace,
        converged=converged,
        restart_index=ridx,
    )
