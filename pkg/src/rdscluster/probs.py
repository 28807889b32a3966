"""Inclusion-probability estimation from an RDS sample.

Node and pair probabilities come from a successive-sampling approximation:
reconstruct per-degree population counts by inverse-probability weighting,
simulate many without-replacement draws with selection probability
proportional to remaining degree mass, and read smoothed inclusion
frequencies off the simulations, iterating the reconstruction a few times.

Edge observation probabilities come from forward simulation: rebuild
configuration-model populations with the estimated degree counts, trace the
RDS design on each, and pool observed recruitment ties against available
population ties per degree pair.
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .netcore import SEED, InclusionProbs
from .rds import RdsConfig

logger = logging.getLogger(__name__)

PAIR_MODES = ("within_sim", "cross_sim")


@dataclass
class ProbsConfig:
    """Settings for probability estimation.

    N_assumed : posited full-population size (must be >= sample size).
    num_sims : successive-sampling draw count used for S and SS.
    num_iters : self-consistency iterations of the count/probability loop.
    edge_sims : forward RDS simulations for edge probabilities.
    rds : sampling design used for the forward simulations (required by
        estimate_edge_probs / estimate_probs).
    pair_mode : "within_sim" pools co-draw counts per simulation (default);
        "cross_sim" uses products of totals pooled across simulations,
        clamped into (0,1] (kept for comparison; it saturates as num_sims
        grows).
    known_degree_counts : optional {degree: population count} that pins the
        reconstructed population exactly and skips the iterative estimate.
    """

    N_assumed: int
    num_sims: int = 1000
    num_iters: int = 3
    edge_sims: int = 500
    rng_seed: int = 0
    rds: RdsConfig | None = None
    pair_mode: str = "within_sim"
    known_degree_counts: dict | None = None

    def __post_init__(self):
        if self.N_assumed < 1:
            raise ValueError("N_assumed must be positive")
        if self.num_sims < 1 or self.edge_sims < 1:
            raise ValueError("simulation counts must be positive")
        if self.num_iters < 1:
            raise ValueError("num_iters must be positive")
        if self.pair_mode not in PAIR_MODES:
            raise ValueError(f"pair_mode must be one of {PAIR_MODES}")
        if self.known_degree_counts is not None:
            self.known_degree_counts = {
                int(k): int(v) for k, v in self.known_degree_counts.items()
            }
            if any(
                k < 1 or v < 1 for k, v in self.known_degree_counts.items()
            ):
                raise ValueError("known degree counts must be positive")


def _degree_classes(sample):
    return np.unique(sample.degree, return_counts=True)


def _allocate_counts(uniq, counts, S, N_assumed):
    """Largest-remainder allocation of N_assumed across degree classes with
    weights counts/S, floored at the observed counts."""
    w = counts / S
    target = N_assumed * w / w.sum()
    base = np.floor(target).astype(np.int64)
    frac = target - base
    short = int(N_assumed - base.sum())
    if short > 0:
        order = np.argsort(-frac, kind="stable")
        base[order[:short]] += 1
    floored = np.maximum(base, counts)
    if floored.sum() != N_assumed:
        logger.debug(
            "degree-count floor pushed the reconstructed population to %d "
            "(assumed %d)", int(floored.sum()), N_assumed,
        )
    return floored


def _resolve_counts(sample, cfg, uniq, counts, S=None):
    """Population degree counts: pinned by config, or IPW-allocated from S."""
    if cfg.known_degree_counts is not None:
        missing = [int(d) for d in uniq if int(d) not in cfg.known_degree_counts]
        if missing:
            raise ValueError(
                f"known_degree_counts misses sampled degrees {missing}"
            )
        N_hat = np.array(
            [cfg.known_degree_counts[int(d)] for d in uniq], dtype=np.int64
        )
        if np.any(N_hat < counts):
            raise ValueError("known degree counts below observed counts")
        return N_hat
    return _allocate_counts(uniq, counts, S, cfg.N_assumed)


def _ss_core(sample, cfg):
    """Run the successive-sampling scheme once.

    Returns (node_map, pair_map, N_hat, uniq) with the pair map computed
    from the final iteration's simulations, so node and pair estimates share
    one simulation set.
    """
    n = sample.n
    if cfg.N_assumed < n:
        raise ValueError("N_assumed must be at least the sample size")
    if np.any(sample.degree < 1):
        raise ValueError("degrees must be positive")
    uniq, counts = _degree_classes(sample)
    deg_f = uniq.astype(np.float64)
    rng = np.random.default_rng([cfg.rng_seed, 0])

    pinned = cfg.known_degree_counts is not None
    if pinned:
        N_hat = _resolve_counts(sample, cfg, uniq, counts)
        iters = 1
    else:
        # init S proportional to degree, scaled so the implied
        # inverse-probability population size equals N_assumed
        gamma = float(np.sum(1.0 / sample.degree)) / cfg.N_assumed
        S = np.minimum(gamma * deg_f, 1.0)
        iters = cfg.num_iters

    sim_counts = None
    for _ in range(iters):
        if not pinned:
            N_hat = _resolve_counts(sample, cfg, uniq, counts, S)
        draws = min(n, int(N_hat.sum()))
        uniforms = rng.random((cfg.num_sims, draws))
        sim_counts = _kernels.ss_counts(deg_f, N_hat, uniforms)
        U = sim_counts.sum(axis=0)
        S = (U + 1.0) / (cfg.num_sims * N_hat + 1.0)

    node = {int(d): float(s) for d, s in zip(uniq, S)}

    U = sim_counts.sum(axis=0).astype(np.float64)
    cross = (sim_counts.T @ sim_counts).astype(np.float64)
    Nf = N_hat.astype(np.float64)
    M = float(cfg.num_sims)
    pair = {}
    C = len(uniq)
    for a in range(C):
        for b in range(a, C):
            if cfg.pair_mode == "cross_sim":
                num = U[a] * U[b]
                den = M * Nf[a] * Nf[b]
            elif a == b:
                num = cross[a, a] - U[a]
                den = M * Nf[a] * (Nf[a] - 1.0)
            else:
                num = cross[a, b]
                den = M * Nf[a] * Nf[b]
            val = (num + 1.0) / (den + 1.0)
            pair[(int(uniq[a]), int(uniq[b]))] = float(min(val, 1.0))
    return node, pair, N_hat, uniq


def estimate_node_probs(sample, cfg):
    """Per-degree probability that a node enters the sample."""
    node, _, _, _ = _ss_core(sample, cfg)
    return node


def estimate_pair_probs(sample, node_probs, cfg):
    """Per-degree-pair probability that both nodes enter the sample.

    Shares the node estimator's simulations (same seed, same scheme), so
    `node_probs` is only cross-checked against the sample's degrees.
    """
    uniq = np.unique(sample.degree)
    missing = [int(d) for d in uniq if int(d) not in node_probs]
    if missing:
        raise ValueError(f"node_probs misses sampled degrees {missing}")
    _, pair, _, _ = _ss_core(sample, cfg)
    return pair


def _config_model_csr(pop_deg, rng):
    """Erased configuration model: stub matching, self-loops and duplicate
    ties dropped.  Returns (indptr, indices, src, dst) with src < dst."""
    N = pop_deg.shape[0]
    stubs = np.repeat(np.arange(N, dtype=np.int64), pop_deg)
    rng.shuffle(stubs)
    if stubs.size % 2:
        stubs = stubs[:-1]
    a = stubs[0::2]
    b = stubs[1::2]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    keep = lo != hi
    key = lo[keep] * np.int64(N) + hi[keep]
    key = np.unique(key)
    src = (key // N).astype(np.int64)
    dst = (key % N).astype(np.int64)
    rows = np.concatenate([src, dst])
    cols = np.concatenate([dst, src])
    order = np.argsort(rows, kind="stable")
    indptr = np.zeros(N + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=N), out=indptr[1:])
    return indptr, cols[order], src, dst


def _edge_sim_core(population_draw, cls_of_node, n_cls, rds_cfg, n_target,
                   edge_sims, rng):
    """Pool observed recruitment ties and available population ties per
    degree-class pair over `edge_sims` traces.

    `population_draw(rng)` returns (indptr, indices, src, dst) for one
    population; tests inject fixed topologies here.
    """
    obs = np.zeros((n_cls, n_cls), dtype=np.int64)
    avail = np.zeros((n_cls, n_cls), dtype=np.int64)
    recruit_cum = np.cumsum(rds_cfg.recruit_dist).astype(np.float64)
    budget = _kernels.trace_uniform_budget(n_target, rds_cfg.num_seeds)
    for _ in range(edge_sims):
        indptr, indices, src, dst = population_draw(rng)
        ca = cls_of_node[src]
        cb = cls_of_node[dst]
        np.add.at(avail, (np.minimum(ca, cb), np.maximum(ca, cb)), 1)
        realized = np.flatnonzero(np.diff(indptr) > 0).astype(np.int64)
        if realized.size == 0:
            continue
        uniforms = rng.random(budget)
        order, recruiter, _, cnt, _, _ = _kernels.rds_trace(
            indptr, indices, realized,
            min(n_target, realized.size),
            rds_cfg.num_seeds, rds_cfg.max_coupons,
            recruit_cum, uniforms, rds_cfg.reseed,
        )
        child = np.flatnonzero(recruiter != SEED)
        if child.size:
            cc = cls_of_node[order[child]]
            cp = cls_of_node[order[recruiter[child]]]
            np.add.at(obs, (np.minimum(cc, cp), np.maximum(cc, cp)), 1)
    return obs, avail


def estimate_edge_probs(sample, node_probs, cfg, pair_probs=None):
    """Per-degree-pair probability that an existing tie between sampled
    nodes is observed as a recruitment tie.

    Rebuilds configuration-model populations from the degree counts implied
    by `node_probs`, traces the design in cfg.rds on each, and pools
    (observed + 1)/(available + 1) per degree pair.  When `pair_probs` is
    given the result is clamped so no edge probability exceeds its pair
    probability.  Degree pairs that never realize a population tie keep the
    smoothed value and are logged.
    """
    if cfg.rds is None:
        raise ValueError("edge estimation requires ProbsConfig.rds")
    uniq, counts = _degree_classes(sample)
    svals = np.empty(len(uniq))
    for c, d in enumerate(uniq):
        if int(d) not in node_probs:
            raise ValueError(f"node_probs misses sampled degree {int(d)}")
        svals[c] = node_probs[int(d)]
    N_hat = _resolve_counts(sample, cfg, uniq, counts, svals)

    pop_deg = np.repeat(uniq.astype(np.int64), N_hat)
    cls_of_node = np.repeat(np.arange(len(uniq), dtype=np.int64), N_hat)
    rng = np.random.default_rng([cfg.rng_seed, 1])
    n_target = min(sample.n, int(N_hat.sum()))

    obs, avail = _edge_sim_core(
        lambda r: _config_model_csr(pop_deg, r),
        cls_of_node, len(uniq), cfg.rds, n_target, cfg.edge_sims, rng,
    )

    edge = {}
    never = []
    clamped = 0
    for a in range(len(uniq)):
        for b in range(a, len(uniq)):
            key = (int(uniq[a]), int(uniq[b]))
            val = (obs[a, b] + 1.0) / (avail[a, b] + 1.0)
            if avail[a, b] == 0:
                never.append(key)
            if pair_probs is not None and key in pair_probs:
                if val > pair_probs[key]:
                    val = pair_probs[key]
                    clamped += 1
            edge[key] = float(min(val, 1.0))
    if never:
        logger.warning(
            "no population ties realized for degree pairs %s; smoothed "
            "values kept", never,
        )
    if clamped:
        logger.info(
            "%d edge probabilities clamped to their pair probabilities",
            clamped,
        )
    return edge


def estimate_probs(sample, cfg):
    """Full estimation pass: node, pair, and edge probabilities as an
    InclusionProbs (edge clamped below pair)."""
    node, pair, _, _ = _ss_core(sample, cfg)
    edge = estimate_edge_probs(sample, node, cfg, pair_probs=pair)
    return InclusionProbs(node=node, pair=pair, edge=edge)
