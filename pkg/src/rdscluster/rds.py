"""Respondent-driven sampling: coupon-limited FIFO link tracing.

Seeds are drawn uniformly among nodes with at least one tie.  Each sampled
node, processed in recruitment (FIFO) order, draws a recruit count from
`recruit_dist` and recruits that many uniformly chosen not-yet-sampled
neighbors (fewer when fewer remain).  Tracing stops when `n_target` nodes are
sampled, capping mid-batch if needed.  When the frontier empties first, a
fresh seed is drawn among remaining eligible nodes (reseeding, on by
default); with reseeding off or nobody left to seed, the sample is returned
short and flagged partial.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .netcore import SEED, RdsSample

logger = logging.getLogger(__name__)


@dataclass
class RdsConfig:
    """Design of one RDS wave: target size, seed count, coupon cap, and the
    distribution of how many coupons get used (over 0..max_coupons)."""

    n_target: int
    num_seeds: int
    max_coupons: int = 3
    recruit_dist: np.ndarray = field(
        default_factory=lambda: np.array([0.1, 0.2, 0.3, 0.4])
    )
    rng_seed: int = 0
    reseed: bool = True

    def __post_init__(self):
        self.recruit_dist = np.asarray(self.recruit_dist, dtype=np.float64)
        if self.n_target < 1:
            raise ValueError("n_target must be positive")
        if self.num_seeds < 1:
            raise ValueError("num_seeds must be positive")
        if self.max_coupons < 1:
            raise ValueError("max_coupons must be positive")
        if self.recruit_dist.shape != (self.max_coupons + 1,):
            raise ValueError("recruit_dist must have max_coupons + 1 entries")
        if np.any(self.recruit_dist < 0):
            raise ValueError("recruit_dist entries must be nonnegative")
        if abs(self.recruit_dist.sum() - 1.0) > 1e-12:
            raise ValueError("recruit_dist must sum to 1")


def adjacency_csr(Y):
    """Compact neighbor lists (indptr, indices) from a dense 0/1 adjacency."""
    rows, cols = np.nonzero(Y)
    counts = np.bincount(rows, minlength=Y.shape[0])
    indptr = np.zeros(Y.shape[0] + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, cols.astype(np.int64)


def _run_trace(indptr, indices, eligible, cfg, rng):
    """Draw uniforms and run the trace kernel once."""
    budget = _kernels.trace_uniform_budget(cfg.n_target, cfg.num_seeds)
    uniforms = rng.random(budget)
    recruit_cum = np.cumsum(cfg.recruit_dist).astype(np.float64)
    order, recruiter, wave, cnt, reseeds, _ = _kernels.rds_trace(
        indptr,
        indices,
        eligible,
        cfg.n_target,
        cfg.num_seeds,
        cfg.max_coupons,
        recruit_cum,
        uniforms,
        cfg.reseed,
    )
    return order, recruiter, wave, cnt, reseeds


def rds_sample(pop, cfg):
    """Trace one RDS sample from a population.

    Deterministic given cfg.rng_seed.  Raises ValueError when the population
    has no node with ties or when n_target exceeds the population size.
    """
    if cfg.n_target > pop.n:
        raise ValueError("n_target exceeds population size")
    degrees = pop.degrees
    eligible = np.flatnonzero(degrees >= 1).astype(np.int64)
    if eligible.size == 0:
        raise ValueError("population has no node with degree >= 1")

    indptr, indices = adjacency_csr(pop.Y)
    rng = np.random.default_rng(cfg.rng_seed)
    order, recruiter, wave, cnt, reseeds = _run_trace(
        indptr, indices, eligible, cfg, rng
    )

    partial = cnt < cfg.n_target
    if partial:
        logger.warning(
            "rds trace exhausted after %d of %d nodes", cnt, cfg.n_target
        )

    adj = np.zeros((cnt, cnt), dtype=np.int8)
    nonseed = np.flatnonzero(recruiter != SEED)
    adj[nonseed, recruiter[nonseed]] = 1
    adj[recruiter[nonseed], nonseed] = 1

    return RdsSample(
        node_ids=order,
        recruiter=recruiter,
        wave=wave,
        degree=degrees[order],
        x1=pop.x1[order],
        x2=pop.x2[order],
        adjY=adj,
        reseed_count=int(reseeds),
        partial=bool(partial),
        num_categories=pop.num_categories,
    )
