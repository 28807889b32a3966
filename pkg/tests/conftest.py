"""Shared builders for the test suite.

The sample builders fabricate small but fully valid RdsSample objects
directly (recruitment forest, waves, reported degrees), so unit tests do not
have to run the sampler to get inputs for the fitter and metrics.
"""

import numpy as np
import pytest

from rdscluster.netcore import (
    SEED,
    InclusionProbs,
    ModelParams,
    RdsSample,
    Responsibilities,
)


def make_forest_sample(n, rng, num_seeds=2, M=2, max_out=3, x1=None, x2=None):
    """Random valid RDS sample: forest topology plus random features."""
    num_seeds = min(num_seeds, n)
    recruiter = np.full(n, SEED, dtype=np.int64)
    wave = np.zeros(n, dtype=np.int64)
    out = np.zeros(n, dtype=np.int64)
    for i in range(num_seeds, n):
        open_slots = np.flatnonzero(out[:i] < max_out)
        r = int(rng.choice(open_slots))
        recruiter[i] = r
        wave[i] = wave[r] + 1
        out[r] += 1
    adjY = np.zeros((n, n), dtype=np.int8)
    for i in range(n):
        r = recruiter[i]
        if r != SEED:
            adjY[i, r] = adjY[r, i] = 1
    observed = adjY.sum(axis=1)
    degree = observed + rng.integers(1, 4, size=n)
    if x1 is None:
        x1 = rng.normal(size=n)
    if x2 is None:
        x2 = rng.integers(0, M, size=n)
    return RdsSample(
        node_ids=np.arange(n),
        recruiter=recruiter,
        wave=wave,
        degree=degree,
        x1=np.asarray(x1, dtype=np.float64),
        x2=np.asarray(x2, dtype=np.int64),
        adjY=adjY,
        num_categories=M,
    )


def seeds_only_sample(degree, x1, x2, M=2):
    """All-seed sample (no ties); handy when only features matter."""
    n = len(degree)
    return RdsSample(
        node_ids=np.arange(n),
        recruiter=np.full(n, SEED, dtype=np.int64),
        wave=np.zeros(n, dtype=np.int64),
        degree=np.asarray(degree, dtype=np.int64),
        x1=np.asarray(x1, dtype=np.float64),
        x2=np.asarray(x2, dtype=np.int64),
        adjY=np.zeros((n, n), dtype=np.int8),
        num_categories=M,
    )


def unit_probs(sample):
    """S = SS = R = 1 for every degree present in the sample."""
    degs = sorted({int(d) for d in sample.degree})
    node = {d: 1.0 for d in degs}
    pair = {(a, b): 1.0 for a in degs for b in degs if a <= b}
    edge = dict(pair)
    return InclusionProbs(node=node, pair=pair, edge=edge)


def random_probs(sample, rng, s_lo=0.2, s_hi=0.9):
    """Random probabilities with R <= SS enforced."""
    degs = sorted({int(d) for d in sample.degree})
    node = {d: float(rng.uniform(s_lo, s_hi)) for d in degs}
    pair = {}
    edge = {}
    for a in degs:
        for b in degs:
            if a <= b:
                ss = float(rng.uniform(0.15, 0.85))
                pair[(a, b)] = ss
                edge[(a, b)] = ss * float(rng.uniform(0.2, 1.0))
    return InclusionProbs(node=node, pair=pair, edge=edge)


def random_params(K, M, rng, phi_lo=0.05, phi_hi=0.5):
    lam = rng.dirichlet(np.full(K, 5.0))
    phi = rng.uniform(phi_lo, phi_hi, size=(K, K))
    phi = (phi + phi.T) / 2.0
    return ModelParams(
        lam=lam,
        mu=rng.normal(size=K),
        sigma=rng.uniform(0.5, 2.0, size=K),
        theta=rng.dirichlet(np.full(M, 3.0), size=K).T,
        phi=phi,
    )


def random_tau(n, K, rng):
    return Responsibilities(tau=rng.dirichlet(np.full(K, 2.0), size=n))


@pytest.fixture
def rng():
    return np.random.default_rng(20260819)
