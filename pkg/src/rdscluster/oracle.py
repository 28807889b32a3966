"""Exact and naive reference implementations for testing.

Everything here is deliberately independent of the production modules: plain
Python loops, direct dictionary lookups, and exhaustive enumeration.  Each
oracle refuses inputs beyond its enumeration budget instead of approximating.
"""

import itertools
import math

import numpy as np

from .netcore import SEED, OracleSizeError

_MAX_ENUM_UNITS = 8
_MAX_NAIVE_N = 50
_MAX_TRACE_NODES = 6
_MAX_TRACE_STATES = 2_000_000


def enumerate_ss_inclusion(degrees, n):
    """Exact per-degree inclusion probabilities for successive sampling.

    Enumerates every ordered without-replacement draw of size `n` where each
    step picks a remaining unit with probability proportional to its degree.
    Returns {degree: inclusion probability}.  Limited to 8 units.
    """
    degrees = [int(d) for d in degrees]
    m = len(degrees)
    if m > _MAX_ENUM_UNITS:
        raise OracleSizeError(f"enumeration limited to {_MAX_ENUM_UNITS} units")
    if any(d < 1 for d in degrees):
        raise ValueError("degrees must be positive")
    if not 1 <= n <= m:
        raise ValueError("n must lie in 1..len(degrees)")

    inc = [0.0] * m

    def rec(mask, depth, prob):
        if depth == n:
            return
        tot = 0
        for j in range(m):
            if not mask & (1 << j):
                tot += degrees[j]
        for j in range(m):
            if mask & (1 << j):
                continue
            pj = prob * degrees[j] / tot
            inc[j] += pj
            rec(mask | (1 << j), depth + 1, pj)

    rec(0, 0, 1.0)

    out = {}
    for j, d in enumerate(degrees):
        if d in out:
            if abs(out[d] - inc[j]) > 1e-9:
                raise AssertionError("same-degree units disagree; oracle bug")
        else:
            out[d] = inc[j]
    return out


def _log_normal(x, mu, sigma):
    return -0.5 * math.log(2.0 * math.pi) - math.log(sigma) \
        - (x - mu) ** 2 / (2.0 * sigma * sigma)


def naive_objective(sample, params, tau, mode="unweighted", probs=None,
                    alpha=1.0):
    """Objective via literal nested loops; n is capped at 50.

    `mode` is "unweighted" or "weighted"; weighted mode requires `probs` and
    reads S/SS/R straight from its dictionaries.  The arithmetic arrangement
    is intentionally different from the production kernels.
    """
    n = sample.n
    if n > _MAX_NAIVE_N:
        raise OracleSizeError(f"naive objective limited to n={_MAX_NAIVE_N}")
    if mode not in ("unweighted", "weighted"):
        raise ValueError("mode must be 'unweighted' or 'weighted'")
    weighted = mode == "weighted"
    if weighted and probs is None:
        raise ValueError("weighted mode requires probs")

    tau = np.asarray(getattr(tau, "tau", tau), dtype=float)
    K = params.K
    lam, mu, sig = params.lam, params.mu, params.sigma
    theta, phi = params.theta, params.phi
    deg = [int(d) for d in sample.degree]

    def node_prob(i):
        return probs.node[deg[i]] if weighted else 1.0

    def pair_prob(d, i, j):
        if not weighted:
            return 1.0
        key = (deg[i], deg[j]) if deg[i] <= deg[j] else (deg[j], deg[i])
        return d[key]

    total = 0.0
    for i in range(n):
        w = 1.0 / node_prob(i)
        for k in range(K):
            t = tau[i, k]
            a = math.log(lam[k]) + _log_normal(sample.x1[i], mu[k], sig[k]) \
                + math.log(theta[sample.x2[i], k])
            total += w * t * a
            total -= w * t * math.log(t)

    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            y = int(sample.adjY[i, j])
            ss = pair_prob(probs.pair, i, j) if weighted else 1.0
            r = pair_prob(probs.edge, i, j) if weighted else 1.0
            for k in range(K):
                for h in range(K):
                    p = phi[k, h]
                    if y:
                        term = math.log(p) / r
                    else:
                        term = (1.0 - p) * math.log(1.0 - p) / (ss - r * p)
                    total += 0.5 * alpha * tau[i, k] * tau[j, h] * term
    return total


def exact_rds_edge_probs(pop, cfg):
    """Exact per-edge observation probabilities for the FIFO RDS trace.

    Enumerates every seed choice, recruit-count draw, ordered recruit
    arrangement, and reseed choice, with the same semantics as the production
    sampler, and sums the probability that each population edge appears as a
    recruitment tie.  Returns {(i, j) with i<j: probability}.  Limited to 6
    nodes; raises OracleSizeError when the state space explodes anyway.
    """
    n = pop.n
    if n > _MAX_TRACE_NODES:
        raise OracleSizeError(f"trace enumeration limited to {_MAX_TRACE_NODES} nodes")
    degrees = pop.degrees
    neighbors = [sorted(np.flatnonzero(pop.Y[v]).tolist()) for v in range(n)]
    eligible0 = [v for v in range(n) if degrees[v] >= 1]
    if not eligible0:
        raise ValueError("population has no node with degree >= 1")
    dist = [float(p) for p in cfg.recruit_dist]
    n_target = min(cfg.n_target, n)

    obs = {}
    for a in range(n):
        for b in range(a + 1, n):
            if pop.Y[a, b]:
                obs[(a, b)] = 0.0

    states = 0

    def record(rec_edges, prob):
        for e in rec_edges:
            obs[e] += prob

    def edge_key(a, b):
        return (a, b) if a < b else (b, a)

    def rec(order, rec_edges, qh, seeds_left, sampled, prob):
        nonlocal states
        states += 1
        if states > _MAX_TRACE_STATES:
            raise OracleSizeError("trace enumeration exceeded its state budget")
        cnt = len(order)
        if cnt == n_target:
            record(rec_edges, prob)
            return
        remaining = [v for v in eligible0 if not sampled[v]]
        if seeds_left > 0:
            if not remaining:
                rec(order, rec_edges, qh, 0, sampled, prob)
                return
            p = prob / len(remaining)
            for v in remaining:
                sampled[v] = True
                rec(order + [v], rec_edges, qh, seeds_left - 1, sampled, p)
                sampled[v] = False
            return
        if qh == cnt:
            # frontier exhausted
            if not cfg.reseed or not remaining:
                record(rec_edges, prob)
                return
            p = prob / len(remaining)
            for v in remaining:
                sampled[v] = True
                # the new seed lands at index qh; it is dequeued next
                rec(order + [v], rec_edges, qh, 0, sampled, p)
                sampled[v] = False
            return
        i = order[qh]
        avail = [v for v in neighbors[i] if not sampled[v]]
        for m, pm in enumerate(dist):
            if pm == 0.0:
                continue
            take = min(m, len(avail), n_target - cnt)
            if take == 0:
                rec(order, rec_edges, qh + 1, 0, sampled, prob * pm)
                continue
            arrangements = list(itertools.permutations(avail, take))
            pa = prob * pm / len(arrangements)
            for arr in arrangements:
                for v in arr:
                    sampled[v] = True
                rec(
                    order + list(arr),
                    rec_edges + [edge_key(i, v) for v in arr],
                    qh + 1,
                    0,
                    sampled,
                    pa,
                )
                for v in arr:
                    sampled[v] = False

    sampled = [False] * n
    # seeds count toward n_target exactly as in the sampler
    num_seeds = min(cfg.num_seeds, n_target)
    rec([], [], 0, num_seeds, sampled, 1.0)
    return obs
