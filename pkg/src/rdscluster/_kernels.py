"""Hot inner loops with a numba backend and a pure-numpy fallback.

The backend is chosen once at import time: numba is used when it imports
cleanly, unless the environment variable ``RDSCLUSTER_NO_NUMBA`` is set to a
non-empty value, in which case the numpy/python fallback runs.  ``backend()``
reports which one is active.

Kernels never draw randomness internally.  Callers pre-draw uniform variates
with ``numpy.random.Generator`` and pass them in, and the sequential kernels
(`ss_counts`, `rds_trace`) consume them through the same arithmetic on both
backends, so those two are bit-identical across backends.  The floating-point
reduction kernels (`tau_net_terms`, `objective_net`, `phi_pair_stats`) use
vectorised numpy in the fallback, which reorders summation; backends agree to
~1e-13 relative there.

Non-edge factors are computed ratio-first, ``(1-phi)/(SS - R*phi)`` then
``* log1p(-phi)``, so that with unit weights the ratio is exactly 1.0 and the
weighted expressions reduce bit-for-bit to the unweighted ones.
"""

import logging
import os

import numpy as np

logger = logging.getLogger(__name__)

# Smallest allowed value of the non-edge denominator SS - R*phi before the
# effective phi is clamped down, and the clamp floor for phi itself.
DENOM_MIN = 1e-12
PHI_LO = 1e-8

_env_off = bool(os.environ.get("RDSCLUSTER_NO_NUMBA", ""))
try:
    if _env_off:
        raise ImportError("numba disabled via RDSCLUSTER_NO_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False
    njit = None


def backend():
    """Name of the active kernel backend, 'numba' or 'numpy'."""
    return "numba" if HAS_NUMBA else "numpy"


# ----------------------------------------------------------------------
# successive-sampling draws
# ----------------------------------------------------------------------

def _ss_counts_seq(class_degrees, class_counts, uniforms):
    # One probability-proportional-to-remaining-degree draw sequence per row
    # of `uniforms`.  Mass is recomputed from scratch each draw so the float
    # stream matches the vectorised fallback exactly.
    num_sims, n = uniforms.shape
    ncls = class_degrees.shape[0]
    out = np.zeros((num_sims, ncls), dtype=np.int64)
    for m in range(num_sims):
        rem = class_counts.astype(np.float64)
        for t in range(n):
            total = 0.0
            for c in range(ncls):
                total += rem[c] * class_degrees[c]
            if total <= 0.0:
                break
            target = uniforms[m, t] * total
            acc = 0.0
            pick = ncls - 1
            for c in range(ncls):
                acc += rem[c] * class_degrees[c]
                if acc > target:
                    pick = c
                    break
            while rem[pick] <= 0.0 and pick > 0:
                pick -= 1
            rem[pick] -= 1.0
            out[m, pick] += 1
    return out


def _ss_counts_vec(class_degrees, class_counts, uniforms):
    # Lockstep across simulations: cumulative mass per row reproduces the
    # sequential walk's left-to-right accumulation order.
    num_sims, n = uniforms.shape
    ncls = class_degrees.shape[0]
    rem = np.tile(class_counts.astype(np.float64), (num_sims, 1))
    out = np.zeros((num_sims, ncls), dtype=np.int64)
    rows = np.arange(num_sims)
    for t in range(n):
        mass = rem * class_degrees
        cum = np.cumsum(mass, axis=1)
        total = cum[:, -1]
        alive = total > 0.0
        target = uniforms[:, t] * total
        pick = (cum <= target[:, None]).sum(axis=1)
        np.clip(pick, 0, ncls - 1, out=pick)
        # float-edge guard: never pick an exhausted class
        bad = alive & (rem[rows, pick] <= 0.0)
        while np.any(bad):
            pick[bad] -= 1
            np.clip(pick, 0, ncls - 1, out=pick)
            bad = alive & (rem[rows, pick] <= 0.0) & (pick > 0)
        r = rows[alive]
        p = pick[alive]
        rem[r, p] -= 1.0
        out[r, p] += 1
    return out


# ----------------------------------------------------------------------
# RDS trace over a CSR adjacency
# ----------------------------------------------------------------------

def _rds_trace_impl(indptr, indices, eligible, n_target, num_seeds,
                    max_coupons, recruit_cum, uniforms, reseed):
    """FIFO coupon-limited link trace.  Returns (order, recruiter, wave,
    n_sampled, reseed_count, uniforms_used).

    `eligible` is the initial list of seedable nodes (degree >= 1); it is
    maintained with swap-removal so seed/reseed draws stay O(1).  `recruit_cum`
    is the cumulative recruit-count distribution over 0..max_coupons.
    One uniform: seed pick, recruit count, or each Fisher-Yates swap.
    """
    nnode = indptr.shape[0] - 1
    sampled = np.zeros(nnode, dtype=np.bool_)
    cand = eligible.copy()
    cpos = np.full(nnode, -1, dtype=np.int64)
    for q in range(cand.shape[0]):
        cpos[cand[q]] = q
    clen = cand.shape[0]

    order = np.empty(n_target, dtype=np.int64)
    recruiter = np.empty(n_target, dtype=np.int64)
    wave = np.empty(n_target, dtype=np.int64)

    maxdeg = 0
    for v in range(nnode):
        d = indptr[v + 1] - indptr[v]
        if d > maxdeg:
            maxdeg = d
    buf = np.empty(max(maxdeg, 1), dtype=np.int64)

    cnt = 0
    qh = 0
    up = 0
    reseed_count = 0

    def _remove(node, cand, cpos, clen):
        q = cpos[node]
        last = cand[clen - 1]
        cand[q] = last
        cpos[last] = q
        cpos[node] = -1
        return clen - 1

    # initial seeds
    for _ in range(num_seeds):
        if cnt >= n_target or clen == 0:
            break
        idx = int(uniforms[up] * clen)
        up += 1
        if idx >= clen:
            idx = clen - 1
        node = cand[idx]
        order[cnt] = node
        recruiter[cnt] = -1
        wave[cnt] = 0
        sampled[node] = True
        clen = _remove(node, cand, cpos, clen)
        cnt += 1

    while cnt < n_target:
        if qh == cnt:
            # frontier exhausted
            if (not reseed) or clen == 0:
                break
            idx = int(uniforms[up] * clen)
            up += 1
            if idx >= clen:
                idx = clen - 1
            node = cand[idx]
            order[cnt] = node
            recruiter[cnt] = -1
            wave[cnt] = 0
            sampled[node] = True
            clen = _remove(node, cand, cpos, clen)
            cnt += 1
            reseed_count += 1
            continue
        iidx = qh
        i = order[iidx]
        qh += 1
        u = uniforms[up]
        up += 1
        m = 0
        while m <= max_coupons and recruit_cum[m] <= u:
            m += 1
        if m > max_coupons:
            m = max_coupons
        bn = 0
        for ptr in range(indptr[i], indptr[i + 1]):
            j = indices[ptr]
            if not sampled[j]:
                buf[bn] = j
                bn += 1
        take = m
        if bn < take:
            take = bn
        if n_target - cnt < take:
            take = n_target - cnt
        for t in range(take):
            span = bn - t
            r = t + int(uniforms[up] * span)
            up += 1
            if r >= bn:
                r = bn - 1
            tmp = buf[t]
            buf[t] = buf[r]
            buf[r] = tmp
            child = buf[t]
            order[cnt] = child
            recruiter[cnt] = iidx
            wave[cnt] = wave[iidx] + 1
            sampled[child] = True
            clen = _remove(child, cand, cpos, clen)
            cnt += 1

    return order[:cnt], recruiter[:cnt], wave[:cnt], cnt, reseed_count, up


def trace_uniform_budget(n_target, num_seeds):
    """Number of pre-drawn uniforms that always suffices for one trace."""
    # each sampled node consumes at most one seed/reseed pick or one
    # Fisher-Yates swap, plus one recruit-count draw per dequeued node
    return 3 * n_target + num_seeds + 16


# ----------------------------------------------------------------------
# weighted network terms for the responsibility update
# ----------------------------------------------------------------------

def _tau_net_seq(tau, adj, phi, R, SS):
    n, K = tau.shape
    out = np.zeros((n, K), dtype=np.float64)
    clamped = 0
    bad = 0
    for k in range(K):
        for h in range(K):
            p = phi[k, h]
            lp = np.log(p)
            l1p = np.log1p(-p)
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    if j == i:
                        continue
                    if adj[i, j] != 0:
                        t = lp / R[i, j]
                    else:
                        d = SS[i, j] - R[i, j] * p
                        if d >= DENOM_MIN:
                            t = ((1.0 - p) / d) * l1p
                        else:
                            pe = (SS[i, j] - DENOM_MIN) / R[i, j]
                            if pe < PHI_LO:
                                bad += 1
                                continue
                            de = SS[i, j] - R[i, j] * pe
                            t = ((1.0 - pe) / de) * np.log1p(-pe)
                            clamped += 1
                    acc += tau[j, h] * t
                out[i, k] += acc
    return out, clamped, bad


def _pair_term_matrix(adj, p, R, SS):
    # shared by the vectorised fallbacks: T[i,j] for one (k,h) cell, diagonal
    # zeroed; returns (T, clamped, bad)
    lp = np.log(p)
    l1p = np.log1p(-p)
    d = SS - R * p
    clamped = 0
    bad = 0
    if np.all(d >= DENOM_MIN):
        nonedge = ((1.0 - p) / d) * l1p
    else:
        pe = (SS - DENOM_MIN) / R
        low = pe < PHI_LO
        need = d < DENOM_MIN
        bad = int(np.count_nonzero(need & low))
        clamped = int(np.count_nonzero(need & ~low))
        pe = np.where(need & ~low, pe, p)
        de = SS - R * pe
        nonedge = np.where(
            need & low, 0.0, ((1.0 - pe) / de) * np.log1p(-pe)
        )
    T = np.where(adj != 0, lp / R, nonedge)
    np.fill_diagonal(T, 0.0)
    return T, clamped, bad


def _tau_net_vec(tau, adj, phi, R, SS):
    n, K = tau.shape
    out = np.zeros((n, K), dtype=np.float64)
    clamped = 0
    bad = 0
    for k in range(K):
        for h in range(K):
            T, c, b = _pair_term_matrix(adj, phi[k, h], R, SS)
            clamped += c
            bad += b
            out[:, k] += T @ tau[:, h]
    return out, clamped, bad


# ----------------------------------------------------------------------
# network part of the objective
# ----------------------------------------------------------------------

def _obj_net_seq(tau, adj, phi, R, SS):
    n, K = tau.shape
    total = 0.0
    clamped = 0
    bad = 0
    for k in range(K):
        for h in range(K):
            p = phi[k, h]
            lp = np.log(p)
            l1p = np.log1p(-p)
            acc = 0.0
            for i in range(n):
                tik = tau[i, k]
                if tik == 0.0:
                    continue
                row = 0.0
                for j in range(n):
                    if j == i:
                        continue
                    if adj[i, j] != 0:
                        t = lp / R[i, j]
                    else:
                        d = SS[i, j] - R[i, j] * p
                        if d >= DENOM_MIN:
                            t = ((1.0 - p) / d) * l1p
                        else:
                            pe = (SS[i, j] - DENOM_MIN) / R[i, j]
                            if pe < PHI_LO:
                                bad += 1
                                continue
                            de = SS[i, j] - R[i, j] * pe
                            t = ((1.0 - pe) / de) * np.log1p(-pe)
                            clamped += 1
                    row += tau[j, h] * t
                acc += tik * row
            total += acc
    return 0.5 * total, clamped, bad


def _obj_net_vec(tau, adj, phi, R, SS):
    n, K = tau.shape
    total = 0.0
    clamped = 0
    bad = 0
    for k in range(K):
        for h in range(K):
            T, c, b = _pair_term_matrix(adj, phi[k, h], R, SS)
            clamped += c
            bad += b
            total += tau[:, k] @ (T @ tau[:, h])
    return 0.5 * total, clamped, bad


# ----------------------------------------------------------------------
# sufficient statistics for the weighted phi score
# ----------------------------------------------------------------------

def _phi_stats_seq(tau, adj, R, class_idx, ncls, k, h):
    n = tau.shape[0]
    A = 0.0
    V = np.zeros(ncls, dtype=np.float64)
    for i in range(n):
        tik = tau[i, k]
        for j in range(n):
            if j == i:
                continue
            if adj[i, j] != 0:
                A += tik * tau[j, h] / R[i, j]
            else:
                V[class_idx[i, j]] += tik * tau[j, h]
    return A, V


def _phi_stats_vec(tau, adj, R, class_idx, ncls, k, h):
    n = tau.shape[0]
    P = np.outer(tau[:, k], tau[:, h])
    np.fill_diagonal(P, 0.0)
    edge = adj != 0
    A = float(np.sum(P[edge] / R[edge]))
    offdiag = ~np.eye(n, dtype=bool)
    ne = ~edge & offdiag
    V = np.bincount(class_idx[ne], weights=P[ne], minlength=ncls)
    return A, V[:ncls].astype(np.float64)


# ----------------------------------------------------------------------
# dispatch
# ----------------------------------------------------------------------

if HAS_NUMBA:
    _ss_counts_nb = njit(cache=True)(_ss_counts_seq)
    _rds_trace_nb = njit(cache=True)(_rds_trace_impl)
    _tau_net_nb = njit(cache=True)(_tau_net_seq)
    _obj_net_nb = njit(cache=True)(_obj_net_seq)
    _phi_stats_nb = njit(cache=True)(_phi_stats_seq)

    ss_counts = _ss_counts_nb
    rds_trace = _rds_trace_nb
    tau_net_terms = _tau_net_nb
    objective_net = _obj_net_nb
    phi_pair_stats = _phi_stats_nb
else:
    logger.info("numba backend off; using numpy fallback kernels")
    ss_counts = _ss_counts_vec
    rds_trace = _rds_trace_impl
    tau_net_terms = _tau_net_vec
    objective_net = _obj_net_vec
    phi_pair_stats = _phi_stats_vec
