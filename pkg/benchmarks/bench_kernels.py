"""Timing comparison of the JIT kernels against their numpy fallbacks.

Both implementations live in rdscluster._kernels, so one process can time
them side by side; a warmup call per kernel keeps JIT compilation out of
the numbers.  When numba is missing (or RDSCLUSTER_NO_NUMBA is set) only
the fallback column is reported.

Example:
    python benchmarks/bench_kernels.py --n 300 --sims 400 --repeat 5
"""

import argparse
import time

import numpy as np

from rdscluster import _kernels
from rdscluster.netcore import expand_probs
from rdscluster.probs import ProbsConfig, estimate_probs
from rdscluster.rds import RdsConfig, adjacency_csr, rds_sample
from rdscluster.synth import case_config, generate_population


def best_of(fn, repeat):
    fn()  # warmup; first JIT call compiles
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def build_workloads(n, sims, seed):
    """Study-sized inputs: one Case I population, one traced sample."""
    rng = np.random.default_rng(seed)
    pop = generate_population(case_config("I", rng_seed=seed))
    rcfg = RdsConfig(n_target=n, num_seeds=5, rng_seed=seed)
    samp = rds_sample(pop, rcfg)

    pcfg = ProbsConfig(N_assumed=pop.n, num_sims=200, edge_sims=100,
                       rng_seed=seed, rds=rcfg)
    probs = estimate_probs(samp, pcfg)
    S, SS, R = expand_probs(probs, samp)

    tau = rng.random((n, 2))
    tau /= tau.sum(axis=1, keepdims=True)
    phi = np.array([[0.10, 0.01], [0.01, 0.05]])
    adj = samp.adjY

    uniq, inv = np.unique(samp.degree, return_inverse=True)
    C = uniq.shape[0]
    class_idx = (inv[:, None] * C + inv[None, :]).astype(np.int64)
    ncls = C * C

    pop_uniq, pop_counts = np.unique(pop.degrees, return_counts=True)
    deg_f = pop_uniq.astype(np.float64)
    counts_f = pop_counts.astype(np.float64)
    uniforms = rng.random((sims, n))

    indptr, indices = adjacency_csr(pop.Y)
    eligible = np.flatnonzero(pop.Y.sum(axis=1) >= 1).astype(np.int64)
    recruit_cum = np.cumsum(rcfg.recruit_dist).astype(np.float64)
    budget = _kernels.trace_uniform_budget(n, rcfg.num_seeds)
    trace_u = rng.random(budget)

    def trace_args():
        return (indptr, indices, eligible, n, rcfg.num_seeds,
                rcfg.max_coupons, recruit_cum, trace_u, rcfg.reseed)

    return [
        ("ss_counts",
         lambda f: f(deg_f, counts_f, uniforms)),
        ("rds_trace",
         lambda f: f(*trace_args())),
        ("tau_net_terms",
         lambda f: f(tau, adj, phi, R, SS)),
        ("objective_net",
         lambda f: f(tau, adj, phi, R, SS)),
        ("phi_pair_stats",
         lambda f: f(tau, adj, R, class_idx, ncls, 0, 1)),
    ]


def kernel_pairs():
    """(name -> (jit_impl_or_None, fallback_impl))"""
    fall = {
        "ss_counts": _kernels._ss_counts_vec,
        "rds_trace": _kernels._rds_trace_impl,
        "tau_net_terms": _kernels._tau_net_vec,
        "objective_net": _kernels._obj_net_vec,
        "phi_pair_stats": _kernels._phi_stats_vec,
    }
    if not _kernels.HAS_NUMBA:
        return {k: (None, v) for k, v in fall.items()}
    jit = {
        "ss_counts": _kernels._ss_counts_nb,
        "rds_trace": _kernels._rds_trace_nb,
        "tau_net_terms": _kernels._tau_net_nb,
        "objective_net": _kernels._obj_net_nb,
        "phi_pair_stats": _kernels._phi_stats_nb,
    }
    return {k: (jit[k], fall[k]) for k in fall}


def check_agreement(name, call, a, b):
    ra = call(a)
    rb = call(b)
    if not isinstance(ra, tuple):
        ra, rb = (ra,), (rb,)
    for x, y in zip(ra, rb):
        if not np.allclose(np.asarray(x, dtype=np.float64),
                           np.asarray(y, dtype=np.float64),
                           rtol=1e-10, atol=1e-10):
            print(f"  WARNING: {name} outputs disagree between backends")
            return


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=300, help="sample size")
    ap.add_argument("--sims", type=int, default=400,
                    help="simulation rows for the sampling kernel")
    ap.add_argument("--repeat", type=int, default=5,
                    help="timed repetitions (best is reported)")
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args(argv)

    print(f"backend: {_kernels.backend()}  (n={args.n}, sims={args.sims}, "
          f"best of {args.repeat})")
    workloads = build_workloads(args.n, args.sims, args.seed)
    pairs = kernel_pairs()

    if _kernels.HAS_NUMBA:
        header = f"{'kernel':<16}{'numba (ms)':>12}{'numpy (ms)':>12}{'speedup':>9}"
    else:
        header = f"{'kernel':<16}{'numpy (ms)':>12}"
        print("numba unavailable; timing the fallback only")
    print(header)
    print("-" * len(header))
    for name, call in workloads:
        jit_fn, fall_fn = pairs[name]
        t_fall = best_of(lambda: call(fall_fn), args.repeat)
        if jit_fn is None:
            print(f"{name:<16}{t_fall * 1e3:>12.3f}")
            continue
        check_agreement(name, call, jit_fn, fall_fn)
        t_jit = best_of(lambda: call(jit_fn), args.repeat)
        print(f"{name:<16}{t_jit * 1e3:>12.3f}{t_fall * 1e3:>12.3f}"
              f"{t_fall / t_jit:>8.1f}x")


if __name__ == "__main__":
    main()
