"""Shared data model: populations, RDS samples, inclusion probabilities,
mixture parameters, and responsibilities.

Every other module depends only on the types here.  All types validate on
construction, snapshot their array inputs, and mark them read-only, so
instances are safe to share across parallel workers.

Indexing convention: node ids, cluster labels, and categorical feature values
are 0-based in memory.  The file formats use 1-based ids and categories; the
readers and writers in `fileio` translate.
"""

from dataclasses import dataclass, field

import numpy as np

# numerical floors and clamps applied throughout the fitter
SIGMA_FLOOR = 1e-4
TAU_FLOOR = 1e-10
PHI_MIN = 1e-8
PHI_MAX = 1.0 - 1e-8

# recruiter sentinel for seed rows
SEED = -1


class RdsClusterError(Exception):
    """Base class for this package's errors."""


class DegreeLookupError(RdsClusterError, KeyError):
    """A degree (or degree pair) has no entry in an inclusion-probability map."""


class UndefinedMetricError(RdsClusterError):
    """A metric is undefined for the given input (e.g. modularity with no edges)."""


class NumericalDomainError(RdsClusterError):
    """An objective term left its valid numerical domain and could not be clamped."""


class FitCollapseError(RdsClusterError):
    """Every restart of a fit collapsed a cluster; try a smaller K."""


class OracleSizeError(RdsClusterError):
    """An exact-enumeration oracle was asked for a problem too large to enumerate."""


class ParseError(RdsClusterError):
    """A data file failed to parse; carries file, line, and column context."""

    def __init__(self, path, line, column, message):
        super().__init__(f"{path}:{line}:{column}: {message}")
        self.path = str(path)
        self.line = line
        self.column = column


def _freeze(arr):
    arr = np.array(arr)  # snapshot: constructor input stays caller-owned
    arr.flags.writeable = False
    return arr


@dataclass(eq=False)
class Population:
    """Full attributed network.

    Y : (N, N) symmetric 0/1 adjacency, zero diagonal.
    x1 : (N,) continuous node feature.
    x2 : (N,) categorical node feature, values in 0..M-1.
    true_labels : optional (N,) cluster assignment in 0..K-1.
    num_categories : M; inferred as max(x2)+1 when left at 0.
    """

    Y: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    true_labels: np.ndarray | None = None
    num_categories: int = 0

    def __post_init__(self):
        self.Y = _freeze(np.asarray(self.Y, dtype=np.int8))
        self.x1 = _freeze(np.asarray(self.x1, dtype=np.float64))
        self.x2 = _freeze(np.asarray(self.x2, dtype=np.int64))
        if self.true_labels is not None:
            self.true_labels = _freeze(np.asarray(self.true_labels, dtype=np.int64))
        n = self.Y.shape[0]
        if self.Y.ndim != 2 or self.Y.shape != (n, n):
            raise ValueError("adjacency must be square")
        if n < 1:
            raise ValueError("population must contain at least one node")
        if self.x1.shape != (n,) or self.x2.shape != (n,):
            raise ValueError("feature vectors must match the node count")
        if not np.array_equal(self.Y, self.Y.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(self.Y) != 0):
            raise ValueError("adjacency diagonal must be zero")
        if not np.all((self.Y == 0) | (self.Y == 1)):
            raise ValueError("adjacency entries must be 0 or 1")
        if not np.all(np.isfinite(self.x1)):
            raise ValueError("x1 must be finite")
        if np.any(self.x2 < 0):
            raise ValueError("x2 categories must be nonnegative")
        if self.num_categories == 0:
            self.num_categories = max(int(self.x2.max()) + 1, 2)
        if self.num_categories < 2:
            raise ValueError("categorical feature needs at least 2 categories")
        if np.any(self.x2 >= self.num_categories):
            raise ValueError("x2 category out of range")
        if self.true_labels is not None:
            if self.true_labels.shape != (n,):
                raise ValueError("true_labels must match the node count")
            if np.any(self.true_labels < 0):
                raise ValueError("true_labels must be nonnegative")

    @property
    def n(self):
        return self.Y.shape[0]

    @property
    def degrees(self):
        return self.Y.sum(axis=1, dtype=np.int64)

    def __eq__(self, other):
        if not isinstance(other, Population):
            return NotImplemented
        same_labels = (
            (self.true_labels is None and other.true_labels is None)
            or (
                self.true_labels is not None
                and other.true_labels is not None
                and np.array_equal(self.true_labels, other.true_labels)
            )
        )
        return (
            np.array_equal(self.Y, other.Y)
            and np.array_equal(self.x1, other.x1)
            and np.array_equal(self.x2, other.x2)
            and self.num_categories == other.num_categories
            and same_labels
        )


@dataclass(eq=False)
class RdsSample:
    """A traced RDS sample: a forest of recruitment trees plus node features.

    Rows are in recruitment order, so a recruiter always precedes its
    recruits.  `recruiter[i]` is the sample index of the recruiting node, or
    SEED (-1) for seeds.  `degree` holds reported population degrees.  `adjY`
    contains exactly the recruiter-recruit ties (the observed network).
    """

    node_ids: np.ndarray
    recruiter: np.ndarray
    wave: np.ndarray
    degree: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    adjY: np.ndarray
    reseed_count: int = 0
    partial: bool = False
    num_categories: int = 0

    def __post_init__(self):
        self.node_ids = _freeze(np.asarray(self.node_ids, dtype=np.int64))
        self.recruiter = _freeze(np.asarray(self.recruiter, dtype=np.int64))
        self.wave = _freeze(np.asarray(self.wave, dtype=np.int64))
        self.degree = _freeze(np.asarray(self.degree, dtype=np.int64))
        self.x1 = _freeze(np.asarray(self.x1, dtype=np.float64))
        self.x2 = _freeze(np.asarray(self.x2, dtype=np.int64))
        self.adjY = _freeze(np.asarray(self.adjY, dtype=np.int8))
        n = self.node_ids.shape[0]
        if n < 1:
            raise ValueError("sample must contain at least one node")
        for name in ("recruiter", "wave", "degree", "x1", "x2"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"{name} must have length {n}")
        if self.adjY.shape != (n, n):
            raise ValueError("adjY must be n x n")
        if len(np.unique(self.node_ids)) != n:
            raise ValueError("node_ids must be distinct")
        if not np.array_equal(self.adjY, self.adjY.T):
            raise ValueError("adjY must be symmetric")
        if np.any(np.diag(self.adjY) != 0):
            raise ValueError("adjY diagonal must be zero")
        if not np.all((self.adjY == 0) | (self.adjY == 1)):
            raise ValueError("adjY entries must be 0 or 1")
        seeds = self.recruiter == SEED
        if not np.all(self.wave[seeds] == 0):
            raise ValueError("seeds must be at wave 0")
        nonseed = np.flatnonzero(~seeds)
        r = self.recruiter[nonseed]
        if np.any((r < 0) | (r >= n)):
            raise ValueError("recruiter index out of range")
        if np.any(r >= nonseed):
            raise ValueError("a recruiter must precede its recruit")
        if not np.all(self.wave[nonseed] == self.wave[r] + 1):
            raise ValueError("wave must increase by one along recruitment ties")
        if np.any(self.adjY[nonseed, r] != 1):
            raise ValueError("every recruitment tie must appear in adjY")
        if int(self.adjY.sum()) != 2 * len(nonseed):
            raise ValueError("adjY must contain exactly the recruitment ties")
        if np.any(self.degree < 1):
            raise ValueError("reported degrees must be positive")
        if np.any(self.degree < self.adjY.sum(axis=1)):
            raise ValueError("reported degree below observed degree")
        if np.any(self.x2 < 0):
            raise ValueError("x2 categories must be nonnegative")
        if self.num_categories == 0:
            self.num_categories = max(int(self.x2.max()) + 1, 2)
        if np.any(self.x2 >= self.num_categories):
            raise ValueError("x2 category out of range")

    @property
    def n(self):
        return self.node_ids.shape[0]

    def __eq__(self, other):
        if not isinstance(other, RdsSample):
            return NotImplemented
        return (
            np.array_equal(self.node_ids, other.node_ids)
            and np.array_equal(self.recruiter, other.recruiter)
            and np.array_equal(self.wave, other.wave)
            and np.array_equal(self.degree, other.degree)
            and np.array_equal(self.x1, other.x1)
            and np.array_equal(self.x2, other.x2)
            and np.array_equal(self.adjY, other.adjY)
        )


def _pair_key(k, h):
    k = int(k)
    h = int(h)
    return (k, h) if k <= h else (h, k)


@dataclass(eq=False)
class InclusionProbs:
    """Sampling probabilities keyed by degree.

    node : degree -> probability the node enters the sample (S).
    pair : (degree, degree) -> probability both nodes enter the sample (SS).
    edge : (degree, degree) -> probability an existing edge between sampled
           nodes is observed as a recruitment tie (R).

    Pair keys are unordered; they are stored canonically as (min, max).
    Construction rejects R > SS, since observing an edge requires sampling
    both of its ends.
    """

    node: dict
    pair: dict = field(default_factory=dict)
    edge: dict = field(default_factory=dict)

    def __post_init__(self):
        self.node = {int(k): float(v) for k, v in self.node.items()}
        self.pair = self._canonical(self.pair, "pair")
        self.edge = self._canonical(self.edge, "edge")
        for d, v in self.node.items():
            if d < 1:
                raise ValueError(f"degree {d} must be positive")
            if not 0.0 < v <= 1.0:
                raise ValueError(f"node probability for degree {d} outside (0,1]")
        for key, v in self.edge.items():
            if key not in self.pair:
                raise ValueError(f"edge pair {key} has no matching pair probability")
            if v > self.pair[key]:
                raise ValueError(
                    f"edge probability exceeds pair probability at {key}"
                )

    @staticmethod
    def _canonical(mapping, what):
        out = {}
        for key, v in mapping.items():
            k, h = key
            ck = _pair_key(k, h)
            v = float(v)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{what} probability for {ck} outside (0,1]")
            if ck in out and out[ck] != v:
                raise ValueError(f"conflicting {what} values for {ck}")
            out[ck] = v
        return out

    def __eq__(self, other):
        if not isinstance(other, InclusionProbs):
            return NotImplemented
        return (
            self.node == other.node
            and self.pair == other.pair
            and self.edge == other.edge
        )


@dataclass(eq=False)
class ModelParams:
    """Mixture parameters for K clusters.

    lam : (K,) cluster weights on the simplex.
    mu, sigma : (K,) Gaussian location/scale of the continuous feature.
    theta : (M, K) column-stochastic categorical-feature table.
    phi : (K, K) symmetric within/between-cluster tie probabilities,
          clamped into [PHI_MIN, PHI_MAX] at construction.
    """

    lam: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    theta: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=np.float64)
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        self.theta = np.asarray(self.theta, dtype=np.float64)
        self.phi = np.asarray(self.phi, dtype=np.float64)
        K = self.lam.shape[0]
        if K < 1:
            raise ValueError("need at least one cluster")
        if self.mu.shape != (K,) or self.sigma.shape != (K,):
            raise ValueError("mu and sigma must have length K")
        if self.theta.ndim != 2 or self.theta.shape[1] != K:
            raise ValueError("theta must be M x K")
        if self.theta.shape[0] < 2:
            raise ValueError("theta needs at least 2 categories")
        if self.phi.shape != (K, K):
            raise ValueError("phi must be K x K")
        if abs(self.lam.sum() - 1.0) > 1e-12:
            raise ValueError("cluster weights must sum to 1")
        if np.any(self.lam < 0):
            raise ValueError("cluster weights must be nonnegative")
        if not np.all(np.isfinite(self.mu)):
            raise ValueError("mu must be finite")
        if np.any(self.sigma <= 0):
            raise ValueError("sigma must be positive")
        if np.any(np.abs(self.theta.sum(axis=0) - 1.0) > 1e-12):
            raise ValueError("theta columns must sum to 1")
        if np.any(self.theta < 0):
            raise ValueError("theta entries must be nonnegative")
        if not np.array_equal(self.phi, self.phi.T):
            raise ValueError("phi must be symmetric")
        self.sigma = np.maximum(self.sigma, SIGMA_FLOOR)
        self.phi = np.clip(self.phi, PHI_MIN, PHI_MAX)
        for name in ("lam", "mu", "sigma", "theta", "phi"):
            setattr(self, name, _freeze(getattr(self, name)))

    @property
    def K(self):
        return self.lam.shape[0]

    @property
    def M(self):
        return self.theta.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ModelParams):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("lam", "mu", "sigma", "theta", "phi")
        )


@dataclass(eq=False)
class Responsibilities:
    """Per-node soft cluster memberships: (n, K) rows on the simplex."""

    tau: np.ndarray

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=np.float64)
        if self.tau.ndim != 2:
            raise ValueError("tau must be a 2-d array")
        if np.any(self.tau < TAU_FLOOR):
            raise ValueError("tau entries must stay above the floor")
        if np.any(np.abs(self.tau.sum(axis=1) - 1.0) > 1e-10):
            raise ValueError("tau rows must sum to 1")
        self.tau = _freeze(self.tau)

    @property
    def n(self):
        return self.tau.shape[0]

    @property
    def K(self):
        return self.tau.shape[1]

    def labels(self):
        """Hard assignment: per-row argmax (lowest index wins ties)."""
        return np.argmax(self.tau, axis=1)

    def __eq__(self, other):
        if not isinstance(other, Responsibilities):
            return NotImplemented
        return np.array_equal(self.tau, other.tau)


def expand_probs(probs, sample):
    """Expand degree-keyed probabilities to per-node and per-pair arrays.

    Returns (S, SS, R): S[i] for each sampled node, and symmetric (n, n)
    matrices for pair and edge probabilities, keyed through the sample's
    reported degrees.  Diagonals of SS and R are set to 1 and carry no
    meaning (all uses are over i != j).

    Raises DegreeLookupError naming the degree (or pair) on a missing key.
    """
    deg = sample.degree
    uniq, inv = np.unique(deg, return_inverse=True)
    svals = np.empty(len(uniq))
    for c, d in enumerate(uniq):
        d = int(d)
        if d not in probs.node:
            raise DegreeLookupError(f"degree {d} missing from node probabilities")
        svals[c] = probs.node[d]
    S = svals[inv]

    C = len(uniq)
    ss_cls = np.empty((C, C))
    r_cls = np.empty((C, C))
    for a in range(C):
        for b in range(C):
            key = _pair_key(uniq[a], uniq[b])
            if key not in probs.pair:
                raise DegreeLookupError(
                    f"degree pair {key} missing from pair probabilities"
                )
            if key not in probs.edge:
                raise DegreeLookupError(
                    f"degree pair {key} missing from edge probabilities"
                )
            ss_cls[a, b] = probs.pair[key]
            r_cls[a, b] = probs.edge[key]
    SS = ss_cls[np.ix_(inv, inv)]
    R = r_cls[np.ix_(inv, inv)]
    np.fill_diagonal(SS, 1.0)
    np.fill_diagonal(R, 1.0)
    return S, SS, R
