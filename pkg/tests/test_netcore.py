"""Container validation and probability expansion."""

import numpy as np
import pytest

from rdscluster.netcore import (
    PHI_MAX,
    SEED,
    SIGMA_FLOOR,
    DegreeLookupError,
    InclusionProbs,
    ModelParams,
    ParseError,
    Population,
    RdsSample,
    Responsibilities,
    expand_probs,
)

from conftest import make_forest_sample, seeds_only_sample


# ---------------------------------------------------------------- Population


def test_population_basic_props():
    Y = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    pop = Population(Y=Y, x1=np.zeros(3), x2=np.array([0, 1, 1]))
    assert pop.n == 3
    assert list(pop.degrees) == [1, 2, 1]
    assert pop.num_categories == 2


def test_population_rejects_asymmetric():
    Y = np.array([[0, 1], [0, 0]])
    with pytest.raises(ValueError, match="symmetric"):
        Population(Y=Y, x1=np.zeros(2), x2=np.zeros(2, dtype=int))


def test_population_rejects_self_loops():
    Y = np.eye(2, dtype=int)
    with pytest.raises(ValueError, match="diagonal"):
        Population(Y=Y, x1=np.zeros(2), x2=np.zeros(2, dtype=int))


def test_population_rejects_nonbinary_adjacency():
    Y = np.array([[0, 2], [2, 0]])
    with pytest.raises(ValueError, match="0 or 1"):
        Population(Y=Y, x1=np.zeros(2), x2=np.zeros(2, dtype=int))


def test_population_category_count_floor():
    # all-zero categorical column still implies a binary feature
    Y = np.zeros((2, 2), dtype=int)
    pop = Population(Y=Y, x1=np.zeros(2), x2=np.zeros(2, dtype=int))
    assert pop.num_categories == 2


def test_population_category_out_of_range():
    Y = np.zeros((2, 2), dtype=int)
    with pytest.raises(ValueError, match="out of range"):
        Population(Y=Y, x1=np.zeros(2), x2=np.array([0, 3]), num_categories=2)


# ----------------------------------------------------------------- RdsSample


def test_sample_builder_is_valid(rng):
    s = make_forest_sample(40, rng, num_seeds=3)
    assert s.n == 40
    assert (s.wave[s.recruiter == SEED] == 0).all()
    # ties recorded exactly once per non-seed
    assert s.adjY.sum() == 2 * (s.recruiter != SEED).sum()


def test_sample_rejects_recruiter_after_recruit(rng):
    s = make_forest_sample(6, rng)
    recruiter = s.recruiter.copy()
    recruiter[1] = 5
    with pytest.raises(ValueError, match="precede"):
        RdsSample(
            node_ids=s.node_ids,
            recruiter=recruiter,
            wave=s.wave,
            degree=s.degree,
            x1=s.x1,
            x2=s.x2,
            adjY=s.adjY,
        )


def test_sample_rejects_bad_wave(rng):
    s = make_forest_sample(6, rng)
    wave = s.wave.copy()
    nonseed = np.flatnonzero(s.recruiter != SEED)[0]
    wave[nonseed] += 1
    with pytest.raises(ValueError, match="wave"):
        RdsSample(
            node_ids=s.node_ids,
            recruiter=s.recruiter,
            wave=wave,
            degree=s.degree,
            x1=s.x1,
            x2=s.x2,
            adjY=s.adjY,
        )


def test_sample_rejects_extra_ties(rng):
    s = make_forest_sample(6, rng)
    adjY = s.adjY.copy()
    # add a tie that nobody recruited along
    i, j = 0, 5
    assert adjY[i, j] == 0
    adjY[i, j] = adjY[j, i] = 1
    with pytest.raises(ValueError, match="exactly the recruitment ties"):
        RdsSample(
            node_ids=s.node_ids,
            recruiter=s.recruiter,
            wave=s.wave,
            degree=s.degree + 1,
            x1=s.x1,
            x2=s.x2,
            adjY=adjY,
        )


def test_sample_rejects_degree_below_observed(rng):
    s = make_forest_sample(8, rng, num_seeds=1)
    observed = s.adjY.sum(axis=1)
    degree = observed.copy()
    degree[np.argmax(observed)] -= 1
    degree[degree < 1] = 1
    with pytest.raises(ValueError, match="below observed"):
        RdsSample(
            node_ids=s.node_ids,
            recruiter=s.recruiter,
            wave=s.wave,
            degree=degree,
            x1=s.x1,
            x2=s.x2,
            adjY=s.adjY,
        )


def test_sample_rejects_duplicate_ids(rng):
    s = make_forest_sample(5, rng)
    ids = s.node_ids.copy()
    ids[1] = ids[0]
    with pytest.raises(ValueError, match="distinct"):
        RdsSample(
            node_ids=ids,
            recruiter=s.recruiter,
            wave=s.wave,
            degree=s.degree,
            x1=s.x1,
            x2=s.x2,
            adjY=s.adjY,
        )


# ------------------------------------------------------------ InclusionProbs


def test_probs_canonicalizes_pair_keys():
    p = InclusionProbs(
        node={1: 0.5, 3: 0.9},
        pair={(3, 1): 0.4, (1, 1): 0.2, (3, 3): 0.8},
        edge={(1, 3): 0.1, (1, 1): 0.2, (3, 3): 0.5},
    )
    assert (1, 3) in p.pair and (3, 1) not in p.pair
    assert p.pair[(1, 3)] == 0.4
    assert p.edge[(1, 3)] == 0.1


def test_probs_rejects_edge_above_pair():
    with pytest.raises(ValueError, match="exceeds pair"):
        InclusionProbs(node={1: 0.5}, pair={(1, 1): 0.3}, edge={(1, 1): 0.4})


def test_probs_rejects_edge_without_pair():
    with pytest.raises(ValueError, match="no matching pair"):
        InclusionProbs(node={1: 0.5}, pair={}, edge={(1, 1): 0.2})


def test_probs_rejects_out_of_range():
    with pytest.raises(ValueError, match=r"outside \(0,1\]"):
        InclusionProbs(node={2: 1.5})
    with pytest.raises(ValueError, match=r"outside \(0,1\]"):
        InclusionProbs(node={2: 0.0})


def test_probs_rejects_conflicting_duplicates():
    with pytest.raises(ValueError, match="conflicting"):
        InclusionProbs(node={1: 0.5}, pair={(1, 2): 0.3, (2, 1): 0.4})


# -------------------------------------------------------------- expand_probs


def test_expand_probs_matrices():
    s = seeds_only_sample([2, 3, 2], [0.0, 0.0, 0.0], [0, 1, 0])
    p = InclusionProbs(
        node={2: 0.5, 3: 0.7},
        pair={(2, 2): 0.3, (2, 3): 0.4, (3, 3): 0.6},
        edge={(2, 2): 0.1, (2, 3): 0.2, (3, 3): 0.3},
    )
    S, SS, R = expand_probs(p, s)
    assert np.allclose(S, [0.5, 0.7, 0.5])
    # off-diagonal entries come from the (sorted) degree pair
    assert SS[0, 1] == SS[1, 0] == 0.4
    assert SS[0, 2] == 0.3
    assert R[0, 1] == 0.2
    assert R[0, 2] == 0.1
    # diagonals are forced to one so self terms never divide by small numbers
    assert (np.diag(SS) == 1.0).all()
    assert (np.diag(R) == 1.0).all()


def test_expand_probs_missing_degree_named():
    s = seeds_only_sample([7], [0.0], [0])
    with pytest.raises(DegreeLookupError, match="degree 7 missing"):
        expand_probs(InclusionProbs(node={2: 0.5}), s)


def test_expand_probs_missing_pair_named():
    s = seeds_only_sample([1, 3], [0.0, 0.0], [0, 1])
    p = InclusionProbs(
        node={1: 0.5, 3: 0.6},
        pair={(1, 1): 0.2, (3, 3): 0.3},
        edge={(1, 1): 0.1, (3, 3): 0.2},
    )
    with pytest.raises(DegreeLookupError, match=r"\(1, 3\) missing from pair"):
        expand_probs(p, s)


# --------------------------------------------------------------- ModelParams


def test_params_sigma_floor_and_phi_clamp():
    p = ModelParams(
        lam=np.array([0.5, 0.5]),
        mu=np.zeros(2),
        sigma=np.array([1.0, 1e-12]),
        theta=np.array([[0.5, 0.5], [0.5, 0.5]]),
        phi=np.array([[1.0, 0.2], [0.2, 0.0]]),
    )
    assert p.sigma[1] == SIGMA_FLOOR
    assert p.phi[0, 0] == PHI_MAX
    assert p.phi[1, 1] > 0.0


def test_params_rejects_bad_simplex():
    with pytest.raises(ValueError, match="sum to 1"):
        ModelParams(
            lam=np.array([0.6, 0.6]),
            mu=np.zeros(2),
            sigma=np.ones(2),
            theta=np.full((2, 2), 0.5),
            phi=np.full((2, 2), 0.1),
        )


def test_params_rejects_asymmetric_phi():
    with pytest.raises(ValueError, match="symmetric"):
        ModelParams(
            lam=np.array([0.5, 0.5]),
            mu=np.zeros(2),
            sigma=np.ones(2),
            theta=np.full((2, 2), 0.5),
            phi=np.array([[0.1, 0.2], [0.3, 0.1]]),
        )


def test_params_rejects_bad_theta_columns():
    with pytest.raises(ValueError, match="columns must sum"):
        ModelParams(
            lam=np.array([0.5, 0.5]),
            mu=np.zeros(2),
            sigma=np.ones(2),
            theta=np.array([[0.9, 0.5], [0.3, 0.5]]),
            phi=np.full((2, 2), 0.1),
        )


# ---------------------------------------------------------- Responsibilities


def test_responsibilities_rows_and_labels():
    tau = np.array([[0.7, 0.3], [0.5, 0.5], [0.1, 0.9]])
    r = Responsibilities(tau=tau)
    # exact tie keeps the lower cluster index
    assert list(r.labels()) == [0, 0, 1]


def test_responsibilities_rejects_bad_rows():
    with pytest.raises(ValueError, match="sum to 1"):
        Responsibilities(tau=np.array([[0.7, 0.7]]))
    with pytest.raises(ValueError, match="floor"):
        Responsibilities(tau=np.array([[1.0, 0.0]]))


# ----------------------------------------------------------------- ParseError


def test_parse_error_formats_location():
    err = ParseError("data/nodes.csv", 3, 2, "expected an integer")
    assert str(err) == "data/nodes.csv:3:2: expected an integer"
