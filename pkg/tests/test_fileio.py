"""On-disk formats: round-trips, 1-based translation, and parse errors."""

import numpy as np
import pytest

from rdscluster.evalmetrics import SweepReport, alpha_sweep
from rdscluster.fileio import (
    read_population,
    read_probs,
    read_result,
    read_sample,
    read_study_summary,
    read_sweep,
    write_population,
    write_probs,
    write_result,
    write_sample,
    write_study_summary,
    write_sweep,
)
from rdscluster.mixfit import FitConfig, fit
from rdscluster.netcore import SEED, ParseError, Population, RdsSample
from rdscluster.synth import SynthConfig, generate_population

from conftest import make_forest_sample, random_probs


def _small_pop(rng_seed=0):
    return generate_population(SynthConfig(
        N=20,
        block_sizes=(8, 12),
        phi=np.array([[0.3, 0.1], [0.1, 0.3]]),
        mu=np.array([-1.0, 1.0]),
        theta=np.array([[0.7, 0.3], [0.3, 0.7]]),
        rng_seed=rng_seed,
    ))


# ------------------------------------------------------------- population csv


def test_population_roundtrip(tmp_path):
    pop = _small_pop()
    nodes = tmp_path / "nodes.csv"
    edges = tmp_path / "edges.csv"
    write_population(pop, nodes, edges)
    back = read_population(nodes, edges)
    assert np.array_equal(back.Y, pop.Y)
    assert np.array_equal(back.x1, pop.x1)
    assert np.array_equal(back.x2, pop.x2)
    assert np.array_equal(back.true_labels, pop.true_labels)


def test_population_file_is_one_based(tmp_path):
    pop = _small_pop()
    nodes = tmp_path / "nodes.csv"
    edges = tmp_path / "edges.csv"
    write_population(pop, nodes, edges)
    lines = nodes.read_text().splitlines()
    assert lines[0] == "id,degree,x1,x2,cluster"
    first = lines[1].split(",")
    assert first[0] == "1"
    # x2 and cluster are stored 1-based
    assert int(first[3]) == int(pop.x2[0]) + 1
    assert int(first[4]) == int(pop.true_labels[0]) + 1
    for line in edges.read_text().splitlines()[1:]:
        a, b = map(int, line.split(","))
        assert 1 <= a < b <= 20


def test_unlabeled_population_roundtrip(tmp_path):
    pop = _small_pop()
    plain = Population(Y=pop.Y, x1=pop.x1, x2=pop.x2)
    nodes = tmp_path / "nodes.csv"
    edges = tmp_path / "edges.csv"
    write_population(plain, nodes, edges)
    assert nodes.read_text().splitlines()[0] == "id,degree,x1,x2"
    back = read_population(nodes, edges)
    assert back.true_labels is None


def test_population_parse_errors(tmp_path):
    nodes = tmp_path / "nodes.csv"
    edges = tmp_path / "edges.csv"
    edges.write_text("src,dst\n")

    nodes.write_text("ident,degree,x1,x2\n1,2,0.5,1\n")
    with pytest.raises(ParseError) as exc:
        read_population(nodes, edges)
    assert exc.value.line == 1 and exc.value.column == 1
    assert "expected header" in str(exc.value)

    nodes.write_text("id,degree,x1,x2\nfoo,2,0.5,1\n")
    with pytest.raises(ParseError, match="id must be an integer"):
        read_population(nodes, edges)

    nodes.write_text("id,degree,x1,x2\n1,2,abc,1\n")
    with pytest.raises(ParseError) as exc:
        read_population(nodes, edges)
    assert exc.value.line == 2 and exc.value.column == 3

    nodes.write_text("id,degree,x1,x2\n1,2,0.5\n")
    with pytest.raises(ParseError, match="expected 4 fields, got 3"):
        read_population(nodes, edges)

    nodes.write_text("id,degree,x1,x2\n1,2,0.5,0\n")
    with pytest.raises(ParseError, match="1-based"):
        read_population(nodes, edges)

    nodes.write_text("id,degree,x1,x2\n1,0,0.5,1\n2,0,0.5,1\n")
    edges.write_text("src,dst\n2,1\n")
    with pytest.raises(ParseError, match="src < dst"):
        read_population(nodes, edges)


# ------------------------------------------------------------------ recruit csv


def test_sample_roundtrip(tmp_path, rng):
    s = make_forest_sample(15, rng, num_seeds=3)
    path = tmp_path / "recruit.csv"
    write_sample(s, path)
    back = read_sample(path)
    assert back == s


def test_sample_file_uses_minus_one_for_seeds(tmp_path, rng):
    s = make_forest_sample(6, rng, num_seeds=2)
    path = tmp_path / "recruit.csv"
    write_sample(s, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "id,recruiter_id,wave,degree,x1,x2"
    assert lines[1].split(",")[1] == "-1"
    assert lines[2].split(",")[1] == "-1"


def test_sample_reseed_count_inferred(tmp_path):
    # seeds at positions 0,1 then a reseed at position 3
    s = RdsSample(
        node_ids=np.arange(5),
        recruiter=np.array([SEED, SEED, 0, SEED, 3]),
        wave=np.array([0, 0, 1, 0, 1]),
        degree=np.array([2, 1, 2, 1, 1]),
        x1=np.zeros(5),
        x2=np.zeros(5, dtype=np.int64),
        adjY=np.array([
            [0, 0, 1, 0, 0],
            [0, 0, 0, 0, 0],
            [1, 0, 0, 0, 0],
            [0, 0, 0, 0, 1],
            [0, 0, 0, 1, 0],
        ], dtype=np.int8),
        reseed_count=1,
    )
    path = tmp_path / "recruit.csv"
    write_sample(s, path)
    back = read_sample(path)
    assert back == s
    assert back.reseed_count == 1


def test_sample_unknown_recruiter_rejected(tmp_path):
    path = tmp_path / "recruit.csv"
    path.write_text(
        "id,recruiter_id,wave,degree,x1,x2\n"
        "1,-1,0,2,0.0,1\n"
        "2,9,1,2,0.0,1\n"
    )
    with pytest.raises(ParseError, match="not a sampled id"):
        read_sample(path)


# ------------------------------------------------------------------ probs json


def test_probs_roundtrip(tmp_path, rng):
    s = make_forest_sample(10, rng)
    probs = random_probs(s, rng)
    path = tmp_path / "probs.json"
    write_probs(probs, path, config={"num_sims": 12})
    back, cfg = read_probs(path)
    assert back == probs
    assert cfg == {"num_sims": 12}


def test_probs_missing_key(tmp_path):
    path = tmp_path / "probs.json"
    path.write_text('{"node": [[1, 0.5]], "pair": []}\n')
    with pytest.raises(ParseError, match="missing key 'edge'"):
        read_probs(path)


def test_probs_bad_json_reports_position(tmp_path):
    path = tmp_path / "probs.json"
    path.write_text('{"node": [[1, 0.5]\n')
    with pytest.raises(ParseError) as exc:
        read_probs(path)
    assert exc.value.line >= 1


# ----------------------------------------------------------------- result json


def test_result_roundtrip(tmp_path, rng):
    s = make_forest_sample(20, rng)
    cfg = FitConfig(K=2, restarts=2, max_iter=40, rng_seed=6)
    res = fit(s, None, cfg)
    path = tmp_path / "result.json"
    write_result(res, path, config=cfg)
    back, cfg_back = read_result(path)
    assert np.array_equal(back.labels, res.labels)
    assert np.allclose(back.tau.tau, res.tau.tau)
    assert np.allclose(back.params.mu, res.params.mu)
    assert np.allclose(back.params.phi, res.params.phi)
    assert np.allclose(back.objective_trace, res.objective_trace)
    assert back.converged == res.converged
    assert back.restart_index == -1
    assert cfg_back == cfg


def test_result_labels_one_based_on_disk(tmp_path, rng):
    s = make_forest_sample(12, rng)
    res = fit(s, None, FitConfig(K=2, restarts=1, max_iter=30, rng_seed=1))
    path = tmp_path / "result.json"
    write_result(res, path)
    import json

    doc = json.loads(path.read_text())
    assert min(doc["labels"]) >= 1
    assert set(doc["params"]) == {"lambda", "mu", "sigma", "theta", "phi"}


def test_result_missing_key(tmp_path):
    path = tmp_path / "result.json"
    path.write_text('{"labels": [1]}\n')
    with pytest.raises(ParseError, match="missing key"):
        read_result(path)


# ------------------------------------------------------------------- sweep csv


def test_sweep_roundtrip_with_nan_gaps(tmp_path):
    rep = SweepReport(
        alphas=np.array([0.0, 0.1, 0.4]),
        modularity=np.array([0.2, np.nan, 0.5]),
        nmi=np.array([0.8, np.nan, 0.75]),
        per_feature_nmi=np.array([[0.9, 0.7], [np.nan, np.nan], [0.8, 0.7]]),
        feature_names=("x1", "x2"),
        suggested_alpha=0.4,
        suggestion="suggestion: alpha=0.4 (test)",
    )
    path = tmp_path / "sweep.csv"
    write_sweep(rep, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "alpha,modularity,nmi,nmi_feature_x1,nmi_feature_x2"
    # NaN cells are written empty
    assert lines[2].split(",")[1:] == ["", "", "", ""]
    back = read_sweep(path)
    assert np.array_equal(back.alphas, rep.alphas)
    assert np.array_equal(np.isnan(back.modularity), np.isnan(rep.modularity))
    assert back.modularity[0] == rep.modularity[0]
    assert back.feature_names == ("x1", "x2")
    # the knee pick is recomputed from the curves on read: the NMI floor
    # 0.8 - 0.1 * (0.8 - 0.75) keeps only alpha=0
    assert back.suggested_alpha == 0.0


def test_sweep_roundtrip_from_real_run(tmp_path, rng):
    s = make_forest_sample(25, rng)
    rep = alpha_sweep(
        s, None, FitConfig(K=2, restarts=2, max_iter=40, rng_seed=3),
        alpha_grid=[0.0, 0.1, 0.4],
    )
    path = tmp_path / "sweep.csv"
    write_sweep(rep, path)
    back = read_sweep(path)
    assert np.allclose(back.modularity, rep.modularity, equal_nan=True)
    assert np.allclose(back.nmi, rep.nmi, equal_nan=True)
    assert back.suggested_alpha == rep.suggested_alpha


def test_sweep_bad_header(tmp_path):
    path = tmp_path / "sweep.csv"
    path.write_text("alpha,modularity\n0.0,0.5\n")
    with pytest.raises(ParseError, match="unexpected header"):
        read_sweep(path)


# ----------------------------------------------------------- study summary csv


def test_study_summary_roundtrip(tmp_path):
    rows = [
        ("weighted_alpha_1", "lambda_1", 0.34, 0.09, 0.007, 100),
        ("unweighted", "lambda_1", 0.17, 0.06, None, 100),
        ("weighted_alpha_1", "miscluster_rate", 0.06, None, None, 1),
    ]
    path = tmp_path / "study_summary.csv"
    write_study_summary(rows, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "model,quantity,mean,sd,mse,reps"
    assert lines[2].split(",")[4] == ""
    back = read_study_summary(path)
    assert back == rows


def test_study_summary_bad_mean(tmp_path):
    path = tmp_path / "study_summary.csv"
    path.write_text("model,quantity,mean,sd,mse,reps\nm,q,xyz,,,3\n")
    with pytest.raises(ParseError, match="mean must be a number"):
        read_study_summary(path)
