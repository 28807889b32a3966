"""Command-line interface, run in-process via main(argv)."""

import json

import numpy as np
import pytest

from rdscluster import cli, fileio
from rdscluster.mixfit import FitConfig, fit

from conftest import make_forest_sample


def _run(capsys, *argv):
    rc = cli.main(list(argv))
    out, err = capsys.readouterr()
    return rc, out, err


def test_generate_writes_population(tmp_path, capsys):
    out = tmp_path / "pop"
    rc, stdout, _ = _run(
        capsys, "generate", "--case", "I", "--seed", "7", "--out", str(out)
    )
    assert rc == 0
    nodes = out / "nodes.csv"
    edges = out / "edges.csv"
    assert str(nodes) in stdout and str(edges) in stdout
    pop = fileio.read_population(nodes, edges)
    assert pop.n == 600
    assert set(np.unique(pop.true_labels)) == {0, 1}


def test_generate_is_byte_deterministic(tmp_path, capsys):
    a = tmp_path / "a"
    b = tmp_path / "b"
    _run(capsys, "generate", "--case", "II", "--seed", "3", "--out", str(a))
    _run(capsys, "generate", "--case", "II", "--seed", "3", "--out", str(b))
    assert (a / "nodes.csv").read_bytes() == (b / "nodes.csv").read_bytes()
    assert (a / "edges.csv").read_bytes() == (b / "edges.csv").read_bytes()
    c = tmp_path / "c"
    _run(capsys, "generate", "--case", "II", "--seed", "4", "--out", str(c))
    assert (a / "edges.csv").read_bytes() != (c / "edges.csv").read_bytes()


def test_generate_requires_out(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["generate", "--case", "I"])
    assert exc.value.code == 2
    _, err = capsys.readouterr()
    assert "requires --out" in err


def test_full_pipeline(tmp_path, capsys):
    pop_dir = tmp_path / "pop"
    rc, _, _ = _run(capsys, "generate", "--case", "I", "--seed", "13",
                    "--out", str(pop_dir))
    assert rc == 0

    samp_dir = tmp_path / "samp"
    rc, stdout, _ = _run(
        capsys, "sample",
        "--nodes", str(pop_dir / "nodes.csv"),
        "--edges", str(pop_dir / "edges.csv"),
        "--n-target", "80", "--num-seeds", "3",
        "--seed", "13", "--out", str(samp_dir),
    )
    assert rc == 0
    recruit = samp_dir / "recruit.csv"
    assert recruit.exists()
    samp = fileio.read_sample(recruit)
    assert samp.n == 80

    probs_dir = tmp_path / "probs"
    rc, _, _ = _run(
        capsys, "probs",
        "--recruit", str(recruit),
        "--n-assumed", "600", "--num-sims", "300", "--edge-sims", "80",
        "--num-seeds", "3", "--seed", "13", "--out", str(probs_dir),
    )
    assert rc == 0
    probs_path = probs_dir / "probs.json"
    probs, meta = fileio.read_probs(probs_path)
    assert meta["N_assumed"] == 600
    assert set(probs.node) == {int(d) for d in samp.degree}

    fit_dir = tmp_path / "fit"
    rc, _, _ = _run(
        capsys, "fit",
        "--recruit", str(recruit), "--probs", str(probs_path),
        "--k", "2", "--weighted", "--restarts", "2", "--max-iter", "60",
        "--init", "kmeans", "--seed", "13", "--out", str(fit_dir),
    )
    assert rc == 0
    result, cfg = fileio.read_result(fit_dir / "result.json")
    assert cfg.K == 2 and cfg.weighted
    assert result.labels.shape == (80,)

    rc, stdout, _ = _run(
        capsys, "eval",
        "--recruit", str(recruit),
        "--result", str(fit_dir / "result.json"),
        "--probs", str(probs_path),
    )
    assert rc == 0
    lines = dict(
        line.split(" ", 1) for line in stdout.strip().splitlines()
    )
    assert set(lines) == {"modularity", "nmi", "nmi_feature_x1",
                          "nmi_feature_x2"}
    for v in lines.values():
        float(v)


def test_fit_weighted_requires_probs_flag(tmp_path, capsys, rng):
    s = make_forest_sample(10, rng)
    recruit = tmp_path / "recruit.csv"
    fileio.write_sample(s, recruit)
    rc, _, err = _run(
        capsys, "fit", "--recruit", str(recruit), "--k", "2",
        "--weighted", "--out", str(tmp_path / "o"),
    )
    assert rc == 2
    assert "error: weighted mode requires --probs" in err


def test_fit_bad_k_exits_two(tmp_path, capsys, rng):
    s = make_forest_sample(10, rng)
    recruit = tmp_path / "recruit.csv"
    fileio.write_sample(s, recruit)
    rc, _, err = _run(
        capsys, "fit", "--recruit", str(recruit), "--k", "0",
        "--out", str(tmp_path / "o"),
    )
    assert rc == 2
    assert "error:" in err


def test_missing_input_exits_one(tmp_path, capsys):
    rc, _, err = _run(
        capsys, "probs", "--recruit", str(tmp_path / "nope.csv"),
        "--n-assumed", "100", "--out", str(tmp_path / "o"),
    )
    assert rc == 1
    assert "error:" in err


def test_eval_label_count_mismatch_exits_one(tmp_path, capsys, rng):
    s12 = make_forest_sample(12, rng)
    s8 = make_forest_sample(8, rng)
    r12 = tmp_path / "r12.csv"
    r8 = tmp_path / "r8.csv"
    fileio.write_sample(s12, r12)
    fileio.write_sample(s8, r8)
    res = fit(s12, None, FitConfig(K=2, restarts=1, max_iter=30, rng_seed=2))
    result_path = tmp_path / "result.json"
    fileio.write_result(res, result_path)
    rc, _, err = _run(
        capsys, "eval", "--recruit", str(r8), "--result", str(result_path)
    )
    assert rc == 1
    assert "12 labels but the sample has 8" in err


def test_sweep_grid(tmp_path, capsys, rng):
    s = make_forest_sample(25, rng)
    recruit = tmp_path / "recruit.csv"
    fileio.write_sample(s, recruit)
    out = tmp_path / "sweep"
    rc, stdout, _ = _run(
        capsys, "sweep", "--recruit", str(recruit), "--k", "2",
        "--grid", "0,0.025,0.05", "--restarts", "2", "--max-iter", "40",
        "--seed", "5", "--out", str(out),
    )
    assert rc == 0
    assert "suggestion: alpha=" in stdout
    report = fileio.read_sweep(out / "sweep.csv")
    assert list(report.alphas) == [0.0, 0.025, 0.05]


def test_bad_recruit_dist_exits_two(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main([
            "sample", "--nodes", "n.csv", "--edges", "e.csv",
            "--n-target", "5", "--recruit-dist", "a,b",
            "--out", str(tmp_path),
        ])
    assert exc.value.code == 2


def test_unknown_command_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2


def test_study_small_run(tmp_path, capsys):
    out = tmp_path / "study"
    rc, stdout, _ = _run(
        capsys, "study", "--case", "I", "--n", "40", "--reps", "2",
        "--models", "unweighted:1", "--num-sims", "100", "--edge-sims", "40",
        "--restarts", "2", "--max-iter", "40", "--seed", "9",
        "--out", str(out),
    )
    assert rc == 0
    rows = fileio.read_study_summary(out / "study_summary.csv")
    assert rows
    models = {r[0] for r in rows}
    assert len(models) == 1
    assert "unweighted" in models.pop()
    quantities = {r[1] for r in rows}
    assert "miscluster_rate" in quantities
    assert all(r[5] == 2 for r in rows)
