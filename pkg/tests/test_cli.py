import json

import numpy as np
import pytest

from scbmvar.cli import aggregate, apply_transforms, main
from scbmvar.simulate import TimeSeriesPanel
from scbmvar.spectral import cocluster_matrices, seasonal_matrices
from scbmvar.transition import TransitionSet


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def simulated(tmp_path):
    cfg = write(tmp_path / "sim.json", {"model": "pvar", "path": 1, "type": 1, "q": 24, "T": 400})
    out = tmp_path / "sim"
    assert main(["simulate", "--config", cfg, "--seed", "7", "--out", str(out)]) == 0
    return out


def test_simulate_byte_identical(tmp_path, simulated):
    cfg = write(tmp_path / "sim2.json", {"model": "pvar", "path": 1, "type": 1, "q": 24, "T": 400})
    out = tmp_path / "again"
    assert main(["simulate", "--config", cfg, "--seed", "7", "--out", str(out)]) == 0
    for name in ("panel.csv", "truth.json", "transitions.json", "specs.json"):
        assert (out / name).read_bytes() == (simulated / name).read_bytes()


def test_simulate_truth_is_cyclic(simulated):
    specs = json.loads((simulated / "specs.json").read_text())["seasons"]
    truth = json.loads((simulated / "truth.json").read_text())["boundaries"]
    s = len(specs)
    for m in range(s):
        assert specs[m - 1]["z"] == specs[m]["y"]
        assert truth[m]["labels"] == specs[m]["y"]
        assert min(truth[m]["labels"]) == 1


def test_invalid_path_id(tmp_path, capsys):
    cfg = write(tmp_path / "bad.json", {"model": "pvar", "path": 9})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "path" in capsys.readouterr().err


def test_analyze_alpha_zero_equals_unsmoothed(tmp_path, simulated):
    cfg = write(tmp_path / "an.json", {"input": str(simulated / "panel.csv"), "model": "pvar",
                                       "seasons": 4, "K": [2, 2, 2, 2], "seed": 4})
    out = tmp_path / "an"
    assert main(["analyze", "--config", cfg, "--alpha", "0", "--out", str(out)]) == 0
    path = json.loads((out / "community_path.json").read_text())
    est = TransitionSet.from_dict(json.loads((out / "estimate.json").read_text()))
    direct = cocluster_matrices(seasonal_matrices(est), "pvar", [2] * 4, [2] * 4, 0.0, np.random.default_rng(4))
    for b, lab in zip(path["boundaries"], direct.labels):
        assert b["labels"] == (lab + 1).tolist()
    ranks = json.loads((out / "ranks.json").read_text())
    assert ranks["configuration"] == [2] * 8 and ranks["alpha"] == 0.0
    for name in ("discrepancy.csv", "cocluster_counts.csv", "order.json"):
        assert (out / name).exists()


def test_analyze_cv_and_scree(tmp_path, simulated):
    cfg = write(tmp_path / "an.json", {"input": str(simulated / "panel.csv"), "seasons": 4,
                                       "transforms": ["center"]})
    out = tmp_path / "cv"
    assert main(["analyze", "--config", cfg, "--folds", "2", "--threshold", "0.3", "--out", str(out)]) == 0
    report = json.loads((out / "cv_report.json").read_text())
    assert len(report["grid"]) == 20 and report["selected_alpha"] in report["grid"]
    ranks = json.loads((out / "ranks.json").read_text())
    assert ranks["threshold"] == 0.3 and len(ranks["season_ranks"]) == 4


def test_constant_column_is_numerical_failure(tmp_path, capsys):
    # a constant series makes its daily, weekly and monthly regressors identical
    data = np.random.default_rng(0).standard_normal((200, 3))
    data[:, 2] = 5.0
    TimeSeriesPanel(data, labels=["a", "b", "steady"]).to_csv(tmp_path / "c.csv")
    cfg = write(tmp_path / "c.json", {"input": str(tmp_path / "c.csv"), "model": "vhar"})
    assert main(["estimate", "--config", cfg, "--out", str(tmp_path / "o")]) == 3
    assert "steady" in capsys.readouterr().err


def test_non_numeric_input(tmp_path, capsys):
    (tmp_path / "x.csv").write_text("a,b\n1,2\n3,zz\n")
    cfg = write(tmp_path / "x.json", {"input": str(tmp_path / "x.csv"), "model": "var"})
    assert main(["estimate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "'b'" in capsys.readouterr().err


def test_estimate_cluster_cv_commands(tmp_path, simulated):
    cfg = write(tmp_path / "e.json", {"input": str(simulated / "panel.csv"), "seasons": 4})
    assert main(["estimate", "--config", cfg, "--out", str(tmp_path / "e")]) == 0
    est = str(tmp_path / "e" / "estimate.json")
    ccfg = write(tmp_path / "c.json", {"transitions": est, "K": [2, 2, 2, 2]})
    assert main(["cluster", "--config", ccfg, "--alpha", "0.05", "--out", str(tmp_path / "c")]) == 0
    assert json.loads((tmp_path / "c" / "community_path.json").read_text())["kind"] == "pvar"
    assert main(["cv", "--config", ccfg, "--folds", "2", "--out", str(tmp_path / "v")]) == 0
    assert (tmp_path / "v" / "cv_report.json").exists()


def test_bench_command_resumable(tmp_path):
    cfg = write(tmp_path / "b.json", {"model": "pvar", "q": [12, 24], "T": 200, "replications": 1})
    out = tmp_path / "b"
    assert main(["bench", "--config", cfg, "--alpha", "0", "--out", str(out)]) == 0
    text = (out / "results.csv").read_text()
    lines = text.splitlines()
    assert lines[0] == "model,path,type,q,T,acc_cv,acc_0,ari_cv,ari_0,skipped"
    assert len(lines) == 3
    assert main(["bench", "--config", cfg, "--alpha", "0", "--out", str(out)]) == 0
    assert (out / "results.csv").read_text() == text
    again = tmp_path / "b2"
    assert main(["bench", "--config", cfg, "--alpha", "0", "--out", str(again)]) == 0
    assert (again / "results.csv").read_text() == text


def test_transforms():
    data = np.arange(1, 13, dtype=float).reshape(6, 2)
    np.testing.assert_array_equal(aggregate(data, 3), [[9, 12], [27, 30]])
    np.testing.assert_array_equal(aggregate(data, 3, mean=True), [[3, 4], [9, 10]])
    panel = TimeSeriesPanel(np.exp(np.arange(12.0))[:, None] * np.ones((1, 2)), season_count=4)
    out = apply_transforms(panel, [{"aggregate": 1}, "log", "diff"])
    np.testing.assert_allclose(out.data, 1.0)
    assert out.first_season == 2 and out.T == 11
    centered = apply_transforms(panel, ["center"])
    np.testing.assert_allclose(centered.data.mean(axis=0), 0.0, atol=1e-6)


def test_log_of_nonpositive_rejected(tmp_path, capsys):
    TimeSeriesPanel(np.array([[1.0, -1.0], [2.0, 3.0], [1.0, 2.0]]), labels=["p", "neg"]).to_csv(tmp_path / "n.csv")
    cfg = write(tmp_path / "n.json", {"input": str(tmp_path / "n.csv"), "model": "var", "transforms": ["log"]})
    assert main(["estimate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "neg" in capsys.readouterr().err
