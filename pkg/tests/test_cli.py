import csv
import json

import numpy as np
import pytest

from lantk import io
from lantk.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, main


def _run(tmp_path, command, cfg=None, *extra, name="out"):
    out = tmp_path / name
    args = [command, "--out", str(out), *extra]
    if cfg is not None:
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(cfg))
        args += ["--config", str(p)]
    return main(args), out


def _csv(path, X, labels):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{k}" for k in range(X.shape[1])] + ["label"])
        for x, lab in zip(X, labels):
            w.writerow(list(x) + [lab])
    return str(path)


def test_kernel_from_csv_with_sidecar(tmp_path, rng):
    X = rng.standard_normal((10, 3))
    train = _csv(tmp_path / "train.csv", X, ["cat", "dog"] * 5)
    code, out = _run(tmp_path, "kernel", {"task": "kernel", "data": {"train": train}})
    assert code == EXIT_OK
    K = io.read_matrix(out / "kernel.lkm")
    assert K.shape == (10, 10) and io.read_meta(out / "kernel.lkm")["kind"] == "agnostic"
    assert (out / "config.json").read_text() == (tmp_path / "out.json").read_text()


def test_hr_at_zero_lambda_is_byte_identical(tmp_path):
    data = {"generator": "two_clusters", "d": 4}
    c1, a = _run(tmp_path, "kernel", {"task": "kernel", "data": data, "params": {"n": 12}}, name="a")
    c2, b = _run(tmp_path, "kernel", {"task": "kernel", "data": data, "params": {"n": 12},
                                      "kernel": {"kind": "hr", "estimator": "fjlt_v1", "lam": 0.0}}, name="b")
    assert c1 == c2 == EXIT_OK
    assert (a / "kernel.lkm").read_bytes() == (b / "kernel.lkm").read_bytes()


def test_hr_kernel_with_estimator(tmp_path):
    code, out = _run(tmp_path, "kernel", {"task": "kernel", "params": {"n": 12},
                                          "kernel": {"kind": "hr", "estimator": "kr_v1", "lam": 0.1}})
    assert code == EXIT_OK
    assert io.read_meta(out / "kernel.lkm")["estimator"] == "kr_v1"


def test_nth_guardrail(tmp_path, capsys):
    code, _ = _run(tmp_path, "kernel", {"task": "kernel", "params": {"n": 100}, "kernel": {"kind": "nth"}})
    assert code == EXIT_VALIDATION
    assert "O(n^4)" in capsys.readouterr().err


def test_nth_small_grid(tmp_path):
    code, out = _run(tmp_path, "kernel", {"task": "kernel", "params": {"n": 4}, "data": {"d": 3},
                                          "kernel": {"kind": "nth", "orthant": "quadrature"}})
    assert code == EXIT_OK
    K = io.read_matrix(out / "kernel.lkm")
    assert np.array_equal(K, K.T) and np.all(np.isfinite(K))


def test_validation_exit_codes(tmp_path):
    assert main(["nonsense"]) == EXIT_VALIDATION
    assert _run(tmp_path, "kernel", {"task": "kernel", "bogus": 1})[0] == EXIT_VALIDATION
    assert _run(tmp_path, "kernel", {"task": "kernel", "kernel": {"kind": "rbf"}})[0] == EXIT_VALIDATION
    assert _run(tmp_path, "kernel", {"task": "kernel", "data": {"generator": "spirals"}})[0] == EXIT_VALIDATION
    assert main(["kernel", "--config", str(tmp_path / "missing.json")]) == EXIT_VALIDATION


def test_numerical_exit_code(tmp_path, rng):
    X = np.repeat(rng.standard_normal((4, 3)), 2, axis=0)
    labels = ["a", "b"] * 4
    train = _csv(tmp_path / "train.csv", X, labels)
    test = _csv(tmp_path / "test.csv", X[:4], labels[:4])
    code, _ = _run(tmp_path, "benchmark", {"data": {"train": train, "test": test}, "ridge": 0.0,
                                           "params": {"val_frac": 0.25}})
    assert code == EXIT_NUMERICAL


def test_benchmark_deterministic(tmp_path):
    cfg = {"data": {"generator": "shells", "d": 4}, "params": {"n_train": 40, "n_val": 20, "n_test": 40},
           "estimators": ["fjlt_v1", "oracle"]}
    _, a = _run(tmp_path, "benchmark", cfg, "--seed", "3", name="a")
    _, b = _run(tmp_path, "benchmark", cfg, "--seed", "3", name="b")
    assert (a / "results.json").read_text() == (b / "results.json").read_text()
    assert json.loads((a / "effective_config.json").read_text())["seed"] == 3


def test_benchmark_csv_multiclass(tmp_path, rng):
    X = rng.standard_normal((60, 3))
    labels = np.array(["r", "g", "b"])[np.argmax(X, axis=1)]
    train = _csv(tmp_path / "train.csv", X[:45], labels[:45])
    test = _csv(tmp_path / "test.csv", X[45:], labels[45:])
    code, out = _run(tmp_path, "benchmark", {"data": {"train": train, "test": test}})
    assert code == EXIT_OK
    rows = json.loads((out / "results.json").read_text())["runs"][0]["rows"]
    assert rows[0]["kernel"] == "agnostic" and rows[0]["test_acc"] > 0.5


def test_relabel_demo_and_hoeffding(tmp_path):
    code, out = _run(tmp_path, "claim1-demo", {"task": "claim1-demo", "params": {"n": 80}}, name="c")
    assert code == EXIT_OK
    run = json.loads((out / "results.json").read_text())["runs"][0]
    assert run["eta1_fixed_acc"] > 0.9
    code, out = _run(tmp_path, "hoeffding-check", {"task": "hoeffding-check", "params": {"trials": 2}}, name="h")
    assert code == EXIT_OK and json.loads((out / "results.json").read_text())["passed"]


def test_elasticity_writes_pairs(tmp_path):
    cfg = {"task": "elasticity", "params": {"n_train": 16, "n_test": 16, "width": 16, "steps": 20}}
    code, out = _run(tmp_path, "elasticity", cfg)
    assert code == EXIT_OK
    with open(out / "pairs.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["mode"] for r in rows} == {"train-train", "test-train"}
    assert {r["bucket"] for r in rows} == {"intra", "inter"}


def test_nth_probe_list(tmp_path):
    cfg = {"task": "nth-probe", "data": {"d": 3}, "params": {"n": 6, "orthant": "quadrature",
                                                             "probes": [[[1, 0, 0], [0, 1, 0]], [[1, 0, 0], [2, 0, 0]]]}}
    code, out = _run(tmp_path, "nth-probe", cfg)
    assert code == EXIT_OK
    res = json.loads((out / "results.json").read_text())
    assert len(res["label_aware"]) == 2 and res["singular"] == [1]
    bad = {"task": "nth-probe", "data": {"d": 3}, "params": {"n": 6, "probes": [[[1, 0], [0, 1]]]}}
    assert _run(tmp_path, "nth-probe", bad, name="bad")[0] == EXIT_VALIDATION


def test_selftest_command(tmp_path, capsys):
    code, out = _run(tmp_path, "selftest", None, "--seed", "1")
    table = capsys.readouterr().out
    assert code == EXIT_OK and table.count("PASS") == 5
    _, out2 = _run(tmp_path, "selftest", None, "--seed", "1", name="again")
    assert (out / "results.json").read_text() == (out2 / "results.json").read_text()
