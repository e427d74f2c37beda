"""Command-line runner: ``lantk <command> [--config c.json] [--seed S] [--out DIR]``.

Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import shutil
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import experiments as ex
from . import hr, io, nth, selftest
from .config import ConfigError, ExperimentConfig, TASKS, substream, subseed
from .kernels_analytic import DegenerateGeometry, MCConfig, expected_k2_matrix
from .net2 import DivergenceError
from .synthetic import generate

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2

_NUMERICAL = (np.linalg.LinAlgError, nth.NotPositiveDefinite, DegenerateGeometry, DivergenceError,
              FloatingPointError, ZeroDivisionError)
_VALIDATION = (ConfigError, ds.DatasetError, nth.GuardrailError, ValueError, KeyError, OSError)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=io._jsonable) + "\n")


def _binary_labels(labels):
    labels = np.asarray(labels)
    if labels.dtype.kind == "f" and set(np.unique(labels)) <= {-1.0, 1.0}:
        return labels
    uniq = np.unique(labels)
    if len(uniq) != 2:
        raise ConfigError(f"a binary task needs exactly two classes, found {len(uniq)}")
    return np.where(labels == uniq[0], 1.0, -1.0)


def _training_data(cfg: ExperimentConfig, name: str = "kernel-data"):
    """(X, labels) from a CSV path or a synthetic generator."""
    data = cfg.data
    if "train" in data:
        d = ds.load_csv(data["train"], data.get("label_column", "label"), data.get("normalize_rows", False))
        return d.features, d.labels
    return generate(data, int(cfg.params.get("n", 100)), substream(cfg.seed, name))


# ---------------------------------------------------------------------------
# commands

def cmd_kernel(cfg: ExperimentConfig, out: Path, override: bool) -> dict:
    X, labels = _training_data(cfg)
    spec = cfg.kernel
    kind = spec.get("kind", "agnostic")
    meta = {"kind": kind, "n": int(X.shape[0]), "seed": cfg.seed}
    if kind == "agnostic":
        K = expected_k2_matrix(X)
    elif kind == "hr":
        est = spec.get("estimator", "fjlt_v1")
        lam = float(spec.get("lam", 0.1))
        multiclass = len(np.unique(labels)) > 2
        y = labels if multiclass else _binary_labels(labels)
        K0 = expected_k2_matrix(X)
        if lam == 0:
            K = K0
        else:
            kw = {"seed": subseed(cfg.seed, "z-sketch")} if est.startswith("fjlt") else {}
            zm = hr.fit_z(est, X, y, multiclass=multiclass, **kw)
            K = hr.lantk_hr(K0, hr.z_matrix(zm, X, ya=y), lam)
            meta["z_model"] = zm.to_json()
        meta.update(estimator=est, lam=lam)
    elif kind == "nth":
        ncfg = nth.NTHConfig(
            mc=MCConfig(samples=int(spec.get("mc_samples", 200_000)), seed=subseed(cfg.seed, "orthant"),
                        orthant=spec.get("orthant", "mc")),
            max_n=int(spec.get("max_n", 64)), cache_dir=spec.get("cache_dir"))
        res = nth.lantk_nth(X, _binary_labels(labels), cfg=ncfg, override_guardrail=override)
        K = res.values
        meta.update(t="inf", flagged=res.flagged, floored=res.floored, singular=res.singular,
                    mc_samples=ncfg.mc.samples)
    else:
        raise ConfigError(f"unknown kernel kind {kind!r}")
    path = io.write_matrix(out / "kernel.lkm", K, meta)
    return {"kernel": str(path), **{k: v for k, v in meta.items() if k != "z_model"}}


def cmd_benchmark(cfg: ExperimentConfig, out: Path, override: bool) -> dict:
    sizes = ex.BenchmarkSizes(**{k: int(cfg.params[k]) for k in ("n_train", "n_val", "n_test") if k in cfg.params})
    runs = []
    for k in range(cfg.seeds):
        seed = cfg.seed + k
        if "train" in cfg.data:
            rows = _benchmark_csv(cfg, seed)
        else:
            rows = ex.benchmark(cfg.data, seed, sizes, estimators=tuple(cfg.estimators),
                                lam_grid=tuple(cfg.lam_grid), ridge=cfg.ridge)
        runs.append({"seed": seed, "rows": rows})
    return {"runs": runs}


def _benchmark_csv(cfg: ExperimentConfig, seed: int):
    lc = cfg.data.get("label_column", "label")
    norm = cfg.data.get("normalize_rows", False)
    train = ds.load_csv(cfg.data["train"], lc, norm)
    if "test" not in cfg.data:
        raise ConfigError("a CSV benchmark needs data.test")
    test = ds.load_csv(cfg.data["test"], lc, norm)
    lookup = {name: i for i, name in enumerate(train.class_names)}
    unknown = set(test.class_names) - set(lookup)
    if unknown:
        raise ConfigError(f"test labels {sorted(unknown)} do not occur in the training set")
    test_labels = np.array([lookup[test.class_names[c]] for c in test.labels])
    rng = substream(seed, "val-split")
    perm = rng.permutation(train.n)
    n_val = max(1, int(round(float(cfg.params.get("val_frac", 0.2)) * train.n)))
    vi, ti = perm[:n_val], perm[n_val:]
    multiclass = train.class_count > 2
    if multiclass:
        y, yv, yt = train.labels[ti], train.labels[vi], test_labels
    else:
        y = np.where(train.labels[ti] == 0, 1.0, -1.0)
        yv = np.where(train.labels[vi] == 0, 1.0, -1.0)
        yt = np.where(test_labels == 0, 1.0, -1.0)
    X = train.features
    return ex.benchmark_split(X[ti], y, X[vi], yv, test.features, yt, tuple(cfg.estimators),
                              tuple(cfg.lam_grid), cfg.ridge, subseed(seed, "z-sketch"), multiclass)


def cmd_relabel_demo(cfg: ExperimentConfig, out: Path, override: bool) -> dict:
    p = dict(cfg.params)
    n = int(p.pop("n", 400))
    return {"runs": [ex.relabel_demo(cfg.seed + k, n, **p) for k in range(cfg.seeds)]}


def cmd_elasticity(cfg: ExperimentConfig, out: Path, override: bool) -> dict:
    setup = replace(ex.ElasticitySetup(), **cfg.params)
    data = {"generator": "two_clusters", "d": setup.d, "sep": setup.sep, "offset": setup.offset, **cfg.data}
    runs = []
    with open(out / "pairs.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "source", "mode", "bucket", "i", "j", "similarity"])
        for k in range(cfg.seeds):
            seed = cfg.seed + k
            res = ex.elasticity(seed, setup, data, with_pairs=True)
            for row in res["pairs"]:
                w.writerow((seed,) + row)
            runs.append({"seed": seed, "reports": {s: {m: r.to_json() for m, r in v.items()}
                                                   for s, v in res["reports"].items()}})
    return {"runs": runs, "pairs_csv": "pairs.csv"}


def cmd_nth_probe(cfg: ExperimentConfig, out: Path, override: bool) -> dict:
    if "probes" in cfg.params:
        return _probe_list(cfg, override)
    p = dict(cfg.params)
    orthant = p.pop("orthant", "mc")
    setup = replace(ex.ProbeSetup(), **p)
    if setup.n > 64 and not override:
        raise nth.GuardrailError(f"n = {setup.n} exceeds 64; pass --override-n-guardrail")
    return {"runs": [ex.nth_probe(cfg.seed + k, setup, orthant) for k in range(cfg.seeds)]}


def _probe_list(cfg: ExperimentConfig, override: bool) -> dict:
    """label_aware_component for explicit probe pairs against the configured training data."""
    X, labels = _training_data(cfg, "nth-probe-data")
    probes = [tuple(np.asarray(v, float) for v in pair) for pair in cfg.params["probes"]]
    for k, (a, b) in enumerate(probes):
        if a.shape != (X.shape[1],) or b.shape != (X.shape[1],):
            raise ConfigError(f"probe {k} does not match the input dimension {X.shape[1]}")
    ncfg = nth.NTHConfig(mc=MCConfig(samples=int(cfg.params.get("mc_samples", 200_000)),
                                     seed=subseed(cfg.seed, "orthant"), orthant=cfg.params.get("orthant", "mc")))
    if X.shape[0] > ncfg.max_n and not override:
        raise nth.GuardrailError(f"n = {X.shape[0]} exceeds {ncfg.max_n}; pass --override-n-guardrail")
    res = nth.lantk_nth(X, _binary_labels(labels), probes, ncfg, override_guardrail=override)
    return {"label_aware": res.label_aware.tolist(), "agnostic": res.agnostic.tolist(),
            "singular": res.singular, "flagged": len(res.flagged)}


def cmd_hoeffding_check(cfg: ExperimentConfig, out: Path, override: bool) -> dict:
    res = ex.hoeffding_check(cfg.seed, int(cfg.params.get("trials", 100)))
    tol = float(cfg.params.get("tol", 1e-10))
    res["passed"] = all(res[k] < tol for k in res if k.startswith("max_"))
    return res


def cmd_selftest(cfg: ExperimentConfig, out: Path, override: bool) -> dict:
    results = selftest.run_all(cfg.seed)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}")
    return {"suites": [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results],
            "passed": all(r.passed for r in results)}


COMMANDS = {
    "kernel": cmd_kernel,
    "benchmark": cmd_benchmark,
    "claim1-demo": cmd_relabel_demo,
    "elasticity": cmd_elasticity,
    "nth-probe": cmd_nth_probe,
    "hoeffding-check": cmd_hoeffding_check,
    "selftest": cmd_selftest,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lantk", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=TASKS)
    ap.add_argument("--config", help="JSON experiment config")
    ap.add_argument("--seed", type=int, help="root seed (overrides the config)")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--override-n-guardrail", action="store_true",
                    help="allow hierarchy kernels on more than 64 training points")
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig(task=args.command)
        changes = {"task": args.command}
        if args.seed is not None:
            changes["seed"] = args.seed
        if args.out is not None:
            changes["out"] = args.out
        cfg = replace(cfg, **changes)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.config:
            shutil.copyfile(args.config, out / "config.json")
        _write_json(out / "effective_config.json", cfg.to_json())
        result = COMMANDS[args.command](cfg, out, args.override_n_guardrail)
        _write_json(out / "results.json", result)
    except _NUMERICAL as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except _VALIDATION as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    if result.get("passed") is False:
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
