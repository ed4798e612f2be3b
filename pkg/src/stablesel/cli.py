"""Batch command-line front end.

Subcommands
-----------

``gen``
    Sample every configured (role, bias strength, seed) environment and
    write one CSV per dataset plus a JSON manifest recording the
    realized acceptance rates.
``weights``
    Fit one reweighter on one dataset CSV and write the weight vector
    as a single-column CSV, printing a one-line summary (mean, min,
    max, max |weighted covariance|).
``select``
    Run one method's hyperparameter grid on a dataset CSV and write the
    resulting feature ranking.
``eval``
    Evaluate the configured methods on a single training bias strength
    across all seeds; write the per-cell result rows.
``reproduce``
    Run the full benchmark grid (method x bias strength x seed), write
    the result rows, per-figure plot-data CSVs, rendered PNG figures,
    and a manifest; print the median summary table.
``oracle-verify``
    Check the discrete-distribution oracle's invariants on randomly
    generated joints (or on one supplied as JSON).

Configuration is a single JSON document (``--config``); individual
flags override single fields. Every output artifact carries the
configuration hash, and re-running with the same configuration and
seeds writes byte-identical numeric outputs. Grid cells are scheduled
onto a worker pool bounded by the ``STABLESEL_THREADS`` environment
variable; each cell runs single-threaded and derives every random
stream from its own seed, so results do not depend on scheduling.

Exit codes: 0 on success, 1 when one or more grid cells failed, 2 on
configuration errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .core import Dataset, Rng
from .dwr import DwrConfig, dwr_fit, max_abs_weighted_cov
from .errors import ConfigError, StableselError
from .evaluate import METHODS, HyperGrids, evaluate_method, fit_with_selection, sweep_selection_sizes
from .srdo import SrdoConfig, srdo_fit
from .synthgen import EnvironmentSpec, GeneratorSpec, sample_environment, stable_indices

__all__ = ["ExperimentConfig", "main"]

EXIT_OK = 0
EXIT_CELL_FAILURES = 1
EXIT_CONFIG = 2

_RESULT_COLUMNS = ("method", "r_tr", "seed", "rank_average", "f1", "rmse_mean", "rmse_std")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a benchmark run depends on, in one hashable document."""

    n: int = 10_000
    seeds: tuple = (0, 1, 2)
    r_train: tuple = (1.5, 1.7, 2.0, 2.3, 2.5, 2.7, 3.0)
    r_test: tuple = (-3.0, -2.5, -2.0, -1.5, -1.3, 1.3, 1.5, 2.0, 2.5, 3.0)
    methods: tuple = METHODS
    selected_k: int = 5
    outcome_kind: str = "poly"
    mlp_theta_seed: int = 0
    noise_sd: float = 0.3
    dwr_lambda_grid: tuple = (0.02, 0.05, 0.1)
    dwr_max_iters: int = DwrConfig.max_iters
    srdo_gammas: tuple = (5.0, 10.0, 20.0)
    srdo_epochs: int = 100
    lasso_alphas: tuple = (0.0003, 0.001, 0.01, 0.1)
    regressor_epochs: int = 200
    size_sweep: bool = True
    size_sweep_r: float = 2.5
    output_dir: str = "stablesel-out"

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        for group, rs in (("r_train", self.r_train), ("r_test", self.r_test)):
            if not rs:
                raise ConfigError(f"{group} must be non-empty")
            for r in rs:
                if not abs(float(r)) > 1.0:
                    raise ConfigError(f"{group} entries need |r| > 1, got {r}")
        if not self.methods:
            raise ConfigError("methods must be non-empty")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; expected a subset of {METHODS}")
        if self.selected_k < 1:
            raise ConfigError("selected_k must be >= 1")
        for name, vals in (
            ("dwr_lambda_grid", self.dwr_lambda_grid),
            ("srdo_gammas", self.srdo_gammas),
            ("lasso_alphas", self.lasso_alphas),
        ):
            if not vals or any(not float(v) > 0 for v in vals):
                raise ConfigError(f"{name} must be non-empty and strictly positive")
        if self.dwr_max_iters < 1 or self.srdo_epochs < 1:
            raise ConfigError("iteration counts must be >= 1")
        if self.regressor_epochs < 0:
            raise ConfigError("regressor_epochs must be >= 0")
        if not self.output_dir:
            raise ConfigError("output_dir must be non-empty")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f: cls.__dataclass_fields__[f] for f in cls.__dataclass_fields__}
        unknown = sorted(set(doc) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        coerced = {}
        for key, value in doc.items():
            coerced[key] = tuple(value) if isinstance(value, list) else value
        try:
            return cls(**coerced)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return asdict(self)

    def identity_dict(self) -> dict:
        """The fields that determine results (everything but the output path)."""
        doc = self.to_dict()
        doc.pop("output_dir")
        return doc

    def canonical_json(self) -> str:
        return json.dumps(self.identity_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()[:12]

    def generator(self) -> GeneratorSpec:
        return GeneratorSpec(
            outcome_kind=self.outcome_kind,
            mlp_theta_seed=self.mlp_theta_seed,
            noise_sd=self.noise_sd,
        )

    def grids(self) -> HyperGrids:
        return HyperGrids(
            dwr=tuple(
                DwrConfig(lambda_sum=a, lambda_ridge=b, max_iters=self.dwr_max_iters)
                for a in self.dwr_lambda_grid
                for b in self.dwr_lambda_grid
            ),
            srdo_gammas=tuple(float(g) for g in self.srdo_gammas),
            lasso_alphas=tuple(float(a) for a in self.lasso_alphas),
            srdo_template=SrdoConfig(epochs=self.srdo_epochs),
        )


# --------------------------------------------------------------------------
# deterministic artifact writers


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path, comments, columns, rows) -> None:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _rtag(r: float) -> str:
    return f"{float(r):g}".replace("-", "m").replace(".", "p")


def _pool_size() -> int:
    raw = os.environ.get("STABLESEL_THREADS")
    if raw is None:
        return max(1, min(os.cpu_count() or 1, 4))
    try:
        size = int(raw)
    except ValueError as exc:
        raise ConfigError(f"STABLESEL_THREADS must be an integer, got {raw!r}") from exc
    if size < 1:
        raise ConfigError(f"STABLESEL_THREADS must be >= 1, got {size}")
    return size


# --------------------------------------------------------------------------
# grid cells

# Every stream a cell uses is forked from Rng(seed), so a cell's output
# is a pure function of (config, r_tr, seed) no matter where it runs.


def _sample_suite(cfg: ExperimentConfig, r_tr: float, seed: int):
    gen = cfg.generator()
    root = Rng(seed)
    train, rate = sample_environment(
        gen, EnvironmentSpec(r=r_tr, n=cfg.n), root.fork("train", int(round(r_tr * 10)))
    )
    tests = []
    for r_te in cfg.r_test:
        env, _ = sample_environment(
            gen, EnvironmentSpec(r=float(r_te), n=cfg.n), root.fork("test", int(round(r_te * 10)))
        )
        tests.append((f"r={float(r_te):g}", env))
    return train, tests, rate, root


def _run_cell(payload) -> dict:
    config_json, r_tr, seed = payload
    cfg = ExperimentConfig.from_dict(json.loads(config_json))
    out = {"rows": [], "cells": [], "size_sweep_rows": [], "errors": []}

    def record_error(method, exc):
        out["errors"].append(
            {"method": method, "r_tr": r_tr, "seed": seed, "error": f"{type(exc).__name__}: {exc}"}
        )

    try:
        train, tests, _, root = _sample_suite(cfg, r_tr, seed)
    except StableselError as exc:
        for method in cfg.methods:
            record_error(method, exc)
        return out
    truth = stable_indices(cfg.generator())
    grids = cfg.grids()
    for method in cfg.methods:
        try:
            report, fit = evaluate_method(
                method,
                train,
                tests,
                truth,
                grids,
                root.fork("eval"),
                selected_k=cfg.selected_k,
                regressor_epochs=cfg.regressor_epochs,
            )
        except StableselError as exc:
            record_error(method, exc)
            continue
        out["rows"].append(
            {
                "method": method,
                "r_tr": float(r_tr),
                "seed": seed,
                "rank_average": report.rank_average,
                "f1": report.f1,
                "rmse_mean": report.rmse_mean,
                "rmse_std": report.rmse_std,
            }
        )
        out["cells"].append(
            {
                "method": method,
                "r_tr": float(r_tr),
                "seed": seed,
                "hyper_label": fit.hyper_label,
                "diagnostics": fit.diagnostics,
                "scores": [float(s) for s in fit.ranking.scores],
                "selected": sorted(int(j) for j in fit.ranking.top()),
                "rmse_per_env": report.rmse_per_env,
            }
        )
        if (
            method == "srdo"
            and cfg.size_sweep
            and float(r_tr) == float(cfg.size_sweep_r)
        ):
            try:
                sweep = sweep_selection_sizes(
                    fit.ranking, train, tests, root.fork("eval", "ksweep"), epochs=cfg.regressor_epochs
                )
            except StableselError as exc:
                record_error("srdo-size-sweep", exc)
            else:
                out["size_sweep_rows"].extend(
                    {"k": k, "seed": seed, "rmse_mean": m, "rmse_std": s} for k, m, s in sweep
                )
    return out


def _run_grid(cfg: ExperimentConfig, jobs) -> dict:
    payloads = [(cfg.canonical_json(), float(r), int(seed)) for r, seed in jobs]
    pool = min(_pool_size(), len(payloads))
    if pool > 1:
        with ProcessPoolExecutor(max_workers=pool) as ex:
            results = list(ex.map(_run_cell, payloads))
    else:
        results = [_run_cell(p) for p in payloads]
    merged = {"rows": [], "cells": [], "size_sweep_rows": [], "errors": []}
    for res in results:
        for key in merged:
            merged[key].extend(res[key])
    order = {m: i for i, m in enumerate(cfg.methods)}
    merged["rows"].sort(key=lambda d: (order[d["method"]], d["r_tr"], d["seed"]))
    merged["cells"].sort(key=lambda d: (order[d["method"]], d["r_tr"], d["seed"]))
    merged["size_sweep_rows"].sort(key=lambda d: (d["k"], d["seed"]))
    merged["errors"].sort(key=lambda d: (d["method"], d["r_tr"], d["seed"]))
    return merged


def _write_results(cfg: ExperimentConfig, merged: dict, out_dir: str, command: str) -> list:
    h = cfg.config_hash()
    files = []

    def emit_csv(name, columns, rows):
        _write_csv(os.path.join(out_dir, name), (f"config {h}",), columns, rows)
        files.append(name)

    emit_csv("results.csv", _RESULT_COLUMNS, merged["rows"])
    _write_json(
        os.path.join(out_dir, "results.json"),
        {
            "config": cfg.identity_dict(),
            "config_hash": h,
            "rows": merged["rows"],
            "cells": merged["cells"],
            "size_sweep_rows": merged["size_sweep_rows"],
            "errors": merged["errors"],
        },
    )
    files.append("results.json")

    medians = []
    if merged["rows"]:
        from . import plotting

        medians = plotting.render_quality_panels(
            merged["rows"], os.path.join(out_dir, "quality_panels.png")
        )
        files.append("quality_panels.png")
        emit_csv(
            "quality_panels.csv",
            ("method", "r_tr", "f1", "rank_average", "rmse_mean", "rmse_std"),
            medians,
        )
    if merged["size_sweep_rows"]:
        from . import plotting

        sweep_medians = plotting.render_size_sweep(
            merged["size_sweep_rows"], os.path.join(out_dir, "size_sweep.png")
        )
        files.append("size_sweep.png")
        emit_csv("size_sweep.csv", ("k", "rmse_mean", "rmse_std"), sweep_medians)

    _write_json(
        os.path.join(out_dir, "manifest.json"),
        {
            "command": command,
            "config": cfg.identity_dict(),
            "config_hash": h,
            "files": sorted(files),
            "n_rows": len(merged["rows"]),
            "n_errors": len(merged["errors"]),
        },
    )
    return medians


def _print_summary(medians, errors) -> None:
    if medians:
        print("median over seeds per (method, r_tr):")
        header = f"{'method':<8}{'r_tr':>6}  {'f1':>8}  {'rank_avg':>8}  {'rmse_mean':>9}  {'rmse_std':>9}"
        print(header)
        for m in medians:
            print(
                f"{m['method']:<8}{m['r_tr']:>6g}  {m['f1']:>8.4f}  {m['rank_average']:>8.4f}"
                f"  {m['rmse_mean']:>9.4f}  {m['rmse_std']:>9.4f}"
            )
    for err in errors:
        print(
            f"cell failed: method={err['method']} r_tr={err['r_tr']} seed={err['seed']}: {err['error']}",
            file=sys.stderr,
        )


# --------------------------------------------------------------------------
# subcommands


def cmd_gen(cfg: ExperimentConfig) -> int:
    out_dir = cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    gen = cfg.generator()
    h = cfg.config_hash()
    entries = []
    failures = 0
    for role, rs in (("train", cfg.r_train), ("test", cfg.r_test)):
        for r in rs:
            for seed in cfg.seeds:
                name = f"{role}_r{_rtag(r)}_seed{seed}.csv"
                rng = Rng(seed).fork(role, int(round(float(r) * 10)))
                try:
                    ds, rate = sample_environment(gen, EnvironmentSpec(r=float(r), n=cfg.n), rng)
                except StableselError as exc:
                    failures += 1
                    entries.append(
                        {"file": name, "role": role, "r": float(r), "seed": seed,
                         "error": f"{type(exc).__name__}: {exc}"}
                    )
                    print(f"generation failed for {name}: {exc}", file=sys.stderr)
                    continue
                ds.to_csv(
                    os.path.join(out_dir, name),
                    header_comments=(
                        f"config {h}",
                        f"role={role} r={float(r):g} seed={seed}",
                        f"acceptance_rate={rate!r}",
                    ),
                )
                entries.append(
                    {"file": name, "role": role, "r": float(r), "seed": seed,
                     "n": cfg.n, "acceptance_rate": rate}
                )
                print(f"wrote {name} (acceptance rate {rate:.4f})")
    _write_json(
        os.path.join(out_dir, "gen_manifest.json"),
        {"command": "gen", "config": cfg.identity_dict(), "config_hash": h, "datasets": entries},
    )
    return EXIT_CELL_FAILURES if failures else EXIT_OK


def cmd_weights(args) -> int:
    ds = Dataset.from_csv(args.data)
    if args.method == "dwr":
        cfg = DwrConfig(
            lambda_sum=args.lambda_sum, lambda_ridge=args.lambda_ridge, max_iters=args.max_iters
        )
        res = dwr_fit(ds, cfg)
        weights = res.weights
        label = f"lambda_sum={cfg.lambda_sum:g},lambda_ridge={cfg.lambda_ridge:g},max_iters={cfg.max_iters}"
    else:
        rng = Rng(args.seed)
        cfg = SrdoConfig(gamma=args.gamma, epochs=args.epochs, shuffle_seed=rng.fork("shuffle").seed)
        res = srdo_fit(ds, cfg, rng.fork("fit"))
        weights = res.weights
        label = f"gamma={cfg.gamma:g},epochs={cfg.epochs},seed={args.seed}"
    w = weights.weights
    mac = max_abs_weighted_cov(ds.features, weights)
    _write_csv(
        args.out,
        (f"method {args.method}", f"hyper {label}", f"data {os.path.basename(args.data)}"),
        ("weight",),
        [{"weight": float(v)} for v in w],
    )
    print(
        f"n={ds.n} mean={float(w.mean())!r} min={float(w.min())!r} max={float(w.max())!r} "
        f"max_abs_weighted_cov={float(mac)!r}"
    )
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_select(args) -> int:
    ds = Dataset.from_csv(args.data)
    fit = fit_with_selection(
        args.method, ds, HyperGrids(), Rng(args.seed).fork("eval"), selected_k=args.k
    )
    chosen = set(fit.ranking.top())
    rows = [
        {
            "feature": int(j),
            "score": float(fit.ranking.scores[j]),
            "rank": int(np.where(fit.ranking.order == j)[0][0] + 1),
            "selected": int(j in chosen),
        }
        for j in range(ds.d)
    ]
    comments = [f"method {args.method}", f"data {os.path.basename(args.data)}"]
    if fit.hyper_label:
        comments.append(f"hyper {fit.hyper_label}")
    _write_csv(args.out, comments, ("feature", "score", "rank", "selected"), rows)
    label = f" ({fit.hyper_label})" if fit.hyper_label else ""
    print(f"{args.method}{label} selected features: {sorted(chosen)}")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_eval(cfg: ExperimentConfig, r: float) -> int:
    cfg = replace(cfg, r_train=(float(r),), size_sweep=False)
    os.makedirs(cfg.output_dir, exist_ok=True)
    merged = _run_grid(cfg, [(float(r), s) for s in cfg.seeds])
    medians = _write_results(cfg, merged, cfg.output_dir, "eval")
    _print_summary(medians, merged["errors"])
    return EXIT_CELL_FAILURES if merged["errors"] else EXIT_OK


def cmd_reproduce(cfg: ExperimentConfig) -> int:
    os.makedirs(cfg.output_dir, exist_ok=True)
    jobs = [(float(r), s) for r in cfg.r_train for s in cfg.seeds]
    merged = _run_grid(cfg, jobs)
    medians = _write_results(cfg, merged, cfg.output_dir, "reproduce")
    _print_summary(medians, merged["errors"])
    return EXIT_CELL_FAILURES if merged["errors"] else EXIT_OK


def cmd_oracle_verify(args) -> int:
    from . import oracle

    if args.joint:
        with open(args.joint, "r", encoding="utf-8") as fh:
            joint = oracle.joint_from_json(fh.read())
        try:
            minimal = oracle.minimal_stable_set(joint)
            boundary = oracle.markov_boundary(joint)
            weights = oracle.independence_weights(joint)
            beta = oracle.population_wls(joint, weights)
        except StableselError as exc:
            print(f"oracle check failed: {exc}", file=sys.stderr)
            return EXIT_CELL_FAILURES
        print(f"minimal stable set: {sorted(minimal)}")
        print(f"markov boundary:    {sorted(boundary)}")
        print(f"reweighted population coefficients: {[round(float(b), 6) for b in beta.beta]}")
        if not minimal <= boundary:
            print("violation: minimal stable set not inside the boundary", file=sys.stderr)
            return EXIT_CELL_FAILURES
        return EXIT_OK

    worst_off = 0.0
    for i in range(args.instances):
        rng = Rng(args.seed).fork("oracle", i)
        joint = oracle.random_joint(rng, max_features=args.max_features, max_support=args.max_support)
        try:
            minimal = oracle.minimal_stable_set(joint)
            boundary = oracle.markov_boundary(joint)
            weights = oracle.independence_weights(joint)
            beta = oracle.population_wls(joint, weights)
        except StableselError as exc:
            print(f"instance {i}: oracle check failed: {exc}", file=sys.stderr)
            return EXIT_CELL_FAILURES
        if not minimal <= boundary:
            print(f"instance {i}: minimal set escapes the boundary", file=sys.stderr)
            return EXIT_CELL_FAILURES
        outside = [abs(beta.beta[j]) for j in range(joint.d) if j not in minimal]
        if outside:
            worst_off = max(worst_off, max(outside))
    if worst_off >= 1e-10:
        print(f"violation: off-support coefficient {worst_off:.3e} >= 1e-10", file=sys.stderr)
        return EXIT_CELL_FAILURES
    print(
        f"verified {args.instances} random joints (seed {args.seed}): stable-set lattice, "
        f"minimal-set uniqueness, boundary inclusion, and reweighted coefficient support all hold"
    )
    print(f"largest off-support coefficient magnitude: {worst_off:.3e}")
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing


def _parse_ints(text: str) -> tuple:
    return tuple(int(s) for s in text.split(",") if s)


def _parse_floats(text: str) -> tuple:
    return tuple(float(s) for s in text.split(",") if s)


def _parse_strs(text: str) -> tuple:
    return tuple(s for s in text.split(",") if s)


_OVERRIDES = (
    ("n", int, "sample count per environment"),
    ("seeds", _parse_ints, "comma-separated seed list"),
    ("r_train", _parse_floats, "comma-separated training bias strengths"),
    ("r_test", _parse_floats, "comma-separated test bias strengths"),
    ("methods", _parse_strs, "comma-separated method subset"),
    ("selected_k", int, "number of leading features kept"),
    ("outcome_kind", str, "outcome function family (poly or mlp)"),
    ("mlp_theta_seed", int, "seed of the frozen nonlinear outcome network"),
    ("noise_sd", float, "outcome noise standard deviation"),
    ("dwr_max_iters", int, "optimizer budget per decorrelation fit"),
    ("srdo_epochs", int, "classifier epochs per shuffle-and-classify fit"),
    ("regressor_epochs", int, "downstream regressor epochs"),
    ("size_sweep_r", float, "training bias strength for the size sweep"),
    ("output_dir", str, "directory for output artifacts"),
)


def _add_config_flags(parser) -> None:
    parser.add_argument("--config", help="JSON configuration file")
    for name, _, help_text in _OVERRIDES:
        parser.add_argument(f"--{name.replace('_', '-')}", dest=name, default=None, help=help_text)
    parser.add_argument(
        "--no-size-sweep", action="store_true", help="skip the selection-size sweep"
    )


def _load_config(args) -> ExperimentConfig:
    doc = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in {args.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"config root must be a JSON object, got {type(doc).__name__}")
    for name, parse, _ in _OVERRIDES:
        value = getattr(args, name, None)
        if value is not None:
            try:
                doc[name] = parse(value)
            except ValueError as exc:
                raise ConfigError(f"bad value for --{name.replace('_', '-')}: {exc}") from exc
    if getattr(args, "no_size_sweep", False):
        doc["size_sweep"] = False
    return ExperimentConfig.from_dict(doc)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stablesel",
        description="Feature selection under distribution shift: benchmark and reweighting tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="sample configured environments to CSV files")
    _add_config_flags(p)

    p = sub.add_parser("weights", help="fit one reweighter and write its weight vector")
    p.add_argument("--data", required=True, help="dataset CSV (from gen)")
    p.add_argument("--method", required=True, choices=("dwr", "srdo"))
    p.add_argument("--out", default="weights.csv", help="output CSV path")
    p.add_argument("--seed", type=int, default=0, help="stream seed (srdo shuffle and fit)")
    p.add_argument("--lambda-sum", type=float, default=DwrConfig.lambda_sum)
    p.add_argument("--lambda-ridge", type=float, default=DwrConfig.lambda_ridge)
    p.add_argument("--max-iters", type=int, default=DwrConfig.max_iters)
    p.add_argument("--gamma", type=float, default=SrdoConfig.gamma)
    p.add_argument("--epochs", type=int, default=SrdoConfig.epochs)

    p = sub.add_parser("select", help="rank features with one method's grid")
    p.add_argument("--data", required=True, help="dataset CSV (from gen)")
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--out", default="selection.csv", help="output CSV path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=5, help="number of leading features kept")

    p = sub.add_parser("eval", help="evaluate all methods at one training bias strength")
    p.add_argument("--r", type=float, required=True, help="training bias strength")
    _add_config_flags(p)

    p = sub.add_parser("reproduce", help="run the full benchmark grid and render figures")
    _add_config_flags(p)

    p = sub.add_parser("oracle-verify", help="check the discrete oracle's invariants")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--max-features", type=int, default=4)
    p.add_argument("--max-support", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--joint", help="verify one joint distribution stored as JSON")

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            return cmd_gen(_load_config(args))
        if args.command == "weights":
            return cmd_weights(args)
        if args.command == "select":
            return cmd_select(args)
        if args.command == "eval":
            return cmd_eval(_load_config(args), args.r)
        if args.command == "reproduce":
            return cmd_reproduce(_load_config(args))
        if args.command == "oracle-verify":
            return cmd_oracle_verify(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StableselError as exc:
        # a malformed input dataset or hyperparameter reaching a direct
        # subcommand (weights / select) is a configuration problem
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
