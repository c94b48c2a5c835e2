"""Command-line entry point.

Subcommands: ``generate`` (synthetic datasets), ``benchmark`` (zero-shot CV
over a JSON experiment config), ``timing`` (fit+predict wall-clock curves),
``fit`` / ``predict`` (single-model flows with a JSON model container), and
``stats`` (re-run the rank statistics on an existing scores.csv).

Exit codes: 0 success, 1 config or validation error, 2 data or dimension
error, 3 runtime failure.  The environment variable ``ZSK_SEED`` overrides
any configured seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import datagen, evaluation, methods, reporting
from .data import DataError, ZeroShotDataset, load_dataset
from .evaluation import DEFAULT_C_GRID
from .svr import SvrConfig

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3

MODEL_FORMAT_VERSION = 1


class ConfigError(ValueError):
    """Bad experiment config or command-line usage."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the CLI contract reserves 2 for
    # data errors, so route usage problems to the config exit code.
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_CONFIG)


def _seed_override(seed: int | None) -> int | None:
    env = os.environ.get("ZSK_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"ZSK_SEED must be an integer, got {env!r}") from None
    return seed


def _svr_config(d: dict | None) -> SvrConfig:
    d = dict(d or {})
    allowed = {"epsilon", "tol", "max_passes", "c"}
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown svr config keys: {sorted(unknown)}")
    try:
        return SvrConfig(**d)
    except ValueError as exc:
        raise ConfigError(f"bad svr config: {exc}") from None


@dataclass
class ExperimentConfig:
    """Validated experiment description for `benchmark`."""

    seed: int
    datasets: list[dict]
    methods: list[str]
    output_dir: Path
    folds: int = 3
    svr: SvrConfig = field(default_factory=SvrConfig)
    c_grid: tuple[float, ...] = DEFAULT_C_GRID
    max_parallel_cells: int | None = None

    @staticmethod
    def load(path) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        seed = _seed_override(raw.get("seed"))
        if seed is None:
            raise ConfigError("config needs a 'seed' (or set ZSK_SEED)")
        datasets = raw.get("datasets") or []
        method_list = raw.get("methods") or []
        if not datasets:
            raise ConfigError("config needs at least one dataset")
        if not method_list:
            raise ConfigError("config needs at least one method")
        for m in method_list:
            methods.make_regressor(m)  # validates the name
        out = raw.get("output_dir")
        if not out:
            raise ConfigError("config needs an 'output_dir'")
        grid = tuple(float(c) for c in raw.get("c_grid", DEFAULT_C_GRID))
        if not grid:
            raise ConfigError("c_grid must be non-empty")
        folds = int(raw.get("folds", 3))
        return ExperimentConfig(
            seed=int(seed),
            datasets=list(datasets),
            methods=[str(m) for m in method_list],
            output_dir=Path(out),
            folds=folds,
            svr=_svr_config(raw.get("svr")),
            c_grid=grid,
            max_parallel_cells=raw.get("max_parallel_cells"),
        )


def _materialize_dataset(entry: dict, index: int, seed: int) -> ZeroShotDataset:
    if "path" in entry:
        base = Path(entry["path"])
        ds = load_dataset(base / "instances.csv", base / "sideinfo.csv",
                          name=entry.get("name"))
        return ds
    if "instances_csv" in entry:
        return load_dataset(entry["instances_csv"], entry["sideinfo_csv"],
                            name=entry.get("name"))
    if "family" in entry:
        spec = _synth_spec(entry, default_seed=seed * 100_003 + index)
        ds = datagen.generate(spec)
        if entry.get("name"):
            ds.name = str(entry["name"])
        return ds
    raise ConfigError(
        f"dataset entry {index} needs 'family', 'path', or 'instances_csv'/'sideinfo_csv'"
    )


def _synth_spec(entry: dict, default_seed: int) -> datagen.SynthSpec:
    try:
        return datagen.SynthSpec(
            family=str(entry["family"]).upper(),
            m_o=int(entry["targets"]),
            a_s=int(entry["sideinfo"]),
            n_o=int(entry.get("instances", 500)),
            a_x=int(entry.get("features", 50)),
            seed=int(entry.get("seed", default_seed)),
            d_prototypes=int(entry.get("prototypes", 10)),
        )
    except KeyError as exc:
        raise ConfigError(f"synthetic dataset entry is missing {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"bad synthetic dataset entry: {exc}") from None


# --- subcommands -------------------------------------------------------------


def cmd_generate(args) -> int:
    seed = _seed_override(args.seed)
    if seed is None:
        raise ConfigError("--seed is required (or set ZSK_SEED)")
    spec = datagen.SynthSpec(
        family=args.family.upper(),
        m_o=args.targets,
        a_s=args.sideinfo,
        n_o=args.instances,
        a_x=args.features,
        seed=seed,
        d_prototypes=args.prototypes,
    )
    ds = datagen.generate(spec)
    out = datagen.save_dataset(ds, args.out, spec=spec)
    print(out)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    datasets = [
        _materialize_dataset(e, i, cfg.seed) for i, e in enumerate(cfg.datasets)
    ]
    parallel = cfg.max_parallel_cells
    if parallel is None:
        parallel = os.cpu_count() or 1
    report = evaluation.run_benchmark(
        datasets,
        cfg.methods,
        folds=cfg.folds,
        seed=cfg.seed,
        svr_cfg=cfg.svr,
        c_grid=cfg.c_grid,
        max_parallel=int(parallel),
    )
    paths = reporting.write_benchmark_outputs(report, cfg.output_dir)
    for p in paths.values():
        print(p)
    if all(not c.ok for c in report.cells):
        sys.stderr.write("benchmark failed: every cell errored\n")
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_timing(args) -> int:
    raw = json.loads(Path(args.config).read_text(encoding="utf-8")) if args.config else {}
    seed = _seed_override(raw.get("seed"))
    if seed is None:
        raise ConfigError("timing config needs a 'seed' (or set ZSK_SEED)")
    out_dir = raw.get("output_dir")
    if not out_dir:
        raise ConfigError("timing config needs an 'output_dir'")
    grid_raw = raw.get("grid", {})
    grid = datagen.TimingGridSpec(
        ax_values=tuple(grid_raw.get("ax_values", (10, 100, 250, 500))),
        as_values=tuple(grid_raw.get("as_values", (10, 100, 250, 500))),
        no_values=tuple(grid_raw.get("no_values", (10, 20, 30, 40))),
        mo_values=tuple(grid_raw.get("mo_values", (5, 10, 15, 20))),
        seed=int(seed),
    )
    method_list = tuple(raw.get("methods", evaluation.TIMING_METHODS))
    for m in method_list:
        methods.make_regressor(m)
    datasets = datagen.generate_timing_grid(grid)
    # timing cells must run serially; parallelism would corrupt the clocks
    cells = evaluation.run_timing(
        datasets,
        methods=method_list,
        repeats=int(raw.get("repeats", 3)),
        svr_cfg=_svr_config(raw.get("svr")),
    )
    out_dir = Path(out_dir)
    print(reporting.write_timing_csv(cells, out_dir / "timing.csv"))
    for p in reporting.write_timing_curves(cells, out_dir):
        print(p)
    return EXIT_OK


def cmd_fit(args) -> int:
    ds = load_dataset(args.instances, args.sideinfo)
    cfg = SvrConfig(c=args.c, epsilon=args.epsilon, tol=args.tol, max_passes=args.max_passes)
    reg = methods.fit(ds, args.method, cfg)
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "method": args.method,
        "model": reg.to_dict(),
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")
    print(out)
    return EXIT_OK


def cmd_predict(args) -> int:
    path = Path(args.model)
    if not path.exists():
        raise DataError(f"model file not found: {path}")
    payload = json.loads(path.read_text(encoding="utf-8"))
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise DataError(
            f"model format version mismatch: file has {version!r}, "
            f"this build reads {MODEL_FORMAT_VERSION}"
        )
    reg = methods.regressor_from_dict(payload["model"])
    X, ids, side = _load_query(args.instances, args.sideinfo)
    S = np.vstack([side.vector(t) for t in ids]) if ids else np.empty((0, side.a_s))
    preds = reg.predict_many(X, S)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["target", "prediction"])
        for t, p in zip(ids, preds):
            w.writerow([t, "%.12g" % p])
    print(out)
    return EXIT_OK


def _load_query(instances_path, sideinfo_path):
    """Query rows: the instance schema with the label column optional."""
    from .data import SideInfoTable, _check_header, _parse_float, _read_rows

    side_header, side_rows = _read_rows(Path(sideinfo_path))
    a_s = _check_header(side_header, "s", Path(sideinfo_path), trailing=None)
    side = SideInfoTable(
        [(r[0], [_parse_float(c, i + 1, side_header[j + 1]) for j, c in enumerate(r[1:])])
         for i, r in enumerate(side_rows)]
    )
    header, rows = _read_rows(Path(instances_path))
    has_y = header[-1] == "y"
    a_x = len(header) - 1 - (1 if has_y else 0)
    want = ["target"] + [f"x{i}" for i in range(1, a_x + 1)] + (["y"] if has_y else [])
    if header != want or a_x < 1:
        raise DataError(
            f"schema mismatch in {instances_path}: expected 'target,x1,...,x{{k}}[,y]', got {','.join(header)!r}"
        )
    X = np.empty((len(rows), a_x))
    ids = []
    for r, row in enumerate(rows, start=1):
        expected = a_x + 1 + (1 if has_y else 0)
        if len(row) != expected:
            raise DataError(f"schema mismatch in {instances_path}: row {r} has {len(row)} cells, expected {expected}")
        ids.append(row[0])
        for j in range(a_x):
            X[r - 1, j] = _parse_float(row[1 + j], r, header[1 + j])
        if row[0] not in side:
            raise DataError(f"unknown target id {row[0]!r} (not in side-information table)")
    return X, ids, side


def cmd_stats(args) -> int:
    datasets, method_names, matrix = reporting.read_scores_csv(args.scores)
    complete = [i for i in range(len(datasets)) if not np.isnan(matrix[i]).any()]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload: dict = {
        "methods": method_names,
        "n_datasets": len(datasets),
        "n_datasets_ranked": len(complete),
    }
    if len(method_names) < 2 or len(complete) < 2:
        payload["note"] = "statistics require >= 2 methods and >= 2 ranked datasets"
    else:
        ranks, avg = evaluation.friedman_ranks(matrix[complete])
        chi2, p = evaluation.friedman_chi_squared(matrix[complete])
        cd = evaluation.nemenyi_cd(len(method_names), len(complete), args.alpha)
        payload.update(
            {
                "average_ranks": {m: float(avg[j]) for j, m in enumerate(method_names)},
                "friedman": {"chi_squared": chi2, "p_value": p},
                "nemenyi": {
                    "alpha": args.alpha,
                    "critical_difference": cd,
                    "pairwise": [
                        {
                            "a": method_names[i],
                            "b": method_names[j],
                            "rank_difference": abs(float(avg[i] - avg[j])),
                            "significant": bool(abs(float(avg[i] - avg[j])) >= cd),
                        }
                        for i in range(len(method_names))
                        for j in range(i + 1, len(method_names))
                    ],
                },
            }
        )
    stats_path = out_dir / "stats.json"
    with open(stats_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(stats_path)
    return EXIT_OK


# --- argument wiring ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="zskreg", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="emit a synthetic dataset directory")
    g.add_argument("--family", choices=["R", "S", "r", "s"], required=True)
    g.add_argument("--targets", type=int, required=True, help="number of targets m_o")
    g.add_argument("--sideinfo", type=int, required=True, help="side-information size a_s")
    g.add_argument("--instances", type=int, default=500, help="instances per target n_o")
    g.add_argument("--features", type=int, default=50, help="feature count a_x")
    g.add_argument("--prototypes", type=int, default=10, help="prototype count (family S)")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("benchmark", help="run the zero-shot benchmark from a JSON config")
    b.add_argument("config")
    b.set_defaults(func=cmd_benchmark)

    t = sub.add_parser("timing", help="run the timing grid from a JSON config")
    t.add_argument("config")
    t.set_defaults(func=cmd_timing)

    f = sub.add_parser("fit", help="fit one method and save the model container")
    f.add_argument("--method", required=True)
    f.add_argument("--instances", required=True)
    f.add_argument("--sideinfo", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--c", type=float, default=1.0)
    f.add_argument("--epsilon", type=float, default=0.1)
    f.add_argument("--tol", type=float, default=1e-3)
    f.add_argument("--max-passes", type=int, default=200_000, dest="max_passes")
    f.set_defaults(func=cmd_fit)

    q = sub.add_parser("predict", help="predict with a saved model container")
    q.add_argument("--model", required=True)
    q.add_argument("--instances", required=True)
    q.add_argument("--sideinfo", required=True)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_predict)

    s = sub.add_parser("stats", help="re-run rank statistics on an existing scores.csv")
    s.add_argument("--scores", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--alpha", type=float, default=0.05)
    s.set_defaults(func=cmd_stats)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit:
        raise
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except DataError as exc:
        sys.stderr.write(f"data error: {exc}\n")
        return EXIT_DATA
    except ValueError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except Exception as exc:  # anything else is a runtime failure
        sys.stderr.write(f"runtime failure: {type(exc).__name__}: {exc}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
