"""Command-line experiment runner.

    elicitsim run --config experiment.yaml
    elicitsim synth --spec corpus.yaml
    elicitsim convert-snap --in Movies_&_TV.txt.gz --domain target --out movies.csv

Config files are flat YAML mappings; see README.md for the keys. Exit codes:
0 success, 1 configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import metrics
from .data import AUXILIARY, TARGET, build_dataset
from .errors import ConfigError, DataError, ElicitError, InsufficientRatings, TooFewUsers
from .harness import Scenario, run_experiment
from .ingest import convert_snap, describe, filter_overlap, load_csv, write_csv
from .mf import Hyperparams
from .strategies import StrategyKind
from .synthetic import InvalidSpec, SyntheticSpec, generate

_log = logging.getLogger("elicitsim")

RESULTS_HEADER = ("scenario", "strategy", "iteration", "mae", "spread",
                  "improvement_mae", "improvement_spread")
HP_KEYS = tuple(f.name for f in dataclasses.fields(Hyperparams) if f.name != "seed")


@dataclasses.dataclass
class ExperimentConfig:
    target_csv: Path
    auxiliary_csv: Path | None
    scenarios: list
    strategies: list
    hyperparams: Hyperparams
    folds: int = 5
    max_elicited: int = 5
    top_n: int = 10
    seed: int = 0
    min_per_domain: int = 20
    output_dir: Path = Path("results")
    workers: int | None = None

    @property
    def al_strategies(self) -> list:
        return [s for s in self.strategies if s is not None]


def _read_mapping(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError("<file>", f"no such file: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"not valid YAML: {exc}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("<file>", "expected a key: value mapping")
    for k, v in raw.items():
        if isinstance(v, dict):
            raise ConfigError(k, "nested mappings are not supported; keys are flat")
    return raw


def _as_list(raw, key):
    v = raw[key]
    return [v] if isinstance(v, str) else list(v)


def _number(raw, key, kind, default):
    if key not in raw:
        return default
    v = raw[key]
    if isinstance(v, bool):
        raise ConfigError(key, "expected a number")
    try:
        out = kind(v)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected {kind.__name__}, got {v!r}") from None
    if kind is int and out != v:
        raise ConfigError(key, f"expected an integer, got {v!r}")
    return out


def parse_config(path) -> ExperimentConfig:
    raw = _read_mapping(path)
    base = Path(path).resolve().parent
    known = {"target_csv", "auxiliary_csv", "scenarios", "strategies", "folds",
             "max_elicited", "top_n", "seed", "min_per_domain", "output_dir", "workers", *HP_KEYS}
    for k in raw:
        if k not in known:
            raise ConfigError(k, "unknown key")
    if "target_csv" not in raw:
        raise ConfigError("target_csv", "required")

    def resolve(p):
        p = Path(str(p))
        return p if p.is_absolute() else base / p

    scenarios = [Scenario.parse(s) for s in _as_list(raw, "scenarios")] \
        if "scenarios" in raw else [Scenario.SINGLE_DOMAIN]
    if not scenarios:
        raise ConfigError("scenarios", "must not be empty")
    if "strategies" not in raw or not _as_list(raw, "strategies"):
        raise ConfigError("strategies", "must list at least one strategy")
    strategies = []
    for s in _as_list(raw, "strategies"):
        k = None if str(s).strip().lower() == "none" else StrategyKind.parse(s)
        if k not in strategies:
            strategies.append(k)
    aux = raw.get("auxiliary_csv")
    if Scenario.CROSS_DOMAIN in scenarios and not aux:
        raise ConfigError("auxiliary_csv", "required by the cross scenario")

    seed = _number(raw, "seed", int, 0)
    hp_kw = {}
    for k in HP_KEYS:
        kind = type(getattr(Hyperparams(), k))
        if k in raw:
            hp_kw[k] = _number(raw, k, kind, None)
    hp = Hyperparams(seed=seed, **hp_kw)

    cfg = ExperimentConfig(
        target_csv=resolve(raw["target_csv"]),
        auxiliary_csv=resolve(aux) if aux else None,
        scenarios=list(dict.fromkeys(scenarios)),
        strategies=strategies,
        hyperparams=hp,
        folds=_number(raw, "folds", int, 5),
        max_elicited=_number(raw, "max_elicited", int, 5),
        top_n=_number(raw, "top_n", int, 10),
        seed=seed,
        min_per_domain=_number(raw, "min_per_domain", int, 20),
        output_dir=resolve(raw.get("output_dir", "results")),
        workers=_number(raw, "workers", int, None),
    )
    for key in ("folds", "top_n"):
        if getattr(cfg, key) < 1:
            raise ConfigError(key, "must be >= 1")
    if cfg.max_elicited < 0:
        raise ConfigError("max_elicited", "must be >= 0")
    return cfg


def _fmt(x) -> str:
    return "" if x is None else f"{x:.4f}"


def load_data(cfg: ExperimentConfig):
    target = build_dataset(load_csv(cfg.target_csv), TARGET)
    aux = None
    if cfg.auxiliary_csv is not None:
        aux = build_dataset(load_csv(cfg.auxiliary_csv), AUXILIARY)
        target, aux = filter_overlap(target, aux, cfg.min_per_domain)
    _log.info("%s", describe(target))
    if aux is not None:
        _log.info("%s", describe(aux))
    return target, aux


def run_grid(cfg: ExperimentConfig, target, aux) -> dict:
    """{scenario: {strategy or None: [ExperimentResult, ...]}}; the
    baseline is always included."""
    out = {}
    for scen in cfg.scenarios:
        cell = {None: run_experiment(target, aux, scen, None, cfg.hyperparams, cfg.folds,
                                     0, cfg.seed, cfg.top_n, cfg.workers)}
        for strat in cfg.al_strategies:
            cell[strat] = run_experiment(target, aux, scen, strat, cfg.hyperparams, cfg.folds,
                                         cfg.max_elicited, cfg.seed, cfg.top_n, cfg.workers)
        out[scen] = cell
    return out


def write_results(grid: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULTS_HEADER)
        for scen, cell in grid.items():
            for strat, rows in cell.items():
                for r in rows:
                    w.writerow((scen.value, r.strategy_name, r.iteration, _fmt(r.mae),
                                _fmt(r.spread), _fmt(r.improvement_mae),
                                _fmt(r.improvement_spread)))


def _improve(value, base, direction):
    try:
        return metrics.improvement(value, base, direction)
    except ElicitError:
        return None


def write_table1(grid: dict, path) -> None:
    """Final-iteration values with improvements over the baseline, one row
    per strategy; a second block averages each learning curve over all of
    its iterations (t = 0 included) instead."""
    scens = list(grid)
    header = ["aggregate", "strategy"]
    for metric in ("mae", "spread"):
        for s in scens:
            header += [f"{s.value}_{metric}", f"{s.value}_{metric}_improve"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for agg in ("final", "curve_mean"):
            strategies = [k for k in grid[scens[0]] if k is not None] + [None]
            for strat in strategies:
                row = [agg, "none" if strat is None else strat.value]
                for metric, direction in (("mae", metrics.LOWER_IS_BETTER),
                                          ("spread", metrics.HIGHER_IS_BETTER)):
                    for s in scens:
                        base = getattr(grid[s][None][0], metric)
                        curve = [getattr(r, metric) for r in grid[s][strat]]
                        value = curve[-1] if agg == "final" else float(np.mean(curve))
                        imp = None if strat is None else _improve(value, base, direction)
                        row += [_fmt(value), _fmt(imp)]
                w.writerow(row)


def cmd_run(args) -> int:
    cfg = parse_config(args.config)
    target, aux = load_data(cfg)
    grid = run_grid(cfg, target, aux)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    write_results(grid, cfg.output_dir / "results.csv")
    write_table1(grid, cfg.output_dir / "table1.csv")
    print(f"wrote {cfg.output_dir / 'results.csv'} and {cfg.output_dir / 'table1.csv'}")
    return 0


def cmd_synth(args) -> int:
    raw = _read_mapping(args.spec)
    base = Path(args.spec).resolve().parent
    outs = {}
    for key in ("target_out", "auxiliary_out"):
        if key not in raw:
            raise ConfigError(key, "required")
        p = Path(str(raw.pop(key)))
        outs[key] = p if p.is_absolute() else base / p
    names = {f.name: f for f in dataclasses.fields(SyntheticSpec)}
    for k in raw:
        if k not in names:
            raise ConfigError(k, "unknown key")
    try:
        spec = SyntheticSpec(**raw)
        target, aux = generate(spec)
    except InvalidSpec as exc:
        raise ConfigError("<spec>", str(exc)) from None
    except TypeError as exc:
        raise ConfigError("<spec>", str(exc)) from None
    for key, ratings in (("target_out", target), ("auxiliary_out", aux)):
        outs[key].parent.mkdir(parents=True, exist_ok=True)
        write_csv(ratings, outs[key])
    print(f"wrote {len(target)} target and {len(aux)} auxiliary ratings")
    return 0


def cmd_convert(args) -> int:
    ratings = convert_snap(args.inp, args.domain)
    write_csv(ratings, args.out)
    print(f"wrote {len(ratings)} ratings to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="elicitsim", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the scenario x strategy grid")
    r.add_argument("--config", required=True)
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("synth", help="generate a synthetic two-domain corpus")
    s.add_argument("--spec", required=True)
    s.set_defaults(func=cmd_synth)
    c = sub.add_parser("convert-snap", help="convert a SNAP review dump to CSV")
    c.add_argument("--in", dest="inp", required=True)
    c.add_argument("--domain", required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_convert)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (DataError, InsufficientRatings, TooFewUsers) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
