"""Command-line entry point: ``scbmvar <command> --config cfg.json [options]``.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from .bench import BenchConfig, build_specs, run_grid, truth_path, PHI0
from .crossval import make_alpha_grid, select_alpha
from .errors import (
    ConfigError,
    DivergenceError,
    InvalidSpecError,
    NumericalError,
    SingularDesignError,
    StabilizationError,
)
from .estimate import EstimationResult, estimate_pvar, estimate_var, estimate_vhar
from .metrics import discrepancy_matrix, hierarchical_order
from .simulate import TimeSeriesPanel, simulate
from .spectral import (
    cocluster_matrices,
    path_tuple,
    resolve_K,
    seasonal_matrices,
    select_rank,
)
from .transition import TransitionSet, stabilize

log = logging.getLogger("scbmvar")

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


# ---------------------------------------------------------------- transforms


def aggregate(data: np.ndarray, k: int, mean: bool = False) -> np.ndarray:
    """Non-overlapping sums (or means) of ``k`` consecutive rows; an incomplete tail is dropped."""
    if k < 1:
        raise ConfigError("aggregate: k must be positive")
    n = data.shape[0] // k
    if n == 0:
        raise ConfigError(f"aggregate: fewer than {k} rows")
    blocks = data[: n * k].reshape(n, k, data.shape[1])
    return blocks.mean(axis=1) if mean else blocks.sum(axis=1)


def apply_transforms(panel: TimeSeriesPanel, chain: Sequence, agg_mean: bool = False) -> TimeSeriesPanel:
    """Apply ``chain`` in order.

    Steps are ``"log"``, ``"diff"``, ``"center"`` or ``{"aggregate": k}``.
    ``first_season`` of the input refers to the first row after any
    aggregation; each difference moves it one season on.
    """
    data = panel.data
    offset = panel.first_season - 1
    for step in chain:
        if isinstance(step, dict) and set(step) == {"aggregate"}:
            data = aggregate(data, int(step["aggregate"]), agg_mean)
        elif step == "log":
            if np.any(data <= 0):
                bad = int(np.argmax(np.any(data <= 0, axis=0)))
                raise ConfigError(f"log transform: column {panel.labels[bad]!r} has non-positive values")
            data = np.log(data)
        elif step == "diff":
            data = np.diff(data, axis=0)
            offset += 1
        elif step == "center":
            data = data - data.mean(axis=0)
        else:
            raise ConfigError(f"transforms: unknown step {step!r}")
        if data.shape[0] < 2:
            raise ConfigError("transforms: series too short")
    s = panel.season_count
    return TimeSeriesPanel(data, s, panel.labels, offset % s + 1)


# ---------------------------------------------------------------- configs


@dataclass
class AnalysisConfig:
    """Real-data pipeline settings.

    ``K`` is either ``null`` (scree ranks at ``threshold``), a list of season
    ranks, or ``{"K_y": [...], "K_z": [...]}``.  ``alpha`` is a number or
    ``"cv"``.
    """

    input: str = ""
    model: str = "pvar"
    seasons: int = 4
    lags: Union[int, List[int]] = 1
    transforms: List = field(default_factory=list)
    first_season: int = 1
    K: Optional[Union[List[int], dict]] = None
    threshold: float = 0.7
    alpha: Union[float, str] = "cv"
    folds: int = 5
    cv_complement: bool = False
    agg_mean: bool = False
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not self.input:
            raise ConfigError("input: a CSV path is required")
        if self.model not in ("var", "pvar", "vhar"):
            raise ConfigError(f"model: expected var, pvar or vhar, got {self.model!r}")
        if self.model == "pvar" and self.seasons < 2:
            raise ConfigError("seasons: a periodic model needs at least 2 seasons")
        if not (self.alpha == "cv" or isinstance(self.alpha, (int, float))):
            raise ConfigError(f"alpha: expected a number or 'cv', got {self.alpha!r}")
        if not 0 < self.threshold <= 1:
            raise ConfigError("threshold must lie in (0, 1]")
        if self.folds < 2:
            raise ConfigError("folds must be at least 2")

    @property
    def season_count(self) -> int:
        return self.seasons if self.model == "pvar" else 1


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n")


def _apply_overrides(d: dict, args, keys: Sequence[str]) -> dict:
    d = dict(d)
    if "seed" in keys and args.seed is not None:
        d["seed"] = args.seed
    if "alpha" in keys and args.alpha is not None:
        d["alpha"] = args.alpha if args.alpha == "cv" else _parse_alpha(args.alpha)
    if "folds" in keys and args.folds is not None:
        d["folds"] = args.folds
    if "threshold" in keys and args.threshold is not None:
        d["threshold"] = args.threshold
    if "agg_mean" in keys and args.agg_mean:
        d["agg_mean"] = True
    if "cv_complement" in keys and args.cv_complement:
        d["cv_complement"] = True
    return d


def _parse_alpha(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"--alpha: expected a number or 'cv', got {text!r}") from None


# ---------------------------------------------------------------- pipeline pieces


def load_panel(cfg: AnalysisConfig) -> TimeSeriesPanel:
    try:
        raw = TimeSeriesPanel.from_csv(cfg.input, cfg.season_count, cfg.first_season)
    except FileNotFoundError:
        raise ConfigError(f"input: {cfg.input} not found") from None
    except ValueError as exc:
        raise ConfigError(f"input: {exc}") from None
    return apply_transforms(raw, cfg.transforms, cfg.agg_mean)


def estimate_panel(panel: TimeSeriesPanel, cfg: AnalysisConfig) -> EstimationResult:
    if cfg.model == "vhar":
        return estimate_vhar(panel)
    if cfg.model == "var":
        return estimate_var(panel, int(cfg.lags))
    return estimate_pvar(panel, cfg.seasons, cfg.lags)


def rank_report(mats: Sequence[np.ndarray], cfg: AnalysisConfig, kind: str) -> dict:
    values = [np.linalg.svd(M, compute_uv=False) for M in mats]
    if isinstance(cfg.K, dict):
        K_y, K_z = list(cfg.K["K_y"]), list(cfg.K["K_z"])
        ranks = None
    else:
        ranks = list(cfg.K) if cfg.K is not None else [select_rank(v, cfg.threshold) for v in values]
        if len(ranks) != len(mats):
            raise ConfigError(f"K: expected {len(mats)} season ranks, got {len(ranks)}")
        if kind == "var":
            K_y, K_z = [ranks[0]], [ranks[0]]
        else:
            K_y, K_z = resolve_K(kind, ranks)
    return {
        "threshold": cfg.threshold,
        "singular_values": [v.tolist() for v in values],
        "season_ranks": ranks,
        "K_y": K_y,
        "K_z": K_z,
        "configuration": path_tuple(K_y, K_z),
    }


# ---------------------------------------------------------------- commands


def cmd_simulate(args) -> int:
    d = _apply_overrides(_load_json(args.config), args, ["seed"])
    d.setdefault("replications", 1)
    cfg = BenchConfig.from_dict(d)
    out = _out_dir(args)
    graph_rng, sim_rng = (np.random.default_rng(c) for c in np.random.SeedSequence(cfg.seed).spawn(2))
    graphs = build_specs(cfg, graph_rng)
    graphs.resample(graph_rng)
    stab = stabilize(graphs, PHI0[cfg.model], cfg.rho_target, cfg.shrink, graph_rng, kind=cfg.model)
    panel = simulate(stab.transitions, cfg.T, cfg.burn_in, sim_rng)
    panel.to_csv(out / "panel.csv")
    (out / "truth.json").write_text(truth_path(graphs, cfg.model).to_json() + "\n")
    _write_json(out / "transitions.json", stab.transitions.to_dict())
    _write_json(
        out / "specs.json",
        {"phi": stab.phi, "resamples": stab.resamples, "radius": stab.radius,
         "seasons": [s.to_dict() for s in graphs.specs]},
    )
    print(f"wrote {out / 'panel.csv'} ({panel.T} x {panel.q}), phi={stab.phi:.4g}")
    return 0


def cmd_estimate(args) -> int:
    cfg = AnalysisConfig.from_dict(_apply_overrides(_load_json(args.config), args, ["agg_mean"]))
    panel = load_panel(cfg)
    est = estimate_panel(panel, cfg)
    out = _out_dir(args)
    _write_json(out / "estimate.json", est.to_dict())
    print(f"wrote {out / 'estimate.json'}")
    return 0


def _transitions_from_config(d: dict) -> TransitionSet:
    if "transitions" in d:
        src = d["transitions"]
        t = src if isinstance(src, dict) else _load_json(src)
        try:
            return TransitionSet.from_dict(t)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"transitions: {exc}") from None
    raise ConfigError("transitions: a path or inline transition set is required")


def _cluster_settings(d: dict, t: TransitionSet):
    kind = t.kind
    mats = seasonal_matrices(t)
    if "K_y" in d and "K_z" in d:
        K_y, K_z = list(d["K_y"]), list(d["K_z"])
    elif "K" in d:
        K_y, K_z = ([d["K"][0]], [d["K"][0]]) if kind == "var" else resolve_K(kind, d["K"])
    else:
        raise ConfigError("K: give 'K' (season ranks) or both 'K_y' and 'K_z'")
    return kind, mats, K_y, K_z


def cmd_cluster(args) -> int:
    d = _apply_overrides(_load_json(args.config), args, ["seed", "alpha", "folds", "cv_complement"])
    t = _transitions_from_config(d)
    kind, mats, K_y, K_z = _cluster_settings(d, t)
    rng = np.random.default_rng(d.get("seed", 0))
    out = _out_dir(args)
    alpha = d.get("alpha", 0.0)
    if alpha == "cv":
        report = select_alpha(mats, kind, K_y, K_z, d.get("folds", 5), rng=rng,
                              complement=d.get("cv_complement", False))
        (out / "cv_report.json").write_text(report.to_json() + "\n")
        alpha = report.alpha
    path = cocluster_matrices(mats, kind, K_y, K_z, float(alpha), rng)
    (out / "community_path.json").write_text(path.to_json() + "\n")
    print(f"wrote {out / 'community_path.json'} (alpha={float(alpha):.6g})")
    return 0


def cmd_cv(args) -> int:
    d = _apply_overrides(_load_json(args.config), args, ["seed", "folds", "cv_complement"])
    t = _transitions_from_config(d)
    kind, mats, K_y, K_z = _cluster_settings(d, t)
    rng = np.random.default_rng(d.get("seed", 0))
    report = select_alpha(mats, kind, K_y, K_z, d.get("folds", 5), make_alpha_grid(), rng,
                          d.get("cv_complement", False))
    out = _out_dir(args)
    (out / "cv_report.json").write_text(report.to_json() + "\n")
    print(f"selected alpha {report.alpha:.6g}")
    return 0


def cmd_analyze(args) -> int:
    keys = ["seed", "alpha", "folds", "threshold", "agg_mean", "cv_complement"]
    cfg = AnalysisConfig.from_dict(_apply_overrides(_load_json(args.config), args, keys))
    panel = load_panel(cfg)
    est = estimate_panel(panel, cfg)
    kind = est.transitions.kind
    mats = seasonal_matrices(est.transitions)
    ranks = rank_report(mats, cfg, kind)
    K_y, K_z = ranks["K_y"], ranks["K_z"]
    out = _out_dir(args)
    rng = np.random.default_rng(cfg.seed)
    alpha = cfg.alpha
    if alpha == "cv":
        report = select_alpha(mats, kind, K_y, K_z, cfg.folds, rng=rng, complement=cfg.cv_complement)
        (out / "cv_report.json").write_text(report.to_json() + "\n")
        alpha = report.alpha
    ranks["alpha"] = float(alpha)
    path = cocluster_matrices(mats, kind, K_y, K_z, float(alpha), rng)
    same, disc = discrepancy_matrix(path.labels)
    order = hierarchical_order(same)
    _write_json(out / "ranks.json", ranks)
    (out / "community_path.json").write_text(path.to_json() + "\n")
    _write_json(out / "estimate.json", est.to_dict())
    _write_matrix(out / "discrepancy.csv", disc, panel.labels)
    _write_matrix(out / "cocluster_counts.csv", same, panel.labels)
    _write_json(out / "order.json", {"order": [panel.labels[i] for i in order],
                                      "index": [int(i) + 1 for i in order]})
    print(f"configuration {tuple(ranks['configuration'])}, alpha={float(alpha):.6g}; outputs in {out}")
    return 0


def _write_matrix(path: Path, M: np.ndarray, labels: Sequence[str]) -> None:
    lines = ["," + ",".join(labels)]
    for name, row in zip(labels, M):
        lines.append(name + "," + ",".join(str(int(x)) for x in row))
    path.write_text("\n".join(lines) + "\n")


def _expand_grid(d: dict) -> List[BenchConfig]:
    """A cell dict, a list of cell dicts, or ``{"cells": [...]}``; list-valued
    fields among model/path/type/q/T expand into their product."""
    if isinstance(d, list):
        return [c for x in d for c in _expand_grid(x)]
    if "cells" in d:
        base = {k: v for k, v in d.items() if k != "cells"}
        return [c for x in d["cells"] for c in _expand_grid({**base, **x})]
    cells = [{}]
    for key in ("model", "path", "type", "q", "T"):
        if isinstance(d.get(key), list):
            cells = [{**c, key: v} for c in cells for v in d[key]]
    return [BenchConfig.from_dict({**d, **c}) for c in cells]


def cmd_bench(args) -> int:
    raw = _load_json(args.config)
    if isinstance(raw, dict):
        raw = _apply_overrides(raw, args, ["seed", "folds", "cv_complement"])
        if args.alpha is not None:
            raw["smoothing"] = "both" if args.alpha == "cv" else "none"
    cfgs = _expand_grid(raw)
    out = _out_dir(args)
    rows = run_grid(cfgs, out / "results.csv", progress=lambda msg: print(msg, flush=True))
    print(f"{len(rows)} new cell(s) written to {out / 'results.csv'}")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "bench": cmd_bench,
    "cv": cmd_cv,
    "estimate": cmd_estimate,
    "cluster": cmd_cluster,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scbmvar", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON configuration file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--alpha", default=None, help="smoothing parameter or 'cv'")
    p.add_argument("--folds", type=int, default=None, help="cross-validation folds")
    p.add_argument("--threshold", type=float, default=None, help="scree threshold")
    p.add_argument("--agg-mean", action="store_true", help="aggregate by means instead of sums")
    p.add_argument("--cv-complement", action="store_true", help="hold out the fold instead of keeping it")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, InvalidSpecError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularDesignError, StabilizationError, DivergenceError, NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
