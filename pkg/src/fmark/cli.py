"""Command line interface: simulate, estimate, envelope, report.

All subcommands read a flat key = value config file plus overriding
flags; every run writes a manifest capturing the effective configuration
and the master seed, so outputs are reproducible byte for byte.  Exit
codes: 0 success, 2 validation or schema error, 1 internal error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .dataio import (
    AnalysisConfig,
    CONFIG_KEYS,
    load_pattern,
    parse_config_file,
    read_curve_csv,
    write_marks_csv,
    write_pattern_csv,
    write_results,
)
from .envelopes import csr_envelope, parse_statistic, random_label_envelope
from .errors import DomainError, SchemaError
from .estimators import (
    GROUND_STATISTICS,
    SummaryCurve,
    mark_characteristic,
    mark_weighted_k,
    mark_weighted_pcf,
)
from .kernels import EstimationConfig
from .patterns import DistanceGrid
from .simulate import GrowthParams, SimulationSpec, simulate_growth_marks, simulate_pattern


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fmark",
        description="Summary characteristics and envelope tests for point "
                    "patterns with function-valued marks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("simulate", "draw a point pattern plus growth marks and write CSVs"),
        ("estimate", "compute summary statistics and write curve CSVs"),
        ("envelope", "compute Monte-Carlo envelopes and write band CSVs"),
        ("report", "summarise the outputs of a previous run"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="flat key = value configuration file")
        for key in CONFIG_KEYS:
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None)
    return parser


def _load_config(args) -> AnalysisConfig:
    file_values = parse_config_file(args.config) if args.config else {}
    overrides = {key: getattr(args, key) for key in CONFIG_KEYS if getattr(args, key) is not None}
    return AnalysisConfig.from_sources(file_values, overrides)


def _simulation_spec(cfg: AnalysisConfig, seed) -> SimulationSpec:
    return SimulationSpec(
        process=cfg.process,
        window=cfg.resolved_window(),
        seed=seed,
        intensity=cfg.intensity,
        parent_intensity=cfg.parent_intensity,
        offspring_mean=cfg.offspring_mean,
        offspring_sigma=cfg.offspring_sigma,
        target_n=cfg.target_n,
        beta=cfg.beta,
        q=cfg.q,
        interaction_radius=cfg.interaction_radius,
        mcmc_steps=cfg.mcmc_steps,
    )


def _growth_params(cfg: AnalysisConfig) -> GrowthParams:
    return GrowthParams(
        capacity_h=cfg.capacity_h,
        capacity_l=cfg.capacity_l,
        rate_h=cfg.rate_h,
        rate_l=cfg.rate_l,
        interaction_distance=cfg.interaction_distance,
        interaction=cfg.growth_c,
        mode=cfg.growth_mode,
        dt=cfg.dt,
        steps=cfg.steps,
        init_value=cfg.init_value,
        init_rule=cfg.init_rule,
    )


def _estimation_config(cfg: AnalysisConfig, window) -> EstimationConfig:
    grid = None
    if cfg.r_max is not None:
        r_max = cfg.r_max
        grid = DistanceGrid(np.linspace(r_max / cfg.r_count, r_max, cfg.r_count))
    return EstimationConfig(kernel=cfg.kernel, bandwidth=cfg.bandwidth,
                            edge_rule=cfg.edge_rule, grid=grid,
                            time_lag=cfg.time_lag)


def _materialise(cfg: AnalysisConfig):
    """Produce (pattern, marks, input paths) from files or simulation."""
    cfg.validate_source()
    if cfg.pattern is not None:
        marks_paths = [p.strip() for p in (cfg.marks or "").split(",") if p.strip()]
        if not marks_paths:
            raise DomainError("configured input files need a marks path list")
        pattern, marks = load_pattern(cfg.pattern, marks_paths, cfg.resolved_window())
        return pattern, marks, [cfg.pattern, *marks_paths]
    pattern = simulate_pattern(_simulation_spec(cfg, (cfg.seed, 0)))
    marks = simulate_growth_marks(pattern, _growth_params(cfg), seed=(cfg.seed, 1))
    return pattern, marks, []


def _cmd_simulate(cfg: AnalysisConfig) -> int:
    if cfg.process is None:
        raise DomainError("simulate needs a process (poisson, thomas, or strauss)")
    pattern = simulate_pattern(_simulation_spec(cfg, (cfg.seed, 0)))
    marks = simulate_growth_marks(pattern, _growth_params(cfg), seed=(cfg.seed, 1))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_pattern_csv(out / "pattern.csv", pattern)
    for ch in range(1, marks.n_channels + 1):
        write_marks_csv(out / f"marks_{ch}.csv", marks, ch)
    write_results([], out, config=cfg.as_dict(), seed=cfg.seed)
    print(f"wrote pattern.csv and {marks.n_channels} marks files to {out}")
    return 0


def _compute_statistic(token: str, pattern, marks, est_cfg) -> SummaryCurve:
    req = parse_statistic(token)
    if req.kind in GROUND_STATISTICS:
        if req.kind == "pcf":
            return mark_weighted_pcf(pattern, None, cfg=est_cfg)
        return mark_weighted_k(pattern, None, cfg=est_cfg)[0]
    if req.kind.startswith("weighted_k_"):
        return mark_weighted_k(pattern, marks, req.h, req.l,
                               weight=req.kind.removeprefix("weighted_k_"), cfg=est_cfg)[0]
    if req.kind.startswith("weighted_l_"):
        return mark_weighted_k(pattern, marks, req.h, req.l,
                               weight=req.kind.removeprefix("weighted_l_"), cfg=est_cfg)[1]
    if req.kind.startswith("weighted_pcf_"):
        return mark_weighted_pcf(pattern, marks, req.h, req.l,
                                 weight=req.kind.removeprefix("weighted_pcf_"), cfg=est_cfg)
    return mark_characteristic(pattern, marks, req.kind, req.h, req.l, cfg=est_cfg)


def _cmd_estimate(cfg: AnalysisConfig) -> int:
    tokens = cfg.statistic_tokens()
    if not tokens:
        raise DomainError("estimate needs a nonempty statistics list")
    pattern, marks, inputs = _materialise(cfg)
    est_cfg = _estimation_config(cfg, pattern.window)
    curves = [_compute_statistic(tok, pattern, marks, est_cfg) for tok in tokens]
    paths = write_results(curves, cfg.out, config=cfg.as_dict(), seed=cfg.seed, inputs=inputs)
    print(f"wrote {len(paths) - 1} curve files to {cfg.out}")
    return 0


def _cmd_envelope(cfg: AnalysisConfig) -> int:
    tokens = cfg.statistic_tokens()
    if not tokens:
        raise DomainError("envelope needs a nonempty statistics list")
    if cfg.null not in ("random_labeling", "csr"):
        raise DomainError(f"unknown null {cfg.null!r}; use random_labeling or csr")
    pattern, marks, inputs = _materialise(cfg)
    est_cfg = _estimation_config(cfg, pattern.window)
    if cfg.null == "csr":
        bands = [csr_envelope(pattern, tok, nsim=cfg.nsim, k_env=cfg.rank,
                              seed=(cfg.seed, 2), cfg=est_cfg) for tok in tokens]
    else:
        bands = random_label_envelope(pattern, marks, tokens, nsim=cfg.nsim,
                                      k_env=cfg.rank, seed=(cfg.seed, 2), cfg=est_cfg)
    paths = write_results(bands, cfg.out, config=cfg.as_dict(), seed=cfg.seed, inputs=inputs)
    print(f"wrote {len(paths) - 1} envelope files to {cfg.out}")
    return 0


def _cmd_report(cfg: AnalysisConfig) -> int:
    out = Path(cfg.out)
    manifest = out / "manifest.json"
    if not manifest.exists():
        raise SchemaError(f"no manifest.json in {out}")
    import json

    info = json.loads(manifest.read_text())
    print(f"fmark {info.get('version')} run, seed {info.get('seed')}")
    print(f"{'file':40s} {'rows':>5s} {'defined':>8s} {'min':>12s} {'max':>12s} {'outside':>8s}")
    for name in info.get("outputs", []):
        data = read_curve_csv(out / name)
        obs = data["observed"]
        defined = np.isfinite(obs)
        outside = ""
        if "lower" in data:
            ok = defined & np.isfinite(data["lower"])
            n_out = int(((obs[ok] < data["lower"][ok]) | (obs[ok] > data["upper"][ok])).sum())
            outside = f"{n_out}/{int(ok.sum())}"
        vmin = np.nanmin(obs) if defined.any() else float("nan")
        vmax = np.nanmax(obs) if defined.any() else float("nan")
        print(f"{name:40s} {len(obs):5d} {int(defined.sum()):8d} {vmin:12.5g} {vmax:12.5g} {outside:>8s}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "envelope": _cmd_envelope,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        return _COMMANDS[args.command](cfg)
    except (DomainError, SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - internal failures
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
