"""Command-line entry point.

    swipt-ps compare --preset h1 --out results/
    swipt-ps solve --preset h2 --psi 0.8
    swipt-ps region --config experiment.yaml --psi-points 41 --format both --out results/

Set ``SWIPT_PS_LOG`` (e.g. ``DEBUG``) to change log verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .algorithm import (
    RegionPoint,
    as_region,
    multichain_region,
    oracle_frontier,
    psi_grid,
    solve_single,
    sweep_region,
)
from .config import ConfigError, ExperimentConfig, config_from_dict, parse_config, preset_config
from .model import InvalidParametersError, constraint_rate, max_energy, max_rate
from .report import RegionReport, to_csv, to_json, to_svg

log = logging.getLogger("swipt_ps")

COMMANDS = ("region", "solve", "oracle", "as-baseline", "multichain", "compare")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swipt-ps",
        description="Rate-energy region of a multi-antenna power-splitting receiver.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    src = parser.add_mutually_exclusive_group()
    src.add_argument("--config", type=Path, help="YAML/JSON experiment file")
    src.add_argument("--preset", choices=("h1", "h2", "h3", "h4"),
                     help="bundled channel (default h1)")
    parser.add_argument("--psi", type=float, help="rate demand in bits (solve)")
    parser.add_argument("--psi-points", type=int, help="number of evenly spaced demands")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", type=Path, help="output directory (default: CSV to stdout)")
    parser.add_argument("--format", choices=("csv", "json", "both"))
    parser.add_argument("--plot", type=Path, help="write an SVG of the boundaries")
    parser.add_argument("--oracle-delta", type=float, help="grid step of the exhaustive search")
    return parser


def load_config(args) -> ExperimentConfig:
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(str(args.config), exc.strerror or "cannot read") from None
        cfg = parse_config(text)
    else:
        cfg = preset_config(args.preset or "h1")
    doc = cfg.to_dict()
    if args.psi_points is not None:
        doc["psi_points"] = args.psi_points
    if args.seed is not None:
        doc["algo"]["seed"] = args.seed
    if args.oracle_delta is not None:
        doc["baselines"]["oracle_delta"] = args.oracle_delta
    if args.format is not None:
        doc["output"]["format"] = args.format
    if args.out is not None:
        doc["output"]["dir"] = str(args.out)
    if args.plot is not None:
        doc["output"]["plot"] = str(args.plot)
    return config_from_dict(doc)


def _demands(cfg: ExperimentConfig, ch, p) -> np.ndarray:
    if isinstance(cfg.psi_points, list):
        top = max_rate(ch, p, np.ones(ch.K))
        bad = [v for v in cfg.psi_points if v > top * (1 + 1e-12)]
        if bad:
            raise ConfigError("psi_points", f"demand {bad[0]} exceeds the all-ID rate {top:.9g}")
        return np.array(cfg.psi_points, dtype=float)
    return psi_grid(ch, p, cfg.psi_points)


def _as_rows(ch, p) -> list[RegionPoint]:
    region = as_region(ch, p)
    rows = []
    for lam in region.lambdas:
        rows.append(RegionPoint(psi=float(max_rate(ch, p, lam)), rate_exact=float(max_rate(ch, p, lam)),
                                rate_constraint=float(constraint_rate(ch, p, lam)),
                                energy=float(max_energy(ch, p, lam)), lam=lam.copy(), method="as"))
    for rate, energy in region.hull:
        k = int(np.flatnonzero((region.points[:, 0] == rate) & (region.points[:, 1] == energy))[0])
        lam = region.lambdas[k]
        rows.append(RegionPoint(psi=float(rate), rate_exact=float(rate),
                                rate_constraint=float(constraint_rate(ch, p, lam)),
                                energy=float(energy), lam=lam.copy(), method="as-hull"))
    return rows


def run(command: str, cfg: ExperimentConfig, psi: float | None = None) -> RegionReport:
    """Compute the rows of ``command`` for ``cfg`` without writing anything."""
    ch = cfg.channel_realization()
    p = cfg.system_params()
    algo = cfg.algo_config()
    rows: list[RegionPoint] = []
    if command == "solve":
        if psi is None:
            raise ConfigError("--psi", "required for solve")
        rows.append(solve_single(ch, p, psi, algo))
    else:
        demands = _demands(cfg, ch, p)
        delta = cfg.oracle_delta()
        if command in ("region", "compare"):
            rows += sweep_region(ch, p, demands, algo)
        if command == "oracle" or (command == "compare" and cfg.baselines["oracle"]):
            rows += oracle_frontier(ch, p, demands, delta)
        if command == "as-baseline" or (command == "compare" and cfg.baselines["as"]):
            rows += _as_rows(ch, p)
        if command == "multichain" or (command == "compare" and cfg.baselines["multichain"]):
            rows += multichain_region(ch, p, demands, delta)
    metadata = {
        "tool": "swipt-ps",
        "version": __version__,
        "command": command,
        "psi": psi,
        "seed": cfg.algo["seed"],
        "oracle_delta": cfg.oracle_delta(),
        "config": cfg.to_dict(),
    }
    return RegionReport(metadata, rows)


def write_outputs(command: str, report: RegionReport, cfg: ExperimentConfig, stdout=None) -> list[Path]:
    stdout = stdout or sys.stdout
    fmt = cfg.output["format"]
    out_dir = cfg.output["dir"]
    written = []
    if out_dir is None:
        stdout.write(to_json(report) if fmt == "json" else to_csv(report))
    else:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if fmt in ("csv", "both"):
            written.append(out / f"{command}.csv")
            written[-1].write_text(to_csv(report), encoding="utf-8", newline="\n")
        if fmt in ("json", "both"):
            written.append(out / f"{command}.json")
            written[-1].write_text(to_json(report), encoding="utf-8", newline="\n")
    plot = cfg.output["plot"]
    if plot is None and command == "compare" and out_dir is not None:
        plot = str(Path(out_dir) / "compare.svg")
    if plot is not None:
        Path(plot).parent.mkdir(parents=True, exist_ok=True)
        Path(plot).write_text(to_svg(report), encoding="utf-8", newline="\n")
        written.append(Path(plot))
    return written


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("SWIPT_PS_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        report = run(args.command, cfg, psi=args.psi)
    except (ConfigError, InvalidParametersError) as exc:
        print(f"swipt-ps: configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        for path in write_outputs(args.command, report, cfg):
            log.info("wrote %s", path)
    except OSError as exc:
        print(f"swipt-ps: cannot write output: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
