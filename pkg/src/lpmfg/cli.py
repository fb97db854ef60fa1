"""Command line interface for running experiments and deterministic baselines."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import config as cfg
from .reporting import deterministic_baseline, emit, max_path, min_path, run_experiment

EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lpmfg",
        description=(
            "Solve the two-population electricity-market mean-field game "
            "(conventional exit vs. renewable entry under carbon-price uncertainty)."
        ),
    )
    parser.add_argument("--config", type=Path, help="JSON configuration file")
    parser.add_argument(
        "--setting",
        choices=["1", "2", "custom"],
        default="2",
        help="preset scenario structure; 'custom' requires --config",
    )
    parser.add_argument("--iters", type=int, help="fictitious play iterations")
    parser.add_argument(
        "--deterministic-path",
        help="run the single-path baseline: 'min', 'max', or a CSV file of carbon levels",
    )
    parser.add_argument("--out", type=Path, default=Path("runs"), help="output directory")
    parser.add_argument("--solver", choices=["dp", "lp"], help="best-response route")
    parser.add_argument("--seed", type=int, help="seed recorded in the configuration")
    parser.add_argument(
        "--relative-exploitability",
        action="store_true",
        help="also emit exploitability normalized by the absolute own value",
    )
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    return parser


def _resolve_config(args: argparse.Namespace) -> cfg.RunConfig:
    if args.setting == "custom":
        if args.config is None:
            raise ValueError("--setting custom requires --config")
        run_config = cfg.load_config(str(args.config))
    elif args.config is not None:
        run_config = cfg.load_config(str(args.config))
    elif args.setting == "1":
        run_config = cfg.setting1()
    else:
        run_config = cfg.setting2()
    overrides = {}
    if args.iters is not None:
        overrides["n_iterations"] = args.iters
    if args.solver is not None:
        overrides["solver"] = args.solver
    if args.seed is not None:
        overrides["seed"] = args.seed
    overrides["output_dir"] = str(args.out)
    return replace(run_config, **overrides)


def _resolve_path(spec: str, run_config: cfg.RunConfig) -> tuple[float, ...]:
    if spec == "min":
        return min_path(run_config)
    if spec == "max":
        return max_path(run_config)
    text = Path(spec).read_text(encoding="utf-8")
    levels = [float(tok) for tok in text.replace(",", " ").split()]
    return tuple(levels)


def _emit_relative(report, directory: Path) -> None:
    rows = []
    for i, (eps, gamma) in enumerate(zip(report.exploitability, report.gammas)):
        rows.append(
            (
                i,
                repr(eps[0] / max(1.0, abs(gamma[0]))),
                repr(eps[1] / max(1.0, abs(gamma[1]))),
            )
        )
    path = directory / "exploitability_relative.csv"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("iter,eps_c_rel,eps_r_rel\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run_config = _resolve_config(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.deterministic_path:
            path = _resolve_path(args.deterministic_path, run_config)
            report = deterministic_baseline(run_config, path, verbose=args.verbose)
        else:
            report = run_experiment(run_config, verbose=args.verbose)
    except (ValueError, RuntimeError) as exc:
        print(f"error[solver]: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    try:
        paths = emit(report, args.out)
        if args.relative_exploitability:
            _emit_relative(report, Path(args.out))
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return EXIT_IO
    eps_c, eps_r = report.exploitability[-1]
    print(f"wrote {len(paths)} files to {args.out}")
    print(
        f"iterations={report.metadata['iterations']} "
        f"final exploitability: conventional={eps_c:.6g} renewable={eps_r:.6g}"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
