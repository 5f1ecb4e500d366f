"""Command-line entry point: ``hjdp solve-pde | solve-ttr | value-iter | export``.

Exit codes: 0 success, 1 invalid input (config, arguments, files),
2 numerical failure (divergence, NaN/Inf, non-convergence).
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from .config import ConfigError, ProblemConfig, build_model, build_target, load_config
from .formats import FormatError, export_csv_slice, export_vtk, read_field, write_field
from .grid import build_grid
from .hj_solver import NumericalError, solve_pde
from .mdp import MdpProblem, dynamics_transition, extract_policy, value_iteration
from .numerics import SCHEMES
from .ttr_solver import ConvergenceWarning, solve_ttr

logger = logging.getLogger("hjdp")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


def _parse_slice(text: str | None) -> dict[int, int]:
    if not text:
        return {}
    fixed = {}
    for part in text.split(","):
        d, sep, i = part.partition("=")
        if not sep:
            raise ValueError(f"bad slice entry {part!r}, expected d=i")
        try:
            fixed[int(d)] = int(i)
        except ValueError:
            raise ValueError(f"bad slice entry {part!r}, expected integers d=i") from None
    return fixed


def _outputs(cfg: ProblemConfig, axes, data: np.ndarray, stem: str, t: float, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in cfg.output.formats:
        if fmt == "field":
            path = out_dir / f"{stem}.hjf"
            write_field(path, cfg.grid, data, t)
        elif fmt == "vtk":
            path = out_dir / f"{stem}.vtk"
            export_vtk(data, axes, path, cfg.output.slice)
        else:
            path = out_dir / f"{stem}.csv"
            export_csv_slice(data, axes, path, cfg.output.slice)
        written.append(path)
    return written


def _out_dir(cfg: ProblemConfig, override: str | None) -> Path:
    return Path(override if override is not None else cfg.output.path)


def cmd_solve_pde(args) -> int:
    cfg = load_config(args.config)
    if cfg.solver != "pde":
        raise ConfigError("$", f"solve-pde needs a 'pde' block, config has '{cfg.solver}'")
    opts = cfg.pde
    if args.scheme is not None:
        opts.scheme = args.scheme
    if args.threads is not None:
        opts.workers = args.threads
    if args.save_every is not None:
        opts.save_every = args.save_every
    opts.validate()
    axes = build_grid(cfg.grid)
    model = build_model(cfg.dynamics)
    initial = build_target(cfg.target, axes)
    start = time.perf_counter()
    fields = solve_pde(initial, axes, model, opts, overwrite_initial=True)
    logger.info("solved in %.2f s", time.perf_counter() - start)
    out_dir = _out_dir(cfg, args.output)
    for k, f in enumerate(fields):
        stem = "value" if k == len(fields) - 1 else f"value_{k:04d}"
        for p in _outputs(cfg, axes, f.data, stem, f.time, out_dir):
            print(f"wrote {p} (t={f.time:g})")
    return EXIT_OK


def cmd_solve_ttr(args) -> int:
    cfg = load_config(args.config)
    if cfg.solver != "ttr":
        raise ConfigError("$", f"solve-ttr needs a 'ttr' block, config has '{cfg.solver}'")
    opts = cfg.ttr
    if args.epsilon is not None:
        opts.epsilon = args.epsilon
    if args.max_sweeps is not None:
        opts.max_sweeps = args.max_sweeps
    opts.validate()
    axes = build_grid(cfg.grid)
    model = build_model(cfg.dynamics)
    target = build_target(cfg.target, axes)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        result = solve_ttr(target, axes, model, opts)
    for p in _outputs(cfg, axes, result.field.data, "ttr", 0.0, _out_dir(cfg, args.output)):
        print(f"wrote {p}")
    print(f"sweeps={result.sweeps} max_change={result.max_change:.3g} converged={result.converged}")
    if not result.converged:
        print(f"error: no convergence within {opts.max_sweeps} sweeps", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _mdp_problem(cfg: ProblemConfig, axes) -> MdpProblem:
    m = cfg.mdp
    model = build_model(cfg.dynamics)
    transition = dynamics_transition(model, m.timestep, m.successors)
    if "table" in m.reward:
        table = np.asarray(m.reward["table"], dtype=float)
        if table.size != axes.size:
            table = table.reshape(axes.size, len(m.actions))
        reward = table
    elif m.reward["kind"] == "zero":
        reward = np.zeros(axes.size)
    else:
        reward = (build_target(cfg.target, axes).reshape(-1) <= 0).astype(float)
    return MdpProblem(
        axes,
        np.asarray(m.actions, dtype=float),
        transition,
        reward,
        discount=m.discount,
        threshold=m.threshold,
        max_iterations=m.max_iterations,
        mode=m.mode,
    )


def cmd_value_iter(args) -> int:
    cfg = load_config(args.config)
    if cfg.solver != "mdp":
        raise ConfigError("$", f"value-iter needs an 'mdp' block, config has '{cfg.solver}'")
    axes = build_grid(cfg.grid)
    problem = _mdp_problem(cfg, axes)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        result = value_iteration(problem)
    policy = extract_policy(result.values, problem).astype(float)
    out_dir = _out_dir(cfg, args.output)
    for stem, data in (("values", result.values), ("policy", policy)):
        for p in _outputs(cfg, axes, data, stem, 0.0, out_dir):
            print(f"wrote {p}")
    print(f"iterations={result.iterations} delta={result.final_delta:.3g} converged={result.converged}")
    if not result.converged:
        print(f"error: no convergence within {problem.max_iterations} iterations", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_export(args) -> int:
    container = read_field(args.input)
    axes = build_grid(container.spec)
    fixed = _parse_slice(args.slice)
    out = Path(args.output) if args.output else Path(args.input).with_suffix("." + args.format)
    if args.format == "vtk":
        export_vtk(container.data, axes, out, fixed, binary=not args.ascii)
    else:
        export_csv_slice(container.data, axes, out, fixed)
    print(f"wrote {out}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors: exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hjdp", description="Grid-based dynamic programming solvers.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-pde", help="backward reachable set/tube via the time-dependent HJ PDE")
    p.add_argument("--config", required=True)
    p.add_argument("--output", help="output directory (overrides output.path)")
    p.add_argument("--threads", type=int, help="worker threads (default: all CPUs)")
    p.add_argument("--scheme", choices=SCHEMES)
    p.add_argument("--save-every", type=float, help="checkpoint interval in time units")
    p.set_defaults(func=cmd_solve_pde)

    p = sub.add_parser("solve-ttr", help="time-to-reach function via Lax-Friedrichs sweeping")
    p.add_argument("--config", required=True)
    p.add_argument("--output")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--max-sweeps", type=int)
    p.set_defaults(func=cmd_solve_ttr)

    p = sub.add_parser("value-iter", help="value iteration on a discretised MDP")
    p.add_argument("--config", required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_value_iter)

    p = sub.add_parser("export", help="convert a field container to VTK or CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--format", required=True, choices=("vtk", "csv"))
    p.add_argument("--slice", help="pinned indices, e.g. 2=10,3=0")
    p.add_argument("--output", help="output file (default: input with the format's suffix)")
    p.add_argument("--ascii", action="store_true", help="ASCII VTK payload")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (FormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
