"""Command-line interface.

Commands::

    quadwalk validate MODEL
    quadwalk kernel   MODEL [--qmax N] [--tol T] [--csv OUT]
    quadwalk chains   MODEL --axis x|y [--csv OUT]
    quadwalk simulate MODEL --start I,J [--process Z|Z0|Z1|Z2] --steps N
                      [--reps R] [--seed S] [--hitting NAMES] [--csv OUT]
    quadwalk green    MODEL --source I,J [--targets SPEC]
                      [--method exact|mc|contour] [--csv OUT]
    quadwalk verify   {thm1,thm2,thm3} MODEL [--source I,J] [--csv OUT] [--svg OUT]
    quadwalk spectrum MODEL [--source I,J] [--n-window W] [--csv OUT]

MODEL is a path to a model file or the name of a bundled catalog entry
(``reference``, ``nonsym``, ``symmetric``).  Every CSV carries the model
hash, the seed and the tool version in comment lines, and all output is
byte-reproducible for a fixed (model, seed).

Exit codes: 0 success, 2 validation failure, 3 numeric non-convergence,
4 I/O or usage failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from . import __version__
from . import asymptotics, chains, green, kernel, modelio, simulate, svg
from .errors import (
    BranchLoss,
    FitUnstable,
    NoSecondRoot,
    NotConverged,
    ParseError,
    QuadratureUnstable,
    ResidualFloor,
    ValidationError,
    WindowExplosion,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

_NUMERIC_ERRORS = (
    NoSecondRoot,
    BranchLoss,
    NotConverged,
    WindowExplosion,
    QuadratureUnstable,
    FitUnstable,
    ResidualFloor,
)


@dataclass
class RunConfig:
    """Validated numeric knobs shared by the subcommands."""

    seed: int = 20240601
    qmax: int = 10**6
    tol: float = 1e-12
    window: Optional[int] = None

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("--tol must be positive")
        if self.qmax < 1:
            raise ValueError("--qmax must be >= 1")
        if self.window is not None and self.window < 4:
            raise ValueError("--window must be >= 4")


def _parse_state(text: str) -> Tuple[int, int]:
    try:
        a, b = text.split(",")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'i,j', got {text!r}") from None


def _parse_targets(spec: str) -> List[Tuple[int, int]]:
    try:
        if os.path.exists(spec):
            out = []
            with open(spec, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line or line.startswith("#"):
                        continue
                    out.append(_parse_state(line))
            if not out:
                raise ParseError(f"target file {spec!r} holds no targets")
            return out
        return [_parse_state(part) for part in spec.split(";") if part]
    except argparse.ArgumentTypeError as exc:
        raise ParseError(f"bad target list {spec!r}: {exc}") from None


def _fmt(x) -> str:
    if isinstance(x, float):
        x = float(x)  # numpy scalars repr differently but compare as floats
        if not math.isfinite(x):
            raise ValueError(f"refusing to emit non-finite value {x!r}")
        return repr(x)
    return str(x)


def _write_csv(path: str, header: Dict[str, str], columns: Sequence[str],
               rows: Sequence[Sequence]) -> None:
    lines = [f"# {k}={v}" for k, v in header.items()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _header(model, cfg: RunConfig) -> Dict[str, str]:
    return {
        "quadwalk": __version__,
        "model_sha256": model.canonical_hash(),
        "seed": str(cfg.seed),
    }


def _load(path: str):
    return modelio.load_model(path)


# ---------------------------------------------------------------- commands


def _cmd_validate(args, cfg: RunConfig) -> int:
    try:
        model = modelio.load_model(args.model, validate=False)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_IO
    from .model import validate_model

    report = validate_model(model)
    print(report.as_text())
    return EXIT_OK if report.ok else EXIT_VALIDATION


def _cmd_kernel(args, cfg: RunConfig) -> int:
    model = _load(args.model)
    analysis = kernel.analyze(model, qmax=cfg.qmax, tol=cfg.tol)
    rows = analysis.rows()
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k.ljust(width)}  {v}")
    if args.csv:
        _write_csv(args.csv, _header(model, cfg), ["quantity", "value"], rows)
    return EXIT_OK


def _cmd_chains(args, cfg: RunConfig) -> int:
    model = _load(args.model)
    axis = "x1" if args.axis == "x" else "y2"
    sol = chains.solve_chain(model, axis)
    header = _header(model, cfg)
    header.update(
        {
            "axis": axis,
            "V": _fmt(sol.V),
            "A": _fmt(sol.A),
            "rate": _fmt(sol.tail.rate),
            "residual_l1": _fmt(sol.residual),
        }
    )
    rows = [(k, float(sol.pi[k])) for k in range(sol.L + 1)]
    if args.csv:
        _write_csv(args.csv, header, ["state", "mass"], rows)
    for k, v in header.items():
        print(f"# {k}={v}")
    for k in range(min(sol.L + 1, args.head)):
        print(f"{k},{_fmt(float(sol.pi[k]))}")
    return EXIT_OK


def _cmd_simulate(args, cfg: RunConfig) -> int:
    model = _load(args.model)
    header = _header(model, cfg)
    if args.hitting:
        names = [n for n in args.hitting.split(",") if n]
        params = {}
        if args.hit_k is not None:
            params["k"] = args.hit_k
        if args.hit_l is not None:
            params["l"] = args.hit_l
        report = simulate.hitting_times(
            model, names, args.start, args.reps, args.steps, cfg.seed, params
        )
        columns = ["time", "finite", "censored", "mean", "stderr"]
        rows = [
            (s.name, s.finite, s.censored, s.mean, s.stderr)
            for s in (report[n] for n in names)
        ]
        for r in rows:
            print(",".join(str(v) for v in r))
        if args.csv:
            _write_csv(args.csv, header, columns, rows)
        return EXIT_OK

    path_cfg = simulate.PathConfig(
        model=model,
        start=args.start,
        max_steps=args.steps,
        seed=cfg.seed,
        stream=args.stream,
        kind=args.process,
    )
    rows = [(n, s[0], s[1]) for n, s in enumerate(simulate.simulate_path(path_cfg))]
    if args.csv:
        _write_csv(args.csv, header, ["step", "i", "j"], rows)
    else:
        for n, i, j in rows[: args.head]:
            print(f"{n},{i},{j}")
    return EXIT_OK


def _cmd_green(args, cfg: RunConfig) -> int:
    model = _load(args.model)
    targets = _parse_targets(args.targets) if args.targets else None
    header = _header(model, cfg)
    header["source"] = f"{args.source[0]};{args.source[1]}"
    header["method"] = args.method

    if args.method == "exact":
        table = green.green_exact(
            model, args.source, targets, tol=args.green_tol, min_window=cfg.window
        )
        rows = [(i, j, table.value(i, j), table.gap(i, j)) for (i, j) in table.values]
        columns = ["i", "j", "green", "gap"]
    elif args.method == "mc":
        if not targets:
            raise ParseError("--method mc needs --targets")
        est = green.green_mc(
            model, args.source, targets, max_steps=args.steps, reps=args.reps, seed=cfg.seed
        )
        rows = [
            (i, j, e.mean, e.ci_half, e.censor_bound)
            for (i, j), e in est.items()
        ]
        columns = ["i", "j", "mean", "ci_half", "censor_bound"]
    else:  # contour
        if not targets:
            raise ParseError("--method contour needs --targets")
        analysis = kernel.analyze(model, qmax=cfg.qmax)
        cx = chains.solve_chain(model, "x1", x_root=analysis.x1)
        cy = chains.solve_chain(model, "y2", x_root=analysis.y1)
        table = green.green_exact(model, args.source, targets, tol=args.green_tol,
                                  min_window=cfg.window)
        esc = green.escape_exact(
            model, analysis.t0, sources=[args.source], tol=args.escape_tol
        ).at(*args.source)
        gens = green.GeneratingFunctions(table, model, cx, cy, esc)
        oracle = green.ContourOracle(model, gens)
        rows = [(i, j, oracle.value(i, j)) for (i, j) in targets]
        columns = ["i", "j", "green"]

    for r in rows:
        print(",".join(_fmt(v) for v in r))
    if args.csv:
        _write_csv(args.csv, header, columns, rows)
    return EXIT_OK


def _verify_pipeline(model, source, cfg: RunConfig, green_tol: float, escape_tol: float,
                     probe):
    """Solve everything the verify subcommands share, certifying the Green
    table at the exact targets the check will read."""
    analysis = kernel.analyze(model, qmax=cfg.qmax)
    cx = chains.solve_chain(model, "x1", x_root=analysis.x1)
    cy = chains.solve_chain(model, "y2", x_root=analysis.y1)
    table = green.green_exact(
        model, source, targets=list(probe), tol=green_tol, min_window=cfg.window
    )
    esc = green.escape_exact(
        model, analysis.t0, sources=[source, (0, 0)], tol=escape_tol
    )
    return analysis, cx, cy, table, esc


def _cmd_verify(args, cfg: RunConfig) -> int:
    model = _load(args.model)
    source = args.source
    header = _header(model, cfg)
    header["source"] = f"{source[0]};{source[1]}"

    if args.theorem == "thm1":
        sweep = list(range(args.sweep_lo, args.sweep_hi + 1))
        analysis, cx, cy, table, esc = _verify_pipeline(
            model, source, cfg, args.green_tol, args.escape_tol,
            [(model.k0, j) for j in sweep],
        )
        rep = asymptotics.verify_thm1(
            model, source, model.k0, sweep, table, cx, esc.at(*source)
        )
        print(
            f"thm1 axis={rep.axis} fixed={rep.fixed} slope={rep.fitted_slope:.4f} "
            f"decay_ratio={rep.decay_ratio:.3e} floor={rep.floor:.2e} "
            f"{'PASS' if rep.passed else 'FAIL'}"
        )
        rows = list(zip(rep.positions, rep.residuals))
        if args.csv:
            _write_csv(args.csv, header, ["position", "residual"], rows)
        if args.svg:
            svg.line_plot(
                args.svg,
                rep.positions,
                rep.residuals,
                title="Green residual along the vertical line",
                xlabel="target row j",
                ylabel="residual",
                log_y=True,
            )
        return EXIT_OK if rep.passed else EXIT_NUMERIC

    if args.theorem == "thm2":
        analysis = kernel.analyze(model, qmax=cfg.qmax)
        gamma = args.gamma if args.gamma is not None else analysis.gamma0
        diag_range = (args.diag // 3, args.diag)
        cx = chains.solve_chain(model, "x1", x_root=analysis.x1)
        cy = chains.solve_chain(model, "y2", x_root=analysis.y1)
        table = green.green_exact(
            model, source, targets=asymptotics.ray_targets(gamma, *diag_range),
            tol=args.green_tol, min_window=cfg.window,
        )
        esc = green.escape_exact(
            model, analysis.t0, sources=[source, (0, 0)], tol=args.escape_tol
        )
        rep = asymptotics.verify_thm2(
            model,
            source,
            gamma,
            diag_range,
            table,
            cx,
            cy,
            esc.at(*source),
        )
        print(
            f"thm2 gamma={rep.gamma:.5f} targets={len(rep.targets)} "
            f"max_outer_dev={rep.max_outer_deviation:.4f} "
            f"{'PASS' if rep.passed else 'FAIL'}"
        )
        rows = [(i, j, r) for (i, j), r in zip(rep.targets, rep.ratios)]
        if args.csv:
            _write_csv(args.csv, header, ["i", "j", "ratio"], rows)
        if args.svg:
            svg.line_plot(
                args.svg,
                [i + j for (i, j) in rep.targets],
                rep.ratios,
                title="Green value over two-profile sum along the ray",
                xlabel="i + j",
                ylabel="ratio",
            )
        return EXIT_OK if rep.passed else EXIT_NUMERIC

    # thm3
    analysis = kernel.analyze(model, qmax=cfg.qmax)
    cx = chains.solve_chain(model, "x1", x_root=analysis.x1)
    cy = chains.solve_chain(model, "y2", x_root=analysis.y1)
    probe = list(asymptotics.thm3_targets(args.diag))
    table = green.green_exact(
        model, source, targets=probe, tol=args.green_tol, min_window=cfg.window
    )
    esc = green.escape_exact(
        model, analysis.t0, sources=[source, (0, 0)], tol=args.escape_tol
    )
    table_ref = green.green_exact(
        model, (0, 0), targets=probe, tol=args.green_tol, min_window=cfg.window
    )
    rep = asymptotics.verify_thm3(
        model,
        source,
        analysis,
        cx,
        cy,
        table,
        table_ref,
        esc.at(*source),
        esc.at(0, 0),
        diag=args.diag,
    )
    print(
        f"thm3 kernel_high={rep.kernel_high:.6f} expected={rep.expected_high:.6f} "
        f"dev={rep.deviation_high:.4f}"
    )
    print(
        f"thm3 kernel_low={rep.kernel_low:.6f} expected={rep.expected_low:.6f} "
        f"dev={rep.deviation_low:.4f}"
    )
    print(
        f"thm3 spectrum {rep.spectrum.kind} monotone={rep.spectrum.strictly_monotone} "
        f"bracketed={rep.spectrum.bracketed()} {'PASS' if rep.passed else 'FAIL'}"
    )
    rows = list(zip(rep.spectrum.u_values, rep.spectrum.kernel_values))
    if args.csv:
        _write_csv(args.csv, header, ["u", "martin_kernel"], rows)
    if args.svg:
        svg.line_plot(
            args.svg,
            rep.spectrum.u_values,
            rep.spectrum.kernel_values,
            title="Critical-direction Martin kernels",
            xlabel="u",
            ylabel="kernel",
        )
    return EXIT_OK if rep.passed else EXIT_NUMERIC


def _cmd_spectrum(args, cfg: RunConfig) -> int:
    model = _load(args.model)
    analysis = kernel.analyze(model, qmax=cfg.qmax)
    cx = chains.solve_chain(model, "x1", x_root=analysis.x1)
    cy = chains.solve_chain(model, "y2", x_root=analysis.y1)
    esc = green.escape_exact(
        model, analysis.t0, sources=[args.source, (0, 0)], tol=args.escape_tol
    )
    spec = asymptotics.boundary_spectrum(
        model,
        args.source,
        args.n_window,
        analysis,
        cx,
        cy,
        esc.at(*args.source),
        esc.at(0, 0),
    )
    print(f"# kind={spec.kind}")
    print(f"# limit_down={_fmt(spec.limit_down)} limit_up={_fmt(spec.limit_up)}")
    rows = list(zip(spec.u_values, spec.kernel_values))
    for u, k in rows:
        print(f"{_fmt(u)},{_fmt(k)}")
    if args.csv:
        header = _header(model, cfg)
        header["kind"] = spec.kind
        _write_csv(args.csv, header, ["u", "martin_kernel"], rows)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quadwalk",
        description="Numerics for reflected random walks in the quadrant.",
    )
    parser.add_argument("--version", action="version", version=f"quadwalk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("model", help="model file path or catalog name")
        p.add_argument("--seed", type=int, default=20240601)
        p.add_argument("--qmax", type=int, default=10**6)
        p.add_argument("--tol", type=float, default=1e-12)
        p.add_argument("--window", type=int, default=None,
                       help="minimum solve window (advanced)")
        p.add_argument("--csv", default=None, help="write results to this CSV file")

    p = sub.add_parser("validate", help="run all model checks")
    common(p)

    p = sub.add_parser("kernel", help="roots, critical angle, rationality verdict")
    common(p)

    p = sub.add_parser("chains", help="stationary measure of an induced chain")
    common(p)
    p.add_argument("--axis", choices=("x", "y"), required=True)
    p.add_argument("--head", type=int, default=10, help="rows printed to stdout")

    p = sub.add_parser("simulate", help="paths and hitting-time statistics")
    common(p)
    p.add_argument("--start", type=_parse_state, required=True)
    p.add_argument("--process", choices=("Z", "Z0", "Z1", "Z2"), default="Z")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--head", type=int, default=20)
    p.add_argument("--hitting", default=None,
                   help=f"comma list from {', '.join(simulate.KNOWN_TIMES)}")
    p.add_argument("--hit-k", type=int, default=None)
    p.add_argument("--hit-l", type=int, default=None)

    p = sub.add_parser("green", help="Green values: exact, Monte-Carlo or contour")
    common(p)
    p.add_argument("--source", type=_parse_state, required=True)
    p.add_argument("--targets", default=None, help="'i,j;i,j;...' or a CSV file")
    p.add_argument("--method", choices=("exact", "mc", "contour"), default="exact")
    p.add_argument("--green-tol", type=float, default=1e-8)
    p.add_argument("--escape-tol", type=float, default=1e-6)
    p.add_argument("--steps", type=int, default=4000)
    p.add_argument("--reps", type=int, default=2000)

    p = sub.add_parser("verify", help="numerical checks of the three limit laws")
    p.add_argument("theorem", choices=("thm1", "thm2", "thm3"))
    common(p)
    p.add_argument("--source", type=_parse_state, default=(1, 1))
    p.add_argument("--svg", default=None, help="write a plot to this SVG file")
    p.add_argument("--green-tol", type=float, default=1e-9)
    p.add_argument("--escape-tol", type=float, default=1e-9)
    p.add_argument("--sweep-lo", type=int, default=10)
    p.add_argument("--sweep-hi", type=int, default=40)
    p.add_argument("--diag", type=int, default=60)
    p.add_argument("--gamma", type=float, default=None,
                   help="ray angle for thm2 (default: the critical angle)")

    p = sub.add_parser("spectrum", help="critical-direction Martin kernel family")
    common(p)
    p.add_argument("--source", type=_parse_state, default=(1, 1))
    p.add_argument("--n-window", type=int, default=6)
    p.add_argument("--escape-tol", type=float, default=1e-8)

    return parser


_DISPATCH = {
    "validate": _cmd_validate,
    "kernel": _cmd_kernel,
    "chains": _cmd_chains,
    "simulate": _cmd_simulate,
    "green": _cmd_green,
    "verify": _cmd_verify,
    "spectrum": _cmd_spectrum,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(seed=args.seed, qmax=args.qmax, tol=args.tol, window=args.window)
    except ValueError as exc:
        print(f"bad configuration: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        return _DISPATCH[args.command](args, cfg)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"bad request: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValidationError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
