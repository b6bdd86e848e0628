"""Command-line surface: solve states, sweep Fisher information, find the
optimal system size, and tabulate the absorption-imaging CFI.

Single records are emitted as JSON, sweeps as CSV with a fixed column
order and floats at 17 significant digits, so identical configurations
produce byte-identical files.  Every CSV row carries the hash of the
resolved configuration and the package version.

Exit codes: 0 success, 2 invalid arguments, 3 solver failure, 4 bracket
without an interior maximum.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .bethe import (
    BoundaryCondition,
    ModelParams,
    SolverError,
    StateSpec,
    ground_state,
    norm_sq,
    solve_bethe,
    type1_excitation,
    type2_excitation,
)
from .fisher import BracketError, cfi, lmax, sweep
from .imaging import (
    image_distribution,
    imaging_cfi,
    mle_estimate,
    sample_images,
    save_shots,
    uniform_grid,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_BRACKET = 4


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _config_hash(payload: dict) -> str:
    # numeric settings are part of the provenance: a change in the solver
    # tolerance or default quadrature orders changes every row's hash
    from .bethe import RESIDUAL_RTOL
    from .integrals import DEFAULT_SIMPLEX_ORDER, DEFAULT_SIMPLEX_ORDER_4D

    full = {
        **payload,
        "residual_rtol": RESIDUAL_RTOL,
        "simplex_orders": [DEFAULT_SIMPLEX_ORDER, DEFAULT_SIMPLEX_ORDER_4D],
    }
    canon = json.dumps(full, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _boundary(name: str) -> BoundaryCondition:
    return BoundaryCondition.PERIODIC if name == "periodic" else BoundaryCondition.HARD_WALL


def _build_state(args: argparse.Namespace) -> StateSpec:
    bc = _boundary(args.bc)
    selectors = [
        args.ground,
        args.type1 is not None,
        args.type2 is not None,
        args.quantum_numbers is not None,
    ]
    if sum(bool(s) for s in selectors) != 1:
        raise ValueError("select exactly one of --ground, --type1 Q, --type2 Q, -I ...")
    if args.ground:
        return ground_state(bc, args.n)
    if args.type1 is not None:
        return type1_excitation(bc, args.n, args.type1)
    if args.type2 is not None:
        return type2_excitation(bc, args.n, args.type2)
    return StateSpec(bc, args.n, tuple(args.quantum_numbers))


def _state_payload(args: argparse.Namespace) -> dict:
    return {
        "bc": args.bc,
        "n": args.n,
        "ground": args.ground,
        "type1": args.type1,
        "type2": args.type2,
        "quantum_numbers": args.quantum_numbers,
    }


def _write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _add_state_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--bc", choices=("periodic", "hardwall"), required=True)
    parser.add_argument("-N", "--n", type=int, required=True, help="particle count")
    parser.add_argument("--ground", action="store_true", help="ground state")
    parser.add_argument("--type1", type=int, metavar="Q", help="type-I excitation label")
    parser.add_argument("--type2", type=int, metavar="Q", help="type-II excitation label")
    parser.add_argument(
        "-I",
        "--quantum-numbers",
        type=float,
        nargs="+",
        metavar="I_J",
        help="explicit quantum numbers",
    )
    parser.add_argument("-o", "--output", help="output path (default stdout)")


def _cmd_solve(args: argparse.Namespace) -> int:
    spec = _build_state(args)
    params = ModelParams(args.c, args.L)
    solution = solve_bethe(spec, params)
    norm = norm_sq(solution.k, params, spec.bc)
    payload = {
        "config_hash": _config_hash({**_state_payload(args), "c": args.c, "L": args.L}),
        "version": __version__,
        "bc": args.bc,
        "n": spec.n,
        "quantum_numbers": list(spec.quantum_numbers),
        "c": args.c,
        "L": args.L,
        "k": list(solution.k),
        "dk_dc": list(solution.dk_dc),
        "energy": solution.energy,
        "momentum": solution.momentum,
        "residual": solution.residual,
        "norm_sq": norm.norm_sq,
    }
    _write_text(args.output, json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_fisher(args: argparse.Namespace) -> int:
    spec = _build_state(args)
    if args.num < 1:
        raise ValueError("grid needs at least one point")
    if args.log:
        grid = np.geomspace(args.start, args.stop, args.num)
    else:
        grid = np.linspace(args.start, args.stop, args.num)
    result = sweep(spec, args.axis, grid, args.fixed)

    config = {
        **_state_payload(args),
        "axis": args.axis,
        "start": args.start,
        "stop": args.stop,
        "num": args.num,
        "log": args.log,
        "fixed": args.fixed,
    }
    chash = _config_hash(config)
    lines = [f"# llfisher fisher sweep, trend({args.axis}): {result.trend()}"]
    lines.append("axis,value,qfi,cfi,gap,phase_class,cfi_route,status,config_hash,version")
    n_ok = 0
    for idx, value in enumerate(result.grid):
        report = result.reports[idx]
        if report is None:
            lines.append(
                f"{args.axis},{_fmt(value)},nan,nan,nan,,,"
                f"error:{result.errors[idx]},{chash},{__version__}"
            )
            continue
        n_ok += 1
        lines.append(
            ",".join(
                [
                    args.axis,
                    _fmt(value),
                    _fmt(report.qfi),
                    _fmt(report.cfi),
                    _fmt(report.phase_variance_term),
                    report.method["phase_class"],
                    report.method["cfi_route"],
                    "ok",
                    chash,
                    __version__,
                ]
            )
        )
    _write_text(args.output, "\n".join(lines) + "\n")
    if n_ok == 0:
        print("all sweep points failed", file=sys.stderr)
        return EXIT_SOLVER
    if n_ok < len(result.grid):
        print(f"warning: {len(result.grid) - n_ok} sweep points failed", file=sys.stderr)
    return EXIT_OK


def _cmd_lmax(args: argparse.Namespace) -> int:
    spec = _build_state(args)
    l_max, f_max = lmax(spec, args.c, (args.bracket[0], args.bracket[1]), tol=args.tol)
    payload = {
        "config_hash": _config_hash(
            {**_state_payload(args), "c": args.c, "bracket": args.bracket, "tol": args.tol}
        ),
        "version": __version__,
        "c": args.c,
        "L_max": l_max,
        "F_max": f_max,
        "c_L_max": args.c * l_max,
    }
    _write_text(args.output, json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_imaging(args: argparse.Namespace) -> int:
    spec = _build_state(args)
    params = ModelParams(args.c, args.L)
    if any(p < 1 for p in args.pixels):
        raise ValueError("pixel counts must be >= 1")
    reference = cfi(spec, params)
    config = {
        **_state_payload(args),
        "c": args.c,
        "L": args.L,
        "pixels": args.pixels,
        "order": args.order,
    }
    chash = _config_hash(config)
    lines = ["n_pixels,imaging_cfi,cfi,ratio,config_hash,version"]
    last_dist = None
    for npix in args.pixels:
        dist = image_distribution(spec, params, uniform_grid(args.L, npix), order=args.order)
        last_dist = dist
        f_img = imaging_cfi(dist)
        lines.append(
            ",".join(
                [
                    str(npix),
                    _fmt(f_img),
                    _fmt(reference),
                    _fmt(f_img / reference),
                    chash,
                    __version__,
                ]
            )
        )
    _write_text(args.output, "\n".join(lines) + "\n")

    if args.sample:
        if args.seed is None:
            raise ValueError("--sample requires --seed")
        shots = sample_images(last_dist, args.sample, args.seed)
        shots_path = args.shots_out or "shots.ndjson"
        save_shots(
            shots_path,
            shots,
            args.seed,
            meta={"config_hash": chash, "version": __version__, "c": args.c, "L": args.L},
        )
        # grid spans +-6 Cramer-Rao sigma of this configuration
        f_last = imaging_cfi(last_dist)
        span = 6.0 / max(np.sqrt(args.sample * f_last), 1e-12)
        lo = max(args.c - span, 0.02 * args.c)
        c_grid = np.linspace(lo, args.c + span, 21)
        c_hat, loglik = mle_estimate(
            shots, spec, last_dist.grid, c_grid, args.L, order=args.order
        )
        summary = {
            "config_hash": chash,
            "version": __version__,
            "shots": args.sample,
            "seed": args.seed,
            "shots_file": shots_path,
            "c_true": args.c,
            "c_hat": c_hat,
            "c_grid": list(c_grid),
            "loglik": list(loglik),
        }
        mle_path = args.mle_out or "mle.json"
        with open(mle_path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="llfisher",
        description="Few-boson Lieb-Liniger states and coupling-estimation Fisher information",
    )
    parser.add_argument("--version", action="version", version=f"llfisher {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one eigenstate, print JSON")
    _add_state_options(p_solve)
    p_solve.add_argument("-c", type=float, required=True, help="interaction strength")
    p_solve.add_argument("-L", type=float, required=True, help="system size")
    p_solve.set_defaults(func=_cmd_solve)

    p_fisher = sub.add_parser("fisher", help="QFI/CFI sweep over c or L, print CSV")
    _add_state_options(p_fisher)
    p_fisher.add_argument("--axis", choices=("c", "L"), required=True)
    p_fisher.add_argument("--start", type=float, required=True)
    p_fisher.add_argument("--stop", type=float, required=True)
    p_fisher.add_argument("--num", type=int, required=True)
    p_fisher.add_argument("--log", action="store_true", help="geometric grid")
    p_fisher.add_argument("--fixed", type=float, required=True, help="value of the other axis")
    p_fisher.set_defaults(func=_cmd_fisher)

    p_lmax = sub.add_parser("lmax", help="system size maximizing the CFI")
    _add_state_options(p_lmax)
    p_lmax.add_argument("-c", type=float, required=True)
    p_lmax.add_argument(
        "--bracket", type=float, nargs=2, metavar=("LO", "HI"), required=True
    )
    p_lmax.add_argument("--tol", type=float, default=None)
    p_lmax.set_defaults(func=_cmd_lmax)

    p_img = sub.add_parser("imaging", help="absorption-imaging CFI vs pixel count")
    _add_state_options(p_img)
    p_img.add_argument("-c", type=float, required=True)
    p_img.add_argument("-L", type=float, required=True)
    p_img.add_argument("--pixels", type=int, nargs="+", required=True)
    p_img.add_argument("--order", type=int, default=16, help="box quadrature order")
    p_img.add_argument("--sample", type=int, help="draw this many shots from the last grid")
    p_img.add_argument("--seed", type=int, help="shot RNG seed")
    p_img.add_argument("--shots-out", help="shot file path (default shots.ndjson)")
    p_img.add_argument("--mle-out", help="MLE summary path (default mle.json)")
    p_img.set_defaults(func=_cmd_imaging)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except BracketError as exc:
        print(f"bracket error: {exc}", file=sys.stderr)
        return EXIT_BRACKET


if __name__ == "__main__":
    sys.exit(main())
