"""Command-line front end: ``backus-dipole {solve-linear,solve-backus,selftest}``.

Exit codes
----------
0 success; 1 selftest failure; 2 bad input; 3 closure failure in the linear
solve; 4 fixed-point iteration did not converge (``trace.json`` is still
written); 5 non-positive intensity sample.

Outputs are staged in a scratch directory and moved into ``--out`` only when
the command succeeds, so a failing run leaves no partial results behind.
"""
from __future__ import annotations

import argparse
import logging
import math
import platform
import shutil
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .backus import (
    BackusConfig,
    BackusConvergenceError,
    InputError,
    NonPositiveIntensityError,
    intensity_on_surface,
    solve_backus,
)
from .io import (
    InputFileError,
    dump_json,
    read_coeffs,
    read_equator,
    read_theta_csv,
    to_gauss_samples,
    write_coeffs,
    write_theta_csv,
)
from .oblique import (
    ClosureConvergenceError,
    boundary_residual,
    default_residual_grid,
    recurrence_defect,
    solve_oblique_axisym,
    solve_oblique_general,
)
from .selftest import run_selftest
from .special_fn import wigner_3j
from .spectral import SphCoeffs, analyze_axisym, gauss_nodes, synth_axisym, synth_general

log = logging.getLogger("backus_dipole")

EXIT_OK, EXIT_SELFTEST, EXIT_INPUT, EXIT_CLOSURE, EXIT_NOCONV, EXIT_NONPOS = 0, 1, 2, 3, 4, 5


class _Staging:
    """Scratch directory whose files are moved into ``out`` on :meth:`commit`."""

    def __init__(self, out: Path):
        self.out = out
        self.dir = Path(tempfile.mkdtemp(prefix=".staging-"))
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.dir / name

    def commit(self, names=None) -> list[str]:
        self.out.mkdir(parents=True, exist_ok=True)
        moved = []
        for name in names or self.files:
            shutil.move(str(self.dir / name), str(self.out / name))
            moved.append(str(self.out / name))
        return moved

    def cleanup(self):
        shutil.rmtree(self.dir, ignore_errors=True)


def _manifest(command, args, inputs, outputs, t0):
    config = {k: v for k, v in vars(args).items() if k not in ("func", "inject_fault")}
    return {
        "command": command,
        "inputs": inputs,
        "config": {k: (str(v) if isinstance(v, Path) else v) for k, v in config.items()},
        "outputs": outputs,
        "versions": {
            "backus_dipole": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "wall_clock_seconds": time.perf_counter() - t0,
    }


def _finish(stage, command, args, inputs, t0, names=None):
    outputs = stage.commit(names)
    manifest = _manifest(command, args, inputs, outputs, t0)
    dump_json(stage.out / "run.json", manifest)


def _load_surface_data(path: Path, L: int, general: bool, assume_gauss: bool):
    if path.suffix.lower() == ".csv":
        theta, value = read_theta_csv(path)
        n = max(theta.size, L + 1)
        samples = to_gauss_samples(theta, value, n, assume_gauss=assume_gauss)
        return samples, "samples"
    u = read_coeffs(path)
    if isinstance(u, SphCoeffs) and not general:
        raise InputFileError("general coefficients need --general")
    return u, "coeffs"


def cmd_solve_linear(args) -> int:
    t0 = time.perf_counter()
    L = args.L
    if L < 2:
        raise InputFileError("--L must be at least 2")
    data, kind = _load_surface_data(args.f, L, args.general, args.nodes == "gauss")
    f = analyze_axisym(data, L) if kind == "samples" else data
    inputs = [str(args.f)]
    if args.h is not None:
        h = read_equator(args.h)
        inputs.append(str(args.h))
    else:
        h = np.array([complex(args.h0)])

    stage = _Staging(args.out)
    try:
        if args.general or h.size > 1:
            fg = f if isinstance(f, SphCoeffs) else SphCoeffs.from_axisym(f)
            sol = solve_oblique_general(fg, h, L)
            res = boundary_residual(sol, fg)
            theta = default_residual_grid(4 * L)
            values = synth_general(sol.v, theta, 0.0).real
        else:
            if abs(h[0].imag) > 0:
                raise InputFileError("axisymmetric equator value must be real")
            sol = solve_oblique_axisym(f, h[0].real, L)
            res = boundary_residual(sol, f)
            theta = default_residual_grid(4 * L)
            values = synth_axisym(sol.v, theta)
        write_coeffs(stage.path("v.json"), sol.v)
        dump_json(
            stage.path("diagnostics.json"),
            {
                "residual_sup": res.sup,
                "residual_l2": res.l2,
                "closure_terms_used": sol.closure_terms_used,
                "tail_norm": sol.tail_norm,
                "recurrence_defect": recurrence_defect(sol),
            },
        )
        write_theta_csv(stage.path("v_surface.csv"), theta, values)
        _finish(stage, "solve-linear", args, inputs, t0)
    finally:
        stage.cleanup()
    log.info("boundary residual sup %.3e", res.sup)
    return EXIT_OK


def cmd_solve_backus(args) -> int:
    t0 = time.perf_counter()
    config = BackusConfig(s=args.s, L=args.L, tol=args.tol, max_iter=args.max_iter, h0=args.h0)
    data, kind = _load_surface_data(args.g, args.L, False, args.nodes == "gauss")
    if kind == "samples":
        theta = np.arcsin(gauss_nodes(data.size)[0])
        g_values = data
    else:
        theta = default_residual_grid(4 * args.L)
        g_values = synth_axisym(data, theta)

    stage = _Staging(args.out)
    try:
        try:
            result = solve_backus(data, config)
        except BackusConvergenceError as exc:
            dump_json(stage.path("trace.json"), {"converged": False, "message": str(exc), "trace": exc.trace})
            _finish(stage, "solve-backus", args, [str(args.g)], t0)
            log.error("%s", exc)
            return EXIT_NOCONV
        u = result.u_surface
        amp = intensity_on_surface(u, theta)
        dump_json(stage.path("result.json"), result.to_json())
        write_coeffs(stage.path("u.json"), u)
        write_theta_csv(stage.path("u.csv"), theta, synth_axisym(u, theta))
        write_theta_csv(stage.path("intensity.csv"), theta, amp)
        write_theta_csv(stage.path("residual.csv"), theta, amp - g_values)
        _finish(stage, "solve-backus", args, [str(args.g)], t0)
    finally:
        stage.cleanup()
    log.info("converged in %d iterations, intensity residual %.3e", result.iterations, result.residual_intensity_sup)
    return EXIT_OK


def cmd_selftest(args) -> int:
    wigner = None
    if args.inject_fault == "wigner":
        wigner = lambda *idx: 1.001 * wigner_3j(*idx)  # noqa: E731
    t0 = time.perf_counter()
    results = run_selftest(args.quick, wigner=wigner)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<20s} {r.detail}  ({r.seconds:.2f} s)")
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} groups passed in {time.perf_counter() - t0:.2f} s")
    if failed:
        print("failed: " + ", ".join(failed))
        return EXIT_SELFTEST
    return EXIT_OK


def _finite(text: str) -> float:
    x = float(text)
    if not math.isfinite(x):
        raise argparse.ArgumentTypeError("must be finite")
    return x


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="backus-dipole", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    lin = sub.add_parser("solve-linear", help="linear oblique-derivative solve")
    lin.add_argument("--f", type=Path, required=True, help="boundary data: coefficient JSON or theta,value CSV")
    grp = lin.add_mutually_exclusive_group()
    grp.add_argument("--h0", type=_finite, default=0.0, help="constant equator value")
    grp.add_argument("--h", type=Path, help="equator Fourier coefficients JSON")
    lin.add_argument("--L", type=int, required=True)
    lin.add_argument("--out", type=Path, required=True)
    lin.add_argument("--general", action="store_true", help="solve every order m")
    lin.add_argument("--nodes", choices=["gauss", "auto"], default="auto")
    lin.set_defaults(func=cmd_solve_linear)

    bk = sub.add_parser("solve-backus", help="nonlinear intensity problem")
    bk.add_argument("--g", type=Path, required=True, help="intensity: theta,value CSV or coefficient JSON")
    bk.add_argument("--h0", type=_finite, default=0.0)
    bk.add_argument("--s", type=_finite, default=1.5)
    bk.add_argument("--L", type=int, default=64)
    bk.add_argument("--tol", type=_finite, default=1e-12)
    bk.add_argument("--max-iter", type=int, default=200)
    bk.add_argument("--out", type=Path, required=True)
    bk.add_argument("--nodes", choices=["gauss", "auto"], default="auto")
    bk.set_defaults(func=cmd_solve_backus)

    st = sub.add_parser("selftest", help="run the invariant suite")
    st.add_argument("--quick", action="store_true", help="halve the degree caps")
    st.add_argument("--inject-fault", choices=["wigner"], default=None, help=argparse.SUPPRESS)
    st.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NonPositiveIntensityError as exc:
        log.error("%s", exc)
        return EXIT_NONPOS
    except (InputError, InputFileError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except ClosureConvergenceError as exc:
        log.error("%s", exc)
        return EXIT_CLOSURE


if __name__ == "__main__":
    sys.exit(main())
