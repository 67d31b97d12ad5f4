"""Command-line driver.

Exit codes: 0 ok, 1 verification failure, 2 not converged, 3 breakdown,
4 input error (unparseable file, bad values, moment condition violated),
5 dimension mismatch, 6 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .blockmat import DEFAULT_RCOND_FLOOR
from .errors import DimensionError, Singular, SingularMinor
from .lattice import toda2_state_from_moments
from .moments import (
    DiscreteMeasure,
    MomentTable,
    build_family,
    check_biorthogonality,
    lattice_coefficients,
)
from .problem import ProblemDimensionError, ProblemError, ProblemFile, matrix_csv, write_atomic
from .qdalgo import (
    DEFAULT_MAX_SWEEPS,
    DEFAULT_TOL,
    ConvergenceStatus,
    extract_spectrum,
    run,
    sort_spectrum,
    spectrum_residuals,
)
from .verify import SUITES, run_suite

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_NOT_CONVERGED = 2
EXIT_BREAKDOWN = 3
EXIT_INPUT = 4
EXIT_DIMENSION = 5
EXIT_IO = 6

_STATUS_EXIT = {
    ConvergenceStatus.CONVERGED: EXIT_OK,
    ConvergenceStatus.NOT_CONVERGED: EXIT_NOT_CONVERGED,
    ConvergenceStatus.BREAKDOWN: EXIT_BREAKDOWN,
}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _load_problem(path) -> ProblemFile:
    try:
        return ProblemFile.load(path)
    except ProblemDimensionError as exc:
        raise CliError(EXIT_DIMENSION, f"{path}: {exc}") from None
    except ProblemError as exc:
        raise CliError(EXIT_INPUT, f"{path}: {exc}") from None
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc.strerror or exc}") from None


def _write(path, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        write_atomic(path, text)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc.strerror or exc}") from None


def _spectrum_json(records) -> str:
    return json.dumps(records, indent=1) + "\n"


def cmd_run(args) -> int:
    problem = _load_problem(args.input)
    state = problem.state()
    j0 = state.assemble().to_dense()
    t0 = time.perf_counter()
    result = run(state, tol=args.tol, max_sweeps=args.max_sweeps, rcond_floor=args.rcond_floor)
    elapsed = time.perf_counter() - t0
    if args.trace_out:
        _write(args.trace_out, result.trace.to_csv())
    code = _STATUS_EXIT[result.status]
    print(f"status: {result.status.value}  sweeps: {len(result.trace)}  time: {elapsed:.3f}s")
    if result.status is ConvergenceStatus.BREAKDOWN:
        print(str(result.trace.breakdown), file=sys.stderr)
        return code
    spectrum = extract_spectrum(result.state, reference=j0)
    if args.eigs_out:
        _write(args.eigs_out, _spectrum_json(spectrum.to_records()))
    for v, r in zip(spectrum.values, spectrum.residuals):
        print(f"  {v.real: .15f} {v.imag:+.15f}i   residual {r:.2e}")
    ref = problem.reference
    if ref is not None and len(ref) == len(spectrum):
        dev = np.abs(spectrum.values - sort_spectrum(ref))
        print(f"max deviation from reference: {dev.max():.3e}")
    if result.status is ConvergenceStatus.NOT_CONVERGED:
        print(f"not converged: max |e|_F = {result.state.max_e_norm():.3e} >= tol {args.tol:g}", file=sys.stderr)
    return code


def cmd_build_j(args) -> int:
    problem = _load_problem(args.input)
    _write(args.out, matrix_csv(problem.state().assemble().to_dense()))
    return EXIT_OK


def cmd_verify(args) -> int:
    suites = SUITES if args.suite == "all" else (args.suite,)
    failures = []
    for suite in suites:
        t0 = time.perf_counter()
        results = run_suite(suite, trials=args.trials, seed=args.seed, tol=args.tol)
        elapsed = time.perf_counter() - t0
        print(f"[{suite}] {args.trials} trials, seed {args.seed}, {elapsed:.2f}s")
        for r in results:
            mark = "PASS" if r.passed else "FAIL"
            print(f"  {mark}  {r.name:<18} max residual {r.worst:.3e}  (tol {r.tol:g}, worst trial {r.worst_trial})")
            if not r.passed:
                failures.append(f"{suite}/{r.name} (seed {args.seed}, trial {r.worst_trial})")
    if failures:
        print("failing identities: " + ", ".join(failures), file=sys.stderr)
        return EXIT_VERIFY_FAILED
    return EXIT_OK


def _load_measure(path) -> tuple[DiscreteMeasure, int]:
    try:
        return DiscreteMeasure.load(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_INPUT, f"{path}: invalid JSON: {exc}") from None
    except KeyError as exc:
        raise CliError(EXIT_INPUT, f"{path}: missing field {exc}") from None
    except DimensionError as exc:
        raise CliError(EXIT_DIMENSION, f"{path}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise CliError(EXIT_INPUT, f"{path}: {exc}") from None


def moments_report(measure: DiscreteMeasure, theta: int, n: int, alpha_max: int, rcond_floor: float) -> dict:
    """H-table, lattice coefficients, the assembled matrix at level 0 and its spectrum."""
    t = MomentTable(measure, theta, rcond_floor)
    levels = range(alpha_max + 1)
    h_table = [
        {"alpha": a, "n": k, "H": t.h(k, a).tolist()}
        for a in levels
        for k in range(n + 1)
    ]
    coeffs = []
    for a in levels:
        for m in range(1, n + 1):
            c = lattice_coefficients(m, a, t)
            coeffs.append({"alpha": a, "m": m, **{k: v.tolist() for k, v in c._asdict().items()}})
    j = toda2_state_from_moments(n, 0, t).assemble().to_dense()
    vals = sort_spectrum(np.linalg.eigvals(j))
    spectrum = [
        {"re": float(v.real), "im": float(v.imag), "residual": float(r)}
        for v, r in zip(vals, spectrum_residuals(vals, j))
    ]
    P = build_family("P", n, 0, t)
    Q = build_family("Q", n, 0, t)
    report = {
        "theta": theta,
        "p": measure.p,
        "n": n,
        "alpha_max": alpha_max,
        "H": h_table,
        "coefficients": coeffs,
        "J": j.tolist(),
        "spectrum": spectrum,
        "biorthogonality_residual": check_biorthogonality(P, Q, t),
    }
    if len(measure.nodes) == n:
        # exactly n atoms: Q_n vanishes at every x_k^theta, each root of multiplicity p
        expected = sort_spectrum([float(x) ** theta for x in measure.nodes for _ in range(measure.p)])
        report["expected_spectrum"] = [float(v.real) for v in expected]
    return report


def cmd_moments_demo(args) -> int:
    measure, theta = _load_measure(args.measure)
    if args.n < 1 or args.alpha_max < 0:
        raise CliError(EXIT_INPUT, "--n must be >= 1 and --alpha-max >= 0")
    try:
        report = moments_report(measure, theta, args.n, args.alpha_max, args.rcond_floor)
    except SingularMinor as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None
    except Singular as exc:
        raise CliError(EXIT_INPUT, f"moment condition violated: {exc}") from None
    _write(args.out, json.dumps(report, indent=1) + "\n")
    if args.out not in (None, "-"):
        vals = ", ".join(f"{s['re']:.12g}{s['im']:+.3g}i" if s["im"] else f"{s['re']:.12g}" for s in report["spectrum"])
        print(f"spectrum of J: {vals}")
        print(f"biorthogonality residual: {report['biorthogonality_residual']:.3e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="blockqd", description="Generalized block qd-algorithm for block Hessenberg eigenproblems.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def floor(p):
        p.add_argument("--rcond-floor", type=float, default=DEFAULT_RCOND_FLOOR, help="reciprocal condition below which a pivot counts as singular")

    p = sub.add_parser("run", help="run the qd sweeps and report eigenvalues")
    p.add_argument("input", help="problem JSON")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-sweeps", type=int, default=DEFAULT_MAX_SWEEPS)
    p.add_argument("--trace-out", help="per-sweep norm trace (CSV)")
    p.add_argument("--eigs-out", help="eigenvalue report (JSON)")
    floor(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("build-j", help="write the assembled block Hessenberg matrix as CSV")
    p.add_argument("input", help="problem JSON")
    p.add_argument("--out", help="output CSV (stdout if omitted)")
    p.set_defaults(func=cmd_build_j)

    p = sub.add_parser("verify", help="run the randomized identity suites")
    p.add_argument("--suite", choices=(*SUITES, "all"), default="all")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10, help="relative residual bound")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("moments-demo", help="lattice variables and matrix from a discrete measure")
    p.add_argument("measure", help="measure JSON: {p, theta, nodes, weights}")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--alpha-max", type=int, default=0)
    p.add_argument("--out", help="report JSON (stdout if omitted)")
    floor(p)
    p.set_defaults(func=cmd_moments_demo)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "tol", 1.0) <= 0:
        return _fail(EXIT_INPUT, "--tol must be positive")
    if getattr(args, "max_sweeps", 0) < 0:
        return _fail(EXIT_INPUT, "--max-sweeps must be non-negative")
    if getattr(args, "trials", 1) < 1:
        return _fail(EXIT_INPUT, "--trials must be positive")
    try:
        return args.func(args)
    except CliError as exc:
        return _fail(exc.code, str(exc))


if __name__ == "__main__":
    sys.exit(main())
