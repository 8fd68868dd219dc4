"""Command-line front end.

Exit codes: 0 success, 2 usage (bad spec, flags or config), 3 numeric
failure, 4 I/O error. Every subcommand writes UTF-8.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bitcorr, catalog, fock, gaussian, homodyne, sweeps
from .config import Settings, load_settings, parse_config
from .errors import NumericError, UsageError

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _grid(text: str) -> np.ndarray:
    """Parse ``lo:hi:steps`` into an evenly spaced axis."""
    try:
        lo, hi, steps = text.split(":")
        return sweeps.grid_axis(float(lo), float(hi), int(steps))
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}, expected lo:hi:steps") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cvbit", description="Sign-binned quadrature correlations of two-mode states.")
    parser.add_argument("--config", help="key=value settings file (default: $CVBIT_CONFIG)")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="override one setting"
    )
    parser.add_argument("--workers", type=int, default=None, help="parallel workers for sweeps and sampling")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="evaluate Q, N and the optimal angles of one state")
    p.add_argument("spec", help='state spec, e.g. "kind=tmsv;r=0.5"')
    p.add_argument("--repr", dest="representation", choices=("auto", "gaussian", "fock"), default="auto")

    p = sub.add_parser("fig1", help="random Gaussian states against negativity (CSV)")
    p.add_argument("--samples", type=int, default=18000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")

    p = sub.add_parser("fig2", help="photon-subtracted versus squeezed states (CSV)")
    p.add_argument("--r-grid", default="0:2:21", help="lo:hi:steps")
    p.add_argument("--T-grid", dest="t_grid", default="0.5:1:11", help="lo:hi:steps")
    p.add_argument("--out", default="-")

    p = sub.add_parser("mixture", help="squeezed state mixed with vacuum (CSV)")
    p.add_argument("--r-grid", default="0.1:1:10", help="lo:hi:steps")
    p.add_argument("--p-grid", default="0.1:1:10", help="lo:hi:steps")
    p.add_argument("--out", default="-")

    p = sub.add_parser("sample", help="simulate sign-binned homodyne shots")
    p.add_argument("spec")
    p.add_argument("--theta", type=float, default=None, help="angle on mode A (default: optimal)")
    p.add_argument("--phi", type=float, default=None, help="angle on mode B (default: optimal)")
    p.add_argument("--shots", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=0.0, help="Gaussian smoothing of each outcome")
    p.add_argument("--format", choices=("bin", "csv"), default="bin")
    p.add_argument("--out", default=None, help="bit-stream file (omit to print the summary only)")

    sub.add_parser("selftest", help="run the built-in oracle and invariance checks")
    return parser


def resolve_settings(args) -> Settings:
    """Defaults, then the config file, then ``--set`` overrides."""
    settings = load_settings(args.config)
    if args.overrides:
        settings = parse_config("\n".join(args.overrides), settings)
    if args.workers is not None:
        if args.workers < 1:
            raise UsageError("--workers must be at least 1")
        settings = settings.replace(workers=args.workers)
    return settings


def _emit(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="")


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def evaluate_spec(spec: str, representation: str, settings: Settings) -> dict:
    params = catalog.parse_family_spec(spec)
    built = catalog.build(params, representation, settings)
    result = bitcorr.optimize_q(built.state, settings)
    n = built.negativity
    if n is None:
        n = fock.negativity_fock(built.state)
    report = {
        "state": params.spec(),
        "Q": result.q,
        "theta_star": result.theta_star,
        "phi_star": result.phi_star,
        "N": float(n),
        "fairness": bitcorr.fairness_check(built.state, result.angles),
        "cutoff": built.cutoff,
        "tail_mass": built.tail_mass,
        "Q_reference": built.q,
    }
    return {k: _json_value(v) for k, v in report.items()}


def cmd_eval(args, settings):
    report = evaluate_spec(args.spec, args.representation, settings)
    sys.stdout.write(json.dumps(report, indent=2) + "\n")
    return EXIT_OK


def cmd_fig1(args, settings):
    if args.samples < 1:
        raise UsageError("--samples must be at least 1")
    rows = sweeps.fig1_rows(args.samples, args.seed, settings, settings.workers)
    _emit(sweeps.to_csv(sweeps.FIG1_COLUMNS, rows), args.out)
    return EXIT_OK


def cmd_fig2(args, settings):
    rows = sweeps.fig2_rows(_grid(args.r_grid), _grid(args.t_grid), settings, settings.workers)
    _emit(sweeps.to_csv(sweeps.FIG2_COLUMNS, rows), args.out)
    flagged = sum(1 for row in rows if row[-1] != "ok")
    if flagged:
        print(f"warning: {flagged} row(s) flagged not_converged", file=sys.stderr)
    return EXIT_OK


def cmd_mixture(args, settings):
    rows = sweeps.mixture_rows(_grid(args.r_grid), _grid(args.p_grid), settings, settings.workers)
    _emit(sweeps.to_csv(sweeps.MIXTURE_COLUMNS, rows), args.out)
    return EXIT_OK


def cmd_sample(args, settings):
    if args.shots < 1:
        raise UsageError("--shots must be at least 1")
    if args.sigma < 0:
        raise UsageError("--sigma must be non-negative")
    params = catalog.parse_family_spec(args.spec)
    built = catalog.build(params, "auto", settings)
    if args.theta is None or args.phi is None:
        best = bitcorr.optimize_q(built.state, settings)
        theta = best.theta_star if args.theta is None else args.theta
        phi = best.phi_star if args.phi is None else args.phi
    else:
        theta, phi = args.theta, args.phi
    angles = bitcorr.AnglePair(theta, phi)
    run = homodyne.sample_run(
        built.state, angles, args.shots, args.seed, args.sigma, settings=settings, workers=settings.workers
    )
    if args.out:
        writer = homodyne.write_bits_binary if args.format == "bin" else homodyne.write_bits_csv
        writer(args.out, run.bits)
    summary = {
        "state": params.spec(),
        "theta": angles.theta,
        "phi": angles.phi,
        "shots": run.shots,
        "seed": run.seed,
        "sigma": run.smoothing_sigma,
        "B_hat": run.b_hat,
        "stderr": run.stderr,
        "Q_reference": built.q,
        "out": args.out,
    }
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


def _selftest_checks(settings):
    """Yield ``(name, passed, detail)`` for a quick oracle and invariance suite."""
    rng = np.random.default_rng(12345)
    ranges = gaussian.SamplingRanges(lambda_max=settings.lambda_max)

    q = bitcorr.optimize_q(gaussian.tmsv_standard_form(0.5), settings).q
    yield "tmsv closed form vs optimizer", abs(q - catalog.tmsv_q(0.5)) < 1e-8, f"{q:.10f}"

    n, _ = gaussian.negativity_gaussian(gaussian.tmsv_standard_form(0.5).to_cm())
    yield "tmsv negativity", abs(n - math.expm1(1.0) / 2) < 1e-10, f"{n:.10f}"

    worst = 0.0
    for _ in range(20):
        cm = gaussian.random_gaussian_cm(rng, ranges, settings.max_attempts)
        closed = gaussian.q_gaussian_closed(gaussian.standard_form(cm))
        worst = max(worst, abs(closed - bitcorr.optimize_q(cm, settings).q))
    yield "gaussian closed form vs optimizer (20 states)", worst < 1e-6, f"max gap {worst:.2e}"

    worst = 0.0
    for _ in range(20):
        a, b = rng.uniform(1, settings.lambda_max, 2)
        product = gaussian.StandardForm(a, b, 0.0, 0.0)
        worst = max(worst, bitcorr.optimize_q(product, settings).q)
    yield "product states are uncorrelated", worst < 1e-9, f"max Q {worst:.2e}"

    cm = gaussian.random_gaussian_cm(rng, ranges, settings.max_attempts)
    base = bitcorr.optimize_q(cm, settings).q
    worst = 0.0
    for _ in range(10):
        sa = gaussian.rotation(rng.uniform(0, np.pi)) @ gaussian.squeezer(math.exp(rng.uniform(-1, 1)))
        sb = gaussian.rotation(rng.uniform(0, np.pi)) @ gaussian.squeezer(math.exp(rng.uniform(-1, 1)))
        moved = gaussian.apply_local_symplectic(cm, sa, sb)
        worst = max(worst, abs(bitcorr.optimize_q(moved, settings).q - base))
    yield "local symplectic invariance", worst < 1e-6, f"max gap {worst:.2e}"

    psi, (_, q_b) = catalog.bell_state("bell_phi_plus", 0.5)
    q = bitcorr.optimize_q(psi, settings).q
    yield "bell state", abs(q - 2 / math.pi) < 1e-9, f"{q:.10f}"

    q = bitcorr.optimize_q(catalog.qutrit_h(), settings).q
    n = fock.negativity_fock(catalog.qutrit_h())
    yield "qutrit counterexample", q < 1e-8 and n >= 0.1, f"Q {q:.1e}, N {n:.4f}"

    tight = settings.replace(tail_tol=1e-12)
    psi, _ = catalog.photon_subtracted(0.4, 0.9, tight)
    q_num = bitcorr.optimize_q(psi, tight).q
    q_ser = catalog.q_ps_series(0.4, 0.9, settings=settings)
    yield "photon-subtracted series vs Fock", abs(q_num - q_ser) < 1e-6, f"gap {abs(q_num - q_ser):.2e}"

    rho, (_, q_m) = catalog.mixture_tmsv_vacuum(0.6, 0.4, settings)
    q = bitcorr.optimize_q(rho, settings).q
    yield "mixture analytic vs density matrix", abs(q - q_m) < 1e-5, f"gap {abs(q - q_m):.2e}"


def cmd_selftest(args, settings):
    failures = 0
    for name, passed, detail in _selftest_checks(settings):
        failures += not passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}  ({detail})")
    print(f"{failures} failure(s)")
    return EXIT_OK if failures == 0 else EXIT_NUMERIC


COMMANDS = {
    "eval": cmd_eval,
    "fig1": cmd_fig1,
    "fig2": cmd_fig2,
    "mixture": cmd_mixture,
    "sample": cmd_sample,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    for stream in (sys.stdout, sys.stderr):
        if hasattr(stream, "reconfigure"):
            stream.reconfigure(encoding="utf-8")
    try:
        args = build_parser().parse_args(argv)
        settings = resolve_settings(args)
        return COMMANDS[args.command](args, settings)
    except UsageError as exc:
        print(f"cvbit: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"cvbit: numeric error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"cvbit: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
