"""Command-line interface.

Exit codes: 0 success, 2 numeric failure, 3 comparison failure, 4 input
error.  File formats are the JSON/CSV structures documented per module.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import anomaly, circle, cochain, comparison, driver, morse, zeta
from .errors import FitError, InputError, TorsionLabError

EXIT_OK = 0
EXIT_NUMERIC = 2
EXIT_COMPARISON = 3
EXIT_INPUT = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torsionlab",
        description="Torsion laboratory: combinatorial and analytic torsion on the circle",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_complex = sub.add_parser("complex", help="operations on graded-complex files")
    sub_complex = p_complex.add_subparsers(dest="subcommand", required=True)
    p_ct = sub_complex.add_parser("torsion", help="torsion of a complex file")
    p_ct.add_argument("file")

    p_morse = sub.add_parser("morse", help="operations on Morse data files")
    sub_morse = p_morse.add_subparsers(dest="subcommand", required=True)
    p_mb = sub_morse.add_parser("build", help="build and summarize the Morse complex")
    p_mb.add_argument("file")
    p_mt = sub_morse.add_parser("torsion", help="Milnor torsion of Morse data")
    p_mt.add_argument("file")

    p_sweep = sub.add_parser("sweep", help="deformation sweep of the analytic torsion")
    p_sweep.add_argument("--model", required=True)
    p_sweep.add_argument("--t-min", type=float, required=True)
    p_sweep.add_argument("--t-max", type=float, required=True)
    p_sweep.add_argument("--samples", type=int, required=True)
    p_sweep.add_argument("--spacing", choices=("uniform", "log"), default="log")
    p_sweep.add_argument("--out", required=True)

    p_fit = sub.add_parser("fit", help="fit the expansion to a sweep CSV")
    p_fit.add_argument("--in", dest="infile", required=True)
    p_fit.add_argument("--out", required=True)

    p_pred = sub.add_parser("predict", help="predicted coefficients from topology")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--morse", required=True)
    p_pred.add_argument("--theta-psi", type=float, default=None,
                        help="user-supplied theta-psi pairing (non-parallel metrics)")
    p_pred.add_argument("--out", required=True)

    p_cmp = sub.add_parser("compare", help="compare fitted against predicted coefficients")
    p_cmp.add_argument("--fit", required=True)
    p_cmp.add_argument("--predict", required=True)
    p_cmp.add_argument("--tol-a0", type=float, default=0.05)
    p_cmp.add_argument("--tol-a1", type=float, default=0.02)
    p_cmp.add_argument("--tol-b", type=float, default=0.05)

    p_verify = sub.add_parser("verify", help="randomized exact-identity suite")
    p_verify.add_argument("--seed", type=int, default=1)
    p_verify.add_argument("--count", type=int, default=100)
    return parser


def _cmd_complex_torsion(args) -> int:
    c = cochain.load_complex(args.file)
    value = cochain.torsion_log(c)
    b = cochain.betti(c)
    print(json.dumps({"log_torsion": value, "betti": list(b.numbers)}))
    return EXIT_OK


def _cmd_morse_build(args) -> int:
    data = morse.load_morse(args.file)
    built = morse.build_thom_smale(data)
    b = cochain.betti(built)
    chi, chi_prime = cochain.euler_characteristics(b)
    print(
        json.dumps(
            {
                "dims": list(built.dims),
                "betti": list(b.numbers),
                "chi": chi,
                "chi_prime": chi_prime,
                "tilde_chi_prime": morse.tilde_chi_prime(data),
                "self_indexing": data.self_indexing,
            }
        )
    )
    return EXIT_OK


def _cmd_morse_torsion(args) -> int:
    data = morse.load_morse(args.file)
    print(json.dumps({"log_torsion": morse.milnor_torsion_log(data)}))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    model = circle.load_model(args.model)
    config = driver.SweepConfig(
        t_min=args.t_min, t_max=args.t_max, samples=args.samples, spacing=args.spacing
    )
    rows = driver.sweep(model, config)
    driver.write_sweep_csv(rows, args.out)
    failures = [r for r in rows if r.error is not None]
    print(f"wrote {len(rows)} rows to {args.out}; {len(failures)} failed")
    for r in failures:
        print(f"  t={r.t:g}: {r.error}")
    return EXIT_NUMERIC if failures else EXIT_OK


def _cmd_fit(args) -> int:
    rows = driver.read_sweep_csv(args.infile)
    result = driver.fit_rows(rows)
    with open(args.out, "w") as fh:
        json.dump(result.as_dict(), fh, indent=2)
    print(json.dumps(result.as_dict()))
    return EXIT_OK


def _cmd_predict(args) -> int:
    model = circle.load_model(args.model)
    data = morse.load_morse(args.morse)
    built = morse.build_thom_smale(data)
    b = cochain.betti(built)
    chi, chi_prime = cochain.euler_characteristics(b)
    if args.theta_psi is not None:
        theta_psi = args.theta_psi
        prov = "user-supplied"
    elif model.parallel and data.parallel_metric:
        theta_psi = 0.0
        prov = "vanishes-by-assumption"
    else:
        theta_psi = None
        prov = "user-supplied"
    inputs = anomaly.PredictionInputs(
        n=1,
        rank=model.rank,
        chi=chi,
        chi_prime=chi_prime,
        tilde_chi_prime=morse.tilde_chi_prime(data),
        log_rho_morse=morse.milnor_torsion_log(data),
        f_euler_integral=0.0,
        theta_psi_integral=theta_psi,
        provenance={"f_euler_integral": "vanishes-by-assumption", "theta_psi_integral": prov},
    )
    prediction = anomaly.predict_coefficients(inputs)
    anomaly.save_prediction(inputs, prediction, args.out)
    print(json.dumps(prediction.as_dict()))
    return EXIT_OK


def _cmd_compare(args) -> int:
    with open(args.fit) as fh:
        fit = driver.fit_from_dict(json.load(fh))
    with open(args.predict) as fh:
        pred_data = json.load(fh)
    coeffs = pred_data.get("coefficients", pred_data)
    prediction = anomaly.Prediction(
        a0=coeffs.get("a0"), a1=float(coeffs["a1"]), b=float(coeffs["b"])
    )
    report = driver.compare(
        fit, prediction, tol_a0=args.tol_a0, tol_a1=args.tol_a1, tol_b=args.tol_b
    )
    print(json.dumps(report, indent=2))
    return EXIT_OK if report["verdict"] == "pass" else EXIT_COMPARISON


def _cmd_verify(args) -> int:
    report = driver.verify_finite_suite(seed=args.seed, count=args.count)
    print(json.dumps(report.as_dict(), indent=2))
    return EXIT_OK if report.passed else EXIT_NUMERIC


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        ("complex", "torsion"): _cmd_complex_torsion,
        ("morse", "build"): _cmd_morse_build,
        ("morse", "torsion"): _cmd_morse_torsion,
        ("sweep", None): _cmd_sweep,
        ("fit", None): _cmd_fit,
        ("predict", None): _cmd_predict,
        ("compare", None): _cmd_compare,
        ("verify", None): _cmd_verify,
    }
    key = (args.command, getattr(args, "subcommand", None))
    try:
        return handlers[key](args)
    except (InputError, FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FitError as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except TorsionLabError as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
