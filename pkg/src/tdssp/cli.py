"""Command-line interface: ``tdssp <command> [options]``.

Commands
--------
``tv-sweep``      total-variation sweep over the Courant number (CSV)
``certify``       SSP certificate of a registry method (JSON)
``order-check``   order-condition residuals (JSON)
``convergence``   observed temporal order on a smooth problem (CSV)
``list-methods``  the registry (JSON)

Exit codes: 0 success, 2 validation failure (bad arguments, wrong method
class, unsatisfied order conditions), 3 numerical blow-up.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import ssp_certify as cert
from .integrators import BlowUpError, integrate, observed_orders
from .order_conditions import OrderRangeError, check_order
from .registry import UnknownMethodError, export_registry, lookup
from .sweep import MethodClassError, tv_sweep

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_INVALID", "EXIT_BLOWUP"]

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_BLOWUP = 3

CONVERGENCE_SCHEMA = "# tdssp convergence v1: dt,error,observed_order"
_FAMILY = {"td-ts": "TS", "td-2s4p": "2s4p", "td-2s3p": "2s3p", "td-3s5p": "3s5p"}


class ValidationError(ValueError):
    """Arguments are well-formed but inconsistent with the chosen method."""


def _positive(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (value > 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"must be a positive number: {text!r}")
    return value


def _dt_list(text: str) -> list[float]:
    return [_positive(t) for t in text.replace(" ", "").split(",") if t]


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _spec(args: argparse.Namespace):
    return lookup(args.method, K=getattr(args, "K", None), kappa=getattr(args, "kappa", None),
                  k=getattr(args, "k", None))


def _check_params(spec, args: argparse.Namespace) -> None:
    K, kappa, k = getattr(args, "K", None), getattr(args, "kappa", None), getattr(args, "k", None)
    if K is not None and not (spec.kind == "explicit" and spec.condition_class in ("SD", None)):
        raise ValidationError(f"--K applies to SD methods, not {spec.name}")
    if kappa is not None and spec.condition_class != "TS":
        raise ValidationError(f"--kappa applies to TS methods, not {spec.name}")
    if k is not None and spec.name != "imex-glm-kstep-p2":
        raise ValidationError("--k applies to imex-glm-kstep-p2 only")


# ---------------------------------------------------------------------------
# commands


def cmd_tv_sweep(args: argparse.Namespace) -> int:
    res = tv_sweep(args.method, dx=args.dx, steps=args.steps, lambda_min=args.lambda_min,
                   lambda_max=args.lambda_max, lambda_step=args.lambda_step, refine=args.refine,
                   rise_tol=args.rise_tol, workers=args.workers)
    text = res.to_csv()
    if args.out:
        _emit(text, args.out)
        print(json.dumps(res.summary()))
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_certify(args: argparse.Namespace) -> int:
    spec = _spec(args)
    _check_params(spec, args)
    c = cert.certify(spec, r_max=args.r_max)
    doc = c.to_dict()
    if spec.kind == "explicit":
        closed = None
        if spec.name in _FAMILY:
            closed = cert.closed_form_C(_FAMILY[spec.name], spec.param)
        elif spec.name == "ts-3s4p":
            closed = float(spec.method.meta["r"])
        if closed is not None:
            doc["closed_form"] = closed
            doc["delta"] = c.certified_r - closed
    _emit(json.dumps(doc, indent=2), args.out)
    return EXIT_OK


def cmd_order_check(args: argparse.Namespace) -> int:
    spec = _spec(args)
    _check_params(spec, args)
    rep = check_order(spec, args.order, args.tol)
    _emit(rep.to_json(indent=2), args.out)
    return EXIT_OK if rep.satisfied else EXIT_INVALID


def _convergence_setup(spec, problem: str, T: float, eps: float, m: int):
    from scipy.linalg import expm

    from .problems import RelaxationProblem, RiccatiProblem, SplitRiccatiProblem

    if problem == "ode-riccati":
        if spec.kind not in ("explicit", "implicit-nd"):
            raise ValidationError("ode-riccati pairs with explicit or implicit methods")
        sys_ = RiccatiProblem("explicit" if spec.kind == "explicit" else "implicit")
        return sys_, sys_.initial(), sys_.exact(T), "exact"
    if spec.kind not in ("imex-rk", "imex-glm"):
        raise ValidationError(f"{problem} pairs with IMEX methods")
    if problem == "split-riccati":
        sys_ = SplitRiccatiProblem()
        return sys_, sys_.initial(), sys_.exact(T), "exact"
    if problem == "relaxation":
        sys_ = RelaxationProblem(eps=eps, m=m, coupled=True)
        L_ex, L_im = sys_.linear_operators()
        w0 = sys_.initial("smooth")
        return sys_, w0, expm(T * (L_ex + L_im)) @ w0, "single-step"
    raise ValidationError(f"unknown problem {problem!r}")


def cmd_convergence(args: argparse.Namespace) -> int:
    spec = _spec(args)
    _check_params(spec, args)
    sys_, u0, ref, starting = _convergence_setup(spec, args.problem, args.T, args.eps, args.m)
    errors, dts = [], []
    for dt in args.dt_list:
        n = int(round(args.T / dt))
        if n < 1 or abs(n * dt - args.T) > 1e-9 * args.T:
            raise ValidationError(f"dt={dt} does not divide T={args.T}")
        u, _ = integrate(spec, sys_, u0, dt, n, starting=starting)
        errors.append(float(np.abs(u - ref).max()))
        dts.append(dt)
    rates = [math.nan] + observed_orders(errors, dts)
    lines = [CONVERGENCE_SCHEMA, "dt,error,observed_order"]
    lines += [f"{dt!r},{err!r},{rate!r}" for dt, err, rate in zip(dts, errors, rates)]
    _emit("\n".join(lines), args.out)
    return EXIT_OK


def cmd_list_methods(args: argparse.Namespace) -> int:
    _emit(export_registry(), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tdssp", description="SSP two-derivative time integrators")
    sub = p.add_subparsers(dest="command", required=True)

    def method_args(sp, params: bool = True):
        sp.add_argument("--method", required=True, help="registry identifier")
        if params:
            sp.add_argument("--K", type=_positive, default=None, help="SD constant (default 1/sqrt(2))")
            sp.add_argument("--kappa", type=_positive, default=None, help="TS constant (default 1)")
            sp.add_argument("--k", type=int, default=None, help="step count for imex-glm-kstep-p2")
        sp.add_argument("--out", default=None, help="output file (default: stdout)")

    sp = sub.add_parser("tv-sweep", help="total-variation sweep over lambda = dt/dx")
    method_args(sp, params=False)
    sp.add_argument("--dx", type=_positive, default=1.0 / 1600)
    sp.add_argument("--steps", type=int, default=50)
    sp.add_argument("--lambda-min", type=_positive, default=0.05)
    sp.add_argument("--lambda-max", type=_positive, default=2.0)
    sp.add_argument("--lambda-step", type=_positive, default=0.0025)
    sp.add_argument("--refine", type=_positive, default=1e-4)
    sp.add_argument("--rise-tol", type=_positive, default=1e-10)
    sp.add_argument("--workers", type=int, default=None)
    sp.set_defaults(func=cmd_tv_sweep)

    sp = sub.add_parser("certify", help="SSP certificate (JSON)")
    method_args(sp)
    sp.add_argument("--r-max", type=_positive, default=100.0)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("order-check", help="order-condition residuals (JSON)")
    method_args(sp)
    sp.add_argument("--order", type=int, required=True)
    sp.add_argument("--tol", type=_positive, default=None)
    sp.set_defaults(func=cmd_order_check)

    sp = sub.add_parser("convergence", help="observed temporal order (CSV)")
    method_args(sp)
    sp.add_argument("--problem", required=True, choices=["ode-riccati", "split-riccati", "relaxation"])
    sp.add_argument("--dt-list", type=_dt_list, default=[0.1, 0.05, 0.025, 0.0125])
    sp.add_argument("--T", type=_positive, default=1.0)
    sp.add_argument("--eps", type=_positive, default=1.0, help="relaxation time (relaxation problem)")
    sp.add_argument("--m", type=int, default=32, help="cells (relaxation problem)")
    sp.set_defaults(func=cmd_convergence)

    sp = sub.add_parser("list-methods", help="registry as JSON")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_list_methods)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except BlowUpError as exc:
        print(f"tdssp: blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except (UnknownMethodError, MethodClassError, ValidationError, OrderRangeError, ValueError) as exc:
        print(f"tdssp: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
