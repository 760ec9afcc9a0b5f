"""nc-torus-lab: command-line front end.

Exit codes: 0 success, 1 a check failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import sys
from fractions import Fraction
from typing import Any, Dict, List, Optional

import mpmath

from . import __version__
from .clustering_suite import (
    condition_3_12_average,
    equidistribution_test,
    random_thetas,
    strong_clustering_scan,
    weak_clustering_scan,
)
from .free_product_state import (
    BudgetExceeded,
    FreeWord,
    GenericEvaluator,
    NumericEvaluator,
    SpecialEvaluator,
    phi_inf_generic,
    phi_inf_numeric,
    phi_inf_special,
    cancelling_word,
)
from .moments_clt import (
    GAUSSIAN,
    SEMICIRCLE,
    NotCentred,
    classify_statistics,
    finite_N_moment,
    moment_limit,
    moment_report,
    pair_covariance,
    reference_moment,
)
from .scalars import ThetaSeries, to_mpc
from .spectral_number_theory import (
    HyperbolicMatrix,
    InvalidMatrix,
    InvalidResidue,
    TraceSequence,
    beta_via_gamma,
    congruence_check,
    gamma_partial_sum,
    gamma_partial_sum_closed_form,
    gamma_step_identity,
    lambda_inverse_power_via_gamma,
    matrix_power,
    special_theta,
    verify_beta_limit,
)
from .theta import ExplicitReal, GenericIrrational, PrecisionExhausted, Rational, SpecialQuadratic, ThetaParameter, Zero
from .weyl_algebra import WeylObservable, scalar_parts

CSV_HEADER = "# nc-torus-lab v1"

DEFAULT_CONFIG: Dict[str, Any] = {
    "matrix": [[2, 1], [1, 1]],
    "theta": {"kind": "special", "ell": 1, "r": 0},
    "words": [{"id": "cancelling", "letters": cancelling_word().to_json()}],
    "evaluators": ["generic"],
    "observable": [{"vector": [1, 0], "re": "1", "im": "0"}, {"vector": [-1, 0], "re": "1", "im": "0"}],
    "orders": [2, 4, 6],
    "Ns": [2, 4, 8],
    "t_max": 25,
    "tmax_avg": 10000,
    "sep": 10,
    "precision": 128,
    "beta_tolerance": "1e-8",
    "scan": {"m": [1, 0], "n": [1, 0], "t_range": [1, 20]},
    "equidistribution": {"m": [1, 0], "n": [0, 1], "N": 10000, "samples": 100, "harmonics": 1},
    "seed": 0,
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


def load_config(path: Optional[str]) -> Dict[str, Any]:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if isinstance(data, dict) and "config" in data and "matrix" not in data:
            data = data["config"]  # a previous JSON report
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        cfg.update(data)
    return cfg


def apply_overrides(cfg: Dict[str, Any], args: argparse.Namespace) -> Dict[str, Any]:
    if args.tmax is not None:
        cfg["t_max"] = args.tmax
        cfg["tmax_avg"] = args.tmax
    if args.sep is not None:
        cfg["sep"] = args.sep
    if args.precision is not None:
        cfg["precision"] = args.precision
    if args.seed is not None:
        cfg["seed"] = args.seed
    return cfg


def parse_matrix(cfg) -> HyperbolicMatrix:
    try:
        return HyperbolicMatrix.from_rows(cfg["matrix"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid matrix: {exc}") from exc


def parse_theta(theta_cfg: Dict[str, Any], T: HyperbolicMatrix, precision: int = 128) -> ThetaParameter:
    kind = theta_cfg.get("kind")
    try:
        if kind == "zero":
            return Zero()
        if kind == "rational":
            return Rational(Fraction(str(theta_cfg["value"])))
        if kind == "special":
            return special_theta(T, int(theta_cfg["ell"]), int(theta_cfg["r"]))
        if kind == "generic":
            return GenericIrrational()
        if kind == "real":
            source = theta_cfg.get("source", "exact")
            if source == "exact":
                return ExplicitReal.exact(Fraction(str(theta_cfg["value"])), prec=precision)
            if source == "sqrt":
                return ExplicitReal.sqrt(Fraction(str(theta_cfg["value"])), prec=precision)
            if source == "random":
                return ExplicitReal.random(int(theta_cfg["value"]), prec=precision)
            raise ConfigError(f"unknown real source {source!r}")
    except (KeyError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"invalid theta {theta_cfg}: {exc}") from exc
    raise ConfigError(f"unknown theta kind {kind!r}")


def _vec(x) -> tuple:
    try:
        a, b = x
        return int(a), int(b)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid lattice vector {x!r}") from exc


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, (int, Fraction)):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    return mpmath.nstr(v, 30)


def _parts(value) -> tuple:
    if isinstance(value, complex):
        return value.real, value.imag
    return scalar_parts(value)


def emit(args, rows: List[Dict[str, Any]], fields: List[str], report: Dict[str, Any], comments: List[str] = ()) -> None:
    if args.format == "json":
        text = json.dumps(report, indent=2, default=str) + "\n"
    else:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for c in comments:
            buf.write(f"# {c}\n")
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow(row)
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_verify_number_theory(cfg, args) -> int:
    T = parse_matrix(cfg)
    t_max = int(cfg["t_max"])
    precision = int(cfg["precision"])
    checks = []
    seq = TraceSequence.of(T, max(40, t_max))
    checks.append({"name": "trace_recursion", "passed": all(
        seq.beta(t) == matrix_power(T, t)[0][0] + matrix_power(T, t)[1][1] for t in range(0, 41))})
    ok, W = congruence_check(T)
    checks.append({"name": "congruence", "passed": ok, "witness": [list(r) for r in W], "modulus": T.beta1 - 2})
    checks.append({"name": "beta_from_gamma", "passed": all(beta_via_gamma(T, t, seq) == seq.beta(t) for t in range(2, 31))})
    checks.append({"name": "lambda_power_from_gamma",
                   "passed": all(lambda_inverse_power_via_gamma(T, t, seq) == T.lam ** (-t) for t in range(1, 31))})
    checks.append({"name": "gamma_step", "passed": all(gamma_step_identity(T, t, seq) for t in range(2, 31))})
    checks.append({"name": "gamma_partial_sum", "passed": all(
        gamma_partial_sum_closed_form(T, t) == gamma_partial_sum(T, t, seq) for t in range(2, 31))})
    theta = parse_theta(cfg["theta"], T, precision)
    rows = []
    if not isinstance(theta, GenericIrrational):
        try:
            residuals = verify_beta_limit(T, theta, t_max, precision)
        except PrecisionExhausted as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        tol = float(cfg.get("beta_tolerance", 1e-8))
        final = residuals[-1]
        passed = True
        if isinstance(theta, (SpecialQuadratic, Zero)):
            passed = float(final) <= tol or (t_max < 25 and final <= residuals[0])
        checks.append({"name": "beta_limit", "passed": passed, "final_residual": float(final), "tolerance": tol})
        rows = [{"t": t, "residual": _fmt(mpmath.mpf(r.numerator) / r.denominator)} for t, r in enumerate(residuals, 1)]
    report = {"command": "verify-number-theory", "config": cfg, "checks": checks, "residuals": rows}
    comments = [f"check {c['name']} {'pass' if c['passed'] else 'FAIL'}" for c in checks]
    emit(args, rows, ["t", "residual"], report, comments)
    return 0 if all(c["passed"] for c in checks) else 1


def _numeric_theta(cfg, T, theta) -> ThetaParameter:
    if theta.is_numeric:
        return theta
    if "numeric_theta" in cfg:
        return parse_theta(cfg["numeric_theta"], T, int(cfg["precision"]))
    return ExplicitReal.random(int(cfg["seed"]))


def cmd_correlate(cfg, args) -> int:
    T = parse_matrix(cfg)
    theta = parse_theta(cfg["theta"], T, int(cfg["precision"]))
    evaluators = cfg.get("evaluators", ["generic"])
    rows = []
    for entry in cfg.get("words", []):
        wid = entry.get("id", str(len(rows)))
        try:
            word = FreeWord.from_json(entry["letters"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"word {wid}: {exc}") from exc
        values = []
        for ev in evaluators:
            row = {"word_id": wid, "evaluator": ev, "value_re": "", "value_im": "", "error_estimate": "", "note": ""}
            try:
                if ev == "generic":
                    series = phi_inf_generic(word, T)
                    val = series.scalar() if series.is_scalar() else series.at(_numeric_theta(cfg, T, theta))
                    err = 0
                elif ev == "special":
                    if not isinstance(theta, SpecialQuadratic):
                        raise ConfigError("the special evaluator needs a special theta")
                    val = phi_inf_special(word, T, theta.ell, theta.r)
                    err = 0
                elif ev == "numeric":
                    res = phi_inf_numeric(word, T, _numeric_theta(cfg, T, theta), int(cfg["tmax_avg"]), int(cfg["sep"]))
                    val, err = res.value, res.error
                else:
                    raise ConfigError(f"unknown evaluator {ev!r}")
            except BudgetExceeded as exc:
                row["note"] = str(exc)
                rows.append(row)
                continue
            re, im = _parts(val)
            row.update(value_re=_fmt(re), value_im=_fmt(im), error_estimate=_fmt(err))
            values.append(complex(float(re), float(im)))
            rows.append(row)
        if len(values) >= 2:
            spread = max(abs(a - b) for a in values for b in values)
            for row in rows:
                if row["word_id"] == wid:
                    row["max_abs_difference"] = repr(spread)
    fields = ["word_id", "evaluator", "value_re", "value_im", "error_estimate", "max_abs_difference", "note"]
    emit(args, rows, fields, {"command": "correlate", "config": cfg, "rows": rows})
    return 0


def _moment_evaluator(T, theta):
    if isinstance(theta, GenericIrrational):
        return GenericEvaluator(T)
    if isinstance(theta, SpecialQuadratic):
        return SpecialEvaluator(T, theta.ell, theta.r)
    if isinstance(theta, Zero):
        return SpecialEvaluator(T, 0, 0)
    raise ConfigError("moments need a generic, zero or special theta")


def _observable(cfg) -> WeylObservable:
    try:
        return WeylObservable.from_json(cfg["observable"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid observable: {exc}") from exc


def cmd_moments(cfg, args) -> int:
    T = parse_matrix(cfg)
    theta = parse_theta(cfg["theta"], T, int(cfg["precision"]))
    X = _observable(cfg)
    ev = _moment_evaluator(T, theta)
    try:
        report = moment_report(X, T, theta, ev, [int(r) for r in cfg["orders"]], [int(n) for n in cfg.get("Ns", [])])
    except NotCentred as exc:
        rows = [{"N": "", "order": "", "value_re": "", "value_im": "", "law": "", "V": "", "note": str(exc)}]
        emit(args, rows, list(rows[0]), {"command": "moments", "config": cfg, "rows": rows})
        return 1
    rows = report.rows()
    fields = ["N", "order", "value_re", "value_im", "law", "V", "gaussian_ref", "semicircle_ref"]
    emit(args, rows, fields, {"command": "moments", "config": cfg, **report.to_json()})
    return 0


def cmd_clt(cfg, args) -> int:
    """Finite-N moments against their limits, with N * |M_r(N) - M_r| as the convergence constant."""
    T = parse_matrix(cfg)
    theta = parse_theta(cfg["theta"], T, int(cfg["precision"]))
    X = _observable(cfg)
    ev = _moment_evaluator(T, theta)
    law = classify_statistics(T, theta)
    rows = []
    try:
        for r in cfg["orders"]:
            r = int(r)
            lim = moment_limit([X] * r, ev, ordered=ev.permutation_invariant)
            lim_v = complex(to_mpc(lim.scalar() if isinstance(lim, ThetaSeries) else lim, 64))
            for N in cfg.get("Ns", []):
                val = finite_N_moment(X, int(N), r, ev)
                v = complex(to_mpc(val.scalar() if isinstance(val, ThetaSeries) else val, 64))
                rows.append({"order": r, "N": N, "finite": repr(v.real), "limit": repr(lim_v.real),
                             "N_times_gap": repr(int(N) * abs(v - lim_v)), "law": law})
    except NotCentred as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    emit(args, rows, ["order", "N", "finite", "limit", "N_times_gap", "law"], {"command": "clt", "config": cfg, "rows": rows})
    return 0


def cmd_cluster(cfg, args) -> int:
    T = parse_matrix(cfg)
    theta = parse_theta(cfg["theta"], T, int(cfg["precision"]))
    scan_cfg = cfg.get("scan", {})
    m, n = _vec(scan_cfg.get("m", [1, 0])), _vec(scan_cfg.get("n", [1, 0]))
    lo, hi = scan_cfg.get("t_range", [1, 20])
    t_range = range(int(lo), int(hi) + 1)
    rows, comments, verdicts = [], [], {}
    scans = {}
    if theta.is_numeric:
        scans["strong"] = strong_clustering_scan(m, n, T, theta, t_range)
    X, Y, Z = WeylObservable.monomial(m), WeylObservable.monomial(n), WeylObservable.monomial((-m[0], -m[1]))
    scans["weak"] = weak_clustering_scan(X, Y, Z, T, theta, t_range)
    for name, sc in scans.items():
        verdicts[name] = sc.verdict
        comments.append(f"verdict {name} {sc.verdict}")
        for t, v in zip(sc.times, sc.values):
            z = complex(to_mpc(v.scalar(), 64)) if isinstance(v, ThetaSeries) and v.is_scalar() else (
                0j if isinstance(v, ThetaSeries) and v.is_zero() else complex(to_mpc(v, 64)) if not isinstance(v, ThetaSeries) else complex("nan"))
            rows.append({"scan": name, "t": t, "value_re": repr(z.real), "value_im": repr(z.imag), "abs_value": repr(abs(z))})
    report = {"command": "cluster", "config": cfg, "verdicts": verdicts, "rows": rows}
    emit(args, rows, ["scan", "t", "value_re", "value_im", "abs_value"], report, comments)
    return 0


def cmd_equidistribution(cfg, args) -> int:
    T = parse_matrix(cfg)
    eq = cfg.get("equidistribution", {})
    m, n = _vec(eq.get("m", [1, 0])), _vec(eq.get("n", [0, 1]))
    N = int(eq.get("N", 10000))
    thetas = random_thetas(int(eq.get("samples", 100)), int(cfg["seed"]))
    rep = equidistribution_test(m, n, T, thetas, N, int(eq.get("harmonics", 1)))
    rows = []
    for i, sums in enumerate(rep.sums):
        for k, z in enumerate(sums, 1):
            rows.append({"sample": i, "k": k, "value_re": repr(z.real), "value_im": repr(z.imag), "abs_value": repr(abs(z))})
    summary = {f"mean_square_k{k}": rep.mean_square(k) for k in range(1, rep.harmonics + 1)}
    comments = [f"{key} {val!r} (1/N = {1 / N!r})" for key, val in summary.items()]
    emit(args, rows, ["sample", "k", "value_re", "value_im", "abs_value"],
         {"command": "equidistribution", "config": cfg, "summary": summary, "rows": rows}, comments)
    return 0


COMMANDS = {
    "verify-number-theory": cmd_verify_number_theory,
    "correlate": cmd_correlate,
    "moments": cmd_moments,
    "clt": cmd_clt,
    "cluster": cmd_cluster,
    "equidistribution": cmd_equidistribution,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nc-torus-lab", description="Quantized hyperbolic toral automorphisms: exact checks and experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or name).strip().splitlines()[0])
        p.add_argument("--config", help="JSON config file (or a previous JSON report)")
        p.add_argument("--out", help="write output here instead of stdout")
        p.add_argument("--format", choices=["csv", "json"], default="json" if name == "verify-number-theory" else "csv")
        p.add_argument("--precision", type=int, help="bits of precision for certified values")
        p.add_argument("--tmax", type=int, help="time horizon (number theory t_max and averaging T_max)")
        p.add_argument("--sep", type=int, help="separation window d for numeric averages")
        p.add_argument("--seed", type=int, help="seed for randomized runs")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = apply_overrides(load_config(args.config), args)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, InvalidMatrix, InvalidResidue) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
