"""Command-line driver: ``moments <verb> [--flag value ...]``.

Every verb runs one computation, compares it with a reference value and
emits a report record with the keys in ``REPORT_KEYS``.  Numeric flags
accept comma-separated lists; the cartesian product of all lists is run as
a sweep and reported as a JSON list (or one CSV row per point).

Exit status is 0 when every record passes, 1 when any fails and 2 on a
usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from . import contour, exact, hankel, painleve, sampler
from .algebra import default_precision, working_precision
from .errors import (
    CancellationError,
    ConvergenceError,
    DegenerateParametersError,
    InconsistencyError,
    PoleError,
)

REPORT_KEYS = (
    "command",
    "params",
    "value",
    "reference",
    "rel_error",
    "std_error",
    "samples",
    "seed",
    "precision_bits",
    "elapsed_ms",
    "pass",
)

MC_OBSERVABLES = ("z2", "zprime2", "mixed", "lambda_power", "logderiv", "shifted")
HANKEL_CHECKS = ("delta", "product", "mop", "gamma", "plemelj", "tau")

# name -> (type, default, help); None defaults are resolved by the command
COMMAND_PARAMS = {
    "mc": {
        "observable": (str, "z2", f"one of {', '.join(MC_OBSERVABLES)}"),
        "n": (int, 20, "matrix dimension N"),
        "samples": (int, 100_000, "number of Haar samples"),
        "k": (int, 1, "K for mixed and logderiv observables"),
        "m": (int, 0, "M for the mixed observable"),
        "a": (float, 0.5, "alpha = a/N for logderiv"),
        "power": (float, 2.0, "exponent for lambda_power"),
        "alpha1": (float, 0.1, "first shift for shifted"),
        "alpha2": (float, 0.2, "second shift for shifted"),
        "workers": (int, 1, "worker processes (results do not depend on it)"),
        "sigma": (float, 3.0, "pass if |mean - reference| <= sigma * std_error"),
        "reference": (str, "exact", "exact finite-N reference, or leading large-N term"),
        "rel_tol": (float, None, "relative tolerance; replaces the sigma test when given"),
    },
    "exact": {
        "k": (int, 2, "number of shifts on each side"),
        "a": (float, 0.01, "alpha = a/N"),
        "n": (int, 100, "matrix dimension N"),
        "rel_tol": (float, 1e-15, "agreement with the closed form (K <= 2)"),
    },
    "theorem1": {
        "k": (int, 1, "K"),
        "m": (int, 0, "M, 0 <= M <= K"),
    },
    "theorem2": {
        "k": (int, 2, "K"),
        "a": (float, 0.01, "alpha = a/N"),
        "n": (int, 1_000_000, "matrix dimension N"),
        "rel_tol": (float, None, "relative tolerance (default 3a)"),
    },
    "lemma1": {
        "k": (int, 3, "K"),
        "cap": (int, 4, "series truncation degree"),
    },
    "lemma2": {
        "k": (int, 2, "K"),
        "variant": (str, "rowK", "rowK or row2K"),
    },
    "cmatrix": {
        "k": (int, 3, "K"),
    },
    "painleve": {
        "k": (int, 2, "K"),
        "s": (float, 1.0, "point 0 < s <= 2"),
        "terms": (int, 40, "series terms"),
        "tol": (float, 1e-10, "residual tolerance"),
    },
    "hankel": {
        "check": (str, "product", f"one of {', '.join(HANKEL_CHECKS)}"),
        "k": (int, 1, "K"),
        "a": (float, 0.0, "weight parameter a"),
        "t1": (float, 0.0, "weight parameter t1"),
        "t2": (float, 0.0, "weight parameter t2"),
        "n1": (int, 1, "multi-index n1 for mop and gamma"),
        "n2": (int, 1, "multi-index n2 for mop and gamma"),
        "phase": (float, math.pi / 4, "contour point 2 e^{i phase} for plemelj"),
        "delta": (float, 0.2, "largest offset for plemelj (then halved twice)"),
        "tol": (float, 1e-9, "tolerance"),
    },
    "crosscheck": {
        "k": (int, 2, "K for the Delta_(K,K) moment entries"),
        "tol": (float, 1e-12, "largest allowed moment discrepancy"),
    },
}


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    precision_bits: int | None = None
    output_format: str = "json"
    output_path: str | None = None

    def __post_init__(self):
        if self.command not in COMMAND_PARAMS:
            raise UsageError(f"unknown command {self.command!r}")
        allowed = COMMAND_PARAMS[self.command]
        unknown = set(self.parameters) - set(allowed)
        if unknown:
            raise UsageError(f"unknown parameters for {self.command}: {sorted(unknown)}")
        if self.output_format not in ("json", "csv"):
            raise UsageError("output format must be json or csv")
        if self.precision_bits is None:
            self.precision_bits = default_precision()
        if self.precision_bits < 53:
            raise UsageError("precision must be at least 53 bits")
        if not 0 <= self.seed < 2**64:
            raise UsageError("seed must be a 64-bit unsigned integer")

    def points(self) -> list[dict]:
        """The parameter sweep, with defaults filled in."""
        spec = COMMAND_PARAMS[self.command]
        axes = []
        for name, (kind, default, _) in spec.items():
            value = self.parameters.get(name, default)
            values = value if isinstance(value, list) else [value]
            axes.append([(name, v) for v in values])
        return [dict(combo) for combo in itertools.product(*axes)]


# -- value conversion ---------------------------------------------------------


def _number(x):
    """JSON-friendly number: complex values with negligible imaginary part become real."""
    if x is None:
        return None
    if isinstance(x, (list, tuple)):
        return [_number(v) for v in x]
    if isinstance(x, bool):
        return x
    if isinstance(x, (int, Fraction)):
        return float(x) if isinstance(x, Fraction) else x
    if isinstance(x, (mpmath.mpc, complex)):
        re, im = float(mpmath.re(x)), float(mpmath.im(x))
        if abs(im) <= 1e-12 * max(1.0, abs(re)):
            return re
        return [re, im]
    return float(x)


def _rel_error(value, reference):
    if reference is None or value is None:
        return None
    if isinstance(value, list) or isinstance(reference, list):
        values = value if isinstance(value, list) else [value]
        refs = reference if isinstance(reference, list) else [reference]
        errs = [_rel_error(v, r) for v, r in zip(values, refs)]
        errs = [e for e in errs if e is not None]
        return max(errs) if errs else None
    if reference == 0:
        return None
    return abs(value - reference) / abs(reference)


def _result(value, reference=None, passed=True, std_error=None, samples=None, rel=None):
    return {
        "value": value,
        "reference": reference,
        "rel_error": rel,
        "std_error": std_error,
        "samples": samples,
        "pass": bool(passed),
    }


# -- commands -----------------------------------------------------------------


def _mc(p, seed, bits):
    n, kind = p["n"], p["observable"]
    if kind not in MC_OBSERVABLES:
        raise UsageError(f"observable must be one of {MC_OBSERVABLES}")
    if p["reference"] not in ("exact", "leading"):
        raise UsageError("reference must be exact or leading")
    leading = p["reference"] == "leading"
    if kind == "z2":
        spec, ref = sampler.MomentSpec.mixed_z(1, 1), n + 1
    elif kind == "zprime2":
        spec = sampler.MomentSpec.mixed_z(1, 0)
        ref = Fraction(n**3, 12) if leading else exact.exact_zprime2_moment(n)
    elif kind == "mixed":
        K, M = p["k"], p["m"]
        spec = sampler.MomentSpec.mixed_z(K, M)
        if not leading and K == 1:
            ref = n + 1 if M == 1 else exact.exact_zprime2_moment(n)
        else:
            ref = painleve.theorem1_coefficient(K, M) * n ** (K * K + 2 * K - 2 * M)
    elif kind == "lambda_power":
        spec = sampler.MomentSpec.abs_lambda_power(p["power"])
        ref = exact.abs_lambda_moment(n, p["power"], bits)
    elif kind == "logderiv":
        K, a = p["k"], p["a"]
        spec = sampler.MomentSpec.logderiv(K, a)
        alpha = mpmath.mpf(a) / n
        if leading:
            ref = exact.theorem2_leading(K, a, n, bits)
        elif K <= 2:
            ref = exact.section6_closed(K, alpha, n, bits)
        else:
            ref = exact.j_star_coincident(K, alpha, n, bits)
    else:
        spec = sampler.MomentSpec.shifted_z(p["alpha1"], p["alpha2"])
        ref = exact.permutation_moment([p["alpha1"], p["alpha2"]], n, bits)
    est = sampler.estimate_moment(spec, n, p["samples"], seed, workers=p["workers"])
    ref = _number(ref)
    rel = _rel_error(est.mean, ref)
    if p["rel_tol"] is not None:
        passed = rel is not None and rel <= p["rel_tol"]
    else:
        passed = abs(est.mean - ref) <= p["sigma"] * est.std_error
    return _result(est.mean, ref, passed, est.std_error, est.samples, rel)


def _exact(p, seed, bits):
    K, n = p["k"], p["n"]
    alpha = mpmath.mpf(p["a"]) / n
    value = exact.j_star_coincident(K, alpha, n, bits)
    if K <= 2:
        ref = exact.section6_closed(K, alpha, n, bits)
        rel = float(abs(value - ref) / abs(ref))
        return _result(_number(value), _number(ref), rel <= p["rel_tol"], rel=rel)
    return _result(_number(value))


def _theorem1(p, seed, bits):
    value = painleve.theorem1_painleve_form(p["k"], p["m"])
    ref = painleve.theorem1_coefficient(p["k"], p["m"])
    return _result(_number(value), _number(ref), value == ref, rel=float(abs(value - ref) / ref))


def _theorem2(p, seed, bits):
    K, a, n = p["k"], p["a"], p["n"]
    alpha = mpmath.mpf(a) / n
    if K <= 2:
        value = exact.section6_closed(K, alpha, n, bits)
    else:
        value = exact.j_star_coincident(K, alpha, n, bits)
    value, ref = _number(value), _number(exact.theorem2_leading(K, a, n, bits))
    tol = 3 * a if p["rel_tol"] is None else p["rel_tol"]
    rel = _rel_error(value, ref)
    return _result(value, ref, rel <= tol, rel=rel)


def _lemma1(p, seed, bits):
    K = p["k"]
    det = contour.lemma1_determinant(K, cap=p["cap"])
    ref = (-2) ** (K * K)
    value = det.constant_term
    passed = value == ref and not det.nonconstant_terms()
    return _result(_number(value), ref, passed, rel=float(abs(value - ref) / abs(ref)))


def _lemma2(p, seed, bits):
    K, variant = p["k"], p["variant"]
    if variant not in ("rowK", "row2K"):
        raise UsageError("variant must be rowK or row2K")
    det = contour.lemma2_determinant(K, variant)
    value = [det.coefficient(a, 2 * K - a) for a in range(2 * K + 1)]
    ref = [contour.lemma2_leading_coefficient(K, a, 2 * K - a, variant) for a in range(2 * K + 1)]
    passed = value == ref and not det.homogeneous_part(2 * K + 1)
    value, ref = _number(value), _number(ref)
    return _result(value, ref, passed, rel=_rel_error(value, ref))


def _cmatrix(p, seed, bits):
    K = p["k"]
    value = contour.c_matrix_determinant(K)
    ref = Fraction(1, math.factorial(2 * K))
    return _result(_number(value), _number(ref), value == ref, rel=float(abs(value - ref) / ref))


def _painleve(p, seed, bits):
    residual = painleve.painleve_residual(p["k"], p["s"], p["terms"], bits)
    value = float(residual)
    return _result(value, 0.0, value <= p["tol"])


def _hankel(p, seed, bits):
    check = p["check"]
    if check not in HANKEL_CHECKS:
        raise UsageError(f"check must be one of {HANKEL_CHECKS}")
    params = hankel.WeightParams(p["a"], p["t1"], p["t2"], p["k"])
    K, tol = p["k"], p["tol"]
    origin = p["a"] == p["t1"] == p["t2"] == 0
    if check == "delta":
        value = _number(hankel.hankel_delta((K, K), params))
        if not origin:
            return _result(value)
        ref = (-2) ** (K * K)
        rel = _rel_error(value, ref)
        return _result(value, ref, rel is not None and rel <= tol, rel=rel)
    if check == "product":
        value = _number(hankel.product_formula_delta(K, params))
        ref = _number(hankel.hankel_delta((K, K), params))
        rel = _rel_error(value, ref)
        return _result(value, ref, rel is not None and rel <= tol, rel=rel)
    if check in ("mop", "gamma"):
        index = (p["n1"], p["n2"])
        fn = hankel.mop_orthogonality_residual if check == "mop" else hankel.gamma_recurrence_residual
        value = fn(index, params)
        return _result(value, 0.0, value <= tol)
    if check == "plemelj":
        deltas = [p["delta"] / 2**k for k in range(3)]
        value = [hankel.plemelj_jump_residual(params, p["phase"], d) for d in deltas]
        ratios = [value[k] / value[k + 1] for k in range(2)]
        return _result(value, None, all(1.6 <= r <= 2.4 for r in ratios))
    report = hankel.tau_relations_at_origin(K)
    value = [report.tau0_residual, report.delta_residual]
    return _result(value, [0.0, 0.0], max(value) <= tol)


def _crosscheck(p, seed, bits):
    K = p["k"]
    params = hankel.WeightParams(0.0, 0.0, 0.0, K)
    worst = 0.0
    for j, (E, G) in ((1, (K, 0)), (2, (0, K))):
        for l in range(3 * K - 1):
            quad = hankel.weight_moment(j, l, params)
            exact_value = contour.residue_integral(contour.IntegralIndex(l, E, G))
            worst = max(worst, abs(quad - float(exact_value)))
    return _result(worst, 0.0, worst <= p["tol"])


HANDLERS = {
    "mc": _mc,
    "exact": _exact,
    "theorem1": _theorem1,
    "theorem2": _theorem2,
    "lemma1": _lemma1,
    "lemma2": _lemma2,
    "cmatrix": _cmatrix,
    "painleve": _painleve,
    "hankel": _hankel,
    "crosscheck": _crosscheck,
}

COMPUTATION_ERRORS = (
    CancellationError,
    ConvergenceError,
    DegenerateParametersError,
    InconsistencyError,
    PoleError,
)


def run_point(config: RunConfig, params: dict) -> dict:
    start = time.perf_counter()
    with working_precision(config.precision_bits):
        result = HANDLERS[config.command](params, config.seed, config.precision_bits)
    elapsed = (time.perf_counter() - start) * 1000
    report = {
        "command": config.command,
        "params": params,
        "seed": config.seed,
        "precision_bits": config.precision_bits,
        "elapsed_ms": round(elapsed, 3),
        **result,
    }
    return {key: report[key] for key in REPORT_KEYS}


def run(config: RunConfig) -> tuple[int, list[dict]]:
    """Run every sweep point; exit status 0 if all pass, else 1."""
    reports = [run_point(config, params) for params in config.points()]
    status = 0 if all(r["pass"] for r in reports) else 1
    return status, reports


# -- output -------------------------------------------------------------------


def to_json(reports: list[dict]) -> str:
    payload = reports[0] if len(reports) == 1 else reports
    return json.dumps(payload, indent=2) + "\n"


PARAM_PREFIX = "param."


def _encode_param(value) -> str:
    return value if isinstance(value, str) else json.dumps(value)


def _decode_param(command: str, name: str, cell: str):
    kind = COMMAND_PARAMS[command][name][0]
    return cell if kind is str else json.loads(cell)


def to_csv(reports: list[dict]) -> str:
    """One row per record; parameter columns carry a ``param.`` prefix, numbers are JSON."""
    names = []
    for r in reports:
        for key in r["params"]:
            if key not in names:
                names.append(key)
    fixed = [k for k in REPORT_KEYS if k not in ("command", "params")]
    header = ["command"] + [PARAM_PREFIX + name for name in names] + fixed
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for r in reports:
        row = [r["command"]]
        row += [_encode_param(r["params"][name]) if name in r["params"] else "" for name in names]
        row += [json.dumps(r[k]) for k in fixed]
        writer.writerow(row)
    return buffer.getvalue()


def from_csv(text: str) -> list[dict]:
    """Parse CSV written by :func:`to_csv` back into report records."""
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    names = [h[len(PARAM_PREFIX) :] for h in header if h.startswith(PARAM_PREFIX)]
    fixed = header[1 + len(names) :]
    out = []
    for row in body:
        command = row[0]
        params = {
            name: _decode_param(command, name, cell)
            for name, cell in zip(names, row[1 : 1 + len(names)])
            if cell != ""
        }
        record = {"command": command, "params": params}
        for key, cell in zip(fixed, row[1 + len(names) :]):
            record[key] = json.loads(cell)
        out.append({key: record[key] for key in REPORT_KEYS})
    return out


# -- argument parsing ---------------------------------------------------------


def _list_of(kind):
    def parse(text: str):
        parts = [t.strip() for t in text.split(",")]
        try:
            values = [kind(t) for t in parts]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"cannot parse {text!r}: {exc}") from exc
        return values if len(values) > 1 else values[0]

    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moments",
        description="Moments of CUE characteristic polynomials: exact, asymptotic and Monte Carlo checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, spec in COMMAND_PARAMS.items():
        cp = sub.add_parser(command)
        for name, (kind, default, text) in spec.items():
            flag = "--" + name.replace("_", "-")
            parse = _list_of(kind) if kind in (int, float) else _list_of(str)
            cp.add_argument(
                flag, dest=name, type=parse, default=argparse.SUPPRESS,
                help=f"{text} (default {default})",
            )
        cp.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        cp.add_argument(
            "--precision-bits", type=int, default=None,
            help="working precision (default $MOMENTS_PRECISION_BITS or 256)",
        )
        cp.add_argument("--format", dest="output_format", choices=("json", "csv"), default="json")
        cp.add_argument("--output", dest="output_path", default=None, help="write the report here")
    return parser


def config_from_args(argv=None) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    common = {k: args.pop(k) for k in ("seed", "precision_bits", "output_format", "output_path")}
    return RunConfig(command, args, **common)


def main(argv=None) -> int:
    try:
        config = config_from_args(argv)
        status, reports = run(config)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    except COMPUTATION_ERRORS as exc:
        print(f"moments: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"moments: usage error: {exc}", file=sys.stderr)
        return 2
    text = to_json(reports) if config.output_format == "json" else to_csv(reports)
    if config.output_path:
        with open(config.output_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
