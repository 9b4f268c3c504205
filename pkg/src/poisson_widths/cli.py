"""Command-line front end: width tables, n_q tables, condition reports, spline dumps.

Exit codes: 0 success (or report-only), 1 a verified=false result at
n >= n_q, 2 numerical degeneracy (near-singular lambda, ill-conditioned
solve), 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from functools import lru_cache

import mpmath

from . import __version__
from .errors import IllConditioned, IterationCap, NearSingular, PoissonWidthsError, Underflow
from .kernels import KernelParams
from .precision import ENV_VAR, PrecisionMode
from .skspline import Partition, build_fundamental_spline, verify_condition
from .threshold import (
    DEFAULT_CAP,
    check_condition_z,
    master_rhs,
    necessary_lower_bound,
    solve_nq,
    sufficient_z_bound,
    width_certified,
)
from .widths import best_approx_value

SCHEMA_VERSION = 1
EXIT_OK = 0
EXIT_CONTRADICTION = 1
EXIT_DEGENERATE = 2
EXIT_USAGE = 64

WIDTHS_COLUMNS = ("q", "beta", "n", "theta", "theta_method", "E_n", "closed_form_tag",
                  "heat_lower_bound", "n_q", "width_certified", "status")
NQ_COLUMNS = ("q", "n_q", "lhs", "rhs", "condition_z", "status", "n1_bound", "n2_bound",
              "monotone_with_previous")
SPLINE_COLUMNS = ("kind", "index", "t", "value", "residual")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunManifest:
    command: str
    parameters: dict
    precision_mode: str
    library_version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        data = json.loads(text)
        return cls(**data)


# ---------------------------------------------------------------- parsing


def parse_int_range(text: str) -> list[int]:
    """'1..4', '9,10,12' or a mix such as '1..3,8'."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            raise UsageError(f"empty item in {text!r}")
        try:
            if ".." in part:
                lo, hi = part.split("..", 1)
                lo, hi = int(lo), int(hi)
                if hi < lo:
                    raise UsageError(f"empty range {part!r}")
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise UsageError(f"bad integer range {text!r}") from None
    if any(v < 1 for v in out):
        raise UsageError("n must be positive")
    return out


def parse_float_list(text: str) -> list[float]:
    try:
        vals = [float(p) for p in text.split(",")]
    except ValueError:
        raise UsageError(f"bad number list {text!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise UsageError("values must be finite")
    return vals


def _q_values(text):
    vals = parse_float_list(text)
    if not all(0 < v < 1 for v in vals):
        raise UsageError("q must lie strictly inside (0, 1)")
    return vals


def _precision(text):
    try:
        return PrecisionMode.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# ---------------------------------------------------------------- formatting


def fmt(value) -> str:
    """17 significant digits for floats, the context's digits for extended values."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    if _is_mp(value):
        # fixed notation only for moderate exponents, scientific otherwise
        return mpmath.libmp.to_str(value._mpf_, value.context.dps, min_fixed=-4, max_fixed=value.context.dps)
    return str(value)


def _is_mp(value) -> bool:
    return isinstance(value, mpmath.ctx_mp_python._mpf)


def json_value(value, extended: bool):
    if value is None or isinstance(value, (bool, int, str)):
        return value
    if isinstance(value, float):
        return value if math.isfinite(value) else str(value)
    if _is_mp(value):
        return fmt(value) if extended else float(value)
    if isinstance(value, (list, tuple)):
        return [json_value(v, extended) for v in value]
    if isinstance(value, dict):
        return {k: json_value(v, extended) for k, v in value.items()}
    return str(value)


def render_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def render_json(payload, extended: bool) -> str:
    return json.dumps(json_value(payload, extended), indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------- rows


@lru_cache(maxsize=None)
def _nq_cached(q, cap, label):
    precision = _threshold_precision(PrecisionMode.parse(label))
    try:
        return solve_nq(q, cap, precision).n_q
    except IterationCap:
        return None


def _threshold_precision(precision):
    # the integer n_q does not depend on output digits; let binary64 escalate
    return precision if precision.is_extended else PrecisionMode.standard64(auto=True)


def widths_row(task):
    q, beta, n, label, cap = task
    precision = PrecisionMode.parse(label)
    row = {"q": q, "beta": beta, "n": n}
    params = KernelParams(q, beta)
    try:
        value = best_approx_value(params, n, precision=precision)
        rhs = master_rhs(q, precision)
    except Underflow:
        row["status"] = "underflow"
        return row
    row.update(theta=value.theta.theta, theta_method=value.theta.method, E_n=value.value,
               closed_form_tag=value.closed_form_tag, heat_lower_bound=rhs)
    n_q = _nq_cached(q, cap, label)
    row["n_q"] = n_q
    if n_q is None:
        row["width_certified"] = width_certified(q, n, _threshold_precision(precision))
        row["status"] = "n_q_above_cap"
    else:
        row["width_certified"] = n >= n_q
        row["status"] = "ok"
    return row


def nq_row(task):
    q, label, cap = task
    precision = _threshold_precision(PrecisionMode.parse(label))
    row = {"q": q, "n1_bound": necessary_lower_bound(q), "n2_bound": sufficient_z_bound(q)}
    try:
        res = solve_nq(q, cap, precision)
    except IterationCap:
        row["status"] = "iteration_cap"
        return row
    except Underflow:
        row["status"] = "underflow"
        return row
    row.update(n_q=res.n_q, lhs=res.lhs_at_nq, rhs=res.rhs,
               condition_z=check_condition_z(q, res.n_q, precision), status="ok")
    return row


def _map(func, tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map preserves input order whatever the completion order
        return list(pool.map(func, tasks))


def _mark_monotone(rows):
    for i, row in enumerate(rows):
        if row.get("n_q") is None:
            continue
        smaller = [r for r in rows[:i] if r["q"] < row["q"] and r.get("n_q") is not None]
        if smaller:
            prev = max(smaller, key=lambda r: r["q"])
            row["monotone_with_previous"] = row["n_q"] >= prev["n_q"]


# ---------------------------------------------------------------- commands


def cmd_widths(args, precision):
    qs, betas, ns = _q_values(args.q), parse_float_list(args.beta), parse_int_range(args.n)
    tasks = [(q, b, n, precision.label, args.cap) for q in qs for b in betas for n in ns]
    rows = _map(widths_row, tasks, args.jobs)
    if args.format == "csv":
        return render_csv(WIDTHS_COLUMNS, rows), EXIT_OK
    return render_json({"columns": list(WIDTHS_COLUMNS), "rows": rows}, precision.is_extended), EXIT_OK


def cmd_nq(args, precision):
    qs = _q_values(args.q)
    rows = _map(nq_row, [(q, precision.label, args.cap) for q in qs], args.jobs)
    _mark_monotone(rows)
    if args.format == "csv":
        return render_csv(NQ_COLUMNS, rows), EXIT_OK
    return render_json({"columns": list(NQ_COLUMNS), "rows": rows}, precision.is_extended), EXIT_OK


def _certified(q, n, precision):
    try:
        return width_certified(q, n, _threshold_precision(precision))
    except PoissonWidthsError:
        return False


def condition_payload(report, certified):
    payload = {
        "q": report.params.q,
        "beta": report.params.beta,
        "n": report.n,
        "y0": report.y0,
        "verdict": report.verdict,
        "n_at_or_above_n_q": certified,
        "min_abs_lambda": report.min_abs_lambda,
        "working_digits": report.digits,
    }
    if report.breakdown is None:
        payload["message"] = report.message
        return payload
    b = report.breakdown
    payload.update(
        epsilon_sign=report.epsilon_sign,
        sign_vector=[(1 if v > 0 else -1) if flag else 0
                     for v, flag in zip(report.midpoint_values, report.e_flags)],
        e_flags=list(report.e_flags),
        midpoint_values=list(report.midpoint_values),
        heat_min=report.heat_min,
        margin=report.margin,
        gamma_max=list(b.max_abs),
        gamma_total=b.total,
        gamma_per_midpoint=[list(row) for row in zip(*b.gamma)],
        heat_per_midpoint=list(b.heat),
    )
    return payload


def cmd_verify(args, precision):
    params = KernelParams(args.q, args.beta)
    report = verify_condition(params, args.n, precision=precision)
    certified = _certified(args.q, args.n, precision)
    text = render_json(condition_payload(report, certified), precision.is_extended)
    if report.verdict == "degenerate":
        return text, EXIT_DEGENERATE
    if certified and report.verdict != "verified":
        return text, EXIT_CONTRADICTION
    return text, EXIT_OK


def cmd_spline(args, precision):
    params = KernelParams(args.q, args.beta)
    y = None
    if args.y != "auto":
        try:
            y = float(args.y)
        except ValueError:
            raise UsageError(f"--y takes a number or 'auto', got {args.y!r}") from None
    if args.samples < 1:
        raise UsageError("--samples must be positive")
    try:
        spline = build_fundamental_spline(params, args.n, y, precision=precision)
    except (IllConditioned, NearSingular) as exc:
        sys.stderr.write(f"{exc}\n")
        return "", EXIT_DEGENERATE
    ctx = spline._mode().context()
    n = args.n
    rows = []
    for k in range(2 * n):
        t = spline.y + k * ctx.pi / n
        v = spline(t)
        rows.append({"kind": "node", "index": k, "t": t, "value": v,
                     "residual": abs(v - (1 if k == 0 else 0))})
    for i in range(args.samples):
        t = 2 * ctx.pi * i / args.samples
        rows.append({"kind": "sample", "index": i, "t": t, "value": spline(t)})
    for k, (t, v) in enumerate(zip(Partition(n).midpoints, spline.derivative_at_midpoints()), start=1):
        rows.append({"kind": "midpoint_derivative", "index": k, "t": t, "value": v})
    rows.append({"kind": "alpha", "index": 0, "value": spline.alpha0})
    for k, a in enumerate(spline.alphas, start=1):
        rows.append({"kind": "alpha", "index": k, "t": Partition(n).nodes[k], "value": a})
    rows.append({"kind": "alpha_sum", "value": spline.alpha_sum})
    rows.append({"kind": "condition_number", "value": spline.condition})
    if not precision.is_extended:
        rows = [{k: (float(v) if _is_mp(v) else v) for k, v in r.items()}
                for r in rows]
    if args.format == "csv":
        return render_csv(SPLINE_COLUMNS, rows), EXIT_OK
    return render_json({"columns": list(SPLINE_COLUMNS), "rows": rows}, precision.is_extended), EXIT_OK


COMMANDS = {"widths": cmd_widths, "nq": cmd_nq, "verify": cmd_verify, "spline": cmd_spline}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="poisson-widths", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, fmt_default):
        p.add_argument("--precision", default=None,
                       help=f"standard64, auto or extended:<digits> (default ${ENV_VAR} or standard64)")
        p.add_argument("--format", choices=("csv", "json"), default=fmt_default)
        p.add_argument("--output", help="write here instead of stdout, plus FILE.manifest.json")

    p = sub.add_parser("widths", help="theta_n, E_n and certification per (q, beta, n)")
    p.add_argument("--q", required=True, help="comma-separated q values")
    p.add_argument("--beta", required=True, help="comma-separated beta values")
    p.add_argument("--n", required=True, help="n values, e.g. 1..8 or 9,10,12")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.add_argument("--jobs", type=int, default=1)
    common(p, "csv")

    p = sub.add_parser("nq", help="threshold n_q per q")
    p.add_argument("--q", required=True)
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.add_argument("--jobs", type=int, default=1)
    common(p, "csv")

    p = sub.add_parser("verify", help="alternating-sign condition report")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    common(p, "json")

    p = sub.add_parser("spline", help="fundamental spline samples, derivative and coefficients")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--y", default="auto")
    p.add_argument("--samples", type=int, default=64)
    common(p, "csv")

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--output")
    return parser


def _parameters(args) -> dict:
    skip = {"command", "output", "precision"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _run(command, args, precision):
    try:
        text, code = COMMANDS[command](args, precision)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return text, code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            with open(args.manifest, encoding="utf-8") as fh:
                manifest = RunManifest.from_json(fh.read())
            if manifest.command not in COMMANDS:
                raise UsageError(f"unknown command {manifest.command!r} in manifest")
            ns = argparse.Namespace(command=manifest.command, output=args.output, **manifest.parameters)
            precision = _precision(manifest.precision_mode)
            command = manifest.command
            args = ns
        else:
            command = args.command
            precision = _precision(args.precision) if args.precision else _precision_from_env()
            if getattr(args, "jobs", 1) < 1:
                raise UsageError("--jobs must be positive")
            manifest = RunManifest(command, _parameters(args), precision.label)
        text, code = _run(command, args, precision)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"poisson-widths: error: {exc}\n")
        return EXIT_USAGE
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        with open(args.output + ".manifest.json", "w", encoding="utf-8") as fh:
            fh.write(RunManifest(command, manifest.parameters, precision.label).to_json())
    else:
        sys.stdout.write(text)
    return code


def _precision_from_env():
    try:
        return PrecisionMode.from_env()
    except ValueError as exc:
        raise UsageError(f"${ENV_VAR}: {exc}") from None


if __name__ == "__main__":
    sys.exit(main())
