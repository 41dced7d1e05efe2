"""Command-line front end: ``renyi-ci {bounds,dsbs-sweep,verify}``.

Input files are plain text, one ``key = value`` per line; ``#`` starts a
comment and the ``pxy`` matrix may continue over following lines::

    x_size = 2
    y_size = 2
    pxy = 0.4 0.1
          0.1 0.4

A DSBS can be given instead of ``pxy`` with ``dsbs.crossover_p = 0.2`` or
``dsbs.a = 0.1127``.
"""

from __future__ import annotations

import argparse
import io
import logging
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from renyi_ci import dsbs
from renyi_ci.bounds import BoundResult, optimize_bound
from renyi_ci.config import SolverConfig
from renyi_ci.prob_core import MASS_TOL, JointDist
from renyi_ci.verify import SUITES, run_suite

log = logging.getLogger("renyi_ci")

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED = 0, 1, 2
CSV_HEADER = "abscissa,wyner,ub,lb,t_inf,ub_converged,lb_converged"


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class InputSpec:
    x_size: int
    y_size: int
    pxy: tuple[float, ...]
    dsbs: dsbs.DsbsParams | None = None

    def joint(self) -> JointDist:
        return JointDist(np.array(self.pxy).reshape(self.x_size, self.y_size))


def parse_input(text: str) -> InputSpec:
    fields: dict[str, tuple[int, str]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise InputError(f"line {lineno}: missing key before '='")
            if key in fields:
                raise InputError(f"line {lineno}: duplicate key {key!r}")
            fields[key] = (lineno, value)
            current = key
        elif current == "pxy":
            start, value = fields["pxy"]
            fields["pxy"] = (start, f"{value} {line}")
        else:
            raise InputError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")

    known = {"x_size", "y_size", "pxy", "dsbs.a", "dsbs.crossover_p"}
    for key, (lineno, _) in fields.items():
        if key not in known:
            raise InputError(f"line {lineno}: unknown key {key!r}")

    def number(key: str, kind=float):
        lineno, value = fields[key]
        try:
            return kind(value)
        except ValueError:
            raise InputError(f"line {lineno}: field {key!r} is not a valid {kind.__name__}: {value!r}") from None

    params = None
    if "dsbs.a" in fields and "dsbs.crossover_p" in fields:
        raise InputError("give only one of dsbs.a and dsbs.crossover_p")
    try:
        if "dsbs.a" in fields:
            params = dsbs.from_a(number("dsbs.a"))
        elif "dsbs.crossover_p" in fields:
            params = dsbs.from_crossover(number("dsbs.crossover_p"))
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(str(exc)) from None

    if "pxy" not in fields:
        if params is None:
            raise InputError("input needs 'pxy' or a dsbs.* parameter")
        pxy = (params.alpha0, params.beta0, params.beta0, params.alpha0)
        return InputSpec(2, 2, pxy, params)

    for key in ("x_size", "y_size"):
        if key not in fields:
            raise InputError(f"missing field {key!r}")
    x_size, y_size = number("x_size", int), number("y_size", int)
    if x_size < 1 or y_size < 1:
        raise InputError("x_size and y_size must be positive")
    lineno, value = fields["pxy"]
    try:
        pxy = [float(tok) for tok in value.replace(",", " ").split()]
    except ValueError as exc:
        raise InputError(f"line {lineno}: field 'pxy': {exc}") from None
    if len(pxy) != x_size * y_size:
        raise InputError(f"line {lineno}: field 'pxy' has {len(pxy)} entries, expected {x_size * y_size}")
    for i, v in enumerate(pxy):
        if not math.isfinite(v) or v < 0:
            raise InputError(f"line {lineno}: pxy[{i}] = {v!r} is not a probability")
    total = sum(pxy)
    if abs(total - 1.0) > MASS_TOL:
        raise InputError(f"line {lineno}: pxy sums to {total!r}, expected 1")
    return InputSpec(x_size, y_size, tuple(v / total for v in pxy), params)


def load_input(path: str | Path) -> InputSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    return parse_input(text)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("RENYI_CI_SEED")
    return int(env) if env else SolverConfig.seed


def _config(args) -> SolverConfig:
    try:
        return SolverConfig(
            sinkhorn_tol=args.tol,
            restarts=args.restarts,
            seed=_seed(args),
            w_cardinality=args.w_card,
            constraint_tol=args.constraint_tol,
        )
    except ValueError as exc:
        raise InputError(f"bad solver option: {exc}") from None


def _parse_s(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


def _fmt(value: float) -> str:
    if value is None or not math.isfinite(value):
        return "" if value is None else ("inf" if value > 0 else "-inf")
    return f"{value:.11e}"


def cmd_bounds(args) -> int:
    try:
        spec = load_input(args.input)
        cfg = _config(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    which, s = args.which, args.s
    if which == "tinf":
        which, s = "ub", math.inf
    start = time.perf_counter()
    result = optimize_bound(spec.joint(), s, which, cfg)
    elapsed = time.perf_counter() - start
    unit, scale = ("bits", 1 / math.log(2)) if args.bits else ("nats", 1.0)
    print(f"which: {args.which}")
    print(f"s: {s}")
    print(f"value: {result.value * scale:.12g}")
    print(f"unit: {unit}")
    print(f"constraint_residual: {result.constraint_residual:.3e}")
    print(f"w_cardinality: {result.w_cardinality}")
    print(f"restarts: {result.restarts}")
    print(f"seed: {cfg.seed}")
    print(f"converged: {str(result.converged).lower()}")
    print(f"wall_time_s: {elapsed:.3f}")
    if not result.converged:
        print("warning: no decomposition met the constraint tolerance; best iterate shown", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


@dataclass(frozen=True)
class SweepRow:
    abscissa: float
    wyner: float | None
    ub: float | None
    lb: float | None
    t_inf: float | None
    ub_converged: bool
    lb_converged: bool

    def csv(self, scale: float = 1.0) -> str:
        def cell(v):
            return "" if v is None else _fmt(v * scale)

        return ",".join(
            [
                _fmt(self.abscissa),
                cell(self.wyner),
                cell(self.ub),
                cell(self.lb),
                cell(self.t_inf),
                str(self.ub_converged).lower(),
                str(self.lb_converged).lower(),
            ]
        )


def _numeric(result: BoundResult) -> tuple[float | None, bool]:
    if result.error is not None or not math.isfinite(result.value):
        return None, False
    return result.value, result.converged


def dsbs_sweep(mode: str, grid, fixed: float, cfg: SolverConfig) -> list[SweepRow]:
    """Sweep over the crossover ``p`` (``s`` fixed) or over ``s`` (``p`` fixed)."""
    rows = []
    warm = {"ub": None, "lb": None}
    for x in grid:
        p, s = (x, fixed) if mode == "over_p" else (fixed, x)
        try:
            params = dsbs.from_crossover(p)
            pi = dsbs.joint(params)
            wyner, t_inf = dsbs.wyner_value(params), dsbs.t_infinity_value(params)
        except ValueError as exc:
            log.warning("grid point %s skipped: %s", x, exc)
            rows.append(SweepRow(x, None, None, None, None, False, False))
            continue
        out = {}
        for which in ("ub", "lb"):
            try:
                init = [warm[which]] if warm[which] is not None else None
                res = optimize_bound(pi, s, which, cfg, initial=init)
                if res.converged:
                    warm[which] = res.posterior
                out[which] = _numeric(res)
            except Exception as exc:  # noqa: BLE001 - record the failure and keep sweeping
                log.warning("%s at grid point %s failed: %s", which, x, exc)
                out[which] = (None, False)
        rows.append(SweepRow(x, wyner, out["ub"][0], out["lb"][0], t_inf, out["ub"][1], out["lb"][1]))
    return rows


def render_csv(rows: list[SweepRow], bits: bool = False) -> str:
    scale = 1 / math.log(2) if bits else 1.0
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for row in rows:
        buf.write(row.csv(scale) + "\n")
    return buf.getvalue()


def _grid(args) -> list[float]:
    if args.grid:
        try:
            return [_parse_s(tok) for tok in args.grid.split(",") if tok.strip()]
        except ValueError:
            raise InputError(f"malformed --grid {args.grid!r}") from None
    if args.num is None or args.start is None or args.stop is None:
        raise InputError("give --grid or all of --start/--stop/--num")
    return [float(v) for v in np.linspace(args.start, args.stop, args.num)]


def cmd_dsbs_sweep(args) -> int:
    try:
        grid = _grid(args)
        cfg = _config(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if not grid:
        print("error: empty grid", file=sys.stderr)
        return EXIT_INPUT
    fixed = args.s if args.mode == "over_p" else args.p
    rows = dsbs_sweep(args.mode, grid, fixed, cfg)
    text = render_csv(rows, args.bits)
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if all(r.ub_converged and r.lb_converged for r in rows) else EXIT_NOT_CONVERGED


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    all_ok = True
    for name in names:
        ok, outcomes = run_suite(name)
        for label, passed in outcomes:
            if not passed:
                print(f"  failed check: {name}.{label}", file=sys.stderr)
        print(f"SUITE {name} {'PASS' if ok else 'FAIL'} {len(outcomes)}")
        all_ok &= ok
    return EXIT_OK if all_ok else EXIT_NOT_CONVERGED


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    d = SolverConfig()
    p.add_argument("--w-card", type=int, default=d.w_cardinality, help="alphabet size of W (default |X||Y|)")
    p.add_argument("--restarts", type=int, default=d.restarts)
    p.add_argument("--seed", type=int, default=None, help="default: $RENYI_CI_SEED or 0")
    p.add_argument("--tol", type=float, default=d.sinkhorn_tol, help="Sinkhorn L1 marginal tolerance")
    p.add_argument("--constraint-tol", type=float, default=d.constraint_tol)
    p.add_argument("--bits", action="store_true", help="report bits instead of nats")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="renyi-ci", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", help="compute one bound for a joint distribution file")
    b.add_argument("input")
    b.add_argument("--s", type=_parse_s, default=1.0)
    b.add_argument("--which", choices=["ub", "lb", "wyner", "tinf"], default="ub")
    _add_solver_flags(b)
    b.set_defaults(func=cmd_bounds)

    w = sub.add_parser("dsbs-sweep", help="emit CSV plot data for the DSBS")
    w.add_argument("--mode", choices=["over_s", "over_p"], required=True)
    w.add_argument("--grid", help="comma-separated abscissae, e.g. 0.25,0.5,1")
    w.add_argument("--start", type=float)
    w.add_argument("--stop", type=float)
    w.add_argument("--num", type=int)
    w.add_argument("--s", type=_parse_s, default=1.0, help="fixed s for over_p")
    w.add_argument("--p", type=float, default=0.2, help="fixed crossover for over_s")
    w.add_argument("--out", help="CSV path (default stdout)")
    _add_solver_flags(w)
    w.set_defaults(func=cmd_dsbs_sweep, w_card=2)

    v = sub.add_parser("verify", help="run the invariant suites")
    v.add_argument("--suite", choices=[*SUITES, "all"], default="all")
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
