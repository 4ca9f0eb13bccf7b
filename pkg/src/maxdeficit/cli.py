"""Command-line interface.

Exit codes: 0 on success, 2 for usage problems, 3 for domain errors,
4 for convergence failures.  A flat key=value config file can preseed
any flag; explicit flags win.  The MAXDEFICIT_SEED environment variable
serves as the seed of last resort.
"""

import argparse
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .allocate import (
    AllocationProblem,
    method1_exponential,
    method2_generic,
    method2_two_line,
)
from .deficit import DeficitFunctional
from .distortion import Distortion, identity, parse_distortion, proportional_hazard, tvar
from .errors import ConvergenceError, DomainError
from .measures import (
    coherent_measure,
    convex_measure,
    ear_convex_measure,
    premium_lower_bound,
    proportional_measure,
)
from .model import ExponentialLine, line_from_ruin_constants, ruin_constants, ultimate_ruin
from .simulate import estimate_finite_ruin, save_batch, simulate_max_loss

STANDARD_LINES = (
    ExponentialLine(10.0, 1.0, 12.0),
    ExponentialLine(1.0, 10.0, 15.0),
    ExponentialLine(0.1, 100.0, 20.0),
)


def _parse_line(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"--line expects lam,mu,c, got {text!r}")
    lam, mu, c = (float(p) for p in parts)
    return ExponentialLine(lam=lam, mu=mu, c=c)


def _parse_floats(text):
    return [float(p) for p in text.split(",") if p.strip() != ""]


@dataclass
class RunConfig:
    """Merged options for one command invocation."""

    target: str = None
    lines: list = field(default_factory=list)
    distortions: list = field(default_factory=list)
    budgets: list = None
    margins: list = None
    alpha: float = None
    gammas: list = None
    method: str = "marginal-sum"
    u_levels: list = None
    t: float = None
    n: int = None
    seed: int = None
    r_grid: str = None
    mu: float = 1.0
    c: float = 1.0
    workers: int = 1
    out: str = None
    fmt: str = "table"
    precision: int = 6


# config-file key -> (RunConfig field, parser, accumulates)
_CONFIG_KEYS = {
    "line": ("lines", _parse_line, True),
    "g": ("distortions", parse_distortion, True),
    "A": ("budgets", _parse_floats, False),
    "delta": ("margins", _parse_floats, False),
    "alpha": ("alpha", float, False),
    "gamma": ("gammas", _parse_floats, False),
    "method": ("method", str, False),
    "u": ("u_levels", _parse_floats, False),
    "t": ("t", float, False),
    "n": ("n", int, False),
    "seed": ("seed", int, False),
    "r-grid": ("r_grid", str, False),
    "mu": ("mu", float, False),
    "c": ("c", float, False),
    "workers": ("workers", int, False),
    "out": ("out", str, False),
    "format": ("fmt", str, False),
    "precision": ("precision", int, False),
}


def _read_config(path):
    entries = []
    with open(path) as fh:
        for raw in fh:
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            if "=" not in text:
                raise ValueError(f"config line is not key=value: {raw.rstrip()!r}")
            key, value = text.split("=", 1)
            entries.append((key.strip(), value.strip()))
    return entries


def _merge(args):
    cfg = RunConfig()
    cfg.target = getattr(args, "target", None)
    provided = {
        "lines": args.lines,
        "distortions": args.distortions,
        "budgets": args.budgets,
        "margins": args.margins,
        "alpha": args.alpha,
        "gammas": args.gammas,
        "method": args.method,
        "u_levels": args.u_levels,
        "t": args.t,
        "n": args.n,
        "seed": args.seed,
        "r_grid": args.r_grid,
        "mu": args.mu,
        "c": args.c,
        "workers": args.workers,
        "out": args.out,
        "fmt": args.fmt,
        "precision": args.precision,
    }
    file_values = {}
    if args.config:
        for key, value in _read_config(args.config):
            if key not in _CONFIG_KEYS:
                raise ValueError(f"unknown config key {key!r}")
            dest, parser, accumulates = _CONFIG_KEYS[key]
            if accumulates:
                file_values.setdefault(dest, []).append(parser(value))
            else:
                file_values[dest] = parser(value)
    for dest, flag_value in provided.items():
        empty = flag_value is None or flag_value == []
        if not empty:
            setattr(cfg, dest, flag_value)
        elif dest in file_values:
            setattr(cfg, dest, file_values[dest])
    if cfg.seed is None:
        env = os.environ.get("MAXDEFICIT_SEED")
        if env is not None:
            cfg.seed = int(env)
    return cfg


def _format_cell(value, precision):
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.{precision}g}"
    if value is None:
        return ""
    return str(value)


def _emit(columns, rows, cfg):
    cells = [[_format_cell(v, cfg.precision) for v in row] for row in rows]
    if cfg.fmt == "csv":
        out = [",".join(columns)]
        out.extend(",".join(row) for row in cells)
    else:
        widths = [
            max(len(name), *(len(row[i]) for row in cells)) if cells else len(name)
            for i, name in enumerate(columns)
        ]
        out = ["  ".join(name.ljust(w) for name, w in zip(columns, widths)).rstrip()]
        out.extend(
            "  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells
        )
    text = "\n".join(out) + "\n"
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _single(values, flag):
    if values is None or len(values) != 1:
        raise ValueError(f"exactly one {flag} value is required")
    return values[0]


def _distortion_or_identity(cfg):
    if not cfg.distortions:
        return identity()
    if len(cfg.distortions) > 1:
        raise ValueError("exactly one --g is expected here")
    return cfg.distortions[0]


def _deficit_for(line, g, cfg):
    if cfg.t is not None:
        n = cfg.n if cfg.n is not None else 10000
        seed = cfg.seed if cfg.seed is not None else 0
        batch = simulate_max_loss(line, cfg.t, n, seed, workers=cfg.workers)
        return DeficitFunctional.empirical(g, batch.samples, horizon=cfg.t)
    if g.kind == "identity":
        return DeficitFunctional.closed_form_ph(line, 1.0)
    if g.kind == "ph":
        return DeficitFunctional.closed_form_ph(line, g.param)
    if g.kind == "tvar":
        return DeficitFunctional.closed_form_tvar(line, g.param)
    return DeficitFunctional.quadrature(g, lambda v, ln=line: ultimate_ruin(ln, v))


def cmd_measure(cfg):
    if not cfg.lines:
        raise ValueError("at least one --line is required")
    which = cfg.target
    g = _distortion_or_identity(cfg)
    rows = []
    if which == "premium-bound":
        n = cfg.n if cfg.n is not None else 10000
        seed = cfg.seed if cfg.seed is not None else 0
        for line in cfg.lines:
            bound = premium_lower_bound(line, g, n, seed)
            if not bound.concave:
                sys.stderr.write(
                    "warning: distortion is not concave; the premium reading "
                    "of this bound is not supported\n"
                )
            rows.append(
                [line.lam, line.mu, line.c, bound.value, bound.std_error, bound.concave]
            )
        _emit(
            ["lam", "mu", "c", "value", "std_error", "concave"], rows, cfg
        )
        return 0
    if which == "ear":
        budget = _single(cfg.budgets, "--A")
        for line in cfg.lines:
            res = ear_convex_measure(line, budget)
            rows.append([line.lam, line.mu, line.c, res.value, res.method, res.residual])
        _emit(["lam", "mu", "c", "value", "method", "residual"], rows, cfg)
        return 0
    for line in cfg.lines:
        d = _deficit_for(line, g, cfg)
        if which == "coherent":
            res = coherent_measure(d)
        elif which == "convex":
            res = convex_measure(d, _single(cfg.budgets, "--A"))
        else:
            res = proportional_measure(d, _single(cfg.margins, "--delta"))
        rows.append(
            [line.lam, line.mu, line.c, res.value, res.method, res.residual, res.branch]
        )
    _emit(["lam", "mu", "c", "value", "method", "residual", "branch"], rows, cfg)
    return 0


def cmd_allocate(cfg):
    if not cfg.lines:
        raise ValueError("at least one --line is required")
    total_u = _single(cfg.u_levels, "--u")
    if cfg.method == "marginal-sum":
        gammas = cfg.gammas or [1.0] * len(cfg.lines)
        problem = AllocationProblem(
            lines=tuple(cfg.lines), total_u=total_u, gammas=tuple(gammas)
        )
        result = method1_exponential(problem)
    else:
        g = _distortion_or_identity(cfg)
        if g.kind == "identity" and len(cfg.lines) == 2:
            result = method2_two_line(cfg.lines[0], cfg.lines[1], total_u)
        else:
            result = method2_generic(cfg.lines, g, total_u)
    rows = [
        [i, line.lam, line.mu, line.c, float(result.reserves[i]), i in result.active]
        for i, line in enumerate(cfg.lines)
    ]
    _emit(["index", "lam", "mu", "c", "reserve", "active"], rows, cfg)
    summary = (
        f"threshold={_format_cell(result.threshold, cfg.precision)} "
        f"objective={_format_cell(result.objective, cfg.precision)}\n"
    )
    if not cfg.out:
        sys.stdout.write(summary)
    return 0


def _table_one(cfg):
    rows = []
    for line in STANDARD_LINES:
        k = ruin_constants(line)
        rows.append([line.lam, line.mu, line.c, k.a, k.b])
    _emit(["lam", "mu", "c", "a", "b"], rows, cfg)


def _table_two(cfg):
    budgets = [100.0, 40.0, 10.0, 1.0]
    columns = ["total_u", "u1", "u2", "u3"]
    rows = []
    for total in budgets:
        res = method1_exponential(
            AllocationProblem(lines=STANDARD_LINES, total_u=total)
        )
        rows.append([total] + [float(v) for v in res.reserves])
    _emit(columns, rows, cfg)


def _table_three(cfg):
    rows = []
    for gammas in [(1.0, 1.0, 1.0), (1.0, 1.0, 2.0)]:
        res = method1_exponential(
            AllocationProblem(lines=STANDARD_LINES, total_u=100.0, gammas=gammas)
        )
        rows.append(list(gammas) + [float(v) for v in res.reserves])
    _emit(["gamma1", "gamma2", "gamma3", "u1", "u2", "u3"], rows, cfg)


def _table_four(cfg):
    line1 = line_from_ruin_constants(0.9, 0.05)
    line2 = line_from_ruin_constants(0.9, 0.01)
    rows = []
    for total in [30.0, 60.0, 120.0]:
        marginal = method1_exponential(
            AllocationProblem(lines=(line1, line2), total_u=total)
        )
        joint = method2_two_line(line1, line2, total)
        rows.append(
            [total]
            + [float(v) for v in marginal.reserves]
            + [float(v) for v in joint.reserves]
        )
    _emit(
        ["total_u", "marginal_u1", "marginal_u2", "aggregate_u1", "aggregate_u2"],
        rows,
        cfg,
    )


def cmd_table(cfg):
    builders = {"1": _table_one, "2": _table_two, "3": _table_three, "4": _table_four}
    builder = builders.get(str(cfg.target))
    if builder is None:
        raise ValueError(f"unknown table {cfg.target!r}; pick one of 1, 2, 3, 4")
    builder(cfg)
    return 0


def _parse_r_grid(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"--r-grid expects start:stop:count, got {text!r}")
    start, stop = float(parts[0]), float(parts[1])
    count = int(parts[2])
    if count < 1:
        raise ValueError("--r-grid count must be >= 1")
    return np.linspace(start, stop, count)


def cmd_figure(cfg):
    if cfg.r_grid is None:
        raise ValueError("--r-grid is required")
    grid = _parse_r_grid(cfg.r_grid)
    budgets = cfg.budgets or [20.0, 5.0]
    margins = cfg.margins or [0.05, 0.01]
    alpha = cfg.alpha if cfg.alpha is not None else 0.01
    gs = cfg.distortions or [identity(), proportional_hazard(0.5), tvar(alpha)]
    columns = ["R"]
    for g in gs:
        columns.append(f"coherent_{g.label()}")
        for budget in budgets:
            columns.append(f"convex_{g.label()}_A{budget:g}")
        for margin in margins:
            columns.append(f"prop_{g.label()}_d{margin:g}")
    for budget in budgets:
        columns.append(f"ear_A{budget:g}")
    rows = []
    for r in grid:
        if not 0.0 < r < 1.0 / cfg.mu:
            raise DomainError(
                f"decay rate {r} outside (0, {1.0 / cfg.mu}) for mu={cfg.mu}"
            )
        line = line_from_ruin_constants(1.0 - cfg.mu * r, r, cfg.c)
        row = [float(r)]
        for g in gs:
            d = _deficit_for(line, g, cfg)
            row.append(coherent_measure(d).value)
            for budget in budgets:
                row.append(convex_measure(d, budget).value)
            for margin in margins:
                row.append(proportional_measure(d, margin).value)
        for budget in budgets:
            row.append(ear_convex_measure(line, budget).value)
        rows.append(row)
    _emit(columns, rows, cfg)
    return 0


def cmd_simulate(cfg):
    if not cfg.lines:
        raise ValueError("at least one --line is required")
    if len(cfg.lines) != 1:
        raise ValueError("simulate works on exactly one --line")
    if cfg.t is None or cfg.n is None:
        raise ValueError("--t and --n are required")
    if cfg.seed is None:
        raise ValueError("a seed is required (--seed, config, or MAXDEFICIT_SEED)")
    line = cfg.lines[0]
    batch = simulate_max_loss(line, cfg.t, cfg.n, cfg.seed, workers=cfg.workers)
    if cfg.out:
        save_batch(batch, cfg.out)
    rows = []
    for u in cfg.u_levels or [0.0]:
        est, half = estimate_finite_ruin(batch, u)
        rows.append([u, est, half])
    keep_out = cfg.out
    cfg.out = None  # ruin summary always goes to stdout; --out holds the batch
    _emit(["u", "ruin_estimate", "half_width"], rows, cfg)
    cfg.out = keep_out
    return 0


def _run_checks(seed):
    import numpy as np

    from .distortion import choquet_empirical
    from .numerics import brent_root, lambert_w0, tail_integral
    from .simulate import PathState, rolling_requirement

    rng = np.random.default_rng(seed)
    checks = []

    def bisect(f, lo, hi, iters=80):
        flo = f(lo)
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if (f(mid) > 0.0) == (flo > 0.0):
                lo, flo = mid, f(mid)
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def check_lambert():
        for y in (-math.exp(-1) + 1e-9, -0.2, 0.5, 1.0, math.e, 10.0, 1e6):
            w = lambert_w0(y)
            if abs(w * math.exp(w) - y) > 1e-12 * max(1.0, abs(y)):
                return False
        return True

    def check_brent():
        for _ in range(10):
            root = rng.uniform(-2.0, 2.0)
            c1, c3 = rng.uniform(0.5, 3.0, size=2)
            f = lambda x, r=root, c1=c1, c3=c3: c1 * (x - r) + c3 * (x - r) ** 3
            got = brent_root(f, root - 3.0, root + 4.0)
            ref = bisect(f, root - 3.0, root + 4.0)
            if abs(got - ref) > 1e-8:
                return False
        return True

    def check_tail():
        for _ in range(10):
            a = rng.uniform(0.1, 1.0)
            b = rng.uniform(1e-3, 1.0)
            u = rng.uniform(0.0, 50.0)
            exact = a / b * math.exp(-b * u)
            got = tail_integral(lambda v: a * math.exp(-b * v), u)
            if abs(got - exact) > 1e-6 * max(1.0, exact):
                return False
        return True

    def check_deficit_routes():
        for line in STANDARD_LINES:
            for g in (identity(), proportional_hazard(0.5), tvar(0.01)):
                d_closed = _deficit_for(line, g, RunConfig())
                quad = DeficitFunctional.quadrature(
                    g, lambda v, ln=line: ultimate_ruin(ln, v)
                )
                for u in (0.0, 2.0, 17.0):
                    if abs(d_closed(u) - quad(u)) > 1e-6 * max(1.0, d_closed(u)):
                        return False
        return True

    def check_measures():
        for line in STANDARD_LINES:
            d = DeficitFunctional.closed_form_ph(line, 0.7)
            quad = DeficitFunctional.quadrature(
                Distortion("ph", 0.7), lambda v, ln=line: ultimate_ruin(ln, v)
            )
            lw = proportional_measure(d, 0.05)
            br = proportional_measure(quad, 0.05)
            if abs(lw.value - br.value) > 1e-8 or lw.residual > 1e-8:
                return False
        return True

    def check_allocation():
        problem = AllocationProblem(lines=STANDARD_LINES, total_u=40.0)
        res = method1_exponential(problem)
        if abs(float(res.reserves.sum()) - 40.0) > 1e-8:
            return False
        if res.kkt_residual > 1e-8:
            return False
        closed = method2_two_line(
            line_from_ruin_constants(0.9, 0.05), line_from_ruin_constants(0.9, 0.01), 60.0
        )
        numeric = method2_generic(
            [line_from_ruin_constants(0.9, 0.05), line_from_ruin_constants(0.9, 0.01)],
            identity(),
            60.0,
        )
        return bool(np.max(np.abs(closed.reserves - numeric.reserves)) < 1e-3)

    def check_simulation():
        line = STANDARD_LINES[0]
        one = simulate_max_loss(line, 5.0, 300, seed)
        two = simulate_max_loss(line, 5.0, 300, seed)
        split = simulate_max_loss(line, 5.0, 300, seed, workers=3)
        if not (
            np.array_equal(one.samples, two.samples)
            and np.array_equal(one.samples, split.samples)
        ):
            return False
        state = PathState(time=5.0, realized_loss=-3.25, running_max=1.5)
        return rolling_requirement(state, 7.0) == -3.25 + 7.0

    checks = [
        ("lambert-w round trip", check_lambert),
        ("brent vs bisection", check_brent),
        ("tail integral vs closed form", check_tail),
        ("deficit closed forms vs quadrature", check_deficit_routes),
        ("proportional lambert vs bracketed", check_measures),
        ("allocation identities", check_allocation),
        ("simulation reproducibility", check_simulation),
    ]
    failures = 0
    for name, fn in checks:
        ok = fn()
        sys.stdout.write(f"{'PASS' if ok else 'FAIL'}  {name}\n")
        failures += 0 if ok else 1
    return failures


def cmd_check(cfg):
    seed = cfg.seed if cfg.seed is not None else 0
    failures = _run_checks(seed)
    return 0 if failures == 0 else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="maxdeficit",
        description="Risk measures and reserve allocation for compound "
        "Poisson maximum-deficit models",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value option file")
    common.add_argument("--line", dest="lines", action="append", type=_parse_line,
                        default=[], metavar="LAM,MU,C")
    common.add_argument("--g", dest="distortions", action="append",
                        type=parse_distortion, default=[], metavar="SPEC",
                        help="identity | ph:<p> | tvar:<alpha> | varstep:<alpha>")
    common.add_argument("--A", dest="budgets", type=_parse_floats, default=None)
    common.add_argument("--delta", dest="margins", type=_parse_floats, default=None)
    common.add_argument("--alpha", type=float, default=None)
    common.add_argument("--gamma", dest="gammas", type=_parse_floats, default=None)
    common.add_argument("--method", choices=["marginal-sum", "aggregate-min"],
                        default=None)
    common.add_argument("--u", dest="u_levels", type=_parse_floats, default=None)
    common.add_argument("--t", type=float, default=None)
    common.add_argument("--n", type=int, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--r-grid", dest="r_grid", default=None,
                        metavar="START:STOP:COUNT")
    common.add_argument("--mu", type=float, default=None)
    common.add_argument("--c", type=float, default=None)
    common.add_argument("--workers", type=int, default=None)
    common.add_argument("--out", default=None)
    common.add_argument("--format", dest="fmt", choices=["table", "csv"], default=None)
    common.add_argument("--precision", type=int, default=None)

    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("measure", parents=[common], help="evaluate one requirement")
    p.add_argument("target", choices=["coherent", "convex", "proportional",
                                      "ear", "premium-bound"])
    p.set_defaults(func=cmd_measure)
    p = sub.add_parser("allocate", parents=[common], help="split a reserve budget")
    p.set_defaults(func=cmd_allocate, target=None)
    p = sub.add_parser("table", parents=[common], help="regenerate a standard table")
    p.add_argument("target", choices=["1", "2", "3", "4"])
    p.set_defaults(func=cmd_table)
    p = sub.add_parser("figure", parents=[common],
                       help="requirement curves over a decay-rate grid (CSV)")
    p.set_defaults(func=cmd_figure, target=None)
    p = sub.add_parser("simulate", parents=[common], help="sample running maxima")
    p.set_defaults(func=cmd_simulate, target=None)
    p = sub.add_parser("check", parents=[common], help="run the invariant suite")
    p.set_defaults(func=cmd_check, target=None)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        cfg = _merge(args)
        return args.func(cfg)
    except DomainError as exc:
        sys.stderr.write(f"domain error: {exc}\n")
        return 3
    except ConvergenceError as exc:
        sys.stderr.write(f"convergence error: {exc}\n")
        return 4
    except ValueError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 2


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
