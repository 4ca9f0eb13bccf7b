"""Capital requirements built on a deficit curve.

Three requirement rules share the curve D from the deficit module:

- coherent:      hold the full expected distorted shortfall of zero
                 reserve, D(0)
- convex:        hold the least u whose residual shortfall D(u) stays
                 within an absolute budget A
- proportional:  hold the u whose residual shortfall equals a fraction
                 delta of the reserve itself, D(u) = delta * u

plus two closed-form companions for exponential lines: the benchmark
rule built on the expected area under the loss path, and the premium
level below which no finite time-0 requirement controls the rolling
one-period exposure.
"""

import math
from dataclasses import dataclass

from . import deficit as deficit_mod
from .distortion import choquet_empirical, choquet_se
from .errors import ConvergenceError, DomainError
from .model import adjustment_coefficient, ruin_constants
from .numerics import DEFAULT_TOL, brent_root, lambert_w0
from .simulate import derive_seed, simulate_aggregate_claims


@dataclass(frozen=True)
class MeasureResult:
    """A requirement value plus how it was obtained.

    method is one of closed-form, lambert-w, root-bracketed, quadrature
    or empirical; residual reports the defining relation at the value;
    branch names the active closed-form branch where there is a choice.
    """

    value: float
    method: str
    residual: float
    branch: str = None


def _direct_method(d):
    if d.kind in (deficit_mod.SOURCE_PH, deficit_mod.SOURCE_TVAR):
        return "closed-form"
    if d.kind == deficit_mod.SOURCE_QUAD:
        return "quadrature"
    return "empirical"


def coherent_measure(d):
    """Distorted expected shortfall with no reserve: D(0)."""
    return MeasureResult(value=d(0.0), method=_direct_method(d), residual=0.0)


def _grow_upper(f, hi=1.0, cap=200):
    """First hi with f(hi) <= 0, doubling from the start value."""
    for _ in range(cap):
        if f(hi) <= 0.0:
            return hi
        hi *= 2.0
    raise ConvergenceError("no sign change found while expanding the bracket")


def convex_measure(d, budget, tol=DEFAULT_TOL):
    """Least reserve whose residual shortfall stays within budget.

    Closed forms invert their exponential branch analytically, which for
    a ph curve continues that branch to negative reserves when the
    budget exceeds D(0) (branch tag "continuation").  The bracketed
    route instead follows the curve itself, whose sub-zero part is
    linear by construction.
    """
    if budget <= 0.0:
        raise DomainError(f"budget must be positive, got {budget}")
    if d.kind == deficit_mod.SOURCE_PH:
        a, b = d.constants
        p = d.ph_exponent
        if a <= 0.0:
            raise DomainError("degenerate line: no claims, nothing to reserve")
        value = (p * math.log(a) - math.log(p * b) - math.log(budget)) / (p * b)
        branch = "exponential" if budget <= d(0.0) else "continuation"
        formula = a**p / (p * b) * math.exp(-p * b * value)
        return MeasureResult(value, "closed-form", abs(formula - budget), branch)
    if d.kind == deficit_mod.SOURCE_TVAR:
        a, b = d.constants
        alpha = d.tvar_level
        kink = max(d.plateau_edge, 0.0)
        at_kink = d(kink)
        if budget <= at_kink:
            value = (math.log(a / (alpha * b)) - math.log(budget)) / b
            branch = "exponential"
        else:
            value = kink + at_kink - budget
            branch = "linear"
        return MeasureResult(value, "closed-form", abs(d(value) - budget), branch)

    d0 = d(0.0)
    if d0 > budget:
        hi = _grow_upper(lambda u: d(u) - budget)
        lo = 0.0
    else:
        lo = -(d0 + budget)
        hi = 0.0
    root = brent_root(lambda u: d(u) - budget, lo, hi, tol)
    return MeasureResult(root, "root-bracketed", abs(d(root) - budget))


def proportional_measure(d, margin, tol=DEFAULT_TOL):
    """Reserve with residual shortfall equal to margin times itself.

    The crossing is unique because D decreases while the comparison
    line rises.  Exponential branches reduce to the Lambert W function;
    other sources bracket the crossing and hand it to Brent.
    """
    if margin <= 0.0:
        raise DomainError(f"margin must be positive, got {margin}")
    if d.kind == deficit_mod.SOURCE_PH:
        a, b = d.constants
        p = d.ph_exponent
        if a <= 0.0:
            return MeasureResult(0.0, "closed-form", 0.0, "degenerate")
        value = lambert_w0(a**p / margin) / (p * b)
        return MeasureResult(
            value, "lambert-w", abs(d(value) - margin * value)
        )
    if d.kind == deficit_mod.SOURCE_TVAR:
        a, b = d.constants
        alpha = d.tvar_level
        v_alpha = d.plateau_edge
        if v_alpha > 0.0 and margin >= 1.0 / (b * v_alpha):
            value = (v_alpha + 1.0 / b) / (1.0 + margin)
            method, branch = "closed-form", "linear"
        else:
            value = lambert_w0(a / (alpha * margin)) / b
            method, branch = "lambert-w", "tail"
        return MeasureResult(value, method, abs(d(value) - margin * value), branch)

    d0 = d(0.0)
    if d0 <= 0.0:
        return MeasureResult(0.0, "root-bracketed", abs(d0), "degenerate")
    hi = _grow_upper(lambda u: d(u) - margin * u)
    root = brent_root(lambda u: d(u) - margin * u, 0.0, hi, tol)
    return MeasureResult(root, "root-bracketed", abs(d(root) - margin * root))


def critical_threshold(d):
    """Largest usable proportional margin: residual shortfall at the
    coherent reserve divided by that reserve.

    Above this value the proportional rule would demand less capital
    than the coherent one; below it, strictly more.
    """
    u_c = d(0.0)
    if u_c <= 0.0:
        raise DomainError("degenerate curve: coherent reserve is zero")
    return d(u_c) / u_c


def ear_convex_measure(line, budget):
    """Budget-constrained reserve for the expected area under the loss
    path, the undistorted running-cost benchmark for one line."""
    if budget <= 0.0:
        raise DomainError(f"budget must be positive, got {budget}")
    k = ruin_constants(line)
    if k.a <= 0.0:
        raise DomainError("degenerate line: no claims, nothing to reserve")
    r = k.b
    scale = k.a / (line.c * line.mu * r**3)
    value = (math.log(scale) - math.log(budget)) / r
    return MeasureResult(value, "closed-form", 0.0)


@dataclass(frozen=True)
class PremiumBound:
    """Estimated distorted one-period claim total with its uncertainty.

    concave echoes the distortion used; a False value flags that the
    premium interpretation (bound attained at the unit horizon) is not
    backed for the supplied distortion.
    """

    value: float
    std_error: float
    concave: bool


def premium_lower_bound(line, g_p, n, seed):
    """Least premium rate sustaining the rolling one-period requirement:
    the distorted expectation of the claims arriving in one unit of
    time, estimated from n simulated periods.

    The standard error comes from a 20-resample bootstrap of the
    empirical Choquet sum.
    """
    if n < 1000:
        raise DomainError(f"need at least 1000 simulated periods, got {n}")
    samples = simulate_aggregate_claims(line, 1.0, n, seed)
    value = choquet_empirical(g_p, samples)
    se = choquet_se(g_p, samples, n_boot=20, seed=derive_seed(seed, 20))
    return PremiumBound(value=value, std_error=se, concave=g_p.concave)
