"""Scalar numerical kernels.

Three routines cover every solver need in the package:

- brent_root:     bracketed root finding (bisection / secant / inverse
                  quadratic interpolation, Brent's switching logic)
- lambert_w0:     principal branch of w*exp(w) = y via Halley iteration
- tail_integral:  integral of a decaying function over [a, inf) on
                  successive doubling panels, adaptive Simpson per panel
"""

import math
from dataclasses import dataclass

from .errors import BracketingError, ConvergenceError, DomainError, TruncationError


@dataclass(frozen=True)
class Tolerance:
    """Stopping control shared by the iterative kernels."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_iter: int = 200


DEFAULT_TOL = Tolerance()


def brent_root(f, lo, hi, tol=DEFAULT_TOL):
    """Root of f on [lo, hi] where f(lo) and f(hi) have opposite signs.

    Returns x with |f(x)| <= abs_tol or with the bracket narrowed to
    rel_tol*|x| + abs_tol.  Raises BracketingError when the endpoints do
    not straddle a sign change and ConvergenceError when max_iter steps
    do not settle the bracket.
    """
    a, b = float(lo), float(hi)
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0.0) == (fb > 0.0):
        raise BracketingError(f"no sign change on [{lo}, {hi}]: f={fa}, {fb}")

    c, fc = a, fa
    d = e = b - a
    for _ in range(tol.max_iter):
        if (fb > 0.0) == (fc > 0.0):
            # keep the root bracketed between b and c
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol_w = tol.rel_tol * abs(b) + tol.abs_tol
        m = 0.5 * (c - b)
        if abs(m) <= tol_w or fb == 0.0 or abs(fb) <= tol.abs_tol:
            return b
        if abs(e) < tol_w or abs(fa) <= abs(fb):
            d = e = m
        else:
            s = fb / fa
            if a == c:
                # secant step
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                # inverse quadratic interpolation through (a, b, c)
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            else:
                p = -p
            if 2.0 * p < min(3.0 * m * q - abs(tol_w * q), abs(e * q)):
                e, d = d, p / q
            else:
                d = e = m
        a, fa = b, fb
        if abs(d) > tol_w:
            b += d
        else:
            b += tol_w if m > 0.0 else -tol_w
        fb = f(b)
    raise ConvergenceError(f"root not settled in {tol.max_iter} iterations")


_BRANCH_POINT = -math.exp(-1.0)


def lambert_w0(y, tol=DEFAULT_TOL):
    """Principal branch W0(y): the solution w >= -1 of w*exp(w) = y.

    Halley iteration started from log1p(y), or from the branch-point
    series when y is close to -1/e.  Iterates to machine precision, so
    the residual w*exp(w) - y is at rounding level.  y < -1/e raises
    DomainError.
    """
    y = float(y)
    if y < _BRANCH_POINT:
        raise DomainError(f"lambert_w0 needs y >= -1/e, got {y}")
    if y == _BRANCH_POINT:
        return -1.0
    if y == 0.0:
        return 0.0

    if math.e * y + 1.0 < 0.25:
        # series around the branch point in p = sqrt(2*(e*y + 1))
        p = math.sqrt(2.0 * (math.e * y + 1.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 * p**3 / 72.0
    else:
        w = math.log1p(y)

    for _ in range(tol.max_iter):
        ew = math.exp(w)
        r = w * ew - y
        wp1 = w + 1.0
        # near the branch point the step size stalls at rounding noise
        # while the residual is already exact, so accept either
        if r == 0.0 or wp1 == 0.0 or abs(r) <= 4e-16 * abs(y):
            return w
        dw = r / (ew * wp1 - (w + 2.0) * r / (2.0 * wp1))
        w -= dw
        if abs(dw) <= 1e-15 * (1.0 + abs(w)):
            return w
    raise ConvergenceError(f"lambert_w0 did not converge for y={y}")


_MAX_SIMPSON_DEPTH = 48


def _simpson(f0, f1, f2, width):
    return width * (f0 + 4.0 * f1 + f2) / 6.0


def _refine(f, a, b, fa, fm, fb, whole, tol_abs, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = _simpson(fa, flm, fm, m - a)
    right = _simpson(fm, frm, fb, b - m)
    delta = left + right - whole
    if depth >= _MAX_SIMPSON_DEPTH or abs(delta) <= 15.0 * tol_abs:
        # depth cap: accept; only discontinuities drive the recursion
        # this deep, and by then the offending interval is ~1e-14 wide
        return left + right + delta / 15.0
    return _refine(f, a, m, fa, flm, fm, left, 0.5 * tol_abs, depth + 1) + _refine(
        f, m, b, fm, frm, fb, right, 0.5 * tol_abs, depth + 1
    )


def _panel(f, a, b, tol):
    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    whole = _simpson(fa, fm, fb, b - a)
    tol_abs = max(tol.abs_tol, tol.rel_tol * abs(whole))
    # one split is mandatory so a panel is never judged from three points
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = _simpson(fa, flm, fm, m - a)
    right = _simpson(fm, frm, fb, b - m)
    return _refine(f, a, m, fa, flm, fm, left, 0.5 * tol_abs, 1) + _refine(
        f, m, b, fm, frm, fb, right, 0.5 * tol_abs, 1
    )


def tail_integral(f, a, tol=DEFAULT_TOL):
    """Integral of f over [a, inf) for nonnegative decaying f.

    Panels [a, a+1], [a+1, a+3], [a+3, a+7], ... double in width; each is
    integrated by adaptive Simpson.  Accumulation stops once a panel
    contributes less than abs_tol and f at its right edge is below
    abs_tol.  If max_iter panels do not reach that state the partial sum
    is attached to a TruncationError.
    """
    total = 0.0
    left = float(a)
    h = 1.0
    for _ in range(tol.max_iter):
        right = left + h
        piece = _panel(f, left, right, tol)
        total += piece
        if abs(piece) < tol.abs_tol and f(right) < tol.abs_tol:
            return total
        left = right
        h *= 2.0
    raise TruncationError(
        f"tail integral still active after {tol.max_iter} panels", total
    )
