"""Compound Poisson net-loss model with exponential claim sizes.

A line of business accumulates claims at Poisson rate lam, each claim
exponentially distributed with mean mu, against continuous premium
income at rate c.  The net loss at time s is the claim total minus c*s,
and the quantities of interest here describe the all-time running
maximum of that process: with positive safety loading the ultimate ruin
probability is a * exp(-b * u) in the initial reserve u.
"""

import math
from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class ExponentialLine:
    """One line of business: claim rate lam, claim mean mu, premium rate c.

    Requires mu > 0 and positive safety loading c > lam * mu.  lam = 0 is
    accepted as the degenerate no-claims line.
    """

    lam: float
    mu: float
    c: float

    def __post_init__(self):
        if self.lam < 0.0:
            raise DomainError(f"claim rate must be >= 0, got {self.lam}")
        if self.mu <= 0.0:
            raise DomainError(f"claim mean must be > 0, got {self.mu}")
        if self.c <= self.lam * self.mu:
            raise DomainError(
                f"premium rate {self.c} does not exceed expected claims "
                f"per unit time {self.lam * self.mu}"
            )


@dataclass(frozen=True)
class RuinConstants:
    """Parameters of the ultimate ruin curve a * exp(-b * u).

    a is the ruin probability at zero reserve, b the decay rate per unit
    of reserve.
    """

    a: float
    b: float


def adjustment_coefficient(line):
    """Decay rate of the ruin probability in the initial reserve."""
    return (1.0 - line.lam * line.mu / line.c) / line.mu


def ruin_constants(line):
    """Level and decay of the ultimate ruin curve for one line."""
    a = line.lam * line.mu / line.c
    return RuinConstants(a=a, b=adjustment_coefficient(line))


def ultimate_ruin(line, u):
    """P(running maximum ever exceeds u); equals 1 for u < 0."""
    if u < 0.0:
        return 1.0
    k = ruin_constants(line)
    return k.a * math.exp(-k.b * u)


def line_from_ruin_constants(a, b, c=1.0):
    """Reconstruct a line with prescribed ruin curve a * exp(-b * u).

    The ruin curve pins down only two of the three line parameters, so
    the premium rate c is a free normalisation (default 1).
    """
    if not 0.0 <= a < 1.0:
        raise DomainError(f"zero-reserve ruin probability must be in [0, 1), got {a}")
    if b <= 0.0:
        raise DomainError(f"decay rate must be > 0, got {b}")
    if c <= 0.0:
        raise DomainError(f"premium rate must be > 0, got {c}")
    mu = (1.0 - a) / b
    lam = a * c / mu
    return ExponentialLine(lam=lam, mu=mu, c=c)
