"""
Frequency arithmetic: continued-fraction expansions and convergents.
"""
import logging
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Tuple

from src.core.config import LabConfig
from src.core.errors import DomainError

logger = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
SILVER = math.sqrt(2.0) - 1.0

NAMED_FREQUENCIES = {
    "golden": GOLDEN,
    "silver": SILVER,
}


@dataclass(frozen=True)
class ContinuedFraction:
    """Expansion omega = [0; a_1, a_2, ...] with its convergents p_k/q_k."""
    value: float
    quotients: Tuple[int, ...]
    convergents: Tuple[Fraction, ...]
    terminated_early: bool = False

    @property
    def denominators(self) -> List[int]:
        return [c.denominator for c in self.convergents]

    def best_denominator(self, limit: int) -> Fraction:
        """Last convergent whose denominator does not exceed ``limit``."""
        candidates = [c for c in self.convergents if c.denominator <= limit]
        if not candidates:
            raise DomainError(f"no convergent of {self.value!r} with denominator <= {limit}")
        return candidates[-1]

    def errors(self) -> List[float]:
        exact = Fraction(self.value)
        return [float(abs(exact - c)) for c in self.convergents]


def resolve_frequency(value) -> float:
    """Accept a number or one of the named frequencies."""
    if isinstance(value, str):
        try:
            return NAMED_FREQUENCIES[value.lower()]
        except KeyError:
            raise DomainError(f"unknown named frequency: {value!r}") from None
    return float(value)


def continued_fraction(omega: float, depth: int) -> ContinuedFraction:
    """Expand ``omega`` in (0, 1) to at most ``depth`` partial quotients.

    The expansion runs in exact integer arithmetic on the rational value
    of the double, so every convergent is a true convergent of ``omega``.
    It stops early, setting ``terminated_early``, when the remainder
    vanishes, when the next partial quotient would exceed
    ``LabConfig.NEAR_RATIONAL_GUARD``, or when q_k^2 * eps * omega >= 1
    and further quotients would only describe rounding error.
    """
    if not 0.0 < omega < 1.0:
        raise DomainError(f"continued_fraction needs omega in (0, 1), got {omega!r}")
    if depth < 1:
        raise DomainError(f"depth must be positive, got {depth}")

    guard = LabConfig.NEAR_RATIONAL_GUARD
    precision_limit = 1.0 / (sys.float_info.epsilon * omega)
    quotients: List[int] = []
    convergents: List[Fraction] = []
    p_prev, q_prev = 1, 0
    p, q = 0, 1
    remainder = Fraction(omega)
    reason = None

    while len(quotients) < depth:
        x = 1 / remainder
        a = x.numerator // x.denominator
        frac = x - a
        quotients.append(a)
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
        convergents.append(Fraction(p, q))
        if frac == 0:
            reason = "rational"
        elif q * q >= precision_limit:
            reason = "double precision exhausted"
        elif frac * guard < 1:
            reason = "near-rational"
        if reason is not None:
            break
        remainder = frac

    if reason is not None:
        logger.info("continued fraction of %r terminated after %d quotients (%s)", omega, len(quotients), reason)
    return ContinuedFraction(omega, tuple(quotients), tuple(convergents), reason is not None)
