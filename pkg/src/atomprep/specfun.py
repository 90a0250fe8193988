"""Special functions for the barrier-matching solver.

Thin, domain-checked wrappers around scipy.special for the Airy pair,
Kummer's M and log-gamma, plus a Hermite function of arbitrary real degree
built from them.  The Hermite function is the decaying-at-+infinity
solution of Hermite's equation

    H'' - 2 x H' + 2 degree H = 0,

equal to the Hermite polynomial at non-negative integer degree.  Two
evaluation routes are used:

* x <= 0: the confluent-hypergeometric combination
      H = 2^degree sqrt(pi) [ M(-degree/2, 1/2, x^2) / Gamma((1-degree)/2)
                              - 2x M((1-degree)/2, 3/2, x^2) / Gamma(-degree/2) ]
  written with 1/Gamma (entire), so integer degrees need no special case.
  Both terms grow together for x -> -inf; no cancellation.
* x > 0: H = 2^degree U(-degree/2, 1/2, x^2) with Tricomi's U, which picks
  out the recessive (2x)^degree branch directly, climbing from a
  fractional-degree base pair by the three-term recurrence for degree > 1.
  The M route loses roughly x^2/ln(10) digits here and is unusable past
  x ~ 4.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy import special as _sp

from .errors import DomainError

AIRY_ARG_MAX = 200.0
KUMMER_ARG_MAX = 400.0
HERMITE_DEGREE_MIN = -1.0
HERMITE_DEGREE_MAX = 30.0
HERMITE_ARG_MAX = 15.0

SQRT_PI = math.sqrt(math.pi)


class AiryPair(NamedTuple):
    ai: float
    aip: float
    bi: float
    bip: float


class ScaledAiryPair(NamedTuple):
    """Exp-scaled Airy values and the scaling exponent chi.

    For s > 0: ai = ai_e * exp(-chi), bi = bi_e * exp(+chi) with
    chi = (2/3) s^(3/2); for s <= 0 the values are unscaled and chi = 0.
    Safe far beyond the overflow range of the plain pair.
    """

    ai_e: float
    aip_e: float
    bi_e: float
    bip_e: float
    chi: float


def airy(s: float) -> AiryPair:
    """Airy Ai, Ai', Bi, Bi' at real s, |s| <= 200.

    Values outside roughly |s| ~ 105 overflow (Bi) or underflow (Ai) in
    double precision; use airy_scaled for barrier work at large s.
    """
    if not math.isfinite(s):
        raise DomainError(f"airy argument must be finite, got {s}")
    if abs(s) > AIRY_ARG_MAX:
        raise DomainError(f"airy argument |s| <= {AIRY_ARG_MAX}, got {s}")
    ai, aip, bi, bip = _sp.airy(s)
    return AiryPair(float(ai), float(aip), float(bi), float(bip))


def airy_scaled(s: float) -> ScaledAiryPair:
    """Exp-scaled Airy pair, usable at arbitrarily large positive s.

    The scaled backend only applies for s > 0; at s <= 0 both Airy
    functions are order one, so the plain pair is returned with chi = 0
    (scipy's scaled variant yields NaN for Ai there).
    """
    if not math.isfinite(s):
        raise DomainError(f"airy argument must be finite, got {s}")
    if s > 0.0:
        ai_e, aip_e, bi_e, bip_e = _sp.airye(s)
        chi = (2.0 / 3.0) * s * math.sqrt(s)
    else:
        if s < -AIRY_ARG_MAX:
            raise DomainError(f"airy argument below -{AIRY_ARG_MAX:g}, got {s}")
        ai_e, aip_e, bi_e, bip_e = _sp.airy(s)
        chi = 0.0
    return ScaledAiryPair(float(ai_e), float(aip_e), float(bi_e), float(bip_e), chi)


def kummer_m(a: float, b: float, x: float) -> float:
    """Kummer's confluent hypergeometric M(a, b, x), |x| <= 400.

    b must not be zero or a negative integer (poles of M).
    """
    for name, v in (("a", a), ("b", b), ("x", x)):
        if not math.isfinite(v):
            raise DomainError(f"kummer_m {name} must be finite, got {v}")
    if b <= 0.0 and b == round(b):
        raise DomainError(f"kummer_m b must not be a non-positive integer, got {b}")
    if abs(x) > KUMMER_ARG_MAX:
        raise DomainError(f"kummer_m |x| <= {KUMMER_ARG_MAX}, got {x}")
    return float(_sp.hyp1f1(a, b, x))


def log_gamma(x: float) -> tuple[float, float]:
    """(log |Gamma(x)|, sign of Gamma(x)); sign = 0 at the poles."""
    if not math.isfinite(x):
        raise DomainError(f"log_gamma argument must be finite, got {x}")
    if x <= 0.0 and x == round(x):
        return math.inf, 0.0
    return float(_sp.gammaln(x)), float(_sp.gammasgn(x))


def _hermite_m_route(degree: float, x: float) -> float:
    # stable for x <= 0 (and small positive x); rgamma is entire, so
    # integer degrees pass straight through
    x2 = x * x
    t1 = _sp.hyp1f1(-0.5 * degree, 0.5, x2) * _sp.rgamma(0.5 * (1.0 - degree))
    t2 = 2.0 * x * _sp.hyp1f1(0.5 * (1.0 - degree), 1.5, x2) * _sp.rgamma(-0.5 * degree)
    return float(2.0**degree * SQRT_PI * (t1 - t2))


def _hermite_u_route(degree: float, x: float) -> float:
    # x > 0; direct Tricomi U at low degree, recurrence climb above to
    # keep scipy's hyperu inside its reliable small-|a| range
    if degree <= 1.0:
        return float(2.0**degree * _sp.hyperu(-0.5 * degree, 0.5, x * x))
    base = degree - math.floor(degree)
    h0 = float(2.0**base * _sp.hyperu(-0.5 * base, 0.5, x * x))
    h1 = float(2.0 ** (base + 1.0) * _sp.hyperu(-0.5 * (base + 1.0), 0.5, x * x))
    n = base + 1.0
    while n < degree - 0.5:
        h0, h1 = h1, 2.0 * x * h1 - 2.0 * n * h0
        n += 1.0
    return h1


def hermite(degree: float, x: float) -> float:
    """Hermite function H_degree(x), degree in [-1, 30], |x| <= 15.

    Relative accuracy ~1e-12 away from zeros of H.
    """
    if not (math.isfinite(degree) and math.isfinite(x)):
        raise DomainError(f"hermite arguments must be finite, got ({degree}, {x})")
    if not HERMITE_DEGREE_MIN <= degree <= HERMITE_DEGREE_MAX:
        raise DomainError(
            f"hermite degree in [{HERMITE_DEGREE_MIN}, {HERMITE_DEGREE_MAX}], got {degree}"
        )
    if abs(x) > HERMITE_ARG_MAX:
        raise DomainError(f"hermite |x| <= {HERMITE_ARG_MAX}, got {x}")
    if x <= 0.0:
        return _hermite_m_route(degree, x)
    return _hermite_u_route(degree, x)


def _hermite_any(degree: float, x: float) -> float:
    # internal: no degree-domain check, for the derivative's degree+1 call
    if x <= 0.0:
        return _hermite_m_route(degree, x)
    return _hermite_u_route(degree, x)


def hermite_deriv(degree: float, x: float) -> float:
    """d/dx H_degree(x) = 2 degree H_{degree-1}(x).

    Evaluated via 2x H_degree - H_{degree+1} when degree - 1 would fall
    below the documented domain; the two forms are identical by the
    recurrence H_{n+1} = 2x H_n - 2n H_{n-1}.
    """
    if not (math.isfinite(degree) and math.isfinite(x)):
        raise DomainError(f"hermite arguments must be finite, got ({degree}, {x})")
    if not HERMITE_DEGREE_MIN <= degree <= HERMITE_DEGREE_MAX:
        raise DomainError(
            f"hermite degree in [{HERMITE_DEGREE_MIN}, {HERMITE_DEGREE_MAX}], got {degree}"
        )
    if abs(x) > HERMITE_ARG_MAX:
        raise DomainError(f"hermite |x| <= {HERMITE_ARG_MAX}, got {x}")
    if degree >= HERMITE_DEGREE_MIN + 1.0:
        return 2.0 * degree * _hermite_any(degree - 1.0, x)
    return 2.0 * x * _hermite_any(degree, x) - _hermite_any(degree + 1.0, x)


def airy_wronskian_residual(s) -> np.ndarray:
    """Ai Bi' - Ai' Bi - 1/pi on a grid; a cross-check of the Airy pair."""
    s = np.asarray(s, dtype=float)
    ai, aip, bi, bip = _sp.airy(s)
    return ai * bip - aip * bi - 1.0 / math.pi
