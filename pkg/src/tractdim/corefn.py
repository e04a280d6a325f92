"""Overflow-safe evaluation of the tract model maps.

The model studied by this package is the family

    f_l(z) = exp(exp((log(z - l))**(1+p))),   p > 0,  l >= 0,

a doubly exponential map defined on a logarithmic tract in the right
half plane.  All powers are principal-branch powers, normalized so the
inner exponent is real for real z - l > e.  Because f_l overflows any
native float almost everywhere on its tract, the module works with

    u      = tau_inner(z)  = (log(z - l))**(1+p)      (inner exponent),
    tau(z) = exp(u)                                    (log of f_l),
    f_l(z) = exp(tau(z))                               (never formed).

The inverse of tau (for l = 0) is the half-plane-to-tract conformal map

    phi(xi) = exp((log xi)**(1/(1+p))),

and the translated map is phi_l = phi + l.  Transfer-operator weights
are powers of |(log phi_l)'|, for which a closed form is provided here.

Dynamics are iterated on logarithmic coordinates zeta = Log z; a single
step returns Log f_l(z) without ever forming z when |z| is large, and
reports overflow through an explicit sentinel once the inner exponent
exceeds ``OVERFLOW_EXPONENT``.

All functions are pure; there is no shared mutable state.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

# Outer exponents above this value make |exp(.)| unrepresentable in a
# float64 (the hard limit is ~709.78; 700 leaves headroom for the phase
# factors).  LiftStep reports Overflow instead of saturating.
OVERFLOW_EXPONENT = 700.0

# Switch point between direct Log(1 - x) and its power series in the
# logarithmic lift step.
_LOG1P_SERIES_CUTOFF = 0.5
_LOG1P_MAX_TERMS = 60


class DomainError(ValueError):
    """Input outside the domain of validity of an operation."""


@dataclass(frozen=True)
class ModelParams:
    """Parameter pair (p, l): growth exponent and horizontal translation."""

    p: float
    l: float = 0.0

    def __post_init__(self):
        if not (self.p > 0.0 and math.isfinite(self.p)):
            raise DomainError(f"growth exponent p must be positive and finite, got {self.p}")
        if not (self.l >= 0.0 and math.isfinite(self.l)):
            raise DomainError(f"translation l must be >= 0 and finite, got {self.l}")


@dataclass(frozen=True)
class LogComplex:
    """A complex value stored as (log of modulus, argument in (-pi, pi]).

    Used for values of f_l whose modulus overflows float64.
    """

    log_mod: float
    arg: float

    def to_complex(self) -> complex:
        """Materialize as a native complex; raises if the modulus overflows."""
        if self.log_mod > OVERFLOW_EXPONENT:
            raise OverflowError(f"modulus exp({self.log_mod:g}) is not representable")
        m = math.exp(self.log_mod)
        return complex(m * math.cos(self.arg), m * math.sin(self.arg))


@dataclass(frozen=True)
class LiftStep:
    """Outcome of one dynamical step in logarithmic coordinates.

    Either ``value`` holds Log f_l(z) (and ``overflow`` is False), or
    ``overflow`` is True and the step could not be represented because
    the inner exponent exceeded OVERFLOW_EXPONENT.
    """

    value: complex | None
    overflow: bool

    @property
    def is_value(self) -> bool:
        return not self.overflow


def wrap_angle(x: float) -> float:
    """Reduce an angle to the principal interval (-pi, pi]."""
    if -math.pi < x <= math.pi:
        return x
    y = math.pi - math.remainder(math.pi - x, 2.0 * math.pi)
    # remainder() can land exactly on -pi for arguments on the branch cut
    if y <= -math.pi:
        y = math.pi
    return y


def principal_log(z: complex) -> complex:
    """Principal branch of the logarithm, Im in (-pi, pi], Log 1 = 0."""
    z = complex(z)
    if z == 0:
        raise DomainError("principal_log: zero input")
    w = cmath.log(z)
    # cmath returns arg in [-pi, pi]; fold the lower edge onto +pi
    if w.imag == -math.pi:
        w = complex(w.real, math.pi)
    return w


def _principal_power(w: complex, alpha: float) -> complex:
    """w**alpha with the principal log, exp(alpha * Log w)."""
    return cmath.exp(alpha * principal_log(w))


def phi(xi: complex, params: ModelParams) -> complex:
    """Half-plane-to-tract conformal map, translated by l.

    phi_l(xi) = exp((Log xi)**(1/(1+p))) + l, defined for Re xi > 1.
    For real xi > 1 the value is real and > e + l.
    """
    xi = complex(xi)
    if not xi.real > 1.0:
        raise DomainError(f"phi: Re xi must exceed 1, got {xi!r}")
    return cmath.exp(_principal_power(principal_log(xi), 1.0 / (1.0 + params.p))) + params.l


def tau_inner(z: complex, params: ModelParams) -> complex:
    """Inner exponent u = (Log(z - l))**(1+p).

    tau_l(z) = exp(u) and f_l(z) = exp(exp(u)).  Requires z - l off the
    branch cut (-inf, 0] and |z - l| > 1.
    """
    w = complex(z) - params.l
    if w.imag == 0.0 and w.real <= 0.0:
        raise DomainError(f"tau_inner: z - l = {w!r} lies on the branch cut")
    if abs(w) <= 1.0:
        raise DomainError(f"tau_inner: |z - l| = {abs(w):g} must exceed 1")
    return _principal_power(principal_log(w), 1.0 + params.p)


def log_abs_f(z: complex, params: ModelParams) -> float:
    """log|f_l(z)| = Re tau_l(z) = exp(Re u) * cos(Im u).

    Returns a signed infinity sentinel (not an exception) when Re u
    exceeds OVERFLOW_EXPONENT: +inf when the unrepresentable modulus is
    huge, -inf when it is infinitesimal.
    """
    u = tau_inner(z, params)
    if u.real > OVERFLOW_EXPONENT:
        c = math.cos(u.imag)
        return math.inf if c >= 0.0 else -math.inf
    return math.exp(u.real) * math.cos(u.imag)


def log_phi_l_deriv(xi: complex, params: ModelParams) -> complex:
    """(log phi_l)'(xi) = phi'(xi) / (phi(xi) + l).

    With phi'(xi) = phi(xi) * (Log xi)**(-p/(1+p)) / ((1+p) * xi).  Its
    modulus is the reciprocal of the cylinder derivative |f_l'(z)|_1 at
    z = phi_l(xi); all coefficients are real so values at conjugate
    points are conjugate.
    """
    xi = complex(xi)
    if not xi.real > 1.0:
        raise DomainError(f"log_phi_l_deriv: Re xi must exceed 1, got {xi!r}")
    p = params.p
    lxi = principal_log(xi)
    ph = cmath.exp(_principal_power(lxi, 1.0 / (1.0 + p)))
    dphi = ph * _principal_power(lxi, -p / (1.0 + p)) / ((1.0 + p) * xi)
    return dphi / (ph + params.l)


def phi_deriv(xi: complex, params: ModelParams) -> complex:
    """phi'(xi) for the untranslated map (translation does not change it)."""
    xi = complex(xi)
    if not xi.real > 1.0:
        raise DomainError(f"phi_deriv: Re xi must exceed 1, got {xi!r}")
    p = params.p
    lxi = principal_log(xi)
    ph = cmath.exp(_principal_power(lxi, 1.0 / (1.0 + p)))
    return ph * _principal_power(lxi, -p / (1.0 + p)) / ((1.0 + p) * xi)


def _log1p_complex(x: complex) -> complex:
    """Log(1 + x) accurate for small |x|.

    Below the cutoff |x| < 1/2 the power series is summed until the
    terms fall below 1e-17 relative (at most 60 terms); above it the
    direct principal log is used.  The two branches agree to 1e-14 at
    the switch point.
    """
    ax = abs(x)
    if ax >= _LOG1P_SERIES_CUTOFF:
        w = 1.0 + x
        if w.imag == 0.0 and w.real <= 0.0:
            raise DomainError(f"log_lift_step: 1 - l*exp(-zeta) = {w!r} on the branch cut")
        return principal_log(w)
    if ax == 0.0:
        return 0.0 + 0.0j
    acc = 0.0 + 0.0j
    term = x
    for k in range(1, _LOG1P_MAX_TERMS + 1):
        acc += term / k
        term *= -x
        if abs(term) <= 1e-17 * max(abs(acc), 1e-300):
            break
    return acc


def log_lift_step(zeta: complex, params: ModelParams) -> LiftStep:
    """One dynamical step expressed on logarithmic coordinates.

    Given zeta = Log z for the current orbit point, returns Log f_l(z):

        Log f_l(z) = exp((zeta + Log(1 - l*exp(-zeta)))**(1+p))

    reduced to the principal argument, computed without forming z when
    |z| is large.  Overflow is reported exactly when the real part of
    (Log(z - l))**(1+p) exceeds OVERFLOW_EXPONENT.
    """
    zeta = complex(zeta)
    # Log(z - l) = zeta + Log(1 - l*exp(-zeta)); exp(-zeta) underflows
    # harmlessly to 0 for Re zeta beyond ~745.
    if params.l == 0.0:
        m = zeta
    else:
        if zeta.real < -OVERFLOW_EXPONENT:
            raise DomainError("log_lift_step: orbit point underflows to the origin")
        m = zeta + _log1p_complex(-params.l * cmath.exp(-zeta))
    if m.imag == 0.0 and m.real != m.real:  # NaN guard
        raise DomainError("log_lift_step: invalid logarithmic coordinate")
    # u = m**(1+p) through logs so |m| up to ~1e300 stays representable
    s = (1.0 + params.p) * principal_log(m)
    if s.real > 709.0:
        # |u| alone overflows; the sign of cos decides between a huge
        # positive inner exponent (Overflow) and a huge negative one,
        # which collapses f_l to 1 and the next coordinate to 0.
        if math.cos(s.imag) > 0.0:
            return LiftStep(value=None, overflow=True)
        return LiftStep(value=0.0 + 0.0j, overflow=False)
    u = cmath.exp(s)
    if u.real > OVERFLOW_EXPONENT:
        return LiftStep(value=None, overflow=True)
    tau = cmath.exp(u)  # |tau| = exp(Re u) <= exp(700), representable
    return LiftStep(value=complex(tau.real, wrap_angle(tau.imag)), overflow=False)


def log_f(z: complex, params: ModelParams) -> LogComplex:
    """f_l(z) in logarithmic representation (log-modulus, argument).

    Raises OverflowError when even tau_l(z) itself is unrepresentable.
    """
    u = tau_inner(z, params)
    if u.real > OVERFLOW_EXPONENT:
        raise OverflowError(f"log_f: inner exponent Re u = {u.real:g} exceeds threshold")
    tau = cmath.exp(u)
    return LogComplex(log_mod=tau.real, arg=wrap_angle(tau.imag))
