"""Per-observation detection gain of a one-bit sensor and its derivative.

For a quantizer fed the offset ``x`` (signal minus threshold), a bit that
survives a flipping channel (q0, q1) carries Fisher information per unit
squared signal equal to

    gain(x) = f(x)^2 / (p(x) * (1 - p(x))),    p(x) = q0 + (1-q0-q1)*F(x)

with f and F the noise density and distribution.  Maximizing this gain
over x yields the optimal quantizer threshold (the optimum is at -x*).

The derivative of the gain factors, for x > 0 on a canonical channel,
into a strictly positive prefactor times a simple term M(x) whose sign
(and its first two derivatives) drive the case analysis used by the
solver: monotone decrease for shape <= 1, a unique interior maximum
otherwise.  `sign_factor_terms` exposes that factorization; `gain_deriv`
is the direct quotient-rule derivative, valid at every x.

Channel symmetry lets any informative channel be reduced to a canonical
representative with q0 >= q1 and q0 + q1 < 1 (`canonicalize`); the
`negate` flag records whether abscissas must be mirrored when mapping
between the original and canonical problems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import ggn, specfun

# Channels with |1 - q0 - q1| below this carry no usable information.
_INFORMATIVE_TOL = 1e-12

# Treat derivative values this close to zero as zero in sign analyses.
SIGN_TOL = 1e-12


class UninformativeChannelError(ValueError):
    """Raised when q0 + q1 = 1, i.e. the channel output is independent
    of its input and the Fisher information vanishes identically."""


@dataclass(frozen=True)
class ChannelParams:
    """Bit-flipping probabilities: q0 = Pr(1 received | 0 sent),
    q1 = Pr(0 received | 1 sent)."""

    q0: float
    q1: float

    def __post_init__(self):
        for name, v in (("q0", self.q0), ("q1", self.q1)):
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ValueError(f"{name} must be a real scalar, got {v!r}")
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @property
    def coupling(self) -> float:
        """1 - q0 - q1; zero for uninformative channels."""
        return 1.0 - self.q0 - self.q1

    @property
    def informative(self) -> bool:
        return abs(self.coupling) > _INFORMATIVE_TOL


@dataclass(frozen=True)
class CanonicalChannel:
    """Canonical representative of a channel's symmetry class.

    Satisfies q0c >= q1c and 1 - q0c - q1c > 0.  ``negate`` records
    whether abscissas of the original problem are the mirror images of
    canonical ones (so the original optimum is -x* of the canonical
    optimum).
    """

    q0c: float
    q1c: float
    negate: bool

    def __post_init__(self):
        if self.q0c < self.q1c:
            raise ValueError("canonical channel requires q0c >= q1c")
        if 1.0 - self.q0c - self.q1c <= 0.0:
            raise ValueError("canonical channel requires q0c + q1c < 1")

    @property
    def channel(self) -> ChannelParams:
        return ChannelParams(self.q0c, self.q1c)

    @property
    def symmetric(self) -> bool:
        return self.q0c == self.q1c

    def map_x(self, x):
        """Map an abscissa between original and canonical problems
        (the mapping is its own inverse)."""
        return -x if self.negate else x


def _require_informative(channel: ChannelParams) -> float:
    if not channel.informative:
        raise UninformativeChannelError(
            f"channel (q0={channel.q0}, q1={channel.q1}) has q0 + q1 = 1; "
            "the observed bits are independent of the data"
        )
    return channel.coupling


def canonicalize(channel: ChannelParams) -> CanonicalChannel:
    """Reduce an informative channel to its canonical representative.

    Complementing both flip probabilities leaves the gain unchanged;
    swapping them mirrors the abscissa.  Applying whichever of the two
    is needed lands in the region q0 >= q1, q0 + q1 < 1, with `negate`
    set exactly when a swap (mirror) was applied.
    """
    _require_informative(channel)
    q0, q1 = channel.q0, channel.q1
    if 1.0 - q0 - q1 < 0.0:
        q0, q1 = 1.0 - q0, 1.0 - q1
    negate = False
    if q0 < q1:
        q0, q1 = q1, q0
        negate = True
    return CanonicalChannel(q0, q1, negate)


# Deep-tail switch: beyond this point evaluate the gain in log space,
# because with q1 = 0 both f^2 and p*(1-p) underflow together.
_TAIL_X_FACTOR = 5.0
_TAIL_EXPONENT = 300.0


def gain(x, channel: ChannelParams, noise: ggn.GGNParams):
    """Detection gain at offset x (scalar or array); strictly positive.

    Satisfies gain(x, q0, q1) = gain(-x, q1, q0) and the complement
    identity gain(x, q0, q1) = gain(x, 1-q0, 1-q1).  For very large
    ``(alpha*|x|)**beta`` the value is formed in log space and may
    underflow to 0 only past the double-precision range.
    """
    c = _require_informative(channel)
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(~np.isfinite(xa)):
        raise ValueError("gain requires finite x")
    cdf_v, sf_v = ggn._cdf_sf_pair(noise, xa)
    p = channel.q0 + c * cdf_v
    pbar = channel.q1 + c * sf_v
    f = ggn.pdf(noise, xa)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = f * f / (p * pbar)
    z = (noise.alpha * np.abs(xa)) ** noise.beta
    deep = (np.abs(xa) > _TAIL_X_FACTOR / noise.alpha) | (z > _TAIL_EXPONENT)
    if np.any(deep):
        out[deep] = _gain_log_tail(xa[deep], channel, noise)
    if scalar:
        return float(out[0])
    return out


def _gain_log_tail(xa, channel, noise):
    """Gain via logarithms, on the canonical channel so both success
    probabilities stay positive-coefficient mixtures."""
    canon = canonicalize(channel)
    xd = canon.map_x(xa)
    cc = 1.0 - canon.q0c - canon.q1c
    log_cc = math.log(cc)
    lq0 = math.log(canon.q0c) if canon.q0c > 0.0 else -math.inf
    lq1 = math.log(canon.q1c) if canon.q1c > 0.0 else -math.inf
    log_f = ggn.log_pdf(noise, xd)
    log_p = np.logaddexp(lq0, log_cc + ggn.log_cdf(noise, xd))
    log_pbar = np.logaddexp(lq1, log_cc + ggn.log_sf(noise, xd))
    return np.exp(2.0 * log_f - log_p - log_pbar)


def gain_deriv(x, channel: ChannelParams, noise: ggn.GGNParams):
    """Derivative of `gain` in x by direct quotient differentiation.

    Valid at every finite x (intended range |x| <~ 5/alpha; beyond that
    use the sign factorization).  At exactly x = 0 the odd kink term of
    the density derivative is dropped, which is exact for shape > 1 and
    the two-sided principal value otherwise; the threshold solver never
    evaluates here in the kinked cases.
    """
    c = _require_informative(channel)
    a, b = noise.alpha, noise.beta
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    cdf_v, sf_v = ggn._cdf_sf_pair(noise, xa)
    p = channel.q0 + c * cdf_v
    pbar = channel.q1 + c * sf_v
    denom = p * pbar
    bracket = p - 0.5
    f = ggn.pdf(noise, xa)
    absx = np.abs(xa)
    with np.errstate(divide="ignore"):
        power = np.where(absx > 0.0, absx ** (b - 1.0), 0.0)
    f_deriv = -np.sign(xa) * a**b * b * power * f
    out = 2.0 * f * (f_deriv * denom + f * f * c * bracket) / (denom * denom)
    if scalar:
        return float(out[0])
    return out


@dataclass(frozen=True)
class SignFactorTerms:
    """Terms of the derivative factorization at x > 0 (canonical channel).

    ``value`` has the same sign as the gain derivative; ``deriv`` and
    ``second`` are its first two derivatives in x.  The helpers satisfy
    m2 > m1 > 0, and m1' = f * m3.
    """

    m1: object
    m2: object
    m3: object
    value: object
    deriv: object
    second: object


def sign_factor_terms(x, canonical: CanonicalChannel, noise: ggn.GGNParams) -> SignFactorTerms:
    """Evaluate the sign-carrying factor of the gain derivative at x > 0.

    Differences of the nearly-equal helpers are formed through their
    algebraic identities (m1 - m2 = -(2c)^-2 / (m1 + m2)), so the factor
    keeps full accuracy as m1 grows without bound near the origin.
    """
    q0, q1 = canonical.q0c, canonical.q1c
    c = 1.0 - q0 - q1
    a, b = noise.alpha, noise.beta
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(xa <= 0.0) or np.any(~np.isfinite(xa)):
        raise ValueError("the factorization is defined for finite x > 0 only")
    f = ggn.pdf(noise, xa)
    sf_v = ggn.sf(noise, xa)
    half = 1.0 / (2.0 * c)
    quarter = half * half
    scale = 2.0 * a**b * b
    m1 = f * xa ** (1.0 - b) / scale
    m2 = np.hypot(half, m1)
    m3 = (1.0 - b) / scale * xa ** (-b) - 0.5
    m1_minus_m2 = -quarter / (m1 + m2)
    # same as F + (2 q0 - 1) / (2 c) + (m1 - m2), but through the upper
    # tail so the sign survives once F rounds to 1
    value = (1.0 - 2.0 * q1) * half - sf_v + m1_minus_m2
    one_minus_ratio = quarter / (m2 * (m1 + m2))
    deriv = f * (1.0 + one_minus_ratio * m3)
    ratio = m1 / m2
    fd_over_f = -(a**b) * b * xa ** (b - 1.0)
    second = fd_over_f * deriv + f * one_minus_ratio * (
        -(b / xa) * (m3 + 0.5) - f * m3 * m3 / m2 * (1.0 + ratio)
    )
    if scalar:
        return SignFactorTerms(
            float(m1[0]), float(m2[0]), float(m3[0]),
            float(value[0]), float(deriv[0]), float(second[0]),
        )
    return SignFactorTerms(m1, m2, m3, value, deriv, second)


def gain_deriv_factored(x, canonical: CanonicalChannel, noise: ggn.GGNParams):
    """Gain derivative via the x > 0 factorization (positive prefactor
    times the sign factor); agrees with `gain_deriv` where both apply.

    The squared bracket of the prefactor's denominator equals
    p*(1-p)/c^2 identically, and is computed that way from the stable
    success-probability pair rather than by subtracting squares.
    """
    q0, q1 = canonical.q0c, canonical.q1c
    c = 1.0 - q0 - q1
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    terms = sign_factor_terms(xa, canonical, noise)
    f = ggn.pdf(noise, xa)
    cdf_v, sf_v = ggn._cdf_sf_pair(noise, xa)
    p = q0 + c * cdf_v
    pbar = q1 + c * sf_v
    shifted = (p - 0.5) / c
    numer = f**3 * (shifted + terms.m1 + terms.m2) * terms.value
    denom = terms.m1 * (p * pbar) ** 2 / (c * c)
    out = numer / denom
    if scalar:
        return float(out[0])
    return out


@dataclass(frozen=True)
class BracketPoints:
    """Landmark abscissas bounding the gain maximizer from above.

    ``x1`` is the inflection point of the noise density (defined for
    shape > 1); ``x2`` exists only for shape > 2 and sits below x1.
    The maximizer always lies below x1 < 1/alpha.
    """

    x1: float
    x2: float | None


def bracket_points(noise: ggn.GGNParams) -> BracketPoints:
    a, b = noise.alpha, noise.beta
    if b <= 1.0:
        raise ValueError(f"bracket point x1 requires shape > 1, got beta={b}")
    x1 = ((b - 1.0) / b) ** (1.0 / b) / a
    x2 = ((b - 2.0) / (2.0 * b)) ** (1.0 / b) / a if b > 2.0 else None
    return BracketPoints(x1, x2)


def fisher_gain_limits(canonical: CanonicalChannel) -> tuple[float, float]:
    """Limits of the sign factor as x -> 0+ (shape > 1) and x -> +inf."""
    q0, q1 = canonical.q0c, canonical.q1c
    c = 1.0 - q0 - q1
    return (q0 - q1) / (2.0 * c), -q1 / c
