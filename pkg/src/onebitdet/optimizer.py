"""Case-dispatched solver for the optimal one-bit quantizer threshold.

The dispatch follows the shape/channel case analysis: the gain is
maximized at x = 0 for shape <= 1 (any channel) and for symmetric
channels with shape <= 2; in every other case it has a unique interior
maximizer on (0, 1/alpha) of the canonical problem, found by gradient
ascent with Armijo backtracking.  Symmetric channels with shape > 2
admit the mirrored pair of optima, reported via ``also_tau``.

The backtracking condition is the sufficient-increase (ascent) form of
the usual sufficient-decrease rule with constant 0.4 and halving steps;
iterations stop once |gain'(x)| < 1e-5 * alpha^3 (the derivative scales
as alpha^3, so the criterion is scale-free).  The initial step is
alpha^-4, which makes the whole iterate sequence equivariant under
rescaling of alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import ggn, objective

ARMIJO_CONSTANT = 0.4
SHRINK_FACTOR = 0.5
MAX_ITERATIONS = 10_000
_MAX_BACKTRACKS = 200

CASE_ANALYTIC_ZERO = "analytic-zero"
CASE_NUMERIC_UNIMODAL = "numeric-unimodal"
CASE_BSC_PAIR = "bsc-pair"


class ConvergenceError(RuntimeError):
    """Ascent failed to meet the gradient criterion; carries the trace."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass
class AscentResult:
    x_star: float
    iterations: int
    trace: list  # [(x_k, objective value)]


def gradient_ascent(
    value_and_grad,
    lo: float,
    hi: float,
    x_init: float,
    *,
    grad_tol: float,
    initial_step: float = 1.0,
    max_iter: int = MAX_ITERATIONS,
) -> AscentResult:
    """Maximize a scalar function on the open interval (lo, hi).

    ``value_and_grad(x)`` returns (value, derivative).  Steps follow the
    gradient, backtracking by halving until the trial point is interior
    and the sufficient-increase condition holds; the objective is
    nondecreasing along the returned trace.
    """
    if not lo < x_init < hi:
        raise ValueError(f"x_init={x_init} must lie strictly inside ({lo}, {hi})")
    x = float(x_init)
    val, grad = value_and_grad(x)
    trace = [(x, val)]
    for k in range(max_iter):
        if abs(grad) < grad_tol:
            return AscentResult(x, k, trace)
        direction = grad
        t = initial_step
        for _ in range(_MAX_BACKTRACKS):
            x_new = x + t * direction
            if lo < x_new < hi:
                val_new = value_and_grad(x_new)[0]
                if val_new >= val + ARMIJO_CONSTANT * t * grad * direction:
                    break
            t *= SHRINK_FACTOR
        else:
            raise ConvergenceError(
                f"backtracking stalled at x={x!r} (|grad|={abs(grad):.3e})", trace
            )
        x = x_new
        val, grad = value_and_grad(x)
        trace.append((x, val))
    raise ConvergenceError(
        f"no convergence after {max_iter} iterations (|grad|={abs(grad):.3e})", trace
    )


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(fun, lo: float, hi: float, *, tol: float, max_iter: int = 200):
    """Golden-section maximization of a unimodal scalar function on
    [lo, hi]; returns (x, fun(x)) once the bracket is below tol."""
    a, b = float(lo), float(hi)
    c1 = b - _INVPHI * (b - a)
    c2 = a + _INVPHI * (b - a)
    f1, f2 = fun(c1), fun(c2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 >= f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - _INVPHI * (b - a)
            f1 = fun(c1)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + _INVPHI * (b - a)
            f2 = fun(c2)
    x = 0.5 * (a + b)
    return x, fun(x)


@dataclass(frozen=True)
class ThresholdSolution:
    """Solved quantizer design: maximizer ``x_star`` of the gain, the
    optimal threshold ``tau_star = -x_star``, the mirrored second
    optimum for symmetric channels with shape > 2, the attained gain,
    the dispatch case, and the solve path."""

    x_star: float
    tau_star: float
    also_tau: float | None
    g_value: float
    case_label: str
    iterations: int
    trace: list = field(repr=False)


def solve_threshold(
    noise: ggn.GGNParams, channel: objective.ChannelParams
) -> ThresholdSolution:
    """Compute the gain-maximizing quantizer design for a channel/noise pair.

    Dispatch: canonicalize the channel first; shape <= 1, or a symmetric
    channel with shape <= 2, puts the optimum analytically at zero.
    Otherwise ascend the canonical gain on (0, 1/alpha) starting from
    half the density-inflection abscissa, then mirror back if the
    canonicalization negated.  Numeric solutions satisfy
    |gain'(x_star)| < 1e-5 * alpha^3 and |x_star| < 1/alpha.
    """
    canon = objective.canonicalize(channel)
    beta = noise.beta
    alpha = noise.alpha
    if beta <= 1.0 or (canon.symmetric and beta <= 2.0):
        g0 = objective.gain(0.0, channel, noise)
        return ThresholdSolution(
            x_star=0.0,
            tau_star=-0.0,
            also_tau=None,
            g_value=g0,
            case_label=CASE_ANALYTIC_ZERO,
            iterations=0,
            trace=[(0.0, g0)],
        )
    canon_channel = canon.channel
    marks = objective.bracket_points(noise)

    def value_and_grad(x):
        return (
            objective.gain(x, canon_channel, noise),
            objective.gain_deriv(x, canon_channel, noise),
        )

    result = gradient_ascent(
        value_and_grad,
        0.0,
        1.0 / alpha,
        marks.x1 / 2.0,
        grad_tol=1e-5 * alpha**3,
        initial_step=alpha**-4,
    )
    x_star = canon.map_x(result.x_star)
    trace = [(canon.map_x(xk), gk) for xk, gk in result.trace]
    tau_star = -x_star
    if canon.symmetric:
        case = CASE_BSC_PAIR
        also_tau = -tau_star
    else:
        case = CASE_NUMERIC_UNIMODAL
        also_tau = None
    return ThresholdSolution(
        x_star=x_star,
        tau_star=tau_star,
        also_tau=also_tau,
        g_value=objective.gain(x_star, channel, noise),
        case_label=case,
        iterations=result.iterations,
        trace=trace,
    )
