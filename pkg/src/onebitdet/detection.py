"""One-bit detection model: observation generation, likelihood, GLRT and
Rao statistics, and Fisher information.

Each of N sensors is read K times; reading (i, j) compares the signal
``h_ij * theta`` plus noise against a threshold ``tau_ij`` and sends the
resulting bit through a flipping channel (q0, q1).  The received bit is
one with probability ``p_ij(theta) = q0 + (1-q0-q1) * F(h_ij*theta -
tau_ij)``.  Under the null hypothesis theta = 0.

The GLRT maximizes the log-likelihood over theta in [-delta, delta] and
compares it against the null value; the Rao statistic squares the score
at theta = 0 over the Fisher information and needs no ML search.  Both
are exposed per observation matrix and in batched form over stacks of
trials (the batched forms are what the Monte Carlo harness drives; a
homogeneous sensor field collapses to the count of ones, which the
batched path exploits without changing the statistic).

All operations are pure given (scenario, seed); per-trial seeds derived
from a `numpy.random.SeedSequence` key make trial-level parallelism
deterministic regardless of execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import ggn, objective
from .objective import ChannelParams, UninformativeChannelError

# Probability clamp used inside likelihood logs.  Success probabilities
# can only reach 0 or 1 when q0/q1 sit on the boundary and the quantizer
# argument is extreme; a contradicting bit then contributes ~ -690 per
# entry, an effectively -inf sentinel that never raises.
P_FLOOR = 1e-300
P_CEIL = 1.0 - 1e-16

ML_GRID_POINTS = 129
ML_GOLDEN_ITERS = 16
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0

HYPOTHESES = ("H0", "H1")


@dataclass(frozen=True)
class SensorField:
    """Per-reading signal gains ``h`` and quantizer thresholds ``tau``,
    both N x K arrays."""

    h: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float)
        tau = np.asarray(self.tau, dtype=float)
        if h.ndim != 2 or tau.shape != h.shape:
            raise ValueError(
                f"h and tau must be 2-D arrays of equal shape, got {h.shape} and {tau.shape}"
            )
        if h.shape[0] < 1 or h.shape[1] < 1:
            raise ValueError("need at least one sensor and one reading")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "tau", tau)

    @property
    def n_sensors(self) -> int:
        return self.h.shape[0]

    @property
    def n_readings(self) -> int:
        return self.h.shape[1]

    @staticmethod
    def homogeneous(n: int, k: int, h: float = 1.0, tau: float = 0.0) -> "SensorField":
        return SensorField(np.full((n, k), float(h)), np.full((n, k), float(tau)))

    def with_tau(self, tau) -> "SensorField":
        tau_arr = np.broadcast_to(np.asarray(tau, dtype=float), self.h.shape).copy()
        return SensorField(self.h, tau_arr)


@dataclass(frozen=True)
class DetectionScenario:
    """Sensor field plus signal amplitude theta (|theta| <= delta),
    the amplitude bound delta, and the noise/channel models."""

    field: SensorField
    theta: float
    delta: float
    noise: ggn.GGNParams
    channel: ChannelParams

    def __post_init__(self):
        if not (isinstance(self.delta, (int, float)) and self.delta > 0):
            raise ValueError(f"delta must be > 0, got {self.delta!r}")
        if abs(self.theta) > self.delta:
            raise ValueError(f"|theta|={abs(self.theta)} exceeds delta={self.delta}")

    def with_tau(self, tau) -> "DetectionScenario":
        return replace(self, field=self.field.with_tau(tau))


@dataclass(frozen=True)
class ObservationMatrix:
    """Post-channel bits, an N x K array of 0/1."""

    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u)
        if u.ndim != 2:
            raise ValueError("observations must be a 2-D matrix")
        if not np.all((u == 0) | (u == 1)):
            raise ValueError("observations must be binary")
        object.__setattr__(self, "u", u.astype(np.uint8))


def _bits(u) -> np.ndarray:
    return u.u if isinstance(u, ObservationMatrix) else np.asarray(u)


def draw_noise_and_flips(scenario: DetectionScenario, seed):
    """Draw the trial's raw randomness: noise w and channel uniforms r.

    Split out from `generate` so alternative threshold policies can be
    compared on identical noise realizations.
    """
    rng = np.random.default_rng(seed)
    shape = scenario.field.h.shape
    w = ggn.draw(scenario.noise, rng, shape)
    r = rng.random(shape)
    return w, r


def quantize_and_flip(scenario: DetectionScenario, hypothesis: str, w, r) -> ObservationMatrix:
    """Quantize signal-plus-noise and pass the bits through the channel."""
    if hypothesis not in HYPOTHESES:
        raise ValueError(f"hypothesis must be one of {HYPOTHESES}, got {hypothesis!r}")
    theta_eff = scenario.theta if hypothesis == "H1" else 0.0
    b = theta_eff * scenario.field.h + w >= scenario.field.tau
    u = np.where(b, r >= scenario.channel.q1, r < scenario.channel.q0)
    return ObservationMatrix(u.astype(np.uint8))


def generate(scenario: DetectionScenario, hypothesis: str, seed) -> ObservationMatrix:
    """Simulate one observation matrix; deterministic for a given seed."""
    w, r = draw_noise_and_flips(scenario, seed)
    return quantize_and_flip(scenario, hypothesis, w, r)


def _success_pair(scenario: DetectionScenario, args):
    """Clamped (p, 1-p) at quantizer argument(s) ``args``."""
    c = scenario.channel.coupling
    cdf_v, sf_v = ggn._cdf_sf_pair(scenario.noise, args)
    p = scenario.channel.q0 + c * cdf_v
    pbar = scenario.channel.q1 + c * sf_v
    return np.clip(p, P_FLOOR, P_CEIL), np.clip(pbar, P_FLOOR, P_CEIL)


def success_prob(scenario: DetectionScenario, i: int, j: int, theta: float) -> float:
    """Pr(u_ij = 1) at amplitude theta."""
    h = scenario.field.h[i, j]
    tau = scenario.field.tau[i, j]
    c = scenario.channel.coupling
    return float(scenario.channel.q0 + c * ggn.cdf(scenario.noise, h * theta - tau))


def log_likelihood(u, scenario: DetectionScenario, theta: float) -> float:
    """Log-likelihood of the observation matrix at amplitude theta.

    Probabilities are clamped away from {0, 1} inside the logs, so a
    contradicting bit at a degenerate channel yields a huge negative
    value rather than raising.
    """
    if abs(theta) > scenario.delta:
        raise ValueError(f"|theta|={abs(theta)} exceeds delta={scenario.delta}")
    bits = _bits(u).astype(float)
    args = theta * scenario.field.h - scenario.field.tau
    p, pbar = _success_pair(scenario, args)
    return float(np.sum(bits * np.log(p) + (1.0 - bits) * np.log(pbar)))


def _field_flat(scenario):
    return scenario.field.h.ravel(), scenario.field.tau.ravel()


def _loglik_grid(u2, scenario, grid):
    """Log-likelihood of each trial at each grid amplitude: (T, G)."""
    h, tau = _field_flat(scenario)
    args = grid[:, None] * h[None, :] - tau[None, :]
    p, pbar = _success_pair(scenario, args)
    logp, logpbar = np.log(p), np.log(pbar)
    return u2 @ logp.T + (1.0 - u2) @ logpbar.T


def _loglik_per_trial_theta(u2, scenario, theta_vec):
    """Log-likelihood of each trial at its own amplitude: (T,)."""
    h, tau = _field_flat(scenario)
    args = theta_vec[:, None] * h[None, :] - tau[None, :]
    p, pbar = _success_pair(scenario, args)
    return np.einsum("ij,ij->i", u2, np.log(p)) + np.einsum(
        "ij,ij->i", 1.0 - u2, np.log(pbar)
    )


def _loglik_counts(counts, total, scenario, theta_vec):
    """Homogeneous-field log-likelihood from per-trial one-counts."""
    h0 = scenario.field.h.flat[0]
    tau0 = scenario.field.tau.flat[0]
    p, pbar = _success_pair(scenario, theta_vec * h0 - tau0)
    return counts * np.log(p) + (total - counts) * np.log(pbar)


def _lockstep_golden(loglik_at, lo, hi, best_x, best_f, n_iter=ML_GOLDEN_ITERS):
    """Golden-section refinement run in lockstep across a batch.

    One batched likelihood evaluation per iteration; tracks the best
    point actually evaluated, so the result always dominates ``best_x``.
    """
    a = lo.copy()
    b = hi.copy()
    c1 = b - _INVPHI * (b - a)
    c2 = a + _INVPHI * (b - a)
    f1 = loglik_at(c1)
    f2 = loglik_at(c2)
    for x_new, f_new in ((c1, f1), (c2, f2)):
        better = f_new > best_f
        best_x = np.where(better, x_new, best_x)
        best_f = np.where(better, f_new, best_f)
    for _ in range(n_iter):
        left = f1 >= f2
        b = np.where(left, c2, b)
        a = np.where(left, a, c1)
        width = b - a
        x_new = np.where(left, b - _INVPHI * width, a + _INVPHI * width)
        f_new = loglik_at(x_new)
        c1, c2 = np.where(left, x_new, c2), np.where(left, c1, x_new)
        f1, f2 = np.where(left, f_new, f2), np.where(left, f1, f_new)
        better = f_new > best_f
        best_x = np.where(better, x_new, best_x)
        best_f = np.where(better, f_new, best_f)
    return best_x, best_f


def _is_homogeneous(scenario) -> bool:
    h, tau = _field_flat(scenario)
    return bool(np.all(h == h[0]) and np.all(tau == tau[0]))


def ml_glrt_batch(u_stack, scenario: DetectionScenario):
    """ML amplitude estimate and GLRT statistic for a stack of trials.

    ``u_stack`` is (T, N, K) (or a single N x K matrix).  The ML search
    scans a 129-point grid over [-delta, delta], then refines the best
    cell by golden section; the GLRT statistic is the refined maximum
    minus the exact null log-likelihood, floored at zero.
    """
    u3 = _bits(u_stack)
    single = u3.ndim == 2
    if single:
        u3 = u3[None, :, :]
    t_trials = u3.shape[0]
    u2 = u3.reshape(t_trials, -1).astype(float)
    delta = scenario.delta
    grid = np.linspace(-delta, delta, ML_GRID_POINTS)
    nk = u2.shape[1]
    if _is_homogeneous(scenario):
        counts = u2.sum(axis=1)
        uniq, inverse = np.unique(counts, return_inverse=True)

        def loglik_at(theta_vec):
            return _loglik_counts(uniq, nk, scenario, theta_vec)

        lik_grid = _loglik_counts(uniq[:, None], nk, scenario, grid[None, :] * 1.0)
        l0 = _loglik_counts(uniq, nk, scenario, np.zeros_like(uniq))
    else:
        inverse = None

        def loglik_at(theta_vec):
            return _loglik_per_trial_theta(u2, scenario, theta_vec)

        lik_grid = _loglik_grid(u2, scenario, grid)
        l0 = _loglik_per_trial_theta(u2, scenario, np.zeros(t_trials))
    k = np.argmax(lik_grid, axis=1)
    rows = np.arange(lik_grid.shape[0])
    best_x = grid[k]
    best_f = lik_grid[rows, k]
    lo = grid[np.maximum(k - 1, 0)]
    hi = grid[np.minimum(k + 1, ML_GRID_POINTS - 1)]
    theta_hat, lik_hat = _lockstep_golden(loglik_at, lo, hi, best_x, best_f)
    t_glrt = np.maximum(lik_hat - l0, 0.0)
    if inverse is not None:
        theta_hat = theta_hat[inverse]
        t_glrt = t_glrt[inverse]
    if single:
        return float(theta_hat[0]), float(t_glrt[0])
    return theta_hat, t_glrt


def ml_estimate(u, scenario: DetectionScenario) -> float:
    """ML estimate of the amplitude on [-delta, delta]; boundary
    solutions are allowed (detect them by |theta_hat| ~ delta)."""
    return ml_glrt_batch(u, scenario)[0]


def glrt_stat(u, scenario: DetectionScenario) -> float:
    """GLRT statistic: peak log-likelihood over the amplitude interval
    minus the null log-likelihood; always >= 0."""
    return ml_glrt_batch(u, scenario)[1]


def _score_terms(scenario):
    c = scenario.channel.coupling
    h, tau = _field_flat(scenario)
    p0, p0bar = _success_pair(scenario, -tau)
    weight = c * h * ggn.pdf(scenario.noise, -tau)
    return weight, p0, p0bar


def score_at_null(u, scenario: DetectionScenario):
    """Derivative of the log-likelihood in theta at theta = 0."""
    weight, p0, p0bar = _score_terms(scenario)
    u3 = _bits(u)
    single = u3.ndim == 2
    if single:
        u3 = u3[None, :, :]
    u2 = u3.reshape(u3.shape[0], -1).astype(float)
    out = u2 @ (weight / p0 + weight / p0bar) - np.sum(weight / p0bar)
    if single:
        return float(out[0])
    return out


def fisher_info(scenario: DetectionScenario, theta: float) -> float:
    """Fisher information of the amplitude at theta.

    The noncentrality that governs the asymptotic tests is
    theta^2 * fisher_info(scenario, 0).
    """
    c = scenario.channel.coupling
    if not scenario.channel.informative:
        raise UninformativeChannelError(
            "Fisher information vanishes identically for q0 + q1 = 1"
        )
    h, tau = _field_flat(scenario)
    args = theta * h - tau
    p, pbar = _success_pair(scenario, args)
    f = ggn.pdf(scenario.noise, args)
    return float(c * c * np.sum(h * h * f * f / (p * pbar)))


def fisher_info_from_gain(scenario: DetectionScenario) -> float:
    """Null Fisher information assembled from the per-sensor gain
    (independent route used to cross-check `fisher_info` at theta=0)."""
    c = scenario.channel.coupling
    h, tau = _field_flat(scenario)
    g = objective.gain(-tau, scenario.channel, scenario.noise)
    return float(c * c * np.sum(h * h * g))


def rao_stat_batch(u_stack, scenario: DetectionScenario):
    """Rao statistic (squared null score over Fisher information) for a
    stack of trials; requires no ML estimate."""
    info0 = fisher_info(scenario, 0.0)
    if info0 <= 0.0:
        raise UninformativeChannelError("null Fisher information is zero")
    s = score_at_null(u_stack, scenario)
    return s * s / info0


def rao_stat(u, scenario: DetectionScenario) -> float:
    out = rao_stat_batch(u, scenario)
    return float(out)


def generate_batch(scenario: DetectionScenario, hypothesis: str, seeds) -> np.ndarray:
    """Stack of observation matrices, one per seed: (T, N, K) uint8."""
    out = np.empty(
        (len(seeds), scenario.field.n_sensors, scenario.field.n_readings), dtype=np.uint8
    )
    for t, seed in enumerate(seeds):
        out[t] = generate(scenario, hypothesis, seed).u
    return out
