"""Monte Carlo ROC estimation, asymptotic ROC prediction, the numerical
property-verification suite, and built-in experiment presets.

Empirical ROC curves come from a sorted-statistic threshold sweep: for
each detector and threshold policy the harness simulates ``trials``
null and alternative observation stacks, then sweeps the test threshold
over the sorted null statistics so every (P_FA, P_D) pair is matched.
Per-trial seeds are derived from (master_seed, trial index, hypothesis
flag) through `numpy.random.SeedSequence`, so results are bit-identical
regardless of chunking or the worker count in ``ONEBITDET_PARALLEL``,
and competing threshold policies see identical noise realizations.

The verification suite re-checks, numerically, the structural facts the
threshold solver relies on: channel symmetry identities, agreement of
the gain derivative's sign with its factored form, derivative signs at
the landmark abscissas, unimodality of the gain, the limits of the sign
factor, and two scalar bounds behind the landmark-sign argument.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import detection, ggn, objective, optimizer, specfun
from .detection import DetectionScenario, SensorField
from .objective import ChannelParams, UninformativeChannelError

DEFAULT_SEED = 12345
ENV_PARALLEL = "ONEBITDET_PARALLEL"
TRIAL_CHUNK = 512

DETECTOR_GLRT = "glrt"
DETECTOR_RAO = "rao"
KNOWN_DETECTORS = (DETECTOR_GLRT, DETECTOR_RAO)


# ---------------------------------------------------------------------------
# Experiment configuration


@dataclass(frozen=True)
class ThresholdPolicy:
    """How the quantizer thresholds are chosen for an experiment run.

    ``kind`` is one of "optimal" (solve for the gain-maximizing uniform
    threshold), "zero", or "explicit" (use ``values`` broadcast to the
    field shape).
    """

    kind: str
    label: str = ""
    values: object = None

    def __post_init__(self):
        if self.kind not in ("optimal", "zero", "explicit"):
            raise ValueError(f"unknown threshold policy kind {self.kind!r}")
        if self.kind == "explicit" and self.values is None:
            raise ValueError("explicit policy requires threshold values")
        if not self.label:
            object.__setattr__(self, "label", self.kind)

    def resolve(self, scenario: DetectionScenario):
        """Threshold matrix for the scenario's field."""
        if self.kind == "zero":
            return np.zeros_like(scenario.field.tau)
        if self.kind == "explicit":
            return np.broadcast_to(
                np.asarray(self.values, dtype=float), scenario.field.tau.shape
            )
        solution = optimizer.solve_threshold(scenario.noise, scenario.channel)
        return np.full_like(scenario.field.tau, solution.tau_star)


OPTIMAL_POLICY = ThresholdPolicy("optimal")
ZERO_POLICY = ThresholdPolicy("zero")


@dataclass(frozen=True)
class ExperimentConfig:
    """A Monte Carlo detection experiment: base scenario, trial count,
    detectors, threshold policies and the master seed."""

    scenario: DetectionScenario
    trials: int
    detectors: tuple = (DETECTOR_GLRT,)
    policies: tuple = (OPTIMAL_POLICY, ZERO_POLICY)
    master_seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ValueError(f"trials must be an integer >= 1, got {self.trials!r}")
        for det in self.detectors:
            if det not in KNOWN_DETECTORS:
                raise ValueError(f"unknown detector {det!r}; known: {KNOWN_DETECTORS}")
        if not self.policies:
            raise ValueError("need at least one threshold policy")
        labels = [p.label for p in self.policies]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate policy labels: {labels}")


@dataclass(frozen=True)
class SweepSpec:
    """Shape-parameter sweep of the threshold solver."""

    alpha: float
    channels: tuple
    betas: tuple


# ---------------------------------------------------------------------------
# ROC curves


@dataclass
class RocCurve:
    """Matched (P_FA, P_D) pairs with nondecreasing P_FA."""

    pfa: np.ndarray
    pd: np.ndarray
    kind: str  # "empirical" | "asymptotic"
    detector: str
    threshold_label: str

    def pd_at(self, target_pfa: float) -> float:
        """Detection probability at the largest recorded P_FA <= target."""
        idx = int(np.searchsorted(self.pfa, target_pfa, side="right")) - 1
        idx = max(idx, 0)
        return float(self.pd[idx])


def _trial_seed(master_seed: int, trial: int, hyp_flag: int):
    return np.random.SeedSequence((master_seed, trial, hyp_flag))


def _worker_count() -> int:
    raw = os.environ.get(ENV_PARALLEL, "")
    try:
        workers = int(raw) if raw else 1
    except ValueError:
        workers = 1
    return max(workers, 1)


def resolve_policies(config: ExperimentConfig):
    """Per-policy scenarios with thresholds filled in."""
    return {
        policy.label: config.scenario.with_tau(policy.resolve(config.scenario))
        for policy in config.policies
    }


def detector_stats(config: ExperimentConfig):
    """Detector statistics for every (detector, policy, hypothesis).

    Returns a dict keyed by (detector, policy_label, "H0"|"H1") holding
    one statistic per trial, in trial order.  All policies of a trial
    share the same noise and channel randomness, so policy comparisons
    are paired.
    """
    scenarios = resolve_policies(config)
    trials = config.trials
    out = {
        (det, label, hyp): np.empty(trials)
        for det in config.detectors
        for label in scenarios
        for hyp in detection.HYPOTHESES
    }
    base = config.scenario
    chunks = [
        (start, min(start + TRIAL_CHUNK, trials))
        for start in range(0, trials, TRIAL_CHUNK)
    ]

    def process(span):
        start, stop = span
        count = stop - start
        shape = (count,) + base.field.h.shape
        for hyp_flag, hyp in enumerate(detection.HYPOTHESES):
            w = np.empty(shape)
            r = np.empty(shape)
            for t in range(start, stop):
                w[t - start], r[t - start] = detection.draw_noise_and_flips(
                    base, _trial_seed(config.master_seed, t, hyp_flag)
                )
            for label, scen in scenarios.items():
                theta_eff = scen.theta if hyp == "H1" else 0.0
                b = theta_eff * scen.field.h + w >= scen.field.tau
                u3 = np.where(b, r >= scen.channel.q1, r < scen.channel.q0).astype(
                    np.uint8
                )
                if DETECTOR_GLRT in config.detectors:
                    _, t_glrt = detection.ml_glrt_batch(u3, scen)
                    out[(DETECTOR_GLRT, label, hyp)][start:stop] = t_glrt
                if DETECTOR_RAO in config.detectors:
                    out[(DETECTOR_RAO, label, hyp)][start:stop] = (
                        detection.rao_stat_batch(u3, scen)
                    )

    workers = _worker_count()
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(process, chunks))
    else:
        for span in chunks:
            process(span)
    return out


def _curve_from_stats(t0, t1, detector, label) -> RocCurve:
    """Sweep the threshold over the sorted null statistics."""
    gammas = np.unique(t0)[::-1]
    sorted0 = np.sort(t0)
    sorted1 = np.sort(t1)
    n0 = len(t0)
    n1 = len(t1)
    pfa = 1.0 - np.searchsorted(sorted0, gammas, side="right") / n0
    pd = 1.0 - np.searchsorted(sorted1, gammas, side="right") / n1
    pfa = np.append(pfa, 1.0)
    pd = np.append(pd, 1.0)
    return RocCurve(pfa, pd, "empirical", detector, label)


def empirical_roc(config: ExperimentConfig, stats=None):
    """One empirical ROC curve per detector x threshold policy.

    ``stats`` may pass precomputed `detector_stats` output to avoid
    re-simulating.
    """
    if stats is None:
        stats = detector_stats(config)
    curves = []
    for det in config.detectors:
        for policy in config.policies:
            curves.append(
                _curve_from_stats(
                    stats[(det, policy.label, "H0")],
                    stats[(det, policy.label, "H1")],
                    det,
                    policy.label,
                )
            )
    return curves


def asymptotic_roc(lam: float, pfa_grid, detector: str = "asymptotic",
                   threshold_label: str = "") -> RocCurve:
    """ROC predicted by the noncentral chi-squared(1) large-sample law
    with noncentrality ``lam`` (= theta^2 * null Fisher information)."""
    if not (isinstance(lam, (int, float)) and lam >= 0.0):
        raise ValueError(f"noncentrality must be >= 0, got {lam!r}")
    pfa = np.sort(np.asarray(pfa_grid, dtype=float))
    if np.any(pfa <= 0.0) or np.any(pfa >= 1.0):
        raise ValueError("pfa grid values must lie strictly inside (0, 1)")
    pd = np.array(
        [
            specfun.noncentral_chisq1_sf(specfun.chisq1_quantile(1.0 - v), lam)
            for v in pfa
        ]
    )
    return RocCurve(pfa, pd, "asymptotic", detector, threshold_label)


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov helpers (used by calibration tests and the CLI)


def ks_statistic(sample, cdf) -> float:
    """One-sample two-sided KS statistic of ``sample`` against a
    continuous ``cdf`` (scalar- or array-callable)."""
    xs = np.sort(np.asarray(sample, dtype=float))
    n = len(xs)
    try:
        f = np.asarray(cdf(xs), dtype=float)
        if f.shape != xs.shape:
            raise TypeError
    except (TypeError, ValueError):
        f = np.asarray([cdf(x) for x in xs], dtype=float)
    upper = np.max(np.arange(1, n + 1) / n - f)
    lower = np.max(f - np.arange(0, n) / n)
    return float(max(upper, lower))


def ks_critical(n: int, level: float = 0.01) -> float:
    """Asymptotic two-sided KS critical value at the given level."""
    return math.sqrt(-0.5 * math.log(level / 2.0)) / math.sqrt(n)


def ks_statistic_discrete(sample, atoms, atom_probs) -> float:
    """Two-sided KS statistic against a purely discrete law.

    The sup of |F_hat - F| over the line is attained at an atom (from
    the right) or just before one (from the left); `ks_statistic`'s
    continuous-law formula would overestimate by up to one atom mass
    here.  A small relative nudge absorbs float jitter between sample
    values and atoms computed through different arithmetic routes.
    """
    xs = np.sort(np.asarray(sample, dtype=float))
    n = len(xs)
    order = np.argsort(atoms)
    a = np.asarray(atoms, dtype=float)[order]
    p = np.asarray(atom_probs, dtype=float)[order]
    cdf = np.cumsum(p)
    eps = 1e-9 * np.maximum(np.abs(a), 1e-300)
    f_hat_right = np.searchsorted(xs, a + eps, side="right") / n
    f_hat_left = np.searchsorted(xs, a - eps, side="left") / n
    d_right = np.max(np.abs(f_hat_right - cdf))
    d_left = np.max(np.abs(f_hat_left - (cdf - p)))
    return float(max(d_right, d_left))


def chisq1_cdf(t):
    """CDF of the central chi-squared(1) law (vectorized)."""
    return specfun.reg_lower_inc_gamma(0.5, np.asarray(t, dtype=float) / 2.0)


# ---------------------------------------------------------------------------
# Property-verification suite


@dataclass
class PropertyCheck:
    name: str
    config: dict
    passed: bool
    detail: str


@dataclass
class VerificationReport:
    checks: list = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def add(self, name, config, passed, detail):
        self.checks.append(PropertyCheck(name, dict(config), bool(passed), detail))


VERIFY_SCOPES = (
    "symmetry",
    "sign",
    "landmarks",
    "unimodality",
    "limits",
    "scalar-bounds",
)

_DEFAULT_ALPHAS = (0.7, 1.0, 1.8)
_DEFAULT_BETAS = (0.5, 1.0, 1.5, 2.0, 2.779, 4.0, 8.0)
_DEFAULT_CHANNELS = (
    (0.7, 0.0),
    (0.2, 0.05),
    (0.45, 0.1),
    (0.2, 0.2),
    (0.0, 0.0),
    (0.9, 0.4),
    (0.1, 0.6),
)


def default_verification_configs():
    return [
        {"alpha": a, "beta": b, "q0": q0, "q1": q1}
        for a in _DEFAULT_ALPHAS
        for b in _DEFAULT_BETAS
        for (q0, q1) in _DEFAULT_CHANNELS
    ]


def _check_symmetry(report, n_tuples, rng):
    worst = 0.0
    worst_at = None
    for _ in range(n_tuples):
        alpha = float(np.exp(rng.uniform(np.log(0.3), np.log(3.0))))
        beta = float(rng.uniform(0.4, 8.0))
        while True:
            q0, q1 = rng.uniform(0.0, 1.0, size=2)
            if abs(1.0 - q0 - q1) > 0.05:
                break
        x = float(rng.uniform(-2.0, 2.0)) / alpha
        noise = ggn.GGNParams(alpha, beta)
        ref = objective.gain(x, ChannelParams(q0, q1), noise)
        others = (
            objective.gain(-x, ChannelParams(q1, q0), noise),
            objective.gain(x, ChannelParams(1.0 - q0, 1.0 - q1), noise),
            objective.gain(-x, ChannelParams(1.0 - q1, 1.0 - q0), noise),
        )
        residual = max(abs(o - ref) for o in others) / ref
        if residual > worst:
            worst = residual
            worst_at = {"alpha": alpha, "beta": beta, "q0": q0, "q1": q1, "x": x}
    report.add(
        "four-fold-symmetry",
        {"tuples": n_tuples},
        worst < 1e-10,
        f"max relative residual {worst:.3e} (worst at {worst_at})",
    )


def _check_sign_agreement(report, cfg, canon, noise):
    xs = np.linspace(0.01, 2.0, 150) / noise.alpha
    deriv = objective.gain_deriv(xs, canon.channel, noise)
    factor = objective.sign_factor_terms(xs, canon, noise).value
    deriv_sign = np.where(np.abs(deriv) < 1e-12 * noise.alpha**3, 0.0, np.sign(deriv))
    factor_sign = np.where(np.abs(factor) < objective.SIGN_TOL, 0.0, np.sign(factor))
    live = (
        (deriv_sign != 0.0)
        & (factor_sign != 0.0)
        & np.isfinite(deriv)
        & np.isfinite(factor)
    )
    ok = bool(np.all(deriv_sign[live] == factor_sign[live]))
    report.add(
        "derivative-sign-agreement",
        cfg,
        ok,
        f"{int(np.sum(live))} comparable grid points",
    )


def _check_landmarks(report, cfg, canon, noise):
    beta = noise.beta
    if beta <= 1.0:
        return
    marks = objective.bracket_points(noise)
    t1 = objective.sign_factor_terms(marks.x1, canon, noise)
    ok = t1.deriv > 0.0 and abs(t1.m3 + 1.0) < 1e-9 and marks.x1 < 1.0 / noise.alpha
    detail = f"deriv(x1)={t1.deriv:.3e}, m3(x1)={t1.m3:.12f}"
    if beta > 2.0:
        t2 = objective.sign_factor_terms(marks.x2, canon, noise)
        ok = ok and t2.deriv < 0.0 and 0.0 < marks.x2 < marks.x1
        detail += f", deriv(x2)={t2.deriv:.3e}"
    report.add("landmark-derivative-signs", cfg, ok, detail)


def _count_sign_changes(values):
    diffs = np.diff(values)
    scale = np.max(np.abs(values))
    signs = np.sign(diffs[np.abs(diffs) > 1e-14 * scale])
    if signs.size == 0:
        return 0
    return int(np.sum(signs[1:] != signs[:-1]))


def _check_unimodality(report, cfg, canon, noise):
    beta = noise.beta
    grid = np.arange(1, 10_001) / 10_001.0 / noise.alpha
    g = objective.gain(grid, canon.channel, noise)
    changes = _count_sign_changes(g)
    if beta > 1.0 and (not canon.symmetric or beta > 2.0):
        expected = 1
    else:
        expected = 0
    report.add(
        "unimodality",
        cfg,
        changes == expected,
        f"{changes} difference sign change(s), expected {expected}",
    )


def _check_limits(report, cfg, canon, noise):
    lim0, lim_inf = objective.fisher_gain_limits(canon)
    details = []
    ok = True
    if noise.beta >= 1.5:
        near = objective.sign_factor_terms(1e-6 / noise.alpha, canon, noise).value
        ok = ok and abs(near - lim0) <= 0.05
        details.append(f"at 1e-6/alpha: {near:.6f} vs limit {lim0:.6f}")
    far = objective.sign_factor_terms(30.0 / noise.alpha, canon, noise).value
    ok = ok and abs(far - lim_inf) <= 0.02
    details.append(f"at 30/alpha: {far:.6f} vs limit {lim_inf:.6f}")
    report.add("factor-limits", cfg, ok, "; ".join(details))


def _log_bound_gap(t: float) -> float:
    """Scalar gap function whose maximum over (0, 1/2) certifies the
    landmark derivative sign for shapes above 2."""
    return (
        2.0 * math.log(t)
        + 2.0 * t
        - 1.0
        + (3.0 - 2.0 * t) * math.log(2.0)
        + (2.0 * t - 1.0) * math.log(1.0 - 2.0 * t)
        + math.log(1.0 - t)
    )


def _check_scalar_bounds(report):
    t_max, gap_max = optimizer.golden_section_max(
        _log_bound_gap, 1e-9, 0.5 - 1e-9, tol=1e-12
    )
    ok_arg = abs(t_max - 0.4609) <= 1e-3
    ok_val = abs(gap_max - (-0.60542)) <= 1e-3
    gamma_term = 2.0 * specfun.log_gamma(1.461)
    ok_gamma = abs(gamma_term - (-0.2430)) <= 1e-3
    ok_chain = gap_max < gamma_term
    report.add(
        "scalar-bounds",
        {},
        ok_arg and ok_val and ok_gamma and ok_chain,
        f"gap max {gap_max:.5f} at t={t_max:.4f}; "
        f"2*log_gamma(1.461)={gamma_term:.4f}; strict bound holds: {ok_chain}",
    )


def verify_propositions(configs=None, scopes=None, *, symmetry_tuples=1000,
                        rng_seed=20240901) -> VerificationReport:
    """Run the numerical property suite over a sweep of configurations.

    ``scopes`` restricts the run to a subset of `VERIFY_SCOPES`; the
    default runs everything.  Per-configuration checks skip silently
    where they do not apply (e.g. landmark signs need shape > 1).
    """
    if scopes is None:
        scopes = VERIFY_SCOPES
    unknown = set(scopes) - set(VERIFY_SCOPES)
    if unknown:
        raise ValueError(f"unknown verification scopes: {sorted(unknown)}")
    if configs is None:
        configs = default_verification_configs()
    report = VerificationReport()
    if "symmetry" in scopes:
        _check_symmetry(report, symmetry_tuples, np.random.default_rng(rng_seed))
    if "scalar-bounds" in scopes:
        _check_scalar_bounds(report)
    per_config = {"sign", "landmarks", "unimodality", "limits"} & set(scopes)
    if per_config:
        for cfg in configs:
            noise = ggn.GGNParams(cfg["alpha"], cfg["beta"])
            channel = ChannelParams(cfg["q0"], cfg["q1"])
            try:
                canon = objective.canonicalize(channel)
            except UninformativeChannelError:
                report.add("canonicalize", cfg, False, "uninformative channel in sweep")
                continue
            if "sign" in per_config:
                _check_sign_agreement(report, cfg, canon, noise)
            if "landmarks" in per_config:
                _check_landmarks(report, cfg, canon, noise)
            if "unimodality" in per_config:
                _check_unimodality(report, cfg, canon, noise)
            if "limits" in per_config:
                _check_limits(report, cfg, canon, noise)
    return report


# ---------------------------------------------------------------------------
# Experiment presets


PRESET_NAMES = ("table1", "fig1-sweep", "fig2-roc", "fig3-acoustic")


def _acoustic_field() -> SensorField:
    """Unit response of a traveling sine field sampled by 50 sensors at
    50 instants: h_ij = sin(1.676*i - 2.514*j), i and j starting at 1,
    with all thresholds at zero until a policy replaces them."""
    i = np.arange(1, 51)[:, None]
    j = np.arange(1, 51)[None, :]
    h = np.sin(1.676 * i - 2.514 * j)
    return SensorField(h, np.zeros_like(h))


def preset(name: str):
    """Built-in experiment parameterizations.

    ``table1`` and ``fig1-sweep`` return `SweepSpec`s for the threshold
    solver; ``fig2-roc`` (homogeneous 2000-sensor single-shot link) and
    ``fig3-acoustic`` (50x50 traveling-wave field in heavy-tailed ship
    transit noise) return full `ExperimentConfig`s.
    """
    if name == "table1":
        return SweepSpec(alpha=1.0, channels=((0.7, 0.0),), betas=(1.5, 2.0, 4.0, 8.0))
    if name == "fig1-sweep":
        betas = tuple(round(0.2 * k, 10) for k in range(1, 41))
        return SweepSpec(
            alpha=1.0,
            channels=((0.0, 0.0), (0.7, 0.0), (0.2, 0.2), (0.1, 0.4)),
            betas=betas,
        )
    if name == "fig2-roc":
        scenario = DetectionScenario(
            field=SensorField.homogeneous(2000, 1),
            theta=0.0661,
            delta=0.5,
            noise=ggn.GGNParams(1.0, 8.0),
            channel=ChannelParams(0.7, 0.0),
        )
        return ExperimentConfig(
            scenario=scenario,
            trials=2000,
            detectors=(DETECTOR_GLRT,),
            policies=(OPTIMAL_POLICY, ZERO_POLICY),
            master_seed=DEFAULT_SEED,
        )
    if name == "fig3-acoustic":
        scenario = DetectionScenario(
            field=_acoustic_field(),
            theta=0.05,
            delta=0.5,
            noise=ggn.GGNParams(1.0, 2.779),
            channel=ChannelParams(0.3, 0.0),
        )
        return ExperimentConfig(
            scenario=scenario,
            trials=1000,
            detectors=(DETECTOR_GLRT, DETECTOR_RAO),
            policies=(OPTIMAL_POLICY, ZERO_POLICY),
            master_seed=DEFAULT_SEED,
        )
    raise ValueError(f"unknown preset {name!r}; known: {PRESET_NAMES}")


# ---------------------------------------------------------------------------
# Solver sweeps (CLI backend)


@dataclass
class SweepRow:
    q0: float
    q1: float
    beta: float
    alpha_x_star: float
    case: str
    error: str = ""


def run_sweep(spec: SweepSpec):
    """Solve the threshold for every (channel, beta) pair of the spec."""
    rows = []
    for q0, q1 in spec.channels:
        for beta in spec.betas:
            try:
                solution = optimizer.solve_threshold(
                    ggn.GGNParams(spec.alpha, float(beta)), ChannelParams(q0, q1)
                )
                rows.append(
                    SweepRow(q0, q1, float(beta), spec.alpha * solution.x_star,
                             solution.case_label)
                )
            except (ValueError, optimizer.ConvergenceError) as exc:
                rows.append(SweepRow(q0, q1, float(beta), math.nan, "", str(exc)))
    return rows
