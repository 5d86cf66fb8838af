"""Detection gain, its derivative routes, and channel canonicalization."""

import math

import numpy as np
import pytest

from onebitdet import ggn, objective
from onebitdet.ggn import GGNParams
from onebitdet.objective import (
    CanonicalChannel,
    ChannelParams,
    UninformativeChannelError,
    bracket_points,
    canonicalize,
    gain,
    gain_deriv,
    sign_factor_terms,
)

N12 = GGNParams(1.0, 2.0)
CH_ASYM = ChannelParams(0.7, 0.0)


def random_informative_channel(rng, min_coupling=0.05):
    while True:
        q0, q1 = rng.uniform(0.0, 1.0, size=2)
        if abs(1.0 - q0 - q1) > min_coupling:
            return ChannelParams(float(q0), float(q1))


class TestCanonicalize:
    def test_already_canonical(self):
        canon = canonicalize(ChannelParams(0.7, 0.0))
        assert (canon.q0c, canon.q1c, canon.negate) == (0.7, 0.0, False)

    def test_swap_negates(self):
        canon = canonicalize(ChannelParams(0.0, 0.7))
        assert (canon.q0c, canon.q1c, canon.negate) == (0.7, 0.0, True)

    def test_complement_then_swap(self):
        # (0.9, 0.4) complements to (0.1, 0.6), which still needs the
        # swap, so the recorded mapping mirrors the abscissa
        canon = canonicalize(ChannelParams(0.9, 0.4))
        assert canon.q0c == pytest.approx(0.6)
        assert canon.q1c == pytest.approx(0.1)
        assert canon.negate is True

    def test_mapping_preserves_gain_on_grid(self):
        rng = np.random.default_rng(81)
        for _ in range(60):
            channel = random_informative_channel(rng)
            canon = canonicalize(channel)
            noise = GGNParams(
                float(np.exp(rng.uniform(np.log(0.4), np.log(2.5)))),
                float(rng.uniform(0.4, 8.0)),
            )
            for x in np.linspace(-2.0, 2.0, 9) / noise.alpha:
                direct = gain(float(x), channel, noise)
                mapped = gain(canon.map_x(float(x)), canon.channel, noise)
                assert mapped == pytest.approx(direct, rel=1e-12)

    def test_postconditions(self):
        rng = np.random.default_rng(82)
        for _ in range(200):
            canon = canonicalize(random_informative_channel(rng))
            assert canon.q0c >= canon.q1c
            assert 1.0 - canon.q0c - canon.q1c > 0.0

    @pytest.mark.parametrize("q0,q1", [(0.5, 0.5), (0.3, 0.7), (1.0, 0.0), (0.0, 1.0)])
    def test_uninformative_rejected(self, q0, q1):
        with pytest.raises(UninformativeChannelError):
            canonicalize(ChannelParams(q0, q1))

    def test_canonical_type_invariants(self):
        with pytest.raises(ValueError):
            CanonicalChannel(0.1, 0.6, False)
        with pytest.raises(ValueError):
            CanonicalChannel(0.7, 0.4, False)


class TestGain:
    def test_perfect_channel_at_zero(self):
        assert gain(0.0, ChannelParams(0.0, 0.0), N12) == pytest.approx(
            4.0 / math.pi, rel=1e-12
        )

    def test_asymmetric_channel_at_zero(self):
        # p(0) = 0.85, so the denominator is 0.85 * 0.15 = 0.1275
        assert gain(0.0, CH_ASYM, N12) == pytest.approx(
            1.0 / (0.1275 * math.pi), rel=1e-12
        )

    def test_positive_side_dominates_for_canonical(self):
        assert gain(0.4, CH_ASYM, N12) > gain(-0.4, CH_ASYM, N12)

    def test_swap_identity_tight(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            channel = random_informative_channel(rng)
            swapped = ChannelParams(channel.q1, channel.q0)
            noise = GGNParams(1.0, float(rng.uniform(0.4, 8.0)))
            x = float(rng.uniform(-2.0, 2.0))
            assert gain(x, channel, noise) == pytest.approx(
                gain(-x, swapped, noise), rel=1e-12
            )

    def test_four_fold_symmetry(self):
        rng = np.random.default_rng(6)
        for _ in range(300):
            channel = random_informative_channel(rng)
            noise = GGNParams(
                float(np.exp(rng.uniform(np.log(0.3), np.log(3.0)))),
                float(rng.uniform(0.4, 8.0)),
            )
            x = float(rng.uniform(-2.0, 2.0)) / noise.alpha
            ref = gain(x, channel, noise)
            q0, q1 = channel.q0, channel.q1
            for other in (
                gain(-x, ChannelParams(q1, q0), noise),
                gain(x, ChannelParams(1 - q0, 1 - q1), noise),
                gain(-x, ChannelParams(1 - q1, 1 - q0), noise),
            ):
                assert other == pytest.approx(ref, rel=1e-12)

    def test_strictly_positive_and_vectorized(self):
        xs = np.linspace(-3.0, 3.0, 101)
        vals = gain(xs, CH_ASYM, GGNParams(1.0, 2.779))
        assert vals.shape == xs.shape
        assert np.all(vals > 0.0)

    def test_deep_tail_log_route_continuity(self):
        # the log-space route takes over past the switch point; the two
        # routes must agree where both are representable
        noise = GGNParams(1.0, 0.9)
        near, far = 4.999, 5.001
        assert gain(far, CH_ASYM, noise) == pytest.approx(
            gain(near, CH_ASYM, noise), rel=1e-2
        )
        ratio = gain(near, CH_ASYM, noise) / gain(far, CH_ASYM, noise)
        assert 1.0 < ratio < 1.01

    def test_deep_tail_large_shape(self):
        # exponent guard: with shape 8 the plain ratio is 0/0 well
        # before |x| reaches the 5/alpha switch; the log route keeps the
        # value representable out to the double-precision limit
        noise = GGNParams(1.0, 8.0)
        val = gain(2.2, CH_ASYM, noise)
        assert val > 0.0 and math.isfinite(val)
        # continuity across the route switch (exponent 300 <-> x ~ 2.04);
        # the log-gain slope there is about -2400, so over 4e-6 the value
        # moves by about 1%
        switch = 300.0 ** (1.0 / 8.0)
        below = gain(switch - 2e-6, CH_ASYM, noise)
        above = gain(switch + 2e-6, CH_ASYM, noise)
        assert 0.95 < above / below < 1.0

    def test_uninformative_rejected(self):
        with pytest.raises(UninformativeChannelError):
            gain(0.1, ChannelParams(0.2, 0.8), N12)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            gain(math.inf, CH_ASYM, N12)


class TestGainDeriv:
    def test_zero_at_origin_for_symmetric(self):
        for beta in (0.5, 1.0, 1.7, 3.2):
            assert gain_deriv(0.0, ChannelParams(0.2, 0.2), GGNParams(1.0, beta)) == 0.0

    def test_near_zero_at_reported_maximizer(self):
        # the gain curvature here is ~ -7, so the four-decimal rounding
        # of the maximizer leaves a derivative of a few 1e-4
        assert abs(gain_deriv(0.3682, CH_ASYM, N12)) < 5e-4

    def test_negative_for_heavy_tails(self):
        noise = GGNParams(1.0, 0.5)
        for x in (0.1, 0.5, 1.0):
            assert gain_deriv(x, CH_ASYM, noise) < 0.0

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(31)
        for _ in range(25):
            alpha = float(np.exp(rng.uniform(np.log(0.5), np.log(2.0))))
            beta = float(rng.uniform(0.6, 8.0))
            noise = GGNParams(alpha, beta)
            channel = random_informative_channel(rng)
            scale = 1e-3 * alpha**3
            for x in np.linspace(0.05, 0.9, 7) / alpha:
                h = 1e-6 / alpha
                fd = (gain(x + h, channel, noise) - gain(x - h, channel, noise)) / (2 * h)
                gp = gain_deriv(float(x), channel, noise)
                assert abs(fd - gp) <= 1e-6 * max(abs(gp), scale)

    def test_sign_agrees_with_factor(self):
        rng = np.random.default_rng(32)
        for _ in range(30):
            channel = random_informative_channel(rng)
            canon = canonicalize(channel)
            noise = GGNParams(1.0, float(rng.uniform(0.4, 8.0)))
            xs = np.linspace(0.02, 2.0, 100)
            deriv = gain_deriv(xs, canon.channel, noise)
            factor = sign_factor_terms(xs, canon, noise).value
            ds = np.where(np.abs(deriv) < 1e-12, 0.0, np.sign(deriv))
            fs = np.where(np.abs(factor) < 1e-12, 0.0, np.sign(factor))
            live = (ds != 0) & (fs != 0) & np.isfinite(deriv) & np.isfinite(factor)
            assert np.all(ds[live] == fs[live])

    def test_factored_route_agrees_with_direct(self):
        canon = canonicalize(CH_ASYM)
        for beta in (1.5, 2.0, 4.0, 8.0):
            noise = GGNParams(1.0, beta)
            # stay where f(x)^3 is representable, else both routes underflow
            x_max = min(2.0, 0.95 * 230.0 ** (1.0 / beta))
            xs = np.linspace(0.02, x_max, 80)
            direct = gain_deriv(xs, canon.channel, noise)
            factored = objective.gain_deriv_factored(xs, canon, noise)
            scale = np.max(np.abs(direct))
            assert np.all(np.abs(direct - factored) <= 1e-6 * np.maximum(np.abs(direct), 1e-3 * scale))


class TestSignFactorTerms:
    def test_helper_ordering(self):
        canon = canonicalize(CH_ASYM)
        terms = sign_factor_terms(np.linspace(0.05, 3.0, 50), canon, GGNParams(1.0, 2.0))
        assert np.all(terms.m1 > 0.0)
        assert np.all(terms.m2 > terms.m1)

    @pytest.mark.parametrize("beta", [1.5, 2.0, 4.0, 8.0])
    def test_m3_is_minus_one_at_inflection(self, beta):
        noise = GGNParams(1.3, beta)
        canon = canonicalize(CH_ASYM)
        terms = sign_factor_terms(bracket_points(noise).x1, canon, noise)
        assert terms.m3 == pytest.approx(-1.0, abs=1e-12)

    @pytest.mark.parametrize("beta", [1.5, 2.0, 4.0, 8.0])
    def test_deriv_positive_at_inflection(self, beta):
        noise = GGNParams(1.0, beta)
        for channel in (CH_ASYM, ChannelParams(0.2, 0.05), ChannelParams(0.2, 0.2)):
            canon = canonicalize(channel)
            assert sign_factor_terms(bracket_points(noise).x1, canon, noise).deriv > 0.0

    @pytest.mark.parametrize("beta", [2.5, 4.0, 8.0])
    def test_deriv_negative_at_inner_mark(self, beta):
        noise = GGNParams(1.0, beta)
        for channel in (CH_ASYM, ChannelParams(0.2, 0.05), ChannelParams(0.2, 0.2)):
            canon = canonicalize(channel)
            assert sign_factor_terms(bracket_points(noise).x2, canon, noise).deriv < 0.0

    def test_deriv_matches_finite_differences(self):
        canon = canonicalize(ChannelParams(0.6, 0.1))
        for beta in (0.7, 1.5, 2.779, 6.0):
            noise = GGNParams(1.0, beta)
            xs = np.linspace(0.05, 2.0, 25)
            terms = sign_factor_terms(xs, canon, noise)
            h = 1e-6
            fd = (
                sign_factor_terms(xs + h, canon, noise).value
                - sign_factor_terms(xs - h, canon, noise).value
            ) / (2 * h)
            scale = np.max(np.abs(terms.deriv))
            assert np.all(np.abs(fd - terms.deriv) <= 1e-5 * np.maximum(np.abs(terms.deriv), 1e-3 * scale))

    def test_second_matches_finite_differences(self):
        canon = canonicalize(ChannelParams(0.6, 0.1))
        for beta in (0.7, 1.5, 2.779, 6.0):
            noise = GGNParams(1.0, beta)
            xs = np.linspace(0.05, 2.0, 25)
            terms = sign_factor_terms(xs, canon, noise)
            h = 1e-6
            fd = (
                sign_factor_terms(xs + h, canon, noise).deriv
                - sign_factor_terms(xs - h, canon, noise).deriv
            ) / (2 * h)
            scale = np.max(np.abs(terms.second))
            assert np.all(np.abs(fd - terms.second) <= 1e-5 * np.maximum(np.abs(terms.second), 1e-3 * scale))

    def test_limits(self):
        canon = canonicalize(CH_ASYM)
        lim0, lim_inf = objective.fisher_gain_limits(canon)
        assert lim0 == pytest.approx((0.7 - 0.0) / (2 * 0.3))
        assert lim_inf == 0.0
        for beta in (1.5, 2.0, 8.0):
            noise = GGNParams(1.0, beta)
            assert sign_factor_terms(1e-6, canon, noise).value == pytest.approx(lim0, abs=0.05)
            assert sign_factor_terms(30.0, canon, noise).value == pytest.approx(lim_inf, abs=0.02)

    def test_rejects_nonpositive_x(self):
        canon = canonicalize(CH_ASYM)
        with pytest.raises(ValueError):
            sign_factor_terms(0.0, canon, N12)
        with pytest.raises(ValueError):
            sign_factor_terms(-0.3, canon, N12)


class TestBracketPoints:
    def test_gaussian_case(self):
        marks = bracket_points(GGNParams(1.0, 2.0))
        assert marks.x1 == pytest.approx(math.sqrt(0.5), rel=1e-14)
        assert marks.x2 is None

    def test_quartic_case(self):
        marks = bracket_points(GGNParams(1.0, 4.0))
        assert marks.x1 == pytest.approx(0.75**0.25, rel=1e-14)
        assert marks.x2 == pytest.approx(0.25**0.25, rel=1e-14)

    def test_flat_shape_limit(self):
        assert bracket_points(GGNParams(1.0, 200.0)).x1 == pytest.approx(1.0, abs=1e-2)

    def test_ordering(self):
        rng = np.random.default_rng(40)
        for _ in range(50):
            alpha = float(np.exp(rng.uniform(np.log(0.3), np.log(3.0))))
            beta = float(rng.uniform(2.001, 12.0))
            marks = bracket_points(GGNParams(alpha, beta))
            assert 0.0 < marks.x2 < marks.x1 < 1.0 / alpha

    def test_requires_shape_above_one(self):
        with pytest.raises(ValueError):
            bracket_points(GGNParams(1.0, 1.0))


class TestUnimodality:
    @pytest.mark.parametrize("beta", [1.5, 2.0, 2.779, 4.0, 8.0])
    def test_single_interior_maximum(self, beta):
        noise = GGNParams(1.0, beta)
        grid = np.arange(1, 10_001) / 10_001.0
        g = gain(grid, CH_ASYM, noise)
        diffs = np.diff(g)
        signs = np.sign(diffs[np.abs(diffs) > 1e-14 * np.max(np.abs(g))])
        changes = int(np.sum(signs[1:] != signs[:-1]))
        assert changes == 1


@pytest.mark.parametrize("q0,q1", [(0.3, 0.3), (0.0, 0.0)])
def test_channel_params_validation_allows_uninformative_storage(q0, q1):
    # the dataclass allows any probabilities; informativeness is
    # enforced per operation
    assert ChannelParams(q0, q1).informative or q0 + q1 == 1.0


@pytest.mark.parametrize("q0,q1", [(-0.1, 0.0), (0.0, 1.2), (math.nan, 0.5)])
def test_channel_params_validation_rejects_bad_probability(q0, q1):
    with pytest.raises(ValueError):
        ChannelParams(q0, q1)
