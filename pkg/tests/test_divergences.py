import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from alphagan.divergences import (DiscreteDist, align, arimoto, dirichlet_pairs, f_divergence, gamma_alpha,
                                  inner_sup_bruteforce, jsd, jsd_tvd_bound_slack, optimal_discriminator,
                                  sandwich_slack, sq_hellinger, tvd, value_offset)
from alphagan.losses import alpha_cpe, f_from_margin, logistic_margin, margin_from_cpe, sigmoid_link

D = DiscreteDist.from_probs
DISJOINT = (D([1.0, 0.0]), D([0.0, 1.0]))
SKEW = (D([0.7, 0.3]), D([0.3, 0.7]))
FINITE_ALPHAS = [0.25, 0.5, 1.0, 2.0, 5.0, 10.0]


def reference_arimoto(p, q, a):
    """Plain evaluation of the closed form; only sensible for moderate a."""
    return a / (a - 1) * (np.sum((p ** a + q ** a) ** (1 / a)) - 2 ** (1 / a))


@st.composite
def dist_pairs(draw, max_size=12):
    n = draw(st.integers(2, max_size))
    raw = draw(arrays(float, (2, n), elements=st.floats(0, 1)))
    raw[:, 0] += 1e-3
    raw /= raw.sum(axis=1, keepdims=True)
    raw[:, -1] = 1 - raw[:, :-1].sum(axis=1)
    raw = np.clip(raw, 0, 1)
    raw /= raw.sum(axis=1, keepdims=True)
    return D(raw[0]), D(raw[1])


class TestDiscreteDist:
    def test_validation(self):
        with pytest.raises(ValueError):
            D([0.5, 0.6])
        with pytest.raises(ValueError):
            D([1.5, -0.5])
        with pytest.raises(ValueError):
            DiscreteDist((1, 0), [0.5, 0.5])
        with pytest.raises(ValueError):
            DiscreteDist((0, 0), [0.5, 0.5])
        with pytest.raises(ValueError):
            DiscreteDist((0,), [0.5, 0.5])

    def test_immutable(self):
        P = D([0.5, 0.5])
        with pytest.raises(ValueError):
            P.probs[0] = 1.0

    def test_mapping_round_trip(self):
        P = DiscreteDist.from_mapping({4: 0.25, 2: 0.75})
        assert P.support == (2, 4)
        assert P.as_dict() == {2: 0.75, 4: 0.25}
        assert P.prob(3) == 0.0

    def test_align_pads_with_zero(self):
        P, Q = align(DiscreteDist((0, 2), [0.5, 0.5]), DiscreteDist((1, 2), [0.5, 0.5]))
        assert P.support == Q.support == (0, 1, 2)
        assert P.probs.tolist() == [0.5, 0.0, 0.5]
        assert tvd(P, Q) == pytest.approx(0.5)

    def test_mismatched_support_rejected(self):
        P, Q = DiscreteDist((0, 2), [0.5, 0.5]), DiscreteDist((1, 2), [0.5, 0.5])
        for fn in (tvd, jsd, sq_hellinger):
            with pytest.raises(ValueError):
                fn(P, Q)
        with pytest.raises(ValueError):
            arimoto(P, Q, 2)


class TestExamples:
    def test_tvd(self):
        assert tvd(*SKEW) == pytest.approx(0.4, abs=1e-15)
        assert tvd(*DISJOINT) == 1.0
        assert tvd(SKEW[0], SKEW[0]) == 0.0

    def test_jsd(self):
        assert jsd(*DISJOINT) == pytest.approx(math.log(2), abs=1e-15)
        # frozen from an independent hand evaluation: 0.7 ln 1.4 + 0.3 ln 0.6
        assert jsd(*SKEW) == pytest.approx(0.7 * math.log(1.4) + 0.3 * math.log(0.6), abs=1e-15)
        assert jsd(*SKEW) == pytest.approx(0.0822828, abs=1e-7)

    def test_hellinger(self):
        assert sq_hellinger(*DISJOINT) == 2.0
        assert sq_hellinger(D([0.5, 0.5]), D([1.0, 0.0])) == pytest.approx(2 - math.sqrt(2), abs=1e-15)

    def test_arimoto_disjoint_inf(self):
        assert arimoto(*DISJOINT, math.inf) == 1.0

    @pytest.mark.parametrize("a", FINITE_ALPHAS + [math.inf])
    def test_arimoto_zero_on_equal(self, a):
        assert arimoto(SKEW[0], SKEW[0], a) == pytest.approx(0.0, abs=1e-15)

    def test_gamma(self):
        for a in FINITE_ALPHAS:
            assert gamma_alpha(0.0, a) == 0.0
        assert gamma_alpha(1.0, 2) == pytest.approx(2 * (2 - math.sqrt(2)), abs=1e-14)
        assert gamma_alpha(1.0, 1) == pytest.approx(2 * math.log(2), abs=1e-15)
        for a in (0.25, 0.5, 2.0, 5.0):
            assert gamma_alpha(1.0, a) == pytest.approx(a / (a - 1) * (2 - 2 ** (1 / a)), rel=1e-13)

    def test_gamma_rejects(self):
        with pytest.raises(ValueError):
            gamma_alpha(1.2, 2)
        with pytest.raises(ValueError):
            gamma_alpha(0.5, math.inf)

    @pytest.mark.parametrize("a", FINITE_ALPHAS)
    def test_gamma_increasing_and_convex(self, a):
        g = np.array([gamma_alpha(p, a) for p in np.linspace(0, 1, 201)])
        assert np.all(np.diff(g) > 0)
        assert np.all(np.diff(g, 2) >= -1e-12)

    def test_gamma_one_is_limit(self):
        for p in (0.1, 0.5, 0.9):
            assert abs(gamma_alpha(p, 1 + 1e-6) - gamma_alpha(p, 1)) <= 1e-5

    @pytest.mark.parametrize("a", FINITE_ALPHAS)
    def test_sandwich_degenerate(self, a):
        assert sandwich_slack(SKEW[0], SKEW[0], a) == (0.0, 0.0)
        lo, hi = sandwich_slack(*DISJOINT, a)
        assert abs(lo) <= 1e-12 and abs(hi) <= 1e-12

    def test_jsd_tvd_slack(self):
        assert jsd_tvd_bound_slack(SKEW[0], SKEW[0]) == 0.0
        assert abs(jsd_tvd_bound_slack(*DISJOINT)) <= 1e-15

    def test_optimal_discriminator(self):
        P, Q = D([0.8, 0.2]), D([0.2, 0.8])
        assert optimal_discriminator(P, Q, 1).as_array()[0] == pytest.approx(0.8)
        assert optimal_discriminator(P, Q, 2).as_array()[0] == pytest.approx(0.64 / 0.68, abs=1e-15)
        assert optimal_discriminator(P, P, 3).as_array().tolist() == [0.5, 0.5]
        assert optimal_discriminator(P, Q, math.inf).as_array().tolist() == [1.0, 0.0]
        both_zero = optimal_discriminator(D([1.0, 0.0]), D([1.0, 0.0]), 2)
        assert both_zero.values[1] == 0.5

    def test_value_offset_limits(self):
        assert value_offset(1) == pytest.approx(-math.log(4))
        assert abs(value_offset(1 + 1e-6) - value_offset(1)) <= 1e-5
        assert abs(value_offset(1e7) - value_offset(math.inf)) <= 1e-5


class TestProperties:
    @pytest.mark.parametrize("a", [0.3, 0.5, 2.0, 3.0, 7.0])
    def test_matches_reference(self, a):
        for P, Q in dirichlet_pairs(1, 10, sizes=(2, 8)):
            assert arimoto(P, Q, a) == pytest.approx(reference_arimoto(P.probs, Q.probs, a), rel=1e-9, abs=1e-13)

    def test_identities_and_ladder(self):
        for P, Q in dirichlet_pairs(2, 50):
            tv = tvd(P, Q)
            assert abs(arimoto(P, Q, 0.5) - sq_hellinger(P, Q)) <= 1e-12
            assert abs(arimoto(P, Q, 1) - 2 * jsd(P, Q)) <= 1e-12
            assert abs(arimoto(P, Q, math.inf) - tv) <= 1e-15
            assert abs(arimoto(P, Q, 1e4) - tv) <= 1e-3
            for a in (1 - 1e-4, 1 + 1e-4):
                assert abs(arimoto(P, Q, a) - 2 * jsd(P, Q)) <= 1e-3

    def test_sandwich_sweep(self):
        pairs = dirichlet_pairs(3, 334)
        assert len(pairs) >= 1000
        for a in FINITE_ALPHAS:
            for P, Q in pairs:
                lo, hi = sandwich_slack(P, Q, a)
                assert lo >= -1e-12 and hi >= -1e-12
        assert min(jsd_tvd_bound_slack(P, Q) for P, Q in pairs) >= -1e-12

    @settings(max_examples=150, deadline=None)
    @given(dist_pairs(), st.sampled_from(FINITE_ALPHAS + [math.inf]))
    def test_symmetric_nonnegative(self, pair, a):
        P, Q = pair
        d = arimoto(P, Q, a)
        assert d >= -1e-15
        assert d == pytest.approx(arimoto(Q, P, a), abs=1e-14)
        for fn in (tvd, jsd, sq_hellinger):
            assert fn(P, Q) >= -1e-15
            assert fn(P, P) == pytest.approx(0.0, abs=1e-15)

    @settings(max_examples=150, deadline=None)
    @given(dist_pairs(), st.sampled_from(FINITE_ALPHAS))
    def test_sandwich_hypothesis(self, pair, a):
        lo, hi = sandwich_slack(*pair, a)
        assert lo >= -1e-12 and hi >= -1e-12

    def test_equivalence_witness(self):
        target = D([0.5, 0.5])
        for a in FINITE_ALPHAS + [math.inf]:
            seq = []
            for n in range(1, 101):
                Pn = D([(1 + 1 / n) / 2, (1 - 1 / n) / 2])
                seq.append(arimoto(Pn, target, a))
                if not math.isinf(a):
                    tv = tvd(Pn, target)
                    ratio = seq[-1] / gamma_alpha(tv, a)
                    assert 1 - 1e-9 <= ratio <= gamma_alpha(1, a) * tv / gamma_alpha(tv, a) * (1 + 1e-9)
            assert np.all(np.diff(seq) < 0)
            assert seq[-1] < 1e-2

    def test_large_alpha_no_underflow(self):
        P, Q = D([1e-5, 1 - 1e-5]), D([2e-5, 1 - 2e-5])
        assert math.isfinite(arimoto(P, Q, 5000.0))
        assert arimoto(P, Q, 5000.0) == pytest.approx(tvd(P, Q), abs=1e-3)


class TestInnerSup:
    @pytest.mark.parametrize("a", [0.5, 1.0, 2.0, math.inf])
    def test_equal_distributions(self, a):
        L = alpha_cpe(a)
        P = D([0.2, 0.3, 0.5])
        res = inner_sup_bruteforce(P, P, L)
        assert res.value == pytest.approx(2 * float(L.phi(0.5)), abs=1e-9)
        if not math.isinf(a):
            # at alpha = inf the objective is flat in d when p = q
            assert np.allclose(res.argmax.as_array(), 0.5, atol=2e-3)

    @pytest.mark.parametrize("a", [0.5, 1.0, 2.0, 5.0])
    def test_disjoint(self, a):
        res = inner_sup_bruteforce(*DISJOINT, alpha_cpe(a))
        assert abs(res.value) <= 1e-6
        assert np.allclose(res.argmax.as_array(), [1.0, 0.0], atol=1e-6)
        assert arimoto(*DISJOINT, a) + value_offset(a) == pytest.approx(0.0, abs=1e-12)

    def test_random_alpha_two(self):
        rng = np.random.default_rng(11)
        step = 1e-3
        for _ in range(10):
            P, Q = D(rng.dirichlet(np.ones(8))), D(rng.dirichlet(np.ones(8)))
            res = inner_sup_bruteforce(P, Q, alpha_cpe(2), step)
            assert abs(res.value - (arimoto(P, Q, 2) + 2 * (math.sqrt(2) - 2))) <= 2 * step
            star = optimal_discriminator(P, Q, 2).as_array()
            assert np.max(np.abs(res.argmax.as_array() - star)) <= 2 * step

    def test_unrefined_still_close(self):
        P, Q = SKEW
        res = inner_sup_bruteforce(P, Q, alpha_cpe(2), 0.01, refine=False)
        assert abs(res.value - (arimoto(P, Q, 2) + value_offset(2))) <= 0.02

    def test_guards(self):
        big = D(np.full(33, 1 / 33))
        with pytest.raises(ValueError):
            inner_sup_bruteforce(big, big, alpha_cpe(1))
        with pytest.raises(ValueError):
            inner_sup_bruteforce(*SKEW, alpha_cpe(1), grid_step=0.2)
        with pytest.raises(ValueError):
            inner_sup_bruteforce(*SKEW, alpha_cpe(1), grid_step=0.0)


class TestFDivergence:
    def test_telescoping(self):
        for P, Q in dirichlet_pairs(4, 5, sizes=(2, 8)):
            assert abs(f_divergence(P, Q, lambda u: u - 1)) <= 1e-12

    def test_q_zero_uses_slope(self):
        P, Q = D([0.5, 0.5]), D([1.0, 0.0])
        assert f_divergence(P, Q, lambda u: abs(u - 1) / 2) == pytest.approx(tvd(P, Q), abs=1e-7)
        assert f_divergence(P, Q, lambda u: abs(u - 1) / 2, slope_at_infinity=0.5) == pytest.approx(0.5)

    def test_logistic_margin_gives_jsd(self):
        m = logistic_margin()
        for P, Q in dirichlet_pairs(5, 4, sizes=(2, 8)):
            fd = f_divergence(P, Q, lambda u: f_from_margin(m, u))
            assert abs(fd + 2 * math.log(2) - 2 * jsd(P, Q)) <= 1e-6

    def test_alpha_two_matches_brute_force(self):
        m = margin_from_cpe(alpha_cpe(2), sigmoid_link())
        for P, Q in dirichlet_pairs(6, 3, sizes=(2, 8)):
            fd = f_divergence(P, Q, lambda u: f_from_margin(m, u))
            assert abs(fd - inner_sup_bruteforce(P, Q, alpha_cpe(2)).value) <= 1e-4
