import numpy as np
import pytest
from scipy import stats


def _frequencies(indices, size):
    return np.bincount(indices, minlength=size)


class TestLogit:
    @pytest.fixture
    def logit(self):
        from frameopt.gsm import logit
        return logit

    def test_half(self, logit):
        assert logit(0.5) == 0.0

    def test_value(self, logit):
        assert logit(0.9) == pytest.approx(np.log(9.0))

    @pytest.mark.parametrize('p', [0.0, 1.0, -0.1, 1.5, np.nan])
    def test_outside_domain(self, logit, p):
        from frameopt.interfaces import DomainError
        with pytest.raises(DomainError):
            logit(p)


class TestSoftmax:
    @pytest.fixture
    def softmax(self):
        from frameopt.gsm import softmax
        return softmax

    def test_uniform(self, softmax):
        assert np.allclose(softmax([0.0, 0.0, 0.0]), 1.0 / 3)

    def test_shift_invariance(self, softmax):
        theta = np.array([0.3, -1.2, 2.0])
        assert np.allclose(softmax(theta + 1234.5), softmax(theta))

    def test_values(self, softmax):
        result = softmax([1.0, 2.0, 3.0])
        assert np.allclose(result, [0.09003, 0.24473, 0.66524], atol=1e-5)
        assert result.sum() == pytest.approx(1.0, abs=1e-12)

    def test_large_logits(self, softmax):
        result = softmax([1000.0, 0.0])
        assert np.all(np.isfinite(result))
        assert result[0] == pytest.approx(1.0)


class TestGumbel:
    def test_location(self):
        from frameopt.gsm import gumbel_from_uniform
        assert gumbel_from_uniform(np.exp(-1.0)) == pytest.approx(0.0)

    def test_clamped(self):
        from frameopt.gsm import gumbel_from_uniform
        assert np.all(np.isfinite(gumbel_from_uniform([0.0, 1.0])))

    def test_mean(self):
        from frameopt.gsm import make_rng
        from frameopt.gsm import sample_gumbel
        samples = sample_gumbel(make_rng(0), 10 ** 6)
        assert abs(samples.mean() - np.euler_gamma) < 0.01

    def test_deterministic(self):
        from frameopt.gsm import make_rng
        from frameopt.gsm import sample_gumbel
        assert np.array_equal(sample_gumbel(make_rng(7), 100),
                              sample_gumbel(make_rng(7), 100))


class TestSamplers:
    @pytest.fixture(params=['gm', 'cdf'])
    def draws(self, request):
        from frameopt.gsm import cdf_draws
        from frameopt.gsm import gm_draws
        return {'gm': gm_draws, 'cdf': cdf_draws}[request.param]

    def test_dominant_logit(self):
        from frameopt.gsm import gm_sample
        from frameopt.gsm import make_rng
        sample = gm_sample([50.0, -50.0], make_rng(0))
        assert sample.index == 0
        assert np.array_equal(sample.onehot, [1.0, 0.0])

    def test_cdf_sample(self):
        from frameopt.gsm import cdf_sample
        from frameopt.gsm import make_rng
        sample = cdf_sample([-50.0, 50.0, -50.0], make_rng(0))
        assert sample.index == 1
        assert sample.onehot.sum() == 1.0

    def test_uniform_frequencies(self, draws):
        from frameopt.gsm import make_rng
        n = 10 ** 5
        counts = _frequencies(draws(np.zeros(3), make_rng(1), n), 3)
        assert np.allclose(counts / n, 1.0 / 3, atol=0.01)

    def test_matches_softmax(self, draws):
        from frameopt.gsm import make_rng
        from frameopt.gsm import softmax
        theta = np.array([1.0, 2.0, 3.0])
        n = 10 ** 5
        counts = _frequencies(draws(theta, make_rng(2), n), 3)
        _, p_value = stats.chisquare(counts, n * softmax(theta))
        assert p_value > 0.001

    def test_goodness_of_fit_random_logits(self):
        from frameopt.gsm import gm_draws
        from frameopt.gsm import make_rng
        from frameopt.gsm import softmax
        rng = make_rng(3)
        n = 10 ** 5
        passed = 0
        for _ in range(20):
            size = int(rng.integers(2, 7))
            theta = rng.standard_normal(size)
            counts = _frequencies(gm_draws(theta, rng, n), size)
            _, p_value = stats.chisquare(counts, n * softmax(theta))
            passed += p_value > 0.01
        assert passed >= 19

    @pytest.mark.parametrize('theta', [
        [0.0, 0.0, 0.0, 0.0],
        [1.5, -0.3, 0.2, 2.0, -1.0],
        [4.0, 0.0],
        ])
    def test_samplers_agree(self, theta):
        from frameopt.gsm import cdf_draws
        from frameopt.gsm import gm_draws
        from frameopt.gsm import make_rng
        n = 5 * 10 ** 4
        size = len(theta)
        table = np.vstack([
            _frequencies(gm_draws(theta, make_rng(4), n), size),
            _frequencies(cdf_draws(theta, make_rng(5), n), size),
            ])
        _, p_value, _, _ = stats.chi2_contingency(table)
        assert p_value > 0.001


class TestSoftSample:
    def test_sums_to_one(self):
        from frameopt.gsm import gsm_soft_sample
        soft = gsm_soft_sample([0.1, 0.5, -1.0], [0.3, -0.2, 1.1], 0.5)
        assert soft.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all((soft > 0) & (soft < 1))

    def test_temperature_must_be_positive(self):
        from frameopt.gsm import gsm_soft_sample
        from frameopt.interfaces import DomainError
        with pytest.raises(DomainError):
            gsm_soft_sample([0.0, 0.0], [0.0, 0.0], 0.0)

    def test_straight_through(self):
        from frameopt.gsm import straight_through
        hard = straight_through([0.2, 0.5, 0.3])
        assert hard.index == 1
        assert np.array_equal(hard.onehot, [0.0, 1.0, 0.0])

    def test_straight_through_ties(self):
        from frameopt.gsm import straight_through
        assert straight_through([0.4, 0.4, 0.2]).index == 0

    def test_jacobian_matches_finite_differences(self):
        from frameopt.gsm import gsm_soft_sample
        from frameopt.gsm import make_rng
        from frameopt.gsm import sample_gumbel
        from frameopt.gsm import soft_sample_jacobian

        rng = make_rng(4)
        h = 1e-6
        worst = 0.0
        for _ in range(100):
            size = int(rng.integers(2, 7))
            theta = rng.standard_normal(size)
            noise = sample_gumbel(rng, size)
            tau = rng.uniform(0.5, 5.0)
            jac = soft_sample_jacobian(
                gsm_soft_sample(theta, noise, tau), tau)
            numeric = np.empty_like(jac)
            for j in range(size):
                step = np.zeros(size)
                step[j] = h
                numeric[:, j] = (
                    gsm_soft_sample(theta + step, noise, tau) -
                    gsm_soft_sample(theta - step, noise, tau)) / (2 * h)
            worst = max(worst,
                        np.abs(jac - numeric).max() / np.abs(jac).max())
        assert worst < 1e-6

    def test_jacobian_without_temperature_scaling(self):
        from frameopt.gsm import soft_sample_jacobian
        soft = np.array([0.2, 0.3, 0.5])
        assert np.allclose(
            soft_sample_jacobian(soft, 0.1, temperature_scaling=False),
            0.1 * soft_sample_jacobian(soft, 0.1))


class TestAnnealSchedule:
    @pytest.fixture
    def AnnealSchedule(self):
        from frameopt.gsm import AnnealSchedule
        return AnnealSchedule

    def test_defaults(self, AnnealSchedule):
        schedule = AnnealSchedule()
        assert schedule.temperature(0) == 100.0
        assert schedule.temperature(1) == pytest.approx(90.0)
        assert schedule.temperature(2) == pytest.approx(81.0)

    def test_floor(self, AnnealSchedule):
        schedule = AnnealSchedule()
        assert schedule.temperature(1000) == 0.01
        k = int(np.ceil(np.log(1e-4) / np.log(0.9)))
        assert schedule.temperature(k) == 0.01
        assert schedule.temperature(k - 1) > 0.01

    @pytest.mark.parametrize('kwargs', [
        {'initial': 0.0}, {'minimum': -1.0}, {'decay': 0.0}, {'decay': 1.5},
        ])
    def test_invalid(self, AnnealSchedule, kwargs):
        from frameopt.interfaces import DomainError
        with pytest.raises(DomainError):
            AnnealSchedule(**kwargs)


class TestDrawSampleState:
    @pytest.fixture
    def draw_sample_state(self):
        from frameopt.gsm import draw_sample_state
        return draw_sample_state

    def test_single_sample(self, draw_sample_state):
        from frameopt.gsm import make_rng
        state = draw_sample_state(np.array([0.1, 0.2, -0.3]), make_rng(5), 2.0)
        assert state.noises.shape == (1, 3)
        assert state.hard.index == int(np.argmax(state.soft))
        assert state.soft.sum() == pytest.approx(1.0)
        assert state.jacobian.shape == (3, 3)
        assert state.tau == 2.0

    def test_majority_vote(self, draw_sample_state):
        from frameopt.gsm import gsm_soft_sample
        from frameopt.gsm import make_rng
        from frameopt.gsm import soft_sample_jacobian

        theta = np.array([0.0, 0.5, 0.2, -0.4])
        state = draw_sample_state(theta, make_rng(6), 0.7, samples=9)
        votes = np.bincount(
            np.argmax(theta + state.noises, axis=1), minlength=4)
        assert state.hard.index == int(np.argmax(votes))

        softs = [gsm_soft_sample(theta, noise, 0.7) for noise in state.noises]
        assert np.allclose(state.soft, np.mean(softs, axis=0))
        assert np.allclose(state.jacobian, np.mean(
            [soft_sample_jacobian(soft, 0.7) for soft in softs], axis=0))

    def test_deterministic(self, draw_sample_state):
        from frameopt.gsm import make_rng
        first = draw_sample_state(np.zeros(5), make_rng(8), 1.0, samples=3)
        second = draw_sample_state(np.zeros(5), make_rng(8), 1.0, samples=3)
        assert np.array_equal(first.noises, second.noises)
        assert first.hard.index == second.hard.index

    def test_needs_a_sample(self, draw_sample_state):
        from frameopt.gsm import make_rng
        from frameopt.interfaces import DomainError
        with pytest.raises(DomainError):
            draw_sample_state(np.zeros(2), make_rng(0), 1.0, samples=0)
