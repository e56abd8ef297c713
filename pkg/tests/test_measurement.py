import numpy as np
import pytest

from risvi.channel import ArrayGeometry, draw_realization
from risvi.measurement import (RisProfile, assemble, assemble_direct, decorrelate, gen_pilots,
                               gen_ris_profile, sensing_matrix, simulate_slot)
from risvi.numeric import RngStream, vec


class TestPilots:
    def test_single(self):
        np.testing.assert_array_equal(gen_pilots(1, 1).pilots, [[1]])

    def test_orthogonality(self):
        x = gen_pilots(4, 3).pilots
        np.testing.assert_allclose(x.conj().T @ x, 4 * np.eye(3), atol=1e-12)
        np.testing.assert_allclose(x.T @ x.conj(), 4 * np.eye(3), atol=1e-12)

    def test_unit_modulus(self):
        np.testing.assert_allclose(np.abs(gen_pilots(7, 5).pilots), 1.0)

    def test_too_short(self):
        with pytest.raises(ValueError):
            gen_pilots(2, 3)


class TestRisProfile:
    def test_unit_modulus(self):
        np.testing.assert_allclose(np.abs(gen_ris_profile(1, 100, 6).S), 1.0, atol=1e-12)

    def test_phases_uniform(self):
        S = gen_ris_profile(2, 1000, 100).S
        assert abs(S.mean()) < 4 / np.sqrt(S.size)

    def test_replay_and_prefix(self):
        a = gen_ris_profile(RngStream(3, (1,)), 20, 4).S
        b = gen_ris_profile(RngStream(3, (1,)), 20, 9).S
        np.testing.assert_array_equal(a, gen_ris_profile(RngStream(3, (1,)), 20, 4).S)
        np.testing.assert_array_equal(a, b[:, :4])


@pytest.fixture
def chan():
    return draw_realization(5, ArrayGeometry(4, 3, 2), 2, [2, 3], 1e-2, [3e-2, 1e-2])


@pytest.fixture
def chan1():
    return draw_realization(6, ArrayGeometry(4, 3, 2), 2, [3], 1e-2, [3e-2])


class TestSlot:
    def test_noiseless_single_ue(self, chan1):
        profile = RisProfile(np.ones((6, 1), dtype=complex))
        y = simulate_slot(chan1, profile, gen_pilots(1, 1), 2.0, np.random.default_rng(0), 0.0, 0, 0)
        np.testing.assert_allclose(y, np.sqrt(2.0) * chan1.G @ chan1.f[0], atol=1e-15)

    def test_zero_power_is_noise(self, chan):
        gen = np.random.default_rng(1)
        profile = gen_ris_profile(1, 6, 1)
        pilots = gen_pilots(2, 2)
        y = np.array([simulate_slot(chan, profile, pilots, 0.0, gen, 0.3, 0, 0) for _ in range(10**4)])
        assert np.mean(np.abs(y) ** 2) == pytest.approx(0.3, rel=0.05)

    def test_linear_in_amplitude(self, chan):
        profile = gen_ris_profile(1, 6, 2)
        pilots = gen_pilots(2, 2)
        y1 = simulate_slot(chan, profile, pilots, 1.0, None, 0.0, 1, 1)
        y4 = simulate_slot(chan, profile, pilots, 4.0, None, 0.0, 1, 1)
        np.testing.assert_allclose(y4, 2 * y1, rtol=1e-14)

    def test_bad_index(self, chan):
        with pytest.raises(IndexError):
            simulate_slot(chan, gen_ris_profile(1, 6, 2), gen_pilots(2, 2), 1.0, None, 0.0, 2, 0)


class TestDecorrelate:
    def test_removes_other_users(self, chan):
        profile = gen_ris_profile(2, 6, 1)
        pilots = gen_pilots(2, 2)
        gen = np.random.default_rng(0)
        Yt = np.stack([simulate_slot(chan, profile, pilots, 1.5, gen, 0.0, 0, u) for u in range(2)], 1)
        for k in range(2):
            want = np.sqrt(1.5) * chan.G @ np.diag(chan.f[k]) @ profile.S[:, 0]
            np.testing.assert_allclose(decorrelate(Yt, pilots, k), want, atol=1e-10 * np.linalg.norm(want))

    def test_passthrough(self):
        Yt = np.arange(4, dtype=complex)[:, None]
        np.testing.assert_array_equal(decorrelate(Yt, gen_pilots(1, 1), 0), Yt[:, 0])

    def test_effective_noise_variance(self):
        gen = np.random.default_rng(2)
        pilots = gen_pilots(4, 3)
        out = [decorrelate((gen.standard_normal((8, 4)) + 1j * gen.standard_normal((8, 4))) * np.sqrt(0.5),
                           pilots, 2) for _ in range(5000)]
        assert np.mean(np.abs(np.array(out)) ** 2) == pytest.approx(1 / 4, rel=0.05)


class TestAssemble:
    def test_noiseless_identity(self, chan):
        meas = assemble(chan, gen_ris_profile(3, 6, 5), gen_pilots(3, 2), 0.7, 4, 0.0)
        for k in range(2):
            y = meas.y[k]
            assert np.linalg.norm(y - meas.S_bar @ chan.W[k] @ chan.alpha[k]) <= 1e-10 * np.linalg.norm(y)
            np.testing.assert_allclose(meas.S_c[k], meas.S_bar @ chan.W[k], atol=1e-12)

    def test_noise_variance(self, chan):
        profile, pilots = gen_ris_profile(3, 6, 4), gen_pilots(3, 2)
        resid = []
        for trial in range(300):
            meas = assemble(chan, profile, pilots, 1.0, RngStream(9, (trial,)), 0.6)
            resid.append(meas.y[0] - meas.S_bar @ chan.c[0])
        assert np.mean(np.abs(np.array(resid)) ** 2) == pytest.approx(0.6 / 3, rel=0.10)

    def test_single_block(self, chan):
        profile, pilots = gen_ris_profile(3, 6, 1), gen_pilots(2, 2)
        meas = assemble(chan, profile, pilots, 1.0, 8, 0.0)
        want = chan.G @ np.diag(chan.f[1]) @ profile.S[:, 0]
        np.testing.assert_allclose(meas.y[1], want, atol=1e-12)

    def test_fast_path_equivalence(self, chan):
        profile, pilots = gen_ris_profile(3, 6, 5), gen_pilots(3, 2)
        slow = assemble(chan, profile, pilots, 0.9, RngStream(1, (2,)), 0.4)
        fast = assemble_direct(chan, profile, pilots, 0.9, RngStream(1, (2,)), 0.4)
        for k in range(2):
            assert np.linalg.norm(slow.y[k] - fast.y[k]) <= 1e-10 * np.linalg.norm(slow.y[k])

    def test_sensing_gram_structure(self):
        S = gen_ris_profile(4, 5, 3).S
        S_bar = sensing_matrix(RisProfile(S), 2.5, 4)
        expected = 2.5 * np.kron(S.conj() @ S.T, np.eye(4))
        np.testing.assert_allclose(S_bar.conj().T @ S_bar, expected, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(S_bar @ vec(np.ones((4, 5))), np.sqrt(2.5) * vec(np.ones((4, 5)) @ S))

    def test_subblock_noise_is_white(self, chan):
        profile, pilots = gen_ris_profile(3, 6, 2), gen_pilots(3, 2)
        n_bs, trials = 4, 4000
        first, second = [], []
        for trial in range(trials):
            meas = assemble_direct(chan, profile, pilots, 0.0, RngStream(12, (trial,)), 1.0)
            first.append(meas.y[0][:n_bs])
            second.append(meas.y[0][n_bs:])
        first, second = np.array(first), np.array(second)
        corr = np.mean(first * second.conj(), axis=0) / np.mean(np.abs(first) ** 2)
        assert np.max(np.abs(corr)) < 4 / np.sqrt(trials)

    def test_dimension_mismatch(self, chan):
        with pytest.raises(ValueError):
            assemble(chan, gen_ris_profile(3, 5, 2), gen_pilots(2, 2), 1.0, 0, 0.1)
        with pytest.raises(ValueError):
            assemble_direct(chan, gen_ris_profile(3, 6, 2), gen_pilots(3, 3), 1.0, 0, 0.1)
