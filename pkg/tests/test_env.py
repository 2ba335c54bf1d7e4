from __future__ import annotations

import math

import numpy as np
import pytest

from jamsim.env import (
    Action,
    ChannelModel,
    JammingEnv,
    SenderProfile,
    attack_success,
    capacity_drop,
    compute_sinr,
    individual_reward,
    rayleigh_draws,
    sender_channel,
    success_rate,
    team_reward,
)

UNIT = ChannelModel(bandwidth=1.0)


def rng(seed=0):
    return np.random.default_rng(seed)


class TestSenderChannel:
    def test_sweep_wraps_one_based(self):
        assert sender_channel(SenderProfile("sweep"), 7, 5, rng()) == [3]

    def test_sweep_periodic(self):
        p = SenderProfile("sweep")
        for t in range(40):
            assert sender_channel(p, t, 5, rng()) == sender_channel(p, t + 5, 5, rng())

    def test_pulse(self):
        p = SenderProfile("pulse")
        assert sender_channel(p, 6, 5, rng()) == [5]
        assert [sender_channel(p, t, 5, rng())[0] for t in range(5)] == [5, 5, 5, 1, 1]

    def test_pulse_needs_five_channels(self):
        with pytest.raises(ValueError):
            sender_channel(SenderProfile("pulse"), 0, 4, rng())

    def test_constant_keeps_initial_channel(self):
        p = SenderProfile("constant", initial_channel=4)
        prev = None
        for t in range(20):
            prev = sender_channel(p, t, 5, rng(t), prev)[0]
            assert prev == 4

    def test_constant_random_initial_channel_is_frozen(self):
        p = SenderProfile("constant")
        g = rng(3)
        first = sender_channel(p, 0, 5, g)[0]
        assert all(sender_channel(p, t, 5, g, first) == [first] for t in range(1, 10))

    def test_ar_stays_in_range(self):
        p = SenderProfile("ar")
        g = rng(11)
        prev = None
        for t in range(500):
            (prev,) = sender_channel(p, t, 5, g, prev)
            assert 1 <= prev <= 5

    def test_ar_recurrence_inside_range(self):
        p = SenderProfile("ar")
        # even channel moves up by t mod N, odd channel moves down
        assert sender_channel(p, 1, 5, rng(), previous=2) == [3]
        assert sender_channel(p, 2, 5, rng(), previous=5) == [3]

    def test_ar_boundary_probabilities(self):
        p = SenderProfile("ar")
        g = rng(5)
        # 4 + 3 overshoots above N; 1 - 3 falls below 1
        high = [sender_channel(p, 3, 5, g, previous=4)[0] for _ in range(20000)]
        low = [sender_channel(p, 3, 5, g, previous=1)[0] for _ in range(20000)]
        assert set(high) <= {1, 5} and set(low) <= {1, 5}
        assert abs(np.mean(np.array(high) == 1) - 0.1) < 0.01
        assert abs(np.mean(np.array(low) == 1) - 0.9) < 0.01

    def test_multi_channel_uses_cyclic_neighbours(self):
        p = SenderProfile("sweep", channels_used=2, powers=(5.0, 5.0))
        assert sender_channel(p, 4, 5, rng()) == [5, 1]

    def test_negative_t_rejected(self):
        with pytest.raises(ValueError):
            sender_channel(SenderProfile("sweep"), -1, 5, rng())


class TestSinr:
    def test_single_jammer_same_channel(self):
        sinr, snr = compute_sinr(UNIT, [3], [5.0], [Action(3, 5.0)])
        assert sinr[0] == pytest.approx(5 / 6)
        assert snr[0] == 5.0

    def test_jammer_elsewhere_leaves_channel_clean(self):
        sinr, snr = compute_sinr(UNIT, [3], [5.0], [Action(1, 5.0)])
        assert sinr[0] == snr[0] == 5.0

    def test_two_jammers_add(self):
        sinr, _ = compute_sinr(UNIT, [2], [5.0], [Action(2, 3.0), Action(2, 3.0)])
        assert sinr[0] == pytest.approx(5 / 7)

    def test_rayleigh_needs_draws(self):
        model = ChannelModel(fading="rayleigh")
        with pytest.raises(ValueError):
            compute_sinr(model, [1], [5.0], [Action(1, 1.0)])

    def test_rayleigh_draws_scale_both_links(self):
        model = ChannelModel(fading="rayleigh")
        sinr, snr = compute_sinr(model, [1], [5.0], [Action(1, 5.0)], np.array([0.5, 2.0]))
        assert snr[0] == pytest.approx(2.5)
        assert sinr[0] == pytest.approx(2.5 / (1 + 10.0))

    def test_rayleigh_second_moment(self):
        g = rng(1)
        model = ChannelModel(fading="rayleigh")
        draws = np.concatenate([rayleigh_draws(model, 9, g) for _ in range(10_000)])
        assert abs(np.mean(draws**2) - 1.0) < 0.02

    def test_per_transmitter_gains(self):
        model = ChannelModel(gain_adversary=(1.0, 0.5))
        sinr, _ = compute_sinr(model, [1], [5.0], [Action(1, 2.0), Action(1, 2.0)])
        assert sinr[0] == pytest.approx(5 / (1 + 2 + 1))

    def test_non_positive_noise_rejected(self):
        with pytest.raises(ValueError):
            ChannelModel(noise=0.0)


class TestSuccess:
    @pytest.mark.parametrize("sinr,snr,tau,expected", [
        ([5 / 6], [5.0], 0.5, 1),
        ([5.0], [5.0], 0.5, 0),
        ([1.25], [5.0], 0.2, 0),
    ])
    def test_attack_success(self, sinr, snr, tau, expected):
        assert attack_success(sinr, snr, tau) == expected

    def test_multi_channel_uses_sums(self):
        assert attack_success([0.5, 4.0], [5.0, 5.0], 0.5) == 1
        assert attack_success([0.5, 5.0], [5.0, 5.0], 0.5) == 0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            attack_success([1.0], [1.0, 2.0], 0.5)

    @pytest.mark.parametrize("tau", [0.0, 1.0, 1.5])
    def test_tau_range(self, tau):
        with pytest.raises(ValueError):
            attack_success([1.0], [5.0], tau)

    @pytest.mark.parametrize("flags,rate", [([1, 0, 1, 1], 0.75), ([0, 0, 0], 0.0), ([1, 1], 1.0)])
    def test_success_rate(self, flags, rate):
        assert success_rate(flags) == rate

    def test_empty_success_rate(self):
        with pytest.raises(ValueError):
            success_rate([])


class TestRewards:
    def test_team_reward_one_jammer(self):
        assert team_reward(UNIT, [5 / 6], [5.0], [5.0]) == pytest.approx(-3.2895, abs=1e-4)

    def test_team_reward_two_jammers(self):
        assert team_reward(UNIT, [5 / 7], [5.0], [3.0, 3.0]) == pytest.approx(-4.1926, abs=1e-4)

    def test_no_jamming_is_free(self):
        assert team_reward(UNIT, [5.0], [5.0], [0.0, 0.0]) == 0.0
        assert individual_reward(UNIT, [5.0], [5.0], 0.0) == 0.0

    def test_individual_reward(self):
        drop = capacity_drop(UNIT, [5 / 7], [5.0])
        assert drop == pytest.approx(1.8074, abs=1e-4)
        assert individual_reward(UNIT, [5 / 7], [5.0], 3.0) == pytest.approx(-1.1926, abs=1e-4)
        assert individual_reward(UNIT, [5 / 6], [5.0], 5.0) == pytest.approx(-3.2895, abs=1e-4)

    def test_bandwidth_scales_the_capacity_term(self):
        wide = ChannelModel(bandwidth=20.0)
        drop = math.log2(6) - math.log2(1 + 5 / 6)
        assert team_reward(wide, [5 / 6], [5.0], [5.0]) == pytest.approx(20 * drop - 5)


class TestJammingEnv:
    def make(self, **kw):
        sender = SenderProfile("constant", initial_channel=3)
        return JammingEnv(UNIT, sender, kw.pop("m", 1), (0.2, 0.5), rng(0))

    def test_on_channel_full_power_succeeds(self):
        out = self.make().step([Action(3, 5.0)], 0)
        assert out.sa[0.5] == 1
        assert out.sender_channels == [3]
        np.testing.assert_array_equal(out.observation_next, out.sinr)

    def test_off_channel_costs_power(self):
        out = self.make().step([Action(1, 5.0)], 0)
        assert out.sa[0.5] == 0
        assert out.individual_rewards[0] == pytest.approx(-5.0)

    def test_action_count_checked(self):
        with pytest.raises(ValueError):
            self.make(m=2).step([Action(1, 1.0)], 0)

    @pytest.mark.parametrize("action", [Action(0, 1.0), Action(6, 1.0), Action(1, -1.0)])
    def test_invalid_action(self, action):
        with pytest.raises(ValueError):
            self.make().step([action], 0)

    def test_step_matches_compute_sinr(self):
        env = self.make(m=2)
        acts = [Action(3, 1.0), Action(3, 3.0)]
        out = env.step(acts, 0)
        sinr, snr = compute_sinr(UNIT, [3], [5.0], acts)
        np.testing.assert_array_equal(out.sinr, sinr)
        np.testing.assert_array_equal(out.snr, snr)
        assert out.team_reward == pytest.approx(team_reward(UNIT, sinr, snr, [1.0, 3.0]))

    def test_determinism(self):
        def trace(seed):
            env = JammingEnv(ChannelModel(fading="rayleigh"), SenderProfile("ar"), 2, (0.5,), rng(seed))
            g = rng(99)
            out = []
            for t in range(200):
                acts = [Action(int(g.integers(1, 6)), float(g.choice([0, 1, 3, 5]))) for _ in range(2)]
                o = env.step(acts, t)
                out.append((o.sender_channels, o.sinr.tolist(), o.team_reward))
            return out

        assert trace(4) == trace(4)
        assert trace(4) != trace(5)
