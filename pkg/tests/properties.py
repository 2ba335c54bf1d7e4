"""Property checks shared by the unit suite and the acceptance report.

Each check returns ``(ok, detail)`` so the acceptance module can print a
single line per check while the unit tests simply assert ``ok``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

from jamsim.dqn import Experience, QNetwork, ReplayMemory, batch_loss, soft_update
from jamsim.env import Action, ChannelModel, JammingEnv, SenderProfile, compute_sinr
from jamsim.stats import paired_t_test


def gradient_check(seed: int = 0, h: float = 1e-5) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    net = QNetwork.init(2, (8,), 3, rng)
    for b in net.params[1::2]:
        b[...] = rng.normal(scale=0.1, size=b.shape)
    states = rng.normal(size=(16, 2))
    actions = rng.integers(0, 3, size=16)
    targets = rng.normal(size=16)
    weights = rng.uniform(0.2, 1.0, size=16)
    _, _, grads = batch_loss(net, states, actions, targets, weights)

    worst = 0.0
    for p, g in zip(net.params, grads):
        numeric = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            keep = p[idx]
            p[idx] = keep + h
            up = batch_loss(net, states, actions, targets, weights)[0]
            p[idx] = keep - h
            down = batch_loss(net, states, actions, targets, weights)[0]
            p[idx] = keep
            numeric[idx] = (up - down) / (2 * h)
        denom = max(np.linalg.norm(g) + np.linalg.norm(numeric), 1e-12)
        worst = max(worst, float(np.linalg.norm(g - numeric) / denom))
    return worst < 1e-4, f"max relative error {worst:.2e} on a 2-8-3 net"


def _memory(priorities) -> ReplayMemory:
    mem = ReplayMemory(len(priorities), 1)
    for i in range(len(priorities)):
        mem.add(Experience(np.zeros(1), 0, 0.0, np.zeros(1)))
    mem.priorities[: len(priorities)] = priorities
    return mem


def per_sampling_check(draws: int = 100_000, seed: int = 0) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    notes = []
    ok = True
    for priorities, alpha, exact in (([1.0, 2.0, 4.0], 0.6, None), ([1.0, 1.0, 2.0], 1.0, [0.25, 0.25, 0.5])):
        mem = _memory(priorities)
        p = np.asarray(priorities) ** alpha
        p /= p.sum()
        if exact is not None:
            ok &= bool(np.allclose(mem.probabilities(alpha), exact, rtol=0, atol=1e-15))
        idx = np.concatenate([mem.sample(1, alpha, 1.0, rng)[0] for _ in range(draws)])
        counts = np.bincount(idx, minlength=len(p))
        sigma = np.sqrt(draws * p * (1 - p))
        z = np.abs(counts - draws * p) / sigma
        chi2 = float(np.sum((counts - draws * p) ** 2 / (draws * p)))
        pval = float(stats.chi2.sf(chi2, len(p) - 1))
        ok &= bool(np.all(z < 3.0)) and pval > 1e-3
        notes.append(f"{priorities} a={alpha}: max |z|={z.max():.2f}, chi2 p={pval:.3f}")
    return ok, "; ".join(notes)


def reward_identity_check(steps: int = 1000, seed: int = 0) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(steps):
        m = int(rng.integers(1, 5))
        used = int(rng.integers(1, 3))
        model = ChannelModel(bandwidth=float(rng.uniform(0.5, 40)), power_cost=float(rng.uniform(0, 2)),
                             fading=rng.choice(["constant", "rayleigh"]))
        sender = SenderProfile(rng.choice(["constant", "sweep", "pulse", "ar"]), channels_used=used,
                               powers=tuple(rng.uniform(0.5, 8, size=used)))
        env = JammingEnv(model, sender, m, (0.5,), rng)
        actions = [Action(int(rng.integers(1, 6)), float(rng.choice([0, 1, 3, 5]))) for _ in range(m)]
        out = env.step(actions, int(rng.integers(0, 50)))
        drop = model.bandwidth * float(np.sum(np.log2(1 + out.snr) - np.log2(1 + out.sinr)))
        lhs = float(np.sum(out.individual_rewards))
        rhs = out.team_reward + (m - 1) * drop
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
    return worst < 1e-12, f"max relative deviation {worst:.1e} over {steps} steps"


def sinr_check(configs: int = 10_000, seed: int = 0) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    n = 5
    failures = 0
    for _ in range(configs):
        m = int(rng.integers(1, 5))
        used = int(rng.integers(1, 4))
        model = ChannelModel(noise=float(rng.uniform(0.1, 3)), gain_sender=float(rng.uniform(0.1, 2)),
                             gain_adversary=(float(rng.uniform(0.1, 2)),))
        start = int(rng.integers(1, n + 1))
        channels = [(start - 1 + k) % n + 1 for k in range(used)]
        powers = rng.uniform(0.1, 10, size=used)
        acts = [Action(int(rng.integers(1, n + 1)), float(rng.choice([0.0, rng.uniform(0, 10)])))
                for _ in range(m)]
        sinr, snr = compute_sinr(model, channels, powers, acts)
        hit = np.array([any(a.channel == c and a.power > 0 for a in acts) for c in channels])
        bounded = np.all(sinr >= 0) and np.all(sinr <= snr)
        equality = np.array_equal(sinr == snr, ~hit)

        j = int(rng.integers(m))
        louder = list(acts)
        louder[j] = Action(acts[j].channel, acts[j].power + float(rng.uniform(0.01, 5)))
        sinr2, _ = compute_sinr(model, channels, powers, louder)
        same = np.array([c == acts[j].channel for c in channels])
        monotone = np.all(sinr2[same] < sinr[same]) and np.array_equal(sinr2[~same], sinr[~same])
        failures += not (bounded and equality and monotone)
    return failures == 0, f"{failures} violations in {configs} random configurations"


def soft_update_check(seed: int = 0) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    ok = True
    for alpha in (0.01, 0.3, 0.77, 1.0):
        actor = QNetwork.init(3, (5, 4), 2, rng)
        target = QNetwork.init(3, (5, 4), 2, rng)
        expected = [(1.0 - alpha) * t + alpha * a for t, a in zip(target.params, actor.params)]
        if alpha == 1.0:
            expected = [a.copy() for a in actor.params]
        soft_update(target, actor, alpha)
        ok &= all(np.array_equal(x, y) for x, y in zip(target.params, expected))
    return ok, "target equals alpha*actor + (1-alpha)*target elementwise for 4 alphas"


def t_test_check() -> tuple[bool, str]:
    ref = paired_t_test([1.0, 2.0, 3.0], [0.0, 0.0, 0.0])
    same = paired_t_test([0.5, 0.7, 0.9], [0.5, 0.7, 0.9])
    a, b = [0.91, 0.88, 0.95, 0.97, 0.90], [0.89, 0.90, 0.90, 0.92, 0.93]
    ab, ba = paired_t_test(a, b), paired_t_test(b, a)
    ok = (math.isclose(ref.t, 2 * math.sqrt(3), rel_tol=1e-12) and ref.df == 2
          and abs(ref.p - 0.0742) < 5e-5
          and same.t == 0.0 and same.p == 1.0
          and math.isclose(ba.t, -ab.t) and math.isclose(ba.p, ab.p))
    return ok, f"d=[1,2,3]: t={ref.t:.4f} df={ref.df} p={ref.p:.4f}; a=b: p={same.p}; swap: t {ab.t:.3f}/{ba.t:.3f}"


ALL = {
    "gradient vs finite differences": gradient_check,
    "PER sampling frequencies": per_sampling_check,
    "reward aggregation identity": reward_identity_check,
    "SINR bounds and monotonicity": sinr_check,
    "soft-update convex combination": soft_update_check,
    "paired t-test reference values": t_test_check,
}
