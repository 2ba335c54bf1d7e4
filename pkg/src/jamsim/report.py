"""Figures written next to the CSV reports (Agg backend, PNG)."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiment import SraSummary  # noqa: E402

AGENT_ORDER = ["random", "greedy", "ssrl", "msrl", "maas"]
AGENT_LABELS = {"random": "Random", "greedy": "Greedy", "ssrl": "SSRL", "msrl": "MSRL",
                "maas": "MAAS"}

STYLE = {
    "figure.figsize": (6.4, 3.6),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "font.size": 9,
    "savefig.dpi": 150,
}


def _order(labels):
    known = [a for a in AGENT_ORDER if a in labels]
    return known + sorted(set(labels) - set(known))


def plot_reward_curves(curves: Mapping[tuple[str, str], np.ndarray], out_dir: Path) -> list[Path]:
    """One figure per scenario with the smoothed team reward of every adversary."""
    by_scenario: dict[str, dict[str, np.ndarray]] = defaultdict(dict)
    for (scenario, agent), curve in curves.items():
        by_scenario[scenario][agent] = curve
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    with plt.rc_context(STYLE):
        for scenario in sorted(by_scenario):
            fig, ax = plt.subplots()
            for agent in _order(by_scenario[scenario]):
                curve = by_scenario[scenario][agent]
                ax.plot(np.arange(len(curve)), curve, lw=1.2, label=AGENT_LABELS.get(agent, agent))
            ax.set_xlabel("time step")
            ax.set_ylabel("team reward (smoothed)")
            ax.set_title(scenario.replace("_", ", "))
            ax.legend(loc="lower right", ncol=2)
            path = out_dir / f"rewards_{scenario}.png"
            fig.savefig(path, bbox_inches="tight", metadata={"Software": None})
            plt.close(fig)
            paths.append(path)
    return paths


def plot_sra_bars(rows: Sequence[SraSummary], out_dir: Path) -> list[Path]:
    """Grouped bars of mean SRA (with trial std) per scenario, one group per tau."""
    by_scenario: dict[str, list[SraSummary]] = defaultdict(list)
    for r in rows:
        by_scenario[r.scenario].append(r)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    with plt.rc_context(STYLE):
        for scenario in sorted(by_scenario):
            cells = by_scenario[scenario]
            agents = _order({c.agent for c in cells})
            taus = sorted({c.tau for c in cells})
            width = 0.8 / max(len(taus), 1)
            fig, ax = plt.subplots()
            x = np.arange(len(agents))
            for k, tau in enumerate(taus):
                lookup = {c.agent: c for c in cells if c.tau == tau}
                means = [100 * lookup[a].mean if a in lookup else np.nan for a in agents]
                stds = [100 * lookup[a].std if a in lookup else 0.0 for a in agents]
                ax.bar(x + (k - (len(taus) - 1) / 2) * width, means, width, yerr=stds,
                       capsize=2, label=f"tau = {tau:g}")
            ax.set_xticks(x, [AGENT_LABELS.get(a, a) for a in agents])
            ax.set_ylim(0, 100)
            ax.set_ylabel("success rate of attack (%)")
            ax.set_title(scenario.replace("_", ", "))
            ax.legend(loc="upper left")
            path = out_dir / f"sra_{scenario}.png"
            fig.savefig(path, bbox_inches="tight", metadata={"Software": None})
            plt.close(fig)
            paths.append(path)
    return paths
