"""Experiment files: JSON schema, validation and expansion into scenario grids.

An experiment file has four blocks::

    {
      "channel": {...},   # channel model plus the adversary power set
      "sender":  {...},   # one sender block, or a list of them
      "agents":  [...],   # adversary roster, one AgentConfig block each
      "run":     {...}    # horizon, trials, seeds, taus, windows
    }

Every sender block may name one strategy or a list of strategies; the grid
is (sender block x strategy) x agents.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import jsonschema

from .agents import AgentConfig
from .dqn import DqnParams
from .env import ChannelModel, SenderProfile
from .experiment import ScenarioConfig, SraWindow


class ConfigError(ValueError):
    """Invalid experiment file; ``path`` locates the offending value."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


_pos = {"type": "number", "exclusiveMinimum": 0}
_prob = {"type": "number", "minimum": 0, "maximum": 1}
_open_unit = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
_strategy = {"enum": ["constant", "sweep", "pulse", "ar"]}


def _obj(props: dict, required: tuple[str, ...] = ()) -> dict:
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


DQN_SCHEMA = _obj({
    "hidden_sizes": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
    "learning_rate": _pos,
    "batch_size": {"type": "integer", "minimum": 1},
    "buffer_capacity": {"type": "integer", "minimum": 1},
    "per_alpha": {"type": "number", "minimum": 0},
    "per_beta0": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
    "per_eps": _pos,
    "updates_per_step": {"type": "integer", "minimum": 1},
    "bias_init": {"enum": ["zero", "uniform"]},
})

AGENT_SCHEMA = _obj({
    "kind": {"enum": ["random", "greedy", "ssrl", "msrl", "maas"]},
    "name": {"type": "string", "minLength": 1},
    "epsilon0": _prob,
    "decay": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
    "target_shift": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
    "gamma": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
    "m_agents": {"type": "integer", "minimum": 1},
    "x_channels": {"type": "integer", "minimum": 1},
    "normalize_obs": {"type": "boolean"},
    "normalize_reward": {"type": "boolean"},
    "dqn": DQN_SCHEMA,
}, required=("kind",))

SENDER_SCHEMA = _obj({
    "strategy": {"oneOf": [_strategy, {"type": "array", "items": _strategy, "minItems": 1}]},
    "channels_used": {"type": "integer", "minimum": 1},
    "powers": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
    "initial_channel": {"oneOf": [{"type": "integer", "minimum": 1}, {"const": "uniform-random"}]},
    "ar_params": _obj({"p_high_boundary": _prob, "p_low_boundary": _prob}),
}, required=("strategy",))

SCHEMA = _obj({
    "channel": _obj({
        "n_channels": {"type": "integer", "minimum": 1},
        "noise": _pos,
        "gains": _obj({
            "sender": _pos,
            "adversary": {"oneOf": [_pos, {"type": "array", "items": _pos, "minItems": 1}]},
        }),
        "bandwidth": _pos,
        "power_cost": {"type": "number", "minimum": 0},
        "fading": {"enum": ["constant", "rayleigh"]},
        "rayleigh_scale": _pos,
        "adversary_powers": {"type": "array", "items": {"type": "number", "minimum": 0},
                             "minItems": 1},
    }),
    "sender": {"oneOf": [SENDER_SCHEMA, {"type": "array", "items": SENDER_SCHEMA, "minItems": 1}]},
    "agents": {"type": "array", "items": AGENT_SCHEMA, "minItems": 1},
    "run": _obj({
        "horizon": {"type": "integer", "minimum": 1},
        "n_trials": {"type": "integer", "minimum": 1},
        "base_seed": {"type": "integer", "minimum": 0},
        "taus": {"type": "array", "items": _open_unit, "minItems": 1},
        "sra_window": _obj({
            "final_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "start": {"type": "integer", "minimum": 0},
            "stop": {"type": "integer", "minimum": 1},
        }),
        "smoothing": {"type": "integer", "minimum": 1},
        "action_cap": {"type": "integer", "minimum": 1},
    }),
    "trial_seeds": {"type": "object"},
}, required=("sender", "agents"))

DEFAULT_CHANNEL = {
    "n_channels": 5,
    "noise": 1.0,
    "gains": {"sender": 1.0, "adversary": 1.0},
    "bandwidth": 40.0,
    "power_cost": 1.0,
    "fading": "constant",
    "adversary_powers": [0.0, 1.0, 3.0, 5.0],
}
DEFAULT_SENDER = {
    "channels_used": 1,
    "powers": [5.0],
    "initial_channel": "uniform-random",
    "ar_params": {"p_high_boundary": 0.1, "p_low_boundary": 0.9},
}
DEFAULT_AGENT = {
    "epsilon0": 1.0,
    "decay": 0.996,
    "target_shift": 0.01,
    "gamma": 0.0,
    "m_agents": 2,
    "x_channels": 2,
    "normalize_obs": False,
    "normalize_reward": False,
    "dqn": {
        "hidden_sizes": [256, 256],
        "learning_rate": 1e-4,
        "batch_size": 32,
        "buffer_capacity": 2000,
        "per_alpha": 0.6,
        "per_beta0": 0.4,
        "per_eps": 1e-6,
        "updates_per_step": 1,
        "bias_init": "zero",
    },
}
DEFAULT_RUN = {
    "horizon": 2000,
    "n_trials": 8,
    "base_seed": 0,
    "taus": [0.2, 0.5],
    "sra_window": {"final_fraction": 1.0},
    "smoothing": 50,
    "action_cap": 1_000_000,
}


def _path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


def _merge(defaults: dict, given: dict) -> dict:
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def validate(doc: Any) -> None:
    """Schema check; raises :class:`ConfigError` naming the first bad path."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    err = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if err is not None:
        raise ConfigError(_path(err.absolute_path), err.message)


def resolve(doc: dict) -> dict:
    """Validate and fill every default, giving a self-contained document."""
    validate(doc)
    senders = doc["sender"] if isinstance(doc["sender"], list) else [doc["sender"]]
    resolved = {
        "channel": _merge(DEFAULT_CHANNEL, doc.get("channel", {})),
        "sender": [_merge(DEFAULT_SENDER, s) for s in senders],
        "agents": [_merge(DEFAULT_AGENT, a) for a in doc["agents"]],
        "run": _merge(DEFAULT_RUN, doc.get("run", {})),
    }
    given = doc.get("run", {}).get("sra_window", {})
    if {"start", "stop"} & given.keys():
        if "final_fraction" in given:
            raise ConfigError("run.sra_window", "give either final_fraction or start/stop, not both")
        resolved["run"]["sra_window"] = {k: given[k] for k in ("start", "stop") if k in given}
    else:
        resolved["run"]["sra_window"] = {"final_fraction": given.get("final_fraction", 1.0)}
    validate(resolved)
    _check_semantics(resolved)
    return resolved


def _check_semantics(doc: dict) -> None:
    ch = doc["channel"]
    powers = ch["adversary_powers"]
    if any(b <= a for a, b in zip(powers, powers[1:])):
        raise ConfigError("channel.adversary_powers", "must be strictly increasing")
    labels = set()
    for i, a in enumerate(doc["agents"]):
        label = a.get("name", a["kind"])
        if label in labels:
            raise ConfigError(f"agents[{i}].name", f"duplicate agent label {label!r}")
        labels.add(label)
        if a["dqn"]["batch_size"] > a["dqn"]["buffer_capacity"]:
            raise ConfigError(f"agents[{i}].dqn.batch_size", "exceeds buffer_capacity")
    for i, s in enumerate(doc["sender"]):
        if len(s["powers"]) != s["channels_used"]:
            raise ConfigError(f"sender[{i}].powers", "need one power per used channel")
        if s["channels_used"] > ch["n_channels"]:
            raise ConfigError(f"sender[{i}].channels_used", "exceeds n_channels")
        strategies = s["strategy"] if isinstance(s["strategy"], list) else [s["strategy"]]
        if "pulse" in strategies and ch["n_channels"] < 5:
            raise ConfigError(f"sender[{i}].strategy", "pulse needs at least 5 channels")
        init = s["initial_channel"]
        if isinstance(init, int) and init > ch["n_channels"]:
            raise ConfigError(f"sender[{i}].initial_channel", "outside the channel range")
    win = doc["run"]["sra_window"]
    rows = doc["run"]["horizon"] + 1
    if "start" in win or "stop" in win:
        lo, hi = win.get("start", 0), win.get("stop", rows)
        if not 0 <= lo < hi <= rows:
            raise ConfigError("run.sra_window", f"[{lo}, {hi}) is empty or beyond {rows} logged steps")


@dataclass(frozen=True)
class Grid:
    document: dict
    scenarios: list[ScenarioConfig]


def build_grid(doc: dict, seed: int | None = None, trials: int | None = None) -> Grid:
    """Expand a document into one :class:`ScenarioConfig` per (scenario, agent)."""
    doc = copy.deepcopy(doc)
    if seed is not None:
        doc.setdefault("run", {})["base_seed"] = seed
    if trials is not None:
        doc.setdefault("run", {})["n_trials"] = trials
    doc.pop("trial_seeds", None)
    res = resolve(doc)
    ch, run = res["channel"], res["run"]
    adv_gain = ch["gains"]["adversary"]
    model_kw = dict(
        n_channels=ch["n_channels"], noise=ch["noise"], gain_sender=ch["gains"]["sender"],
        gain_adversary=tuple(adv_gain) if isinstance(adv_gain, list) else (adv_gain,),
        bandwidth=ch["bandwidth"], power_cost=ch["power_cost"], fading=ch["fading"],
    )
    if "rayleigh_scale" in ch:
        model_kw["rayleigh_scale"] = ch["rayleigh_scale"]
    model = ChannelModel(**model_kw)
    window = SraWindow(**run["sra_window"]) if "final_fraction" in run["sra_window"] else \
        SraWindow(final_fraction=None, **run["sra_window"])

    scenarios = []
    for s in res["sender"]:
        strategies = s["strategy"] if isinstance(s["strategy"], list) else [s["strategy"]]
        for strat in strategies:
            init = s["initial_channel"]
            sender = SenderProfile(
                strategy=strat, channels_used=s["channels_used"], powers=tuple(s["powers"]),
                p_high_boundary=s["ar_params"]["p_high_boundary"],
                p_low_boundary=s["ar_params"]["p_low_boundary"],
                initial_channel=None if init == "uniform-random" else init,
            )
            for a in res["agents"]:
                agent = AgentConfig(
                    kind=a["kind"], epsilon0=a["epsilon0"], decay=a["decay"],
                    target_shift=a["target_shift"], gamma=a["gamma"],
                    dqn=DqnParams(**{**a["dqn"], "hidden_sizes": tuple(a["dqn"]["hidden_sizes"])}),
                    m_agents=a["m_agents"], x_channels=a["x_channels"],
                    normalize_obs=a["normalize_obs"], normalize_reward=a["normalize_reward"],
                    name=a.get("name"),
                )
                scenarios.append(ScenarioConfig(
                    sender=sender, channel_model=model, adversary=agent,
                    adversary_powers=tuple(float(p) for p in ch["adversary_powers"]),
                    horizon=run["horizon"], taus=tuple(run["taus"]), n_trials=run["n_trials"],
                    base_seed=run["base_seed"], sra_window=window, smoothing=run["smoothing"],
                    action_cap=run["action_cap"],
                ))
    keys = [(c.scenario, c.adversary.label) for c in scenarios]
    if len(set(keys)) != len(keys):
        raise ConfigError("sender", "two sender blocks produce the same scenario name")
    return Grid(res, scenarios)


def load(path: str | Path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{path} is not valid JSON: {exc}") from exc


def manifest(grid: Grid) -> dict:
    """Resolved document plus the per-scenario trial seeds (re-loadable as a config)."""
    doc = copy.deepcopy(grid.document)
    doc["trial_seeds"] = {
        f"{c.scenario}/{c.adversary.label}": [c.trial_seed(i) for i in range(c.n_trials)]
        for c in grid.scenarios
    }
    return doc
