"""Synthetic event-driven transmission patterns.

Uncoupled devices transmit independently with probability ``p`` on each of
their active slots. A coupled device copies its source's realized pattern
shifted right by ``shift`` slots with probability ``q`` per event and is
silent otherwise.

Randomness for event ``e`` comes from a Philox4x64-10 counter-based
generator keyed by the seed with counter word 1 set to ``e``, so any event
can be regenerated on its own and the output does not depend on the order
in which events are produced.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .types import ConfigError, EventDataset

GENERATOR_NAME = "numpy Philox4x64-10, key=seed, counter=(0, event_index, 0, 0)"

PAPER_SLOTS = 12
PAPER_X_SLOTS = (1, 2, 3, 4, 7, 8, 9)
PAPER_Y_SLOTS = (4, 5, 6, 8, 9, 10, 11)
DEFAULT_ACTIVITY_PROB = 0.5


@dataclass(frozen=True)
class Coupling:
    source_device_id: str
    shift: int
    trigger_prob: float


@dataclass(frozen=True)
class DeviceProfile:
    device_id: str
    active_slots: frozenset[int] = frozenset()
    per_slot_activity_prob: float = DEFAULT_ACTIVITY_PROB
    coupling: Coupling | None = None

    def __post_init__(self):
        object.__setattr__(self, "active_slots", frozenset(int(s) for s in self.active_slots))


@dataclass(frozen=True)
class GeneratorConfig:
    slots_per_event: int
    num_events: int
    profiles: tuple[DeviceProfile, ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))

    def to_dict(self) -> dict:
        d = asdict(self)
        for p in d["profiles"]:
            p["active_slots"] = sorted(p["active_slots"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        try:
            profiles = []
            for p in d["profiles"]:
                c = p.get("coupling")
                profiles.append(
                    DeviceProfile(
                        device_id=str(p["device_id"]),
                        active_slots=frozenset(p.get("active_slots", ())),
                        per_slot_activity_prob=float(
                            p.get("per_slot_activity_prob", DEFAULT_ACTIVITY_PROB)
                        ),
                        coupling=None
                        if c is None
                        else Coupling(str(c["source_device_id"]), int(c["shift"]), float(c["trigger_prob"])),
                    )
                )
            return cls(int(d["slots_per_event"]), int(d["num_events"]), tuple(profiles), int(d.get("seed", 0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid generator config: {exc}") from exc


def generation_order(config: GeneratorConfig) -> list[int]:
    """Validate ``config`` and return profile indices with sources before dependents."""
    L = config.slots_per_event
    if L < 2:
        raise ConfigError("slots_per_event must be at least 2")
    if config.num_events < 1:
        raise ConfigError("num_events must be at least 1")
    if not 0 <= config.seed < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    ids = [p.device_id for p in config.profiles]
    if len(set(ids)) != len(ids):
        raise ConfigError("duplicate device ids")
    pos = {d: n for n, d in enumerate(ids)}
    for p in config.profiles:
        c = p.coupling
        if c is None:
            if not p.active_slots <= set(range(1, L + 1)):
                raise ConfigError(f"{p.device_id}: active slots outside 1..{L}")
            if not 0 < p.per_slot_activity_prob <= 1:
                raise ConfigError(f"{p.device_id}: activity probability must be in (0, 1]")
        else:
            if c.source_device_id not in pos:
                raise ConfigError(f"{p.device_id}: unknown coupling source {c.source_device_id!r}")
            if not 0 <= c.shift < L:
                raise ConfigError(f"{p.device_id}: shift must be in 0..{L - 1}")
            if not 0 <= c.trigger_prob <= 1:
                raise ConfigError(f"{p.device_id}: trigger probability must be in [0, 1]")

    order: list[int] = []
    state = {}  # 1 = visiting, 2 = done

    def visit(n, path):
        if state.get(n) == 2:
            return
        if state.get(n) == 1:
            raise ConfigError("cyclic coupling: " + " -> ".join(path + [ids[n]]))
        state[n] = 1
        c = config.profiles[n].coupling
        if c is not None:
            visit(pos[c.source_device_id], path + [ids[n]])
        state[n] = 2
        order.append(n)

    for n in range(len(ids)):
        visit(n, [])
    return order


def _event_rng(seed: int, event: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, event, 0, 0]))


def generate_event(config: GeneratorConfig, event: int, order: Sequence[int] | None = None) -> np.ndarray:
    """``(M, L)`` bits for one event; depends only on (seed, event)."""
    if order is None:
        order = generation_order(config)
    L = config.slots_per_event
    M = len(config.profiles)
    rng = _event_rng(config.seed, event)
    # Fixed draw layout: one uniform per (profile, slot), then one per profile.
    slot_u = rng.random((M, L))
    coupling_u = rng.random(M)
    pos = {p.device_id: n for n, p in enumerate(config.profiles)}
    out = np.zeros((M, L), dtype=np.uint8)
    for n in order:
        prof = config.profiles[n]
        if prof.coupling is None:
            active = np.zeros(L, dtype=bool)
            active[[s - 1 for s in prof.active_slots]] = True
            out[n] = active & (slot_u[n] < prof.per_slot_activity_prob)
        elif coupling_u[n] < prof.coupling.trigger_prob:
            src = out[pos[prof.coupling.source_device_id]]
            s = prof.coupling.shift
            out[n, s:] = src[: L - s]
    return out


def generate(config: GeneratorConfig) -> EventDataset:
    order = generation_order(config)
    cube = np.stack([generate_event(config, e, order) for e in range(config.num_events)], axis=1)
    return EventDataset.from_array([p.device_id for p in config.profiles], cube)


def paper_scenario_config(
    num_events: int, seed: int = 0, activity_prob: float = DEFAULT_ACTIVITY_PROB
) -> GeneratorConfig:
    """Four devices X, Y, Z, T over 12-slot events.

    X and Y transmit with probability ``activity_prob`` on their active
    slots; Z copies X three slots later in 80% of events and T copies X two
    slots later in 20% of events.
    """
    if num_events < 1:
        raise ConfigError("num_events must be at least 1")
    profiles = (
        DeviceProfile("X", frozenset(PAPER_X_SLOTS), activity_prob),
        DeviceProfile("Y", frozenset(PAPER_Y_SLOTS), activity_prob),
        DeviceProfile("Z", coupling=Coupling("X", 3, 0.8)),
        DeviceProfile("T", coupling=Coupling("X", 2, 0.2)),
    )
    return GeneratorConfig(PAPER_SLOTS, num_events, profiles, seed)

