"""Channel and eavesdropper models for photons in transit."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .qstate import MeasurementBasis, RegisterBlock, RngStream


class ChannelKind(str, enum.Enum):
    IDEAL = "ideal"
    INTERCEPT_RESEND = "intercept-resend"
    DEPOLARIZING = "depolarizing"


class EveStrategy(str, enum.Enum):
    ALWAYS_Z = "z"
    ALWAYS_X = "x"
    RANDOM_ZX = "zx"


@dataclass(frozen=True)
class ChannelModel:
    """What happens to a photon on each quantum link.

    ``links`` restricts the model to the listed link indices; ``None`` means
    every link. Links the model does not apply to behave ideally.
    """

    kind: ChannelKind = ChannelKind.IDEAL
    strategy: EveStrategy | None = None
    noise_prob: float = 0.0
    links: frozenset[int] | None = None

    def __post_init__(self):
        if not 0.0 <= self.noise_prob <= 1.0:
            raise ValueError(f"noise_prob must be in [0, 1], got {self.noise_prob}")
        if self.kind is ChannelKind.INTERCEPT_RESEND and self.strategy is None:
            raise ValueError("intercept-resend needs a strategy")
        if self.links is not None:
            object.__setattr__(self, "links", frozenset(int(x) for x in self.links))

    @classmethod
    def ideal(cls) -> ChannelModel:
        return cls()

    @classmethod
    def intercept_resend(cls, strategy: EveStrategy | str = EveStrategy.RANDOM_ZX,
                         links: Iterable[int] | None = None) -> ChannelModel:
        return cls(ChannelKind.INTERCEPT_RESEND, EveStrategy(strategy),
                   links=None if links is None else frozenset(links))

    @classmethod
    def depolarizing(cls, noise_prob: float, links: Iterable[int] | None = None) -> ChannelModel:
        return cls(ChannelKind.DEPOLARIZING, noise_prob=float(noise_prob),
                   links=None if links is None else frozenset(links))

    @classmethod
    def parse(cls, text: str, links: Iterable[int] | None = None) -> ChannelModel:
        """Parse the CLI form ``none | ir-z | ir-x | ir-zx | depol:<eta>``."""
        t = text.strip().lower()
        if t in ("none", "ideal"):
            return cls.ideal()
        if t.startswith("ir-"):
            try:
                return cls.intercept_resend(EveStrategy(t[3:]), links)
            except ValueError:
                raise ValueError(f"unknown intercept-resend strategy in {text!r}") from None
        if t.startswith("depol:"):
            try:
                eta = float(t[6:])
            except ValueError:
                raise ValueError(f"bad noise probability in {text!r}") from None
            return cls.depolarizing(eta, links)
        raise ValueError(f"unknown attack {text!r}; expected none, ir-z, ir-x, ir-zx or depol:<eta>")

    @property
    def token(self) -> str:
        if self.kind is ChannelKind.IDEAL:
            return "none"
        if self.kind is ChannelKind.INTERCEPT_RESEND:
            return f"ir-{self.strategy.value}"
        return f"depol:{self.noise_prob:g}"

    @property
    def is_ideal(self) -> bool:
        return self.kind is ChannelKind.IDEAL or (
            self.kind is ChannelKind.DEPOLARIZING and self.noise_prob == 0.0)

    def applies_to(self, link: int) -> bool:
        return not self.is_ideal and (self.links is None or link in self.links)


@dataclass(frozen=True)
class Interception:
    link: int
    position: int
    basis: MeasurementBasis
    bit: int


@dataclass
class EveRecord:
    """Everything an intercept-resend eavesdropper measured, one entry per photon."""

    entries: list[Interception] = field(default_factory=list)

    def extend(self, other: EveRecord) -> None:
        self.entries.extend(other.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, link: int) -> dict[int, Interception]:
        return {e.position: e for e in self.entries if e.link == link}

    def tally(self) -> dict[str, int]:
        z = sum(1 for e in self.entries if e.basis is MeasurementBasis.Z)
        return {"intercepted": len(self.entries), "z_basis": z, "x_basis": len(self.entries) - z}


def transmit(state: RegisterBlock, q: int, channel: ChannelModel | None, rng: RngStream, *,
             link: int = 0, positions=None) -> tuple[RegisterBlock, EveRecord]:
    """Send qubit ``q`` of every row of ``state`` across ``link``.

    ``positions`` labels the rows in the returned record (defaults to row
    index). An ideal channel draws no randomness, so removing it is
    indistinguishable from keeping it.
    """
    record = EveRecord()
    if channel is None or not channel.applies_to(link):
        state._check_wire(q)
        return state, record
    n = state.batch
    if channel.kind is ChannelKind.INTERCEPT_RESEND:
        if channel.strategy is EveStrategy.ALWAYS_Z:
            bases = np.zeros(n, dtype=np.int64)
        elif channel.strategy is EveStrategy.ALWAYS_X:
            bases = np.ones(n, dtype=np.int64)
        else:
            bases = rng.bits(n)
        bits = state.measure(q, bases, rng)
        pos = np.arange(n) if positions is None else np.asarray(positions)
        record.entries.extend(
            Interception(link, int(p), MeasurementBasis(int(b)), int(x))
            for p, b, x in zip(pos, bases, bits))
    else:
        # full depolarization of a hit photon == uniformly random Pauli, identity included
        hit = rng.random(n) < channel.noise_prob
        ops = rng.integers(0, 4, size=n)
        ops[~hit] = 0
        state.apply_pauli(q, ops)
    return state, record


def detection_probability(channel: ChannelModel | None) -> float:
    """Chance that one checked phi+ pair on an affected link shows a mismatch.

    The checkers pick Z or X uniformly. Intercept-resend: Eve's basis matches
    the check basis half the time and disturbs nothing; otherwise the
    partner's bit is random, so 1/2 * 1/2. Depolarizing: a hit photon carries
    sigma_x (seen only in Z), sigma_z (seen only in X), i*sigma_y (seen in
    both) or I (never seen) with equal weight.
    """
    if channel is None or channel.is_ideal:
        return 0.0
    if channel.kind is ChannelKind.INTERCEPT_RESEND:
        return 0.25
    return channel.noise_prob * 0.5
