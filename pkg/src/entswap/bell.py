"""Bell-label algebra.

Bell states are labelled by two bits ``(flip, phase)``::

    phi+ = (0, 0)   phi- = (0, 1)   psi+ = (1, 0)   psi- = (1, 1)

With this labelling, entanglement swapping composes labels by component-wise
XOR (the Klein four-group), so every correlation used by the protocols can be
computed without touching a state vector. :mod:`entswap.qstate` computes the
same quantities by brute-force simulation; the two are each other's oracle.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Mapping, NamedTuple, Sequence


class BellOutcome(enum.IntEnum):
    """One of the four Bell states. The integer value is ``2*flip + phase``."""

    PHI_PLUS = 0
    PHI_MINUS = 1
    PSI_PLUS = 2
    PSI_MINUS = 3

    @property
    def flip(self) -> int:
        return self.value >> 1

    @property
    def phase(self) -> int:
        return self.value & 1

    @property
    def label(self) -> str:
        return _BELL_LABELS[self]

    @classmethod
    def from_bits(cls, flip: int, phase: int) -> BellOutcome:
        return cls(((flip & 1) << 1) | (phase & 1))

    @classmethod
    def parse(cls, text: str) -> BellOutcome:
        try:
            return _BELL_BY_LABEL[text.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown Bell label {text!r}") from None

    def __xor__(self, other: object) -> BellOutcome:
        if not isinstance(other, BellOutcome):
            return NotImplemented
        return BellOutcome(self.value ^ other.value)

    __rxor__ = __xor__

    def __str__(self) -> str:
        return self.label


_BELL_LABELS = {
    BellOutcome.PHI_PLUS: "phi+",
    BellOutcome.PHI_MINUS: "phi-",
    BellOutcome.PSI_PLUS: "psi+",
    BellOutcome.PSI_MINUS: "psi-",
}
_BELL_BY_LABEL = {v: k for k, v in _BELL_LABELS.items()}
_BELL_BY_LABEL.update({"φ+": BellOutcome.PHI_PLUS, "φ-": BellOutcome.PHI_MINUS,
                       "ψ+": BellOutcome.PSI_PLUS, "ψ-": BellOutcome.PSI_MINUS})

PHI_PLUS, PHI_MINUS, PSI_PLUS, PSI_MINUS = BellOutcome


class PauliOp(enum.IntEnum):
    """Message-encoding operators ``I``, ``sigma_x``, ``i*sigma_y``, ``sigma_z``."""

    I = 0
    X = 1
    IY = 2
    Z = 3

    @property
    def label(self) -> str:
        return ("I", "X", "iY", "Z")[self.value]

    def __str__(self) -> str:
        return self.label


class Dibit(NamedTuple):
    """A two-bit message symbol, written ``"hi lo"`` (e.g. ``"10"``)."""

    hi: int
    lo: int

    @property
    def value(self) -> int:
        return (self.hi << 1) | self.lo

    @classmethod
    def from_int(cls, v: int) -> Dibit:
        if not 0 <= v <= 3:
            raise ValueError(f"dibit value out of range: {v}")
        return cls(v >> 1, v & 1)

    @classmethod
    def parse(cls, text: str) -> Dibit:
        if len(text) != 2 or set(text) - {"0", "1"}:
            raise ValueError(f"not a dibit: {text!r}")
        return cls(int(text[0]), int(text[1]))

    def __str__(self) -> str:
        return f"{self.hi}{self.lo}"


ALL_DIBITS = tuple(Dibit.from_int(v) for v in range(4))

# Bell state of a phi+ pair after the operator acts on one of its qubits.
_PAULI_TO_BELL = {
    PauliOp.I: BellOutcome.PHI_PLUS,
    PauliOp.X: BellOutcome.PSI_PLUS,
    PauliOp.IY: BellOutcome.PSI_MINUS,
    PauliOp.Z: BellOutcome.PHI_MINUS,
}
_BELL_TO_PAULI = {v: k for k, v in _PAULI_TO_BELL.items()}

_DIBIT_TO_PAULI = {
    Dibit(0, 0): PauliOp.I,
    Dibit(0, 1): PauliOp.X,
    Dibit(1, 0): PauliOp.IY,
    Dibit(1, 1): PauliOp.Z,
}
_PAULI_TO_DIBIT = {v: k for k, v in _DIBIT_TO_PAULI.items()}


def pauli_encode(op: PauliOp) -> BellOutcome:
    return _PAULI_TO_BELL[PauliOp(op)]


def bell_to_pauli(b: BellOutcome) -> PauliOp:
    return _BELL_TO_PAULI[BellOutcome(b)]


def dibit_to_pauli(d: Dibit) -> PauliOp:
    return _DIBIT_TO_PAULI[Dibit(*d)]


def pauli_to_dibit(op: PauliOp) -> Dibit:
    return _PAULI_TO_DIBIT[PauliOp(op)]


def bell_to_dibit(b: BellOutcome) -> Dibit:
    """phi+ -> 00, phi- -> 01, psi+ -> 10, psi- -> 11 (the ``(flip, phase)`` bits)."""
    b = BellOutcome(b)
    return Dibit(b.flip, b.phase)


def dibit_to_bell(d: Dibit) -> BellOutcome:
    return BellOutcome.from_bits(d[0], d[1])


def xor_all(outcomes: Iterable[BellOutcome]) -> BellOutcome:
    return reduce(lambda a, b: a ^ b, outcomes, BellOutcome.PHI_PLUS)


@dataclass(frozen=True)
class SwapDistribution:
    """Joint distribution of Bell outcomes on the rewired pairs.

    ``entries[(ad, bc)]`` is the probability that the pair made of the outer
    qubits reads ``ad`` and the pair made of the inner qubits reads ``bc``.
    All sixteen label pairs are present.
    """

    entries: Mapping[tuple[BellOutcome, BellOutcome], float]

    def __getitem__(self, key: tuple[BellOutcome, BellOutcome]) -> float:
        return self.entries[key]

    def support(self) -> list[tuple[BellOutcome, BellOutcome]]:
        return [k for k, p in self.entries.items() if p > 0.0]

    def total(self) -> float:
        return float(sum(self.entries.values()))


def swap_distribution(left: BellOutcome, right: BellOutcome) -> SwapDistribution:
    """Outcome distribution of swapping pairs ``(1,2) = left`` and ``(3,4) = right``.

    Bell-measuring (1,4) and (2,3) gives each of the four label pairs with
    ``o14 ^ o23 == left ^ right`` probability 1/4, and never anything else.
    """
    target = BellOutcome(left) ^ BellOutcome(right)
    entries = {
        (a, b): (0.25 if a ^ b == target else 0.0)
        for a in BellOutcome for b in BellOutcome
    }
    return SwapDistribution(entries)


def decode_qsdc(alice: BellOutcome, bob: BellOutcome) -> Dibit:
    """Recover the sender's dibit from her (1,4) result and the receiver's (2,3) result."""
    return pauli_to_dibit(bell_to_pauli(BellOutcome(alice) ^ BellOutcome(bob)))


def qss_decode(collaborators: Sequence[BellOutcome]) -> tuple[BellOutcome, Dibit]:
    """Reconstruct the dealer's outcome and key from every other party's outcome.

    All source pairs are phi+, the identity label, so the dealer's outcome is
    the XOR of everyone else's.
    """
    if len(collaborators) < 2:
        raise ValueError(f"secret sharing needs at least 2 collaborators, got {len(collaborators)}")
    alice = xor_all(collaborators)
    return alice, bell_to_dibit(alice)


# --- reference tables, hard-coded in their fixed row order -----------------

_P, _M, _S, _T = PHI_PLUS, PHI_MINUS, PSI_PLUS, PSI_MINUS

#: dibit -> [(sender's (1,4) result, receiver's (2,3) result), ...]
QSDC_RECOVERY_TABLE: dict[Dibit, list[tuple[BellOutcome, BellOutcome]]] = {
    Dibit(0, 0): [(_P, _P), (_M, _M), (_S, _S), (_T, _T)],
    Dibit(0, 1): [(_P, _S), (_M, _T), (_S, _P), (_T, _M)],
    Dibit(1, 0): [(_M, _S), (_P, _T), (_T, _P), (_S, _M)],
    Dibit(1, 1): [(_P, _M), (_M, _P), (_T, _S), (_S, _T)],
}

#: dealer outcome -> ([(Bob's (2,3) result, Charlie's (4,5) result), ...], shared key)
QSS_KEY_TABLE: dict[BellOutcome, tuple[list[tuple[BellOutcome, BellOutcome]], Dibit]] = {
    _P: ([(_P, _P), (_M, _M), (_S, _S), (_T, _T)], Dibit(0, 0)),
    _M: ([(_P, _M), (_M, _P), (_T, _S), (_S, _T)], Dibit(0, 1)),
    _S: ([(_P, _S), (_M, _T), (_S, _P), (_T, _M)], Dibit(1, 0)),
    _T: ([(_M, _S), (_P, _T), (_T, _P), (_S, _M)], Dibit(1, 1)),
}

del _P, _M, _S, _T


def qsdc_table_from_algebra() -> dict[Dibit, list[tuple[BellOutcome, BellOutcome]]]:
    table: dict[Dibit, list[tuple[BellOutcome, BellOutcome]]] = {d: [] for d in ALL_DIBITS}
    for a in BellOutcome:
        for b in BellOutcome:
            table[decode_qsdc(a, b)].append((a, b))
    return table


def qss_table_from_algebra() -> dict[BellOutcome, tuple[list[tuple[BellOutcome, BellOutcome]], Dibit]]:
    table = {a: ([], bell_to_dibit(a)) for a in BellOutcome}
    for b in BellOutcome:
        for c in BellOutcome:
            alice, _ = qss_decode([b, c])
            table[alice][0].append((b, c))
    return table


def render_qsdc_table(table: Mapping[Dibit, Sequence[tuple[BellOutcome, BellOutcome]]]) -> str:
    """Canonical text form: rows by dibit, cells sorted. Order-insensitive within a row."""
    lines = ["secret | {sender(1,4), receiver(2,3)}"]
    for d in sorted(table):
        cells = " ".join(f"{{{a.label},{b.label}}}" for a, b in sorted(table[d]))
        lines.append(f"{d}     | {cells}")
    return "\n".join(lines) + "\n"


def render_qss_table(table: Mapping[BellOutcome, tuple[Sequence[tuple[BellOutcome, BellOutcome]], Dibit]]) -> str:
    lines = ["dealer | {bob(2,3), charlie(4,5)} | key"]
    for a in sorted(table):
        cells, key = table[a]
        body = " ".join(f"{{{b.label},{c.label}}}" for b, c in sorted(cells))
        lines.append(f"{a.label}   | {body} | {key}")
    return "\n".join(lines) + "\n"
