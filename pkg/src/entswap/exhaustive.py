"""Exact outcome distributions by enumerating measurement branches on the engine.

Nothing here consults the label algebra in :mod:`entswap.bell`; every
probability comes from projecting a state vector, so these functions serve as
the independent oracle for the algebra (and vice versa).
"""
from __future__ import annotations

from .bell import BellOutcome, Dibit, PauliOp, ALL_DIBITS, dibit_to_pauli, bell_to_dibit
from .qstate import StateVector, bell_pair_register

PROB_EPS = 1e-12


def swap_distribution_sim(left: BellOutcome, right: BellOutcome) -> dict[tuple[BellOutcome, BellOutcome], float]:
    """Pairs (1,2)=left, (3,4)=right on wires 0..3; Bell-measure (1,4) then (2,3)."""
    state = bell_pair_register([left, right])
    out = {}
    p14 = state.bell_probabilities(0, 3)[0]
    for a in BellOutcome:
        branch = state.copy()
        pa = float(branch.project_bell(0, 3, int(a))[0]) if p14[a] > PROB_EPS else 0.0
        p23 = branch.bell_probabilities(1, 2)[0] if pa > 0 else [0.0] * 4
        for b in BellOutcome:
            out[(a, b)] = pa * float(p23[b])
    return out


def _deterministic_outcome(state: StateVector, a: int, b: int) -> BellOutcome:
    probs = state.bell_probabilities(a, b)[0]
    hits = [BellOutcome(k) for k in range(4) if probs[k] > 1.0 - 1e-9]
    if len(hits) != 1:
        raise AssertionError(f"outcome on ({a},{b}) is not deterministic: {probs}")
    return hits[0]


def qsdc_table_from_simulation() -> dict[Dibit, list[tuple[BellOutcome, BellOutcome]]]:
    """Encode each dibit on photon 1, force each sender result, read off the receiver's."""
    table: dict[Dibit, list[tuple[BellOutcome, BellOutcome]]] = {d: [] for d in ALL_DIBITS}
    for d in ALL_DIBITS:
        base = bell_pair_register([BellOutcome.PHI_PLUS, BellOutcome.PHI_PLUS])
        base.apply_pauli(0, int(dibit_to_pauli(d)))
        for a in BellOutcome:
            branch = base.copy()
            p = float(branch.project_bell(0, 3, int(a))[0])
            if abs(p - 0.25) > 1e-9:
                raise AssertionError(f"sender outcome {a.label} has probability {p}, expected 1/4")
            table[d].append((a, _deterministic_outcome(branch, 1, 2)))
    return table


def qss_joint_distribution(n_parties: int = 3) -> dict[tuple[BellOutcome, ...], float]:
    """Every non-zero branch of the ring's Bell measurements, dealer first."""
    state = bell_pair_register([BellOutcome.PHI_PLUS] * n_parties)
    wires = [(0, 2 * n_parties - 1)] + [(2 * i - 1, 2 * i) for i in range(1, n_parties)]
    out: dict[tuple[BellOutcome, ...], float] = {}

    def walk(st: StateVector, i: int, prefix: tuple[BellOutcome, ...], prob: float) -> None:
        if i == n_parties:
            out[prefix] = prob
            return
        a, b = wires[i]
        probs = st.bell_probabilities(a, b)[0]
        for k in range(4):
            if probs[k] <= PROB_EPS:
                continue
            branch = st.copy()
            p = float(branch.project_bell(a, b, k)[0])
            walk(branch, i + 1, prefix + (BellOutcome(k),), prob * p)

    walk(state, 0, (), 1.0)
    return out


def qss_table_from_simulation() -> dict[BellOutcome, tuple[list[tuple[BellOutcome, BellOutcome]], Dibit]]:
    """Three-party ring: which dealer outcome accompanies each (Bob, Charlie) pair."""
    table = {a: ([], bell_to_dibit(a)) for a in BellOutcome}
    seen = set()
    for (alice, bob, charlie), p in qss_joint_distribution(3).items():
        if abs(p - 1 / 16) > 1e-9:
            raise AssertionError(f"branch {alice.label},{bob.label},{charlie.label} has probability {p}")
        if (bob, charlie) in seen:
            raise AssertionError(f"({bob.label},{charlie.label}) is compatible with two dealer outcomes")
        seen.add((bob, charlie))
        table[alice][0].append((bob, charlie))
    return table


def pauli_action(op: PauliOp) -> BellOutcome:
    """Bell state of a phi+ pair after ``op`` acts on its first qubit, read from the engine."""
    st = bell_pair_register([BellOutcome.PHI_PLUS])
    st.apply_pauli(0, int(op))
    return _deterministic_outcome(st, 0, 1)
