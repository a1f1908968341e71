"""Exact state-vector engine for small registers.

Amplitudes are stored as a ``(batch, 2**n)`` complex array so that a block of
identical, independent registers (one per EPR-pair slot, or one per protocol
round) can be driven by a single kernel call. :class:`StateVector` is the
single-register case. Qubit 0 is the least-significant bit of the basis index.

All mutating operations work in place and return the register they were given.
"""
from __future__ import annotations

import enum
import hashlib
from typing import Sequence

import numpy as np

from . import _kernels
from .bell import BellOutcome, PauliOp

MAX_QUBITS = 24
NORM_TOL = 1e-9

_SQRT_HALF = 1.0 / np.sqrt(2.0)

PAULI_MATRICES = np.array(
    [
        [[1, 0], [0, 1]],    # I
        [[0, 1], [1, 0]],    # sigma_x
        [[0, 1], [-1, 0]],   # i*sigma_y = |0><1| - |1><0|
        [[1, 0], [0, -1]],   # sigma_z
    ],
    dtype=np.complex128,
)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) * _SQRT_HALF
# selected per row by basis code: Z -> identity, X -> Hadamard
_BASIS_ROTATION = np.stack([PAULI_MATRICES[0], HADAMARD])


class RegisterError(ValueError):
    """Bad wire label, register size or preparation precondition."""


class NormalizationError(RuntimeError):
    """Outcome probabilities no longer sum to one."""


class MeasurementBasis(enum.IntEnum):
    Z = 0
    X = 1

    def __str__(self) -> str:
        return self.name


def derive_seed(master: int, index: int) -> int:
    """64-bit seed from a keyed BLAKE2b hash of ``(master, index)``."""
    key = (master & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    msg = (index & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    return int.from_bytes(hashlib.blake2b(msg, key=key, digest_size=8).digest(), "little")


class RngStream:
    """Seeded random stream with a draw counter.

    ``split(i)`` gives an independent child stream whose seed depends only on
    this stream's seed and ``i``, never on how many draws have been made.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._gen = np.random.Generator(np.random.PCG64(self.seed))
        self.draws = 0

    def split(self, index: int) -> RngStream:
        return RngStream(derive_seed(self.seed, index))

    def random(self, size: int | None = None):
        self.draws += 1
        return self._gen.random(size)

    def bits(self, size: int) -> np.ndarray:
        self.draws += 1
        return self._gen.integers(0, 2, size=size, dtype=np.int64)

    def integers(self, low: int, high: int, size: int | None = None):
        self.draws += 1
        return self._gen.integers(low, high, size=size)

    def bernoulli(self, p: float) -> bool:
        return bool(self.random() < p)

    def sample(self, n: int, k: int) -> np.ndarray:
        """``k`` distinct positions from ``range(n)``, sorted."""
        self.draws += 1
        return np.sort(self._gen.choice(n, size=k, replace=False))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, draws={self.draws})"


def _per_row(values, batch: int) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64)
    if arr.ndim == 0:
        return np.full(batch, int(arr), dtype=np.int64)
    if arr.shape != (batch,):
        raise RegisterError(f"expected one value per row ({batch}), got shape {arr.shape}")
    return arr


class RegisterBlock:
    """``batch`` independent registers of ``n_qubits`` qubits each, all starting in |0...0>."""

    def __init__(self, n_qubits: int, batch: int = 1):
        if not 1 <= n_qubits <= MAX_QUBITS:
            raise RegisterError(f"n_qubits must be in 1..{MAX_QUBITS}, got {n_qubits}")
        if batch < 1:
            raise RegisterError(f"batch must be >= 1, got {batch}")
        self.n_qubits = n_qubits
        self.amps = np.zeros((batch, 1 << n_qubits), dtype=np.complex128)
        self.amps[:, 0] = 1.0

    @classmethod
    def from_amplitudes(cls, amps: np.ndarray) -> RegisterBlock:
        amps = np.array(amps, dtype=np.complex128, ndmin=2, order="C")
        dim = amps.shape[1]
        n = dim.bit_length() - 1
        if dim < 2 or dim != 1 << n:
            raise RegisterError(f"amplitude length must be a power of two >= 2, got {dim}")
        out = cls.__new__(cls)
        if not 1 <= n <= MAX_QUBITS:
            raise RegisterError(f"n_qubits must be in 1..{MAX_QUBITS}, got {n}")
        out.n_qubits = n
        out.amps = amps
        return out

    @property
    def batch(self) -> int:
        return self.amps.shape[0]

    @property
    def dim(self) -> int:
        return self.amps.shape[1]

    def copy(self) -> RegisterBlock:
        out = self.__class__.__new__(self.__class__)
        out.n_qubits = self.n_qubits
        out.amps = self.amps.copy()
        return out

    def take(self, rows) -> RegisterBlock:
        """A new block holding copies of the selected rows."""
        out = RegisterBlock.__new__(RegisterBlock)
        out.n_qubits = self.n_qubits
        rows = np.asarray(rows)
        if rows.size == self.batch and np.array_equal(rows, np.arange(self.batch)):
            out.amps = self.amps.copy()
        else:
            out.amps = np.ascontiguousarray(self.amps[rows])
        return out

    def put(self, rows, block: RegisterBlock) -> None:
        self.amps[np.asarray(rows)] = block.amps

    def _check_wire(self, q: int) -> int:
        if not 0 <= int(q) < self.n_qubits:
            raise RegisterError(f"wire {q} out of range for {self.n_qubits}-qubit register")
        return int(q)

    def _check_pair(self, a: int, b: int) -> tuple[int, int]:
        a, b = self._check_wire(a), self._check_wire(b)
        if a == b:
            raise RegisterError(f"two-qubit operation needs distinct wires, got {a} twice")
        return a, b

    # -- gates ---------------------------------------------------------------

    def apply_matrix(self, q: int, mats: np.ndarray) -> RegisterBlock:
        """Apply a 2x2 matrix (shared, or one per row) to qubit ``q``."""
        q = self._check_wire(q)
        mats = np.asarray(mats, dtype=np.complex128)
        if mats.ndim == 2:
            mats = np.broadcast_to(mats, (self.batch, 2, 2))
        _kernels.apply_1q(self.amps, q, np.ascontiguousarray(mats))
        return self

    def apply_pauli(self, q: int, ops) -> RegisterBlock:
        """Apply ``PauliOp`` (scalar or one per row) to qubit ``q``."""
        codes = _per_row(ops, self.batch)
        return self.apply_matrix(q, PAULI_MATRICES[codes])

    def hadamard(self, q: int) -> RegisterBlock:
        return self.apply_matrix(q, HADAMARD)

    def cnot(self, control: int, target: int) -> RegisterBlock:
        c, t = self._check_pair(control, target)
        _kernels.apply_cnot(self.amps, c, t)
        return self

    def prepare_bell(self, a: int, b: int, kinds, *, check: bool = True) -> RegisterBlock:
        """Turn |0>_a |0>_b into the Bell state ``kinds`` (scalar or per row) on ``(a, b)``.

        ``check=False`` skips verifying that both wires start in |0>; only
        for callers that just built the register.
        """
        a, b = self._check_pair(a, b)
        codes = _per_row(kinds, self.batch)
        if np.any(codes < 0) or np.any(codes > 3):
            raise RegisterError("Bell kind must be in 0..3")
        if check:
            p1 = np.maximum(_kernels.prob_one(self.amps, a), _kernels.prob_one(self.amps, b))
            if np.any(p1 > NORM_TOL):
                raise RegisterError(f"wires {a},{b} are not both in |0>; cannot prepare a Bell pair")
        flip, phase = codes >> 1, codes & 1
        if phase.any():
            self.apply_pauli(a, phase)      # phase bit -> X on a
        if flip.any():
            self.apply_pauli(b, flip)       # flip bit -> X on b
        self.hadamard(a)
        _kernels.apply_cnot(self.amps, a, b)
        # fix the overall sign so psi- reads (|10> - |01>)/sqrt2 in (b a) ket order
        neg = codes == int(BellOutcome.PSI_MINUS)
        if neg.any():
            self.amps[neg] *= -1.0
        return self

    # -- measurement ---------------------------------------------------------

    def prob_one(self, q: int) -> np.ndarray:
        return _kernels.prob_one(self.amps, self._check_wire(q))

    def norms(self) -> np.ndarray:
        return _kernels.norms(self.amps)

    def _rotate(self, q: int, basis_codes: np.ndarray) -> None:
        if np.any(basis_codes):
            _kernels.apply_1q(self.amps, q, np.ascontiguousarray(_BASIS_ROTATION[basis_codes]))

    def measure(self, q: int, bases, rng: RngStream) -> np.ndarray:
        """Born-rule measurement of qubit ``q`` in Z or X (scalar or per row).

        Returns one bit per row: 0 for |0> or |+>, 1 for |1> or |->.
        """
        q = self._check_wire(q)
        codes = _per_row(bases, self.batch)
        self._rotate(q, codes)
        bits, norm = _kernels.measure_z(self.amps, q, rng.random(self.batch))
        if np.any(np.abs(norm - 1.0) > NORM_TOL):
            raise NormalizationError(f"outcome probabilities sum to {norm.min():.12g}..{norm.max():.12g}")
        self._rotate(q, codes)
        return bits

    def project(self, q: int, bases, bits) -> np.ndarray:
        """Force outcome ``bits`` (no sampling). Returns the branch probability per row."""
        q = self._check_wire(q)
        codes = _per_row(bases, self.batch)
        self._rotate(q, codes)
        p = _kernels.collapse(self.amps, q, _per_row(bits, self.batch))
        self._rotate(q, codes)
        return p

    def _to_bell_frame(self, a: int, b: int) -> None:
        _kernels.apply_cnot(self.amps, a, b)
        self.hadamard(a)

    def _from_bell_frame(self, a: int, b: int) -> None:
        self.hadamard(a)
        _kernels.apply_cnot(self.amps, a, b)

    def measure_bell(self, a: int, b: int, rng: RngStream) -> np.ndarray:
        """Bell measurement of ``(a, b)``; returns ``BellOutcome`` codes per row."""
        a, b = self._check_pair(a, b)
        self._to_bell_frame(a, b)
        phase = self.measure(a, MeasurementBasis.Z, rng)
        flip = self.measure(b, MeasurementBasis.Z, rng)
        self._from_bell_frame(a, b)
        return 2 * flip + phase

    def project_bell(self, a: int, b: int, outcomes) -> np.ndarray:
        """Force Bell outcome(s) on ``(a, b)``; returns branch probabilities."""
        a, b = self._check_pair(a, b)
        codes = _per_row(outcomes, self.batch)
        self._to_bell_frame(a, b)
        pa = _kernels.collapse(self.amps, a, codes & 1)
        pb = _kernels.collapse(self.amps, b, codes >> 1)
        self._from_bell_frame(a, b)
        return pa * pb

    def bell_probabilities(self, a: int, b: int) -> np.ndarray:
        """``(batch, 4)`` probabilities of each Bell outcome on ``(a, b)``; state untouched."""
        a, b = self._check_pair(a, b)
        work = self.copy()
        work._to_bell_frame(a, b)
        w = work.amps.real**2 + work.amps.imag**2
        idx = np.arange(self.dim)
        code = 2 * ((idx >> b) & 1) + ((idx >> a) & 1)
        return np.stack([w[:, code == k].sum(axis=1) for k in range(4)], axis=1)


class StateVector(RegisterBlock):
    """A single register."""

    def __init__(self, n_qubits: int):
        super().__init__(n_qubits, batch=1)

    @classmethod
    def from_amplitudes(cls, amps) -> StateVector:
        amps = np.asarray(amps, dtype=np.complex128)
        if amps.ndim != 1:
            raise RegisterError("StateVector takes a 1-d amplitude array")
        block = RegisterBlock.from_amplitudes(amps)
        out = cls.__new__(cls)
        out.n_qubits, out.amps = block.n_qubits, block.amps
        return out

    @property
    def amplitudes(self) -> np.ndarray:
        return self.amps[0]

    def norm(self) -> float:
        return float(self.norms()[0])

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits})"


# -- functional API ----------------------------------------------------------

def init_register(n_qubits: int) -> StateVector:
    return StateVector(n_qubits)


def prepare_bell_pair(state: StateVector, a: int, b: int, kind: BellOutcome) -> StateVector:
    state.prepare_bell(a, b, int(kind))
    return state


def apply_pauli(state: StateVector, q: int, op: PauliOp) -> StateVector:
    state.apply_pauli(q, int(op))
    return state


def apply_hadamard(state: StateVector, q: int) -> StateVector:
    state.hadamard(q)
    return state


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    state.cnot(control, target)
    return state


def measure_single(state: StateVector, q: int, basis: MeasurementBasis, rng: RngStream) -> tuple[int, StateVector]:
    bit = state.measure(q, int(basis), rng)
    return int(bit[0]), state


def measure_bell(state: StateVector, a: int, b: int, rng: RngStream) -> tuple[BellOutcome, StateVector]:
    code = state.measure_bell(a, b, rng)
    return BellOutcome(int(code[0])), state


def bell_probabilities(state: StateVector, a: int, b: int) -> np.ndarray:
    return state.bell_probabilities(a, b)[0]


def fidelity(x: StateVector, y: StateVector) -> float:
    """|<x|y>|^2, insensitive to global phase."""
    return float(abs(np.vdot(x.amplitudes, y.amplitudes)) ** 2)


def bell_pair_register(kinds: Sequence[BellOutcome]) -> StateVector:
    """Register of ``2*len(kinds)`` qubits with pair ``i`` on wires ``(2i, 2i+1)``."""
    state = StateVector(2 * len(kinds))
    for i, k in enumerate(kinds):
        state.prepare_bell(2 * i, 2 * i + 1, int(k))
    return state
