"""Honest-party protocol runs: two QSDC variants and ring QSS.

QSDC uses one 4-qubit register per EPR-pair slot, all slots held in one
:class:`~entswap.qstate.RegisterBlock`. Wires per slot::

    0 = photon 1 (Alice keeps, S1)    1 = photon 2 (sent to Bob, S2)
    2 = photon 3 (Bob keeps, S3)      3 = photon 4 (sent to Alice, S4)

Link 0 carries S2 (Alice -> Bob) and link 1 carries S4 (Bob -> Alice).

QSS with ``n`` parties uses a ``2n``-qubit register per round. Party ``i``
prepares phi+ on wires ``(2i, 2i+1)`` and sends wire ``2i+1`` over link ``i``
to party ``i+1 mod n``; it then holds wires ``2i-1`` and ``2i``. Party 0 is
the dealer.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import adversary
from .adversary import ChannelModel, EveRecord
from .bell import (
    BellOutcome,
    Dibit,
    bell_to_dibit,
    decode_qsdc,
    dibit_to_bell,
    dibit_to_pauli,
    qss_decode,
)
from .qstate import MAX_QUBITS, RegisterBlock, RngStream

DEFAULT_SEED = 20240611
PHI_PLUS = int(BellOutcome.PHI_PLUS)

# QSS rounds are simulated in chunks capped at this many amplitudes
_CHUNK_AMPLITUDES = 1 << 20


class ConfigError(ValueError):
    """A configuration field is out of range. ``field`` names it."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class CapacityError(ValueError):
    """The message does not fit in the pairs left after sampling."""


@dataclass(frozen=True)
class ProtocolConfig:
    n_pairs: int = 64
    sample_fraction: float = 0.25
    check_probability: float = 0.5
    error_threshold: float = 0.02
    channel: ChannelModel | None = field(default_factory=ChannelModel.ideal)
    seed: int = DEFAULT_SEED
    max_rounds: int = 100_000

    def __post_init__(self):
        if int(self.n_pairs) != self.n_pairs or self.n_pairs < 1:
            raise ConfigError("n_pairs", f"must be an integer >= 1, got {self.n_pairs}")
        if not 0.0 <= self.sample_fraction < 1.0:
            raise ConfigError("sample_fraction", f"must be in [0, 1), got {self.sample_fraction}")
        if not 0.0 <= self.check_probability <= 1.0:
            raise ConfigError("check_probability", f"must be in [0, 1], got {self.check_probability}")
        if not 0.0 <= self.error_threshold < 1.0:
            raise ConfigError("error_threshold", f"must be in [0, 1), got {self.error_threshold}")
        if self.max_rounds < 1:
            raise ConfigError("max_rounds", f"must be >= 1, got {self.max_rounds}")

    def rng(self) -> RngStream:
        return RngStream(self.seed)


# -- transcript ----------------------------------------------------------------

TRANSCRIPT_FIELDS = ("seq", "step", "party", "payload")


@dataclass(frozen=True)
class Event:
    seq: int
    step: str
    party: str
    payload: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {"seq": self.seq, "step": self.step, "party": self.party, "payload": self.payload}


class Transcript:
    """Ordered protocol log. Serializes to JSON lines with fields ``TRANSCRIPT_FIELDS``."""

    def __init__(self):
        self.events: list[Event] = []

    def record(self, step: str, party: str, **payload: Any) -> Event:
        ev = Event(len(self.events), step, party, payload)
        self.events.append(ev)
        return ev

    def steps(self) -> list[str]:
        return [e.step for e in self.events]

    def where(self, step: str) -> list[Event]:
        return [e for e in self.events if e.step == step]

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def to_jsonl(self, **extra: Any) -> str:
        """One JSON object per line; ``extra`` keys (e.g. ``trial``) are prepended."""
        lines = [json.dumps({**extra, **e.to_dict()}, separators=(",", ":")) for e in self.events]
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_jsonl(cls, text: str) -> Transcript:
        out = cls()
        for line in text.splitlines():
            if line.strip():
                d = json.loads(line)
                out.events.append(Event(d["seq"], d["step"], d["party"], d["payload"]))
        return out


def _t(transcript: Transcript | None, step: str, party: str, **payload: Any) -> None:
    if transcript is not None:
        transcript.record(step, party, **payload)


def _labels(codes) -> list[str]:
    return [BellOutcome(int(c)).label for c in codes]


def _dibit_str(ds: Sequence[Dibit]) -> str:
    return " ".join(str(d) for d in ds)


# -- eavesdropping check -------------------------------------------------------

@dataclass(frozen=True)
class PhotonSequence:
    """The photons on ``wire`` of the block's rows ``positions``, in order."""

    label: str
    block: RegisterBlock
    wire: int
    positions: np.ndarray

    def __len__(self) -> int:
        return len(self.positions)


@dataclass
class CheckResult:
    sequence: str
    link: int
    positions: np.ndarray
    bases: np.ndarray
    sender_bits: np.ndarray
    receiver_bits: np.ndarray
    survivors: np.ndarray

    @property
    def checked(self) -> int:
        return len(self.positions)

    @property
    def errors(self) -> int:
        return int(np.count_nonzero(self.sender_bits != self.receiver_bits))

    @property
    def error_rate(self) -> float:
        return self.errors / self.checked


def sample_size(n: int, fraction: float) -> int:
    return math.ceil(fraction * n - 1e-12)


def eavesdrop_check(sender: PhotonSequence, receiver: PhotonSequence, fraction: float, rng: RngStream, *,
                    positions=None, link: int = 0) -> CheckResult:
    """Compare partner photons on a random subset of positions.

    Each sampled pair is measured on both sides in one randomly chosen basis
    (Z or X); a phi+ pair must give equal bits, so any mismatch counts as an
    error. ``positions`` overrides the random subset (indices into the
    sequences). Sampled pairs are consumed; the rest are returned as
    ``survivors``.
    """
    n = len(sender)
    if n < 1 or len(receiver) != n:
        raise ValueError(f"sequences must be non-empty and equal length, got {n} and {len(receiver)}")
    if sender.block is not receiver.block or not np.array_equal(sender.positions, receiver.positions):
        raise ValueError("sender and receiver sequences must address the same pairs")
    if positions is None:
        if not 0.0 < fraction < 1.0:
            raise ValueError(f"sample fraction must be in (0, 1), got {fraction}")
        k = sample_size(n, fraction)
        if k < 1:
            raise ValueError("no positions would be sampled")
        picked = rng.sample(n, k)
    else:
        picked = np.asarray(positions, dtype=np.int64)
        if picked.size < 1:
            raise ValueError("no positions would be sampled")
    rows = sender.positions[picked]
    bases = rng.bits(len(rows))
    sub = sender.block.take(rows)
    s_bits = sub.measure(sender.wire, bases, rng)
    r_bits = sub.measure(receiver.wire, bases, rng)
    sender.block.put(rows, sub)
    mask = np.ones(n, dtype=bool)
    mask[picked] = False
    return CheckResult(receiver.label, link, rows, bases, s_bits, r_bits, sender.positions[mask])


def _record_check(transcript, res: CheckResult, announcer: str, other: str, threshold: float) -> None:
    if transcript is None:
        return
    transcript.record("check", announcer, sequence=res.sequence, link=res.link,
                      positions=res.positions.tolist(), bases=["ZX"[b] for b in res.bases],
                      results=res.sender_bits.tolist())
    transcript.record("check-reply", other, sequence=res.sequence, results=res.receiver_bits.tolist())
    transcript.record("check-confirm", announcer, sequence=res.sequence, link=res.link,
                      checked=res.checked, errors=res.errors, error_rate=res.error_rate,
                      passed=res.error_rate <= threshold)


# -- QSDC ------------------------------------------------------------------------

@dataclass
class QsdcReport:
    variant: str
    message: list[Dibit]
    aborted: bool
    abort_reason: str | None
    checks: list[CheckResult]
    recovered: list[Dibit] | None
    retained_pairs: int
    eve: EveRecord
    transcript: Transcript | None = None

    @property
    def agreement(self) -> bool | None:
        if self.aborted:
            return None
        return self.recovered == self.message

    @property
    def checked_pairs(self) -> int:
        return sum(c.checked for c in self.checks)

    @property
    def check_errors(self) -> int:
        return sum(c.errors for c in self.checks)

    @property
    def observed_error_rates(self) -> dict[str, float]:
        return {c.sequence: c.error_rate for c in self.checks}

    def link_counts(self) -> dict[int, tuple[int, int]]:
        """link -> (checked pairs, mismatches)."""
        return {c.link: (c.checked, c.errors) for c in self.checks}


def _as_dibits(message: Sequence) -> list[Dibit]:
    out = []
    for d in message:
        if isinstance(d, str):
            out.append(Dibit.parse(d))
        elif isinstance(d, (int, np.integer)):
            out.append(Dibit.from_int(int(d)))
        else:
            out.append(Dibit(*d))
    return out


def _slot_block(n: int) -> tuple[RegisterBlock, dict[str, PhotonSequence]]:
    block = RegisterBlock(4, n)
    rows = np.arange(n)
    seqs = {name: PhotonSequence(name, block, wire, rows) for name, wire in
            (("S1", 0), ("S2", 1), ("S3", 2), ("S4", 3))}
    return block, seqs


def _exchange(block, config, rng, transcript) -> EveRecord:
    eve = EveRecord()
    _t(transcript, "transmit", "alice", sequence="S2", to="bob", link=0)
    eve.extend(adversary.transmit(block, 1, config.channel, rng, link=0)[1])
    _t(transcript, "transmit", "bob", sequence="S4", to="alice", link=1)
    eve.extend(adversary.transmit(block, 3, config.channel, rng, link=1)[1])
    return eve


def _check_both(seqs, fraction, rng, transcript, threshold, positions=None):
    """Check S2 (Alice with Bob) then S4 (Bob with Alice) on the same positions."""
    if positions is None:
        positions = rng.sample(len(seqs["S1"]), sample_size(len(seqs["S1"]), fraction))
    _t(transcript, "check-positions", "alice", positions=np.asarray(positions).tolist())
    c2 = eavesdrop_check(seqs["S1"], seqs["S2"], fraction, rng, positions=positions, link=0)
    _record_check(transcript, c2, "alice", "bob", threshold)
    c4 = eavesdrop_check(seqs["S3"], seqs["S4"], fraction, rng, positions=positions, link=1)
    _record_check(transcript, c4, "bob", "alice", threshold)
    return c2, c4


def _validate_qsdc(config: ProtocolConfig) -> int:
    if not 0.0 < config.sample_fraction < 1.0:
        raise ConfigError("sample_fraction", f"QSDC needs a fraction in (0, 1), got {config.sample_fraction}")
    k = sample_size(config.n_pairs, config.sample_fraction)
    if k < 1:
        raise ConfigError("sample_fraction", "no pairs would be checked")
    if k >= config.n_pairs:
        raise ConfigError("n_pairs", f"all {config.n_pairs} pairs would be consumed by checking")
    return k


def qsdc_capacity(config: ProtocolConfig) -> int:
    """Dibits a single session can carry."""
    return config.n_pairs - _validate_qsdc(config)


def pairs_for_message(length: int, sample_fraction: float) -> int:
    """Smallest ``n_pairs`` whose post-sampling capacity holds ``length`` dibits."""
    n = max(2, math.ceil(length / (1.0 - sample_fraction)))
    while n - sample_size(n, sample_fraction) < length or sample_size(n, sample_fraction) < 1:
        n += 1
    return n


def run_qsdc_two_step(message: Sequence, config: ProtocolConfig, rng: RngStream | None = None, *,
                      transcript: Transcript | None = None) -> QsdcReport:
    """Check the channel first, then encode with Pauli operators and swap."""
    message = _as_dibits(message)
    capacity = qsdc_capacity(config)
    if len(message) > capacity:
        raise CapacityError(f"message of {len(message)} dibits exceeds capacity {capacity}")
    rng = rng if rng is not None else config.rng()
    n = config.n_pairs

    block, seqs = _slot_block(n)
    block.prepare_bell(0, 1, PHI_PLUS)
    _t(transcript, "prepare", "alice", pairs=n, state="phi+", sequences=["S1", "S2"])
    block.prepare_bell(2, 3, PHI_PLUS)
    _t(transcript, "prepare", "bob", pairs=n, state="phi+", sequences=["S3", "S4"])
    eve = _exchange(block, config, rng, transcript)

    c2, c4 = _check_both(seqs, config.sample_fraction, rng, transcript, config.error_threshold)
    report = QsdcReport("two-step", message, False, None, [c2, c4], None, 0, eve, transcript)
    bad = [c.sequence for c in (c2, c4) if c.error_rate > config.error_threshold]
    if bad:
        report.aborted = True
        report.abort_reason = f"error rate above threshold on {', '.join(bad)}"
        _t(transcript, "abort", "alice", reason=report.abort_reason)
        return report

    slots = c2.survivors[: len(message)]
    report.retained_pairs = len(slots)
    ops = np.array([int(dibit_to_pauli(d)) for d in message], dtype=np.int64)
    sub = block.take(slots)
    if len(slots):
        sub.apply_pauli(0, ops)
    _t(transcript, "encode", "alice", positions=slots.tolist(), ops=[("I", "X", "iY", "Z")[o] for o in ops])
    alice = sub.measure_bell(0, 3, rng) if len(slots) else np.zeros(0, dtype=np.int64)
    _t(transcript, "bell-measure", "alice", wires=[1, 4], positions=slots.tolist())
    _t(transcript, "publish", "alice", results=_labels(alice))
    bob = sub.measure_bell(1, 2, rng) if len(slots) else np.zeros(0, dtype=np.int64)
    _t(transcript, "bell-measure", "bob", wires=[2, 3], positions=slots.tolist(), results=_labels(bob))
    block.put(slots, sub)
    report.recovered = [decode_qsdc(BellOutcome(int(a)), BellOutcome(int(b))) for a, b in zip(alice, bob)]
    _t(transcript, "decode", "bob", message=_dibit_str(report.recovered))
    return report


def run_qsdc_encode_first(message: Sequence, config: ProtocolConfig, rng: RngStream | None = None, *,
                          transcript: Transcript | None = None) -> QsdcReport:
    """Encode into the prepared Bell states, hide phi+ decoys among them, check, then publish.

    ``ceil(sample_fraction * n_pairs)`` slots are decoys. Every other slot
    carries a message dibit; slots beyond the message carry random filler
    that the receiver discards.
    """
    message = _as_dibits(message)
    capacity = qsdc_capacity(config)
    if len(message) > capacity:
        raise CapacityError(f"message of {len(message)} dibits exceeds capacity {capacity}")
    rng = rng if rng is not None else config.rng()
    n = config.n_pairs

    decoys = rng.sample(n, sample_size(n, config.sample_fraction))
    is_decoy = np.zeros(n, dtype=bool)
    is_decoy[decoys] = True
    carriers = np.flatnonzero(~is_decoy)
    filler = rng.integers(0, 4, size=len(carriers) - len(message))
    payload = np.concatenate([np.array([d.value for d in message], dtype=np.int64), filler]).astype(np.int64)
    kinds = np.full(n, PHI_PLUS, dtype=np.int64)
    kinds[carriers] = [int(dibit_to_bell(Dibit.from_int(int(v)))) for v in payload]

    block, seqs = _slot_block(n)
    block.prepare_bell(0, 1, kinds)
    _t(transcript, "prepare", "alice", pairs=n, decoys=int(len(decoys)), sequences=["S1", "S2"])
    block.prepare_bell(2, 3, PHI_PLUS)
    _t(transcript, "prepare", "bob", pairs=n, state="phi+", sequences=["S3", "S4"])
    eve = _exchange(block, config, rng, transcript)

    c2, c4 = _check_both(seqs, config.sample_fraction, rng, transcript, config.error_threshold,
                         positions=decoys)
    report = QsdcReport("encode-first", message, False, None, [c2, c4], None, 0, eve, transcript)
    bad = [c.sequence for c in (c2, c4) if c.error_rate > config.error_threshold]
    if bad:
        report.aborted = True
        report.abort_reason = f"error rate above threshold on {', '.join(bad)}"
        _t(transcript, "abort", "alice", reason=report.abort_reason)
        return report

    sub = block.take(carriers)
    alice = sub.measure_bell(0, 3, rng) if len(carriers) else np.zeros(0, dtype=np.int64)
    _t(transcript, "bell-measure", "alice", wires=[1, 4], positions=carriers.tolist())
    _t(transcript, "publish", "alice", results=_labels(alice))
    bob = sub.measure_bell(1, 2, rng) if len(carriers) else np.zeros(0, dtype=np.int64)
    _t(transcript, "bell-measure", "bob", wires=[2, 3], positions=carriers.tolist(), results=_labels(bob))
    block.put(carriers, sub)
    decoded = [bell_to_dibit(BellOutcome(int(a) ^ int(b))) for a, b in zip(alice, bob)]
    report.recovered = decoded[: len(message)]
    report.retained_pairs = len(message)
    _t(transcript, "decode", "bob", message=_dibit_str(report.recovered))
    return report


# -- QSS ---------------------------------------------------------------------

def party_name(i: int) -> str:
    return "alice" if i == 0 else f"party{i}"


def held_wires(i: int, n_parties: int) -> tuple[int, int]:
    """The two wires party ``i`` Bell-measures in an encoding round."""
    if i == 0:
        return 0, 2 * n_parties - 1
    return 2 * i - 1, 2 * i


def _validate_parties(n_parties: int) -> None:
    if n_parties < 2:
        raise ConfigError("n_parties", f"ring needs at least 2 parties, got {n_parties}")
    if 2 * n_parties > MAX_QUBITS:
        raise ConfigError("n_parties", f"{n_parties} parties need {2 * n_parties} qubits, limit is {MAX_QUBITS}")


@dataclass
class QssBatch:
    """Results of consecutive rounds. Row ``r`` is round ``first_round + r``.

    ``outcomes`` holds Bell codes per party for encoding rounds and -1 for
    checking rounds. For checking rounds ``check_errors[r, i]`` is 1 when the
    pair sent over link ``i`` disagreed.
    """

    n_parties: int
    first_round: int
    checking: np.ndarray
    outcomes: np.ndarray
    check_bases: np.ndarray
    check_announcer: np.ndarray
    check_bits: np.ndarray
    check_errors: np.ndarray
    eve: EveRecord

    def __len__(self) -> int:
        return len(self.checking)

    def round(self, r: int) -> QssRound:
        if self.checking[r]:
            return QssRound(self.first_round + r, True, None, None, None,
                            self.check_errors[r].tolist())
        codes = [BellOutcome(int(c)) for c in self.outcomes[r]]
        alice, key = qss_decode(codes[1:]) if self.n_parties > 2 else (codes[1], bell_to_dibit(codes[1]))
        return QssRound(self.first_round + r, False, codes, key, alice, None)

    def record(self, transcript: Transcript | None, upto: int | None = None) -> None:
        if transcript is None:
            return
        n = self.n_parties
        for r in range(len(self) if upto is None else upto):
            rid = self.first_round + r
            transcript.record("prepare", "all", round=rid, state="phi+", pairs=n)
            for i in range(n):
                transcript.record("transmit", party_name(i), round=rid, link=i,
                                  to=party_name((i + 1) % n), wire=2 * i + 1)
            mode = "check" if self.checking[r] else "encode"
            transcript.record("mode", "alice", round=rid, mode=mode)
            if self.checking[r]:
                for i in range(n):
                    who = self.check_announcer[r, i]
                    transcript.record("check", party_name(int(who)), round=rid, link=i,
                                      basis="ZX"[self.check_bases[r, i]],
                                      results=self.check_bits[r, i].tolist())
                errs = int(self.check_errors[r].sum())
                transcript.record("check-confirm", "alice", round=rid, checked=n, errors=errs,
                                  error_rate=errs / n)
            else:
                for i in range(n):
                    transcript.record("bell-measure", party_name(i), round=rid,
                                      wires=list(held_wires(i, n)),
                                      result=BellOutcome(int(self.outcomes[r, i])).label)
                transcript.record("key", "alice", round=rid,
                                  key=str(bell_to_dibit(BellOutcome(int(self.outcomes[r, 0])))))


@dataclass
class QssRound:
    index: int
    checking: bool
    outcomes: list[BellOutcome] | None
    key: Dibit | None
    reconstructed: BellOutcome | None
    link_errors: list[int] | None

    @property
    def dealer_key(self) -> Dibit | None:
        return None if self.outcomes is None else bell_to_dibit(self.outcomes[0])

    @property
    def error_rate(self) -> float | None:
        if self.link_errors is None:
            return None
        return sum(self.link_errors) / len(self.link_errors)


def run_qss_rounds(n_parties: int, n_rounds: int, config: ProtocolConfig, rng: RngStream | None = None, *,
                   first_round: int = 0) -> QssBatch:
    """Simulate ``n_rounds`` independent ring rounds.

    Rounds are driven as register blocks of bounded size; each row of a block
    is one round's ``2n``-qubit register.
    """
    _validate_parties(n_parties)
    if n_rounds < 1:
        raise ValueError(f"n_rounds must be >= 1, got {n_rounds}")
    rng = rng if rng is not None else config.rng()
    n = n_parties
    checking = rng.random(n_rounds) < config.check_probability
    batch = QssBatch(
        n, first_round, checking,
        outcomes=np.full((n_rounds, n), -1, dtype=np.int64),
        check_bases=np.zeros((n_rounds, n), dtype=np.int64),
        check_announcer=np.zeros((n_rounds, n), dtype=np.int64),
        check_bits=np.zeros((n_rounds, n, 2), dtype=np.int64),
        check_errors=np.zeros((n_rounds, n), dtype=np.int64),
        eve=EveRecord(),
    )
    step = max(1, _CHUNK_AMPLITUDES >> (2 * n))
    for lo in range(0, n_rounds, step):
        _simulate_rounds(batch, lo, min(n_rounds, lo + step), config, rng)
    return batch


def _simulate_rounds(batch: QssBatch, lo: int, hi: int, config: ProtocolConfig, rng: RngStream) -> None:
    n = batch.n_parties
    block = RegisterBlock(2 * n, hi - lo)
    for i in range(n):
        block.prepare_bell(2 * i, 2 * i + 1, PHI_PLUS, check=False)
    positions = np.arange(batch.first_round + lo, batch.first_round + hi)
    for i in range(n):
        batch.eve.extend(adversary.transmit(block, 2 * i + 1, config.channel, rng, link=i,
                                            positions=positions)[1])
    checking = batch.checking[lo:hi]

    local = np.flatnonzero(checking)
    if local.size:
        rows = local + lo
        sub = block.take(local)
        m = local.size
        for i in range(n):
            j = (i + 1) % n
            if i == 0:
                who = np.full(m, 1)            # the receiver announces to the dealer
            elif j == 0:
                who = np.full(m, i)            # the last party announces to the dealer
            else:
                who = np.where(rng.bits(m) == 1, j, i)   # dealer picks either holder
            b = rng.bits(m)
            # measuring order within a pair leaves joint statistics unchanged;
            # the sender side is always measured first
            sent = sub.measure(2 * i, b, rng)
            recv = sub.measure(2 * i + 1, b, rng)
            first_is_sender = who == i
            batch.check_bases[rows, i] = b
            batch.check_announcer[rows, i] = who
            batch.check_bits[rows, i, 0] = np.where(first_is_sender, sent, recv)
            batch.check_bits[rows, i, 1] = np.where(first_is_sender, recv, sent)
            batch.check_errors[rows, i] = sent != recv

    local = np.flatnonzero(~checking)
    if local.size:
        sub = block if local.size == block.batch else block.take(local)
        for i in range(n):
            a, b = held_wires(i, n)
            batch.outcomes[local + lo, i] = sub.measure_bell(a, b, rng)


def run_qss_round(n_parties: int, config: ProtocolConfig, rng: RngStream | None = None, *,
                  index: int = 0, transcript: Transcript | None = None) -> QssRound:
    batch = run_qss_rounds(n_parties, 1, config, rng, first_round=index)
    batch.record(transcript)
    return batch.round(0)


@dataclass
class QssReport:
    n_parties: int
    key_dibits: int
    aborted: bool
    abort_reason: str | None
    dealer_key: list[Dibit]
    collaborator_key: list[Dibit]
    rounds: int
    checking_rounds: int
    encoding_rounds: int
    link_checked: list[int]
    link_errors: list[int]
    max_check_error_rate: float
    ring_violations: int
    eve: EveRecord
    transcript: Transcript | None = None

    @property
    def completed(self) -> bool:
        return len(self.dealer_key) >= self.key_dibits

    @property
    def agreement(self) -> bool | None:
        if self.aborted:
            return None
        return self.dealer_key == self.collaborator_key

    @property
    def checked_pairs(self) -> int:
        return sum(self.link_checked)

    @property
    def check_errors(self) -> int:
        return sum(self.link_errors)

    @property
    def observed_error_rate(self) -> float:
        return self.check_errors / self.checked_pairs if self.checked_pairs else 0.0

    def link_counts(self) -> dict[int, tuple[int, int]]:
        return {i: (c, e) for i, (c, e) in enumerate(zip(self.link_checked, self.link_errors))}


def run_qss_session(n_parties: int, key_dibits: int, config: ProtocolConfig, rng: RngStream | None = None, *,
                    transcript: Transcript | None = None) -> QssReport:
    """Run rounds until ``key_dibits`` encoding rounds, a failed check, or ``max_rounds``.

    A checking round whose mismatch fraction exceeds ``error_threshold``
    aborts the session; passing checking rounds restart from preparation.
    """
    _validate_parties(n_parties)
    if key_dibits < 0:
        raise ConfigError("key_dibits", f"must be >= 0, got {key_dibits}")
    rng = rng if rng is not None else config.rng()
    n = n_parties
    p = config.check_probability
    report = QssReport(n, key_dibits, False, None, [], [], 0, 0, 0, [0] * n, [0] * n, 0.0, 0, EveRecord(), transcript)
    cap = max(1, _CHUNK_AMPLITUDES >> (2 * n))

    while len(report.dealer_key) < key_dibits and report.rounds < config.max_rounds:
        need = key_dibits - len(report.dealer_key)
        guess = math.ceil(need / (1.0 - p) * 1.1) + 4 if p < 1.0 else cap
        chunk = int(min(cap, guess, config.max_rounds - report.rounds))
        batch = run_qss_rounds(n, chunk, config, rng, first_round=report.rounds)

        rates = batch.check_errors.sum(axis=1) / n
        fail = np.flatnonzero(batch.checking & (rates > config.error_threshold))
        enc_count = np.cumsum(~batch.checking)
        done = np.flatnonzero(enc_count >= need)
        stop = len(batch)
        if fail.size:
            stop = int(fail[0]) + 1
        if done.size and done[0] + 1 < stop:
            stop, fail = int(done[0]) + 1, fail[:0]
        used = slice(0, stop)

        chk = batch.checking[used]
        report.rounds += stop
        report.checking_rounds += int(chk.sum())
        report.encoding_rounds += int((~chk).sum())
        for i in range(n):
            report.link_checked[i] += int(chk.sum())
            report.link_errors[i] += int(batch.check_errors[used][chk, i].sum())
        if chk.any():
            report.max_check_error_rate = max(report.max_check_error_rate, float(rates[used][chk].max()))
        enc = batch.outcomes[used][~chk]
        for row in enc:
            codes = [BellOutcome(int(c)) for c in row]
            report.dealer_key.append(bell_to_dibit(codes[0]))
            if n > 2:
                report.collaborator_key.append(qss_decode(codes[1:])[1])
            else:
                report.collaborator_key.append(bell_to_dibit(codes[1]))
            if int(np.bitwise_xor.reduce(row)) != PHI_PLUS:
                report.ring_violations += 1
        last = batch.first_round + stop
        report.eve.entries.extend(e for e in batch.eve.entries if e.position < last)
        batch.record(transcript, stop)
        if fail.size:
            report.aborted = True
            report.abort_reason = f"checking round {batch.first_round + int(fail[0])} error rate above threshold"
            _t(transcript, "abort", "alice", reason=report.abort_reason)
            break
    return report
