"""Trial runner, aggregate statistics, table verification and report output."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping

import numpy as np

from . import bell, exhaustive
from .adversary import ChannelModel, detection_probability
from .bell import BellOutcome, Dibit
from .protocols import (
    DEFAULT_SEED,
    ConfigError,
    ProtocolConfig,
    Transcript,
    pairs_for_message,
    qsdc_capacity,
    run_qsdc_encode_first,
    run_qsdc_two_step,
    run_qss_session,
)
from .qstate import RngStream, derive_seed

PROTOCOLS = ("qsdc-two-step", "qsdc-encode-first", "qss")
FORMATS = ("json", "csv")
DEFAULT_TRIALS = 1000
DEFAULT_MESSAGE_DIBITS = 64
_Z95 = 1.959963984540054


class SpecError(ConfigError):
    """Invalid experiment specification."""


def wilson_interval(successes: int, n: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion. ``(0, 1)`` when ``n == 0``."""
    if n == 0:
        return 0.0, 1.0
    phat = successes / n
    denom = 1.0 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return lo, hi


def message_from_hex(text: str) -> list[Dibit]:
    """Each hex digit becomes two dibits, most significant first."""
    t = text.strip().lower().removeprefix("0x")
    try:
        nibbles = [int(c, 16) for c in t]
    except ValueError:
        raise SpecError("message_hex", f"not a hex string: {text!r}") from None
    out = []
    for v in nibbles:
        out += [Dibit.from_int(v >> 2), Dibit.from_int(v & 3)]
    return out


@dataclass(frozen=True)
class ExperimentSpec:
    protocol: str = "qsdc-two-step"
    trials: int = DEFAULT_TRIALS
    n_pairs: int | None = None
    sample_fraction: float = 0.25
    check_probability: float = 0.5
    error_threshold: float = 0.02
    attack: str = "none"
    links: tuple[int, ...] | None = None
    seed: int = DEFAULT_SEED
    n_parties: int = 3
    message_hex: str | None = None
    message_dibits: int | None = None
    key_dibits: int = 64
    max_rounds: int = 100_000
    output_format: str = "json"

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise SpecError("protocol", f"must be one of {', '.join(PROTOCOLS)}, got {self.protocol!r}")
        if self.trials < 1:
            raise SpecError("trials", f"must be >= 1, got {self.trials}")
        if self.output_format not in FORMATS:
            raise SpecError("output_format", f"must be json or csv, got {self.output_format!r}")
        if self.links is not None:
            object.__setattr__(self, "links", tuple(sorted(set(int(x) for x in self.links))))
            if any(x < 0 for x in self.links):
                raise SpecError("links", "link indices must be >= 0")
        try:
            self.channel()
        except ValueError as exc:
            raise SpecError("attack", str(exc)) from None
        if self.is_qsdc:
            if self.message_hex is not None and self.message_dibits is not None:
                raise SpecError("message_hex", "give either a hex message or a message length, not both")
            if self.message_hex is not None:
                message_from_hex(self.message_hex)
            if self.message_dibits is not None and self.message_dibits < 0:
                raise SpecError("message_dibits", f"must be >= 0, got {self.message_dibits}")
            if not 0.0 < self.sample_fraction < 1.0:
                raise SpecError("sample_fraction", f"must be in (0, 1), got {self.sample_fraction}")
            n_links = 2
        else:
            if not 2 <= self.n_parties <= 12:
                raise SpecError("n_parties", f"must be in 2..12, got {self.n_parties}")
            if self.key_dibits < 0:
                raise SpecError("key_dibits", f"must be >= 0, got {self.key_dibits}")
            n_links = self.n_parties
        if self.links is not None and any(x >= n_links for x in self.links):
            raise SpecError("links", f"this protocol has links 0..{n_links - 1}")
        try:
            cfg = self.config(0)
        except ConfigError as exc:
            raise SpecError(exc.field, str(exc).split(": ", 1)[-1]) from None
        if self.is_qsdc:
            cap = qsdc_capacity(cfg)
            if self.message_length() > cap:
                raise SpecError("n_pairs", f"{cfg.n_pairs} pairs carry at most {cap} dibits, "
                                           f"message has {self.message_length()}")

    @property
    def is_qsdc(self) -> bool:
        return self.protocol.startswith("qsdc")

    def channel(self) -> ChannelModel:
        return ChannelModel.parse(self.attack, self.links)

    def message_length(self) -> int:
        if self.message_hex is not None:
            return len(message_from_hex(self.message_hex))
        return DEFAULT_MESSAGE_DIBITS if self.message_dibits is None else self.message_dibits

    def resolved_pairs(self) -> int:
        if self.n_pairs is not None:
            return self.n_pairs
        return pairs_for_message(self.message_length(), self.sample_fraction) if self.is_qsdc else 1

    def config(self, seed: int) -> ProtocolConfig:
        return ProtocolConfig(
            n_pairs=self.resolved_pairs(),
            sample_fraction=self.sample_fraction if self.is_qsdc else 0.0,
            check_probability=self.check_probability,
            error_threshold=self.error_threshold,
            channel=self.channel(),
            seed=seed,
            max_rounds=self.max_rounds,
        )

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["links"] = None if self.links is None else list(self.links)
        d["n_pairs"] = self.resolved_pairs() if self.is_qsdc else None
        return d


TRIAL_FIELDS = ("trial", "seed", "aborted", "agreement", "checked_pairs", "detected_errors",
                "observed_error_rate", "rounds", "delivered_dibits")


@dataclass
class AggregateStats:
    trials: int
    detection_rate: float
    detection_interval: list[float]
    analytic_detection: float
    checked_pairs: int
    detected_errors: int
    abort_rate: float
    agreement_rate: float | None
    mean_error_rate: float
    mean_rounds_per_dibit: float | None
    wall_time_s: float | None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


STATS_FIELDS = tuple(AggregateStats.__dataclass_fields__)


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    stats: AggregateStats
    per_trial: list[dict[str, Any]]
    transcripts: list[Transcript] = field(default_factory=list)

    def to_dict(self, per_trial: bool = False) -> dict[str, Any]:
        out = {"spec": self.spec.to_dict(), "stats": self.stats.to_dict()}
        if per_trial:
            out["per_trial"] = self.per_trial
        return out

    def to_json(self, per_trial: bool = False) -> str:
        return json.dumps(self.to_dict(per_trial), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=TRIAL_FIELDS, lineterminator="\n")
        w.writeheader()
        for row in self.per_trial:
            w.writerow({k: ("" if row[k] is None else row[k]) for k in TRIAL_FIELDS})
        return buf.getvalue()

    def render(self, per_trial: bool = False) -> str:
        return self.to_csv() if self.spec.output_format == "csv" else self.to_json(per_trial)

    def transcript_jsonl(self) -> str:
        return "".join(t.to_jsonl(trial=i) for i, t in enumerate(self.transcripts))


def _measured_links(channel: ChannelModel, n_links: int) -> list[int]:
    # detection is measured on attacked links; with no attack, on all of them
    hit = [i for i in range(n_links) if channel.applies_to(i)]
    return hit or list(range(n_links))


def run_trial(spec: ExperimentSpec, index: int, transcript: Transcript | None = None) -> dict[str, Any]:
    seed = derive_seed(spec.seed, index)
    rng = RngStream(seed)
    cfg = spec.config(seed)
    if spec.is_qsdc:
        if spec.message_hex is not None:
            message = message_from_hex(spec.message_hex)
        else:
            message = [Dibit.from_int(int(v)) for v in rng.integers(0, 4, size=spec.message_length())]
        run = run_qsdc_two_step if spec.protocol == "qsdc-two-step" else run_qsdc_encode_first
        rep = run(message, cfg, rng, transcript=transcript)
        links = _measured_links(cfg.channel, 2)
        rounds = 1
        delivered = 0 if rep.aborted else len(rep.recovered)
        observed = rep.check_errors / rep.checked_pairs
    else:
        rep = run_qss_session(spec.n_parties, spec.key_dibits, cfg, rng, transcript=transcript)
        links = _measured_links(cfg.channel, spec.n_parties)
        rounds = rep.rounds
        delivered = len(rep.dealer_key)
        observed = rep.observed_error_rate
    counts = rep.link_counts()
    return {
        "trial": index,
        "seed": seed,
        "aborted": rep.aborted,
        "agreement": rep.agreement,
        "checked_pairs": sum(counts[i][0] for i in links),
        "detected_errors": sum(counts[i][1] for i in links),
        "observed_error_rate": observed,
        "rounds": rounds,
        "delivered_dibits": delivered,
    }


def aggregate(spec: ExperimentSpec, rows: list[Mapping[str, Any]], wall_time: float | None = None) -> AggregateStats:
    checked = sum(r["checked_pairs"] for r in rows)
    errors = sum(r["detected_errors"] for r in rows)
    lo, hi = wilson_interval(errors, checked)
    ok = [r for r in rows if not r["aborted"]]
    agreement = sum(1 for r in ok if r["agreement"]) / len(ok) if ok else None
    per_dibit = None
    if not spec.is_qsdc:
        dibits = sum(r["delivered_dibits"] for r in rows)
        per_dibit = sum(r["rounds"] for r in rows) / dibits if dibits else None
    return AggregateStats(
        trials=len(rows),
        detection_rate=errors / checked if checked else 0.0,
        detection_interval=[lo, hi],
        analytic_detection=detection_probability(spec.channel()),
        checked_pairs=checked,
        detected_errors=errors,
        abort_rate=sum(1 for r in rows if r["aborted"]) / len(rows),
        agreement_rate=agreement,
        mean_error_rate=float(np.mean([r["observed_error_rate"] for r in rows])),
        mean_rounds_per_dibit=per_dibit,
        wall_time_s=wall_time,
    )


def run_trials(spec: ExperimentSpec, *, keep_transcripts: bool = False, timing: bool = False) -> ExperimentResult:
    """Run ``spec.trials`` independent sessions; trial ``i`` is seeded from ``(spec.seed, i)``.

    Output is a pure function of ``spec`` unless ``timing`` is set, which
    fills ``wall_time_s``.
    """
    t0 = time.perf_counter()
    rows, transcripts = [], []
    for i in range(spec.trials):
        tr = Transcript() if keep_transcripts else None
        rows.append(run_trial(spec, i, tr))
        if tr is not None:
            transcripts.append(tr)
    wall = time.perf_counter() - t0 if timing else None
    return ExperimentResult(spec, aggregate(spec, rows, wall), rows, transcripts)


# -- report schema ---------------------------------------------------------------

_NUM = {"type": "number"}
_NUM_OR_NULL = {"type": ["number", "null"]}
_RATE = {"type": "number", "minimum": 0, "maximum": 1}

REPORT_SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "required": ["spec", "stats"],
    "properties": {
        "spec": {
            "type": "object",
            "additionalProperties": False,
            "required": list(ExperimentSpec.__dataclass_fields__),
            "properties": {name: {} for name in ExperimentSpec.__dataclass_fields__},
        },
        "stats": {
            "type": "object",
            "additionalProperties": False,
            "required": list(STATS_FIELDS),
            "properties": {
                "trials": {"type": "integer", "minimum": 1},
                "detection_rate": _RATE,
                "detection_interval": {"type": "array", "items": _RATE, "minItems": 2, "maxItems": 2},
                "analytic_detection": _RATE,
                "checked_pairs": {"type": "integer", "minimum": 0},
                "detected_errors": {"type": "integer", "minimum": 0},
                "abort_rate": _RATE,
                "agreement_rate": {"anyOf": [_RATE, {"type": "null"}]},
                "mean_error_rate": _RATE,
                "mean_rounds_per_dibit": _NUM_OR_NULL,
                "wall_time_s": _NUM_OR_NULL,
            },
        },
        "per_trial": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": list(TRIAL_FIELDS),
                "properties": {name: {} for name in TRIAL_FIELDS},
            },
        },
    },
}


# -- table verification -----------------------------------------------------------

@dataclass
class CellCheck:
    table: str
    cell: str
    reference: str | None
    algebra: str
    simulation: str

    @property
    def match(self) -> bool:
        return self.reference == self.algebra == self.simulation


@dataclass
class TableReport:
    cells: list[CellCheck]
    renderings: dict[str, dict[str, str]]

    @property
    def ok(self) -> bool:
        return all(c.match for c in self.cells) and all(
            len(set(r.values())) == 1 for r in self.renderings.values())

    def mismatches(self) -> list[CellCheck]:
        return [c for c in self.cells if not c.match]

    def summary(self, table: str) -> tuple[int, int]:
        cells = [c for c in self.cells if c.table == table]
        return sum(c.match for c in cells), len(cells)

    def to_dict(self) -> dict[str, Any]:
        return {"ok": self.ok,
                "cells": [dict(asdict(c), match=c.match) for c in self.cells]}

    def render(self) -> str:
        out = []
        for name, r in self.renderings.items():
            good, total = self.summary(name)
            out.append(f"{name}: {good}/{total} cells match")
            out.append(r["reference"])
        for c in self.mismatches():
            out.append(f"MISMATCH {c.table} {c.cell}: reference={c.reference} "
                       f"algebra={c.algebra} simulation={c.simulation}")
        return "\n".join(out)


def _qsdc_cells(table) -> dict[tuple[BellOutcome, BellOutcome], str]:
    return {cell: str(d) for d, cells in table.items() for cell in cells}


def _qss_cells(table) -> dict[tuple[BellOutcome, BellOutcome], str]:
    return {cell: f"{alice.label}/{key}" for alice, (cells, key) in table.items() for cell in cells}


def verify_tables(qsdc_reference=None, qss_reference=None) -> TableReport:
    """Regenerate both decoding tables by label algebra and by exhaustive simulation.

    References default to the hard-coded reference tables; pass altered
    copies to exercise the mismatch path.
    """
    q1_ref = bell.QSDC_RECOVERY_TABLE if qsdc_reference is None else qsdc_reference
    q2_ref = bell.QSS_KEY_TABLE if qss_reference is None else qss_reference
    q1_alg, q1_sim = bell.qsdc_table_from_algebra(), exhaustive.qsdc_table_from_simulation()
    q2_alg, q2_sim = bell.qss_table_from_algebra(), exhaustive.qss_table_from_simulation()

    cells = []
    for name, ref, alg, sim, flatten in (
        ("qsdc-recovery", q1_ref, q1_alg, q1_sim, _qsdc_cells),
        ("qss-key", q2_ref, q2_alg, q2_sim, _qss_cells),
    ):
        r, a, s = flatten(ref), flatten(alg), flatten(sim)
        for x in BellOutcome:
            for y in BellOutcome:
                cells.append(CellCheck(name, f"{x.label},{y.label}", r.get((x, y)), a[(x, y)], s[(x, y)]))
    renderings = {
        "qsdc-recovery": {"reference": bell.render_qsdc_table(q1_ref),
                          "algebra": bell.render_qsdc_table(q1_alg),
                          "simulation": bell.render_qsdc_table(q1_sim)},
        "qss-key": {"reference": bell.render_qss_table(q2_ref),
                    "algebra": bell.render_qss_table(q2_alg),
                    "simulation": bell.render_qss_table(q2_sim)},
    }
    return TableReport(cells, renderings)
