import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entswap.adversary import ChannelModel
from entswap.bell import BellOutcome, Dibit
from entswap.protocols import (
    TRANSCRIPT_FIELDS, CapacityError, ConfigError, PhotonSequence, ProtocolConfig, Transcript,
    eavesdrop_check, held_wires, pairs_for_message, qsdc_capacity, run_qsdc_encode_first,
    run_qsdc_two_step, run_qss_round, run_qss_rounds, run_qss_session, sample_size,
)
from entswap.qstate import RegisterBlock, RngStream

PP, PM = BellOutcome.PHI_PLUS, BellOutcome.PHI_MINUS
RUNNERS = [run_qsdc_two_step, run_qsdc_encode_first]


def dibits(text):
    return [Dibit.parse(t) for t in text.split()]


class TestConfig:
    @pytest.mark.parametrize("kwargs,field", [
        ({"n_pairs": 0}, "n_pairs"), ({"sample_fraction": 1.0}, "sample_fraction"),
        ({"check_probability": 1.5}, "check_probability"), ({"error_threshold": 1.0}, "error_threshold"),
        ({"max_rounds": 0}, "max_rounds"),
    ])
    def test_invalid_fields_named(self, kwargs, field):
        with pytest.raises(ConfigError) as exc:
            ProtocolConfig(**kwargs)
        assert exc.value.field == field

    def test_capacity(self):
        assert qsdc_capacity(ProtocolConfig(n_pairs=64, sample_fraction=0.25)) == 48
        assert qsdc_capacity(ProtocolConfig(n_pairs=5, sample_fraction=0.25)) == 3

    @pytest.mark.parametrize("length", [0, 1, 7, 48, 256])
    @pytest.mark.parametrize("frac", [0.1, 0.25, 0.5])
    def test_pairs_for_message_minimal(self, length, frac):
        n = pairs_for_message(length, frac)
        assert n - sample_size(n, frac) >= length
        if n > 2:
            assert (n - 1) - sample_size(n - 1, frac) < length or sample_size(n - 1, frac) < 1


class TestEavesdropCheck:
    def _phi_pairs(self, n):
        block = RegisterBlock(2, n).prepare_bell(0, 1, int(PP))
        rows = np.arange(n)
        return PhotonSequence("S1", block, 0, rows), PhotonSequence("S2", block, 1, rows)

    @pytest.mark.parametrize("fraction", [0.01, 0.25, 0.9])
    def test_ideal_zero_errors(self, fraction, rng):
        s, r = self._phi_pairs(200)
        res = eavesdrop_check(s, r, fraction, rng)
        assert res.error_rate == 0.0
        assert res.checked == sample_size(200, fraction)
        assert len(res.survivors) == 200 - res.checked
        assert not set(res.survivors) & set(res.positions)

    def test_zero_positions_rejected(self, rng):
        s, r = self._phi_pairs(10)
        with pytest.raises(ValueError):
            eavesdrop_check(s, r, 0.0, rng)
        with pytest.raises(ValueError):
            eavesdrop_check(s, r, 0.5, rng, positions=[])

    def test_mismatched_sequences_rejected(self, rng):
        s, r = self._phi_pairs(10)
        with pytest.raises(ValueError):
            eavesdrop_check(s, PhotonSequence("S2", r.block, 1, r.positions[:5]), 0.5, rng)


class TestQsdcTwoStep:
    def test_ideal_round_trip(self):
        msg = dibits("00 01 10 11")
        report = run_qsdc_two_step(msg, ProtocolConfig(n_pairs=16))
        assert not report.aborted
        assert report.recovered == msg and report.agreement is True

    def test_empty_message(self):
        report = run_qsdc_two_step([], ProtocolConfig(n_pairs=8))
        assert not report.aborted and report.recovered == [] and report.agreement is True

    def test_capacity_two_bits_per_retained_pair(self):
        cfg = ProtocolConfig(n_pairs=100, sample_fraction=0.3, seed=3)
        msg = list(RngStream(1).integers(0, 4, qsdc_capacity(cfg)))
        report = run_qsdc_two_step(msg, cfg)
        assert report.retained_pairs == 70
        assert 2 * len(report.recovered) / report.retained_pairs == 2

    def test_message_too_long(self):
        with pytest.raises(CapacityError):
            run_qsdc_two_step([0] * 49, ProtocolConfig(n_pairs=64))

    def test_intercept_resend_aborts(self):
        cfg = ProtocolConfig(n_pairs=200, sample_fraction=0.5, error_threshold=0.02,
                             channel=ChannelModel.intercept_resend("z"))
        rng = RngStream(77)
        aborted = [run_qsdc_two_step([], cfg, rng.split(i)).aborted for i in range(300)]
        # P(no abort) <= (3/4)^100 per session, so even one survivor in 300 would be a bug.
        assert all(aborted)

    def test_abort_report_has_no_agreement(self):
        cfg = ProtocolConfig(n_pairs=64, channel=ChannelModel.intercept_resend("zx"))
        report = run_qsdc_two_step([1, 2], cfg)
        assert report.aborted and report.agreement is None and report.recovered is None

    def test_same_positions_checked_both_ways(self):
        report = run_qsdc_two_step([], ProtocolConfig(n_pairs=40))
        s2, s4 = report.checks
        assert (s2.sequence, s4.sequence) == ("S2", "S4")
        np.testing.assert_array_equal(s2.positions, s4.positions)


class TestQsdcEncodeFirst:
    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.integers(0, 3), max_size=40), st.integers(0, 2**31))
    def test_ideal_any_message(self, msg, seed):
        cfg = ProtocolConfig(n_pairs=pairs_for_message(len(msg), 0.25), seed=seed)
        report = run_qsdc_encode_first(msg, cfg)
        assert not report.aborted
        assert report.check_errors == 0
        assert report.recovered == [Dibit.from_int(v) for v in msg]

    def test_zero_decoys_rejected(self):
        with pytest.raises(ConfigError):
            run_qsdc_encode_first([0], ProtocolConfig(n_pairs=10, sample_fraction=0.0))

    def test_fifty_decoys_detect_eve(self):
        cfg = ProtocolConfig(n_pairs=200, sample_fraction=0.25, error_threshold=0.0,
                             channel=ChannelModel.intercept_resend("zx", links=[0]))
        rng = RngStream(88)
        reports = [run_qsdc_encode_first([3] * 10, cfg, rng.split(i)) for i in range(300)]
        assert all(r.checks[0].checked == 50 for r in reports)
        # 1 - (3/4)^50 per session: 300 sessions without a miss is expected.
        assert all(r.aborted for r in reports)

    def test_decoys_are_phi_plus(self):
        t = Transcript()
        report = run_qsdc_encode_first([1, 1, 1], ProtocolConfig(n_pairs=12), transcript=t)
        assert t.where("prepare")[0].payload["decoys"] == 3
        assert report.checks[0].errors == 0


class TestTranscripts:
    @pytest.mark.parametrize("runner", RUNNERS)
    def test_publication_after_check_confirm(self, runner):
        t = Transcript()
        runner([0, 1, 2, 3], ProtocolConfig(n_pairs=16), transcript=t)
        confirms = [e.seq for e in t.where("check-confirm")]
        publish = [e.seq for e in t.where("publish")]
        assert len(confirms) == 2 and len(publish) == 1
        assert all(c < publish[0] for c in confirms)
        assert all(e.payload["passed"] for e in t.where("check-confirm"))
        assert [e.seq for e in t] == list(range(len(t)))

    @pytest.mark.parametrize("runner", RUNNERS)
    def test_abort_never_publishes(self, runner):
        t = Transcript()
        runner([0], ProtocolConfig(n_pairs=64, channel=ChannelModel.intercept_resend("z")), transcript=t)
        assert t.where("abort") and not t.where("publish")

    def test_two_step_step_order(self):
        t = Transcript()
        run_qsdc_two_step([2], ProtocolConfig(n_pairs=4), transcript=t)
        assert t.steps() == ["prepare", "prepare", "transmit", "transmit", "check-positions",
                             "check", "check-reply", "check-confirm", "check", "check-reply", "check-confirm",
                             "encode", "bell-measure", "publish", "bell-measure", "decode"]

    def test_jsonl_round_trip(self):
        t = Transcript()
        run_qss_session(3, 4, ProtocolConfig(seed=1), transcript=t)
        text = t.to_jsonl()
        for line in text.splitlines():
            assert tuple(json.loads(line)) == TRANSCRIPT_FIELDS
        back = Transcript.from_jsonl(text)
        assert back.to_jsonl() == text


class TestQssRounds:
    def test_example_outcome(self):
        batch = run_qss_rounds(3, 2000, ProtocolConfig(check_probability=0.0), RngStream(4))
        rows = (batch.outcomes[:, 1] == PP) & (batch.outcomes[:, 2] == PM)
        assert rows.any()
        assert np.all(batch.outcomes[rows, 0] == PM)
        r = batch.round(int(np.flatnonzero(rows)[0]))
        assert r.reconstructed is PM and str(r.key) == "01" and r.dealer_key == r.key

    @pytest.mark.parametrize("n", [2, 3, 4, 6])
    def test_ring_invariant(self, n):
        batch = run_qss_rounds(n, 500, ProtocolConfig(check_probability=0.0), RngStream(n))
        assert np.all(np.bitwise_xor.reduce(batch.outcomes, axis=1) == PP)

    def test_held_wires_cover_register(self):
        for n in range(2, 9):
            wires = sorted(w for i in range(n) for w in held_wires(i, n))
            assert wires == list(range(2 * n))

    def test_mode_frequency(self):
        m = 10_000
        for p in (0.2, 0.5, 0.9):
            batch = run_qss_rounds(3, m, ProtocolConfig(check_probability=p), RngStream(int(p * 10)))
            assert abs(batch.checking.mean() - p) <= 3 * np.sqrt(p * (1 - p) / m)

    def test_checking_rounds_ideal_agree(self):
        batch = run_qss_rounds(4, 1000, ProtocolConfig(check_probability=1.0), RngStream(2))
        assert not batch.check_errors.any()
        np.testing.assert_array_equal(batch.check_bits[..., 0], batch.check_bits[..., 1])

    def test_announcers(self):
        batch = run_qss_rounds(4, 400, ProtocolConfig(check_probability=1.0), RngStream(3))
        ann = batch.check_announcer
        assert np.all(ann[:, 0] == 1) and np.all(ann[:, 3] == 3)
        for i in (1, 2):
            assert set(np.unique(ann[:, i])) == {i, i + 1}

    def test_single_round_api(self):
        t = Transcript()
        r = run_qss_round(3, ProtocolConfig(check_probability=0.0), RngStream(0), index=5, transcript=t)
        assert r.index == 5 and not r.checking and len(r.outcomes) == 3
        assert t.where("key")[0].payload["round"] == 5

    def test_attacked_link_detected_at_quarter(self):
        m = 10_000
        cfg = ProtocolConfig(check_probability=1.0, channel=ChannelModel.intercept_resend("zx", links=[1]))
        batch = run_qss_rounds(3, m, cfg, RngStream(6))
        rate = batch.check_errors[:, 1].mean()
        assert abs(rate - 0.25) <= 3 * np.sqrt(0.1875 / m)
        assert not batch.check_errors[:, [0, 2]].any()

    @pytest.mark.parametrize("n", [1, 13])
    def test_party_bounds(self, n):
        with pytest.raises(ConfigError):
            run_qss_rounds(n, 1, ProtocolConfig())


class TestQssSession:
    def test_ideal_agreement(self):
        report = run_qss_session(3, 64, ProtocolConfig(seed=5))
        assert not report.aborted and report.completed and report.agreement
        assert len(report.dealer_key) == 64 and report.encoding_rounds == 64
        assert report.rounds == report.checking_rounds + report.encoding_rounds
        assert report.ring_violations == 0

    def test_mean_rounds_negative_binomial(self):
        rng = RngStream(31)
        sessions = 200
        rounds = [run_qss_session(3, 64, ProtocolConfig(), rng.split(i)).rounds for i in range(sessions)]
        # rounds to 64 successes at 1/2: mean 128, variance 64 * 0.5 / 0.25 = 128
        assert abs(np.mean(rounds) - 128) <= 3 * np.sqrt(128 / sessions)

    def test_attacked_link_aborts(self):
        cfg = ProtocolConfig(channel=ChannelModel.intercept_resend("zx", links=[1]))
        rng = RngStream(13)
        reports = [run_qss_session(3, 64, cfg, rng.split(i)) for i in range(50)]
        assert all(r.aborted for r in reports)
        assert all(r.agreement is None for r in reports)

    def test_all_checking_yields_no_key(self):
        report = run_qss_session(3, 8, ProtocolConfig(check_probability=1.0, max_rounds=500))
        assert not report.aborted and not report.completed
        assert report.rounds == 500 and report.dealer_key == []

    @settings(max_examples=20, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 40), st.floats(0.0, 0.9), st.integers(0, 2**31))
    def test_abort_soundness(self, n, key, p, seed):
        report = run_qss_session(n, key, ProtocolConfig(check_probability=p, error_threshold=0.0, seed=seed))
        assert not report.aborted and report.agreement


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 120), st.floats(0.05, 0.6), st.integers(0, 2**31))
def test_qsdc_abort_soundness(n, frac, seed):
    cfg = ProtocolConfig(n_pairs=n, sample_fraction=frac, error_threshold=0.0, seed=seed)
    if sample_size(n, frac) >= n:
        return
    for runner in RUNNERS:
        msg = list(RngStream(seed).integers(0, 4, qsdc_capacity(cfg)))
        report = runner(msg, cfg)
        assert not report.aborted and report.agreement
