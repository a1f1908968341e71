import itertools

import pytest
from hypothesis import given, strategies as st

from entswap.bell import (
    ALL_DIBITS, QSDC_RECOVERY_TABLE, QSS_KEY_TABLE, BellOutcome, Dibit, PauliOp,
    bell_to_dibit, bell_to_pauli, decode_qsdc, dibit_to_bell, dibit_to_pauli, pauli_encode,
    pauli_to_dibit, qsdc_table_from_algebra, qss_decode, qss_table_from_algebra,
    render_qsdc_table, render_qss_table, swap_distribution, xor_all,
)
from entswap.exhaustive import (
    pauli_action, qsdc_table_from_simulation, qss_joint_distribution, qss_table_from_simulation,
    swap_distribution_sim,
)
from entswap.qstate import RngStream, bell_pair_register

PP, PM, SP, SM = BellOutcome.PHI_PLUS, BellOutcome.PHI_MINUS, BellOutcome.PSI_PLUS, BellOutcome.PSI_MINUS
outcomes = st.sampled_from(list(BellOutcome))


class TestEncoding:
    def test_canonical_bits(self):
        assert [(b.flip, b.phase) for b in (PP, PM, SP, SM)] == [(0, 0), (0, 1), (1, 0), (1, 1)]

    @pytest.mark.parametrize("b", list(BellOutcome))
    def test_round_trip(self, b):
        assert BellOutcome.from_bits(b.flip, b.phase) is b
        assert BellOutcome.parse(b.label) is b
        assert dibit_to_bell(bell_to_dibit(b)) is b
        assert pauli_encode(bell_to_pauli(b)) is b

    def test_parse_greek(self):
        assert BellOutcome.parse("ψ-") is SM and BellOutcome.parse("φ+") is PP

    @given(outcomes, outcomes, outcomes)
    def test_klein_group(self, a, b, c):
        assert a ^ a is PP
        assert a ^ PP is a
        assert (a ^ b) ^ c == a ^ (b ^ c)
        assert a ^ b == b ^ a
        assert (a ^ b).flip == a.flip ^ b.flip and (a ^ b).phase == a.phase ^ b.phase

    @pytest.mark.parametrize("op,expected", [(PauliOp.I, PP), (PauliOp.X, SP), (PauliOp.Z, PM), (PauliOp.IY, SM)])
    def test_pauli_encode(self, op, expected):
        assert pauli_encode(op) is expected

    @pytest.mark.parametrize("op", list(PauliOp))
    def test_pauli_encode_matches_engine(self, op):
        assert pauli_encode(op) is pauli_action(op)

    def test_dibit_pauli_examples(self):
        assert dibit_to_pauli(Dibit.parse("00")) is PauliOp.I
        assert dibit_to_pauli(Dibit.parse("10")) is PauliOp.IY

    @pytest.mark.parametrize("d", ALL_DIBITS)
    def test_dibit_pauli_bijection(self, d):
        assert pauli_to_dibit(dibit_to_pauli(d)) == d

    def test_bell_to_dibit_examples(self):
        assert str(bell_to_dibit(PP)) == "00"
        assert str(bell_to_dibit(SM)) == "11"

    def test_dibit_parse_rejects(self):
        with pytest.raises(ValueError):
            Dibit.parse("2")


class TestSwapDistribution:
    def test_phi_phi(self):
        dist = swap_distribution(PP, PP)
        assert set(dist.support()) == {(PP, PP), (PM, PM), (SP, SP), (SM, SM)}
        assert all(dist[k] == 0.25 for k in dist.support())

    def test_psi_plus_phi_plus(self):
        dist = swap_distribution(SP, PP)
        assert set(dist.support()) == {(PP, SP), (PM, SM), (SP, PP), (SM, PM)}

    @given(outcomes, outcomes)
    def test_xor_law(self, left, right):
        dist = swap_distribution(left, right)
        assert dist.total() == pytest.approx(1.0, abs=1e-12)
        support = dist.support()
        assert len(support) == 4
        for a, b in support:
            assert a ^ b == left ^ right
            assert dist[(a, b)] == 0.25

    @pytest.mark.parametrize("left,right", list(itertools.product(BellOutcome, repeat=2)))
    def test_matches_state_vector(self, left, right):
        algebra = swap_distribution(left, right)
        sim = swap_distribution_sim(left, right)
        for key, p in sim.items():
            assert algebra[key] == pytest.approx(p, abs=1e-9)


class TestDecode:
    @pytest.mark.parametrize("a,b,d", [(SM, PM, "01"), (PP, PP, "00"), (PM, SP, "10")])
    def test_qsdc_examples(self, a, b, d):
        assert str(decode_qsdc(a, b)) == d

    def test_qsdc_totality_by_simulation(self):
        """Encode each dibit on photon 1, swap, and decode every sender branch."""
        for d, rows in qsdc_table_from_simulation().items():
            assert len(rows) == 4
            for a, b in rows:
                assert decode_qsdc(a, b) == d

    def test_qsdc_totality_sampled(self):
        rng = RngStream(5)
        for d in ALL_DIBITS:
            for _ in range(25):
                state = bell_pair_register([PP, PP])
                state.apply_pauli(0, int(dibit_to_pauli(d)))
                a = BellOutcome(int(state.measure_bell(0, 3, rng)[0]))
                b = BellOutcome(int(state.measure_bell(1, 2, rng)[0]))
                assert decode_qsdc(a, b) == d

    @pytest.mark.parametrize("collab,alice,key", [([PP, PM], PM, "01"), ([SP, SP], PP, "00")])
    def test_qss_examples(self, collab, alice, key):
        a, k = qss_decode(collab)
        assert a is alice and str(k) == key

    @pytest.mark.parametrize("n", [2, 3, 7, 20])
    def test_qss_identity_chain(self, n):
        assert qss_decode([PP] * n) == (PP, Dibit(0, 0))

    def test_qss_needs_two(self):
        with pytest.raises(ValueError):
            qss_decode([PP])


class TestRingInvariant:
    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_exhaustive(self, n):
        dist = qss_joint_distribution(n)
        assert sum(dist.values()) == pytest.approx(1.0, abs=1e-9)
        assert len(dist) == 4 ** (n - 1)
        for branch, p in dist.items():
            assert xor_all(branch) is PP
            assert p == pytest.approx(4.0 ** -(n - 1), abs=1e-12)


class TestTables:
    def test_qsdc_reference_matches_algebra_and_simulation(self):
        ref = render_qsdc_table(QSDC_RECOVERY_TABLE)
        assert render_qsdc_table(qsdc_table_from_algebra()) == ref
        assert render_qsdc_table(qsdc_table_from_simulation()) == ref

    def test_qss_reference_matches_algebra_and_simulation(self):
        ref = render_qss_table(QSS_KEY_TABLE)
        assert render_qss_table(qss_table_from_algebra()) == ref
        assert render_qss_table(qss_table_from_simulation()) == ref

    def test_every_cell_present_once(self):
        cells = [c for rows in QSDC_RECOVERY_TABLE.values() for c in rows]
        assert sorted(cells) == sorted(itertools.product(BellOutcome, repeat=2))
        cells = [c for rows, _ in QSS_KEY_TABLE.values() for c in rows]
        assert sorted(cells) == sorted(itertools.product(BellOutcome, repeat=2))

    def test_rendering_is_order_insensitive(self):
        shuffled = {d: list(reversed(rows)) for d, rows in reversed(list(QSDC_RECOVERY_TABLE.items()))}
        assert render_qsdc_table(shuffled) == render_qsdc_table(QSDC_RECOVERY_TABLE)
