"""Simulator for entanglement-swapping secure direct communication and ring secret sharing."""
from ._kernels import BACKEND
from .adversary import ChannelModel, EveRecord, EveStrategy, detection_probability, transmit
from .bell import (
    BellOutcome,
    Dibit,
    PauliOp,
    bell_to_dibit,
    decode_qsdc,
    dibit_to_pauli,
    pauli_encode,
    pauli_to_dibit,
    qss_decode,
    swap_distribution,
)
from .harness import ExperimentSpec, run_trials, verify_tables, wilson_interval
from .protocols import (
    ProtocolConfig,
    Transcript,
    eavesdrop_check,
    run_qsdc_encode_first,
    run_qsdc_two_step,
    run_qss_round,
    run_qss_rounds,
    run_qss_session,
)
from .qstate import MeasurementBasis, RegisterBlock, RngStream, StateVector

__version__ = "0.1.0"
