"""Simulator for teleportation-based and cloning-based quantum feedback control."""
from .actuator import actuator_update
from .cloning import (
    CloneBatch,
    SymmetricProjector,
    clone,
    no_cloning_witness,
    optimal_fidelity,
    split_copies,
    symmetric_projector,
)
from .config import LoopConfig, TrajectoryRecord
from .control import export_trajectory, load_trajectory, run_clone_loop, run_teleport_scenario
from .core import (
    BlochVector,
    DensityOperator,
    PureState,
    RngStream,
    Unitary,
    apply_unitary,
    bloch_vector,
    canonical_phase,
    fidelity,
    measure_projective,
    partial_trace,
    tensor,
)
from .recognition import GateSignal, RecognitionReport, StateRecognizer, gate_signal
from .teleport import (
    BellOutcome,
    ClassicalChannel,
    TeleportReport,
    bell_measure,
    compose_sab,
    correction_for,
    feedback_process,
    make_epr,
    run_teleport_loop,
    teleport,
)

__version__ = "0.1.0"
