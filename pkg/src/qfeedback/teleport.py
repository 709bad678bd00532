"""Teleportation-based distant feedback.

Alice holds the object output ``S`` and half ``A`` of a singlet; Bob holds
``B``. A Bell measurement on ``S, A`` is sent to Bob over a classical
channel, Bob applies the matching Pauli correction, and a feedback processor
(CNOT onto a control spin followed by a conditional flip) hands the state to
the actuator.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    CNOT_ON_UP,
    IDENTITY,
    PureState,
    QuantumStateError,
    RngStream,
    Unitary,
    X,
    Y,
    Z,
    apply_unitary,
    as_rng,
    canonical_phase,
    fidelity,
    partial_trace,
    tensor,
)

_R2 = 1 / np.sqrt(2)


class BellOutcome(enum.Enum):
    """Bell states of the ``S, A`` pair, as vectors in the ``|s a>`` basis."""

    PsiMinus = (0, _R2, -_R2, 0)
    PsiPlus = (0, _R2, _R2, 0)
    PhiMinus = (_R2, 0, 0, -_R2)
    PhiPlus = (_R2, 0, 0, _R2)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.value, dtype=complex)

    @property
    def index(self) -> int:
        return _OUTCOME_INDEX[self]

    def __repr__(self):
        return f"BellOutcome.{self.name}"


_OUTCOMES = tuple(BellOutcome)
_OUTCOME_INDEX = {o: i for i, o in enumerate(_OUTCOMES)}
BELL_BASIS = np.column_stack([o.vector for o in BellOutcome])
_BELL_ADJOINT = BELL_BASIS.conj().T
_EPR = np.array([0, _R2, -_R2, 0], dtype=complex)

_CORRECTIONS = {
    BellOutcome.PsiMinus: IDENTITY,
    BellOutcome.PsiPlus: Z,
    BellOutcome.PhiMinus: X,
    BellOutcome.PhiPlus: Y,
}


def correction_for(outcome: BellOutcome) -> Unitary:
    return _CORRECTIONS[outcome]


def make_epr() -> PureState:
    """Singlet ``(|up,down> - |down,up>)/sqrt(2)`` on ``A, B``."""
    return PureState(_EPR)


def compose_sab(psi_s: PureState) -> PureState:
    """Object qubit ``S`` joined with the shared pair, register order ``S, A, B``."""
    if psi_s.num_qubits != 1:
        raise QuantumStateError("the object output must be a single qubit")
    return PureState._trusted(np.outer(psi_s.amplitudes, _EPR).reshape(-1), 3)


def bell_branches(state: PureState) -> np.ndarray:
    """Unnormalized ``B`` state for each Bell outcome, rows in ``BellOutcome`` order."""
    if state.num_qubits != 3:
        raise QuantumStateError("Bell measurement expects the 3-qubit S, A, B register")
    # rows of amplitudes.reshape(4, 2) are indexed by (s, a), columns by b
    return _BELL_ADJOINT @ state.amplitudes.reshape(4, 2)


def bell_measure(state: PureState, rng=None, outcome: Optional[BellOutcome] = None):
    """Bell measurement of ``S, A``.

    Samples the outcome with the Born rule, or takes ``outcome`` as given
    (forcing mode). Returns ``(outcome, B state, probability)``.
    """
    branches = bell_branches(state)
    probs = (branches.real**2 + branches.imag**2).sum(axis=1)
    if outcome is None:
        idx = as_rng(rng).choice(probs)
        outcome = _OUTCOMES[idx]
    prob = float(probs[outcome.index])
    if prob < 1e-12:
        raise QuantumStateError(f"forced outcome {outcome.name} has zero probability")
    bob = PureState._trusted(branches[outcome.index] / np.sqrt(prob), 1)
    return outcome, bob, prob


class ClassicalChannel:
    """FIFO link delivering each message ``delay`` cycles after it is sent.

    A message is lost with probability ``drop_probability``; loss is decided
    at send time.
    """

    def __init__(self, delay: int = 0, drop_probability: float = 0.0):
        if int(delay) != delay or delay < 0:
            raise ValueError(f"delay must be a nonnegative integer, got {delay!r}")
        if not 0.0 <= drop_probability <= 1.0:
            raise ValueError(f"drop_probability must lie in [0, 1], got {drop_probability!r}")
        self.delay = int(delay)
        self.drop_probability = float(drop_probability)
        self.queue: deque = deque()

    def send(self, cycle: int, message, rng=None) -> bool:
        """Queue ``message``; returns False if it was dropped."""
        if self.drop_probability > 0 and as_rng(rng).uniform() < self.drop_probability:
            return False
        self.queue.append((cycle, message))
        return True

    def deliver(self, cycle: int) -> list:
        """Pop every ``(send_time, message)`` due at or before ``cycle``, in send order."""
        out = []
        while self.queue and self.queue[0][0] + self.delay <= cycle:
            out.append(self.queue.popleft())
        return out

    def __len__(self):
        return len(self.queue)


@dataclass(frozen=True)
class TeleportReport:
    outcome: BellOutcome
    outcome_probability: float
    bob_state: PureState
    fidelity_to_input: float
    delivered: bool = True
    measured_cycle: int = 0
    report_cycle: int = 0


@dataclass
class TeleportLink:
    """Alice and Bob joined by a channel, with Bob's qubits awaiting correction."""

    channel: ClassicalChannel = field(default_factory=ClassicalChannel)
    _held: dict = field(default_factory=dict, repr=False)

    def send(self, psi_s: PureState, cycle: int, rng=None,
             outcome: Optional[BellOutcome] = None) -> BellOutcome:
        """Alice's side: Bell-measure ``psi_s`` and transmit the result.

        The input register is consumed; only the outcome and Bob's raw qubit
        survive.
        """
        rng = as_rng(rng)
        sab = compose_sab(psi_s)
        outcome, bob_raw, prob = bell_measure(sab, rng, outcome)
        delivered = self.channel.send(cycle, outcome, rng)
        self._held[cycle] = (outcome, prob, bob_raw, psi_s, delivered)
        return outcome

    def receive(self, cycle: int) -> list[TeleportReport]:
        """Bob's side: correct every qubit whose outcome message is due, and
        report lost messages once their delivery time has passed."""
        reports = []
        for sent, outcome in self.channel.deliver(cycle):
            _, prob, bob_raw, psi_s, _ = self._held.pop(sent)
            bob = _corrected(bob_raw, outcome)
            reports.append(TeleportReport(outcome, prob, bob, fidelity(psi_s, bob),
                                          True, sent, cycle))
        for sent in sorted(self._held):
            outcome, prob, bob_raw, psi_s, delivered = self._held[sent]
            if not delivered and sent + self.channel.delay <= cycle:
                del self._held[sent]
                reports.append(TeleportReport(outcome, prob, bob_raw,
                                              fidelity(psi_s, bob_raw), False, sent, cycle))
        reports.sort(key=lambda r: r.measured_cycle)
        return reports


def _corrected(bob_raw: PureState, outcome: BellOutcome) -> PureState:
    return PureState._trusted(correction_for(outcome).matrix @ bob_raw.amplitudes, 1)


def teleport(psi_s: PureState, channel: Optional[ClassicalChannel] = None, rng=None,
             *, cycle: int = 0, outcome: Optional[BellOutcome] = None) -> TeleportReport:
    """Teleport one qubit; the report is issued when the outcome message is due.

    Messages already queued on ``channel`` are left in place.
    """
    if psi_s.num_qubits != 1:
        raise QuantumStateError("teleport expects a single-qubit state")
    channel = channel if channel is not None else ClassicalChannel()
    rng = as_rng(rng)
    outcome, bob_raw, prob = bell_measure(compose_sab(psi_s), rng, outcome)
    due = cycle + channel.delay
    message = object()
    if not channel.send(cycle, message, rng):
        return TeleportReport(outcome, prob, bob_raw, fidelity(psi_s, bob_raw), False,
                              cycle, due)
    channel.queue.remove((cycle, message))
    bob = _corrected(bob_raw, outcome)
    return TeleportReport(outcome, prob, bob, fidelity(psi_s, bob), True, cycle, due)


def feedback_steps(psi_b: PureState) -> tuple[PureState, PureState]:
    """Run the feedback processor on Bob's qubit, returning both stages.

    Stage one adjoins a control spin ``C`` in ``|down>`` and applies a CNOT
    (control ``B``, flip ``C`` when ``B`` is up). Stage two flips ``B`` when
    ``C`` is up. Register order is ``B, C``.
    """
    if psi_b.num_qubits != 1:
        raise QuantumStateError("feedback processor expects a single-qubit state")
    bc = tensor(psi_b, PureState.basis("1"))
    entangled = apply_unitary(bc, CNOT_ON_UP, [0, 1])
    flipped = apply_unitary(entangled, CNOT_ON_UP, [1, 0])
    return entangled, flipped


def feedback_process(psi_b: PureState) -> PureState:
    return feedback_steps(psi_b)[1]


def run_teleport_loop(config, rng: Optional[RngStream] = None):
    """Closed loop: object output is teleported each cycle and fed to the actuator.

    With a delayed channel the actuator acts on stale information, one cycle
    per outcome message.
    """
    from .actuator import actuator_update, has_direction
    from .config import TrajectoryRecord
    from .plant import apply_noise

    config.validate(scenario="teleport")
    rng = rng if rng is not None else RngStream(config.rng_seed)
    link = TeleportLink(ClassicalChannel(config.channel.delay,
                                         config.channel.drop_probability))
    target = config.target_state()
    obj = config.initial_state()
    records = []
    for cycle in range(1, config.cycles + 1):
        obj = apply_noise(obj, config.noise, rng)
        outcome = link.send(obj, cycle, rng)
        applied = False
        for report in link.receive(cycle):
            if not report.delivered:
                continue
            _, processed = feedback_steps(report.bob_state)
            fed_back = partial_trace(processed, [1])
            if has_direction(fed_back):
                obj = apply_unitary(obj, actuator_update(fed_back, target), [0])
                applied = True
        obj = canonical_phase(obj)
        records.append(TrajectoryRecord(
            cycle=cycle,
            fidelity_to_target=fidelity(target, obj),
            bell_outcome=outcome,
            actuator_applied=applied,
        ))
    return records
