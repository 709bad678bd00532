"""Optimal universal 1 -> K qubit cloner.

The machine is realized in its projector form: the input is padded with
``K - 1`` maximally mixed blank qubits and projected onto the symmetric
subspace, ``rho_out ~ S (|psi><psi| x (I/2)^(K-1)) S``. Every reduced copy is
the same depolarized version of the input, with Bloch shrink ``(K+2)/(3K)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import (
    DensityOperator,
    PureState,
    QuantumStateError,
    as_rng,
    fidelity,
    haar_random_state,
    partial_trace,
)

MAX_CLONES = 8


def optimal_fidelity(k: int) -> float:
    """Known optimum ``(2K+1)/(3K)`` for universal 1 -> K qubit cloning."""
    return (2 * k + 1) / (3 * k)


def shrink_factor(k: int) -> float:
    return (k + 2) / (3 * k)


def permutation_operator(perm, n: int) -> np.ndarray:
    """Matrix moving the qubit at position ``i`` to position ``perm[i]``."""
    d = 2**n
    idx = np.arange(d)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))) & 1
    out_bits = np.empty_like(bits)
    out_bits[:, list(perm)] = bits
    dest = out_bits @ (1 << (n - 1 - np.arange(n)))
    op = np.zeros((d, d))
    op[dest, idx] = 1.0
    return op


@lru_cache(maxsize=None)
def _projector_matrix(n: int) -> np.ndarray:
    d = 2**n
    idx = np.arange(d)
    weights = 1 << (n - 1 - np.arange(n))
    bits = (idx[:, None] >> (n - 1 - np.arange(n))) & 1
    counts = np.zeros(d * d, dtype=np.int64)
    for perm in itertools.permutations(range(n)):
        dest = bits[:, list(perm)] @ weights
        counts += np.bincount(dest * d + idx, minlength=d * d)
    mat = counts.reshape(d, d) / math.factorial(n)
    mat.setflags(write=False)
    return mat


@dataclass(frozen=True)
class SymmetricProjector:
    n: int
    matrix: np.ndarray

    @property
    def rank(self) -> int:
        return self.n + 1


def symmetric_projector(n: int) -> SymmetricProjector:
    """Average of all ``n!`` qubit-permutation operators on ``n`` qubits."""
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_CLONES:
        raise ValueError(f"symmetric projector supports 1 <= n <= {MAX_CLONES}, got {n!r}")
    return SymmetricProjector(int(n), _projector_matrix(int(n)))


@dataclass(frozen=True)
class CloneBatch:
    total_copies: int
    joint_state: DensityOperator
    copies: tuple
    source: PureState

    def copy_fidelities(self) -> np.ndarray:
        return np.array([fidelity(self.source, c) for c in self.copies])


def _joint_output(psi: PureState, k: int) -> np.ndarray:
    s = symmetric_projector(k).matrix
    # S (|psi> x I) spans the support; rho = A A^dag / tr
    a = s @ np.kron(psi.amplitudes[:, None], np.eye(2 ** (k - 1)))
    rho = a @ a.conj().T
    rho = rho / np.trace(rho).real
    return (rho + rho.conj().T) / 2


def clone(source: PureState, k: int) -> CloneBatch:
    if source.num_qubits != 1:
        raise QuantumStateError("the cloner takes a single-qubit input")
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or not 2 <= k <= MAX_CLONES:
        raise ValueError(f"number of copies must satisfy 2 <= K <= {MAX_CLONES}, got {k!r}")
    joint = DensityOperator(_joint_output(source, int(k)))
    copies = tuple(partial_trace(joint, [i]) for i in range(k))
    return CloneBatch(int(k), joint, copies, source)


@dataclass(frozen=True)
class CopySplit:
    recognizer: tuple
    feedback: tuple
    output: int
    batch: CloneBatch

    def recognizer_copies(self):
        return [self.batch.copies[i] for i in self.recognizer]

    def feedback_copies(self):
        return [self.batch.copies[i] for i in self.feedback]

    def output_copy(self) -> DensityOperator:
        return self.batch.copies[self.output]


def split_copies(batch: CloneBatch, n_recognizer: int, m_feedback: int) -> CopySplit:
    """Route the first N copies to the recognizer, the next M to the actuator,
    and the last one to the system output."""
    if n_recognizer < 1 or m_feedback < 1:
        raise ValueError("N and M must both be at least 1")
    if n_recognizer + m_feedback + 1 != batch.total_copies:
        raise ValueError(
            f"N + M + 1 = {n_recognizer + m_feedback + 1} does not match "
            f"{batch.total_copies} copies"
        )
    rec = tuple(range(n_recognizer))
    fb = tuple(range(n_recognizer, n_recognizer + m_feedback))
    return CopySplit(rec, fb, batch.total_copies - 1, batch)


def no_cloning_witness(psi: PureState, phi: PureState) -> float:
    """``|<psi|phi> - <psi|phi>^2|``.

    A unitary copier ``|s>|M> -> |s>|s>|M'>`` acting on both inputs must
    preserve inner products, forcing ``<psi|phi> = <psi|phi>^2``. The
    mismatch is zero only for identical or orthogonal pairs.
    """
    if psi.num_qubits != 1 or phi.num_qubits != 1:
        raise QuantumStateError("witness is defined for single-qubit pairs")
    s = complex(np.vdot(psi.amplitudes, phi.amplitudes))
    return float(abs(s - s * s))


def monte_carlo_copy_fidelity(k: int, samples: int, rng=None) -> float:
    """Average per-copy fidelity of :func:`clone` over Haar-random inputs."""
    if samples < 1:
        raise ValueError("samples must be positive")
    rng = as_rng(rng)
    total = 0.0
    for _ in range(samples):
        psi = haar_random_state(1, rng)
        rho = _joint_output(psi, k)
        # reduced state of the first copy
        first = np.einsum("ajbj->ab", rho.reshape(2, -1, 2, rho.shape[0] // 2))
        total += float(np.vdot(psi.amplitudes, first @ psi.amplitudes).real)
    return total / samples
