"""Dense state-vector substrate: states, gates, measurement, reduced states.

Qubits are ordered most-significant first. Spin up is encoded as ``0`` and
spin down as ``1``, so ``|up, down>`` is basis index ``0b01``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

ATOL = 1e-9
EXACT_ATOL = 1e-12
MAX_QUBITS = 12

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


class QuantumStateError(ValueError):
    """Raised when an object violates a state, operator or index contract."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


def _qubit_count(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or 2**n != dim:
        raise QuantumStateError(f"dimension {dim} is not a power of two >= 2")
    if n > MAX_QUBITS:
        raise QuantumStateError(f"{n} qubits exceeds the {MAX_QUBITS}-qubit cap")
    return n


@dataclass(frozen=True)
class PureState:
    """Normalized amplitude vector over ``num_qubits`` qubits."""

    amplitudes: np.ndarray
    num_qubits: int = field(init=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        n = _qubit_count(amps.size)
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > ATOL:
            raise QuantumStateError(f"state not normalized: sum |a|^2 = {norm!r}")
        object.__setattr__(self, "amplitudes", _frozen(amps))
        object.__setattr__(self, "num_qubits", n)

    @classmethod
    def _trusted(cls, amplitudes: np.ndarray, num_qubits: int) -> "PureState":
        # internal fast path for vectors normalized by construction
        obj = object.__new__(cls)
        amplitudes.setflags(write=False)
        object.__setattr__(obj, "amplitudes", amplitudes)
        object.__setattr__(obj, "num_qubits", num_qubits)
        return obj

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = False) -> "PureState":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if normalize:
            norm = np.linalg.norm(amps)
            if norm < ATOL:
                raise QuantumStateError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(amps)

    @classmethod
    def basis(cls, bits: Union[str, Sequence[int]]) -> "PureState":
        """Computational basis state, e.g. ``basis("01")`` is ``|up, down>``."""
        bits = [int(b) for b in bits]
        amps = np.zeros(2 ** len(bits), dtype=complex)
        amps[int("".join(map(str, bits)), 2)] = 1.0
        return cls(amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def to_density(self) -> "DensityOperator":
        return DensityOperator(self.projector())

    def __len__(self):
        return self.dim


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, positive semidefinite, unit-trace matrix."""

    matrix: np.ndarray
    num_qubits: int = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise QuantumStateError(f"density matrix must be square, got {m.shape}")
        n = _qubit_count(m.shape[0])
        if not np.allclose(m, m.conj().T, atol=ATOL, rtol=0):
            raise QuantumStateError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > ATOL:
            raise QuantumStateError(f"density matrix trace is {tr!r}, expected 1")
        if np.linalg.eigvalsh(m).min() < -ATOL:
            raise QuantumStateError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", _frozen(m))
        object.__setattr__(self, "num_qubits", n)

    @classmethod
    def maximally_mixed(cls, num_qubits: int = 1) -> "DensityOperator":
        d = 2**num_qubits
        return cls(np.eye(d, dtype=complex) / d)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)


@dataclass(frozen=True)
class Unitary:
    matrix: np.ndarray
    num_qubits: int = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise QuantumStateError(f"unitary must be square, got {m.shape}")
        n = _qubit_count(m.shape[0])
        if not np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=ATOL, rtol=0):
            raise QuantumStateError("matrix is not unitary")
        object.__setattr__(self, "matrix", _frozen(m))
        object.__setattr__(self, "num_qubits", n)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other: "Unitary") -> "Unitary":
        return Unitary(self.matrix @ other.matrix)

    def dagger(self) -> "Unitary":
        return Unitary(self.matrix.conj().T)


IDENTITY = Unitary(I2)
X = Unitary(SIGMA_X)
Y = Unitary(SIGMA_Y)
Z = Unitary(SIGMA_Z)
HADAMARD = Unitary(np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2))
# flips the target when the control is up (encoded 0)
CNOT_ON_UP = Unitary(
    np.array(
        [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], dtype=complex
    )
)


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if self.norm() > 1 + ATOL:
            raise QuantumStateError(f"Bloch vector norm {self.norm()!r} exceeds 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def norm(self) -> float:
        return float(np.sqrt(self.x**2 + self.y**2 + self.z**2))


class RngStream:
    """Seeded random stream (PCG64) with a draw counter.

    Child streams from :meth:`spawn` are derived from the seed alone, so work
    split across them is schedule independent.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.counter = 0
        self._seq = np.random.SeedSequence(seed)
        self._gen = np.random.Generator(np.random.PCG64(self._seq))

    def uniform(self) -> float:
        self.counter += 1
        return float(self._gen.random())

    def choice(self, probabilities: Sequence[float]) -> int:
        """Index drawn from a discrete distribution by inverse CDF."""
        p = [float(x) for x in probabilities]
        u = self.uniform() * sum(p)
        last = max(i for i, x in enumerate(p) if x > 0)
        acc = 0.0
        for i, x in enumerate(p):
            acc += x
            # zero-probability outcomes are never returned
            if x > 0 and (u < acc or i == last):
                return i
        return last

    def normal(self, size) -> np.ndarray:
        self.counter += 1
        return self._gen.standard_normal(size)

    def integers(self, high: int) -> int:
        self.counter += 1
        return int(self._gen.integers(high))

    def spawn(self, n: int) -> list["RngStream"]:
        children = np.random.SeedSequence(self.seed).spawn(n)
        return [RngStream(int(c.generate_state(1, dtype=np.uint64)[0])) for c in children]


def as_rng(rng: Union[RngStream, int, None]) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    return RngStream(0 if rng is None else rng)


def tensor(a: PureState, b: PureState) -> PureState:
    return PureState(np.kron(a.amplitudes, b.amplitudes))


def _check_targets(targets: Sequence[int], num_qubits: int) -> list[int]:
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise QuantumStateError(f"repeated qubit index in {targets}")
    for t in targets:
        if not 0 <= t < num_qubits:
            raise QuantumStateError(f"qubit index {t} out of range for {num_qubits} qubits")
    return targets


def _as_matrix(u) -> np.ndarray:
    return u.matrix if isinstance(u, Unitary) else np.asarray(u, dtype=complex)


def apply_unitary(state: PureState, u: Unitary, targets: Sequence[int]) -> PureState:
    """Apply ``u`` to the ``targets`` qubits (in that order), identity elsewhere."""
    targets = _check_targets(targets, state.num_qubits)
    k = len(targets)
    m = _as_matrix(u)
    if m.shape != (2**k, 2**k):
        raise QuantumStateError(
            f"unitary of dimension {m.shape[0]} does not act on {k} target qubit(s)"
        )
    n = state.num_qubits
    psi = state.amplitudes.reshape((2,) * n)
    gate = m.reshape((2,) * (2 * k))
    out = np.tensordot(gate, psi, axes=(list(range(k, 2 * k)), targets))
    out = np.moveaxis(out, list(range(k)), targets)
    return PureState(out.reshape(-1))


def _basis_matrix(basis, k: int) -> np.ndarray:
    """Columns are the basis vectors; checked for orthonormality."""
    if isinstance(basis, np.ndarray) and basis.ndim == 2:
        cols = basis.astype(complex)
    else:
        vecs = [b.amplitudes if isinstance(b, PureState) else np.asarray(b, dtype=complex)
                for b in basis]
        cols = np.column_stack(vecs)
    if cols.shape[0] != 2**k:
        raise QuantumStateError(
            f"basis vectors have dimension {cols.shape[0]}, expected {2**k}"
        )
    gram = cols.conj().T @ cols
    if not np.allclose(gram, np.eye(cols.shape[1]), atol=ATOL, rtol=0):
        raise QuantumStateError("measurement basis is not orthonormal")
    return cols


def branch_amplitudes(state: PureState, basis, targets: Sequence[int]) -> np.ndarray:
    """Unnormalized remainder of ``state`` for each basis outcome on ``targets``.

    Row ``j`` is ``(<b_j| x I) |state>`` flattened over the untouched qubits in
    their original order.
    """
    targets = _check_targets(targets, state.num_qubits)
    k = len(targets)
    cols = _basis_matrix(basis, k)
    n = state.num_qubits
    psi = np.moveaxis(state.amplitudes.reshape((2,) * n), targets, list(range(k)))
    psi = psi.reshape(2**k, -1)
    return cols.conj().T @ psi


def outcome_probabilities(state: PureState, basis, targets: Sequence[int]) -> np.ndarray:
    branches = branch_amplitudes(state, basis, targets)
    return np.einsum("ij,ij->i", branches.conj(), branches).real


def _collapse(state: PureState, cols: np.ndarray, branch: np.ndarray,
              targets: list[int]) -> PureState:
    n = state.num_qubits
    k = len(targets)
    full = np.kron(cols, branch).reshape((2,) * n)
    full = np.moveaxis(full, list(range(k)), targets)
    return PureState.from_amplitudes(full.reshape(-1), normalize=True)


def project(state: PureState, basis, targets: Sequence[int], outcome: int):
    """Deterministically select ``outcome``: returns (collapsed state, probability)."""
    targets = _check_targets(targets, state.num_qubits)
    cols = _basis_matrix(basis, len(targets))
    branches = branch_amplitudes(state, cols, targets)
    prob = float(np.vdot(branches[outcome], branches[outcome]).real)
    if prob < EXACT_ATOL:
        raise QuantumStateError(f"outcome {outcome} has zero probability")
    return _collapse(state, cols[:, outcome], branches[outcome], targets), prob


def measure_projective(state: PureState, basis, targets: Sequence[int], rng):
    """Sample a projective measurement on ``targets``.

    Returns ``(outcome index, collapsed state, probability)``. The collapsed
    state lives on the full register.
    """
    rng = as_rng(rng)
    targets = _check_targets(targets, state.num_qubits)
    cols = _basis_matrix(basis, len(targets))
    branches = branch_amplitudes(state, cols, targets)
    probs = np.einsum("ij,ij->i", branches.conj(), branches).real
    if abs(probs.sum() - 1.0) > ATOL:
        raise QuantumStateError("basis does not span the measured subsystem")
    idx = rng.choice(probs)
    return idx, _collapse(state, cols[:, idx], branches[idx], targets), float(probs[idx])


def partial_trace(state: Union[PureState, DensityOperator],
                  keep: Sequence[int]) -> DensityOperator:
    """Reduced operator on ``keep`` (output qubit order follows ``keep``)."""
    n = state.num_qubits
    keep = _check_targets(keep, n)
    if not keep:
        raise QuantumStateError("keep must name at least one qubit")
    rest = [q for q in range(n) if q not in keep]
    dk, dr = 2 ** len(keep), 2 ** len(rest)
    if isinstance(state, PureState):
        psi = np.moveaxis(state.amplitudes.reshape((2,) * n), keep + rest,
                          list(range(n))).reshape(dk, dr)
        rho = psi @ psi.conj().T
    else:
        t = state.matrix.reshape((2,) * (2 * n))
        order = keep + rest
        t = np.transpose(t, order + [n + q for q in order]).reshape(dk, dr, dk, dr)
        rho = np.einsum("ajbj->ab", t)
    rho = (rho + rho.conj().T) / 2
    return DensityOperator(rho)


def fidelity(a: PureState, b: Union[PureState, DensityOperator]) -> float:
    """``|<a|b>|^2`` for two kets, ``<a|rho|a>`` against a density operator."""
    if a.dim != b.dim:
        raise QuantumStateError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if isinstance(b, PureState):
        f = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    else:
        f = np.vdot(a.amplitudes, b.matrix @ a.amplitudes).real
    return float(min(max(f, 0.0), 1.0))


def bloch_vector(rho: Union[DensityOperator, PureState]) -> BlochVector:
    if isinstance(rho, PureState):
        rho = rho.to_density()
    if rho.num_qubits != 1:
        raise QuantumStateError("Bloch vector is defined for a single qubit")
    x, y, z = (float(np.trace(rho.matrix @ p).real) for p in PAULIS)
    return BlochVector(x, y, z)


def state_from_bloch(direction: Iterable[float]) -> PureState:
    """Pure state whose Bloch vector is the normalized ``direction``."""
    v = np.asarray(list(direction), dtype=float)
    v = v / np.linalg.norm(v)
    theta = np.arccos(np.clip(v[2], -1.0, 1.0))
    phi = np.arctan2(v[1], v[0])
    return PureState([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def density_from_bloch(r: Union[BlochVector, Sequence[float]]) -> DensityOperator:
    r = r.as_array() if isinstance(r, BlochVector) else np.asarray(r, dtype=float)
    m = I2.copy()
    for comp, p in zip(r, PAULIS):
        m = m + comp * p
    return DensityOperator(m / 2)


def canonical_phase(state: PureState) -> PureState:
    """Remove the global phase: first non-negligible amplitude made real, >= 0."""
    amps = state.amplitudes
    nz = np.flatnonzero(np.abs(amps) > ATOL)
    if nz.size == 0:
        raise QuantumStateError("zero vector has no phase")
    lead = amps[nz[0]]
    out = amps * (abs(lead) / lead)
    out[nz[0]] = abs(lead)
    return PureState(out)


def rotation(axis: Sequence[float], angle: float) -> Unitary:
    """``exp(-i angle/2 n.sigma)``: rotates Bloch vectors by ``angle`` about ``n``."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    gen = n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z
    return Unitary(np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * gen)


def haar_random_state(num_qubits: int, rng) -> PureState:
    """Haar-uniform ket: a normalized vector of standard complex Gaussians."""
    rng = as_rng(rng)
    d = 2**num_qubits
    z = rng.normal(d) + 1j * rng.normal(d)
    return PureState.from_amplitudes(z, normalize=True)
