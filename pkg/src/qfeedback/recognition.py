"""Copy recognition: extended basis, re-expansion, mean state, distance gate.

Each copy is described by coefficients in its own orthonormal basis. The
union of those bases (duplicates up to global phase merged) is the extended
basis; every copy is zero-padded into it, the arithmetic mean of the padded
coefficient vectors is the reference state, and the Euclidean distance of
each copy to that mean decides the on/off signal.

:class:`StateRecognizer` wraps the pipeline as a scikit-learn estimator
(``get_params``/``set_params``/``clone`` work as usual).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .core import (
    ATOL,
    DensityOperator,
    PureState,
    QuantumStateError,
    as_rng,
    canonical_phase,
)

DEFAULT_MERGE_TOLERANCE = 1e-6


class GateSignal(enum.Enum):
    On = "On"
    Off = "Off"


@dataclass(frozen=True)
class CopyDescription:
    basis: tuple
    coefficients: np.ndarray

    def __post_init__(self):
        cols = np.column_stack([b.amplitudes for b in self.basis])
        if not np.allclose(cols.conj().T @ cols, np.eye(len(self.basis)), atol=ATOL, rtol=0):
            raise QuantumStateError("copy basis is not orthonormal")
        coeffs = np.asarray(self.coefficients, dtype=complex)
        if coeffs.shape != (len(self.basis),):
            raise QuantumStateError("one coefficient per basis vector is required")
        if abs(np.vdot(coeffs, coeffs).real - 1.0) > ATOL:
            raise QuantumStateError("copy coefficients are not normalized")
        object.__setattr__(self, "coefficients", coeffs)


@dataclass(frozen=True)
class ExtendedBasis:
    vectors: tuple
    merge_tolerance: float = DEFAULT_MERGE_TOLERANCE

    def __len__(self):
        return len(self.vectors)

    def slot_of(self, vector: PureState) -> Optional[int]:
        for k, v in enumerate(self.vectors):
            if _same_ray(v, vector, self.merge_tolerance):
                return k
        return None

    def gram(self) -> np.ndarray:
        cols = np.column_stack([v.amplitudes for v in self.vectors])
        return cols.conj().T @ cols


@dataclass(frozen=True)
class ExpandedCopy:
    coefficients: np.ndarray


@dataclass(frozen=True)
class MeanState:
    coefficients: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))


@dataclass(frozen=True)
class RecognitionReport:
    distances: tuple
    max_distance: float
    d0: float
    signal: GateSignal

    def to_dict(self) -> dict:
        return {
            "distances": [float(d) for d in self.distances],
            "max_distance": float(self.max_distance),
            "d0": float(self.d0),
            "signal": self.signal.value,
        }


def _same_ray(u: PureState, v: PureState, tol: float) -> bool:
    return u.dim == v.dim and abs(np.vdot(u.amplitudes, v.amplitudes)) > 1 - tol


def computational_basis(num_qubits: int = 1) -> tuple:
    d = 2**num_qubits
    return tuple(PureState(np.eye(d, dtype=complex)[i]) for i in range(d))


def _as_basis(basis) -> tuple:
    return tuple(b if isinstance(b, PureState) else PureState(b) for b in basis)


def describe_copy(state: PureState, basis=None) -> CopyDescription:
    """Coefficients ``<p_j|psi>`` of the phase-canonical ``psi`` in ``basis``."""
    basis = computational_basis(state.num_qubits) if basis is None else _as_basis(basis)
    psi = canonical_phase(state).amplitudes
    cols = np.column_stack([b.amplitudes for b in basis])
    if cols.shape[0] != psi.size:
        raise QuantumStateError("basis dimension does not match the state")
    coeffs = cols.conj().T @ psi
    residual = np.linalg.norm(psi - cols @ coeffs)
    if residual > ATOL:
        raise QuantumStateError(f"basis does not span the state (residual {residual:.3g})")
    return CopyDescription(basis, coeffs)


def extend_basis(copies: Sequence[CopyDescription],
                 merge_tolerance: float = DEFAULT_MERGE_TOLERANCE) -> ExtendedBasis:
    """Ordered union of the copies' bases; later duplicates of a ray are dropped.

    The result is generally not orthogonal.
    """
    if not copies:
        raise ValueError("at least one copy is required")
    kept: list = []
    for copy in copies:
        for vec in copy.basis:
            if not any(_same_ray(k, vec, merge_tolerance) for k in kept):
                kept.append(vec)
    return ExtendedBasis(tuple(kept), merge_tolerance)


def expand_copy(copy: CopyDescription, ebasis: ExtendedBasis) -> ExpandedCopy:
    """Zero-padded coefficients: a slot takes ``beta_j`` when its vector is the
    copy's ``j``-th basis vector (up to phase), otherwise 0."""
    out = np.zeros(len(ebasis), dtype=complex)
    for vec, beta in zip(copy.basis, copy.coefficients):
        k = ebasis.slot_of(vec)
        if k is None:
            raise QuantumStateError("copy basis vector is missing from the extended basis")
        out[k] = beta
    return ExpandedCopy(out)


def mean_state(expanded: Sequence[ExpandedCopy]) -> MeanState:
    """Componentwise arithmetic mean over the copies, not renormalized."""
    if not expanded:
        raise ValueError("mean of an empty copy list")
    lengths = {e.coefficients.size for e in expanded}
    if len(lengths) != 1:
        raise ValueError(f"expanded copies have unequal lengths {sorted(lengths)}")
    stack = np.stack([e.coefficients for e in expanded])
    return MeanState(stack.sum(axis=0) / len(expanded))


def state_distance(copy: ExpandedCopy, mean: MeanState) -> float:
    if copy.coefficients.size != mean.coefficients.size:
        raise ValueError("copy and mean have different lengths")
    diff = copy.coefficients - mean.coefficients
    return float(np.sqrt(np.sum(np.abs(diff) ** 2)))


def measure_copy(copy: Union[PureState, DensityOperator], basis, rng) -> PureState:
    """One projective shot in ``basis``; returns the basis state observed."""
    basis = _as_basis(basis)
    if isinstance(copy, PureState):
        probs = [abs(np.vdot(b.amplitudes, copy.amplitudes)) ** 2 for b in basis]
    else:
        probs = [np.vdot(b.amplitudes, copy.matrix @ b.amplitudes).real for b in basis]
    probs = np.clip(np.asarray(probs), 0.0, None)
    if abs(probs.sum() - 1.0) > ATOL:
        raise QuantumStateError("measurement basis does not span the copy")
    return basis[as_rng(rng).choice(probs)]


class StateRecognizer(BaseEstimator):
    """Distance-threshold recognizer over a set of copies.

    Parameters
    ----------
    d0 : float
        Distance threshold; the set is accepted only if every copy lies
        strictly closer than ``d0`` to the mean state.
    mode : {"oracle", "measured"}
        ``oracle`` describes each copy by its true amplitudes. ``measured``
        takes one projective shot per copy and describes it by the basis
        state observed; copies may then be density operators.
    bases : list of bases, optional
        Per-copy description bases. Defaults to the computational basis.
    merge_tolerance : float
        Two basis vectors are merged when ``|<u|v>| > 1 - merge_tolerance``.
    random_state : int or RngStream, optional
        Source of measurement randomness in ``measured`` mode.
    """

    def __init__(self, d0=0.1, mode="oracle", bases=None,
                 merge_tolerance=DEFAULT_MERGE_TOLERANCE, random_state=None):
        self.d0 = d0
        self.mode = mode
        self.bases = bases
        self.merge_tolerance = merge_tolerance
        self.random_state = random_state

    def _validate_params(self):
        if not isinstance(self.d0, (int, float, np.floating)) or not self.d0 > 0:
            raise ValueError(f"d0 must be positive, got {self.d0!r}")
        if self.mode not in ("oracle", "measured"):
            raise ValueError(f"mode must be 'oracle' or 'measured', got {self.mode!r}")

    def _bases_for(self, copies):
        if self.bases is None:
            return [None] * len(copies)
        if len(self.bases) != len(copies):
            raise ValueError(f"{len(self.bases)} bases given for {len(copies)} copies")
        return list(self.bases)

    def describe(self, copies) -> list[CopyDescription]:
        copies = list(copies)
        if not copies:
            raise ValueError("at least one copy is required")
        bases = self._bases_for(copies)
        if self.mode == "oracle":
            for c in copies:
                if not isinstance(c, PureState):
                    raise TypeError("oracle mode needs the copies' pure states")
            return [describe_copy(c, b) for c, b in zip(copies, bases)]
        rng = as_rng(self.random_state)
        out = []
        for c, b in zip(copies, bases):
            b = computational_basis(c.num_qubits) if b is None else _as_basis(b)
            out.append(describe_copy(measure_copy(c, b, rng), b))
        return out

    def fit(self, X, y=None):
        """Build the extended basis and mean state from the copies ``X``."""
        self._validate_params()
        self.descriptions_ = self.describe(X)
        self.extended_basis_ = extend_basis(self.descriptions_, self.merge_tolerance)
        self.expanded_ = [expand_copy(d, self.extended_basis_) for d in self.descriptions_]
        self.mean_ = mean_state(self.expanded_)
        self.distances_ = np.array([state_distance(e, self.mean_) for e in self.expanded_])
        return self

    def _check_fitted(self):
        if not hasattr(self, "mean_"):
            raise NotFittedError("StateRecognizer is not fitted yet; call fit first")

    def transform(self, X=None):
        """Distance of each fitted copy to the mean state.

        Passing ``X`` other than ``None`` refits on ``X`` first; a single
        copy has no meaning apart from the set it was averaged with.
        """
        if X is not None:
            self.fit(X)
        self._check_fitted()
        return self.distances_.copy()

    def fit_transform(self, X, y=None):
        return self.fit(X).distances_.copy()

    def predict(self, X=None):
        """Per-copy acceptance ``d < d0``."""
        return self.transform(X) < self.d0

    def report(self) -> RecognitionReport:
        self._check_fitted()
        dist = tuple(float(d) for d in self.distances_)
        signal = GateSignal.On if all(d < self.d0 for d in dist) else GateSignal.Off
        return RecognitionReport(dist, max(dist), float(self.d0), signal)


def gate_signal(copies, d0: float, mode: str = "oracle", bases=None, rng=None,
                merge_tolerance: float = DEFAULT_MERGE_TOLERANCE) -> RecognitionReport:
    """Run the whole pipeline and return the on/off decision."""
    if not isinstance(d0, (int, float, np.floating)) or not d0 > 0:
        raise ValueError(f"d0 must be positive, got {d0!r}")
    rec = StateRecognizer(d0=d0, mode=mode, bases=bases, merge_tolerance=merge_tolerance,
                          random_state=rng)
    return rec.fit(copies).report()
