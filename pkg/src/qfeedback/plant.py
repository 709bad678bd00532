"""Object dynamics between control cycles: identity plus optional noise."""
from __future__ import annotations

from .core import IDENTITY, X, Y, Z, PureState, apply_unitary, as_rng

_TWIRL = (IDENTITY, X, Y, Z)


def apply_noise(state: PureState, noise, rng) -> PureState:
    """Depolarizing noise as a stochastic unraveling.

    With probability ``p`` a uniformly random Pauli (identity included) hits
    the qubit. Averaged over draws this is ``(1-p) rho + p I/2``, while each
    trajectory stays pure.
    """
    if noise is None or noise.kind == "none" or noise.p == 0:
        return state
    rng = as_rng(rng)
    if rng.uniform() >= noise.p:
        return state
    return apply_unitary(state, _TWIRL[rng.integers(4)], [0])
