"""Direction-matching actuator law."""
from __future__ import annotations

import numpy as np

from .core import ATOL, IDENTITY, DensityOperator, PureState, Unitary, bloch_vector, rotation


def has_direction(feedback_copy: DensityOperator) -> bool:
    return bloch_vector(feedback_copy).norm() > ATOL


def _orthogonal_axis(direction: np.ndarray) -> np.ndarray:
    for axis in (np.array([1.0, 0, 0]), np.array([0, 1.0, 0])):
        if np.linalg.norm(np.cross(axis, direction)) > ATOL:
            axis = axis - np.dot(axis, direction) * direction
            return axis / np.linalg.norm(axis)
    raise AssertionError("unreachable: x and y cannot both be parallel to a unit vector")


def actuator_update(feedback_copy: DensityOperator, target: PureState) -> Unitary:
    """Rotation carrying the feedback copy's Bloch direction onto the target's.

    Only the direction of the (possibly shrunken) feedback Bloch vector is
    used. A copy with no direction (maximally mixed) yields the identity;
    callers check :func:`has_direction` to flag that case.
    """
    r = bloch_vector(feedback_copy).as_array()
    if np.linalg.norm(r) <= ATOL:
        return IDENTITY
    a = r / np.linalg.norm(r)
    b = bloch_vector(target).as_array()
    b = b / np.linalg.norm(b)
    cos = float(np.clip(np.dot(a, b), -1.0, 1.0))
    axis = np.cross(a, b)
    if np.linalg.norm(axis) <= ATOL:
        if cos > 0:
            return IDENTITY
        return rotation(_orthogonal_axis(b), np.pi)
    return rotation(axis, float(np.arctan2(np.linalg.norm(axis), cos)))
