"""abc -> dq rotating-frame transform (amplitude-invariant, 2/3 scaling).

The q row is oriented so that a balanced input ``Z cos(theta - 2 pi n / 3)``
yields ``zd = Z cos(theta* - theta)`` and ``zq = Z sin(theta* - theta)``:
zq is positive when the frame angle leads the signal angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_TWO_THIRDS = 2.0 / 3.0
_SHIFT = 2.0 * math.pi / 3.0


@dataclass(frozen=True)
class DqFrame:
    zd: float
    zq: float
    theta_star: float


def park_matrix(theta_star: float) -> np.ndarray:
    """The 2x3 transform evaluated at ``theta_star``."""
    angles = theta_star - np.array([0.0, _SHIFT, 2.0 * _SHIFT])
    return _TWO_THIRDS * np.vstack((np.cos(angles), np.sin(angles)))


def dq3(za: float, zb: float, zc: float, theta_star: float) -> tuple[float, float]:
    """Scalar kernel of :func:`abc_to_dq`; used in the per-sample loop."""
    a0 = theta_star
    a1 = theta_star - _SHIFT
    a2 = theta_star - 2.0 * _SHIFT
    zd = _TWO_THIRDS * (math.cos(a0) * za + math.cos(a1) * zb + math.cos(a2) * zc)
    zq = _TWO_THIRDS * (math.sin(a0) * za + math.sin(a1) * zb + math.sin(a2) * zc)
    return zd, zq


def abc_to_dq(s, theta_star: float) -> DqFrame:
    """Project a three-phase sample onto the frame rotating at ``theta_star``."""
    zd, zq = dq3(s.za, s.zb, s.zc, theta_star)
    return DqFrame(zd, zq, theta_star)


def balanced_dq(z: float, theta: float, theta_star: float) -> tuple[float, float]:
    """Closed form of the transform for a clean balanced input."""
    return z * math.cos(theta_star - theta), z * math.sin(theta_star - theta)
