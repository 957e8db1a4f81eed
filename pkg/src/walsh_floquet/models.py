"""Spin Hamiltonians: the kicked two-level system and the open mixed-field Ising chain."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

MAX_SITES = 8

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)


@dataclass(frozen=True, eq=False)
class SpinModel:
    """``H(t) = static_h + h_x V(t) drive_op``.

    For the Ising chain ``static_h = -J sum s^z_i s^z_{i+1} - h_z sum s^z_i``
    (open chain) and ``drive_op = -sum s^x_i``.
    """

    L: int
    J: float
    h_z: float
    h_x: float
    static_h: np.ndarray = field(repr=False)
    drive_op: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.static_h.shape[0]

    def hamiltonian(self, drive_value: float) -> np.ndarray:
        return self.static_h + self.h_x * drive_value * self.drive_op


def site_operator(op: np.ndarray, site: int, L: int) -> np.ndarray:
    """``op`` acting on ``site`` (0-based, leftmost factor is site 0)."""
    factors = [IDENTITY] * L
    factors[site] = op
    return reduce(np.kron, factors)


def build_mfim(L: int, J: float = 1.0, h_z: float = 1.0, h_x: float = 0.0) -> SpinModel:
    if not 1 <= L <= MAX_SITES:
        raise ValueError(f"L must be between 1 and {MAX_SITES}, got {L}")
    d = 2**L
    sz = [site_operator(SIGMA_Z, i, L) for i in range(L)]
    sx = [site_operator(SIGMA_X, i, L) for i in range(L)]
    static = np.zeros((d, d), dtype=complex)
    for i in range(L - 1):
        static -= J * sz[i] @ sz[i + 1]
    static -= h_z * sum(sz)
    drive = -sum(sx)
    for m in (static, drive):
        m.setflags(write=False)
    return SpinModel(L=L, J=float(J), h_z=float(h_z), h_x=float(h_x), static_h=static, drive_op=drive)


def two_level(b_z: float, delta: float = 1.0) -> SpinModel:
    """``H = b_z s^z + delta V(t) s^x`` written as an ``L = 1`` chain."""
    return build_mfim(1, J=0.0, h_z=-b_z, h_x=-delta)


def kick_unitary(model: SpinModel, amplitude: float) -> np.ndarray:
    """``exp(-i amplitude drive_op)``, factorized over sites.

    ``drive_op = -sum s^x_i`` is a sum of commuting single-site terms, so the
    exponential is ``(x)_i (cos a + i sin a s^x)``.
    """
    single = np.cos(amplitude) * IDENTITY + 1j * np.sin(amplitude) * SIGMA_X
    return reduce(np.kron, [single] * model.L)
