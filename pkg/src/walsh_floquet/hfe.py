"""Walsh inverse-frequency expansion for piecewise-constant (digital) drives.

A schedule ``H_j`` held on ``[t_j, t_{j+1})`` is expanded as
``H_j = sum_m h_m W_{mj}``. Through first order in ``T``

    H_eff = h_0 + i T sum_{a > b} f_ab [h_a, h_b],
    f_ab  = -(1/N^2) sum_{alpha > beta} W_a(t_alpha) W_b(t_beta),

with ``a, b`` sequency labels. In sequency labels ``f_ab`` does not depend on
``N`` once both labels exist, so it is kept as an exact fraction.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from .fit import PowerLawFit, fit_power_law
from .lattice import PeriodicDrive
from .models import SIGMA_X, SIGMA_Y, SIGMA_Z, SpinModel
from .walsh import build_walsh_basis, natural_of, wht

MAX_FAB_ORDER = 12


def _min_order(*labels: int) -> int:
    return max(1, max(labels).bit_length())


@lru_cache(maxsize=16)
def _sequency_rows(n: int) -> np.ndarray:
    basis = build_walsh_basis(n)
    return basis.hadamard[basis.sequency_to_natural].astype(np.int64)


def fab(a: int, b: int, n_ref: int | None = None) -> Fraction:
    """Exact first-order coefficient ``f_ab`` for sequency labels ``a, b``."""
    if a < 0 or b < 0:
        raise IndexError("sequency labels must be nonnegative")
    n = _min_order(a, b) if n_ref is None else n_ref
    N = 1 << n
    if a >= N or b >= N:
        raise IndexError(f"labels ({a}, {b}) do not exist for N={N}")
    if n > MAX_FAB_ORDER:
        raise ValueError(f"n_ref={n} exceeds {MAX_FAB_ORDER}")
    W = _sequency_rows(n)
    # sum_{alpha > beta} = sum_alpha W_a(alpha) * (cumulative W_b strictly before alpha)
    before = np.concatenate(([0], np.cumsum(W[b])[:-1]))
    return Fraction(-int(W[a] @ before), N * N)


@lru_cache(maxsize=8)
def _fab_numerators(n: int) -> np.ndarray:
    W = _sequency_rows(n)
    before = np.cumsum(W, axis=1) - W
    g = -(W @ before.T)
    g.setflags(write=False)
    return g


def fab_matrix(n: int) -> np.ndarray:
    """All ``f_ab`` for ``N = 2**n`` as floats, indexed by sequency."""
    if not 0 <= n <= MAX_FAB_ORDER:
        raise ValueError(f"n must be in [0, {MAX_FAB_ORDER}]")
    return _fab_numerators(n) / float(4**n)


def fab_table(n: int, min_magnitude: Fraction = Fraction(0), strict_lower: bool = True) -> list[tuple[int, int, Fraction]]:
    """Nonzero ``(a, b, f_ab)`` with ``a > b`` (or all pairs), largest first."""
    g = _fab_numerators(n)
    N2 = 4**n
    rows = []
    for a, b in zip(*np.nonzero(g)):
        if strict_lower and a <= b:
            continue
        f = Fraction(int(g[a, b]), N2)
        if abs(f) >= min_magnitude:
            rows.append((int(a), int(b), f))
    rows.sort(key=lambda r: (-abs(r[2]), r[0], r[1]))
    return rows


def write_fab_table(path, n: int, min_magnitude: Fraction = Fraction(1, 32)) -> list[tuple[int, int, Fraction]]:
    rows = fab_table(n, min_magnitude)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["a", "b", "numerator", "denominator"])
        for a, b, f in rows:
            w.writerow([a, b, f.numerator, f.denominator])
    return rows


@dataclass(frozen=True, eq=False)
class EffectiveHamiltonian:
    order0: np.ndarray
    order1: np.ndarray
    T: float

    @property
    def total(self) -> np.ndarray:
        return self.order0 + self.order1


def _stack_schedule(samples) -> np.ndarray:
    H = np.asarray(samples, dtype=complex)
    if H.ndim != 3 or H.shape[1] != H.shape[2]:
        raise ValueError("schedule must be a sequence of equal-size square matrices")
    N = H.shape[0]
    if N < 1 or N & (N - 1):
        raise ValueError(f"schedule length {N} is not a power of two")
    return H


def walsh_coefficients(samples) -> np.ndarray:
    """Matrix-valued ``h_m`` indexed by sequency."""
    H = _stack_schedule(samples)
    n = H.shape[0].bit_length() - 1
    basis = build_walsh_basis(n)
    h = wht(H, basis)
    return h[basis.sequency_to_natural]


def walsh_heff(samples, T: float) -> EffectiveHamiltonian:
    """Order-0 and order-1 terms of the Walsh expansion for a schedule."""
    h = walsh_coefficients(samples)
    N = h.shape[0]
    n = N.bit_length() - 1
    f = fab_matrix(n)
    order1 = np.zeros_like(h[0])
    for a, b in zip(*np.nonzero(np.tril(f, -1))):
        comm = h[a] @ h[b] - h[b] @ h[a]
        order1 = order1 + f[a, b] * comm
    order1 = 1j * T * order1
    return EffectiveHamiltonian(order0=h[0], order1=0.5 * (order1 + order1.conj().T), T=float(T))


def schedule_propagator(samples, T: float) -> np.ndarray:
    H = _stack_schedule(samples)
    N = H.shape[0]
    U = np.eye(H.shape[1], dtype=complex)
    for Hj in H:
        w, v = np.linalg.eigh(Hj)
        U = (v * np.exp(-1j * w * T / N)) @ v.conj().T @ U
    return U


def floquet_hamiltonian(samples, T: float) -> np.ndarray:
    """``H_F = (i/T) log U(T)`` on the principal branch.

    Raises ``ValueError`` when the mean step norm times ``T`` reaches ``pi``,
    where the logarithm could wrap.
    """
    H = _stack_schedule(samples)
    bound = float(np.mean(np.linalg.norm(H, ord=2, axis=(1, 2)))) * T
    if bound >= math.pi:
        raise ValueError(f"frequency too low: |H| T ~ {bound:.3g} >= pi")
    U = schedule_propagator(H, T)
    w, v = np.linalg.eig(U)
    HF = (v * (-np.angle(w) / T)) @ np.linalg.inv(v)
    return 0.5 * (HF + HF.conj().T)


@dataclass(frozen=True)
class ScalingResult:
    omegas: np.ndarray
    residuals: np.ndarray
    rejected: tuple[float, ...]
    fit: PowerLawFit | None

    @property
    def slope(self) -> float:
        return float("nan") if self.fit is None else self.fit.slope


def remainder_scaling(builder, omegas, order: int = 1) -> ScalingResult:
    """Largest eigenvalue of ``H_F - H_eff`` versus ``omega``, with a log-log fit.

    Arguments:
        builder: callable ``T -> schedule`` (sequence of ``2**n`` matrices).
        omegas: drive frequencies; those too low for an unambiguous log are dropped.
        order: subtract order 0 only (``0``) or orders 0 and 1 (``1``).
    """
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    kept, resid, rejected = [], [], []
    for omega in omegas:
        T = 2.0 * math.pi / omega
        samples = builder(T)
        try:
            HF = floquet_hamiltonian(samples, T)
        except ValueError:
            rejected.append(float(omega))
            continue
        heff = walsh_heff(samples, T)
        approx = heff.order0 + (heff.order1 if order == 1 else 0.0)
        kept.append(float(omega))
        resid.append(float(np.max(np.abs(np.linalg.eigvalsh(HF - approx)))))
    kept_a, resid_a = np.array(kept), np.array(resid)
    fit = None
    if kept_a.size >= 3 and np.all(resid_a > 0):
        fit = fit_power_law(kept_a, resid_a)
    return ScalingResult(kept_a, resid_a, tuple(rejected), fit)


def two_tone_schedule(T: float, b_z: float = 1.0, b_x: float = 1.0, b_y: float = 1.0, n: int = 4):
    """``B_z s^z + W_2(t) B_x s^x + W_13(t) B_y s^y`` sampled on ``2**n`` intervals."""
    if n < 4:
        raise ValueError("sequency 13 needs n >= 4")
    basis = build_walsh_basis(n)
    w2 = basis.row(natural_of(2, basis)).astype(float)
    w13 = basis.row(natural_of(13, basis)).astype(float)
    return b_z * SIGMA_Z + w2[:, None, None] * b_x * SIGMA_X + w13[:, None, None] * b_y * SIGMA_Y


def drive_schedule(model: SpinModel, drive: PeriodicDrive, N: int) -> np.ndarray:
    """Interval-averaged ``H_j`` of a model, kicks spread per the drive's convention."""
    from .lattice import interval_values

    v = interval_values(drive, N)
    return model.static_h[None] + model.h_x * v[:, None, None] * model.drive_op[None]


def _mean_integral(drive: PeriodicDrive) -> float:
    """``(1/T) int_0^T dt int_0^t V(s) ds``."""
    T = drive.T
    total = sum(a * (1.0 - t / T) for t, a in drive.kicks)
    for s, e, v in drive.segments:
        total += v * ((e - s) ** 2 / 2 + (e - s) * (T - e)) / T
    return total


def van_vleck_kick(drive: PeriodicDrive, model: SpinModel, t: float) -> np.ndarray:
    """First-order van Vleck kick operator ``K(t)``.

    ``K(t) = int_0^t (H(s) - H_bar) ds`` minus its period average, so ``K`` has
    zero mean. Only the oscillating drive contributes; kicks at times ``<= t``
    are included. For the up-down kick this is ``(h_x/2) W_{N/2}(t) drive_op``.
    """
    T = drive.T
    tt = float(np.mod(t, T))
    vbar = drive.time_average()
    ramp = drive.integral(tt) - vbar * tt
    mean = _mean_integral(drive) - vbar * T / 2
    return model.h_x * (ramp - mean) * model.drive_op
