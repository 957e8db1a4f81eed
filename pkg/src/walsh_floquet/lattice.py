"""Frequency-lattice (Sambe space) construction.

All discrete bases share one hub: the interval basis of ``N`` piecewise
constant functions on ``[t_j, t_{j+1})``. The Walsh basis is its Hadamard
rotation and the discrete Fourier basis its DFT rotation, so operators
assembled in either are related by a fixed unitary.

Extended operators use mode-major layout: row ``m * dim_h + alpha`` holds
photon mode ``m`` and physical state ``alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .models import SpinModel
from .walsh import FourierModeSet, build_walsh_basis

BASES = ("fourier", "discrete_fourier", "walsh")
CONVENTIONS = ("symmetric", "nonsymmetric")

_GRID_TOL = 1e-9


@dataclass(frozen=True)
class PeriodicDrive:
    """Scalar drive ``V(t)`` over one period: delta kicks plus step segments.

    ``kicks`` holds ``(time, amplitude)`` pairs with times in ``[0, T)``;
    ``segments`` holds ``(start, end, value)`` with ``0 <= start < end <= T``.
    ``convention`` fixes how a kick sitting on a sample boundary is shared
    between the neighbouring intervals.
    """

    T: float
    kicks: tuple[tuple[float, float], ...] = ()
    segments: tuple[tuple[float, float, float], ...] = ()
    convention: str = "symmetric"
    name: str = "custom"

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("period must be positive")
        if self.convention not in CONVENTIONS:
            raise ValueError(f"unknown kick convention {self.convention!r}")
        object.__setattr__(self, "kicks", tuple((float(t), float(a)) for t, a in self.kicks))
        object.__setattr__(self, "segments", tuple((float(s), float(e), float(v)) for s, e, v in self.segments))
        for t, _ in self.kicks:
            if not 0.0 <= t < self.T:
                raise ValueError(f"kick time {t} outside [0, T)")
        for s, e, _ in self.segments:
            if not 0.0 <= s < e <= self.T:
                raise ValueError(f"bad segment [{s}, {e})")

    @property
    def omega(self) -> float:
        return 2.0 * np.pi / self.T

    @property
    def is_zero(self) -> bool:
        return not any(a for _, a in self.kicks) and not any(v for *_, v in self.segments)

    def time_average(self) -> float:
        kicks = sum(a for _, a in self.kicks) / self.T
        steps = sum(v * (e - s) for s, e, v in self.segments) / self.T
        return kicks + steps

    def with_convention(self, convention: str) -> PeriodicDrive:
        return replace(self, convention=convention)

    def breakpoints(self) -> list[float]:
        pts = {t for t, _ in self.kicks}
        for s, e, _ in self.segments:
            pts.update((s, e))
        return sorted(p for p in pts if p < self.T)

    def segment_value(self, t: float) -> float:
        """Step part of the drive on the half-open pieces containing ``t``."""
        return sum(v for s, e, v in self.segments if s <= t < e)

    def integral(self, t: float) -> float:
        """``int_0^t V(s) ds``, counting kicks at times ``<= t``."""
        kicks = sum(a for tk, a in self.kicks if tk <= t)
        steps = sum(v * max(0.0, min(e, t) - s) for s, e, v in self.segments)
        return kicks + steps


def updown_kick(T: float = 1.0, convention: str = "symmetric") -> PeriodicDrive:
    """Unit kick at ``t = 0`` and the opposite kick at ``t = T/2``."""
    return PeriodicDrive(T, kicks=((0.0, 1.0), (T / 2, -1.0)), convention=convention, name="updown_kick")


def square_wave(T: float = 1.0) -> PeriodicDrive:
    """``+1`` on ``[0, T/2)`` and ``-1`` on ``[T/2, T)``; the shape of ``W_{N/2}``."""
    return PeriodicDrive(T, segments=((0.0, T / 2, 1.0), (T / 2, T, -1.0)), name="square_wave")


def zero_drive(T: float = 1.0) -> PeriodicDrive:
    return PeriodicDrive(T, name="zero")


def _grid_index(t: float, N: int, T: float) -> int:
    x = t * N / T
    j = round(x)
    if abs(x - j) > _GRID_TOL * max(1.0, N):
        raise ValueError(f"time {t} is not on the N={N} sample grid of period {T}")
    return j


def interval_values(drive: PeriodicDrive, N: int) -> np.ndarray:
    """Drive averaged over each sample interval ``[t_j, t_{j+1})``.

    A kick of amplitude ``A`` contributes ``A N / T`` to the interval it opens
    (non-symmetric), or half of that to each interval adjacent to its grid
    point (symmetric).
    """
    if N < 1:
        raise ValueError("N must be positive")
    T = drive.T
    v = np.zeros(N)
    height = N / T
    for t, a in drive.kicks:
        j = _grid_index(t, N, T) % N
        if drive.convention == "symmetric":
            v[j] += 0.5 * a * height
            v[(j - 1) % N] += 0.5 * a * height
        else:
            v[j] += a * height
    for s, e, value in drive.segments:
        js, je = _grid_index(s, N, T), _grid_index(e, N, T)
        v[js:je] += value
    return v


def fourier_coefficients(drive: PeriodicDrive, k) -> np.ndarray:
    """Continuous coefficients ``c_k = (1/T) int_0^T V(t) exp(-i k omega t) dt``."""
    k = np.asarray(k)
    T, w = drive.T, drive.omega
    c = np.zeros(k.shape, dtype=complex)
    for t, a in drive.kicks:
        c += a / T * np.exp(-1j * k * w * t)
    zero = k == 0
    kw = np.where(zero, 1.0, k * w)
    for s, e, value in drive.segments:
        piece = (np.exp(-1j * k * w * s) - np.exp(-1j * k * w * e)) / (1j * kw)
        c += value / T * np.where(zero, e - s, piece)
    return c


@dataclass(frozen=True, eq=False)
class TranslationGenerator:
    """``G`` with ``expm(G T / N)`` the cyclic advance ``f(t_j) -> f(t_{j+1})``.

    ``-iG`` is the lattice version of ``-i d/dt``; its spectrum is
    ``m * omega`` for ``m`` in :class:`FourierModeSet` ``(N)``.
    """

    N: int
    T: float
    matrix: np.ndarray = field(repr=False)

    @property
    def omega(self) -> float:
        return 2.0 * np.pi / self.T


def shift_matrix(N: int) -> np.ndarray:
    """Cyclic advance: ``(S f)_j = f_{(j+1) mod N}``."""
    return np.roll(np.eye(N), 1, axis=1)


def translation_generator(N: int, T: float = 1.0) -> TranslationGenerator:
    """Generator of time translations on the ``N``-point grid.

    Built from the eigendecomposition of the circulant shift (discrete Fourier
    modes). The logarithm branch puts the Nyquist eigenvalue ``-1`` at
    ``m = -N/2``, so for ``N = 4`` the spectrum of ``-iG`` is
    ``(-2, -1, 0, 1) * omega``.
    """
    if N < 2:
        raise ValueError(f"translation generator needs N >= 2, got {N}")
    modes = FourierModeSet(N, T)
    F = modes.unitary()
    G = (F * (1j * modes.mode_indices * modes.omega)) @ F.conj().T
    G.setflags(write=False)
    return TranslationGenerator(N=N, T=float(T), matrix=G)


def basis_unitary(basis_tag: str, N: int) -> np.ndarray:
    """Columns are the basis functions of ``basis_tag`` in the interval basis."""
    if basis_tag == "walsh":
        n = _log2(N)
        return build_walsh_basis(n).unitary()
    if basis_tag == "discrete_fourier":
        return FourierModeSet(N).unitary()
    raise ValueError(f"basis {basis_tag!r} has no interval-basis representation")


def _log2(N: int) -> int:
    if N < 1 or N & (N - 1):
        raise ValueError(f"Walsh basis needs N a power of two, got {N}")
    return N.bit_length() - 1


def _check_basis(basis_tag: str) -> None:
    if basis_tag not in BASES:
        raise ValueError(f"unknown basis {basis_tag!r}; expected one of {BASES}")


def generator_in_basis(g: TranslationGenerator, basis_tag: str) -> np.ndarray:
    """``G`` expressed in the chosen basis (similarity transform)."""
    _check_basis(basis_tag)
    if basis_tag == "fourier":
        modes = FourierModeSet(g.N, g.T)
        return np.diag(1j * modes.mode_indices * modes.omega)
    U = basis_unitary(basis_tag, g.N)
    out = U.conj().T @ g.matrix @ U
    if basis_tag == "discrete_fourier":
        # exactly diagonal by construction; drop rounding noise
        out = np.diag(np.diag(out))
    return out


def drive_matrix(drive: PeriodicDrive, basis_tag: str, N: int) -> np.ndarray:
    """Sambe-space matrix elements ``<<f_a| V |f_b>>`` of the scalar drive."""
    _check_basis(basis_tag)
    if basis_tag == "fourier":
        m = FourierModeSet(N, drive.T).mode_indices
        return fourier_coefficients(drive, m[:, None] - m[None, :])
    v = interval_values(drive, N)
    if basis_tag == "walsh":
        H = build_walsh_basis(_log2(N)).hadamard.astype(float)
        return (H * v) @ H.T / N
    U = basis_unitary(basis_tag, N)
    return (U.conj().T * v) @ U


@dataclass(frozen=True, eq=False)
class ExtendedOperator:
    """Truncated quasienergy operator on ``H (x) L``; mode-major layout.

    ``photon_energy`` is the ``-i d/dt`` block in the same mode basis; it
    carries the Floquet zone structure needed for representative selection.
    """

    basis_tag: str
    dim_h: int
    N: int
    T: float
    matrix: np.ndarray = field(repr=False)
    photon_energy: np.ndarray = field(repr=False)
    mode_labels: tuple[int, ...] | None = None
    symmetrized: int = 0

    def __post_init__(self):
        if self.matrix.shape != (self.dim_h * self.N,) * 2:
            raise ValueError("matrix shape does not match dim_h * N")
        if self.photon_energy.shape != (self.N, self.N):
            raise ValueError("photon_energy must be N x N")

    @property
    def omega(self) -> float:
        return 2.0 * np.pi / self.T

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def block(self, a: int, b: int) -> np.ndarray:
        d = self.dim_h
        return self.matrix[a * d : (a + 1) * d, b * d : (b + 1) * d]

    def to_csv(self, path) -> None:
        write_complex_matrix(
            path,
            self.matrix,
            basis=self.basis_tag,
            dim_h=self.dim_h,
            N=self.N,
            T=repr(self.T),
            symmetrized=self.symmetrized,
        )


def write_complex_matrix(path, matrix: np.ndarray, **meta) -> None:
    """Plain-text dump: ``# key=value`` header lines, then one matrix row per
    line as comma-separated ``re,im`` pairs."""
    matrix = np.asarray(matrix, dtype=complex)
    lines = [f"# {k}={v}" for k, v in meta.items()]
    lines.append(f"# shape={matrix.shape[0]}x{matrix.shape[1]}")
    for row in matrix:
        pairs = np.empty(2 * row.size)
        pairs[0::2], pairs[1::2] = row.real, row.imag
        lines.append(",".join(repr(float(x)) for x in pairs))
    Path(path).write_text("\n".join(lines) + "\n")


def read_complex_matrix(path) -> tuple[np.ndarray, dict[str, str]]:
    meta: dict[str, str] = {}
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
        elif line.strip():
            x = np.array([float(v) for v in line.split(",")])
            rows.append(x[0::2] + 1j * x[1::2])
    matrix = np.array(rows, dtype=complex)
    if "shape" in meta:
        r, c = (int(v) for v in meta["shape"].split("x"))
        if matrix.shape != (r, c):
            raise ValueError(f"{path}: expected {r}x{c} entries, read {matrix.shape}")
    return matrix, meta


def load_extended_operator(path) -> ExtendedOperator:
    """Read back an operator written by :meth:`ExtendedOperator.to_csv`.

    The photon block is rebuilt from the basis tag, so symmetrized operators
    cannot be reloaded.
    """
    matrix, meta = read_complex_matrix(path)
    tag, N, T = meta["basis"], int(meta["N"]), float(meta["T"])
    if int(meta.get("symmetrized", 0)):
        raise ValueError("symmetrized operators cannot be reloaded")
    return ExtendedOperator(
        basis_tag=tag,
        dim_h=int(meta["dim_h"]),
        N=N,
        T=T,
        matrix=matrix,
        photon_energy=_photon_energy(tag, N, T),
        mode_labels=tuple(_mode_labels(tag, N)),
    )


def _photon_energy(basis_tag: str, N: int, T: float) -> np.ndarray:
    if N == 1:
        return np.zeros((1, 1), dtype=complex)
    G = generator_in_basis(translation_generator(N, T), basis_tag)
    E = -1j * G
    return 0.5 * (E + E.conj().T)


def _mode_labels(basis_tag: str, N: int):
    if basis_tag == "walsh":
        return range(N)
    return FourierModeSet(N).mode_indices.tolist()


def assemble_q(
    model: SpinModel,
    drive: PeriodicDrive,
    basis_tag: str,
    N: int,
    *,
    symmetrize: bool = False,
) -> ExtendedOperator:
    """Truncated quasienergy operator ``Q = H(t) - i d/dt`` in ``basis_tag``.

    ``Q = I_N (x) H_static + h_x V_ab (x) drive_op + (-iG)_ab (x) I``.
    """
    _check_basis(basis_tag)
    if N < 1:
        raise ValueError("N must be positive")
    d = model.dim
    if model.drive_op.shape != (d, d):
        raise ValueError("drive operator does not match the static Hamiltonian")
    V = drive_matrix(drive, basis_tag, N)
    E = _photon_energy(basis_tag, N, drive.T)
    Q = np.kron(np.eye(N), model.static_h) + model.h_x * np.kron(V, model.drive_op) + np.kron(E, np.eye(d))
    Q = 0.5 * (Q + Q.conj().T)
    q = ExtendedOperator(
        basis_tag=basis_tag,
        dim_h=d,
        N=N,
        T=drive.T,
        matrix=Q,
        photon_energy=E,
        mode_labels=tuple(_mode_labels(basis_tag, N)),
    )
    return symmetrize_walsh(q) if symmetrize else q


def symmetrize_walsh(q: ExtendedOperator) -> ExtendedOperator:
    """Drop the photon subspace carrying the lowest ``-i d/dt`` eigenvalue.

    On a fresh Walsh operator this removes ``W_1`` (natural order), the
    Nyquist mode at ``-N/2 omega``, leaving the symmetric photon spectrum.
    Repeated calls keep removing the current lowest level.
    """
    if q.basis_tag != "walsh":
        raise ValueError("symmetrization is defined for Walsh operators only")
    if q.N < 2:
        raise ValueError("nothing left to remove")
    vals, vecs = np.linalg.eigh(q.photon_energy)
    lowest = np.abs(vals - vals[0]) < 1e-8 * q.omega
    P = vecs[:, lowest]
    support = np.abs(P) > 1e-10
    coordinate = bool(np.all(support.sum(axis=0) == 1)) and bool(np.all(support.sum(axis=1) <= 1))
    d = q.dim_h
    if coordinate:
        drop = set(np.flatnonzero(support.any(axis=1)).tolist())
        keep = [i for i in range(q.N) if i not in drop]
        rows = [m * d + a for m in keep for a in range(d)]
        matrix = q.matrix[np.ix_(rows, rows)]
        energy = q.photon_energy[np.ix_(keep, keep)]
        labels = None if q.mode_labels is None else tuple(q.mode_labels[i] for i in keep)
    else:
        B = vecs[:, ~lowest]
        BB = np.kron(B, np.eye(d))
        matrix = BB.conj().T @ q.matrix @ BB
        energy = np.diag(vals[~lowest]).astype(complex)
        labels = None
    return ExtendedOperator(
        basis_tag=q.basis_tag,
        dim_h=d,
        N=energy.shape[0],
        T=q.T,
        matrix=0.5 * (matrix + matrix.conj().T),
        photon_energy=energy,
        mode_labels=labels,
        symmetrized=q.symmetrized + 1,
    )
