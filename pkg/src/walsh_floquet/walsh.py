"""Walsh-Hadamard and discrete Fourier bases on the sample grid ``t_j = jT/N``.

Natural (Hadamard) ordering is the storage order everywhere; sequency labels
are a view obtained through :func:`sequency_of` / :func:`natural_of`.

Normalization: forward transforms carry ``1/N``, inverse transforms none, so
``h_0`` is always the time average of the samples.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

import numpy as np

# int8 Hadamard of size N costs N**2 bytes
MAX_HADAMARD_BYTES = 1 << 28


class ResourceLimitError(MemoryError):
    """Requested basis does not fit the memory budget."""


class AliasWarning(RuntimeWarning):
    """The alias sum did not converge within the requested tolerance."""


@dataclass(frozen=True, eq=False)
class WalshBasis:
    n: int
    T: float
    hadamard: np.ndarray = field(repr=False)
    natural_to_sequency: np.ndarray = field(repr=False)
    sequency_to_natural: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def omega(self) -> float:
        return 2.0 * np.pi / self.T

    @property
    def sample_times(self) -> np.ndarray:
        return np.arange(self.N) * self.T / self.N

    def unitary(self) -> np.ndarray:
        """Orthonormal change of basis; column ``m`` is ``W_m(t_j)/sqrt(N)``."""
        return self.hadamard.astype(float) / math.sqrt(self.N)

    def row(self, m: int, *, sequency: bool = False) -> np.ndarray:
        if sequency:
            m = natural_of(m, self)
        _check_index(m, self.N)
        return self.hadamard[m]


@dataclass(frozen=True)
class FourierModeSet:
    """Harmonic labels ``m`` of a truncated (discrete) Fourier basis.

    Odd ``N`` gives the symmetric window ``-(N-1)/2 .. (N-1)/2``; even ``N``
    gives ``-N/2 .. N/2-1``.
    """

    N: int
    T: float = 1.0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"need at least one mode, got N={self.N}")
        if self.T <= 0:
            raise ValueError("period must be positive")

    @property
    def mode_indices(self) -> np.ndarray:
        return np.arange(self.N) - self.N // 2

    @property
    def omega(self) -> float:
        return 2.0 * np.pi / self.T

    def unitary(self) -> np.ndarray:
        """Column ``k`` holds ``exp(i m_k omega t_j)/sqrt(N)`` on the sample grid."""
        j = np.arange(self.N)
        return np.exp(2j * np.pi * np.outer(j, self.mode_indices) / self.N) / math.sqrt(self.N)


def hadamard_matrix(n: int) -> np.ndarray:
    """Sylvester-Hadamard matrix ``H_2^{(x)n}`` as int8, natural ordering."""
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    N = 1 << n
    if N * N > MAX_HADAMARD_BYTES:
        raise ResourceLimitError(f"Hadamard matrix of order 2^{n} exceeds the memory budget")
    # entry (a, j) = (-1)^popcount(a & j)
    idx = np.arange(N, dtype=np.int64)
    anded = idx[:, None] & idx[None, :]
    parity = np.zeros_like(anded)
    while anded.any():
        parity ^= anded & 1
        anded >>= 1
    return (1 - 2 * parity).astype(np.int8)


def sign_changes(row: np.ndarray) -> int:
    """Number of sign changes across j = 0..N-1 (non-cyclic)."""
    row = np.asarray(row)
    return int(np.count_nonzero(row[1:] != row[:-1]))


def build_walsh_basis(n: int, T: float = 1.0) -> WalshBasis:
    if T <= 0:
        raise ValueError("period must be positive")
    H = hadamard_matrix(n)
    seq = np.count_nonzero(H[:, 1:] != H[:, :-1], axis=1).astype(np.int64)
    inv = np.empty_like(seq)
    inv[seq] = np.arange(seq.size)
    for arr in (H, seq, inv):
        arr.setflags(write=False)
    return WalshBasis(n=n, T=float(T), hadamard=H, natural_to_sequency=seq, sequency_to_natural=inv)


def _check_index(m: int, N: int) -> None:
    if not 0 <= m < N:
        raise IndexError(f"index {m} out of range for N={N}")


def sequency_of(m_natural: int, basis: WalshBasis) -> int:
    _check_index(m_natural, basis.N)
    return int(basis.natural_to_sequency[m_natural])


def natural_of(sequency: int, basis: WalshBasis) -> int:
    _check_index(sequency, basis.N)
    return int(basis.sequency_to_natural[sequency])


def _check_length(x: np.ndarray, N: int) -> None:
    if x.shape[0] != N:
        raise ValueError(f"expected {N} samples along axis 0, got {x.shape[0]}")


def fwht(x: np.ndarray) -> np.ndarray:
    """Unnormalized fast Walsh-Hadamard transform along axis 0 (natural order)."""
    y = np.array(x, copy=True)
    N = y.shape[0]
    if N & (N - 1):
        raise ValueError(f"length {N} is not a power of two")
    h = 1
    while h < N:
        y = y.reshape((N // (2 * h), 2, h) + y.shape[1:])
        a = y[:, 0].copy()
        b = y[:, 1]
        y[:, 0] = a + b
        y[:, 1] = a - b
        y = y.reshape((N,) + y.shape[3:])
        h *= 2
    return y


def wht(samples, basis: WalshBasis, *, fast: bool = False) -> np.ndarray:
    """Walsh coefficients ``h = H @ samples / N`` (natural order).

    ``samples`` may carry trailing axes, e.g. a stack of N matrices.
    """
    x = np.asarray(samples)
    _check_length(x, basis.N)
    if fast:
        return fwht(x) / basis.N
    return np.tensordot(basis.hadamard, x, axes=(1, 0)) / basis.N


def inverse_wht(coefficients, basis: WalshBasis, *, fast: bool = False) -> np.ndarray:
    h = np.asarray(coefficients)
    _check_length(h, basis.N)
    if fast:
        return fwht(h)
    return np.tensordot(basis.hadamard, h, axes=(1, 0)) * 1.0


def dft_coefficients(samples, modes: FourierModeSet) -> np.ndarray:
    """``c~_m = (1/N) sum_n f(t_n) exp(-i m omega t_n)`` for each ``m`` in ``modes``."""
    f = np.asarray(samples, dtype=complex)
    _check_length(f, modes.N)
    n = np.arange(modes.N)
    phase = np.exp(-2j * np.pi * np.outer(modes.mode_indices, n) / modes.N)
    return phase @ f / modes.N


@dataclass(frozen=True)
class AliasFoldResult:
    modes: np.ndarray
    values: np.ndarray
    remainder: float
    converged: bool


def _as_coefficient_function(c) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(c, Mapping):
        table = dict(c)
        return np.vectorize(lambda k: complex(table.get(int(k), 0.0)), otypes=[complex])
    return lambda k: np.asarray(c(k), dtype=complex)


def alias_fold(
    c,
    N: int,
    K_max: int = 10_000,
    *,
    modes: FourierModeSet | None = None,
    tol: float = 1e-10,
    extrapolate: bool = True,
) -> AliasFoldResult:
    """Fold continuous Fourier coefficients onto the ``N`` discrete modes.

    Computes ``c~_m = sum_k c_{m + kN}`` with symmetric partial sums over
    ``|k| <= K``. Conditionally convergent tails (``c_m ~ 1/m``) are
    accelerated by Richardson extrapolation over ``K_max, K_max/2, ...``;
    the spread of the extrapolants is reported as ``remainder`` and an
    :class:`AliasWarning` is emitted when it exceeds ``tol``.

    Arguments:
        c: mapping mode -> coefficient, or a vectorized callable of integer arrays.
        N: number of discrete modes.
        K_max: largest alias order included.
    """
    if N < 1 or K_max < 1:
        raise ValueError("N and K_max must be positive")
    modes = modes or FourierModeSet(N)
    if modes.N != N:
        raise ValueError("mode set does not match N")
    coef = _as_coefficient_function(c)
    m = modes.mode_indices

    levels = 4 if (extrapolate and K_max >= 16) else 1
    Ks = [K_max >> (levels - 1 - i) for i in range(levels)]
    partial = []
    total = coef(m).astype(complex)
    done = 0
    for K in Ks:
        k = np.arange(done + 1, K + 1)
        if k.size:
            shifted = m[:, None] + N * k[None, :]
            total = total + coef(shifted).sum(axis=1) + coef(m[:, None] - N * k[None, :]).sum(axis=1)
        done = K
        partial.append(total.copy())

    # Richardson table for S_K = S + a/K + b/K^2 + ...; Ks double each level
    table = [partial]
    for p in range(1, levels):
        prev = table[-1]
        factor = 2.0**p
        table.append([(factor * prev[i + 1] - prev[i]) / (factor - 1) for i in range(len(prev) - 1)])
    best = table[-1][-1]
    if levels > 1:
        remainder = float(np.max(np.abs(table[-1][-1] - table[-2][-1])))
    else:
        remainder = float(np.max(np.abs(coef(m[:, None] + N * np.array([[-K_max, K_max]])))) * 2)
    converged = bool(remainder <= tol)
    if not converged:
        warnings.warn(
            f"alias sum not converged: remainder estimate {remainder:.3g} > tol {tol:.3g}",
            AliasWarning,
            stacklevel=2,
        )
    return AliasFoldResult(modes=m, values=best, remainder=remainder, converged=converged)


def square_wave_coefficients(k) -> np.ndarray:
    """Continuous Fourier coefficients of +1 on [0, T/2), -1 on [T/2, T)."""
    k = np.asarray(k)
    out = np.zeros(k.shape, dtype=complex)
    odd = (k % 2) != 0
    out[odd] = -2j / (np.pi * k[odd])
    return out


def square_wave_samples(N: int) -> np.ndarray:
    """Square wave on the grid with the Fourier-series midpoint (0) at both jumps."""
    twice = 2 * np.arange(N)
    f = np.sign(N - twice).astype(float)
    f[0] = 0.0
    return f
