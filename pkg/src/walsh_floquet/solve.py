"""Quasienergy extraction, exact stroboscopic oracle and localization diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .lattice import ExtendedOperator, PeriodicDrive
from .models import SpinModel, kick_unitary

SELECTION_RULES = ("p0", "centroid")


def fold_phase(theta):
    """Map phases onto ``(-pi, pi]``."""
    theta = np.asarray(theta, dtype=float)
    return np.pi - np.mod(np.pi - theta, 2.0 * np.pi)


def circular_distance(a, b):
    d = np.mod(np.asarray(a) - np.asarray(b), 2.0 * np.pi)
    return np.minimum(d, 2.0 * np.pi - d)


@dataclass(frozen=True, eq=False)
class ExactFloquetResult:
    U: np.ndarray = field(repr=False)
    phases: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    gauge: str = "symmetric"

    @property
    def degenerate(self) -> bool:
        """All phases coincide, e.g. ``U(T) = 1`` at ``h_z = 0``."""
        p = self.phases
        return bool(np.max(circular_distance(p[:, None], p[None, :]), initial=0.0) < 1e-9)


def _evolve(h: np.ndarray, dt: float) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * dt)) @ v.conj().T


def exact_propagator(model: SpinModel, drive: PeriodicDrive, gauge: str | None = None) -> ExactFloquetResult:
    """One-period propagator ``U(T)`` for a kick train plus step drive.

    Kick ``A`` at time ``t`` acts as ``exp(-i h_x A drive_op)``. In the
    symmetric gauge a kick at ``t = 0`` is split into half kicks at the start
    and the end of the period; both gauges give the same quasienergies.
    """
    gauge = gauge or drive.convention
    if gauge not in ("symmetric", "nonsymmetric"):
        raise ValueError(f"unknown gauge {gauge!r}")
    T = drive.T
    kicks: dict[float, float] = {}
    for t, a in drive.kicks:
        kicks[t] = kicks.get(t, 0.0) + a
    points = sorted(set(drive.breakpoints()) | {0.0}) + [T]

    d = model.dim
    U = np.eye(d, dtype=complex)
    end_kick = 0.0
    for start, stop in zip(points[:-1], points[1:]):
        a = kicks.get(start, 0.0)
        if start == 0.0 and gauge == "symmetric":
            a, end_kick = 0.5 * a, 0.5 * a
        if a:
            U = kick_unitary(model, model.h_x * a) @ U
        if stop > start:
            U = _evolve(model.hamiltonian(drive.segment_value(0.5 * (start + stop))), stop - start) @ U
    if end_kick:
        U = kick_unitary(model, model.h_x * end_kick) @ U
    return exact_from_unitary(U, gauge=gauge)


def exact_from_unitary(U: np.ndarray, gauge: str = "symmetric") -> ExactFloquetResult:
    # U is normal, so its complex Schur form is diagonal with unitary vectors
    S, Z = sla.schur(U, output="complex")
    phases = fold_phase(-np.angle(np.diag(S)))
    order = np.argsort(phases, kind="stable")
    return ExactFloquetResult(U=U, phases=phases[order], eigenvectors=Z[:, order], gauge=gauge)


@dataclass(frozen=True, eq=False)
class FloquetSolution:
    """Eigenpairs of a truncated quasienergy operator.

    ``mode_weights[k, m]`` is the weight ``P_m`` of eigenvector ``k`` on photon
    mode ``m``; ``component_weights[k, m, alpha]`` resolves it further by
    physical basis state.
    """

    basis_tag: str
    T: float
    quasienergies: np.ndarray
    phases: np.ndarray
    vectors: np.ndarray = field(repr=False)
    representatives: np.ndarray = field(repr=False)
    component_weights: np.ndarray = field(repr=False)
    photon_centroid: np.ndarray = field(repr=False)
    mode_labels: tuple[int, ...] | None = None

    @property
    def dim_h(self) -> int:
        return self.component_weights.shape[2]

    @property
    def N(self) -> int:
        return self.component_weights.shape[1]

    @property
    def mode_weights(self) -> np.ndarray:
        return self.component_weights.sum(axis=2)

    @property
    def entropy(self) -> np.ndarray:
        return shannon_entropy(self.mode_weights)

    @property
    def representative_indices(self) -> np.ndarray:
        return np.flatnonzero(self.representatives)

    @property
    def representative_phases(self) -> np.ndarray:
        return self.phases[self.representatives]

    def mode_amplitudes(self, k: int, component: int) -> np.ndarray:
        """Amplitudes ``u~_m`` of physical state ``component`` in eigenvector ``k``."""
        return self.vectors[:, k].reshape(self.N, self.dim_h)[:, component]


def shannon_entropy(P: np.ndarray) -> np.ndarray:
    """``-sum P ln P`` along the last axis with ``0 ln 0 = 0``."""
    P = np.asarray(P, dtype=float)
    safe = np.where(P > 0, P, 1.0)
    return -np.sum(np.where(P > 0, P * np.log(safe), 0.0), axis=-1)


def _zero_mode(q: ExtendedOperator) -> int:
    labels = q.mode_labels
    if labels is None or 0 not in labels:
        raise ValueError("operator has no constant mode to select on")
    return labels.index(0)


def select_representatives(
    weights: np.ndarray,
    phases: np.ndarray,
    centroid: np.ndarray,
    dim_h: int,
    rule: str,
    zero_mode: int | None = None,
) -> np.ndarray:
    if rule not in SELECTION_RULES:
        raise ValueError(f"unknown selection rule {rule!r}")
    if rule == "centroid":
        keys = (np.abs(phases), np.abs(centroid))
    else:
        p0 = np.round(weights[:, zero_mode], 12)
        keys = (np.abs(phases), -p0)
    order = np.lexsort(keys)
    mask = np.zeros(phases.size, dtype=bool)
    mask[order[:dim_h]] = True
    return mask


def solve(q: ExtendedOperator, rule: str = "p0") -> FloquetSolution:
    """Dense Hermitian diagonalization of ``q`` plus representative selection.

    ``rule="p0"`` keeps the ``dim_h`` eigenvectors with the largest weight on
    the constant mode, ties going to the smaller ``|theta|``.
    ``rule="centroid"`` keeps those whose photon centroid
    ``<-i d/dt>/omega`` is closest to zero, one copy per Floquet family when
    the truncation is converged.
    """
    if q.hermiticity_error() > 1e-10 * max(1.0, float(np.max(np.abs(q.matrix)))):
        raise ValueError("quasienergy operator is not Hermitian")
    try:
        eps, vecs = np.linalg.eigh(q.matrix)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed: {exc}") from exc
    d, N = q.dim_h, q.N
    amp = vecs.reshape(N, d, -1)
    comp = np.transpose(np.abs(amp) ** 2, (2, 0, 1))
    # <psi| E (x) I |psi> / omega
    proj = np.einsum("mn,nak->mak", q.photon_energy, amp)
    centroid = np.real(np.einsum("mak,mak->k", amp.conj(), proj)) / q.omega
    phases = fold_phase(eps * q.T)
    zero = _zero_mode(q) if rule == "p0" else None
    reps = select_representatives(comp.sum(axis=2), phases, centroid, d, rule, zero)
    return FloquetSolution(
        basis_tag=q.basis_tag,
        T=q.T,
        quasienergies=eps,
        phases=phases,
        vectors=vecs,
        representatives=reps,
        component_weights=comp,
        photon_centroid=centroid,
        mode_labels=q.mode_labels,
    )


@dataclass(frozen=True)
class PhaseError:
    per_state: np.ndarray
    matched_phases: np.ndarray
    singular: bool = False

    @property
    def median(self) -> float:
        return float(np.median(self.per_state))

    @property
    def max(self) -> float:
        return float(np.max(self.per_state))

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_state))


def match_phases(approx, exact) -> tuple[np.ndarray, np.ndarray]:
    """Optimal assignment on circular distance; returns per-exact-state errors
    and the approximate phase assigned to each exact state."""
    approx, exact = np.asarray(approx, dtype=float), np.asarray(exact, dtype=float)
    if approx.size != exact.size:
        raise ValueError(f"cannot match {approx.size} phases against {exact.size}")
    cost = circular_distance(exact[:, None], approx[None, :])
    rows, cols = linear_sum_assignment(cost)
    return cost[rows, cols], approx[cols]


def phase_error(sol: FloquetSolution | ExactFloquetResult, exact: ExactFloquetResult) -> PhaseError:
    """``|theta_basis - theta_exact|`` per state after optimal matching."""
    approx = sol.representative_phases if isinstance(sol, FloquetSolution) else sol.phases
    err, matched = match_phases(approx, exact.phases)
    return PhaseError(per_state=err, matched_phases=matched, singular=exact.degenerate)


@dataclass(frozen=True)
class Entropy:
    values: np.ndarray
    dark: np.ndarray


def participation_entropy(
    sol: FloquetSolution,
    component: int | str = "all",
    indices=None,
) -> Entropy:
    """Photon participation entropy ``S = -sum_m P_m ln P_m``.

    ``component="all"`` traces over physical states; an integer restricts to
    that physical basis state and renormalizes. Eigenvectors with no weight on
    the component are flagged ``dark`` and get ``S = 0``.
    Defaults to the representatives.
    """
    idx = sol.representative_indices if indices is None else np.atleast_1d(indices)
    W = sol.component_weights[idx]
    if component == "all":
        P = W.sum(axis=2)
    else:
        if not 0 <= int(component) < sol.dim_h:
            raise IndexError(f"component {component} out of range")
        P = W[:, :, int(component)]
    norm = P.sum(axis=1)
    dark = norm < 1e-14
    P = P / np.where(dark, 1.0, norm)[:, None]
    S = np.where(dark, 0.0, shannon_entropy(P))
    return Entropy(values=S, dark=dark)
