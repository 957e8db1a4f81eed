from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from walsh_floquet.lattice import PeriodicDrive, assemble_q, square_wave, updown_kick, zero_drive
from walsh_floquet.models import build_mfim
from walsh_floquet.solve import (
    FloquetSolution,
    circular_distance,
    exact_from_unitary,
    exact_propagator,
    fold_phase,
    match_phases,
    participation_entropy,
    phase_error,
    shannon_entropy,
    solve,
)


def test_fold_range():
    x = np.array([-np.pi, np.pi, 3 * np.pi, -3.5, 0.1, 7.0])
    f = fold_phase(x)
    assert np.all(f > -np.pi) and np.all(f <= np.pi)
    assert np.allclose(np.exp(1j * f), np.exp(1j * x))
    assert fold_phase(-np.pi) == np.pi


@pytest.mark.parametrize("L", [1, 2, 3])
def test_static_limit(L):
    model = build_mfim(L, J=0.9, h_z=1.7, h_x=0.0)
    T = 1.3
    ex = exact_propagator(model, updown_kick(T))
    eps = np.linalg.eigvalsh(model.static_h)
    assert np.allclose(np.sort(ex.phases), np.sort(fold_phase(eps * T)), atol=1e-12)


@pytest.mark.parametrize("L", [1, 2, 3])
def test_zero_field_is_identity(L):
    model = build_mfim(L, J=0.0, h_z=0.0, h_x=1.234)
    ex = exact_propagator(model, updown_kick())
    assert np.allclose(ex.U, np.eye(2**L), atol=1e-12)
    assert np.allclose(ex.phases, 0, atol=1e-12)
    assert ex.degenerate


def test_gauges_share_quasienergies():
    T = 1.0
    model = build_mfim(1, h_z=1.1 * np.pi / T, h_x=np.pi / 4)
    a = exact_propagator(model, updown_kick(T), gauge="symmetric")
    b = exact_propagator(model, updown_kick(T), gauge="nonsymmetric")
    assert np.allclose(np.sort(a.phases), np.sort(b.phases), atol=1e-12)
    assert not np.allclose(a.U, b.U)
    with pytest.raises(ValueError):
        exact_propagator(model, updown_kick(T), gauge="other")


def test_kick_propagator_by_hand():
    T, hz, hx = 0.8, 0.6, 0.9
    model = build_mfim(1, h_z=hz, h_x=hx)
    K = lambda a: sla.expm(-1j * hx * a * model.drive_op)
    S = sla.expm(-1j * model.static_h * T / 2)
    U = S @ K(-1) @ S @ K(1)
    ex = exact_propagator(model, updown_kick(T, "nonsymmetric"))
    assert np.allclose(ex.U, U, atol=1e-12)
    Us = K(0.5) @ S @ K(-1) @ S @ K(0.5)
    assert np.allclose(exact_propagator(model, updown_kick(T, "symmetric")).U, Us, atol=1e-12)


def test_square_wave_propagator_by_hand():
    T = 0.7
    model = build_mfim(2, J=0.4, h_z=0.3, h_x=1.1)
    U = sla.expm(-1j * model.hamiltonian(-1) * T / 2) @ sla.expm(-1j * model.hamiltonian(1) * T / 2)
    ex = exact_propagator(model, square_wave(T))
    assert np.allclose(ex.U, U, atol=1e-12)
    assert np.allclose(ex.U @ ex.U.conj().T, np.eye(4), atol=1e-12)


def test_exact_eigenvectors():
    model = build_mfim(2, J=0.4, h_z=0.3, h_x=1.1)
    ex = exact_propagator(model, updown_kick())
    V = ex.eigenvectors
    assert np.allclose(V.conj().T @ V, np.eye(4), atol=1e-12)
    assert np.allclose(ex.U @ V, V * np.exp(-1j * ex.phases), atol=1e-12)
    assert np.all(np.diff(ex.phases) >= 0)


@pytest.mark.parametrize("tag,N", [("fourier", 7), ("walsh", 8), ("discrete_fourier", 8)])
@pytest.mark.parametrize("rule", ["p0", "centroid"])
def test_zero_drive_solution(tag, N, rule):
    T = 1.0
    model = build_mfim(2, J=0.3, h_z=0.2, h_x=1.0)
    sol = solve(assemble_q(model, zero_drive(T), tag, N), rule)
    assert sol.representatives.sum() == 4
    reps = sol.representative_indices
    zero = sol.mode_labels.index(0)
    assert np.allclose(sol.mode_weights[reps, zero], 1.0, atol=1e-10)
    assert np.allclose(participation_entropy(sol).values, 0.0, atol=1e-9)
    eps = np.linalg.eigvalsh(model.static_h)
    assert np.allclose(np.sort(sol.representative_phases), np.sort(fold_phase(eps * T)), atol=1e-10)


def test_solution_invariants():
    model = build_mfim(2, J=1.0, h_z=0.5, h_x=0.7)
    for tag, N in (("walsh", 16), ("fourier", 15)):
        sol = solve(assemble_q(model, updown_kick(), tag, N))
        assert isinstance(sol, FloquetSolution)
        assert np.allclose(sol.mode_weights.sum(axis=1), 1.0, atol=1e-12)
        S = sol.entropy
        assert np.all(S >= -1e-12) and np.all(S <= np.log(N) + 1e-12)
        assert sol.representatives.sum() == sol.dim_h
        assert np.all(sol.phases > -np.pi) and np.all(sol.phases <= np.pi)


def test_unknown_rule():
    q = assemble_q(build_mfim(1), updown_kick(), "walsh", 4)
    with pytest.raises(ValueError):
        solve(q, "biggest")


def test_non_hermitian_rejected():
    q = assemble_q(build_mfim(1), updown_kick(), "walsh", 4)
    bad = type(q)(q.basis_tag, q.dim_h, q.N, q.T, q.matrix + np.triu(np.ones_like(q.matrix), 1), q.photon_energy, q.mode_labels)
    with pytest.raises(ValueError):
        solve(bad)


def test_phase_error_self_is_zero():
    model = build_mfim(3, J=1.0, h_z=0.4, h_x=0.8)
    ex = exact_propagator(model, updown_kick())
    err = phase_error(ex, ex)
    assert np.all(err.per_state == 0)
    assert err.median == 0 and err.max == 0


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-np.pi, np.pi), min_size=1, max_size=12), st.randoms(use_true_random=False))
def test_matching_is_a_permutation(phases, rnd):
    exact = np.array(phases)
    approx = exact.copy()
    rnd.shuffle(approx)
    err, matched = match_phases(approx, exact)
    assert np.allclose(err, 0, atol=1e-12)
    assert sorted(matched.tolist()) == sorted(approx.tolist())


def test_matching_beats_greedy_near_crossing():
    exact = np.array([0.0, 0.1])
    approx = np.array([0.06, 0.16])
    err, _ = match_phases(approx, exact)
    # greedy would pair 0.1 with 0.06 and leave 0.0 with 0.16
    assert np.allclose(err, [0.06, 0.06])


def test_circular_wraparound():
    assert np.isclose(circular_distance(np.pi - 0.01, -np.pi + 0.01), 0.02)
    err, _ = match_phases([np.pi - 0.01], [-np.pi + 0.01])
    assert np.isclose(err[0], 0.02)


def test_count_mismatch():
    with pytest.raises(ValueError):
        match_phases([0.1, 0.2], [0.1])


def test_singular_flag():
    model = build_mfim(1, h_z=0.0, h_x=0.9)
    ex = exact_propagator(model, updown_kick())
    sol = solve(assemble_q(model, updown_kick(), "walsh", 8))
    assert phase_error(sol, ex).singular


def test_entropy_limits():
    assert shannon_entropy(np.array([0.0, 1.0, 0.0])) == 0.0
    for N in (2, 7, 64):
        assert np.isclose(shannon_entropy(np.full(N, 1 / N)), np.log(N))


def test_dark_component_flag():
    model = build_mfim(1, h_z=0.3, h_x=0.0)
    sol = solve(assemble_q(model, zero_drive(), "walsh", 4))
    ent = participation_entropy(sol, 0)
    # with no drive each representative is a pure spin state, one has no up part
    assert ent.dark.sum() == 1
    assert np.allclose(ent.values, 0, atol=1e-12)
    with pytest.raises(IndexError):
        participation_entropy(sol, 2)


def test_entropy_phase_and_relabel_invariance():
    model = build_mfim(2, J=0.5, h_z=0.4, h_x=0.6)
    sol = solve(assemble_q(model, updown_kick(), "fourier", 9))
    S = participation_entropy(sol).values
    W = sol.component_weights[sol.representative_indices][:, :, ::-1]
    assert np.allclose(shannon_entropy(W.sum(axis=2)), S)
    # weights are built from |amplitude|^2 so a global phase cannot enter
    v = sol.vectors * np.exp(0.7j)
    P = (np.abs(v) ** 2).reshape(sol.N, sol.dim_h, -1).sum(axis=1).T
    assert np.allclose(P, sol.mode_weights)


def _response_state(sol):
    reps = sol.representative_indices
    up = sol.component_weights[reps, :, 0].sum(axis=1)
    return reps[np.argmin(up)]


def test_walsh_response_localized_fourier_power_law():
    T = 2 * np.pi / 50
    model = build_mfim(1, h_z=1.0, h_x=0.5)
    drive = updown_kick(T)
    sw = solve(assemble_q(model, drive, "walsh", 32))
    sf = solve(assemble_q(model, drive, "fourier", 31))
    kw, kf = _response_state(sw), _response_state(sf)
    Sw = participation_entropy(sw, 0, indices=kw).values[0]
    Sf = participation_entropy(sf, 0, indices=kf).values[0]
    assert Sw < 0.5 * Sf
    # the spin-up part of the mostly-down state sits on W_0 and W_{N/2}
    w = np.sort(sw.component_weights[kw, :, 0])[::-1]
    assert w[:2].sum() / w.sum() > 0.95
    a = np.abs(sf.mode_amplitudes(kf, 0))
    lab = np.array(sf.mode_labels)
    odd = (lab % 2 != 0) & (lab > 0) & (lab < 12)
    slope = np.polyfit(np.log(lab[odd]), np.log(a[odd]), 1)[0]
    assert -1.3 < slope < -0.7


def test_representatives_stable_in_N():
    T = 2 * np.pi / 50
    model = build_mfim(1, h_z=1.0, h_x=6.0)
    a = solve(assemble_q(model, square_wave(T), "fourier", 31)).representative_phases
    b = solve(assemble_q(model, square_wave(T), "fourier", 33)).representative_phases
    assert np.max(np.abs(np.sort(a) - np.sort(b))) < 1e-3


def test_square_wave_prefers_fourier():
    T = 2 * np.pi / 50
    model = build_mfim(1, h_z=1.0, h_x=6.0)
    drive = square_wave(T)
    ex = exact_propagator(model, drive)
    ew = phase_error(solve(assemble_q(model, drive, "walsh", 32)), ex).median
    ef = phase_error(solve(assemble_q(model, drive, "fourier", 31)), ex).median
    assert ef < ew


def test_exact_from_unitary_rejects_nothing_but_sorts():
    U = np.diag(np.exp(-1j * np.array([0.3, -0.2, 1.0])))
    ex = exact_from_unitary(U)
    assert np.allclose(ex.phases, [-0.2, 0.3, 1.0])


def test_general_drive_segments_and_kicks():
    T = 1.0
    drive = PeriodicDrive(T, kicks=((0.25, 0.3),), segments=((0.5, 1.0, 2.0),), convention="nonsymmetric")
    model = build_mfim(1, h_z=0.5, h_x=0.4)
    H0, H1 = model.hamiltonian(0.0), model.hamiltonian(2.0)
    K = sla.expm(-1j * 0.4 * 0.3 * model.drive_op)
    U = sla.expm(-1j * H1 * 0.5) @ sla.expm(-1j * H0 * 0.25) @ K @ sla.expm(-1j * H0 * 0.25)
    assert np.allclose(exact_propagator(model, drive).U, U, atol=1e-12)
