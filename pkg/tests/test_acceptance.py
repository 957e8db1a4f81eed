"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The summary is repeated at the end of the pytest run under
"acceptance criteria".
"""

from __future__ import annotations

import time
from fractions import Fraction

import numpy as np

from walsh_floquet.experiments import ExperimentConfig, read_results, run
from walsh_floquet.fit import fit_power_law
from walsh_floquet.hfe import fab, remainder_scaling, two_tone_schedule, walsh_heff
from walsh_floquet.lattice import (
    assemble_q,
    drive_matrix,
    generator_in_basis,
    square_wave,
    translation_generator,
    updown_kick,
)
from walsh_floquet.models import SIGMA_Z, build_mfim
from walsh_floquet.solve import exact_propagator, fold_phase, phase_error, solve
from walsh_floquet.walsh import (
    FourierModeSet,
    alias_fold,
    build_walsh_basis,
    dft_coefficients,
    square_wave_coefficients,
    square_wave_samples,
)

PI = np.pi
# (0, 2 pi] in 20 steps, in units where T = 1
GRID = {"start": PI / 10, "stop": 2 * PI, "num": 20}


def _median_error(model, drive, basis, N):
    exact = exact_propagator(model, drive)
    return phase_error(solve(assemble_q(model, drive, basis, N)), exact)


def test_criterion_01_generator_spectrum(criterion):
    start = time.perf_counter()
    T = 1.0
    w = 2 * PI / T
    g4 = translation_generator(4, T)
    spec4 = np.sort(np.linalg.eigvals(-1j * g4.matrix).real)
    err4 = float(np.max(np.abs(spec4 - np.array([-2, -1, 0, 1]) * w)))
    worst = 0.0
    for n in range(1, 9):
        g = translation_generator(2**n, T)
        sw = np.sort(np.linalg.eigvals(-1j * generator_in_basis(g, "walsh")).real)
        sf = np.sort(np.linalg.eigvals(-1j * generator_in_basis(g, "fourier")).real)
        worst = max(worst, float(np.max(np.abs(sw - sf))))
    elapsed = time.perf_counter() - start
    ok = err4 < 1e-9 and worst < 1e-10 and elapsed < 1.0
    criterion("1 generator spectrum", ok, f"N=4 err {err4:.1e}, max Walsh/Fourier gap {worst:.1e}, {elapsed:.2f}s")
    assert ok


def test_criterion_02_fab_table(criterion):
    start = time.perf_counter()
    table = {
        Fraction(1, 4): [(1, 0)],
        Fraction(1, 8): [(3, 0), (2, 1)],
        Fraction(1, 16): [(7, 0), (6, 1), (5, 2), (4, 3)],
        Fraction(1, 32): [(15, 0), (14, 1), (13, 2), (12, 3), (11, 4), (10, 5), (9, 6), (8, 7)],
    }
    values_ok = all(fab(a, b) == v for v, pairs in table.items() for a, b in pairs)
    # a == b is left out: f_aa = 1/(2N) multiplies [h_a, h_a] = 0
    anti_ok = all(fab(a, b, 5) == -fab(b, a, 5) for a in range(32) for b in range(32) if a != b)
    elapsed = time.perf_counter() - start
    ok = values_ok and anti_ok and elapsed < 1.0
    criterion("2 f_ab table", ok, f"values {values_ok}, antisymmetry {anti_ok}, {elapsed:.2f}s")
    assert ok


def test_criterion_03_two_tone_expansion(criterion):
    start = time.perf_counter()
    bx, by = 1.0, 1.0
    errs = []
    for T in (0.01, 0.1, 1.0):
        heff = walsh_heff(two_tone_schedule(T, 1.0, bx, by), T)
        errs.append(float(np.max(np.abs(heff.order1 - T / 16 * bx * by * SIGMA_Z))))
    omegas = np.logspace(2, 4, 9)
    s0 = remainder_scaling(two_tone_schedule, omegas, order=0).slope
    s1 = remainder_scaling(two_tone_schedule, omegas, order=1).slope
    elapsed = time.perf_counter() - start
    ok = max(errs) < 1e-12 and abs(s1 + 2) <= 0.15 and abs(s0 + 1) <= 0.15 and elapsed < 10
    criterion(
        "3 two-tone expansion", ok,
        f"order1 err {max(errs):.1e}, slope(0+1) {s1:.3f}, slope(0) {s0:.3f}, {elapsed:.2f}s",
    )
    assert ok


def test_criterion_04_square_drive_scaling(criterion):
    start = time.perf_counter()
    model = build_mfim(1, h_z=1.0, h_x=6.0)
    drive = square_wave(2 * PI / 50)
    Ns = [8, 16, 32, 64, 128]
    ew = [_median_error(model, drive, "walsh", N).median for N in Ns]
    ef = [_median_error(model, drive, "fourier", N - 1).median for N in Ns]
    sw = fit_power_law(Ns, ew).slope
    sf = fit_power_law(Ns, ef).slope
    omegas = [50.0, 100.0, 200.0, 400.0, 800.0]
    ow = [_median_error(model, square_wave(2 * PI / w), "walsh", 32).median for w in omegas]
    of = [_median_error(model, square_wave(2 * PI / w), "fourier", 31).median for w in omegas]
    tw = fit_power_law(omegas, ow).slope
    tf = fit_power_law(omegas, of).slope
    below = all(f < w for f, w in zip(ef, ew))
    elapsed = time.perf_counter() - start
    n_ok = abs(sf + 3) <= 0.3 and abs(sw + 2) <= 0.3
    w_ok = abs(tw + 1) <= 0.2 and abs(tf + 1) <= 0.2
    ok = n_ok and w_ok and below and elapsed < 60
    criterion(
        "4 square-drive scaling", ok,
        f"N-slope Fourier {sf:.2f} Walsh {sw:.2f}; omega-slope Fourier {tf:.2f} Walsh {tw:.2f}; "
        f"Fourier below Walsh at all N: {below}; {elapsed:.1f}s",
    )
    assert ok


def test_criterion_05_kick_superiority(criterion):
    start = time.perf_counter()
    T = 1.0
    drive = updown_kick(T)
    per_w, per_f = [], []
    ratios = []
    for frac in (0.3, 0.5, 0.7):
        model = build_mfim(3, J=1.0, h_z=1.1 * PI / T, h_x=frac * PI)
        a = _median_error(model, drive, "walsh", 32).per_state
        b = _median_error(model, drive, "fourier", 31).per_state
        per_w.append(a)
        per_f.append(b)
        ratios.append(np.median(b) / np.median(a))
    med_w = float(np.median(np.concatenate(per_w)))
    med_f = float(np.median(np.concatenate(per_f)))
    ok_a = med_w <= med_f / 10

    model = build_mfim(1, h_z=2.0, h_x=1.0)
    drive = updown_kick(2 * PI / 10)
    rb = []
    for N in (16, 32, 64, 128, 256):
        w = _median_error(model, drive, "walsh", N).median
        f = _median_error(model, drive, "fourier", N - 1).median
        rb.append(f / w)
    ok_b = all(r >= 100 for r in rb)
    elapsed = time.perf_counter() - start
    ok = ok_a and ok_b and elapsed < 300
    criterion(
        "5 kick-drive superiority", ok,
        f"L=3 median Walsh {med_w:.2e} vs Fourier {med_f:.2e} (per h_x ratios "
        f"{', '.join(f'{r:.2f}' for r in ratios)}); L=1 Fourier/Walsh ratios over N=16..256: "
        f"{', '.join(f'{r:.1f}' for r in rb)}; {elapsed:.1f}s",
    )
    assert ok


def test_criterion_06_aliasing(criterion):
    start = time.perf_counter()
    worst = 0.0
    for N in (8, 16, 32):
        modes = FourierModeSet(N)
        dft = dft_coefficients(square_wave_samples(N), modes)
        fold = alias_fold(square_wave_coefficients, N, K_max=10_000, modes=modes).values
        worst = max(worst, float(np.max(np.abs(dft - fold))))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-10 and elapsed < 1.0
    criterion("6 aliasing identity", ok, f"max |dft - fold| {worst:.1e}, {elapsed:.2f}s")
    assert ok


def test_criterion_07_oracle_sanity(criterion):
    start = time.perf_counter()
    T = 0.9
    static_err, ident_err = 0.0, 0.0
    for L in (1, 2, 3):
        model = build_mfim(L, J=1.0, h_z=1.3, h_x=0.0)
        ex = exact_propagator(model, updown_kick(T))
        expect = np.sort(fold_phase(np.linalg.eigvalsh(model.static_h) * T))
        static_err = max(static_err, float(np.max(np.abs(np.sort(ex.phases) - expect))))
        kicked = build_mfim(L, J=0.0, h_z=0.0, h_x=1.7)
        U = exact_propagator(kicked, updown_kick(T)).U
        ident_err = max(ident_err, float(np.max(np.abs(U - np.eye(2**L)))))
    elapsed = time.perf_counter() - start
    ok = static_err < 1e-12 and ident_err < 1e-12 and elapsed < 1.0
    criterion("7 oracle sanity", ok, f"static phase err {static_err:.1e}, |U - 1| {ident_err:.1e}, {elapsed:.2f}s")
    assert ok


def test_criterion_08_walsh_kick_coefficients(criterion):
    start = time.perf_counter()
    ok = True
    T = 1.0
    for N in (8, 16, 32):
        b = build_walsh_basis(int(np.log2(N)), T)
        seq = b.natural_to_sequency
        for conv, allowed in (("symmetric", {2}), ("nonsymmetric", {1, 2})):
            col = drive_matrix(updown_kick(T, conv), "walsh", N)[:, 0]
            support = {int(s) for s in seq[col != 0]}
            want = {s for s in range(N) if s % 4 in allowed}
            ok &= support == want and np.all(col[col != 0] == 2 / T)
    elapsed = time.perf_counter() - start
    ok = bool(ok) and elapsed < 1.0
    criterion("8 kick Walsh coefficients", ok, f"supports at 4m+2 / 4m+1,4m+2 for N=8,16,32, {elapsed:.2f}s")
    assert ok


def _resonance_free(h_z):
    k = np.round(h_z / PI)
    return np.abs(h_z - k * PI) > 0.1 * PI


def test_criterion_09_entropy_error_sign(criterion, tmp_path):
    start = time.perf_counter()
    cfg = ExperimentConfig("entropy_map", L=1, h_x=GRID, h_z=GRID, out=str(tmp_path))
    table = read_results(run(cfg).csv_path)
    c = table.column
    keep = _resonance_free(c("h_z")) & (c("singular") == 0)
    dS = c("S_up_fourier") - c("S_up_walsh")
    dE = c("dtheta_median_fourier") - c("dtheta_median_walsh")
    agree = float(np.mean(np.sign(dS[keep]) == np.sign(dE[keep])))
    elapsed = time.perf_counter() - start
    ok = agree >= 0.70 and elapsed < 300
    criterion("9 entropy/error sign agreement", ok, f"{agree:.1%} of {keep.sum()} cells agree, {elapsed:.1f}s")
    assert ok


def test_criterion_10_error_map(criterion, tmp_path):
    start = time.perf_counter()
    fractions = {}
    for L in (1, 3):
        cfg = ExperimentConfig("error_map", L=L, h_x=GRID, h_z=GRID, out=str(tmp_path / f"L{L}"))
        table = read_results(run(cfg).csv_path)
        sel = table.column("h_x") > 0.2 * PI
        fractions[L] = float(np.mean(table.column("walsh_wins")[sel]))
    elapsed = time.perf_counter() - start
    ok = fractions[3] > 0.80
    criterion(
        "10 error map", ok,
        f"Walsh wins {fractions[3]:.1%} of cells at L=3 ({fractions[1]:.1%} at L=1) for h_xT > 0.2 pi, {elapsed:.1f}s",
    )
    assert ok
