"""Parameter sweeps that regenerate the figure data as CSV files.

Every experiment turns an :class:`ExperimentConfig` into a list of
independent tasks, evaluates them (optionally in a process pool), sorts the
results by task key and writes one CSV plus a JSON manifest into ``out``.
Data rows do not depend on the worker count.
"""

from __future__ import annotations

import csv
import json
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .fit import fit_power_law
from .hfe import remainder_scaling, two_tone_schedule, walsh_heff, write_fab_table
from .lattice import PeriodicDrive, assemble_q, square_wave, updown_kick
from .models import SIGMA_Z, build_mfim
from .solve import exact_propagator, participation_entropy, phase_error, solve
from .walsh import (
    FourierModeSet,
    alias_fold,
    build_walsh_basis,
    dft_coefficients,
    square_wave_coefficients,
    square_wave_samples,
)

EXPERIMENTS = (
    "spectrum",
    "error_map",
    "entropy_map",
    "mode_profile",
    "alias_demo",
    "n_scaling",
    "omega_scaling",
    "hfe_check",
)
DRIVES = ("updown_kick", "square_wave")
WORKER_ENV = "WALSH_FLOQUET_MAX_WORKERS"
# both bases count as failed above this median phase error
FAIL_THRESHOLD = 0.01 * math.pi


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Run description. ``h_x`` / ``h_z`` accept a number, a list, or
    ``{"start", "stop", "num"}`` (``num`` defaults to ``resolution``).

    ``h_x`` is the dimensionless kick angle (or the square-wave amplitude);
    ``h_z`` is in units of ``1/T``. Setting ``omega`` overrides ``T``.
    """

    experiment: str
    L: int = 1
    J: float = 1.0
    T: float = 1.0
    omega: float | None = None
    h_z: object = 1.0
    h_x: object = 0.5
    drive: str = "updown_kick"
    convention: str = "symmetric"
    bases: tuple[str, ...] = ("walsh", "fourier")
    N_walsh: int = 32
    N_fourier: int = 31
    N_values: tuple[int, ...] = (8, 16, 32, 64, 128)
    omega_values: tuple[float, ...] = (50.0, 100.0, 200.0, 400.0, 800.0)
    resolution: int = 20
    rule: str = "p0"
    symmetrize: bool = False
    sample: int | None = None
    seed: int = 0
    out: str = "results"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "bases", tuple(self.bases))
        object.__setattr__(self, "N_values", tuple(int(n) for n in self.N_values))
        object.__setattr__(self, "omega_values", tuple(float(w) for w in self.omega_values))
        self.validate()

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega if self.omega else self.T

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.drive not in DRIVES:
            raise ConfigError(f"unknown drive {self.drive!r}")
        if not self.bases or any(b not in ("walsh", "fourier", "discrete_fourier") for b in self.bases):
            raise ConfigError(f"bad bases {self.bases}")
        if self.N_walsh < 1 or self.N_walsh & (self.N_walsh - 1):
            raise ConfigError(f"N_walsh must be a power of two, got {self.N_walsh}")
        if self.N_fourier < 1 or self.N_fourier % 2 == 0:
            raise ConfigError(f"N_fourier must be odd, got {self.N_fourier}")
        if any(n < 2 or n & (n - 1) for n in self.N_values):
            raise ConfigError("N_values must be powers of two >= 2")
        if self.period <= 0:
            raise ConfigError("period must be positive")
        if self.resolution < 1 or self.workers < 1:
            raise ConfigError("resolution and workers must be positive")
        if not 1 <= self.L <= 8:
            raise ConfigError("L must be in 1..8")
        for name in ("h_x", "h_z"):
            if axis_values(getattr(self, name), self.resolution).size == 0:
                raise ConfigError(f"{name} grid is empty")

    @classmethod
    def from_mapping(cls, data: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return asdict(self)


def axis_values(spec, resolution: int = 20) -> np.ndarray:
    if isinstance(spec, dict):
        try:
            start, stop = float(spec["start"]), float(spec["stop"])
        except KeyError as exc:
            raise ConfigError(f"range needs start and stop: {spec}") from exc
        return np.linspace(start, stop, int(spec.get("num", resolution)))
    return np.atleast_1d(np.asarray(spec, dtype=float))


def worker_count(requested: int) -> int:
    """Requested pool size, capped by ``$WALSH_FLOQUET_MAX_WORKERS``."""
    cap = os.environ.get(WORKER_ENV)
    n = max(1, int(requested))
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def make_drive(name: str, T: float, convention: str = "symmetric") -> PeriodicDrive:
    if name == "updown_kick":
        return updown_kick(T, convention)
    if name == "square_wave":
        return square_wave(T)
    raise ConfigError(f"unknown drive {name!r}")


def basis_size(cfg: ExperimentConfig, basis: str) -> int:
    return cfg.N_walsh if basis == "walsh" else cfg.N_fourier


# ---------------------------------------------------------------- point work


def _solve_point(L, J, h_z, h_x, T, drive, convention, basis, N, rule, symmetrize):
    model = build_mfim(L, J, h_z, h_x)
    d = make_drive(drive, T, convention)
    q = assemble_q(model, d, basis, N, symmetrize=symmetrize and basis == "walsh")
    return model, d, solve(q, rule)


def grid_point(p: dict) -> dict:
    """Errors and entropies of every basis at one ``(h_x, h_z)`` point."""
    model = build_mfim(p["L"], p["J"], p["h_z"], p["h_x"])
    drive = make_drive(p["drive"], p["T"], p["convention"])
    exact = exact_propagator(model, drive)
    row = {"singular": int(exact.degenerate)}
    med = {}
    for basis, N in p["bases"]:
        q = assemble_q(model, drive, basis, N, symmetrize=p["symmetrize"] and basis == "walsh")
        sol = solve(q, p["rule"])
        err = phase_error(sol, exact)
        up = participation_entropy(sol, 0)
        row[f"dtheta_median_{basis}"] = err.median
        row[f"dtheta_max_{basis}"] = err.max
        lit = ~up.dark
        row[f"S_up_{basis}"] = float(np.mean(up.values[lit])) if lit.any() else 0.0
        row[f"S_all_{basis}"] = float(np.mean(participation_entropy(sol).values))
        med[basis] = err.median
    if "walsh" in med and "fourier" in med:
        row["walsh_wins"] = int(med["walsh"] < med["fourier"])
    row["both_fail"] = int(all(v > FAIL_THRESHOLD for v in med.values()))
    return row


def spectrum_point(p: dict) -> list[dict]:
    model = build_mfim(p["L"], p["J"], p["h_z"], p["h_x"])
    drive = make_drive(p["drive"], p["T"], p["convention"])
    exact = exact_propagator(model, drive)
    per_basis = {}
    for basis, N in p["bases"]:
        q = assemble_q(model, drive, basis, N, symmetrize=p["symmetrize"] and basis == "walsh")
        per_basis[basis] = phase_error(solve(q, p["rule"]), exact)
    rows = []
    for k, theta in enumerate(exact.phases):
        row = {"state": k, "theta_exact": float(theta)}
        for basis, err in per_basis.items():
            row[f"theta_{basis}"] = float(err.matched_phases[k])
            row[f"dtheta_{basis}"] = float(err.per_state[k])
        rows.append(row)
    return rows


def scaling_point(p: dict) -> dict:
    model = build_mfim(p["L"], p["J"], p["h_z"], p["h_x"])
    drive = make_drive(p["drive"], p["T"], p["convention"])
    q = assemble_q(model, drive, p["basis"], p["N"])
    err = phase_error(solve(q, p["rule"]), exact_propagator(model, drive))
    return {"dtheta_median": err.median, "dtheta_max": err.max}


def mode_profile_point(p: dict) -> list[dict]:
    _, _, sol = _solve_point(
        p["L"], p["J"], p["h_z"], p["h_x"], p["T"], p["drive"], p["convention"],
        p["basis"], p["N"], p["rule"], p["symmetrize"],
    )
    if p["basis"] == "walsh" and sol.mode_labels is not None:
        seq = build_walsh_basis(int(math.log2(p["N"]))).natural_to_sequency
        labels = [int(seq[m]) for m in sol.mode_labels]
    else:
        labels = list(sol.mode_labels) if sol.mode_labels is not None else list(range(sol.N))
    rows = []
    for r, k in enumerate(sol.representative_indices):
        up = sol.mode_amplitudes(k, 0)
        w_all = sol.mode_weights[k]
        for m in range(sol.N):
            rows.append(
                {
                    "state": r,
                    "mode": m,
                    "label": labels[m],
                    "amp_up_re": float(up[m].real),
                    "amp_up_im": float(up[m].imag),
                    "weight_up": float(abs(up[m]) ** 2),
                    "weight_all": float(w_all[m]),
                }
            )
    return rows


def alias_point(p: dict) -> list[dict]:
    N = p["N"]
    modes = FourierModeSet(N)
    dft = dft_coefficients(square_wave_samples(N), modes)
    folded = alias_fold(square_wave_coefficients, N, p["K_max"], modes=modes)
    cont = square_wave_coefficients(modes.mode_indices)
    return [
        {
            "m": int(m),
            "cont_re": float(cont[i].real),
            "cont_im": float(cont[i].imag),
            "dft_re": float(dft[i].real),
            "dft_im": float(dft[i].imag),
            "fold_re": float(folded.values[i].real),
            "fold_im": float(folded.values[i].imag),
            "abs_diff": float(abs(dft[i] - folded.values[i])),
        }
        for i, m in enumerate(modes.mode_indices)
    ]


def hfe_point(p: dict) -> dict:
    omega = p["omega"]
    T = 2.0 * math.pi / omega
    samples = two_tone_schedule(T)
    heff = walsh_heff(samples, T)
    target = T / 16 * SIGMA_Z
    r0 = remainder_scaling(two_tone_schedule, [omega], order=0)
    r1 = remainder_scaling(two_tone_schedule, [omega], order=1)
    nan = float("nan")
    return {
        "order1_error": float(np.max(np.abs(heff.order1 - target))),
        "residual_order0": float(r0.residuals[0]) if r0.residuals.size else nan,
        "residual_order1": float(r1.residuals[0]) if r1.residuals.size else nan,
    }


_KERNELS = {
    "grid": grid_point,
    "spectrum": spectrum_point,
    "scaling": scaling_point,
    "mode_profile": mode_profile_point,
    "alias": alias_point,
    "hfe": hfe_point,
}


def _run_task(task):
    key, kernel, keys, params = task
    try:
        out = _KERNELS[kernel](params)
        status = "ok"
    except Exception as exc:  # flagged per row, the sweep continues
        out, status = {}, f"error: {type(exc).__name__}: {exc}"
    rows = out if isinstance(out, list) else [out]
    if not rows:
        rows = [{}]
    return [(key, i, {**keys, **r, "status": status}) for i, r in enumerate(rows)]


# ---------------------------------------------------------------- planning


@dataclass
class Plan:
    tasks: list
    columns: list[str]
    post: object = None
    extra: dict = field(default_factory=dict)


def _base_params(cfg: ExperimentConfig) -> dict:
    return {
        "L": cfg.L,
        "J": cfg.J,
        "T": cfg.period,
        "drive": cfg.drive,
        "convention": cfg.convention,
        "rule": cfg.rule,
        "symmetrize": cfg.symmetrize,
        "bases": [(b, basis_size(cfg, b)) for b in cfg.bases],
    }


def _grid_plan(cfg: ExperimentConfig, with_entropy: bool) -> Plan:
    hx = axis_values(cfg.h_x, cfg.resolution)
    hz = axis_values(cfg.h_z, cfg.resolution)
    cells = [(i, j) for i in range(hx.size) for j in range(hz.size)]
    if cfg.sample is not None and cfg.sample < len(cells):
        rng = np.random.default_rng(cfg.seed)
        pick = np.sort(rng.choice(len(cells), size=cfg.sample, replace=False))
        cells = [cells[k] for k in pick]
    base = _base_params(cfg)
    tasks = [
        ((i, j), "grid", {"ix": i, "iz": j, "h_x": float(hx[i]), "h_z": float(hz[j])},
         {**base, "h_x": float(hx[i]), "h_z": float(hz[j])})
        for i, j in cells
    ]
    cols = ["ix", "iz", "h_x", "h_z"]
    for b in cfg.bases:
        cols += [f"dtheta_median_{b}", f"dtheta_max_{b}"]
        if with_entropy:
            cols += [f"S_up_{b}", f"S_all_{b}"]
    if "walsh" in cfg.bases and "fourier" in cfg.bases:
        cols.append("walsh_wins")
    cols += ["both_fail", "singular", "status"]
    return Plan(tasks, cols)


def _spectrum_plan(cfg: ExperimentConfig) -> Plan:
    hx = axis_values(cfg.h_x, cfg.resolution)
    h_z = float(axis_values(cfg.h_z)[0])
    base = _base_params(cfg)
    tasks = [
        ((i,), "spectrum", {"ix": i, "h_x": float(x), "h_z": h_z}, {**base, "h_x": float(x), "h_z": h_z})
        for i, x in enumerate(hx)
    ]
    cols = ["ix", "h_x", "h_z", "state", "theta_exact"]
    for b in cfg.bases:
        cols += [f"theta_{b}", f"dtheta_{b}"]
    return Plan(tasks, cols + ["status"])


def _scaling_plan(cfg: ExperimentConfig, over: str) -> Plan:
    h_x = float(axis_values(cfg.h_x)[0])
    h_z = float(axis_values(cfg.h_z)[0])
    base = _base_params(cfg)
    tasks = []
    for bi, b in enumerate(cfg.bases):
        if over == "N":
            points = [(n if b == "walsh" else n - 1, cfg.period) for n in cfg.N_values]
        else:
            points = [(basis_size(cfg, b), 2.0 * math.pi / w) for w in cfg.omega_values]
        for k, (N, T) in enumerate(points):
            keys = {"basis": b, "N": N, "omega": 2.0 * math.pi / T}
            params = {**base, "basis": b, "N": N, "T": T, "h_x": h_x, "h_z": h_z}
            tasks.append(((bi, k), "scaling", keys, params))
    cols = ["basis", "N", "omega", "dtheta_median", "dtheta_max", "status"]

    def post(rows):
        fits = {}
        xcol = "N" if over == "N" else "omega"
        for b in cfg.bases:
            sel = [r for r in rows if r["basis"] == b and r["status"] == "ok" and r["dtheta_median"] > 0]
            if len(sel) >= 3:
                fit = fit_power_law([r[xcol] for r in sel], [r["dtheta_median"] for r in sel])
                fits[b] = {"slope": fit.slope, "intercept": fit.intercept, "residual": fit.residual}
        return {"fits": fits}

    return Plan(tasks, cols, post)


def _mode_profile_plan(cfg: ExperimentConfig) -> Plan:
    base = _base_params(cfg)
    h_x = float(axis_values(cfg.h_x)[0])
    h_z = float(axis_values(cfg.h_z)[0])
    tasks = [
        ((bi,), "mode_profile", {"basis": b}, {**base, "basis": b, "N": basis_size(cfg, b), "h_x": h_x, "h_z": h_z})
        for bi, b in enumerate(cfg.bases)
    ]
    cols = ["basis", "state", "mode", "label", "amp_up_re", "amp_up_im", "weight_up", "weight_all", "status"]
    return Plan(tasks, cols)


def _alias_plan(cfg: ExperimentConfig) -> Plan:
    tasks = [((k,), "alias", {"N": N}, {"N": N, "K_max": 10_000}) for k, N in enumerate(cfg.N_values)]
    cols = ["N", "m", "cont_re", "cont_im", "dft_re", "dft_im", "fold_re", "fold_im", "abs_diff", "status"]
    return Plan(tasks, cols)


def _hfe_plan(cfg: ExperimentConfig) -> Plan:
    tasks = [((k,), "hfe", {"omega": w}, {"omega": w}) for k, w in enumerate(cfg.omega_values)]
    cols = ["omega", "order1_error", "residual_order0", "residual_order1", "status"]

    def post(rows):
        fits = {}
        ok = [r for r in rows if r["status"] == "ok"]
        for col in ("residual_order0", "residual_order1"):
            sel = [r for r in ok if r[col] > 0]
            if len(sel) >= 3:
                fit = fit_power_law([r["omega"] for r in sel], [r[col] for r in sel])
                fits[col] = {"slope": fit.slope, "intercept": fit.intercept, "residual": fit.residual}
        return {"fits": fits}

    return Plan(tasks, cols, post, extra={"fab_table": True})


def plan(cfg: ExperimentConfig) -> Plan:
    e = cfg.experiment
    if e == "error_map":
        return _grid_plan(cfg, with_entropy=False)
    if e == "entropy_map":
        return _grid_plan(cfg, with_entropy=True)
    if e == "spectrum":
        return _spectrum_plan(cfg)
    if e == "n_scaling":
        return _scaling_plan(cfg, "N")
    if e == "omega_scaling":
        return _scaling_plan(cfg, "omega")
    if e == "mode_profile":
        return _mode_profile_plan(cfg)
    if e == "alias_demo":
        return _alias_plan(cfg)
    return _hfe_plan(cfg)


# ---------------------------------------------------------------- execution


def _format(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_rows(path, columns: list[str], rows: list[dict]) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_format(r.get(c, float("nan"))) for c in columns])


def _parse_cell(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


@dataclass(frozen=True)
class ResultTable:
    columns: list[str]
    rows: list[dict]

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])


def read_results(path) -> ResultTable:
    """Parse a CSV written by :func:`run`; numbers come back as int/float."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            columns = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = []
        for n, line in enumerate(reader, start=2):
            if len(line) != len(columns):
                raise ValueError(f"{path}:{n}: expected {len(columns)} fields, got {len(line)}")
            rows.append({c: _parse_cell(v) for c, v in zip(columns, line)})
    return ResultTable(columns, rows)


@dataclass(frozen=True)
class RunResult:
    csv_path: Path
    manifest_path: Path
    rows: list[dict]
    manifest: dict


def run(cfg: ExperimentConfig) -> RunResult:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    p = plan(cfg)
    start = time.perf_counter()
    workers = worker_count(cfg.workers)
    if workers > 1 and len(p.tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_task, p.tasks, chunksize=max(1, len(p.tasks) // (4 * workers))))
    else:
        chunks = [_run_task(t) for t in p.tasks]
    flat = sorted((item for chunk in chunks for item in chunk), key=lambda x: (x[0], x[1]))
    rows = [r for _, _, r in flat]
    csv_path = out / f"{cfg.experiment}.csv"
    write_rows(csv_path, p.columns, rows)

    extra = p.post(rows) if p.post else {}
    if p.extra.get("fab_table"):
        fab_path = out / "fab_table.csv"
        write_fab_table(fab_path, 5)
        extra["fab_table"] = fab_path.name
    failed = sum(1 for r in rows if r.get("status") != "ok")
    manifest = {
        "experiment": cfg.experiment,
        "config": cfg.to_dict(),
        "columns": p.columns,
        "rows": len(rows),
        "failed_rows": failed,
        "data": csv_path.name,
        "workers": workers,
        "wall_time_s": time.perf_counter() - start,
        "versions": {
            "walsh_floquet": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        **extra,
    }
    manifest_path = out / f"{cfg.experiment}_manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, default=_json_default) + "\n")
    return RunResult(csv_path, manifest_path, rows, manifest)


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def with_overrides(cfg: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    data = cfg.to_dict()
    data.update(overrides)
    return ExperimentConfig.from_mapping(data)


__all__ = [
    "EXPERIMENTS",
    "ConfigError",
    "ExperimentConfig",
    "ResultTable",
    "RunResult",
    "axis_values",
    "fit_power_law",
    "read_results",
    "run",
    "with_overrides",
]
