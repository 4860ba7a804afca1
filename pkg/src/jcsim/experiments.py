"""Scenario runners producing tabular results.

Every Fock-space scenario is computed at ``n_fock`` and at
``ceil(1.5 n_fock)``; the table comes from the larger run and the comparison
of occupations decides the convergence flag.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import lindblad, meanfield
from .config import ScenarioConfig
from .errors import ConvergenceError, SimulationError
from .hilbert import ground_state
from .meanfield import MBState
from .observables import LindbladObservables, ObservableRecord, meanfield_entropy_mb, meanfield_record
from .params import DriveProtocol, SystemParams

MARCH_AGREEMENT = 1e-6
KNEE_REL = 0.05


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[tuple]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"row has {len(row)} entries, expected {len(self.columns)}")

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows])

    def to_csv(self) -> str:
        lines = [f"# {k}: {_fmt(v)}" for k, v in self.metadata.items()]
        lines.append(",".join(self.columns))
        lines.extend(",".join(_fmt(v) for v in row) for row in self.rows)
        return "\n".join(lines) + "\n"

    def write(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv())


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def interior_maximum(t, s, rel_tol: float = 1e-3) -> tuple[float, float] | None:
    """Location and height of the global maximum of ``s(t)`` if it lies inside the window
    and exceeds the final value by more than ``rel_tol`` of its height."""
    s = np.asarray(s)
    i = int(np.argmax(s))
    if 0 < i < len(s) - 1 and s[i] - s[-1] > rel_tol * abs(s[i]):
        return float(np.asarray(t)[i]), float(s[i])
    return None


def _map(fn, items, threads: int | None):
    items = list(items)
    if not threads:
        # cores this process may use, which can be fewer than the machine has
        threads = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count()
    workers = threads or 1
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def _converged_run(cfg: ScenarioConfig, run_at, keys=("n_ph_lindblad", "n_q_lindblad")):
    """Run at two cutoffs; return the larger table and annotate metadata."""
    n_small = cfg.n_fock
    n_large = math.ceil(1.5 * n_small)
    big = run_at(n_large, True)
    meta = {"n_fock": n_large}
    if cfg.check_convergence:
        small = run_at(n_small, False)
        change = max(float(np.abs(big.column(k) - small.column(k)).max()) for k in keys)
        meta.update(n_fock_checked=n_small, max_cutoff_change=change,
                    converged=change < cfg.convergence_tol)
        if change >= cfg.convergence_tol:
            raise ConvergenceError(
                f"occupations changed by {change:.3e} between n_fock={n_small} and {n_large}")
    else:
        meta.update(n_fock_checked="", max_cutoff_change="", converged="unchecked")
    big.metadata = {**big.metadata, **meta}
    return big


# -- steady-state sweep ------------------------------------------------------

STEADY_COLUMNS = ["f", "n_ph_lindblad", "n_q_lindblad", "n_ph_mf_fwd", "n_ph_mf_bwd",
                  "n_q_mf_fwd", "n_q_mf_bwd", "corr_asp_re", "corr_asp_im", "corr_asz_re",
                  "corr_asz_im", "S_lindblad", "S_mf", "n_branches"]


def _steady_point(job) -> tuple[ObservableRecord, float | None]:
    p, f, march = job
    rho = lindblad.steady_state_nullspace(p, f)
    rec = LindbladObservables(p.dims).record(rho, f)
    dist = None
    if march:
        rho_m = lindblad.steady_state_marching(p, f)
        dist = float(np.abs(rho_m - rho).max())
    return rec, dist


def _march_indices(n: int, fraction: float) -> set[int]:
    if fraction <= 0 or n == 0:
        return set()
    count = max(1, round(fraction * n))
    # interior points; the grid ends are usually the trivial f=0 and the largest drive
    return {int(i) for i in np.linspace(0, n - 1, count + 2)[1:-1].round()}


def run_steady_sweep(cfg: ScenarioConfig) -> ResultTable:
    t_start = time.perf_counter()
    f_grid = np.asarray(cfg.f_grid, dtype=float)
    p0 = cfg.params()
    hyst = meanfield.hysteresis_sweep(p0, f_grid)
    n_branches = ([len(meanfield.steady_branches(f, p0)) for f in f_grid]
                  if p0.delta == 0 else [-1] * len(f_grid))

    def run_at(n_fock: int, publish: bool) -> ResultTable:
        p = cfg.params(n_fock)
        marks = _march_indices(len(f_grid), cfg.march_fraction) if publish else set()
        jobs = [(p, float(f), i in marks) for i, f in enumerate(f_grid)]
        results = _map(_steady_point, jobs, cfg.threads)
        rows = []
        worst = 0.0
        for i, (rec, dist) in enumerate(results):
            if dist is not None:
                worst = max(worst, dist)
                if dist > MARCH_AGREEMENT:
                    raise SimulationError(
                        f"null-space and marched steady states differ by {dist:.3e} at f={f_grid[i]:g}")
            fwd, bwd = hyst.forward[i], hyst.backward[i]
            rows.append((rec.x, rec.n_ph, rec.n_q, fwd.n_ph, bwd.n_ph, fwd.n_q, bwd.n_q,
                         rec.corr_a_sp.real, rec.corr_a_sp.imag,
                         rec.corr_a_sz.real, rec.corr_a_sz.imag,
                         rec.entropy, meanfield_entropy_mb(fwd), n_branches[i]))
        meta = {"marching_checks": len(marks), "marching_max_distance": worst if marks else ""}
        return ResultTable(STEADY_COLUMNS, rows, meta)

    table = _converged_run(cfg, run_at)
    limits = meanfield.strong_drive_limits(p0)
    window = meanfield.bistable_window(p0) if p0.delta == 0 else None
    knee = _knee(table)
    table.metadata = {
        "scenario": cfg.scenario, **_echo(cfg),
        "bistable": meanfield.bistable(p0),
        "window_lo": window[0] if window else "",
        "window_hi": window[1] if window else "",
        "f_star_formula": limits.f_star,
        "f_star_knee": "" if knee is None else knee,
        **table.metadata,
        "wall_time_s": round(time.perf_counter() - t_start, 3),
    }
    return table


def _knee(table: ResultTable) -> float | None:
    """Smallest drive where Lindblad and forward mean-field photon numbers part by > 5 %."""
    nl, nm = table.column("n_ph_lindblad"), table.column("n_ph_mf_fwd")
    bad = np.abs(nl - nm) > KNEE_REL * np.maximum(nl, 1e-6)
    if not bad.any():
        return None
    return float(table.column("f")[np.argmax(bad)])


def _echo(cfg: ScenarioConfig) -> dict:
    return {f"cfg.{k}": v for k, v in cfg.echo().items()}


# -- quench dynamics ---------------------------------------------------------

EVOLVE_COLUMNS = ["t", "n_ph_lindblad", "n_q_lindblad", "n_ph_mf", "n_q_mf", "dn_q",
                  "corr_asp_re", "corr_asp_im", "corr_asz_re", "corr_asz_im",
                  "S_lindblad", "S_product", "S_mf", "entanglement_gap"]


def time_grid(cfg: ScenarioConfig) -> np.ndarray:
    return np.linspace(0.0, cfg.t_max, cfg.t_samples)


def quench_pair(p: SystemParams, f: float, t_grid, atol: float, rtol: float):
    """Lindblad and mean-field trajectories after switching on ``f`` at t = 0 from the ground state."""
    drive = DriveProtocol.quench(f, 0.0)
    traj = lindblad.evolve(ground_state(p.dims), p, drive, t_grid, atol=atol, rtol=rtol)
    mb = meanfield.mb_evolve(MBState.ground(), p, drive, t_grid, atol=atol, rtol=rtol)
    return traj, mb


def run_evolve(cfg: ScenarioConfig) -> ResultTable:
    t_start = time.perf_counter()
    f = cfg.quench_amplitude
    t_grid = time_grid(cfg)

    def run_at(n_fock: int, publish: bool) -> ResultTable:
        p = cfg.params(n_fock)
        traj, mb = quench_pair(p, f, t_grid, cfg.tol, cfg.rtol)
        obs = LindbladObservables(p.dims)
        rows = []
        for i, t in enumerate(t_grid):
            rec = obs.record(traj.states[i], float(t))
            mrec = meanfield_record(mb.state(i), float(t))
            rows.append((rec.x, rec.n_ph, rec.n_q, mrec.n_ph, mrec.n_q, rec.n_q - mrec.n_q,
                         rec.corr_a_sp.real, rec.corr_a_sp.imag,
                         rec.corr_a_sz.real, rec.corr_a_sz.imag,
                         rec.entropy, rec.entropy_mf, mrec.entropy,
                         rec.entropy_mf - rec.entropy))
        meta = {"trace_drift": traj.trace_drift, "renormalized": traj.renormalized,
                "min_eigenvalue": traj.min_eigenvalue}
        return ResultTable(EVOLVE_COLUMNS, rows, meta)

    table = _converged_run(cfg, run_at)
    table.metadata = {"scenario": cfg.scenario, **_echo(cfg), "f": f, **table.metadata,
                      "wall_time_s": round(time.perf_counter() - t_start, 3)}
    return table


# -- entropy dynamics --------------------------------------------------------

ENTROPY_COLUMNS = ["f", "t", "n_ph_lindblad", "n_q_lindblad", "S_lindblad", "S_mf",
                   "S_product", "entanglement_gap"]


def _entropy_job(job):
    p, f, t_grid, atol, rtol = job
    traj, mb = quench_pair(p, f, t_grid, atol, rtol)
    obs = LindbladObservables(p.dims)
    rows = []
    for i, t in enumerate(t_grid):
        rec = obs.record(traj.states[i], float(t))
        rows.append((f, float(t), rec.n_ph, rec.n_q, rec.entropy,
                     meanfield_entropy_mb(mb.state(i)), rec.entropy_mf,
                     rec.entropy_mf - rec.entropy))
    return rows


def run_entropy_dynamics(cfg: ScenarioConfig) -> ResultTable:
    t_start = time.perf_counter()
    t_grid = time_grid(cfg)

    def run_at(n_fock: int, publish: bool) -> ResultTable:
        p = cfg.params(n_fock)
        jobs = [(p, float(f), t_grid, cfg.tol, cfg.rtol) for f in cfg.f_list]
        rows = [row for block in _map(_entropy_job, jobs, cfg.threads) for row in block]
        return ResultTable(ENTROPY_COLUMNS, rows)

    table = _converged_run(cfg, run_at)
    peaks = {}
    f_col, s_col = table.column("f"), table.column("S_lindblad")
    for f in cfg.f_list:
        sel = f_col == f
        peak = interior_maximum(t_grid, s_col[sel])
        peaks[f"peak[f={f!r}]"] = "none" if peak is None else f"t={peak[0]!r};S={peak[1]!r}"
    table.metadata = {"scenario": cfg.scenario, **_echo(cfg), **peaks, **table.metadata,
                      "wall_time_s": round(time.perf_counter() - t_start, 3)}
    return table


# -- mean-field branches -----------------------------------------------------

BRANCH_COLUMNS = ["f", "branch", "n_q", "n_ph", "a_re", "a_im", "sp_re", "sp_im",
                  "stable", "n_branches"]


def run_mf_branches(cfg: ScenarioConfig) -> ResultTable:
    t_start = time.perf_counter()
    p = cfg.params()
    rows = []
    for f in cfg.f_grid:
        branches = meanfield.steady_branches(f, p)
        for j, b in enumerate(branches):
            rows.append((float(f), j, b.n_q, b.n_ph, b.a.real + 0.0, b.a.imag + 0.0,
                         b.sp.real + 0.0, b.sp.imag + 0.0,
                         b.stable, len(branches)))
    ext = meanfield.nq_extrema(p)
    window = meanfield.bistable_window(p)
    limits = meanfield.strong_drive_limits(p)
    meta = {
        "scenario": cfg.scenario, **_echo(cfg),
        "bistable": meanfield.bistable(p),
        "nq_extremum_1": ext[0] if ext else "",
        "nq_extremum_2": ext[1] if ext else "",
        "window_lo": window[0] if window else "",
        "window_hi": window[1] if window else "",
        "f_star_formula": limits.f_star,
        "n_ph_inf": limits.n_ph_inf,
        "converged": "n/a",
        "wall_time_s": round(time.perf_counter() - t_start, 3),
    }
    return ResultTable(BRANCH_COLUMNS, rows, meta)


RUNNERS = {
    "steady-sweep": run_steady_sweep,
    "evolve": run_evolve,
    "entropy-dynamics": run_entropy_dynamics,
    "mf-branches": run_mf_branches,
}


def run(cfg: ScenarioConfig) -> ResultTable:
    return RUNNERS[cfg.scenario](cfg)
