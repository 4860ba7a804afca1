import numpy as np
import pytest

from jcsim.config import ScenarioConfig
from jcsim.experiments import (
    BRANCH_COLUMNS, STEADY_COLUMNS, ResultTable, _march_indices, interior_maximum, run,
)
from jcsim.meanfield import bistable_window, drive_of_nq
from jcsim.params import SystemParams


def cfg(**kw):
    base = dict(n_fock=12, threads=1)
    base.update(kw)
    return ScenarioConfig(**base).validate()


def without_wall_time(table):
    return "\n".join(l for l in table.to_csv().splitlines() if not l.startswith("# wall_time_s"))


def test_result_table_csv():
    t = ResultTable(["x", "ok"], [(1.5, True), (2.0, False)], {"k": 3})
    assert t.to_csv() == "# k: 3\nx,ok\n1.5,true\n2.0,false\n"
    np.testing.assert_array_equal(t.column("x"), [1.5, 2.0])
    with pytest.raises(ValueError):
        ResultTable(["x"], [(1, 2)])


def test_interior_maximum():
    t = np.linspace(0, 10, 101)
    assert interior_maximum(t, t * np.exp(-t))[0] == pytest.approx(1.0)
    assert interior_maximum(t, 1 - np.exp(-t)) is None
    assert interior_maximum(t, np.zeros_like(t)) is None


def test_march_indices_interior():
    assert _march_indices(101, 0.1) == {int(round(x)) for x in np.linspace(0, 100, 12)[1:-1]}
    assert _march_indices(11, 0.1) == {5}
    assert _march_indices(5, 0.0) == set()


def test_steady_sweep_zero_drive():
    table = run(cfg(f_grid=(0.0,)))
    assert table.columns == STEADY_COLUMNS and len(table.rows) == 1
    row = dict(zip(table.columns, table.rows[0]))
    for key in ("n_ph_lindblad", "n_q_lindblad", "n_ph_mf_fwd", "n_q_mf_fwd", "S_lindblad", "S_mf"):
        assert abs(row[key]) < 1e-12
    assert row["n_branches"] == 1
    assert table.metadata["converged"] is True and table.metadata["n_fock"] == 18


def test_steady_sweep_weak_field_rows():
    table = run(cfg(f_grid=(0.0, 0.1, 0.25, 0.5), march_fraction=0.5))
    nl, nm = table.column("n_ph_lindblad"), table.column("n_ph_mf_fwd")
    assert np.all(np.abs(nl - nm) < 0.05 * np.maximum(nl, 1e-6))
    assert table.metadata["marching_checks"] == 2
    assert table.metadata["marching_max_distance"] < 1e-6


def test_steady_sweep_reproducible_and_thread_independent():
    a = run(cfg(f_grid=(0.5, 1.0, 2.0), march_fraction=0))
    b = run(cfg(f_grid=(0.5, 1.0, 2.0), march_fraction=0, threads=2))
    assert without_wall_time(a) == without_wall_time(b)


def test_evolve_zero_drive_stays_ground():
    table = run(cfg(scenario="evolve", f=0.0, t_max=5, t_samples=11))
    numeric = np.array([row[1:] for row in table.rows], dtype=float)
    assert np.abs(numeric).max() == 0


def test_evolve_correlations_build_up():
    table = run(cfg(scenario="evolve", t_max=20, t_samples=201))
    corr = np.hypot(table.column("corr_asp_re"), table.column("corr_asp_im"))
    assert corr[0] == 0
    assert corr.max() > 10 * corr[1]


def test_evolve_long_time_matches_steady_sweep():
    long = run(cfg(scenario="evolve", t_max=150, t_samples=4))
    steady = run(cfg(f_grid=(1.0,), march_fraction=0))
    assert abs(long.column("n_ph_lindblad")[-1] - steady.column("n_ph_lindblad")[0]) < 1e-4
    assert abs(long.column("n_q_lindblad")[-1] - steady.column("n_q_lindblad")[0]) < 1e-4


def test_entropy_dynamics():
    table = run(cfg(scenario="entropy-dynamics", f_list=(0.0, 0.1, 1.5), t_max=20, t_samples=101))
    f = table.column("f")
    s = table.column("S_lindblad")
    assert np.all(s[f == 0] == 0)
    assert table.column("entanglement_gap").min() >= -1e-8
    assert table.metadata["peak[f=0.0]"] == "none"
    assert table.metadata["peak[f=0.1]"].startswith("t=")


def test_mf_branches_below_threshold():
    table = run(cfg(scenario="mf-branches", g=0.5, f_grid=tuple(np.linspace(0, 10, 201))))
    assert table.columns == BRANCH_COLUMNS
    assert set(table.column("n_branches")) == {1}
    assert table.metadata["window_lo"] == "" and table.metadata["bistable"] is False


def test_mf_branches_window_metadata():
    table = run(cfg(scenario="mf-branches", f_grid=(0.0, 3.5)))
    p = SystemParams()
    assert table.metadata["window_lo"] == pytest.approx(drive_of_nq(0.471825, p), rel=1e-5)
    assert table.metadata["window_hi"] == pytest.approx(drive_of_nq(0.278175, p), rel=1e-5)
    assert table.metadata["f_star_formula"] == 2.5 and table.metadata["n_ph_inf"] == 6.25
    at = table.column("f") == 3.5
    assert list(table.column("stable")[at]) == [True, False, True]


def test_mf_branch_count_changes_only_at_window_edges():
    lo, hi = bistable_window(SystemParams())
    coarse = np.linspace(0, 8, 41)
    fine = np.linspace(0, 8, 401)
    for grid in (coarse, fine):
        table = run(cfg(scenario="mf-branches", f_grid=tuple(grid)))
        f_rows, counts = table.column("f"), table.column("n_branches")
        per_f = {fv: c for fv, c in zip(f_rows, counts)}
        values = [per_f[x] for x in grid]
        for x0, x1, c0, c1 in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
            if c0 != c1:
                assert x0 < lo <= x1 or x0 < hi <= x1
    # shared grid points carry the same roots
    a = run(cfg(scenario="mf-branches", f_grid=tuple(coarse)))
    b = run(cfg(scenario="mf-branches", f_grid=tuple(fine)))
    for fv in coarse:
        ra = a.column("n_q")[a.column("f") == fv]
        rb = b.column("n_q")[np.isclose(b.column("f"), fv, rtol=0, atol=1e-12)]
        np.testing.assert_allclose(ra, rb, atol=1e-12)
