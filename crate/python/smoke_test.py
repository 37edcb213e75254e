"""Smoke test for the Python bindings.

    pip install -e crates/python --no-build-isolation
    python python/smoke_test.py
"""

import tempfile
from pathlib import Path

import ksnut


def max_abs_diff(a, b):
    return max(abs(x - y) for ra, rb in zip(a, b) for x, y in zip(ra, rb))


def main():
    grid = ksnut.Grid(128, 0.1)
    medium = ksnut.Medium.homogeneous(grid, 1.0, 1.0)
    p0 = grid.gaussian(0.4)

    # step change 5 ms -> 15 ms, still exact
    sched = ksnut.StepSchedule([(0.005, 300), (0.015, 200)])
    solver = ksnut.Solver(grid, medium, mode="full")
    out = solver.run(p0, sched, snapshot_times=[1.5])
    exact = ksnut.exact_pressure(p0, medium, grid, sched.total_time)
    err = ksnut.compare(out.p, exact)
    assert err["linf_rel"] < 1e-10, err["linf_rel"]
    assert out.steps == 500 and len(out.snapshots) == 1

    naive = ksnut.Solver(grid, medium, mode="naive-swap").run(p0, sched)
    assert ksnut.compare(naive.p, exact)["linf_rel"] > 1e-6

    k1, k2 = ksnut.correction_kernels(grid, 1.0, 0.005, 0.005)
    assert abs(k1[0][0] - 1.0) < 1e-15 and max(abs(v[0]) for v in k2) < 1e-14

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "p.ksnut"
        ksnut.write_snapshot(str(path), out.p, grid, t=sched.total_time)
        back, meta = ksnut.read_snapshot(str(path))
        assert back == out.p and meta["kind"] == "p" and meta["nx"] == 128

        sc = ksnut.Scenario.preset("hom1d")
        rows = sc.run(out=tmp, csv=True)
        assert all(r["linf_rel"] < 1e-10 for r in rows)
        header = (Path(tmp) / "main" / "p_000900.csv").read_text().splitlines()[0]
        assert header == "x,y,value"

    assert "phantom-desk" in ksnut.Scenario.preset_names()
    try:
        ksnut.StepSchedule.uniform(-1.0, 3)
    except ValueError:
        pass
    else:
        raise AssertionError("negative step accepted")

    print(f"ok: rel error {err['linf_rel']:.2e}, modes {ksnut.MODES}")


if __name__ == "__main__":
    main()
