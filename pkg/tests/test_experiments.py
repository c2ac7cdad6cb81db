import csv

import numpy as np
import pytest

from mavelocity.config import ProblemConfig
from mavelocity.experiments import (
    REGION_HEADER,
    SWEEP_HEADER,
    atomic_write_rows,
    region_areas,
    status_of,
    sweep,
    validate,
    write_coefficients,
    write_profile,
    write_region,
    write_sweep,
)
from mavelocity.exceptions import ConvergenceError, InfeasibleError, SolverError
from mavelocity.baselines import sinusoidal
from mavelocity.sos import RegionGrid, rasterize_feasible_region


def read(path):
    return list(csv.reader(open(path)))


def test_status_of():
    assert status_of(None) == "ok"
    assert status_of(InfeasibleError("x")) == "infeasible"
    assert status_of(ConvergenceError("x")) == "nonconvergence"
    assert status_of(SolverError("x")) == "solver-error"


def test_sweep_order_and_parallel_determinism(tmp_path):
    schemes = ("sinusoidal", "binary", "uniform")
    a = sweep("L", [2.0, 4.0], schemes=schemes, n_jobs=1)
    b = sweep("L", [2.0, 4.0], schemes=schemes, n_jobs=2)
    assert [(p.value, p.scheme) for p in a] == [(v, s) for v in (2.0, 4.0) for s in schemes]
    write_sweep(a, tmp_path / "a.csv")
    write_sweep(b, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert read(tmp_path / "a.csv")[0] == SWEEP_HEADER


def test_sweep_records_failures():
    pts = sweep("L", [40.0], schemes=("proposed", "sinusoidal"))
    assert pts[0].status == "infeasible" and np.isnan(pts[0].ee)
    assert pts[1].status == "ok"


@pytest.mark.parametrize("param,values", [("eta", [1.0]), ("L", [-1.0]), ("N", [2.5]), ("L", [])])
def test_sweep_rejects(param, values):
    with pytest.raises(ValueError):
        sweep(param, values)


def test_nine_significant_digits(tmp_path):
    write_profile(sinusoidal(ProblemConfig(n_quad=11)), tmp_path / "p.csv")
    rows = read(tmp_path / "p.csv")
    assert rows[0] == ["t", "v", "x"] and len(rows) == 12
    assert rows[2][1] == f"{2 * np.pi * np.sin(np.pi * 0.1):.9g}"
    write_coefficients([1.0, 1 / 3], tmp_path / "c.csv")
    assert read(tmp_path / "c.csv") == [["n", "c_n"], ["1", "1"], ["2", "0.333333333"]]


def test_region_writer(tmp_path):
    grid = RegionGrid(n1=5, n2=5)
    raster = rasterize_feasible_region(grid)
    write_region(raster, tmp_path / "r.csv")
    rows = read(tmp_path / "r.csv")
    assert rows[0] == REGION_HEADER and len(rows) == 26
    assert all(set(r[2:]) <= {"0", "1"} for r in rows[1:])
    areas = region_areas(raster, grid)
    assert areas["truth"] >= areas["sos"] and areas["l1"] >= areas["l2"]


def test_atomic_write_leaves_no_temp_on_error(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("old\n")

    def rows():
        yield [1]
        raise RuntimeError("interrupted")

    with pytest.raises(RuntimeError):
        atomic_write_rows(path, ["a"], rows())
    assert list(tmp_path.iterdir()) == [path] and path.read_text() == "old\n"


def test_validate_all_pass():
    results = list(validate(0))
    assert len(results) == 6
    assert all(r.passed for r in results), [(r.name, r.detail) for r in results if not r.passed]
