import csv

import numpy as np
import pytest

from mavelocity import conic
from mavelocity.config import ProblemConfig
from mavelocity.exceptions import ConvergenceError, InfeasibleError
from mavelocity.functionals import evaluate, standard_grid
from mavelocity.optimizer import ConstraintMaps, initialize, optimize, quadrature_objectives, sca_inner
from mavelocity.spectral import build_basis, evaluate_profile, spectral_energy, spectral_variance

CFG = ProblemConfig()


@pytest.fixture(scope="module")
def default_run():
    return optimize(CFG)


class TestInitialize:
    def test_defaults(self):
        c0, xi0 = initialize(CFG)
        assert c0[0] == pytest.approx(4 * np.sqrt(0.5), abs=1e-12)
        assert np.all(c0[1:] == 0)
        basis = build_basis(CFG.N, CFG.T)
        from mavelocity.spectral import SpectralProfile

        p = SpectralProfile(c0, basis)
        assert spectral_variance(p) == pytest.approx(8 / np.pi**2, rel=1e-12)
        assert xi0 == pytest.approx(spectral_variance(p) / spectral_energy(p, CFG), rel=1e-12)

    def test_speed_limited(self):
        c0, _ = initialize(CFG.replace(V_max=2.0))
        assert c0[0] == pytest.approx(2 * np.sqrt(0.5), abs=1e-12)


class TestInner:
    def setup_method(self):
        self.basis = build_basis(CFG.N, CFG.T)

    def test_linear_regime_fundamental_only(self):
        cfg = CFG.replace(alpha2=0.0)
        c0, _ = initialize(cfg, self.basis)
        res = sca_inner(c0, self.basis.lam[0] / cfg.alpha1, cfg, self.basis, ConstraintMaps.build(cfg))
        assert np.all(np.abs(res.c[1:]) <= 1e-6 * abs(res.c[0]))

    def test_single_solve_when_tolerance_infinite(self):
        cfg = CFG.replace(eps_in=float("inf"))
        c0, xi0 = initialize(cfg, self.basis)
        res = sca_inner(c0, xi0, cfg, self.basis, ConstraintMaps.build(cfg))
        assert res.iterations == 1 and res.statuses == (conic.OPTIMAL,)

    def test_infeasible_propagates(self):
        cfg = CFG.replace(V_max=0.5)
        c0, xi0 = initialize(cfg, self.basis)
        with pytest.raises(InfeasibleError):
            sca_inner(c0, xi0, cfg, self.basis, ConstraintMaps.build(cfg))


class TestOptimize:
    def test_default_efficiency(self, default_run):
        _, trace = default_run
        assert 0.21 <= trace.final_ee <= 0.27

    def test_inner_loops_terminate(self, default_run):
        _, trace = default_run
        assert all(1 <= r.inner_iters <= CFG.max_inner for r in trace)
        assert all(r.inner_step_norm <= CFG.eps_in for r in trace)

    def test_stopping_rule(self, default_run):
        _, trace = default_run
        last = trace.records[-1]
        assert len(trace) >= 1 and abs(last.xi - last.xi_in) <= CFG.eps_out

    def test_self_consistency(self, default_run):
        prof, trace = default_run
        var, en, ee = evaluate(evaluate_profile(prof, standard_grid(CFG)), CFG)
        assert ee == pytest.approx(trace.final_ee, rel=1e-6)
        # quadrature and closed spectral forms agree
        assert spectral_variance(prof) / spectral_energy(prof, CFG) == pytest.approx(ee, rel=1e-5)

    def test_outer_iterates_feasible(self):
        # rerun with max_outer = k to reach every outer iterate
        basis = build_basis(CFG.N, CFG.T)
        t = standard_grid(CFG)
        _, trace = optimize(CFG)
        for k in range(1, len(trace) + 1):
            try:
                prof, _ = optimize(CFG.replace(max_outer=k))
                c = prof.c
            except ConvergenceError:
                c = None
            if c is None:
                continue
            v = c @ basis.phi(t)
            assert v.min() >= -1e-6 and v.max() <= CFG.V_max + 1e-6
            assert c @ basis.beta <= CFG.L + 1e-6
            assert c @ (basis.lam * c) >= CFG.qos_floor - 1e-6

    def test_linear_regime(self):
        prof, _ = optimize(CFG.replace(alpha2=1e-3))
        c = prof.c
        assert np.sum(c[1:] ** 2) / c[0] ** 2 <= 1e-4

    def test_linear_ceiling(self):
        _, trace = optimize(CFG.replace(alpha2=0.0, eta=1e-6))
        ceiling = 1 / (0.2 * np.pi**2)
        assert trace.final_ee <= ceiling * (1 + 1e-6)
        assert trace.final_ee == pytest.approx(ceiling, rel=1e-3)

    def test_deterministic(self, default_run):
        prof, trace = optimize(CFG)
        assert np.array_equal(prof.c, default_run[0].c)
        assert np.array_equal(trace.xi, default_run[1].xi)

    def test_nonconvergence_carries_trace(self):
        with pytest.raises(ConvergenceError) as info:
            optimize(CFG.replace(max_outer=1))
        assert len(info.value.trace) == 1

    def test_infeasible(self):
        with pytest.raises(InfeasibleError):
            optimize(CFG.replace(V_max=0.5))

    def test_quadrature_objectives(self, default_run):
        prof, trace = default_run
        var, en = quadrature_objectives(prof.c, prof.basis, CFG)
        assert var / en == pytest.approx(trace.final_ee, rel=1e-12)

    def test_trace_csv(self, default_run, tmp_path):
        _, trace = default_run
        path = tmp_path / "trace.csv"
        trace.write_csv(path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["iter", "xi", "variance", "energy", "inner_iters", "inner_step_norm"]
        assert len(rows) == len(trace) + 1
        assert float(rows[-1][1]) == pytest.approx(trace.final_ee, rel=1e-8)
