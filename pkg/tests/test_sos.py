import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mavelocity import conic
from mavelocity.config import ProblemConfig
from mavelocity.sos import (
    InfeasibilityReport,
    RegionGrid,
    SosCertificate,
    assemble_lower_constraints,
    assemble_upper_constraints,
    build_chebyshev_map,
    certify_profile,
    gram_coefficient,
    lower_feasible,
    lukacs_blocks,
    norm_ball_memberships,
    rasterize_feasible_region,
)
from mavelocity.spectral import build_basis

CFG = ProblemConfig()
BASIS = build_basis(CFG.N, CFG.T)


def c_for_poly(p, N):
    """Spectral coefficients whose polynomial P has monomial coefficients ``p``."""
    return np.linalg.solve(build_chebyshev_map(N, 1.0, 1.0).M, p)


class TestChebyshevMap:
    def test_n3_expansion(self):
        cm = build_chebyshev_map(3, 1.0, 10.0)
        assert np.allclose(cm.p([1.0, 2.0, 3.0]), [1 - 3, 4, 12])
        assert cm.M[0, 0] == 1.0
        assert cm.b[0] == pytest.approx(np.sqrt(0.5) * 10, abs=1e-5)

    @pytest.mark.parametrize("N", [1, 2, 5, 11])
    def test_polynomial_reproduces_profile(self, N, rng):
        # v(t) = sqrt(2/T) sin(theta) P(cos theta) with theta = pi t / T
        T = 2.0
        basis = build_basis(N, T)
        cm = build_chebyshev_map(N, T, 1.0)
        c = rng.standard_normal(N)
        t = np.linspace(0, T, 37)
        x = np.cos(np.pi * t / T)
        v_poly = np.sqrt(2 / T) * np.sin(np.pi * t / T) * np.polynomial.polynomial.polyval(x, cm.p(c))
        assert np.allclose(v_poly, c @ basis.phi(t), atol=1e-10)

    def test_upper_polynomial(self, rng):
        cm = build_chebyshev_map(4, 1.0, 3.0)
        c = rng.standard_normal(4)
        x = np.linspace(-1, 1, 11)
        P = np.polynomial.polynomial.polyval(x, cm.p(c))
        G = np.polynomial.polynomial.polyval(x, cm.g(c))
        assert np.allclose(G, np.sqrt(0.5) * 3.0 - (1 - x**2 / 2) * P)


class TestGramCoefficient:
    def test_identity(self):
        assert gram_coefficient(np.eye(2), 0) == 1
        assert gram_coefficient(np.eye(2), 1) == 0
        assert gram_coefficient(np.eye(2), 2) == 1

    def test_off_diagonal(self):
        assert gram_coefficient([[0, 1], [1, 0]], 1) == 2

    def test_out_of_range(self):
        assert gram_coefficient(np.eye(3), -1) == 0.0
        with pytest.raises(ValueError):
            gram_coefficient(np.eye(3), 5)

    @given(st.integers(1, 5), st.integers(0, 2**32 - 1))
    def test_matches_expansion(self, d, seed):
        rng = np.random.default_rng(seed)
        B = rng.standard_normal((d, d))
        Q = B + B.T
        x = rng.uniform(-1, 1, 2 * d + 1)
        z = np.vander(x, d, increasing=True)
        quad_form = np.einsum("qi,ij,qj->q", z, Q, z)
        coeffs = [gram_coefficient(Q, k) for k in range(2 * d - 1)]
        assert np.allclose(np.polynomial.polynomial.polyval(x, coeffs), quad_form, atol=1e-10)


class TestConstraintSets:
    def test_block_shapes(self):
        cm = build_chebyshev_map(11, 1.0, 10.0)
        up = assemble_upper_constraints(11, cm)
        assert up.degree == 12 and up.branch == "even"
        assert [b.size for b in up.blocks] == [7, 6]
        lo = assemble_lower_constraints(11, cm)
        assert lo.degree == 10 and [b.size for b in lo.blocks] == [6, 5]

    def test_odd_branch(self):
        branch, blocks = lukacs_blocks(3)
        assert branch == "odd" and [b.multiplier for b in blocks] == [(1.0, 1.0), (1.0, -1.0)]

    def test_constant_polynomial(self):
        basis = build_basis(1, 1.0)
        assert lower_feasible([0.3], basis).ok
        assert lower_feasible([-0.3], basis).status == conic.INFEASIBLE

    def test_exact_lukacs_form(self):
        basis = build_basis(3, 1.0)
        res = lower_feasible(c_for_poly([1.0, 0.0, -1.0], 3), basis)
        assert res.ok
        Q1, Q2 = res.grams[0]
        assert np.allclose(Q1, 0, atol=1e-6) and np.allclose(Q2, [[1.0]], atol=1e-6)

    @pytest.mark.parametrize("p", [[0.0, 1.0, 0.0], [0.0, 1.0, 1.0]])
    def test_sign_changing_polynomial(self, p):
        assert lower_feasible(c_for_poly(p, 3), build_basis(3, 1.0)).status == conic.INFEASIBLE

    def test_reconstruct_round_trip(self, rng):
        cm = build_chebyshev_map(5, 1.0, 10.0)
        lo = assemble_lower_constraints(5, cm)
        grams = [np.eye(b.size) for b in lo.blocks if b.size]
        rec = lo.reconstruct(grams)
        # s1 = 1 + x^2 + x^4, s2 = 1 + x^2 times (1 - x^2)
        assert np.allclose(rec, [2, 0, 1, 0, 0])
        with pytest.raises(ValueError):
            lo.reconstruct(grams[:1])


class TestCertify:
    def test_sinusoid(self):
        c = np.zeros(CFG.N)
        c[0] = 2 * np.pi * np.sqrt(0.5)
        cert = certify_profile(c, BASIS, CFG)
        assert isinstance(cert, SosCertificate) and cert.ok
        assert cert.min_eig >= -1e-8

    def test_zero_profile(self):
        cert = certify_profile(np.zeros(CFG.N), BASIS, CFG)
        assert cert.ok
        assert np.allclose(cert.Q1, 0, atol=1e-7) and np.allclose(cert.Q2, 0, atol=1e-7)
        assert cert.Y1[0, 0] > 0

    def test_negative_dip(self):
        c = np.zeros(CFG.N)
        c[:2] = [2.0, -2.0]
        report = certify_profile(c, BASIS, CFG)
        assert isinstance(report, InfeasibilityReport) and not report.ok
        assert report.status == conic.INFEASIBLE and report.v_worst < 0

    def test_speed_limit(self):
        c = np.zeros(CFG.N)
        c[0] = np.sqrt(0.5) * CFG.V_max * 1.5
        report = certify_profile(c, BASIS, CFG)
        assert not report.ok and report.v_worst > CFG.V_max

    @pytest.mark.parametrize("seed", range(6))
    def test_round_trip_and_soundness(self, seed):
        rng = np.random.default_rng(seed)
        c = 0.05 * rng.standard_normal(CFG.N) / np.arange(1, CFG.N + 1)
        c[0] = rng.uniform(0.5, 6.0)
        cert = certify_profile(c, BASIS, CFG)
        assert cert.ok
        lo = assemble_lower_constraints(CFG.N, build_chebyshev_map(CFG.N, CFG.T, CFG.V_max))
        up = assemble_upper_constraints(CFG.N, build_chebyshev_map(CFG.N, CFG.T, CFG.V_max))
        assert np.allclose(lo.reconstruct([cert.Q1, cert.Q2]), lo.target(c), atol=1e-8)
        assert np.allclose(up.reconstruct([cert.Y1, cert.Y2]), up.target(c), atol=1e-8)
        v = c @ BASIS.phi(np.linspace(0, CFG.T, 4001))
        assert v.min() >= -1e-7 and v.max() <= CFG.V_max * (1 + 1e-7)

    @pytest.mark.parametrize("seed", range(6))
    def test_lower_bound_complete(self, seed):
        # profiles strictly positive inside (0, T) must be certified by the lower set alone
        rng = np.random.default_rng(100 + seed)
        N = 7
        basis = build_basis(N, 1.0)
        c = 0.1 * rng.standard_normal(N) / np.arange(1, N + 1) ** 2
        c[0] = 1.0
        t = np.linspace(1e-3, 1 - 1e-3, 4001)
        P = (c @ basis.phi(t)) / (np.sqrt(2) * np.sin(np.pi * t))
        assert P.min() >= 1e-3
        assert lower_feasible(c, basis).ok


class TestNormBalls:
    cfg2 = ProblemConfig(N=2, V_max=1.0)

    def test_zero(self):
        assert norm_ball_memberships([0.0, 0.0], self.cfg2) == {"l1": True, "l2": True}

    def test_examples(self):
        assert norm_ball_memberships([0.70, 0.0], self.cfg2) == {"l1": True, "l2": False}
        assert norm_ball_memberships([0.71, 0.1], self.cfg2) == {"l1": False, "l2": False}


class TestRegion:
    def test_small_raster_interval_matches_pointwise(self):
        grid = RegionGrid(n1=15, n2=15)
        a = rasterize_feasible_region(grid, method="interval")
        b = rasterize_feasible_region(grid, method="pointwise")
        assert np.array_equal(a["sos"], b["sos"])

    def test_containments_and_origin(self):
        grid = RegionGrid(n1=41, n2=41)
        r = rasterize_feasible_region(grid)
        origin = r[(r["c1"] == 0) & (r["c2"] == 0)][0]
        assert origin["sos"] and origin["l1"] and origin["l2"] and origin["truth"]
        assert np.all(r["truth"][r["l1"]]) and np.all(r["l1"][r["l2"]]) and np.all(r["truth"][r["sos"]])
        assert r["sos"].sum() <= r["truth"].sum()

    def test_truth_boundary(self):
        grid = RegionGrid(c1_min=np.sqrt(0.5) - 1e-9, c1_max=np.sqrt(0.5) + 1e-9, c2_min=0, c2_max=0, n1=2, n2=2)
        r = rasterize_feasible_region(grid)
        assert r["truth"][0] and not r["truth"][1]

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            rasterize_feasible_region(RegionGrid(n1=2, n2=2), method="guess")
