import math

import numpy as np
import pytest

from rittlab.calculus import (a_rho, classify_rittE, estimate_fc_constant, fc_rittE, fc_rittE_pair,
                              fc_sectorial, fc_sectorial_pair, poly_pair_via_split,
                              spectral_type_radius)
from rittlab.corpus import SEED, commuting_triangular_pair, normal_ritt, stolz_functions
from rittlab.errors import NonCommuting, PreconditionSpectrum, SpectralAngle
from rittlab.holofun import (BivariatePoly, HoloFun1, HoloFun2, builtin, sector_builtin, sup_norm,
                             zero_fun)
from rittlab.regions import SpectralConfig, StolzRegion

E1 = SpectralConfig([1.0], 0.3, 0.6)
E2 = SpectralConfig([1.0, -1.0], 0.3, 0.6)
JORDAN = np.array([[1.0, 1.0], [0.0, 1.0]])

# ||f(T)|| / ||f|| maximised over the default 14-function corpus for T = 0.5 * JORDAN;
# computed once by this implementation and kept as a regression baseline
PINNED_JORDAN_HALF_K = 0.7159777859106867


def one_minus(cfg=E1, k=1):
    return builtin(f"one_minus_z^{k}", cfg)


class TestRittE:
    def test_diagonal_with_eigenvalue_on_E(self):
        res = fc_rittE(one_minus(), np.diag([1.0, 0.0]), E1, u=0.5)
        assert np.allclose(res.value, np.diag([0.0, 1.0]), atol=1e-9)

    def test_zero_function(self):
        res = fc_rittE(zero_fun(), np.diag([0.2, 0.1]), E1)
        assert np.all(res.value == 0)

    def test_square_against_polynomial(self):
        T = np.array([[0.5, 0.1], [0.0, 0.4]])
        res = fc_rittE(one_minus(k=2), T, E1)
        I = np.eye(2)
        assert np.allclose(res.value, (I - T) @ (I - T), atol=1e-8)

    def test_eigen_oracle_nonnormal(self, rng):
        lam = np.array([1.0, -1.0, 0.2 + 0.1j, -0.3j])
        P = rng.standard_normal((4, 4)) + 3 * np.eye(4)
        T = P @ np.diag(lam) @ np.linalg.inv(P)
        f = builtin("frac_vanish", E2, s=0.5)
        want = P @ np.diag(f(lam)) @ np.linalg.inv(P)
        res = fc_rittE(f, T, E2)
        assert np.max(np.abs(res.value - want)) <= 1e-7 * np.linalg.cond(P)
        assert res.extras["radius_drift"] < 2e-9

    def test_jordan_on_E_rejected(self):
        with pytest.raises(PreconditionSpectrum):
            fc_rittE(one_minus(), JORDAN, E1)

    def test_spectrum_outside_rejected(self):
        with pytest.raises(PreconditionSpectrum):
            fc_rittE(one_minus(), np.diag([0.2, -0.9]), E1)

    def test_contour_json(self):
        res = fc_rittE(one_minus(), np.diag([0.2]), E1, check_independence=False)
        (doc,) = res.contour_json()
        assert doc["closed"] and len(doc["pieces"]) == 3


class TestPair:
    def test_scalar_product(self):
        f = one_minus()
        res = fc_rittE_pair(HoloFun2.separable(f, f), np.diag([0.5]), np.diag([0.2]), E1)
        assert np.allclose(res.value, [[0.4]], atol=1e-7)

    def test_zero(self):
        F = HoloFun2.from_parts(None, None, None)
        assert np.all(fc_rittE_pair(F, np.diag([0.1]), np.diag([0.2]), E1).value == 0)

    def test_triangular_commuting_pair(self):
        T1, T2 = commuting_triangular_pair(np.random.default_rng(3), 4, radius=0.2)
        f = one_minus()
        res = fc_rittE_pair(HoloFun2.separable(f, f), T1, T2, E1)
        I = np.eye(4)
        assert np.allclose(res.value, (I - T1) @ (I - T2), atol=1e-7)

    def test_split_parts(self):
        f = one_minus()
        F = HoloFun2.from_parts(f, f, None)
        T1, T2 = np.diag([0.5, 0.1]), np.diag([0.2, -0.1])
        res = fc_rittE_pair(F, T1, T2, E1)
        assert np.allclose(res.value, 2 * np.eye(2) - T1 - T2, atol=1e-8)

    def test_non_commuting(self):
        f = one_minus()
        with pytest.raises(NonCommuting):
            fc_rittE_pair(HoloFun2.separable(f, f), np.diag([0.1, 0.2]), [[0, 0.1], [0.1, 0]], E1)

    def test_polynomial_via_split(self, rng):
        phi = BivariatePoly(rng.standard_normal((3, 2)))
        T1, T2 = commuting_triangular_pair(rng, 3)
        assert np.allclose(poly_pair_via_split(phi, T1, T2, E1), phi.of_matrices(T1, T2), atol=1e-7)


class TestSectorial:
    def test_scalar(self):
        res = fc_sectorial(sector_builtin("z/(1+z)^2"), np.diag([1.0]), math.pi / 4)
        assert np.allclose(res.value, [[0.25]], atol=1e-9)

    def test_identity(self):
        res = fc_sectorial(sector_builtin("z/(1+z)^2"), np.eye(3), math.pi / 4)
        assert np.allclose(res.value, 0.25 * np.eye(3), atol=1e-9)

    def test_pair(self):
        f = sector_builtin("z/(1+z)^2")
        res = fc_sectorial_pair(HoloFun2.separable(f, f), np.diag([1.0]), np.diag([2.0]),
                                math.pi / 4, math.pi / 4)
        assert np.allclose(res.value, [[0.25 * 2 / 9]], atol=1e-7)

    def test_nonnormal_oracle(self, rng):
        lam = np.array([0.1, 1.0 + 0.5j, 3.0 - 1j])
        P = rng.standard_normal((3, 3)) + 2 * np.eye(3)
        A = P @ np.diag(lam) @ np.linalg.inv(P)
        f = sector_builtin("sqrt(z)/(1+z)")
        want = P @ np.diag(f(lam)) @ np.linalg.inv(P)
        assert np.max(np.abs(fc_sectorial(f, A, 1.0).value - want)) <= 1e-7 * np.linalg.cond(P)

    def test_angle_checked(self):
        with pytest.raises(SpectralAngle):
            fc_sectorial(sector_builtin("z/(1+z)^2"), np.diag([1j]), math.pi / 4)

    def test_a_rho(self):
        A = np.array([[0.0, 1.0], [2.0, 3.0]])
        assert np.allclose(a_rho(A, 1.0), A)
        assert np.allclose(a_rho(A, 1e-6), np.eye(2), atol=1e-5)
        assert np.allclose(a_rho(np.diag([0.0]), 0.25), [[0.75]])


class TestClassify:
    def test_normal(self):
        rep = classify_rittE(np.diag([1.0, 0.3]), E1)
        assert rep.is_rittE

    def test_jordan(self):
        rep = classify_rittE(JORDAN, E1)
        assert not rep.is_rittE
        assert rep.reason

    def test_zero(self):
        rep = classify_rittE(np.zeros((2, 2)), E1)
        assert rep.is_rittE and math.isfinite(rep.to_json()["constant"])

    def test_spectrum_outside(self):
        assert not classify_rittE(np.diag([0.95j]), E1).is_rittE

    def test_type_radius(self):
        assert spectral_type_radius(E1, np.array([0.0])) < 0.01
        assert spectral_type_radius(E1, np.array([0.5j])) == pytest.approx(0.5, abs=1e-6)
        assert spectral_type_radius(E1, np.array([-1.1])) == 1.0


class TestConstant:
    def test_normal_is_one(self, rng):
        T, lam, _ = normal_ritt(SpectralConfig([1.0], 0.4, 0.6), rng, 5)
        funcs = stolz_functions(E1, rng, n_random=8)
        k = estimate_fc_constant(T, E1, funcs)
        # normal T: ||f(T)|| = max |f(lam)| <= sup over E_s
        assert k.value <= 1 + 5e-3
        reg = StolzRegion(E1, E1.s)
        oracle = max(np.max(np.abs(f(lam))) / sup_norm(f, reg) for f in funcs)
        assert k.value == pytest.approx(oracle, rel=1e-7)

    def test_single_point(self):
        funcs = stolz_functions(E1, np.random.default_rng(1), n_random=4)
        assert estimate_fc_constant(np.diag([0.25]), E1, funcs).value <= 1.0

    def test_jordan_half_pinned(self):
        funcs = stolz_functions(E1, np.random.default_rng(SEED), n_random=6)
        k = estimate_fc_constant(0.5 * JORDAN, E1, funcs)
        assert k.value == pytest.approx(PINNED_JORDAN_HALF_K, rel=1e-6)
        assert k.witness == "frac_vanish^0.5"

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            estimate_fc_constant(np.eye(1), E1, [], kind="bogus")

    def test_sectorial(self):
        f = HoloFun1(lambda z: z / (1 + z) ** 2, None, None, "g")
        k = estimate_fc_constant(np.diag([1.0, 0.5]), 1.0, [f], kind="sectorial")
        # sup over the sector edge is 1/(2 + 2 cos 1), attained at |z| = 1
        assert k.value == pytest.approx(0.25 * (2 + 2 * math.cos(1.0)), rel=1e-4)
