import numpy as np
import numpy.polynomial.polynomial as npoly
import pytest

from rittlab.errors import DecayRefuted
from rittlab.holofun import (BivariatePoly, HoloFun1, HoloFun2, builtin, certify_H0,
                             lagrange_basis, polynomial_split, reciprocal_bound, reciprocal_coeffs,
                             sector_builtin, stolz_cert, sup_norm, vanishing_poly)
from rittlab.regions import ProductRegion, SpectralConfig, StolzRegion, build_sector

E1 = SpectralConfig([1.0], 0.3, 0.6)
E2 = SpectralConfig([1.0, -1.0], 0.3, 0.6)
EI = SpectralConfig([1j, -1j], 0.3, 0.6)
E1I = SpectralConfig([1.0, 1j], 0.75, 0.8)
E3 = SpectralConfig([1.0, 1j, -1.0], 0.75, 0.8)

# 1/((1 - z)(1 + i z)) expanded symbolically
RECIPROCAL_1_I = [1, 1 - 1j, -1j, 0, 1, 1 - 1j, -1j, 0]


def _poly(rng, d1, d2):
    return BivariatePoly(rng.standard_normal((d1 + 1, d2 + 1)) + 1j * rng.standard_normal((d1 + 1, d2 + 1)))


class TestBivariatePoly:
    def test_horner_oracle(self, rng):
        phi = _poly(rng, 4, 3)
        z1, z2 = 0.3 - 0.7j, -0.9 + 0.2j
        from rittlab.holofun import horner2
        assert abs(phi(z1, z2) - horner2(phi.coeffs, z1, z2)) < 1e-12

    def test_grid_and_factors(self, rng):
        phi = _poly(rng, 2, 3)
        a = rng.standard_normal(4) + 0j
        b = rng.standard_normal(5) + 1j
        assert np.allclose(phi.grid(a, b), phi(a[:, None], b[None, :]))
        v1, c, v2 = phi.factors(a, b)
        assert np.allclose(v1 @ c @ v2.T, phi.grid(a, b))

    def test_arithmetic(self, rng):
        p, q = _poly(rng, 2, 1), _poly(rng, 1, 3)
        z1, z2 = 0.4 + 0.1j, -0.3j
        assert (p + q)(z1, z2) == pytest.approx(p(z1, z2) + q(z1, z2))
        assert (p - q)(z1, z2) == pytest.approx(p(z1, z2) - q(z1, z2))
        assert (p * q)(z1, z2) == pytest.approx(p(z1, z2) * q(z1, z2))

    def test_compose_affine(self, rng):
        phi = _poly(rng, 3, 2)
        a1, b1, a2, b2 = -1j, 1j, 2.0, -0.5
        z1, z2 = 0.2 + 0.3j, 0.6
        want = phi(a1 * z1 + b1, a2 * z2 + b2)
        assert phi.compose_affine(a1, b1, a2, b2)(z1, z2) == pytest.approx(want, abs=1e-12)

    def test_of_matrices(self, rng):
        phi = _poly(rng, 2, 2)
        lam1, lam2 = rng.standard_normal(3), rng.standard_normal(3)
        want = np.diag(phi(lam1, lam2))
        assert np.allclose(phi.of_matrices(np.diag(lam1), np.diag(lam2)), want)

    def test_json_roundtrip(self, rng):
        phi = _poly(rng, 1, 2)
        assert np.array_equal(BivariatePoly.from_json(phi.to_json()).coeffs, phi.coeffs)

    def test_rejects_1d(self):
        with pytest.raises(ValueError):
            BivariatePoly([1.0, 2.0])


class TestLagrange:
    def test_single_point(self):
        (L,) = lagrange_basis(E1)
        assert np.allclose(L.coef, [1.0])

    def test_two_points(self):
        L1, L2 = lagrange_basis(E2)
        assert np.allclose(L1.coef, [0.5, 0.5])
        assert np.allclose(L2.coef, [0.5, -0.5])

    def test_three_points(self):
        L = lagrange_basis(E3)
        k = E3.xi.index(1j)
        assert abs(L[k](1j) - 1) < 1e-14
        assert abs(L[k](1.0)) < 1e-14 and abs(L[k](-1.0)) < 1e-14


class TestSplit:
    def test_monomial(self):
        P1, P2, P3, P4 = polynomial_split(BivariatePoly([[0, 0], [0, 1]]), E1)
        want = BivariatePoly([[1, -1], [-1, 1]])  # (z1 - 1)(z2 - 1)
        assert np.allclose(P4.coeffs, want.coeffs)

    def test_constant(self):
        P1, P2, P3, P4 = polynomial_split(BivariatePoly([[1.0]]), E2)
        assert np.allclose(P1.coeffs[0, 0], 1) and np.allclose(P1.coeffs.ravel()[1:], 0)
        for P in (P2, P3, P4):
            assert np.allclose(P.coeffs, 0)

    def test_partition_and_vanishing(self, rng):
        phi = _poly(rng, 5, 4)
        parts = polynomial_split(phi, E2)
        total = parts[0] + parts[1] + parts[2] + parts[3]
        assert np.max(np.abs(total.padded(*phi.degrees)[:6, :5] - phi.coeffs)) < 1e-12
        w = rng.standard_normal(20) + 1j * rng.standard_normal(20)
        for xi in E2.xi:
            assert np.max(np.abs(parts[3](xi, w))) < 1e-9
            assert np.max(np.abs(parts[3](w, xi))) < 1e-9


class TestReciprocal:
    def test_one_point(self):
        assert np.allclose(reciprocal_coeffs(E1, 20), 1.0)

    def test_plus_minus_one(self):
        assert np.allclose(reciprocal_coeffs(E2, 8), [1, 0, 1, 0, 1, 0, 1, 0])

    def test_plus_minus_i(self):
        assert np.allclose(reciprocal_coeffs(EI, 8), [1, 0, -1, 0, 1, 0, -1, 0])

    def test_symbolic_series(self):
        assert np.allclose(reciprocal_coeffs(E1I, 8), RECIPROCAL_1_I, atol=1e-14)

    def test_convolution_identity(self):
        a = reciprocal_coeffs(E3, 60)
        conv = npoly.polymul(vanishing_poly(E3), a)[:60]
        assert np.allclose(conv, np.eye(1, 60)[0], atol=1e-12)
        assert np.max(np.abs(a)) <= reciprocal_bound(E3)

    def test_positive_length(self):
        with pytest.raises(ValueError):
            reciprocal_coeffs(E1, 0)


class TestCertificate:
    def test_linear_factor(self):
        f = builtin("one_minus_z^1", E1)
        cert = certify_H0(f, StolzRegion(E1, 0.6), 1.0)
        assert cert.ok and cert.c == pytest.approx(1.0)

    def test_exponent_mismatch(self):
        f = builtin("one_minus_z^2", E1)
        cert = certify_H0(f, StolzRegion(E1, 0.6), 3.0)
        assert not cert.ok
        assert abs(cert.witness - 1) < 1e-2
        with pytest.raises(DecayRefuted):
            cert.raise_if_refuted()

    def test_claimed_constant_refuted(self):
        f = builtin("one_minus_z^1", E1).scaled(2.0)
        assert not certify_H0(f, StolzRegion(E1, 0.6), 1.0, c=1.0).ok

    def test_bivariate(self):
        f = builtin("one_minus_z^1", E1)
        F = HoloFun2.separable(f, f)
        reg = StolzRegion(E1, 0.6)
        cert = certify_H0(F, ProductRegion(reg, reg), (1.0, 1.0))
        assert cert.ok and cert.c == pytest.approx(1.0)

    def test_sector(self):
        cert = certify_H0(sector_builtin("z/(1+z)^2"), build_sector(1.0), 1.0)
        assert cert.ok


class TestSupNorm:
    def test_identity_function(self):
        f = HoloFun1(lambda z: z)
        assert sup_norm(f, StolzRegion(SpectralConfig([1.0], 0.3, 0.5), 0.5)) == pytest.approx(1.0, rel=1e-4)

    def test_constant(self):
        f = HoloFun1(lambda z: 3 * np.ones_like(z))
        assert sup_norm(f, StolzRegion(E1, 0.5)) == pytest.approx(3.0)

    def test_one_minus_z(self):
        f = builtin("one_minus_z^1", E1)
        assert sup_norm(f, StolzRegion(E1, 0.5)) == pytest.approx(1.5, rel=1e-4)


class TestBuiltins:
    @pytest.mark.parametrize("name,params", [
        ("one_minus_z^2", {}), ("prod_linear_factors", {"roots": [1.5]}),
        ("rational(p,q)", {"p": [1.0], "q": [2.0, 1.0]}), ("poly", {"q": [1.0, 0.5j]}),
        ("frac_vanish", {"s": 0.5})])
    def test_vanish_on_E(self, name, params):
        f = builtin(name, E2, **params)
        assert np.max(np.abs(f(np.array(E2.xi)))) < 1e-12

    def test_declared_decay_holds(self):
        f = builtin("rational(p,q)", E1, p=[1.0, 0.5], q=[3.0, 1j])
        cert = certify_H0(f, StolzRegion(E1, 0.6), 1.0, c=f.decay.c)
        assert cert.ok

    def test_denominator_roots_checked(self):
        with pytest.raises(ValueError):
            builtin("rational(p,q)", E1, p=[1.0], q=[1.0, 1.0])

    def test_unknown(self):
        with pytest.raises(KeyError):
            builtin("nope", E1)

    def test_needs_config(self):
        with pytest.raises(ValueError):
            builtin("one_minus_z^1")

    def test_product_decay(self):
        f = builtin("one_minus_z^1", E1)
        g = f * f
        assert g.decay.exponents == (2.0,)
        assert stolz_cert(1.0, E1, 2.0).profile(np.array([0.0]))[0] == pytest.approx(1.0)
