import json

import numpy as np
import pytest
import scipy.linalg

from rittlab.errors import BranchViolation, DefectiveZero, SingularResolvent
from rittlab.linalg import (ReducedResolvent, SchurResolvent, as_matrix, dump_matrix, eigvals,
                            frac_power, load_matrix, matrix_from_json, matrix_to_json, op_norm,
                            resolvent, spectral_radius, spectrum)

JORDAN = np.array([[1.0, 1.0], [0.0, 1.0]])


def _random(rng, n, scale=1.0):
    return scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))


class TestResolvent:
    def test_zero_operator(self):
        assert np.allclose(resolvent(np.zeros((2, 2)), 2.0), 0.5 * np.eye(2), atol=1e-15)

    def test_scalar(self):
        assert np.allclose(resolvent([[0.5]], 1.0), [[2.0]], atol=1e-14)

    def test_jordan_block_closed_form(self):
        eps = 0.1
        want = np.array([[1 / eps, 1 / eps ** 2], [0.0, 1 / eps]])
        assert np.allclose(resolvent(JORDAN, 1 + eps), want, rtol=1e-13)

    def test_matches_inverse(self, rng):
        T = _random(rng, 5, 0.3)
        z = 1.1 + 0.2j
        assert np.allclose(resolvent(T, z), np.linalg.inv(z * np.eye(5) - T), atol=1e-12)

    def test_on_spectrum_raises(self):
        with pytest.raises(SingularResolvent):
            resolvent(np.diag([0.5, 0.25]), 0.5)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            as_matrix(np.zeros((2, 3)))

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            as_matrix([[np.nan]])


class TestSchurResolvent:
    def test_stack_and_sum(self, rng):
        T = _random(rng, 4, 0.3)
        z = np.array([1.5, -1.2j, 0.9 + 0.9j])
        w = np.array([0.3, -1.0 + 2j, 0.5j])
        S = SchurResolvent(T)
        stack = S.stack(z)
        for k in range(3):
            assert np.allclose(stack[k], resolvent(T, z[k]), atol=1e-12)
        want = sum(w[k] * resolvent(T, z[k]) for k in range(3))
        assert np.allclose(S.weighted_sum(z, w), want, atol=1e-12)

    def test_node_on_spectrum(self):
        with pytest.raises(SingularResolvent):
            SchurResolvent(np.diag([0.2, 0.7])).stack(np.array([0.7]))


class TestReducedResolvent:
    def test_matches_projected_oracle(self, rng):
        lam = np.array([1.0, 0.3, -0.2 + 0.4j, 1.0])
        P = _random(rng, 4) + 3 * np.eye(4)
        Pinv = np.linalg.inv(P)
        T = P @ np.diag(lam) @ Pinv
        S = ReducedResolvent(T, [1.0], 1e-9)
        assert S.removed == 2
        assert S.defect < 1e-9
        keep = (lam != 1.0).astype(float)
        for z in (1.0, 0.5 + 0.5j, -1.3):
            want = P @ np.diag(keep / np.where(keep > 0, z - lam, 1.0)) @ Pinv
            assert np.allclose(S.stack(np.array([z]))[0], want, atol=1e-11)

    def test_jordan_defect_detected(self):
        S = ReducedResolvent(JORDAN, [1.0], 1e-9)
        assert S.removed == 2
        assert S.defect == pytest.approx(1.0)

    def test_all_removed(self):
        S = ReducedResolvent(np.eye(3), [1.0], 1e-9)
        assert np.all(S.weighted_sum(np.array([0.0]), np.array([1.0])) == 0)


class TestSpectrum:
    def test_diagonal(self):
        assert np.allclose(np.sort_complex(eigvals(np.diag([1.0, -1.0, 0.5]))), [-1, 0.5, 1])

    def test_rotation(self):
        got = np.sort_complex(eigvals([[0.0, 1.0], [-1.0, 0.0]]))
        assert np.allclose(got, [-1j, 1j], atol=1e-14)

    def test_companion_cube_roots(self):
        C = np.array([[0, 0, 0.125], [1, 0, 0], [0, 1, 0]], dtype=complex)
        got = eigvals(C)
        want = 0.5 * np.exp(2j * np.pi * np.arange(3) / 3)
        assert np.max(np.min(np.abs(got[:, None] - want[None, :]), axis=1)) < 1e-13

    def test_agrees_with_lapack(self, rng):
        T = _random(rng, 12)
        got = np.sort_complex(eigvals(T))
        assert np.allclose(got, np.sort_complex(np.linalg.eigvals(T)), atol=1e-10)

    def test_residual_reported(self, rng):
        assert spectrum(_random(rng, 6)).residual < 1e-10

    def test_spectral_radius(self):
        assert spectral_radius(np.diag([0.2, -0.9j])) == pytest.approx(0.9)


class TestOpNorm:
    def test_identity(self):
        assert op_norm(np.eye(3)) == pytest.approx(1.0, abs=1e-12)

    def test_diagonal(self):
        assert op_norm(np.diag([3.0, -4j])) == pytest.approx(4.0, abs=1e-10)

    def test_jordan_golden_ratio(self):
        assert op_norm(JORDAN) == pytest.approx((1 + 5 ** 0.5) / 2, abs=1e-9)

    def test_two_norm_against_svd(self, rng):
        T = _random(rng, 7)
        assert op_norm(T) == pytest.approx(np.linalg.norm(T, 2), rel=1e-9)

    def test_one_norm_is_column_sum(self, rng):
        T = _random(rng, 5)
        assert op_norm(T, p=1) == pytest.approx(np.linalg.norm(T, 1), rel=1e-12)

    def test_p_norm_is_lower_bound(self, rng):
        T = _random(rng, 5)
        x = rng.standard_normal(5)
        assert op_norm(T, p=3) >= np.linalg.norm(T @ x, 3) / np.linalg.norm(x, 3) * (1 - 1e-12)

    def test_zero(self):
        assert op_norm(np.zeros((3, 3))) == 0.0


class TestFracPower:
    def test_identity(self):
        assert np.allclose(frac_power(np.eye(3), 0.5), np.eye(3))

    def test_scalar(self):
        assert np.allclose(frac_power([[4.0]], 0.5), [[2.0]])

    def test_jordan_square_root(self):
        assert np.allclose(frac_power(JORDAN, 0.5), [[1.0, 0.5], [0.0, 1.0]], atol=1e-14)

    def test_against_scipy(self, rng):
        A = np.eye(5) + _random(rng, 5, 0.2)
        want = scipy.linalg.fractional_matrix_power(A, 0.3)
        assert np.allclose(frac_power(A, 0.3), want, atol=1e-10)

    def test_clustered_eigenvalues(self):
        A = np.array([[1.0, 1.0, 0.0], [0.0, 1.0 + 1e-10, 1.0], [0.0, 0.0, 0.5]])
        R = frac_power(A, 0.5)
        assert np.allclose(R @ R, A, atol=1e-10)

    def test_perturbed_jordan(self):
        # a 1e-13 perturbation splits the double eigenvalue by about 1e-7
        A = np.eye(4, dtype=complex) + 2e-14
        A[0, 1] += 0.2j
        R = frac_power(A, 0.5)
        assert np.abs(R @ R - A).max() < 1e-13

    def test_semisimple_zero(self):
        assert np.allclose(frac_power(np.diag([0.0, 4.0]), 0.5), np.diag([0.0, 2.0]))

    def test_defective_zero(self):
        with pytest.raises(DefectiveZero):
            frac_power([[0.0, 1.0], [0.0, 0.0]], 0.5)

    def test_negative_axis(self):
        with pytest.raises(BranchViolation):
            frac_power(np.diag([-1.0, 1.0]), 0.5)


def test_matrix_json_roundtrip(tmp_path, rng):
    T = _random(rng, 3)
    assert np.array_equal(matrix_from_json(json.loads(json.dumps(matrix_to_json(T)))), T)
    dump_matrix(T, tmp_path / "m.json")
    assert np.array_equal(load_matrix(tmp_path / "m.json"), T)


def test_matrix_json_shape_checked():
    with pytest.raises(ValueError):
        matrix_from_json({"n": 2, "entries": [[[1, 0]]]})
