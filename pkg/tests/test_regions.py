import math

import numpy as np
import pytest

from rittlab.errors import DegenerateHull, MeetOutsideDisc, NoConvergence, NonConvex
from rittlab.regions import (Arc, Contour, PolygonRegion, ProductRegion, SectorRegion, Segment,
                             SpectralConfig, StolzRegion, build_sector, build_stolz,
                             build_transfer_polygons, check_e_large, circle, corner_layers,
                             d_from_c, integrate, inward_offset, min_e_large_radius, quadrature,
                             sample_interior)

E1 = SpectralConfig([1.0], 0.3, 0.6)
E2 = SpectralConfig([1.0, -1.0], 0.3, 0.6)
E3 = SpectralConfig([np.exp(2j * np.pi * k / 3) for k in range(3)], 0.55, 0.75)


class TestSpectralConfig:
    def test_sorted_by_argument(self):
        cfg = SpectralConfig([-1.0, 1j, 1.0], 0.75, 0.8)
        assert np.allclose(cfg.xi, [1.0, 1j, -1.0])

    @pytest.mark.parametrize("xi,r,s", [([], 0.3, 0.6), ([1.1], 0.3, 0.6), ([1.0], 0.6, 0.3),
                                        ([1.0, 1.0], 0.3, 0.6)])
    def test_invalid(self, xi, r, s):
        with pytest.raises(ValueError):
            SpectralConfig(xi, r, s)

    def test_json_roundtrip(self):
        assert SpectralConfig.from_json(E3.to_json()) == E3


class TestStolz:
    def test_membership_examples(self):
        reg = build_stolz(E1, 0.5)
        assert reg.contains(0.0)
        assert not reg.contains(1.0)

    def test_two_point_boundary(self):
        reg = build_stolz(E2, 0.5)
        kinds = [type(p).__name__ for p in reg.boundary.pieces]
        assert kinds.count("Arc") == 2 and kinds.count("Segment") == 4
        for xi, (tm, tp) in zip(E2.xi, reg.tangents):
            for t in (tm, tp):
                assert abs(abs(t) - 0.5) < 1e-12
                # the tangent segment is perpendicular to the radius at its foot
                assert abs(((xi - t) * np.conj(t)).real) < 1e-12

    def test_winding_and_zero_sum(self):
        c = build_stolz(E3, 0.7).boundary
        z, w = c.rule(3)
        assert abs(np.sum(w)) < 1e-12
        assert abs(c.winding(0.1 + 0.2j) - 1) < 1e-10

    def test_cauchy_indicator_on_random_points(self, rng):
        reg = build_stolz(E2, 0.6)
        z0 = 1.3 * (rng.uniform(-1, 1, 100) + 1j * rng.uniform(-1, 1, 100))
        z0 = z0[reg.distance(z0) > 1e-3]
        vals = [quadrature(reg.boundary, lambda z: 1 / (z - p)) / (2j * np.pi) for p in z0]
        assert np.allclose(vals, reg.inside(z0).astype(float), atol=1e-8)

    def test_degenerate_hull(self):
        with pytest.raises(DegenerateHull):
            check_e_large((1.0, 1j), 0.5)
        assert min_e_large_radius((1.0, 1j)) == pytest.approx(math.cos(math.pi / 4))

    def test_corner_layers_inside(self):
        reg = build_stolz(E2, 0.5)
        for k, layer in enumerate(corner_layers(reg, layers=6)):
            assert len(layer) > 0
            assert np.all(reg.contains(layer))
            d = np.min(np.abs(layer[:, None] - np.array(E2.xi)[None, :]), axis=1)
            assert np.allclose(d, 0.5 ** (k + 1))


class TestSector:
    def test_membership(self):
        reg = build_sector(math.pi / 4)
        assert reg.contains(1.0)
        assert not reg.contains(0.0)
        assert not reg.contains(1j)

    def test_rays_integrate_resolvent(self):
        # (1/2 pi i) int over the sector boundary of f(z)/(z - a) gives f(a)
        c = SectorRegion(math.pi / 3).rays(1e-9, 1e9)
        f = lambda z: z / (1 + z) ** 2  # noqa: E731
        a = 0.7 + 0.1j
        val = quadrature(c, lambda z: f(z) / (z - a)) / (2j * np.pi)
        assert abs(val - f(a)) < 1e-8


class TestQuadrature:
    def test_unit_circle(self):
        assert abs(quadrature(circle(0, 1), lambda z: 1 / z) - 2j * np.pi) < 1e-10

    def test_entire_over_polygon(self):
        poly = PolygonRegion([0.5, 0.3j, -0.4 + 0.1j, -0.2 - 0.5j])
        assert abs(quadrature(poly.boundary, lambda z: z ** 2)) < 1e-12

    def test_residue_in_stolz(self):
        c = build_stolz(E1, 0.6).boundary
        val = quadrature(c, lambda z: (1 - z) / (z - 0.3)) / (2j * np.pi)
        assert abs(val - 0.7) < 1e-10

    def test_graded_segment_endpoint_singularity(self):
        # int_0^1 t^{-1/2} dt = 2, singular at the graded end
        seg = Contour((Segment(0j, 1 + 0j, grade_start=True),), closed=False)
        assert abs(quadrature(seg, lambda z: 1 / np.sqrt(z)) - 2) < 1e-8

    def test_no_convergence(self):
        seg = Contour((Segment(0j, 1 + 0j),), closed=False)
        with pytest.raises(NoConvergence):
            integrate(seg, lambda z, w: np.sum(w / z), max_level=3)

    def test_reversed_negates(self):
        c = build_stolz(E2, 0.5).boundary
        f = lambda z: np.exp(z) / (z - 0.1)  # noqa: E731
        assert abs(quadrature(c, f) + quadrature(c.reversed(), f)) < 1e-10

    def test_mapped_contour(self):
        c = circle(0, 1).mapped(2j, 0.5)
        assert abs(c.winding(0.5 + 1.5j) - 1) < 1e-12
        assert abs(c.winding(3.0)) < 1e-12

    def test_arc_distance(self):
        arc = Arc(0j, 1.0, 0.0, math.pi / 2)
        assert arc.distance(np.array([2j]))[0] == pytest.approx(1.0)
        assert arc.distance(np.array([-1.0]))[0] == pytest.approx(math.sqrt(2))


class TestPolygons:
    def test_d_rule(self):
        assert d_from_c([0.5])[0] == pytest.approx(0.75)
        assert d_from_c([0.3 + 0.4j])[0] == pytest.approx(0.45 + 0.6j)

    def test_single_vertex_rejected(self):
        with pytest.raises(NonConvex):
            PolygonRegion([0.0, 1.0])

    def test_clockwise_rejected(self):
        with pytest.raises(NonConvex):
            PolygonRegion([0.0, 1j, 1.0])

    def test_pi_over_three_with_three_aux_points(self):
        polys = build_transfer_polygons(E1, math.pi / 3, aux_arc_points=3)
        assert polys.aux_count >= 3
        assert np.all((np.abs(polys.c) > 0) & (np.abs(polys.c) < 1))
        edge = np.concatenate([polys.c, 0.5 * (polys.c + polys.zeta), polys.zeta])
        assert np.all(polys.outer.inside(edge) | (polys.outer.distance(edge) <= 1e-12))

    @pytest.mark.parametrize("cfg", [E1, E2, E3])
    def test_inner_covers_closed_region(self, cfg):
        polys = build_transfer_polygons(cfg, 1.40)
        pts = sample_interior(build_stolz(cfg, cfg.r), 300, np.random.default_rng(0))
        assert np.all(polys.inner.inside(pts))
        assert set(np.round(np.array(cfg.xi), 12)) <= set(np.round(polys.zeta, 12))

    def test_theta_below_asin_r(self):
        with pytest.raises(MeetOutsideDisc):
            build_transfer_polygons(SpectralConfig([1.0], 0.9, 0.95), 0.5)


def test_product_region():
    prod = ProductRegion(build_stolz(E1, 0.5), build_sector(1.0))
    assert prod.contains(0.1, 2.0)
    assert not prod.contains(1.0, 2.0)


def test_inward_offset_enters(rng):
    reg = build_stolz(E2, 0.5)
    pts = reg.boundary.sample(40)
    assert np.all(reg.inside(inward_offset(reg, pts, 1e-4)))
