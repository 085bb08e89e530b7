import math

import numpy as np
import pytest

from riemann_boundary.geometry import (
    ArcSpec,
    BoundaryNotRadialGraph,
    CenterNotInterior,
    DegenerateEdge,
    InvalidM,
    Location,
    NonpositiveRadius,
    OriginNotInterior,
    SelfIntersection,
    TooFewNodes,
    circle_agreement_sup,
    classify,
    distance_to_boundary,
    free_arc_on_circle,
    inside_mask,
    point_in_jordan,
    rotated_intersection_samples,
    signed_area,
    validate_jordan,
    winding_number,
    wrap_angle,
)
from riemann_boundary.domains import DomainFamily, _bump_nodes, make_unit_disk
from riemann_boundary.lindelof import sector_removed_domain

SQUARE = [1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]


class TestValidate:
    def test_square_scaled(self):
        d = validate_jordan(2 * np.array(SQUARE), 1e-12)
        assert d.area == pytest.approx(16.0)
        assert signed_area(d.nodes) > 0

    def test_bowtie(self):
        with pytest.raises(SelfIntersection):
            validate_jordan([1 + 1j, -1 - 1j, 1 - 1j, -1 + 1j])

    def test_clockwise_reversed(self):
        cw = SQUARE[::-1]
        d = validate_jordan(cw)
        assert signed_area(d.nodes) > 0
        assert d.nodes[0] == cw[0]
        assert set(d.nodes) == set(cw)

    def test_too_few(self):
        with pytest.raises(TooFewNodes):
            validate_jordan([1, 1j])

    def test_degenerate_edge(self):
        with pytest.raises(DegenerateEdge):
            validate_jordan([1 + 1j, 1 + 1j + 1e-12, -1 + 1j, -1 - 1j, 1 - 1j])

    def test_origin_outside(self):
        with pytest.raises(OriginNotInterior):
            validate_jordan(np.array(SQUARE) + 3)

    def test_fold_back(self):
        with pytest.raises(SelfIntersection):
            validate_jordan([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j, 1 + 0.5j, 1 - 0.5j])

    def test_idempotent(self):
        d = make_unit_disk(64)
        assert validate_jordan(d) == d

    def test_errors_are_value_errors(self):
        assert issubclass(SelfIntersection, ValueError)


class TestMembership:
    sq = validate_jordan(SQUARE)

    def test_examples(self):
        assert point_in_jordan(self.sq, 0) is Location.INSIDE
        assert point_in_jordan(self.sq, 2) is Location.OUTSIDE
        assert point_in_jordan(self.sq, 1) is Location.BOUNDARY

    def test_winding_agrees(self, rng):
        z = rng.uniform(-2, 2, 500) + 1j * rng.uniform(-2, 2, 500)
        inside = (np.abs(z.real) < 1) & (np.abs(z.imag) < 1)
        assert np.array_equal(winding_number(self.sq, z) != 0, inside)
        loc = classify(self.sq, z)
        assert all((l is Location.INSIDE) == i for l, i in zip(loc, inside))

    def test_distance(self):
        assert distance_to_boundary(self.sq, np.array([0j, 3 + 0j])) == pytest.approx([1.0, 2.0])

    def test_inside_mask_strict(self):
        pts = np.array([0, 1, 2], dtype=complex)
        assert list(inside_mask(self.sq, pts, strict=True)) == [True, False, False]
        assert list(inside_mask(self.sq, pts, strict=False)) == [True, True, False]


class TestFreeArc:
    def test_sector_m2(self):
        d = sector_removed_domain(-0.1, math.pi + 0.1, 0.95)
        arc = free_arc_on_circle(d, 0, 1.0)
        assert arc.m == 2
        assert arc.length >= math.pi
        assert arc.length == pytest.approx(math.pi + 0.2, abs=2 * 2 * math.pi / 4096)
        assert wrap_angle(arc.start_angle + 0.1) == pytest.approx(0, abs=2e-3)

    def test_sector_m3(self):
        d = sector_removed_domain(0.0, 2 * math.pi / 3 + 0.2, 0.95)
        arc = free_arc_on_circle(d, 0, 1.0)
        assert arc.m == 3
        assert 2 * math.pi / 3 <= arc.length < math.pi

    def test_disk_radius_two_empty(self):
        d = validate_jordan(2 * np.exp(2j * np.pi * np.arange(256) / 256))
        assert free_arc_on_circle(d, 0, 1.0) is None

    def test_errors(self):
        d = make_unit_disk(64)
        with pytest.raises(NonpositiveRadius):
            free_arc_on_circle(d, 0, 0.0)
        with pytest.raises(CenterNotInterior):
            free_arc_on_circle(d, 3.0, 1.0)

    def test_m_brackets_length(self):
        d = sector_removed_domain(0.0, 1.3, 0.95)
        arc = free_arc_on_circle(d, 0, 1.0)
        assert 2 * math.pi / arc.m <= arc.length < 2 * math.pi / (arc.m - 1)


class TestRotatedIntersection:
    def test_m1_identity(self):
        d = make_unit_disk(64)
        s = rotated_intersection_samples(d, 1, 128)
        assert np.allclose(s, d.sample_boundary(128))

    def test_invalid_m(self):
        with pytest.raises(InvalidM):
            rotated_intersection_samples(make_unit_disk(64), 0)

    def test_members_of_every_copy(self):
        d = sector_removed_domain(0.0, math.pi, 0.9)
        s = rotated_intersection_samples(d, 2, 1024)
        assert s.size > 0
        for k in range(2):
            assert inside_mask(d.rotated(math.pi * k), s, strict=False).all()
        # both removed sectors' inner arcs appear
        inner = np.abs(np.abs(s) - 0.9) < 1e-4
        assert (s[inner].imag > 0.1).any() and (s[inner].imag < -0.1).any()

    def test_symmetric_domain(self):
        d = make_unit_disk(120)
        s = rotated_intersection_samples(d, 3, 240)
        assert np.abs(distance_to_boundary(d, s)).max() < 1e-9
        assert len(s) >= 240


class TestCircleAgreement:
    spec = ArcSpec(0.0, math.pi / 3, 0.3, 0.3)

    def test_unit_disk(self):
        d = make_unit_disk(1024)
        assert circle_agreement_sup(d, self.spec) <= 1 - math.cos(math.pi / 1024) + 1e-12

    def test_tube_away_from_u(self):
        from riemann_boundary.domains import generate
        d = generate(DomainFamily(), 2)
        assert circle_agreement_sup(d, self.spec) < 1e-4

    def test_bump_inside_u(self):
        fam = DomainFamily(kind="bump", attach_angle=0.0, width0=0.1)
        d = validate_jordan(_bump_nodes(fam, 0))
        assert circle_agreement_sup(d, self.spec) == pytest.approx(0.1, rel=1e-3)

    def test_not_radial_graph(self):
        # a notch cut in from the right: the ray at angle 0.1 meets it three times
        pts = [1.5 - 1.5j, 1.5 - 0.1j, 0.5 - 0.1j, 0.5 + 0.1j, 1.5 + 0.1j, 1.5 + 1.5j,
               -1.5 + 1.5j, -1.5 - 1.5j]
        d = validate_jordan(pts)
        with pytest.raises(BoundaryNotRadialGraph):
            circle_agreement_sup(d, self.spec)


def test_arcspec_validation():
    with pytest.raises(ValueError):
        ArcSpec(0.0, 3.0, 0.5, 0.3)
    with pytest.raises(ValueError):
        ArcSpec(0.0, 1.0, 0.5, 1.5)
    s = ArcSpec(0.0, 1.0, 0.2, 0.3)
    assert s.in_gamma(np.exp(0.5j)) and not s.in_gamma(np.exp(1.1j))
    assert s.in_u(1.1 * np.exp(1.1j)) and not s.in_u(1.4)


def test_wrap_angle():
    assert wrap_angle(3 * math.pi) == pytest.approx(-math.pi)
    assert wrap_angle(0.5) == pytest.approx(0.5)
