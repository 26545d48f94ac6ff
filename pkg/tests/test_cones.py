import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from heiscone.cones import (
    ConeKind,
    ConeSpec,
    contains,
    contains_arr,
    contains_translated,
    contains_translated_arr,
    flat_equals_full_slice,
    inequality_report,
)
from heiscone.group import Point, dilate, inverse, shear

from conftest import coord, positive, q_in_flat, q_in_full, q_in_vertical, triple

KINDS = [ConeSpec.full(0.7), ConeSpec.flat(0.7), ConeSpec.truncated(0.7, 2.0), ConeSpec.vertical(0.7, 2.0)]


class TestExamples:
    def test_flat_membership(self):
        cone = ConeSpec.flat(0.5)
        assert contains(cone, Point(1, 0.4, 0))
        assert not contains(cone, Point(1, 0.6, 0))

    def test_full_contains_cubic_witness(self):
        # 0.001 < 0.25 * 0.01 / 2 = 0.00125
        assert contains(ConeSpec.full(0.25), Point(0.1, 0, 0.001))

    def test_vertical_membership(self):
        # u = 2 * 0.05 / 0.25 = 0.4 < 1
        assert contains(ConeSpec.vertical(1, 1), Point(0.5, 0, 0.05))

    def test_translated_flat_cone_from_lemma_computation(self):
        # base (s eta, eta, 0) with eta = -0.2, s = 0.3; base^-1 p = (0.56, 0.2, 0)
        p = Point(0.5, 0, 0.05)
        base = Point(0.3 * -0.2, -0.2, 0)
        assert contains_translated(base, ConeSpec.flat(1), p)
        rel = inverse(base) * p
        assert rel.x == pytest.approx(0.56) and rel.y == pytest.approx(0.2) and abs(rel.z) < 1e-15

    def test_translated_with_positive_first_coordinate(self):
        # base (0.06, -0.2, 0) gives base^-1 p = (0.44, 0.2, 0), still inside fC(1)
        p = Point(0.5, 0, 0.05)
        rel = inverse(Point(0.06, -0.2, 0)) * p
        assert rel.x == pytest.approx(0.44) and abs(rel.z) < 1e-15
        assert contains_translated(Point(0.06, -0.2, 0), ConeSpec.flat(1), p)

    @pytest.mark.parametrize("cone", KINDS, ids=lambda c: c.kind.value)
    def test_base_is_never_inside_its_own_cone(self, cone):
        p = Point(0.3, -1.2, 2.5)
        assert not contains_translated(p, cone, p)

    def test_slice_identity_on_plane(self, rng):
        pts = np.column_stack([rng.uniform(-2, 2, (500, 2)), np.zeros(500)])
        assert flat_equals_full_slice(1.0, pts).passed

    def test_slice_skips_off_plane_samples(self):
        cert = flat_equals_full_slice(1.0, np.array([[1, 0.5, 0.1]]))
        assert cert.passed and cert.parameters["n_on_slice"] == 0

    def test_slice_identity_large_sample(self, rng):
        pts = np.column_stack([rng.uniform(-3, 3, (10_000, 2)), np.zeros(10_000)])
        assert flat_equals_full_slice(1.0, pts, tol=1e-12).passed


class TestSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            ConeSpec.full(0)
        with pytest.raises(ValueError):
            ConeSpec.full(math.nan)
        with pytest.raises(ValueError):
            ConeSpec(ConeKind.VERTICAL, 1.0)
        with pytest.raises(ValueError):
            ConeSpec(ConeKind.FULL, 1.0, 2.0)
        with pytest.raises(ValueError):
            contains(ConeSpec.full(1), Point(1, 0, 0), tol=-1)

    @pytest.mark.parametrize("cone", KINDS, ids=lambda c: c.kind.value)
    def test_dict_round_trip(self, cone):
        assert ConeSpec.from_dict(cone.to_dict()) == cone

    def test_inequality_report_names_the_violated_row(self):
        rows = inequality_report(ConeSpec.full(1), Point(1, 0.5, 0.6), 0.0)
        assert rows["|y| < a|x| - tol"]["holds"]
        assert not rows["|z| < a x^2/2 - tol"]["holds"]

    def test_array_and_scalar_agree(self, rng):
        pts = rng.uniform(-1, 1, (200, 3))
        pts[::3, 1] = 0
        for cone in KINDS:
            got = contains_arr(cone, pts, 1e-9)
            assert got.tolist() == [contains(cone, Point(*p), 1e-9) for p in pts]

    def test_translated_array_form(self, rng):
        base = np.array([0.2, -0.1, 0.3])
        pts = rng.uniform(-1, 1, (100, 3))
        got = contains_translated_arr(base, ConeSpec.full(1.5), pts)
        assert got.tolist() == [contains_translated(Point(*base), ConeSpec.full(1.5), Point(*p)) for p in pts]


small_tol = st.sampled_from([0.0, 1e-12, 1e-9, 1e-3])


class TestProperties:
    @given(triple, positive, small_tol)
    def test_full_matches_oracle(self, a, alpha, tol):
        assert contains(ConeSpec.full(alpha), Point(*a), tol) == q_in_full(a, alpha, tol)

    @given(triple, positive, small_tol)
    def test_flat_matches_oracle(self, a, alpha, tol):
        assert contains(ConeSpec.flat(alpha), Point(*a), tol) == q_in_flat(a, alpha, tol)

    @given(coord, coord, positive, positive, small_tol)
    def test_vertical_matches_oracle(self, x, z, beta, r, tol):
        p = (x, 0.0, z)
        assert contains(ConeSpec.vertical(beta, r), Point(*p), tol) == q_in_vertical(p, beta, r, tol)

    @given(triple, positive, st.floats(0.01, 100))
    def test_dilation_invariance(self, a, alpha, lam):
        p = Point(*a)
        q = dilate(lam, p)
        # stay away from the boundary, where rounding in the scaled coordinates decides
        for cone in (ConeSpec.full(alpha), ConeSpec.flat(alpha)):
            gap = min(abs(abs(p.y) - alpha * abs(p.x)), abs(abs(p.z) - alpha * p.x**2 / 2))
            assume(gap > 1e-9 * (1 + abs(p.x) + abs(p.y) + abs(p.z)) ** 2)
            assert contains(cone, p) == contains(cone, q)

    @given(triple, positive)
    def test_symmetry(self, a, alpha):
        p = Point(*a)
        for cone in (ConeSpec.full(alpha), ConeSpec.flat(alpha)):
            assert contains(cone, p) == contains(cone, -p)

    @given(triple, positive, positive, small_tol)
    def test_monotone_in_aperture(self, a, alpha, extra, tol):
        p = Point(*a)
        for make in (ConeSpec.full, ConeSpec.flat, lambda b: ConeSpec.truncated(b, 3.0), lambda b: ConeSpec.vertical(b, 3.0)):
            if contains(make(alpha), p, tol):
                assert contains(make(alpha + extra), p, tol)

    @given(coord, coord, positive)
    def test_x_zero_never_inside(self, y, z, alpha):
        for cone in (ConeSpec.full(alpha), ConeSpec.flat(alpha), ConeSpec.truncated(alpha, 1), ConeSpec.vertical(alpha, 1)):
            assert not contains(cone, Point(0.0, y, z))

    @given(st.floats(0.01, 10), st.floats(-0.999, 0.999), positive, st.floats(-1, 1))
    def test_half_flat_cone_survives_shear(self, x, v, alpha, k):
        # p in fC(alpha/2), |t| <= alpha/2  =>  shear(-t, p) in fC(alpha)
        p = Point(x, v * alpha / 2 * x, 0.0)
        t = k * alpha / 2
        assert contains(ConeSpec.flat(alpha), shear(-t, p))

    @given(st.floats(0.01, 0.99), st.floats(-0.99, 0.99), st.floats(-0.99, 0.99), positive)
    def test_truncated_cone_is_union_of_sheared_vertical_sets(self, xr, v, w, beta):
        r = 1.0
        x = xr * r
        p = Point(x, v * beta * x, w * beta * x * x / 2)
        assert contains(ConeSpec.truncated(beta, r), p)
        t = p.y / p.x
        assert abs(t) < beta
        assert contains(ConeSpec.vertical(beta, r), shear(-t, p), 0.0)

    @given(st.floats(-0.99, 0.99), st.floats(-0.99, 0.99), st.floats(-0.99, 0.99), positive)
    def test_sheared_vertical_set_lies_in_truncated_cone(self, xr, u, k, beta):
        assume(abs(xr) > 1e-3)
        q = Point(xr, 0.0, u * beta * xr * xr / 2)
        assert contains(ConeSpec.vertical(beta, 1.0), q)
        assert contains(ConeSpec.truncated(beta, 1.0), shear(k * beta, q))
