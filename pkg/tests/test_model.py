import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyncal.errors import DegenerateDesign, InsufficientReferences, InvalidCovariance
from dyncal.model import (
    FilterState,
    build_design,
    center_scale,
    rescale_value,
    scale_value,
)


class TestBuildDesign:
    def test_paper_three_point_scheme(self):
        d = build_design([20, 90, 100])
        assert d.matrix.shape == (3, 3)
        np.testing.assert_allclose(d.matrix[0], [1, 20, 400])
        np.testing.assert_allclose(d.matrix[2], [1, 100, 10000])

    def test_trivial_two_point(self):
        d = build_design([0, 1])
        np.testing.assert_array_equal(d.matrix, [[1, 0, 0], [1, 1, 1]])

    def test_five_point_scheme(self):
        d = build_design([20, 40, 60, 90, 100])
        assert d.matrix.shape == (5, 3)
        assert d.d == 3

    def test_duplicates_rejected(self):
        with pytest.raises(DegenerateDesign):
            build_design([5, 5, 10])

    def test_too_few_rejected(self):
        with pytest.raises(InsufficientReferences):
            build_design([7])


class TestCenterScale:
    def test_already_scaled_fixed_point(self):
        d = build_design([-1.0, 1.0])
        scaled, tr = center_scale(d)
        np.testing.assert_allclose(scaled.refs, [-1, 1], atol=1e-15)
        assert tr.center == 0.0 and tr.scale == 1.0

    def test_moment_constraints(self):
        scaled, tr = center_scale(build_design([20, 90, 100]))
        assert abs(scaled.refs.sum()) < 1e-12
        assert abs(np.mean(scaled.refs ** 2) - 1.0) < 1e-12
        assert tr.x_bar == pytest.approx(0.0, abs=1e-12)
        assert tr.x2_bar == pytest.approx(1.0, abs=1e-12)

    def test_round_trip(self):
        refs = np.array([20.0, 90.0, 100.0])
        scaled, tr = center_scale(build_design(refs))
        back = rescale_value(scaled.refs, tr)
        np.testing.assert_allclose(back, refs, atol=1e-12)

    def test_rescale_of_scaled_ninety(self):
        scaled, tr = center_scale(build_design([20, 90, 100]))
        assert rescale_value(scale_value(90.0, tr), tr) == pytest.approx(90.0, abs=1e-12)

    def test_identity_transform(self):
        _, tr = center_scale(build_design([-1.0, 1.0]))
        assert rescale_value(3.25, tr) == 3.25


@given(st.lists(st.floats(min_value=-1e4, max_value=1e4,
                          allow_nan=False, allow_infinity=False),
                min_size=3, max_size=8, unique=True))
@settings(max_examples=200, deadline=None)
def test_scaling_round_trip_property(refs):
    refs = sorted(refs)
    if min(np.diff(refs)) < 1e-6 * max(1.0, max(abs(r) for r in refs)):
        return  # nearly-duplicate points: scaling is ill-posed by construction
    scaled, tr = center_scale(build_design(refs))
    back = rescale_value(scaled.refs, tr)
    np.testing.assert_allclose(back, refs, rtol=1e-12, atol=1e-9)
    assert abs(scaled.refs.sum()) < 1e-10
    assert abs(np.mean(scaled.refs ** 2) - 1.0) < 1e-10


class TestFilterState:
    def test_valid(self):
        s = FilterState(m=np.zeros(3), C=np.eye(3), t=0)
        assert s.t == 0

    def test_asymmetric_rejected(self):
        C = np.eye(3)
        C[0, 1] = 0.5
        with pytest.raises(InvalidCovariance):
            FilterState(m=np.zeros(3), C=C)

    def test_negative_eigenvalue_rejected(self):
        C = np.diag([1.0, -0.5, 1.0])
        with pytest.raises(InvalidCovariance):
            FilterState(m=np.zeros(3), C=C)
