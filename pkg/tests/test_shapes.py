import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from penshape import unit_square
from penshape.shapes import (
    area_via_heaviside,
    boundary_curves,
    count_components,
    extract_shape,
    reparametrize,
    shape_distance,
    sign_discrepancy,
    symmetric_difference,
    validate_fs,
)

from conftest import disk


def two_blobs(grid):
    """Negative around E and in a separate small disk near a corner."""
    return np.minimum(disk(grid, 0.2), disk(grid, 0.08, 0.15, 0.15))


def test_component_keeps_only_the_e_blob():
    g = unit_square(65)
    field = two_blobs(g)
    m = extract_shape(g, field)
    assert count_components(m.inside) == 2
    assert count_components(m.component) == 1
    # oracle: nodes strictly inside the central disk
    central = (disk(g, 0.2) < 0) & g.interior
    assert np.array_equal(m.component, central)
    assert m.area == pytest.approx(central.sum() * g.h**2, abs=1e-15)
    assert m.contains_e


def test_boundary_nodes_lie_on_component_edge():
    g = unit_square(33)
    m = extract_shape(g, disk(g))
    b = m.boundary_mask
    assert b.any() and np.all(m.component[b])
    assert not np.any(b & m.core(2))


def test_extract_shape_requires_e():
    g = unit_square(33)
    with pytest.raises(ValueError, match="E not inside shape"):
        extract_shape(g, disk(g, 0.1, 0.2, 0.2))


def test_zero_level_is_outside():
    g = unit_square(11)
    field = disk(g)
    field[g.e_nodes] = 0.0
    field[5, 5] = -1.0
    m = extract_shape(g, field)
    assert m.component[5, 5] and not m.component[4, 5]


def test_validate_accepts_disk_and_reports_margins():
    g = unit_square(33)
    r = validate_fs(g, disk(g))
    assert r.accepted
    assert r.max_on_E < 0 and r.min_on_boundary > 0
    assert any(line.startswith("accepted=True") for line in r.as_lines())


def test_validate_rejections():
    g = unit_square(33)
    assert not validate_fs(g, -disk(g)).neg_on_E
    lowered = disk(g) - 1.0
    assert not validate_fs(g, lowered).positive_on_boundary
    flat = np.maximum(disk(g), 0.0) - np.where(g.e_nodes, 0.01, 0.0)
    assert not validate_fs(g, flat).nondegenerate
    with pytest.raises(ValueError):
        validate_fs(g, disk(g), tau=0.0)


def test_area_via_heaviside_of_disk():
    g = unit_square(129)
    assert area_via_heaviside(g, disk(g)) == pytest.approx(np.pi * 0.09, rel=0.01)


def test_sign_discrepancy_counts_strip_exactly():
    g = unit_square(101)
    h = g.X - 0.37
    for n in (1, 4, 16, 64):
        hn = h - 1.0 / n
        in_strip = (g.x - 0.37 > 0) & (g.x - 0.37 - 1.0 / n <= 0)
        # a column carries total weight h, the column on the boundary x = 1 only h/2
        expected = np.sum(in_strip[:-1]) * g.h + in_strip[-1] * g.h / 2
        assert sign_discrepancy(g, h, hn) == pytest.approx(expected, abs=1e-12)


def test_shape_distance_and_symmetric_difference():
    g = unit_square(65)
    a, b = disk(g, 0.3), disk(g, 0.2)
    d1, d2 = shape_distance(g, a, b)
    assert d2 == 0.0 and d1 > 0
    assert shape_distance(g, b, a) == (d2, d1)
    sd = symmetric_difference(g, a < 0, b < 0)
    assert sd == pytest.approx(d1, abs=1e-15)


def test_reparametrize_two_blobs():
    g = unit_square(65)
    field = two_blobs(g)
    m = extract_shape(g, field)
    rep = reparametrize(g, field, m)
    assert np.all(rep >= field)
    assert np.array_equal(rep[m.component], field[m.component])
    assert np.array_equal(rep < 0, m.component)
    assert extract_shape(g, rep).same_as(m)
    assert validate_fs(g, rep).accepted


def test_reparametrize_requires_negative_values():
    g = unit_square(17)
    m = extract_shape(g, disk(g))
    with pytest.raises(ValueError):
        reparametrize(g, np.ones(g.shape), m)


def test_boundary_curve_radius():
    g = unit_square(65)
    curves = boundary_curves(g, disk(g, 0.3))
    assert len(curves) == 1
    r = np.hypot(curves[0][:, 0] - 0.5, curves[0][:, 1] - 0.5)
    assert np.allclose(r, 0.3, atol=g.h)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 100.0))
def test_positive_scaling_keeps_shape(c):
    g = unit_square(33)
    field = two_blobs(g)
    assert extract_shape(g, c * field).same_as(extract_shape(g, field))
