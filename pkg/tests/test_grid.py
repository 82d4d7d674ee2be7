import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from penshape import DiskRegion, Field, Grid, RectRegion, unit_square


def test_spacing_and_coordinates():
    g = unit_square(11)
    assert g.h == pytest.approx(0.1, abs=1e-15)
    assert g.x[0] == 0.0 and g.x[-1] == pytest.approx(1.0)
    assert g.X[3, 7] == pytest.approx(0.3) and g.Y[3, 7] == pytest.approx(0.7)


def test_boundary_and_interior_partition():
    g = unit_square(9)
    assert g.boundary.sum() == 4 * 8
    assert g.interior.sum() == 7 * 7
    assert not np.any(g.boundary & g.interior)


def test_e_nodes_and_cells_of_aligned_square():
    g = unit_square(11)
    # nodes 0.4, 0.5, 0.6 in each direction; cells centred at 0.45 and 0.55
    assert g.e_nodes.sum() == 9
    assert g.e_cells.sum() == 4
    assert g.e_boundary_gap == pytest.approx(0.4)


def test_trapezoid_integral_frozen():
    g = unit_square(11)
    # trapezoid rule: sum of x^2 gives 1/3 + h^2/6 = 0.335, the y factor integrates exactly
    assert g.integrate(g.X**2 * g.Y) == pytest.approx(0.335 * 0.5, abs=1e-14)


def test_region_integrals():
    g = unit_square(11)
    assert g.integrate(1.0) == pytest.approx(1.0, abs=1e-14)
    assert g.integrate(1.0, "E") == pytest.approx(0.04, abs=1e-14)
    assert g.integrate(1.0, "D\\E") == pytest.approx(0.96, abs=1e-14)


def test_node_mask_weights_restrict_trapezoid():
    g = unit_square(11)
    mask = g.X <= 0.5 + 1e-12
    # columns 0..5: half weights on column 0 and full weights on 1..5, each column sums to h
    assert g.integrate(1.0, mask) == pytest.approx(0.5 * 0.1 + 5 * 0.1, abs=1e-14)


def test_weights_reject_bad_region():
    g = unit_square(11)
    with pytest.raises(ValueError):
        g.weights("nowhere")
    with pytest.raises(ValueError):
        g.weights(np.ones((3, 3), dtype=bool))


def test_h1_seminorm_of_linear_function_is_exact():
    g = unit_square(11)
    u = (g.X + 2 * g.Y).ravel()
    assert u @ g.h1_seminorm_matrix() @ u == pytest.approx(5.0, rel=1e-12)


def test_h2_seminorm_of_quadratics():
    g = unit_square(11)
    K = g.h2_seminorm_matrix()
    xx = (g.X**2).ravel()
    xy = (g.X * g.Y).ravel()
    lin = (g.X - 3 * g.Y).ravel()
    # u_xx = 2 is sampled on the nx - 2 inner columns, which carry 1 - h of the area
    assert xx @ K @ xx == pytest.approx(4.0 * (1 - g.h), rel=1e-10)
    assert xy @ K @ xy == pytest.approx(2.0, rel=1e-10)
    assert abs(lin @ K @ lin) < 1e-9


def test_w_norm_sees_only_mass_at_deep_e_nodes():
    g = unit_square(21)
    u = np.sin(2 * g.X) * g.Y
    bumped = u.copy()
    # node (10, 10) is two nodes inside E: no outside stencil reaches it
    bumped[10, 10] += 0.7
    dw = g.norm(bumped, "W") ** 2 - g.norm(u, "W") ** 2
    dl = g.norm(bumped) ** 2 - g.norm(u) ** 2
    assert dw == pytest.approx(dl, rel=1e-10)
    edge = u.copy()
    edge[8, 10] += 0.7  # on the edge of E: the outside H2 part sees it
    assert g.norm(edge, "W") ** 2 - g.norm(u, "W") ** 2 > 10 * dl


def test_w_operator_is_l2_riesz_map(rng):
    g = unit_square(17)
    u = rng.normal(size=g.shape)
    v = rng.normal(size=g.shape)
    assert g.inner(g.w_operator(u), v) == pytest.approx(g.inner(u, v, "W"), rel=1e-10)


def test_gram_kinds_and_errors():
    g = unit_square(9)
    for kind in ("L2_D", "L2_E", "H1_D", "W"):
        assert g.gram(kind).shape == (81, 81)
    with pytest.raises(ValueError):
        g.gram("H3")


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(nx=4, ny=4),
        dict(nx=11, ny=21),
        dict(nx=11, ny=11, e_region=RectRegion(0.0, 0.2, 0.4, 0.6)),
        dict(nx=11, ny=11, e_region=RectRegion(0.41, 0.49, 0.41, 0.49)),
    ],
)
def test_invalid_grids(kwargs):
    with pytest.raises(ValueError):
        Grid(**kwargs)


def test_disk_observation_region():
    g = Grid(41, 41, e_region=DiskRegion(0.5, 0.5, 0.1))
    r = np.hypot(g.X - 0.5, g.Y - 0.5)
    assert np.array_equal(g.e_nodes, r <= 0.1 + 1e-12)


def test_grid_equality_and_hash():
    assert unit_square(9) == unit_square(9)
    assert hash(unit_square(9)) == hash(unit_square(9))
    assert unit_square(9) != unit_square(11)


def test_field_checks():
    g = unit_square(9)
    f = g.field(np.ones(g.shape))
    with pytest.raises(ValueError):
        f.values[0, 0] = 2.0
    with pytest.raises(ValueError):
        Field(g, np.ones((3, 3)))
    with pytest.raises(ValueError):
        Field(g, np.full(g.shape, np.nan))
    with pytest.raises(ValueError):
        unit_square(11).values_of(f)


def test_central_gradient_exact_for_quadratics():
    g = unit_square(9)
    gx, gy = g.central_gradient(g.X**2 + g.X * g.Y)
    assert np.allclose(gx, 2 * g.X + g.Y, atol=1e-12)
    assert np.allclose(gy, g.X, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(6, 30), st.floats(-3, 3), st.floats(-3, 3))
def test_integral_linearity(n, a, b):
    g = unit_square(n)
    u = np.sin(g.X) * g.Y
    v = np.cos(g.Y)
    assert g.integrate(a * u + b * v) == pytest.approx(a * g.integrate(u) + b * g.integrate(v), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(-5, 5), st.sampled_from(["L2_D", "L2_E", "H1_D", "W"]))
def test_norm_homogeneity(c, kind):
    g = unit_square(13)
    u = np.sin(3 * g.X) + g.Y**2
    assert g.norm(c * u, kind) == pytest.approx(abs(c) * g.norm(u, kind), rel=1e-10, abs=1e-12)
