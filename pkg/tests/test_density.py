import numpy as np
import pytest

from penshape import unit_square
from penshape.density import (
    Mollifier,
    ShiftError,
    boundary_lift,
    choose_shift,
    clamp_and_mollify,
    density_sequence,
    observation_neighborhood,
    pipeline_step,
    project_to_fs,
    sard_shift,
    scales_for,
)
from penshape.shapes import extract_shape, validate_fs

from conftest import continuous_relaxed_control, disk, relaxed_control


@pytest.mark.parametrize("m,n", [(4, 65), (8, 129), (16, 64), (3, 20)])
def test_mollifier_mass_and_support(m, n):
    h = 1.0 / (n - 1)
    moll = Mollifier(m, h)
    assert np.all(moll.kernel >= 0)
    assert moll.density().sum() * h * h == pytest.approx(1.0, abs=1e-10)
    k = np.arange(-moll.half_width, moll.half_width + 1)
    assert np.all(np.abs(k * h) <= 1.0 / m + 1e-12)


def test_mollifier_preserves_constants_in_the_interior():
    g = unit_square(65)
    m = 8
    out = clamp_and_mollify(g, -np.ones(g.shape), m)
    away = g.boundary_distance > 1.0 / m + 1e-12
    assert np.allclose(out[away], -1.0, atol=1e-14)


def test_neighbourhood_is_max_norm_ball():
    g = unit_square(41)
    nb = observation_neighborhood(g, 8)
    dx = np.maximum(np.maximum(0.4 - g.X, g.X - 0.6), 0.0)
    dy = np.maximum(np.maximum(0.4 - g.Y, g.Y - 0.6), 0.0)
    assert np.array_equal(nb, np.maximum(dx, dy) <= 1.0 / 8 + 1e-12)


def test_clamp_keeps_e_nonpositive_with_positive_halo():
    g = unit_square(65)
    field = np.where(g.e_nodes, 0.0, 5.0)
    out = clamp_and_mollify(g, field, 8)
    assert np.all(out[g.e_nodes] <= 0.0)


def test_clamp_and_mollify_converges(rng):
    g = unit_square(129)
    field = -np.abs(relaxed_control(g, rng)) - 0.2
    errs = [g.norm(clamp_and_mollify(g, field, m) - field) for m in (4, 8, 16, 32)]
    assert all(b <= 1.1 * a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < errs[0] / 3


def test_scale_and_sign_errors():
    g = unit_square(65)
    with pytest.raises(ValueError):
        clamp_and_mollify(g, -np.ones(g.shape), 2)
    with pytest.raises(ValueError):
        boundary_lift(g, -np.ones(g.shape), 2)
    with pytest.raises(ValueError):
        clamp_and_mollify(g, np.ones(g.shape), 8)


def test_boundary_lift_values():
    g = unit_square(65)
    m = 8
    out = boundary_lift(g, -np.ones(g.shape), m)
    # collar height on the boundary is 2 + 1/m
    assert np.allclose(out[g.boundary], 1.0 + 1.0 / m)
    assert np.all(out[g.e_nodes] == -1.0)
    lifted = boundary_lift(g, disk(g) + 1.0, m)
    assert np.allclose(lifted[g.boundary] - (disk(g) + 1.0)[g.boundary], 1.0 / m)


def test_boundary_lift_error_shrinks():
    g = unit_square(129)
    base = -np.ones(g.shape)
    errs = [g.norm(boundary_lift(g, base, m) - base) for m in (4, 8, 16, 32)]
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_sard_shift_on_radial_field():
    g = unit_square(129)
    field = disk(g)
    m = 8
    delta = choose_shift(g, field, m)
    out = sard_shift(g, field, m, delta=delta)
    assert 0 < delta < 1.0 / m
    assert validate_fs(g, out).accepted
    assert np.all(out[g.e_nodes] < 0)
    assert np.max(np.abs(out - field)) <= delta + 1.0 / m + 1e-14
    # the shape becomes {field < delta}: a disk of squared radius r^2 + delta
    shape = extract_shape(g, out)
    oracle = (field < delta) & g.interior
    assert np.array_equal(shape.component, oracle)
    assert shape.area == pytest.approx(np.pi * (0.09 + delta), rel=0.02)


def test_sard_shift_respects_previous_delta():
    g = unit_square(65)
    field = disk(g)
    d1 = choose_shift(g, field, 8)
    d2 = choose_shift(g, field, 16, delta_prev=d1 / 3)
    assert d2 < d1 / 3


def test_sard_shift_reports_failure():
    g = unit_square(33)
    field = np.full(g.shape, 0.02)
    field[g.e_nodes] = -0.05
    # a steep boundary collar raises the gradient threshold above every
    # admissible shift, so the flat plateau is critical for all trials
    field[g.boundary] = 1e6
    with pytest.raises(ShiftError) as exc:
        choose_shift(g, field, 8, retries=5)
    assert exc.value.report["critical_nodes"] > 0


def test_sard_shift_needs_positive_boundary():
    g = unit_square(33)
    with pytest.raises(ValueError):
        choose_shift(g, -np.ones(g.shape), 8)


def test_pipeline_stages_and_convergence(rng):
    g = unit_square(129)
    field = continuous_relaxed_control(g, rng)
    steps = density_sequence(g, field, [4, 8, 16, 32], rng)
    errs = [s.error for s in steps]
    for s in steps:
        assert s.report.accepted
    assert all(b <= a for a, b in zip(errs, errs[1:]))
    for a, b in zip(steps, steps[1:]):
        assert b.error <= a.error + 2 * a.delta
        assert b.delta < a.delta


def test_pipeline_near_idempotent(rng):
    g = unit_square(97)
    field = continuous_relaxed_control(g, rng)
    for m in (8, 16):
        first = pipeline_step(g, field, m)
        second = pipeline_step(g, first.g, m)
        assert abs(g.norm(second.g) - g.norm(first.g)) <= 2 * (first.delta + 1.0 / m)


def test_project_to_fs_meets_relative_target(rng):
    g = unit_square(64)
    field = continuous_relaxed_control(g, rng)
    target = 0.1 * g.norm(field)
    out, report, err = project_to_fs(g, field, target, rng)
    assert report.accepted and err <= target
    assert err == pytest.approx(g.norm(out - field), rel=1e-12)


def test_project_to_fs_strict_sign_on_e():
    g = unit_square(64)
    field = np.where(g.e_nodes, 0.0, 1.0)
    out, report, _ = project_to_fs(g, field, 1e-3)
    assert report.accepted
    assert np.all(out[g.e_nodes] < 0)


def test_project_to_fs_returns_admissible_input_unchanged():
    g = unit_square(64)
    out, report, err = project_to_fs(g, disk(g), 1e-6)
    assert err == 0.0 and report.accepted
    assert np.array_equal(out, disk(g))


def test_scales_for_grid():
    assert scales_for(unit_square(64)) == [4, 8, 16, 32]
    assert scales_for(unit_square(129)) == [4, 8, 16, 32, 64, 128]
