import numpy as np
import pytest

from penshape import unit_square


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid33():
    return unit_square(33)


@pytest.fixture(scope="session")
def grid64():
    return unit_square(64)


def smooth_field(grid, rng, modes=3, decay=1.0):
    """Random sine series vanishing on the boundary of the unit square."""
    v = np.zeros(grid.shape)
    for a in range(1, modes + 1):
        for b in range(1, modes + 1):
            v += rng.normal() * np.sin(a * np.pi * grid.X) * np.sin(b * np.pi * grid.Y) / (a * b) ** decay
    return v


def relaxed_control(grid, rng, scale=1.0):
    g = scale * smooth_field(grid, rng)
    g[grid.e_nodes] = np.minimum(g[grid.e_nodes], 0.0)
    return g


def disk(grid, r=0.3, cx=0.5, cy=0.5):
    return (grid.X - cx) ** 2 + (grid.Y - cy) ** 2 - r * r


def continuous_relaxed_control(grid, rng, norm_range=(1.0, 3.0), ramp=0.15):
    """Random smooth field pushed to ``<= 0`` on E by a smooth cutoff, so it has no jump at E."""
    from scipy import ndimage

    from penshape.shapes import smoothstep

    s = smooth_field(grid, rng)
    s *= rng.uniform(*norm_range) / grid.norm(s)
    dist = ndimage.distance_transform_edt(~grid.e_nodes) * grid.h
    cutoff = 1.0 - smoothstep(dist / ramp)
    return s - cutoff * max(float(s[grid.e_nodes].max()), 0.0)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one summary line per acceptance criterion."""

    def record(number, title, passed, detail, seconds):
        line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail} ({seconds:.2f}s)"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
