import numpy as np
import pytest

from penshape import unit_square
from penshape.fieldio import read_field_csv, write_field_csv, write_vtk


def test_csv_round_trip_is_lossless(tmp_path, rng):
    g = unit_square(17)
    v = rng.normal(size=g.shape) * 10.0 ** rng.integers(-300, 300, size=g.shape)
    p = write_field_csv(tmp_path / "v.csv", g, v)
    assert np.array_equal(read_field_csv(p, g), v)
    lines = p.read_text().splitlines()
    assert lines[0] == "i,j,x,y,value"
    assert lines[1].startswith("0,0,0.0,0.0,")
    assert lines[2].startswith("0,1,")


def test_csv_rejects_wrong_grid_and_missing_nodes(tmp_path):
    g = unit_square(9)
    p = write_field_csv(tmp_path / "v.csv", g, np.ones(g.shape))
    with pytest.raises(ValueError):
        read_field_csv(p, unit_square(11))
    text = p.read_text().splitlines()
    (tmp_path / "short.csv").write_text("\n".join(text[:-1]) + "\n")
    with pytest.raises(ValueError):
        read_field_csv(tmp_path / "short.csv", g)
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_field_csv(tmp_path / "bad.csv", g)
    (tmp_path / "nan.csv").write_text("\n".join(text[:-1] + [text[-1].rsplit(",", 1)[0] + ",nan"]) + "\n")
    with pytest.raises(ValueError):
        read_field_csv(tmp_path / "nan.csv", g)


def test_vtk_layout(tmp_path):
    g = unit_square(5)
    v = g.X + 10 * g.Y
    p = write_vtk(tmp_path / "f.vtk", g, {"v": v, "w": np.zeros(g.shape)})
    lines = p.read_text().splitlines()
    assert "DIMENSIONS 5 5 1" in lines
    assert "POINT_DATA 25" in lines
    start = lines.index("SCALARS v double 1") + 2
    data = np.array([float(t) for t in lines[start:start + 25]])
    # x varies fastest
    assert np.array_equal(data, v.T.ravel())
    assert "SCALARS w double 1" in lines
