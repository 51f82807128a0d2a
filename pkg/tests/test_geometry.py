import numpy as np
import pytest
from scipy import ndimage

from cellhom.errors import GeometryError
from cellhom.geometry import (CellGeometry, Circle, Ellipse, Polygon, clear_line, contains_material,
                              material_area, paper_cell, validate)


def strip(a, b):
    return Polygon(((a, 0.0), (b, 0.0), (b, 1.0), (a, 1.0)))


def test_contains_material_examples():
    g = paper_cell()
    assert contains_material(g, (1.0, 0.5)) is False
    assert contains_material(g, (0.25, 0.5)) is True
    assert contains_material(g, (1.0, 0.75)) is True  # boundary counts as material
    np.testing.assert_array_equal(contains_material(g, [[1.0, 0.5], [0.1, 0.1]]), [False, True])


def test_material_area_examples():
    assert material_area(paper_cell()) == pytest.approx(2 - np.pi / 16)
    assert material_area(paper_cell()) == pytest.approx(1.803650, abs=5e-7)
    assert material_area(CellGeometry(1, 1)) == 1.0
    two = CellGeometry(1, 1, (Circle((0.25, 0.25), 0.1), Circle((0.75, 0.75), 0.1)))
    assert material_area(two) == pytest.approx(1 - 0.02 * np.pi)


def test_material_area_ellipse_and_polygon():
    g = CellGeometry(1, 1, (Ellipse((0.3, 0.5), (0.2, 0.1), 0.4), Polygon(((0.6, 0.2), (0.9, 0.2), (0.75, 0.6)))))
    assert material_area(g) == pytest.approx(1 - np.pi * 0.02 - 0.5 * 0.3 * 0.4)


def test_overlapping_holes_rejected():
    g = CellGeometry(1, 1, (Circle((0.4, 0.5), 0.2), Circle((0.6, 0.5), 0.2)))
    with pytest.raises(GeometryError):
        material_area(g)
    assert any("overlap" in v for v in validate(g).violations)


def test_monte_carlo_area():
    g = CellGeometry(2, 1, (Circle((1.0, 0.5), 0.25), Ellipse((0.4, 0.5), (0.15, 0.3), 0.3)))
    rng = np.random.default_rng(7)
    n = 10**6
    pts = rng.uniform((0, 0), (g.l1, g.l2), size=(n, 2))
    frac = contains_material(g, pts).mean()
    se = g.cell_area * np.sqrt(frac * (1 - frac) / n)
    assert abs(g.cell_area * frac - material_area(g)) < 3 * se


def test_validate_paper_cell():
    rep = validate(paper_cell())
    assert rep.valid and rep.violations == []
    rep.raise_if_invalid()


def test_clearance_violation():
    rep = validate(CellGeometry(1, 1, (Circle((0.5, 0.5), 0.51),)))
    assert any("clearance" in v for v in rep.violations)
    with pytest.raises(GeometryError):
        rep.raise_if_invalid()


@pytest.mark.parametrize("dx", [0.0, 0.2, 0.5, 0.7])
def test_translated_hole_touching_boundary_fails(dx):
    g = CellGeometry(2, 1, (Circle((0.75 + dx, 0.25), 0.25),))
    assert not validate(g).valid


def test_disconnected_material():
    # two full-height strips with zero clearance cut the cell in three pieces,
    # and the outer two merge across the periodic seam
    g = CellGeometry(1, 1, (strip(0.2, 0.3), strip(0.6, 0.7)), clearance=0.0)
    rep = validate(g)
    mask = np.ones((64, 64), dtype=bool)
    mask[:, 13:19] = mask[:, 39:45] = False
    assert rep.n_components == ndimage.label(mask)[1] == 3
    assert rep.n_periodic_components == 2
    assert not rep.valid


def test_clear_line_examples():
    g = paper_cell()
    c1 = clear_line(g, 1)
    assert abs(c1 - 0.5) > 0.25 + g.clearance
    assert clear_line(g, 1, prefer=0.125) == 0.125
    c2 = clear_line(g, 2)
    assert not 0.75 - g.clearance <= c2 <= 1.25 + g.clearance
    assert clear_line(g, 2, prefer=0.25) == 0.25
    # a blocked preference falls back to the widest band
    assert clear_line(g, 2, prefer=1.0) == c2


def test_clear_line_blocked():
    with pytest.raises(GeometryError, match="polyline"):
        clear_line(CellGeometry(1, 1, (Circle((0.5, 0.5), 0.49),)), 1)
    with pytest.raises(ValueError):
        clear_line(paper_cell(), 3)


@pytest.mark.parametrize("make", [lambda: Circle((0, 0), 0.0), lambda: Ellipse((0, 0), (1.0, -1.0)),
                                  lambda: Polygon(((0, 0), (1, 0))),
                                  lambda: Polygon(((0, 0), (0, 1), (1, 0))),
                                  lambda: Polygon(((0, 0), (1, 1), (1, 0), (0, 1))),
                                  lambda: CellGeometry(0, 1)])
def test_invalid_shapes(make):
    with pytest.raises(GeometryError):
        make()
