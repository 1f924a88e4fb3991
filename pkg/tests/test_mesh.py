import json
import math

import numpy as np
import pytest

from curvedfem.errors import EmptyMesh, NonpositiveJacobian
from curvedfem.geometry import EdgeBlend
from curvedfem.mesh import (
    GEOMETRIES,
    MESH_FORMAT,
    Triangulation,
    check_conformity,
    disk_mesh,
    mesh_size,
    mesh_to_dict,
    normalize_geo,
    validate,
    write_mesh_json,
)
from curvedfem.analysis import geometric_errors


def polygon_area_error(n):
    return math.pi - 0.5 * n * math.sin(2 * math.pi / n)


def sampled_sagitta(n, samples):
    # |(1-s) a + s b|^2 = 1 - 2 s (1-s) (1 - cos(2 pi / n)); the sample closest to s = 1/2 is worst
    s = np.linspace(0.0, 1.0, samples)
    return float(np.max(1.0 - np.sqrt(1.0 - 2.0 * s * (1.0 - s) * (1.0 - math.cos(2 * math.pi / n)))))


@pytest.mark.parametrize("level", range(4))
def test_counts(level):
    R = 4 * 2**level
    tri = disk_mesh(level, "order1")
    assert len(tri) == 4 * R * R
    assert len(tri.vertices) == 1 + 2 * R * (R + 1)
    assert len(tri.boundary_edges) == 16 * 2**level
    assert len(tri.boundary_vertex_ids()) == 16 * 2**level


@pytest.mark.parametrize("level", range(4))
def test_straight_geometry_matches_polygon(level):
    n = 16 * 2**level
    ge = geometric_errors(disk_mesh(level, "order1"))
    assert ge.area_error == pytest.approx(polygon_area_error(n), rel=1e-12)
    assert ge.bdry_error == pytest.approx(sampled_sagitta(n, 64), rel=1e-10)


def test_level0_examples():
    ge = geometric_errors(disk_mesh(0, "order1"))
    assert ge.area_error == pytest.approx(8.0125e-2, abs=1e-4)
    assert ge.bdry_error == pytest.approx(1 - math.cos(math.pi / 16), abs=1e-4)
    assert 1 - math.cos(math.pi / 16) == pytest.approx(1.9215e-2, abs=1e-6)


@pytest.mark.parametrize("geo", GEOMETRIES)
@pytest.mark.parametrize("level", range(4))
def test_conformity_and_boundary_nodes(geo, level):
    tri = disk_mesh(level, geo)
    assert check_conformity(tri) == []
    bnd = tri.vertices[tri.boundary_vertex_ids()]
    assert np.abs(np.linalg.norm(bnd, axis=1) - 1.0).max() <= 1e-13
    for K in tri.elements:
        assert (K.curved_edge is not None) == K.is_curved
        if K.is_curved:
            assert np.abs(np.linalg.norm(tri.vertices[list(K.curved_edge)], axis=1) - 1.0).max() <= 1e-13


@pytest.mark.parametrize("level", range(1, 5))
def test_exact_arc_covers_disk(level):
    ge = geometric_errors(disk_mesh(level, "exact_arc"))
    assert ge.area_error <= 1e-9
    assert ge.bdry_error <= 1e-12


@pytest.mark.parametrize("geo", GEOMETRIES[:3])
def test_refinement_monotone(geo):
    errs = [geometric_errors(disk_mesh(level, geo)) for level in range(5)]
    for a, b in zip(errs, errs[1:]):
        assert b.area_error <= a.area_error
        assert b.bdry_error <= a.bdry_error


def test_mesh_size():
    tri = Triangulation.from_arrays([[0, 0], [1, 0], [0, 1]], [(0, 1, 2)])
    assert mesh_size(tri) == pytest.approx(math.sqrt(2.0))
    hs = [disk_mesh(level).h for level in range(5)]
    assert hs[0] == pytest.approx(0.4, rel=0.1)
    for a, b in zip(hs, hs[1:]):
        assert b / a == pytest.approx(0.5, abs=0.05)
    with pytest.raises(EmptyMesh):
        mesh_size(Triangulation(np.zeros((0, 2)), [], []))


@pytest.mark.parametrize("geo", GEOMETRIES)
def test_validate(geo):
    rep = validate(disk_mesh(1, geo))
    assert 0.0 < rep.gamma <= 10.0
    assert np.isfinite([rep.cpsi1, rep.cpsi2]).all()
    if geo == "order1":
        assert rep.cpsi2 == 0.0
        assert rep.n_curved == 0
    else:
        assert rep.n_curved == 32
        assert rep.min_det > 0.0
        assert rep.cpsi1 >= 2.0


def test_inverted_correction_rejected():
    a, b, c = np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([0.0, 0.0])
    # pushes the edge midpoint through the apex
    bad = EdgeBlend(a, b, c, [[-5.0, -5.0]])
    tri = Triangulation.from_arrays(np.array([c, a, b]), [(0, 1, 2)], corrections=[bad])
    with pytest.raises(NonpositiveJacobian) as info:
        validate(tri)
    assert info.value.element == 0


def test_geo_names():
    assert normalize_geo(2) == "order2"
    assert normalize_geo("exact") == "exact_arc"
    with pytest.raises(ValueError):
        normalize_geo("5")


def test_json_export(tmp_path):
    tri = disk_mesh(0, "exact_arc")
    path = tmp_path / "mesh.json"
    write_mesh_json(tri, path)
    doc = json.loads(path.read_text())
    assert doc == json.loads(json.dumps(mesh_to_dict(tri)))
    assert doc["version"] == MESH_FORMAT
    assert len(doc["vertices"]) == len(tri.vertices)
    assert sum("arc" in e for e in doc["elements"]) == 16
