from .core import (
    MeshError,
    MeshQualityReport,
    PolytopalMesh,
    SimplicialMesh,
    mesh_quality,
)
from .io import MeshFormatError, read_mesh, write_mesh
from .structured import generate_structured_hex_mesh, generate_structured_quad_mesh
from .triangulate import triangulate
from .voronoi import generate_voronoi_mesh

__all__ = [
    "MeshError",
    "MeshFormatError",
    "MeshQualityReport",
    "PolytopalMesh",
    "SimplicialMesh",
    "generate_structured_hex_mesh",
    "generate_structured_quad_mesh",
    "generate_voronoi_mesh",
    "mesh_quality",
    "read_mesh",
    "triangulate",
    "write_mesh",
]
