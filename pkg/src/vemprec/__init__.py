"""Lowest-order virtual elements on polytopal meshes with auxiliary-space
(P1 finite element) preconditioners."""

__version__ = "0.1.0"

from .coefficients import CoefficientField, constant_field, inclusion_field_3d, random_exponent_field
from .fem import assemble_p1
from .linalg import NotSPDError, PcgReport, cholesky_factorize, pcg
from .mesh import (
    MeshError,
    PolytopalMesh,
    SimplicialMesh,
    generate_structured_hex_mesh,
    generate_structured_quad_mesh,
    generate_voronoi_mesh,
    mesh_quality,
    read_mesh,
    triangulate,
    write_mesh,
)
from .preconditioners import AuxPreconditioner, PreconditionerFactory, Smoother, Transfer
from .vem import AssembledSystem, DofMap, assemble, local_stiffness

__all__ = [
    "AssembledSystem",
    "AuxPreconditioner",
    "CoefficientField",
    "DofMap",
    "MeshError",
    "NotSPDError",
    "PcgReport",
    "PolytopalMesh",
    "PreconditionerFactory",
    "SimplicialMesh",
    "Smoother",
    "Transfer",
    "assemble",
    "assemble_p1",
    "cholesky_factorize",
    "constant_field",
    "generate_structured_hex_mesh",
    "generate_structured_quad_mesh",
    "generate_voronoi_mesh",
    "inclusion_field_3d",
    "local_stiffness",
    "mesh_quality",
    "pcg",
    "random_exponent_field",
    "read_mesh",
    "triangulate",
    "write_mesh",
]
