"""Plain-text polytopal mesh format.

2D::

    polymesh 2
    nv nc
    x y              (nv lines)
    k v0 ... v{k-1}  (nc lines, CCW, 0-based)

3D::

    polymesh 3
    nv nc
    x y z            (nv lines)
    nf               (per cell, followed by nf face lines)
    k v0 ... v{k-1}  (outward CCW)

``#`` starts a comment. Floats are written with 17 significant digits.
"""

from __future__ import annotations

from pathlib import Path

from .core import MeshError, PolytopalMesh


class MeshFormatError(MeshError):
    def __init__(self, lineno: int | None, message: str):
        self.lineno = lineno
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(where + message)


def write_mesh(mesh: PolytopalMesh, path) -> None:
    lines = [f"polymesh {mesh.dim}", f"{mesh.n_vertices} {mesh.n_cells}"]
    lines += [" ".join(f"{c:.17g}" for c in v) for v in mesh.vertices.tolist()]
    for cell in mesh.cells:
        if mesh.dim == 2:
            lines.append(" ".join(str(v) for v in [len(cell), *cell.tolist()]))
        else:
            lines.append(str(len(cell)))
            lines += [" ".join(str(v) for v in [len(f), *f.tolist()]) for f in cell]
    Path(path).write_text("\n".join(lines) + "\n")


def _tokens(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _ints(lineno: int, toks: list[str]) -> list[int]:
    try:
        return [int(t) for t in toks]
    except ValueError:
        raise MeshFormatError(lineno, f"expected integers, got {' '.join(toks)!r}") from None


def _loop(lineno: int, toks: list[str], nv: int) -> list[int]:
    vals = _ints(lineno, toks)
    k, ids = vals[0], vals[1:]
    if k < 3 or len(ids) != k:
        raise MeshFormatError(lineno, f"loop declares {k} vertices but lists {len(ids)} (need k >= 3)")
    for v in ids:
        if not 0 <= v < nv:
            raise MeshFormatError(lineno, f"vertex index {v} out of range [0, {nv})")
    if len(set(ids)) != k:
        raise MeshFormatError(lineno, "loop repeats a vertex")
    return ids


def read_mesh(path) -> PolytopalMesh:
    lines = _tokens(Path(path).read_text())

    def nxt(what: str):
        try:
            return next(lines)
        except StopIteration:
            raise MeshFormatError(None, f"unexpected end of file while reading {what}") from None

    lineno, toks = nxt("header")
    if len(toks) != 2 or toks[0] != "polymesh" or toks[1] not in ("2", "3"):
        raise MeshFormatError(lineno, "header must be 'polymesh 2' or 'polymesh 3'")
    dim = int(toks[1])
    lineno, toks = nxt("counts")
    counts = _ints(lineno, toks)
    if len(counts) != 2 or min(counts) < 1:
        raise MeshFormatError(lineno, "counts line must be 'nv nc' with positive integers")
    nv, nc = counts

    verts = []
    for _ in range(nv):
        lineno, toks = nxt("vertices")
        if len(toks) != dim:
            raise MeshFormatError(lineno, f"vertex needs {dim} coordinates, got {len(toks)}")
        try:
            verts.append([float(t) for t in toks])
        except ValueError:
            raise MeshFormatError(lineno, f"bad coordinate in {' '.join(toks)!r}") from None

    cells = []
    for c in range(nc):
        if dim == 2:
            lineno, toks = nxt(f"cell {c}")
            cells.append(_loop(lineno, toks, nv))
            continue
        lineno, toks = nxt(f"cell {c}")
        nf = _ints(lineno, toks)
        if len(nf) != 1 or nf[0] < 4:
            raise MeshFormatError(lineno, "3D cell must start with a face count >= 4")
        start = lineno
        faces = []
        for _ in range(nf[0]):
            lineno, toks = nxt(f"faces of cell {c}")
            faces.append(_loop(lineno, toks, nv))
        edges = {(f[i], f[(i + 1) % len(f)]) for f in faces for i in range(len(f))}
        if any((b, a) not in edges for a, b in edges):
            raise MeshFormatError(start, f"cell {c} is not closed")
        cells.append(faces)

    extra = next(lines, None)
    if extra is not None:
        raise MeshFormatError(extra[0], "trailing data after the last cell")
    try:
        return PolytopalMesh.from_cells(verts, cells)
    except MeshFormatError:
        raise
    except MeshError as exc:
        raise MeshFormatError(None, str(exc)) from exc
