"""Structured quadratic (P2) triangular meshes on tensor-product grids.

Cells of a (possibly graded) tensor grid are split along the v00-v11
diagonal into two triangles; P2 nodes are the cell vertices plus one
midpoint per horizontal, vertical, and diagonal edge, all numbered
arithmetically so meshing is deterministic and fully vectorized.  For
periodic-in-x problems the right-edge vertex and vertical-edge columns alias
the left edge, which merges the paired rows of the assembled operators.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import MeshTooLarge
from .domain import DomainSpec

# 6-point degree-4 Dunavant rule in barycentric coordinates
_QW = np.array([0.111690794839005, 0.111690794839005, 0.111690794839005,
                0.054975871827661, 0.054975871827661, 0.054975871827661])
_QA = 0.445948490915965
_QB = 0.091576213509771
_QP = np.array([
    [1 - 2 * _QA, _QA, _QA],
    [_QA, 1 - 2 * _QA, _QA],
    [_QA, _QA, 1 - 2 * _QA],
    [1 - 2 * _QB, _QB, _QB],
    [_QB, 1 - 2 * _QB, _QB],
    [_QB, _QB, 1 - 2 * _QB],
])


def p2_basis(bary):
    """P2 shape functions at barycentric points, ordered [corners, mAB, mBC, mCA]."""
    l1, l2, l3 = bary[..., 0], bary[..., 1], bary[..., 2]
    return np.stack([
        l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), l3 * (2 * l3 - 1),
        4 * l1 * l2, 4 * l2 * l3, 4 * l3 * l1,
    ], axis=-1)


def p2_basis_grad(bary):
    """Gradients w.r.t. (l2, l3) treating l1 = 1 - l2 - l3, shape (..., 6, 2)."""
    l1, l2, l3 = bary[..., 0], bary[..., 1], bary[..., 2]
    z = np.zeros_like(l1)
    d_dl2 = np.stack([-(4 * l1 - 1), 4 * l2 - 1, z, 4 * (l1 - l2), 4 * l3, -4 * l3], axis=-1)
    d_dl3 = np.stack([-(4 * l1 - 1), z, 4 * l3 - 1, -4 * l2, 4 * l2, 4 * (l1 - l3)], axis=-1)
    return np.stack([d_dl2, d_dl3], axis=-1)


def grade_lines(extent, target_h, refine_intervals=()):
    """Monotone grid lines with base spacing <= target_h, halving every cell
    that intersects one of the refine intervals."""
    n = max(2, int(np.ceil(extent / target_h)))
    lines = np.linspace(0.0, extent, n + 1)
    if not refine_intervals:
        return lines
    out = [lines[0]]
    for a, b in zip(lines[:-1], lines[1:]):
        hit = any(not (b <= lo or a >= hi) for lo, hi in refine_intervals)
        if hit:
            out.append(0.5 * (a + b))
        out.append(b)
    return np.array(out)


@dataclass
class Mesh2D:
    xs: np.ndarray              # tensor grid lines, x
    ys: np.ndarray
    periodic_x: bool
    node_xy: np.ndarray         # (n_nodes, 2)
    triangles: np.ndarray       # (n_tri, 6) P2 dof ids
    tri_xy: np.ndarray          # (n_tri, 3, 2) corner coordinates (unwrapped)
    cell_of_tri: np.ndarray = field(default=None)   # (n_tri,) -> flat cell id

    @property
    def n_nodes(self) -> int:
        return self.node_xy.shape[0]

    @property
    def n_tri(self) -> int:
        return self.triangles.shape[0]

    @property
    def element_sizes(self):
        return np.diff(self.xs), np.diff(self.ys)

    # ---------------------------------------------------------- evaluation

    def interpolate(self, values, x, y):
        """Evaluate a P2 nodal field at arbitrary points (quadratic exact)."""
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        nx = len(self.xs) - 1
        i = np.clip(np.searchsorted(self.xs, x, side="right") - 1, 0, nx - 1)
        j = np.clip(np.searchsorted(self.ys, y, side="right") - 1, 0, len(self.ys) - 2)
        x0, x1 = self.xs[i], self.xs[i + 1]
        y0, y1 = self.ys[j], self.ys[j + 1]
        u = (x - x0) / (x1 - x0)
        v = (y - y0) / (y1 - y0)
        cell = j * nx + i
        # lower triangle (u >= v): corners (v00, v10, v11); upper: (v00, v11, v01)
        lower = u >= v
        tri_id = np.where(lower, 2 * cell, 2 * cell + 1)
        # lower triangle: A=v00 at (0,0), B=v10 at (1,0), C=v11 at (1,1):
        #   x = A + (B-A) r + (C-A) s with r = u - v, s = v
        # upper triangle: A=v00, B=v11 at (1,1), C=v01 at (0,1):
        #   r = u (along diagonal partner), s = v - u
        r = np.where(lower, u - v, u)
        s = np.where(lower, v, v - u)
        bary = np.stack([1 - r - s, r, s], axis=-1)
        N = p2_basis(bary)
        dofs = self.triangles[tri_id]
        vals = np.asarray(values)
        return np.sum(N * vals[dofs], axis=-1)


def build_mesh(domain: DomainSpec, k_max: float, crack=None,
               node_cap: int = 2_000_000) -> Mesh2D:
    """Structured P2 mesh resolving k_max at the domain's element density.

    When a crack is present, every grid column/row whose strip intersects the
    crack's bounding box (dilated by two crack widths) is halved, giving a
    conforming 2x banded refinement around the crack.
    """
    if k_max <= 0:
        raise ValueError("k_max must be positive")
    target_h = 2 * np.pi / (domain.elements_per_wavelength * k_max)
    refine_x, refine_y = (), ()
    if crack is not None and getattr(crack, "present", False) and crack.path is not None:
        pad = 2 * crack.width
        lo = crack.path.min(axis=0) - pad
        hi = crack.path.max(axis=0) + pad
        refine_x = ((lo[0], hi[0]),)
        refine_y = ((lo[1], hi[1]),)
    xs = grade_lines(domain.Lx, target_h, refine_x)
    ys = grade_lines(domain.Ly, target_h, refine_y)
    return mesh_from_lines(xs, ys, domain.periodic_x, node_cap)


def mesh_from_lines(xs, ys, periodic_x=False, node_cap=2_000_000) -> Mesh2D:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    nx, ny = len(xs) - 1, len(ys) - 1
    nxv = nx if periodic_x else nx + 1

    n_vert = (ny + 1) * nxv
    n_h = (ny + 1) * nx
    n_v = ny * nxv
    n_d = ny * nx
    n_nodes = n_vert + n_h + n_v + n_d
    if n_nodes > node_cap:
        raise MeshTooLarge(f"{n_nodes} nodes exceeds cap {node_cap}")

    def vid(i, j):
        return j * nxv + (np.mod(i, nx) if periodic_x else i)

    off_h = n_vert
    off_v = n_vert + n_h
    off_d = off_v + n_v

    def hid(i, j):
        return off_h + j * nx + i

    def vvid(i, j):
        return off_v + j * nxv + (np.mod(i, nx) if periodic_x else i)

    def did(i, j):
        return off_d + j * nx + i

    # node coordinates (wrapped columns take the left-instance coordinate)
    node_xy = np.zeros((n_nodes, 2))
    xv = xs[:nxv]
    XV, YV = np.meshgrid(xv, ys)
    node_xy[:n_vert] = np.stack([XV.ravel(), YV.ravel()], axis=1)
    xm = 0.5 * (xs[:-1] + xs[1:])
    ym = 0.5 * (ys[:-1] + ys[1:])
    XH, YH = np.meshgrid(xm, ys)
    node_xy[off_h:off_v] = np.stack([XH.ravel(), YH.ravel()], axis=1)
    XVV, YVV = np.meshgrid(xv, ym)
    node_xy[off_v:off_d] = np.stack([XVV.ravel(), YVV.ravel()], axis=1)
    XD, YD = np.meshgrid(xm, ym)
    node_xy[off_d:] = np.stack([XD.ravel(), YD.ravel()], axis=1)

    I, J = np.meshgrid(np.arange(nx), np.arange(ny))
    I, J = I.ravel(), J.ravel()
    v00, v10 = vid(I, J), vid(I + 1, J)
    v01, v11 = vid(I, J + 1), vid(I + 1, J + 1)
    # lower triangle: A=v00, B=v10, C=v11; edges AB=H(i,j), BC=V(i+1,j), CA=D(i,j)
    t1 = np.stack([v00, v10, v11, hid(I, J), vvid(I + 1, J), did(I, J)], axis=1)
    # upper triangle: A=v00, B=v11, C=v01; edges AB=D(i,j), BC=H(i,j+1), CA=V(i,j)
    t2 = np.stack([v00, v11, v01, did(I, J), hid(I, J + 1), vvid(I, J)], axis=1)
    triangles = np.empty((2 * nx * ny, 6), dtype=np.int64)
    triangles[0::2] = t1
    triangles[1::2] = t2

    x0, x1 = xs[I], xs[I + 1]
    y0, y1 = ys[J], ys[J + 1]
    tri_xy = np.empty((2 * nx * ny, 3, 2))
    tri_xy[0::2, 0] = np.stack([x0, y0], axis=1)
    tri_xy[0::2, 1] = np.stack([x1, y0], axis=1)
    tri_xy[0::2, 2] = np.stack([x1, y1], axis=1)
    tri_xy[1::2, 0] = np.stack([x0, y0], axis=1)
    tri_xy[1::2, 1] = np.stack([x1, y1], axis=1)
    tri_xy[1::2, 2] = np.stack([x0, y1], axis=1)

    cell = np.repeat(J * nx + I, 2)
    return Mesh2D(xs=xs, ys=ys, periodic_x=periodic_x, node_xy=node_xy,
                  triangles=triangles, tri_xy=tri_xy, cell_of_tri=cell)
