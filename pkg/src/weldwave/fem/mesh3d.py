"""Structured trilinear hexahedral meshes for the 3D plate solver."""

from dataclasses import dataclass

import numpy as np

from ..errors import MeshTooLarge

# 2x2x2 Gauss points / weights on [-1, 1]^3
_G = 1.0 / np.sqrt(3.0)
_GP3 = np.array([[sx, sy, sz] for sz in (-_G, _G) for sy in (-_G, _G) for sx in (-_G, _G)])
_GW3 = np.ones(8)

# local node order: [000, 100, 110, 010, 001, 101, 111, 011] in (x,y,z)
_CORNERS = np.array([
    [-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
    [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1],
], dtype=float)


def trilinear_basis(xi):
    """Shape functions at natural coordinates xi, shape (..., 8)."""
    xi = np.asarray(xi, dtype=float)
    out = []
    for c in _CORNERS:
        out.append((1 + c[0] * xi[..., 0]) * (1 + c[1] * xi[..., 1]) * (1 + c[2] * xi[..., 2]) / 8)
    return np.stack(out, axis=-1)


def trilinear_grad(xi):
    """Natural-coordinate gradients, shape (..., 3, 8)."""
    xi = np.asarray(xi, dtype=float)
    gx, gy, gz = [], [], []
    for c in _CORNERS:
        gx.append(c[0] * (1 + c[1] * xi[..., 1]) * (1 + c[2] * xi[..., 2]) / 8)
        gy.append(c[1] * (1 + c[0] * xi[..., 0]) * (1 + c[2] * xi[..., 2]) / 8)
        gz.append(c[2] * (1 + c[0] * xi[..., 0]) * (1 + c[1] * xi[..., 1]) / 8)
    return np.stack([np.stack(gx, axis=-1), np.stack(gy, axis=-1), np.stack(gz, axis=-1)], axis=-2)


@dataclass
class Mesh3D:
    Lx: float
    Ly: float
    H: float
    nx: int            # element counts
    ny: int
    nz: int
    periodic_x: bool = False

    def __post_init__(self):
        if self.nz < 4:
            raise ValueError("thickness must be resolved by at least 4 elements")

    @property
    def dx(self):
        return self.Lx / self.nx

    @property
    def dy(self):
        return self.Ly / self.ny

    @property
    def dz(self):
        return self.H / self.nz

    @property
    def nxv(self):
        """Distinct vertex columns in x (right seam aliases the left when periodic)."""
        return self.nx if self.periodic_x else self.nx + 1

    @property
    def n_nodes(self):
        return self.nxv * (self.ny + 1) * (self.nz + 1)

    @property
    def n_elements(self):
        return self.nx * self.ny * self.nz

    def node_id(self, i, j, k):
        ii = np.mod(i, self.nx) if self.periodic_x else i
        return (k * (self.ny + 1) + j) * self.nxv + ii

    def node_coords(self):
        xs = np.linspace(0, self.Lx, self.nx + 1)[: self.nxv]
        ys = np.linspace(0, self.Ly, self.ny + 1)
        zs = np.linspace(0, self.H, self.nz + 1)
        Z, Y, X = np.meshgrid(zs, ys, xs, indexing="ij")
        return np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)

    def connectivity(self):
        """(n_elements, 8) node ids in the local corner order."""
        I, J, K = np.meshgrid(np.arange(self.nx), np.arange(self.ny),
                              np.arange(self.nz), indexing="ij")
        I, J, K = I.ravel(order="F"), J.ravel(order="F"), K.ravel(order="F")
        n = self.node_id
        conn = np.stack([
            n(I, J, K), n(I + 1, J, K), n(I + 1, J + 1, K), n(I, J + 1, K),
            n(I, J, K + 1), n(I + 1, J, K + 1), n(I + 1, J + 1, K + 1), n(I, J + 1, K + 1),
        ], axis=1)
        return conn, I, J, K

    def element_centers(self):
        _, I, J, K = self.connectivity()
        return np.stack([(I + 0.5) * self.dx, (J + 0.5) * self.dy, (K + 0.5) * self.dz], axis=1)

    def top_surface_ids(self):
        """Node ids of the z = H surface as a (ny+1, nxv) grid."""
        j, i = np.meshgrid(np.arange(self.ny + 1), np.arange(self.nxv), indexing="ij")
        return self.node_id(i, j, self.nz)


def build_mesh3d(Lx, Ly, H, min_wavelength, nodes_per_wavelength=10,
                 nz_min=4, dof_cap=3_000_000) -> Mesh3D:
    """Structured grid with >= nodes_per_wavelength nodes per shortest
    wavelength in x and y, and the thickness resolved by >= nz_min elements."""
    target = min_wavelength / nodes_per_wavelength
    nx = max(2, int(np.ceil(Lx / target)))
    ny = max(2, int(np.ceil(Ly / target)))
    nz = max(nz_min, int(np.ceil(H / target)))
    mesh = Mesh3D(Lx, Ly, H, nx, ny, nz)
    if 3 * mesh.n_nodes > dof_cap:
        raise MeshTooLarge(
            f"{3 * mesh.n_nodes} displacement DOFs exceed the desk-scale cap {dof_cap}")
    return mesh
