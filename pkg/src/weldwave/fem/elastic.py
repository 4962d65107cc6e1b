"""Time-harmonic heterogeneous elastodynamics on structured hex grids.

The weak form is stretched per direction for absorbing layers: every spatial
derivative in the strains carries 1/xi_l and the volume measure carries
J = xi_x xi_y (traction-free top/bottom surfaces need no z layer), keeping
K and M complex-symmetric.  Material stiffness is per-element; crack voids
zero an element's stiffness contribution while its mass is retained.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import MeshMismatch, SingularMaterial
from .direct import FactorizedOperator, scatter_assemble
from .mesh3d import _GP3, _GW3, Mesh3D, trilinear_basis, trilinear_grad
from .pml import PMLProfile


@dataclass
class ElasticSystem:
    mesh: Mesh3D
    omega: float
    K: object
    M: object
    pml: PMLProfile
    _operator: FactorizedOperator = None

    @property
    def n_dofs(self):
        return 3 * self.mesh.n_nodes

    def operator(self) -> FactorizedOperator:
        if self._operator is None:
            self._operator = FactorizedOperator(self.K - self.omega**2 * self.M)
        return self._operator

    def diagnostics(self) -> dict:
        op = self.operator()
        return {"dofs": self.n_dofs, "nnz": int(self.K.nnz),
                "factor_seconds": op.factor_seconds,
                "rcond_estimate": op.rcond_estimate()}


@dataclass
class ElasticField:
    mesh: Mesh3D
    omega: float
    values: np.ndarray    # (3*n_nodes,) complex, dof order (node, component)


def assemble_nl(mesh: Mesh3D, e_field, nu: float, rho: float, omega: float,
                pml: PMLProfile, void_mask=None) -> ElasticSystem:
    """Complex-symmetric (K, M) for the heterogeneous plate.

    e_field: per-element Young's modulus, flat (n_elements,) or shaped
    (nx, ny, nz) in element-index order; void_mask marks crack cells whose
    stiffness contribution is zeroed.
    """
    E = np.asarray(e_field, dtype=float).reshape(-1, order="C")
    if E.shape[0] != mesh.n_elements:
        raise MeshMismatch("modulus field does not match the element count")
    if np.any(E <= 0):
        raise SingularMaterial("nonpositive Young's modulus")
    if not 0 < nu < 0.5:
        raise SingularMaterial("Poisson ratio outside (0, 0.5)")
    lam = E * nu / ((1 + nu) * (1 - 2 * nu))
    mu = E / (2 * (1 + nu))
    if void_mask is not None:
        void = np.asarray(void_mask, dtype=bool).reshape(-1)
        lam = np.where(void, 0.0, lam)
        mu = np.where(void, 0.0, mu)

    conn, I, J, K_idx = mesh.connectivity()
    n_el = mesh.n_elements
    dx, dy, dz = mesh.dx, mesh.dy, mesh.dz
    detj = dx * dy * dz / 8.0
    scale = np.array([2.0 / dx, 2.0 / dy, 2.0 / dz])

    Ke = np.zeros((n_el, 8, 3, 8, 3), dtype=complex)
    Me_nodal = np.zeros((n_el, 8, 8), dtype=complex)
    Nq = trilinear_basis(_GP3)          # (q, 8)
    Gq = trilinear_grad(_GP3)           # (q, 3, 8) natural gradients

    for q in range(8):
        xq = (I + 0.5 + 0.5 * _GP3[q, 0]) * dx
        yq = (J + 0.5 + 0.5 * _GP3[q, 1]) * dy
        xix = pml.xi_x(xq)
        xiy = pml.xi_y(yq)
        jpml = xix * xiy
        G = Gq[q] * scale[:, None]                       # (3, 8) physical gradients
        Gt = G[None, :, :] / np.stack(
            [xix, xiy, np.ones_like(xix)], axis=1)[:, :, None]   # (e, 3, 8)
        w = _GW3[q] * detj * jpml
        S = np.einsum("ela,elb->eab", Gt, Gt)
        Ke += np.einsum("e,eia,ejb->eaibj", w * lam, Gt, Gt)
        Ke += np.einsum("e,eja,eib->eaibj", w * mu, Gt, Gt)
        for i in range(3):
            Ke[:, :, i, :, i] += (w * mu)[:, None, None] * S
        Me_nodal += (w * rho)[:, None, None] * np.outer(Nq[q], Nq[q])[None, :, :]

    dofs = (3 * conn[:, :, None] + np.arange(3)[None, None, :]).reshape(n_el, 24)
    Kmat = scatter_assemble(3 * mesh.n_nodes, dofs, Ke.reshape(n_el, 24, 24))
    Me = np.zeros((n_el, 8, 3, 8, 3), dtype=complex)
    for i in range(3):
        Me[:, :, i, :, i] = Me_nodal
    Mmat = scatter_assemble(3 * mesh.n_nodes, dofs, Me.reshape(n_el, 24, 24))
    return ElasticSystem(mesh=mesh, omega=omega, K=Kmat, M=Mmat, pml=pml)


def build_surface_load(mesh: Mesh3D, profile, amplitude: float = 1.0) -> np.ndarray:
    """Nodal load for a -z traction F(x,y) on the top surface.

    `profile` is a callable F(x, y); nodal weights use the tensor trapezoid
    rule so the total applied force equals the profile integral.
    """
    rhs = np.zeros(3 * mesh.n_nodes, dtype=complex)
    ids = mesh.top_surface_ids()
    xs = np.linspace(0, mesh.Lx, mesh.nx + 1)[: mesh.nxv]
    ys = np.linspace(0, mesh.Ly, mesh.ny + 1)
    X, Y = np.meshgrid(xs, ys)
    wx = np.full(mesh.nxv, mesh.dx)
    if not mesh.periodic_x:
        wx[[0, -1]] = mesh.dx / 2
    wy = np.full(mesh.ny + 1, mesh.dy)
    wy[[0, -1]] = mesh.dy / 2
    W = np.outer(wy, wx)
    rhs[3 * ids + 2] = -amplitude * profile(X, Y) * W
    return rhs


def solve_nl(system: ElasticSystem, rhs: np.ndarray,
             check_conditioning: bool = False) -> ElasticField:
    if rhs.shape != (system.n_dofs,):
        raise MeshMismatch("load vector does not match system size")
    op = system.operator()
    if check_conditioning:
        op.check_conditioning()
    return ElasticField(mesh=system.mesh, omega=system.omega, values=op.solve(rhs))


def extract_surface(field: ElasticField):
    """u_z on the uniform top-surface grid, shape (ny+1, nx+1)."""
    ids = field.mesh.top_surface_ids()
    return field.values[3 * ids + 2]
