"""Per-mode heterogeneous Helmholtz assembly and direct solve.

The mode equation div(kappa grad psi) + omega^2 psi = f, with kappa =
(Phi * vp * C)^2, is discretized with P2 triangles.  Absorbing layers enter
through separable coordinate stretches: multiplying the weak form by
J = xi_x xi_y keeps the operator complex-symmetric, with gradient terms
weighted by xi_y/xi_x and xi_x/xi_y and mass/load terms by J.  Systems are
assembled so that (K - omega^2 M) U = rhs yields psi directly.
"""

from dataclasses import dataclass

import numpy as np

from ..dispersion import SurfaceForce
from ..errors import MeshMismatch, SingularCoefficient
from .direct import FactorizedOperator, scatter_assemble
from .mesh2d import _QP, _QW, Mesh2D, p2_basis, p2_basis_grad
from .pml import PMLProfile


@dataclass
class GridSampler:
    """Bilinear sampler of a uniform coefficient grid; neutral (1) outside."""

    values: np.ndarray      # (ny, nx)
    dx: float
    dy: float
    origin: tuple = (0.0, 0.0)
    fill: float = 1.0

    def sample(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ny, nx = self.values.shape
        u = (x - self.origin[0]) / self.dx
        v = (y - self.origin[1]) / self.dy
        inside = (u >= 0) & (u <= nx - 1) & (v >= 0) & (v <= ny - 1)
        uc = np.clip(u, 0, nx - 1 - 1e-12)
        vc = np.clip(v, 0, ny - 1 - 1e-12)
        i0 = np.floor(uc).astype(int)
        j0 = np.floor(vc).astype(int)
        fu = uc - i0
        fv = vc - j0
        vals = (self.values[j0, i0] * (1 - fu) * (1 - fv)
                + self.values[j0, i0 + 1] * fu * (1 - fv)
                + self.values[j0 + 1, i0] * (1 - fu) * fv
                + self.values[j0 + 1, i0 + 1] * fu * fv)
        return np.where(inside, vals, self.fill)


def _constant_sampler(value):
    class _C:
        def sample(self, x, y):
            return np.full(np.broadcast(x, y).shape, float(value))
    return _C()


def as_sampler(coeff):
    if coeff is None:
        return _constant_sampler(1.0)
    if np.isscalar(coeff):
        return _constant_sampler(coeff)
    return coeff


@dataclass
class HelmholtzSystem:
    mesh: Mesh2D
    omega: float
    K: object               # csr, complex
    M: object
    pml: PMLProfile
    vp: float
    _operator: FactorizedOperator = None

    @property
    def n_dofs(self) -> int:
        return self.mesh.n_nodes

    def operator(self) -> FactorizedOperator:
        if self._operator is None:
            self._operator = FactorizedOperator(self.K - self.omega**2 * self.M)
        return self._operator

    def diagnostics(self) -> dict:
        op = self.operator()
        return {
            "dofs": self.n_dofs,
            "nnz": int(self.K.nnz),
            "factor_seconds": op.factor_seconds,
            "rcond_estimate": op.rcond_estimate(),
        }


@dataclass
class ComplexField:
    mesh: Mesh2D
    omega: float
    values: np.ndarray      # complex nodal values

    def on_points(self, x, y):
        return (self.mesh.interpolate(self.values.real, x, y)
                + 1j * self.mesh.interpolate(self.values.imag, x, y))


def _element_geometry(mesh: Mesh2D):
    a = mesh.tri_xy[:, 0]
    e1 = mesh.tri_xy[:, 1] - a
    e2 = mesh.tri_xy[:, 2] - a
    detj = e1[:, 0] * e2[:, 1] - e2[:, 0] * e1[:, 1]
    # inverse-transpose applied to reference gradients:
    # grad_phys = J^{-T} grad_ref,  J = [[e1x, e2x], [e1y, e2y]]
    invT = np.empty((len(detj), 2, 2))
    invT[:, 0, 0] = e2[:, 1] / detj
    invT[:, 0, 1] = -e1[:, 1] / detj
    invT[:, 1, 0] = -e2[:, 0] / detj
    invT[:, 1, 1] = e1[:, 0] / detj
    return a, e1, e2, detj, invT


def assemble(mesh: Mesh2D, modulation, crack_mask, vp: float, omega: float,
             pml: PMLProfile) -> HelmholtzSystem:
    """Assemble complex-symmetric (K, M) for one mode.

    `modulation` and `crack_mask` are GridSampler-like coefficient fields
    (or scalars / None for homogeneous); vp is the mode's nominal phase
    velocity, giving kappa = (Phi vp C)^2 at each quadrature point.
    """
    phi = as_sampler(modulation)
    cmask = as_sampler(crack_mask)
    a, e1, e2, detj, inv = _element_geometry(mesh)
    n_tri = mesh.n_tri
    Nq = p2_basis(_QP)                      # (q, 6)
    dNq = p2_basis_grad(_QP)                # (q, 6, 2)

    Ke = np.zeros((n_tri, 6, 6), dtype=complex)
    Me = np.zeros((n_tri, 6, 6), dtype=complex)
    for q in range(len(_QW)):
        r, s = _QP[q, 1], _QP[q, 2]
        xq = a + e1 * r + e2 * s            # (n_tri, 2)
        speed = phi.sample(xq[:, 0], xq[:, 1]) * vp * cmask.sample(xq[:, 0], xq[:, 1])
        if np.any(speed <= 0):
            raise SingularCoefficient("nonpositive wavespeed coefficient at a quadrature point")
        kap = speed**2
        xix = pml.xi_x(xq[:, 0])
        xiy = pml.xi_y(xq[:, 1])
        g = np.einsum("eij,aj->eai", inv, dNq[q])   # (n_tri, 6, 2) physical grads
        gx, gy = g[..., 0], g[..., 1]
        wdet = _QW[q] * detj
        Ke += (wdet * kap)[:, None, None] * (
            (xiy / xix)[:, None, None] * gx[:, :, None] * gx[:, None, :]
            + (xix / xiy)[:, None, None] * gy[:, :, None] * gy[:, None, :]
        )
        Me += (wdet * xix * xiy)[:, None, None] * np.outer(Nq[q], Nq[q])[None, :, :]

    n = mesh.n_nodes
    K = scatter_assemble(n, mesh.triangles, Ke)
    M = scatter_assemble(n, mesh.triangles, Me)
    return HelmholtzSystem(mesh=mesh, omega=omega, K=K, M=M, pml=pml, vp=vp)


def build_load(system: HelmholtzSystem, force: SurfaceForce) -> np.ndarray:
    """Consistent load so that (K - omega^2 M) U = rhs solves the mode PDE
    with source f = the force profile (sign folded in here)."""
    mesh, pml = system.mesh, system.pml
    rhs = np.zeros(mesh.n_nodes, dtype=complex)
    if force.kind == "point":
        x0, y0 = force.center
        tri, bary = _point_bary(mesh, x0, y0)
        jpml = complex(pml.xi_x(np.array([x0]))[0] * pml.xi_y(np.array([y0]))[0])
        np.add.at(rhs, mesh.triangles[tri], -force.amplitude * jpml * p2_basis(bary))
        return rhs
    a, e1, e2, detj, _ = _element_geometry(mesh)
    Nq = p2_basis(_QP)
    r0 = force.radius
    x0, y0 = force.center
    norm = force.amplitude / (2 * np.pi * r0**2)
    for q in range(len(_QW)):
        r, s = _QP[q, 1], _QP[q, 2]
        xq = a + e1 * r + e2 * s
        fq = norm * np.exp(-((xq[:, 0] - x0) ** 2 + (xq[:, 1] - y0) ** 2) / (2 * r0**2))
        jq = pml.xi_x(xq[:, 0]) * pml.xi_y(xq[:, 1])
        contrib = (-_QW[q] * detj * fq * jq)[:, None] * Nq[q][None, :]
        np.add.at(rhs, mesh.triangles.reshape(-1), contrib.reshape(-1))
    return rhs


def _point_bary(mesh: Mesh2D, x, y):
    nx = len(mesh.xs) - 1
    i = int(np.clip(np.searchsorted(mesh.xs, x, side="right") - 1, 0, nx - 1))
    j = int(np.clip(np.searchsorted(mesh.ys, y, side="right") - 1, 0, len(mesh.ys) - 2))
    u = (x - mesh.xs[i]) / (mesh.xs[i + 1] - mesh.xs[i])
    v = (y - mesh.ys[j]) / (mesh.ys[j + 1] - mesh.ys[j])
    cell = j * nx + i
    if u >= v:
        tri, r, s = 2 * cell, u - v, v
    else:
        tri, r, s = 2 * cell + 1, u, v - u
    return tri, np.array([1 - r - s, r, s])


def solve_mode(system: HelmholtzSystem, rhs: np.ndarray,
               check_conditioning: bool = False) -> ComplexField:
    """Direct solve with factorization reuse across right-hand sides."""
    if rhs.shape != (system.n_dofs,):
        raise MeshMismatch("load vector does not match system size")
    op = system.operator()
    if check_conditioning:
        op.check_conditioning()
    return ComplexField(mesh=system.mesh, omega=system.omega, values=op.solve(rhs))


def superpose(fields) -> ComplexField:
    """Amplitude-weighted sum of per-mode fields sharing one mesh."""
    fields = list(fields)
    if not fields:
        raise ValueError("nothing to superpose")
    amp0, f0 = fields[0]
    out = amp0 * f0.values
    for amp, f in fields[1:]:
        if f.mesh is not f0.mesh and f.values.shape != f0.values.shape:
            raise MeshMismatch("superposed fields must share a mesh")
        if f.mesh is not f0.mesh and not (
                np.array_equal(f.mesh.xs, f0.mesh.xs) and np.array_equal(f.mesh.ys, f0.mesh.ys)):
            raise MeshMismatch("superposed fields must share a mesh")
        out = out + amp * f.values
    return ComplexField(mesh=f0.mesh, omega=f0.omega, values=out)
