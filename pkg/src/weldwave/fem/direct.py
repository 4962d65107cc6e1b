"""Sparse direct factorization with reuse across right-hand sides."""

import time

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import FactorizationFailure


class FactorizedOperator:
    """LU factorization of A = K - omega^2 M, reused for many loads."""

    def __init__(self, A: sp.spmatrix, rcond_floor: float = 1e-13):
        A = A.tocsc()
        self.shape = A.shape
        t0 = time.perf_counter()
        try:
            self._lu = spla.splu(A)
        except RuntimeError as exc:
            raise FactorizationFailure(f"factorization failed: {exc}") from exc
        self.factor_seconds = time.perf_counter() - t0
        self._norm_A = spla.norm(A, ord=np.inf)
        self._rcond_floor = rcond_floor
        self._rcond = None

    def rcond_estimate(self) -> float:
        """One-sided reciprocal condition estimate via a few probe solves."""
        if self._rcond is None:
            rng = np.random.Generator(np.random.PCG64(0))
            worst = 0.0
            for _ in range(3):
                b = rng.standard_normal(self.shape[0]) + 1j * rng.standard_normal(self.shape[0])
                x = self._lu.solve(b)
                worst = max(worst, np.linalg.norm(x, np.inf) / np.linalg.norm(b, np.inf))
            self._rcond = 1.0 / (worst * self._norm_A) if worst > 0 else 0.0
        return self._rcond

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        x = self._lu.solve(np.asarray(rhs, dtype=complex))
        if not np.all(np.isfinite(x)):
            raise FactorizationFailure("non-finite solution from factorized operator",
                                       rcond_estimate=self.rcond_estimate())
        return x

    def check_conditioning(self):
        rc = self.rcond_estimate()
        if rc < self._rcond_floor:
            raise FactorizationFailure(
                f"operator near singular (rcond ~ {rc:.2e}); likely an undamped resonance",
                rcond_estimate=rc)


def scatter_assemble(n_dofs, element_dofs, element_matrices) -> sp.csr_matrix:
    """Sum element matrices into a global sparse operator (deterministic order)."""
    n_el, n_loc, _ = element_matrices.shape
    rows = np.repeat(element_dofs, n_loc, axis=1).ravel()
    cols = np.tile(element_dofs, (1, n_loc)).ravel()
    A = sp.coo_matrix((element_matrices.ravel(), (rows, cols)),
                      shape=(n_dofs, n_dofs), dtype=complex)
    return A.tocsr()
