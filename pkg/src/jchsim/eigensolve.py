"""Lowest eigenpairs of sparse lattice Hamiltonians, full-space or per sector.

Small problems (dim <= DENSE_THRESHOLD) are solved densely with LAPACK;
larger ones fall back to ARPACK with a deterministic start vector so that
repeated runs are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .hilbert import LatticeSpec, SiteBasis, excitation_numbers, sector_basis, top_photon_mask

DENSE_THRESHOLD = 2048
DEGENERACY_GAP = 1e-10
TRUNCATION_FLAG = 1e-4


class SolverError(RuntimeError):
    """Eigensolver did not converge; carries the best residual reached."""

    def __init__(self, message, residual=np.inf):
        super().__init__(message)
        self.residual = residual


class SectorError(ValueError):
    """Raised when a sector-restricted solve is not applicable."""


@dataclass
class EigResult:
    energy: float
    state: np.ndarray
    residual: float
    truncation_weight: float
    gap: float
    degenerate: bool

    @property
    def truncation_flagged(self) -> bool:
        return self.truncation_weight > TRUNCATION_FLAG


def _lowest_two(H: sp.spmatrix, tol: float, dense_threshold: int):
    """Return (energies[2], ground vector) deterministically."""
    dim = H.shape[0]
    if dim <= 2:
        w, v = np.linalg.eigh(H.toarray())
        e1 = w[1] if dim > 1 else np.inf
        return np.array([w[0], e1]), v[:, 0]
    if dim <= dense_threshold:
        w, v = np.linalg.eigh(H.toarray())
        return w[:2], v[:, 0]
    v0 = np.full(dim, 1.0 / np.sqrt(dim))
    try:
        w, v = spla.eigsh(H, k=2, which="SA", v0=v0, tol=tol)
    except spla.ArpackNoConvergence as exc:
        res = np.inf
        if exc.eigenvalues.size and exc.eigenvectors.size:
            vec = exc.eigenvectors[:, 0]
            res = float(np.linalg.norm(H @ vec - exc.eigenvalues[0] * vec))
        raise SolverError(f"ARPACK did not converge on dim {dim}", residual=res) from exc
    order = np.argsort(w)
    return w[order][:2], v[:, order[0]]


def _finalize(H, energy, gap, full_state, basis, lattice) -> EigResult:
    norm = np.linalg.norm(full_state)
    full_state = full_state / norm
    residual = float(np.linalg.norm(H @ full_state - energy * full_state))
    mask = top_photon_mask(basis, lattice)
    weight = float(np.sum(np.abs(full_state[mask]) ** 2))
    return EigResult(
        energy=float(energy),
        state=full_state,
        residual=residual,
        truncation_weight=weight,
        gap=float(gap),
        degenerate=bool(gap < DEGENERACY_GAP),
    )


def ground_state_full(H: sp.spmatrix, basis: SiteBasis, lattice: LatticeSpec,
                      tol: float = 1e-9, dense_threshold: int = DENSE_THRESHOLD) -> EigResult:
    """Lowest eigenpair of H over the whole space."""
    w2, vec = _lowest_two(H.tocsr(), tol, dense_threshold)
    return _finalize(H, w2[0], w2[1] - w2[0], vec, basis, lattice)


def number_commutator_defect(H: sp.spmatrix, basis: SiteBasis, lattice: LatticeSpec) -> float:
    """Largest |[H, sum_i N_i]| matrix element.

    N is diagonal here, so the commutator entries are H_ij (N_j - N_i);
    the defect is exactly the largest number-changing element of H.
    """
    n_tot = excitation_numbers(basis, lattice)
    coo = H.tocoo()
    dn = n_tot[coo.col] - n_tot[coo.row]
    bad = dn != 0
    if not bad.any():
        return 0.0
    return float(np.abs(coo.data[bad] * dn[bad]).max())


def ground_state_in_sector(H: sp.spmatrix, n_total: int, basis: SiteBasis,
                           lattice: LatticeSpec, tol: float = 1e-9,
                           dense_threshold: int = DENSE_THRESHOLD,
                           comm_tol: float = 1e-12) -> EigResult:
    """Lowest eigenpair of H restricted to the fixed-excitation sector.

    The returned state is embedded back into the full space.  Requires
    [H, sum N_i] = 0; mean-field terms linear in a break this, in which
    case the caller should use ground_state_full instead.
    """
    H = H.tocsr()
    scale = max(1.0, np.abs(H.data).max() if H.nnz else 0.0)
    defect = number_commutator_defect(H, basis, lattice)
    if defect > comm_tol * scale:
        raise SectorError(
            f"H does not conserve total excitation number (defect {defect:.3g}); "
            "use ground_state_full for number-breaking Hamiltonians"
        )
    idx = sector_basis(n_total, basis, lattice)
    if idx.size == 0:
        raise SectorError(f"sector n_total={n_total} is empty")
    Hs = H[idx][:, idx]
    w2, vec = _lowest_two(Hs, tol, dense_threshold)
    full = np.zeros(H.shape[0], dtype=vec.dtype)
    full[idx] = vec
    return _finalize(H, w2[0], w2[1] - w2[0] if idx.size > 1 else np.inf, full, basis, lattice)
