"""Reduced density matrices, partial transpose, negativity, purity, fidelity.

Subsystem dimensions are passed explicitly as a sequence ``dims`` whose
product equals the state dimension.  For lattice states the convention is
dims = (2, n_max+1) per site in site order (see hilbert.subsystem_dims).
"""

from __future__ import annotations

import numpy as np

from .hilbert import LatticeSpec, SiteBasis, subsystem_dims

NEGATIVE_EIG_CUTOFF = -1e-12


def _as_dims(dims) -> list:
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims):
        raise ValueError("subsystem dimensions must be positive")
    return dims


def partial_trace(state: np.ndarray, keep, dims) -> np.ndarray:
    """Reduced density matrix on the kept subsystems (order preserved).

    ``state`` may be a pure-state vector or a density matrix.
    """
    dims = _as_dims(dims)
    total = int(np.prod(dims))
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"keep={keep} not a subset of {len(dims)} subsystems")
    rest = [k for k in range(len(dims)) if k not in keep]
    d_keep = int(np.prod([dims[k] for k in keep]))
    d_rest = int(np.prod([dims[k] for k in rest]))

    state = np.asarray(state)
    if state.ndim == 1:
        if state.size != total:
            raise ValueError(f"state dim {state.size} does not factor as prod{tuple(dims)}")
        psi = state.reshape(dims).transpose(keep + rest).reshape(d_keep, d_rest)
        return psi @ psi.conj().T
    if state.shape != (total, total):
        raise ValueError(f"density matrix shape {state.shape} does not match prod{tuple(dims)}")
    t = state.reshape(dims + dims)
    perm = keep + rest + [k + len(dims) for k in keep] + [r + len(dims) for r in rest]
    t = t.transpose(perm).reshape(d_keep, d_rest, d_keep, d_rest)
    return np.einsum("iaja->ij", t)


def partial_transpose(rho: np.ndarray, dims, transpose_subsystems) -> np.ndarray:
    """Transpose the bra/ket indices of the named subsystems."""
    dims = _as_dims(dims)
    sub = sorted(set(int(s) for s in transpose_subsystems))
    if any(s < 0 or s >= len(dims) for s in sub):
        raise ValueError(f"partition {sub} not a subset of {len(dims)} subsystems")
    n = len(dims)
    t = np.asarray(rho).reshape(dims + dims)
    perm = list(range(2 * n))
    for s in sub:
        perm[s], perm[s + n] = perm[s + n], perm[s]
    d = int(np.prod(dims))
    return t.transpose(perm).reshape(d, d)


def negativity(rho: np.ndarray, dims, partition_a) -> float:
    """Sum of |negative eigenvalues| of the partial transpose over partition_a.

    Eigenvalues in [-1e-12, 0] are treated as numerical noise and ignored.
    """
    pt = partial_transpose(rho, dims, partition_a)
    pt = 0.5 * (pt + pt.conj().T)
    w = np.linalg.eigvalsh(pt)
    neg = w[w < NEGATIVE_EIG_CUTOFF]
    return float(-neg.sum())


def negativity_pure_bipartite(psi: np.ndarray, dim_a: int, dim_b: int) -> float:
    """Negativity of a pure bipartite state from its Schmidt coefficients."""
    s = np.linalg.svd(np.asarray(psi).reshape(dim_a, dim_b), compute_uv=False)
    return float(max(0.0, 0.5 * (s.sum() ** 2 - 1.0)))


def in_site_entanglement(state: np.ndarray, site: int, basis: SiteBasis,
                         lattice: LatticeSpec) -> float:
    """Atom-photon negativity within one site, environment traced out."""
    dims = subsystem_dims(basis, lattice)
    rho = partial_trace(state, (2 * site, 2 * site + 1), dims)
    return negativity(rho, (2, basis.n_photon_levels), (0,))


def site_site_negativity(state: np.ndarray, site_a: int, site_b: int,
                         basis: SiteBasis, lattice: LatticeSpec) -> float:
    """Negativity between two full sites (atom+photon vs atom+photon)."""
    dims = subsystem_dims(basis, lattice)
    keep = (2 * site_a, 2 * site_a + 1, 2 * site_b, 2 * site_b + 1)
    rho = partial_trace(state, keep, dims)
    return negativity(rho, (2, basis.n_photon_levels, 2, basis.n_photon_levels), (0, 1))


def atom_atom_negativity(state: np.ndarray, site_a: int, site_b: int,
                         basis: SiteBasis, lattice: LatticeSpec) -> float:
    """Negativity between the two dopant qubits, all photon modes traced out."""
    dims = subsystem_dims(basis, lattice)
    rho = partial_trace(state, (2 * site_a, 2 * site_b), dims)
    return negativity(rho, (2, 2), (0,))


def purity_entanglement(rho: np.ndarray) -> float:
    """1 - tr(rho^2): zero for pure states, up to 1 - 1/d when maximally mixed."""
    return float(1.0 - np.einsum("ij,ji->", rho, rho).real)


def fidelity(psi: np.ndarray, phi: np.ndarray) -> float:
    """|<psi|phi>|^2 for pure states of equal dimension."""
    psi, phi = np.asarray(psi), np.asarray(phi)
    if psi.shape != phi.shape:
        raise ValueError(f"state dims differ: {psi.shape} vs {phi.shape}")
    return float(np.abs(np.vdot(psi, phi)) ** 2)


def check_density_matrix(rho: np.ndarray, tol: float = 1e-10) -> None:
    """Raise if rho is not trace-one, hermitian and positive within tol."""
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise ValueError(f"trace is {tr}, expected 1")
    if np.abs(rho - rho.conj().T).max() > tol:
        raise ValueError("matrix is not hermitian")
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if w.min() < -tol:
        raise ValueError(f"negative eigenvalue {w.min()}")
