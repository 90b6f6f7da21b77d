"""Truncated light-matter Hilbert spaces and lattice operator embeddings.

Each site carries a two-level system (dopant) tensored with a photon mode
truncated at ``n_max`` photons.  The local basis ordering is fixed:

    local index = atomic_level * (n_max + 1) + photon_number,

with atomic_level 0 = ground, 1 = excited.  Multi-site states order site 0
as the slowest index, i.e. the full space is site0 (x) site1 (x) ...
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class SiteBasis:
    """Local Hilbert space of one cavity: qubit (x) truncated oscillator."""

    n_max: int

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")

    @property
    def n_photon_levels(self) -> int:
        return self.n_max + 1

    @property
    def local_dim(self) -> int:
        return 2 * (self.n_max + 1)

    def photon_numbers(self) -> np.ndarray:
        """Photon number of each local basis index."""
        return np.tile(np.arange(self.n_max + 1), 2)

    def atom_levels(self) -> np.ndarray:
        """Atomic level (0=g, 1=e) of each local basis index."""
        return np.repeat(np.arange(2), self.n_max + 1)

    def local_index(self, atom_level: int, photon_number: int) -> int:
        if not 0 <= atom_level <= 1 or not 0 <= photon_number <= self.n_max:
            raise ValueError("basis labels out of range")
        return atom_level * (self.n_max + 1) + photon_number


@dataclass(frozen=True)
class LatticeSpec:
    """Lattice connectivity: sites, undirected edges, coordination number z.

    ``z`` is only consumed by mean-field boundary construction; the edge
    list alone defines the exact Hamiltonian.
    """

    n_sites: int
    edges: tuple = field(default_factory=tuple)
    z: int = 2

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be >= 1")
        if self.z < 1:
            raise ValueError("coordination number z must be >= 1")
        edges = tuple(tuple(sorted(e)) for e in self.edges)
        seen = set()
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop edge ({i},{j})")
            if not (0 <= i < self.n_sites and 0 <= j < self.n_sites):
                raise ValueError(f"edge ({i},{j}) references invalid site")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i},{j})")
            seen.add((i, j))
        object.__setattr__(self, "edges", edges)

    @classmethod
    def chain(cls, n_sites: int, z: int = 2) -> "LatticeSpec":
        """Open chain: n_sites-1 nearest-neighbour edges."""
        return cls(n_sites, tuple((i, i + 1) for i in range(n_sites - 1)), z)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degree(self, site: int) -> int:
        return sum(1 for i, j in self.edges if site in (i, j))


@dataclass(frozen=True)
class SiteOperators:
    """Single-site sparse operators in the fixed local ordering."""

    a: sp.csr_matrix
    a_dag: sp.csr_matrix
    sigma: sp.csr_matrix
    sigma_dag: sp.csr_matrix
    n_op: sp.csr_matrix


def site_operators(basis: SiteBasis) -> SiteOperators:
    """Build a, a_dag, sigma, sigma_dag and the excitation counter N.

    The photon ladder is hard-truncated: a_dag maps |n_max> to nothing.
    N = a_dag a + sigma_dag sigma counts photons plus atomic excitation.
    """
    n_ph = basis.n_photon_levels
    a_ph = sp.diags(np.sqrt(np.arange(1, n_ph)), offsets=1, format="csr")
    id_ph = sp.identity(n_ph, format="csr")
    id_at = sp.identity(2, format="csr")
    sigma_at = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))  # |g><e|

    a = sp.kron(id_at, a_ph, format="csr")
    a_dag = a.T.tocsr()
    sigma = sp.kron(sigma_at, id_ph, format="csr")
    sigma_dag = sigma.T.tocsr()
    n_op = (a_dag @ a + sigma_dag @ sigma).tocsr()
    return SiteOperators(a=a, a_dag=a_dag, sigma=sigma, sigma_dag=sigma_dag, n_op=n_op)


def embed(op: sp.spmatrix, site: int, basis: SiteBasis, lattice: LatticeSpec) -> sp.csr_matrix:
    """Embed a local operator at ``site``: I (x) ... (x) op (x) ... (x) I."""
    d = basis.local_dim
    if op.shape != (d, d):
        raise ValueError(f"operator dim {op.shape} does not match local_dim {d}")
    if not 0 <= site < lattice.n_sites:
        raise ValueError(f"site {site} out of range for {lattice.n_sites} sites")
    left = sp.identity(d**site, format="csr")
    right = sp.identity(d ** (lattice.n_sites - site - 1), format="csr")
    return sp.kron(sp.kron(left, op, format="csr"), right, format="csr")


@lru_cache(maxsize=32)
def _excitation_table(n_max: int, n_sites: int) -> np.ndarray:
    basis = SiteBasis(n_max)
    local_n = basis.atom_levels() + basis.photon_numbers()
    d = basis.local_dim
    idx = np.arange(d**n_sites)
    total = np.zeros(idx.size, dtype=np.int64)
    for s in range(n_sites):
        total += local_n[(idx // d ** (n_sites - 1 - s)) % d]
    return total


@lru_cache(maxsize=32)
def _top_photon_table(n_max: int, n_sites: int) -> np.ndarray:
    basis = SiteBasis(n_max)
    local_ph = basis.photon_numbers()
    d = basis.local_dim
    idx = np.arange(d**n_sites)
    mask = np.zeros(idx.size, dtype=bool)
    for s in range(n_sites):
        mask |= local_ph[(idx // d ** (n_sites - 1 - s)) % d] == n_max
    return mask


def excitation_numbers(basis: SiteBasis, lattice: LatticeSpec) -> np.ndarray:
    """Total excitation number (photons + excited atoms) of every basis state."""
    return _excitation_table(basis.n_max, lattice.n_sites)


def top_photon_mask(basis: SiteBasis, lattice: LatticeSpec) -> np.ndarray:
    """Boolean mask of basis states where some site sits at the photon cutoff."""
    return _top_photon_table(basis.n_max, lattice.n_sites)


def sector_basis(n_total: int, basis: SiteBasis, lattice: LatticeSpec) -> np.ndarray:
    """Indices of the fixed-excitation sector; empty array if no state matches."""
    return np.flatnonzero(excitation_numbers(basis, lattice) == n_total)


def total_number_operator(basis: SiteBasis, lattice: LatticeSpec) -> sp.csr_matrix:
    """Sum of per-site excitation counters; diagonal in the chosen basis."""
    return sp.diags(excitation_numbers(basis, lattice).astype(float), format="csr")


def subsystem_dims(basis: SiteBasis, lattice: LatticeSpec) -> tuple:
    """Factor dimensions (atom, photon) per site, site 0 first."""
    return (2, basis.n_photon_levels) * lattice.n_sites


def hermiticity_defect(op: sp.spmatrix) -> float:
    """Largest elementwise |H - H^dagger| entry."""
    diff = (op - op.conjugate().T).tocoo()
    return 0.0 if diff.nnz == 0 else float(np.abs(diff.data).max())
