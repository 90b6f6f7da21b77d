"""Jaynes-Cummings-Hubbard Hamiltonian assembly and polariton helpers.

All energies are dimensionless multiples of a reference coupling g_ref.
The site term is

    S_i = omega_i a_i^dag a_i + nu_i sigma_i^dag sigma_i
          + g_i (sigma_i^dag a_i + sigma_i a_i^dag),

and photon tunnelling on edge (i, j) enters as
-A_(i,j) (a_i^dag a_j + a_i a_j^dag).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .hilbert import (
    LatticeSpec,
    SiteBasis,
    embed,
    excitation_numbers,
    site_operators,
)


@dataclass(frozen=True)
class JCHParams:
    """Per-site (omega, nu, g) and per-edge hopping A; one disorder draw = one instance."""

    omega: np.ndarray
    nu: np.ndarray
    g: np.ndarray
    a: np.ndarray
    mu: float = 0.0

    def __post_init__(self):
        for name in ("omega", "nu", "g", "a"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))

    @property
    def delta(self) -> np.ndarray:
        """Per-site detuning nu_i - omega_i (read-only, derived)."""
        return self.nu - self.omega

    @property
    def n_sites(self) -> int:
        return self.omega.size

    @classmethod
    def uniform(cls, lattice: LatticeSpec, omega: float = 0.0, delta: float = 0.0,
                g: float = 1.0, a: float = 0.0, mu: float = 0.0) -> "JCHParams":
        """Homogeneous parameters on a given lattice; nu derived from omega + delta."""
        n = lattice.n_sites
        return cls(
            omega=np.full(n, omega),
            nu=np.full(n, omega + delta),
            g=np.full(n, g),
            a=np.full(lattice.n_edges, a),
            mu=mu,
        )

    def with_edges(self, a: np.ndarray) -> "JCHParams":
        return replace(self, a=np.asarray(a, dtype=float))


def _check_shapes(params: JCHParams, lattice: LatticeSpec):
    n, m = lattice.n_sites, lattice.n_edges
    if not (params.omega.size == params.nu.size == params.g.size == n):
        raise ValueError(
            f"site parameter arrays must have length {n}, got "
            f"omega={params.omega.size}, nu={params.nu.size}, g={params.g.size}"
        )
    if params.a.size != m:
        raise ValueError(f"hopping array must have length {m}, got {params.a.size}")


def build_hamiltonian(params: JCHParams, basis: SiteBasis, lattice: LatticeSpec) -> sp.csr_matrix:
    """Assemble the full lattice Hamiltonian (no chemical potential term).

    Returns a real csr matrix; hermiticity follows from the symmetric
    construction and is asserted in tests rather than re-checked here.
    """
    _check_shapes(params, lattice)
    ops = site_operators(basis)
    dim = basis.local_dim**lattice.n_sites
    H = sp.csr_matrix((dim, dim))

    for i in range(lattice.n_sites):
        local = (
            params.omega[i] * (ops.a_dag @ ops.a)
            + params.nu[i] * (ops.sigma_dag @ ops.sigma)
            + params.g[i] * (ops.sigma_dag @ ops.a + ops.sigma @ ops.a_dag)
        )
        H = H + embed(local, i, basis, lattice)

    for e, (i, j) in enumerate(lattice.edges):
        hop = embed(ops.a_dag, i, basis, lattice) @ embed(ops.a, j, basis, lattice)
        H = H - params.a[e] * (hop + hop.T)

    return H.tocsr()


def apply_chemical_potential(H: sp.spmatrix, mu: float, basis: SiteBasis,
                             lattice: LatticeSpec) -> sp.csr_matrix:
    """Grand-canonical shift H -> H - mu * sum_i N_i."""
    n_tot = excitation_numbers(basis, lattice).astype(float)
    return (H - mu * sp.diags(n_tot)).tocsr()


def polariton_state(n: int, branch: str, delta: float, g: float) -> tuple:
    """Dressed-state amplitudes (on |g,n>, on |e,n-1>) of the n-excitation doublet.

    The pair diagonalises the 2x2 block [[0, g sqrt(n)], [g sqrt(n), delta]]
    written on (|g,n>, |e,n-1>), energies measured from n*omega.  Branch '-'
    is the lower eigenvector, '+' the upper; the mixing angle is fixed by
    2*theta = atan2(2 g sqrt(n), delta) in (0, pi), which makes '-'
    photon-like for delta -> +inf and atom-like for delta -> -inf,
    continuously through theta = pi/4 at resonance.
    """
    if n < 1:
        raise ValueError("dressed pairs exist only for n >= 1")
    if g <= 0:
        raise ValueError("coupling g must be positive")
    theta = 0.5 * np.arctan2(2.0 * g * np.sqrt(n), delta)
    if branch == "+":
        return (np.sin(theta), np.cos(theta))
    if branch == "-":
        return (np.cos(theta), -np.sin(theta))
    raise ValueError(f"branch must be '+' or '-', got {branch!r}")


def polariton_energy(n: int, branch: str, delta: float, g: float, omega: float = 0.0) -> float:
    """Energy of |n,branch>: n*omega + delta/2 +/- sqrt(delta^2/4 + n g^2)."""
    if n < 1:
        raise ValueError("dressed pairs exist only for n >= 1")
    chi = np.hypot(0.5 * delta, g * np.sqrt(n))
    sign = {"+": 1.0, "-": -1.0}[branch]
    return n * omega + 0.5 * delta + sign * chi
