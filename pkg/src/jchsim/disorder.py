"""Small-system disorder statistics: Gaussian ensembles of exact ground states.

One disorder realization replaces the targeted parameter family (detuning,
hopping or coupling) by independent Gaussian draws; every realization is
solved exactly in the fixed-excitation sector (n_total = n_sites) and the
ensemble is summarised by renormalised histograms, the average state, and
the average entanglement.

Draws are counter-based: sample k of a run seeds its own generator from
(seed, k), so results are independent of execution order and worker count,
and the underlying standard normals are shared across disorder widths
(common random numbers).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import qinfo
from .hilbert import LatticeSpec, SiteBasis, embed, site_operators, subsystem_dims
from .model import JCHParams

TARGETS = ("detuning", "hopping", "coupling")

OBSERVABLE_KEYS = ("n1", "var_n1", "z_total", "ss_neg", "aa_neg", "insite_neg")


@dataclass(frozen=True)
class DisorderSpec:
    """Which parameter family fluctuates, with Gaussian mean and width delta."""

    target: str
    mean: float
    delta: float
    n_samples: int
    seed: int

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}, got {self.target!r}")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")


def sample_realization(base: JCHParams, spec: DisorderSpec, sample_index: int,
                       lattice: LatticeSpec) -> JCHParams:
    """One Gaussian realization; reproducible given (spec.seed, sample_index).

    Detuning disorder moves the cavity frequency only (nu is held fixed and
    omega_i = nu_i - Delta_i), so the drawn detunings have mean spec.mean
    and width spec.delta.  Negative draws of g or A are kept as drawn: the
    spectrum is invariant under g -> -g and, on bipartite lattices, under
    A -> -A.
    """
    rng = np.random.default_rng([int(spec.seed), int(sample_index)])
    if spec.target == "hopping":
        xi = rng.standard_normal(lattice.n_edges)
        return replace(base, a=spec.mean + spec.delta * xi)
    xi = rng.standard_normal(lattice.n_sites)
    values = spec.mean + spec.delta * xi
    if spec.target == "detuning":
        return replace(base, omega=base.nu - values)
    return replace(base, g=values)


@dataclass
class EnsembleStats:
    """Per-sample records plus the accumulated average state of the run."""

    records: dict
    avg_state: np.ndarray
    dims: tuple
    n_failed: int
    n_samples: int

    @property
    def avg_entanglement(self) -> float:
        """Mean per-realization site-site negativity (ensemble average)."""
        return float(np.mean(self.records["ss_neg"]))

    @property
    def ent_of_average(self) -> float:
        """Site-site negativity of the averaged (mixed) state."""
        n_factors = len(self.dims)
        partition = tuple(range(n_factors // 2))
        return qinfo.negativity(self.avg_state, self.dims, partition)

    def histogram(self, key: str, n_bins: int = 40, value_range=None):
        """Renormalised histogram (centers, probabilities summing to 1)."""
        values = self.records[key]
        counts, edges = np.histogram(values, bins=n_bins, range=value_range)
        total = counts.sum()
        probs = counts / total if total else counts.astype(float)
        centers = 0.5 * (edges[1:] + edges[:-1])
        return centers, probs


def default_ranges(lattice: LatticeSpec, n_total: int) -> dict:
    """Physical histogram ranges for each recorded observable."""
    return {
        "n1": (0.0, float(n_total)),
        "var_n1": (0.0, float(n_total)),
        "z_total": (0.0, float(lattice.n_sites)),
        "ss_neg": (0.0, 1.0),
        "aa_neg": (0.0, 0.5),
        "insite_neg": (0.0, 0.5),
    }


class _SectorWorkspace:
    """Sector-projected dense Hamiltonian blocks, built once per lattice.

    H is linear in (omega_i, nu_i, g_i, A_e), so one realization is a
    weighted sum of fixed blocks; with the sector restriction this reduces
    every solve to a small dense eigenproblem.
    """

    def __init__(self, basis: SiteBasis, lattice: LatticeSpec, n_total: int):
        from .hilbert import sector_basis

        self.basis, self.lattice = basis, lattice
        self.idx = sector_basis(n_total, basis, lattice)
        if self.idx.size == 0:
            raise ValueError(f"sector n_total={n_total} is empty")
        ops = site_operators(basis)
        n_ph = (ops.a_dag @ ops.a).tocsr()
        n_at = (ops.sigma_dag @ ops.sigma).tocsr()
        exch = (ops.sigma_dag @ ops.a + ops.sigma @ ops.a_dag).tocsr()

        def proj(op):
            return np.asarray(op.tocsr()[self.idx][:, self.idx].todense())

        self.ph_blocks = [proj(embed(n_ph, s, basis, lattice)) for s in range(lattice.n_sites)]
        self.at_blocks = [proj(embed(n_at, s, basis, lattice)) for s in range(lattice.n_sites)]
        self.g_blocks = [proj(embed(exch, s, basis, lattice)) for s in range(lattice.n_sites)]
        hop_blocks = []
        for i, j in lattice.edges:
            hop = embed(ops.a_dag, i, basis, lattice) @ embed(ops.a, j, basis, lattice)
            hop_blocks.append(proj((hop + hop.T).tocsr()))
        self.hop_blocks = hop_blocks
        n0 = embed(ops.n_op, 0, basis, lattice)
        self.n0 = proj(n0)
        self.n0_sq = proj((n0 @ n0).tocsr())
        self.z_tot = sum(self.at_blocks)
        self.dim_full = basis.local_dim**lattice.n_sites

    def assemble(self, params: JCHParams) -> np.ndarray:
        H = np.zeros_like(self.ph_blocks[0])
        for s in range(self.lattice.n_sites):
            H += params.omega[s] * self.ph_blocks[s]
            H += params.nu[s] * self.at_blocks[s]
            H += params.g[s] * self.g_blocks[s]
        for e in range(self.lattice.n_edges):
            H -= params.a[e] * self.hop_blocks[e]
        return H

    def embed_full(self, vec: np.ndarray) -> np.ndarray:
        full = np.zeros(self.dim_full)
        full[self.idx] = vec
        return full


def run_ensemble(base: JCHParams, spec: DisorderSpec, basis: SiteBasis,
                 lattice: LatticeSpec, n_total: int | None = None,
                 max_failure_fraction: float = 0.01) -> EnsembleStats:
    """Solve every realization in the fixed sector and accumulate statistics.

    Individual solver failures are skipped and counted; the run aborts if
    more than ``max_failure_fraction`` of the samples fail.
    """
    if n_total is None:
        n_total = lattice.n_sites
    dims = subsystem_dims(basis, lattice)
    ws = _SectorWorkspace(basis, lattice, n_total)

    keys = OBSERVABLE_KEYS + ("energy", "degenerate")
    records = {k: np.zeros(spec.n_samples) for k in keys}
    avg_state = np.zeros((ws.dim_full, ws.dim_full))
    n_failed = 0
    kept = np.ones(spec.n_samples, dtype=bool)

    for k in range(spec.n_samples):
        params = sample_realization(base, spec, k, lattice)
        try:
            w, v = np.linalg.eigh(ws.assemble(params))
        except np.linalg.LinAlgError:
            n_failed += 1
            kept[k] = False
            continue
        vec = v[:, 0]
        gap = w[1] - w[0] if w.size > 1 else np.inf
        psi = ws.embed_full(vec)
        n1 = float(vec @ ws.n0 @ vec)
        records["n1"][k] = n1
        records["var_n1"][k] = float(vec @ ws.n0_sq @ vec) - n1**2
        records["z_total"][k] = float(vec @ ws.z_tot @ vec)
        records["ss_neg"][k] = qinfo.site_site_negativity(psi, 0, 1, basis, lattice)
        records["aa_neg"][k] = qinfo.atom_atom_negativity(psi, 0, 1, basis, lattice)
        records["insite_neg"][k] = qinfo.in_site_entanglement(psi, 0, basis, lattice)
        records["energy"][k] = float(w[0])
        records["degenerate"][k] = float(gap < 1e-10)
        avg_state += np.outer(psi, psi)

    if n_failed > max_failure_fraction * spec.n_samples:
        raise RuntimeError(
            f"{n_failed}/{spec.n_samples} realizations failed to solve "
            f"(> {max_failure_fraction:.0%} budget)"
        )
    n_ok = spec.n_samples - n_failed
    avg_state /= n_ok
    records = {k: v[kept] for k, v in records.items()}
    return EnsembleStats(records=records, avg_state=avg_state, dims=dims,
                         n_failed=n_failed, n_samples=spec.n_samples)


def average_entanglement(negativities) -> float:
    """Arithmetic mean of per-realization entanglement values."""
    return float(np.mean(np.asarray(negativities)))


def entanglement_of_average(avg_state: np.ndarray, dims, partition_a) -> float:
    """Negativity of the ensemble-averaged (mixed) state."""
    return qinfo.negativity(avg_state, dims, partition_a)
