"""Stochastic mean-field theory: self-consistent order-parameter distributions.

Instead of a single mean-field amplitude, the fluid order parameter of a
disordered lattice is described by a probability density P(alpha) on a
uniform grid.  One iteration:

  1. the boundary field eta = A * sum_{j=1..z} alpha_j of z independent
     neighbours is obtained by raising the characteristic function of
     P(alpha) to the z-th power on a zero-padded FFT grid;
  2. for quadrature nodes over (eta, disorder parameter xi) the dense
     single-site mean-field Hamiltonian is diagonalised in batch and the
     weight is deposited at alpha = |<a>| (the phase of eta rotates out);
  3. the deposit, renormalised, is the next P(alpha).

Iteration stops when the total-variation distance between successive
densities drops below tolerance.  Hopping disorder works on the product
variable phi = A*alpha, whose z-fold convolution gives eta directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.fft import next_fast_len

from . import qinfo
from .hilbert import SiteBasis, site_operators

RINGING_CLIP_BUDGET = 1e-6
DEPOSIT_CLIP_BUDGET = 1e-3


# ---------------------------------------------------------------------------
# Densities on uniform grids


@dataclass
class GridDensity:
    """Probability density sampled on a uniform ascending grid."""

    grid: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.density = np.asarray(self.density, dtype=float)
        if self.grid.ndim != 1 or self.grid.size < 2:
            raise ValueError("grid must be 1-D with at least two points")
        if self.density.shape != self.grid.shape:
            raise ValueError("density and grid shapes differ")

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def masses(self) -> np.ndarray:
        """Trapezoid node masses; they sum to the integral of the density."""
        w = self.density * self.step
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def total(self) -> float:
        return float(self.masses().sum())

    def normalized(self) -> "GridDensity":
        total = self.total()
        if total <= 0:
            raise ValueError("cannot normalise a density with no mass")
        if np.any(self.density < 0):
            raise ValueError("density has negative entries")
        return GridDensity(self.grid, self.density / total)

    def mean(self) -> float:
        return float((self.masses() * self.grid).sum())

    def second_moment(self) -> float:
        return float((self.masses() * self.grid**2).sum())


def density_from_masses(grid: np.ndarray, masses: np.ndarray) -> GridDensity:
    """Invert GridDensity.masses(): node masses back to a trapezoid density."""
    h = grid[1] - grid[0]
    d = masses / h
    d = d.copy()
    d[0] *= 2.0
    d[-1] *= 2.0
    return GridDensity(grid, d)


def uniform_density(grid: np.ndarray) -> GridDensity:
    return GridDensity(grid, np.ones_like(grid)).normalized()


def point_mass(grid: np.ndarray, x: float) -> GridDensity:
    """Unit mass linearly split between the two grid nodes bracketing x."""
    masses = np.zeros_like(grid)
    _scatter(np.array([x]), np.array([1.0]), grid, masses)
    return density_from_masses(grid, masses).normalized()


def tv_distance(p: GridDensity, q: GridDensity) -> float:
    """Total variation distance 0.5 * integral |p - q|."""
    if p.grid.shape != q.grid.shape or not np.allclose(p.grid, q.grid):
        raise ValueError("TV distance requires identical grids")
    return float(0.5 * np.abs(p.masses() - q.masses()).sum())


def _scatter(values, weights, grid, out_masses):
    """Linear-interpolation mass deposit; returns weight clipped at the top."""
    h = grid[1] - grid[0]
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    over = v > grid[-1]
    clipped = float(w[over].sum())
    v = np.clip(v, grid[0], grid[-1])
    pos = (v - grid[0]) / h
    i0 = np.minimum(pos.astype(np.int64), grid.size - 2)
    frac = pos - i0
    np.add.at(out_masses, i0, w * (1.0 - frac))
    np.add.at(out_masses, i0 + 1, w * frac)
    return clipped


# ---------------------------------------------------------------------------
# Spectral convolution of densities


def _convolve_masses(masses: np.ndarray, z: int) -> np.ndarray:
    """z-fold self-convolution of node masses via the characteristic function."""
    n = masses.size
    m = z * (n - 1) + 1
    L = next_fast_len(m)
    out = np.fft.irfft(np.fft.rfft(masses, L) ** z, L)[:m]
    clipped = -out[out < 0].sum()
    if clipped > RINGING_CLIP_BUDGET:
        raise ValueError(f"spectral ringing clipped {clipped:.3g} mass (> {RINGING_CLIP_BUDGET})")
    return np.clip(out, 0.0, None)


def convolve_to_eta(p_alpha: GridDensity, z: int, a_hop: float,
                    eta_max: float | None = None) -> GridDensity:
    """Distribution of eta = A * sum of z i.i.d. draws from P(alpha).

    The output grid spans the full support [z*A*alpha_min, z*A*alpha_max],
    so no aliasing can occur; an explicit smaller ``eta_max`` raises if it
    would cut off more than 1e-6 of the mass.
    """
    if z < 1:
        raise ValueError("z must be >= 1")
    if a_hop <= 0:
        raise ValueError("fixed hopping amplitude must be positive")
    out = _convolve_masses(p_alpha.normalized().masses(), z)
    h_eta = a_hop * p_alpha.step
    eta_grid = a_hop * z * p_alpha.grid[0] + h_eta * np.arange(out.size)
    if eta_max is not None and eta_max < eta_grid[-1]:
        near_edge = float(out[eta_grid >= eta_max - 1e-6 * max(eta_max, 1.0)].sum())
        if near_edge > 1e-6:
            raise ValueError(
                f"eta mass {near_edge:.3g} at or beyond eta_max={eta_max}; increase eta_max"
            )
        keep = eta_grid <= eta_max + 1e-12
        out, eta_grid = out[keep], eta_grid[keep]
    return density_from_masses(eta_grid, out).normalized()


def product_distribution(p_alpha: GridDensity, a_nodes, a_weights,
                         n_half: int | None = None) -> GridDensity:
    """Density of phi = A*alpha for A on quadrature nodes, alpha ~ P(alpha).

    The phi grid is symmetric about zero because Gaussian hopping draws can
    be negative.
    """
    a_nodes = np.asarray(a_nodes, dtype=float)
    a_weights = np.asarray(a_weights, dtype=float)
    n_half = p_alpha.grid.size if n_half is None else n_half
    phi_max = float(np.abs(a_nodes).max() * np.abs(p_alpha.grid).max())
    if phi_max <= 0:
        raise ValueError("degenerate product distribution; all mass at phi=0")
    phi_grid = np.linspace(-phi_max, phi_max, 2 * n_half - 1)
    masses = np.zeros_like(phi_grid)
    vals = np.outer(a_nodes, p_alpha.grid).ravel()
    wts = np.outer(a_weights, p_alpha.normalized().masses()).ravel()
    _scatter(vals, wts, phi_grid, masses)
    return density_from_masses(phi_grid, masses).normalized()


def hopping_disorder_transform(p_alpha: GridDensity, a_mean: float, a_width: float,
                               z: int, n_nodes: int = 64) -> GridDensity:
    """Q(|eta|) for Gaussian hopping disorder via the product variable phi.

    With zero width this reduces exactly to convolve_to_eta.  The signed
    eta distribution is folded onto eta >= 0: the single-site problem only
    depends on |eta| (the phase of eta is a gauge).
    """
    if a_width == 0:
        return convolve_to_eta(p_alpha, z, a_mean)
    a_nodes, a_weights = gaussian_nodes(a_mean, a_width, n_nodes)
    p_phi = product_distribution(p_alpha, a_nodes, a_weights)
    out = _convolve_masses(p_phi.masses(), z)
    h = p_phi.step
    centre = z * (p_phi.grid.size - 1) // 2  # index of eta = 0
    n_pos = out.size - centre
    folded = out[centre:].copy()
    folded[1 : centre + 1] += out[:centre][::-1]
    eta_grid = h * np.arange(n_pos)
    return density_from_masses(eta_grid, folded).normalized()


# ---------------------------------------------------------------------------
# Quadrature


def gaussian_nodes(mean: float, sigma: float, n: int):
    """Gauss-Hermite nodes/weights for a Gaussian measure; exact point for sigma=0."""
    if sigma == 0 or n == 1:
        return np.array([mean]), np.array([1.0])
    t, w = np.polynomial.hermite.hermgauss(n)
    return mean + np.sqrt(2.0) * sigma * t, w / np.sqrt(np.pi)


def quantile_nodes(dist: GridDensity, k: int):
    """k equal-weight nodes at the conditional mean of each CDF stratum.

    Exactly preserves the total mean; point masses are reproduced exactly.
    """
    w = dist.masses()
    cum_w = np.concatenate([[0.0], np.cumsum(w)])
    cum_xw = np.concatenate([[0.0], np.cumsum(w * dist.grid)])
    total = cum_w[-1]
    if total <= 0:
        raise ValueError("distribution has no mass")
    targets = np.linspace(0.0, total, k + 1)
    g = np.interp(targets, cum_w, cum_xw)
    nodes = (g[1:] - g[:-1]) * (k / total)
    return nodes, np.full(k, 1.0 / k)


# ---------------------------------------------------------------------------
# Single-site mean-field problem


@lru_cache(maxsize=8)
def _dense_site_ops(n_max: int) -> dict:
    basis = SiteBasis(n_max)
    ops = site_operators(basis)
    a = ops.a.toarray()
    n_tot = ops.n_op.toarray()
    return {
        "a": a,
        "x": a + a.T,
        "n_ph": (ops.a_dag @ ops.a).toarray(),
        "n_at": (ops.sigma_dag @ ops.sigma).toarray(),
        "exch": (ops.sigma_dag @ ops.a + ops.sigma @ ops.a_dag).toarray(),
        "n_tot": n_tot,
        "n_tot_sq": n_tot @ n_tot,
    }


@dataclass(frozen=True)
class SMFTProblem:
    """Clean parameters, chemical potential, and one Gaussian disorder channel."""

    a_hop: float
    mu: float
    omega: float = 0.0
    delta: float = 0.0
    g: float = 1.0
    target: str = "detuning"
    width: float = 0.0

    def __post_init__(self):
        if self.target not in ("detuning", "hopping", "coupling"):
            raise ValueError(f"unknown disorder target {self.target!r}")
        if self.width < 0:
            raise ValueError("disorder width must be >= 0")


@dataclass(frozen=True)
class SMFTConfig:
    z: int = 4
    n_grid: int = 512
    alpha_max: float = 3.0
    tol_tv: float = 1e-4
    max_iters: int = 200
    n_xi: int = 64
    n_eta: int = 64
    n_max: int = 20
    obs_grid: int = 1024
    damping: float = 0.0

    def __post_init__(self):
        if self.z < 1 or self.n_grid < 8 or self.n_xi < 1 or self.n_eta < 1:
            raise ValueError("invalid SMFT configuration")

    def alpha_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.alpha_max, self.n_grid)


def _param_nodes(problem: SMFTProblem, n_xi: int):
    """Per-node (omega, nu, g) arrays and weights for the on-site disorder."""
    nu_clean = problem.omega + problem.delta
    if problem.width == 0 or problem.target == "hopping":
        return (
            np.array([problem.omega]),
            np.array([nu_clean]),
            np.array([problem.g]),
            np.array([1.0]),
        )
    if problem.target == "detuning":
        # the cavity frequency carries the fluctuation; nu stays clean
        delta_vals, w = gaussian_nodes(problem.delta, problem.width, n_xi)
        omega_vals = nu_clean - delta_vals
        return omega_vals, np.full(n_xi, nu_clean), np.full(n_xi, problem.g), w
    g_vals, w = gaussian_nodes(problem.g, problem.width, n_xi)
    return np.full(n_xi, problem.omega), np.full(n_xi, nu_clean), g_vals, w


def site_ground_alpha(omega: float, nu: float, g: float, mu: float, eta: complex,
                      n_max: int) -> float:
    """|<a>| of one site's mean-field ground state; eta may be complex."""
    ops = _dense_site_ops(n_max)
    H = omega * ops["n_ph"] + nu * ops["n_at"] + g * ops["exch"] - mu * ops["n_tot"]
    H = H.astype(complex) - (eta * ops["a"].T + np.conj(eta) * ops["a"])
    _, v = np.linalg.eigh(H)
    gs = v[:, 0]
    return float(np.abs(np.vdot(gs, ops["a"] @ gs)))


@dataclass
class _StepPayload:
    ground_states: np.ndarray  # (n_nodes, dim)
    weights: np.ndarray
    saturated: float


def _smft_step(p_alpha: GridDensity, problem: SMFTProblem, config: SMFTConfig):
    if problem.target == "hopping" and problem.width > 0:
        q_eta = hopping_disorder_transform(p_alpha, problem.a_hop, problem.width,
                                           config.z, n_nodes=config.n_xi)
    else:
        q_eta = convolve_to_eta(p_alpha, config.z, problem.a_hop)
    eta_nodes, eta_w = quantile_nodes(q_eta, config.n_eta)
    eta_nodes = np.abs(eta_nodes)
    omega_a, nu_a, g_a, xi_w = _param_nodes(problem, config.n_xi)

    ops = _dense_site_ops(config.n_max)
    h_site = (
        omega_a[:, None, None] * ops["n_ph"]
        + nu_a[:, None, None] * ops["n_at"]
        + g_a[:, None, None] * ops["exch"]
        - problem.mu * ops["n_tot"]
    )
    batch = h_site[None, :, :, :] - eta_nodes[:, None, None, None] * ops["x"]
    dim = batch.shape[-1]
    batch = batch.reshape(-1, dim, dim)
    _, vecs = np.linalg.eigh(batch)
    gs = vecs[:, :, 0]
    weights = np.outer(eta_w, xi_w).ravel()

    alpha_vals = np.abs(np.einsum("ni,ij,nj->n", gs, ops["a"], gs))
    masses = np.zeros_like(p_alpha.grid)
    saturated = _scatter(alpha_vals, weights, p_alpha.grid, masses)
    if saturated > DEPOSIT_CLIP_BUDGET:
        raise ValueError(
            f"{saturated:.3g} of the alpha mass saturated the grid; increase alpha_max"
        )
    p_next = density_from_masses(p_alpha.grid, masses).normalized()
    return p_next, _StepPayload(gs, weights, saturated)


def smft_step(p_alpha: GridDensity, problem: SMFTProblem, config: SMFTConfig) -> GridDensity:
    """One fixed-point iteration of the order-parameter distribution."""
    p_next, _ = _smft_step(p_alpha, problem, config)
    return p_next


@dataclass
class SMFTResult:
    p_alpha: GridDensity
    alpha_mean: float
    avg_state: np.ndarray
    distributions: dict
    mean_n: float
    var_n: float
    mean_z: float
    ent_avg_state: float
    iterations: int
    converged: bool
    oscillating: bool
    tv_history: list = field(default_factory=list)
    saturated_mass: float = 0.0


def _observables(payload: _StepPayload, p_alpha: GridDensity, config: SMFTConfig) -> dict:
    ops = _dense_site_ops(config.n_max)
    gs, w = payload.ground_states, payload.weights
    n_ph_levels = config.n_max + 1

    n_vals = np.einsum("ni,ij,nj->n", gs, ops["n_tot"], gs)
    n2_vals = np.einsum("ni,ij,nj->n", gs, ops["n_tot_sq"], gs)
    z_vals = np.einsum("ni,ij,nj->n", gs, ops["n_at"], gs)
    s = np.linalg.svd(gs.reshape(-1, 2, n_ph_levels), compute_uv=False)
    e_vals = np.clip(0.5 * (s.sum(axis=1) ** 2 - 1.0), 0.0, None)

    grids = {
        "n": np.linspace(0.0, float(config.n_max + 1), config.obs_grid),
        "z": np.linspace(0.0, 1.0, config.obs_grid),
        "ent": np.linspace(0.0, 0.6, config.obs_grid),
    }
    dists = {}
    for key, vals in (("n", n_vals), ("z", z_vals), ("ent", e_vals)):
        masses = np.zeros_like(grids[key])
        _scatter(vals, w, grids[key], masses)
        dists[key] = density_from_masses(grids[key], masses).normalized()
    dists["alpha"] = p_alpha

    avg_state = np.einsum("n,ni,nj->ij", w, gs, gs)
    mean_n = float(w @ n_vals)
    var_n = float(w @ n2_vals) - mean_n**2
    return {
        "dists": dists,
        "avg_state": avg_state,
        "mean_n": mean_n,
        "var_n": var_n,
        "mean_z": float(w @ z_vals),
        "ent_avg": qinfo.negativity(avg_state, (2, n_ph_levels), (0,)),
    }


def smft_solve(problem: SMFTProblem, config: SMFTConfig,
               initial: GridDensity | None = None) -> SMFTResult:
    """Iterate the distribution map to its fixed point and summarise the site.

    The initial density defaults to uniform on [0, alpha_max]; starting
    from a point mass at alpha = 0 would be a (trivial) fixed point and is
    deliberately avoided.
    """
    grid = config.alpha_grid()
    p = initial.normalized() if initial is not None else uniform_density(grid)
    if p.grid.shape != grid.shape or not np.allclose(p.grid, grid):
        raise ValueError("initial density must live on the configured alpha grid")

    tv_hist: list = []
    payload = None
    converged = False
    for _ in range(config.max_iters):
        p_next, payload = _smft_step(p, problem, config)
        if config.damping > 0:
            blended = (1.0 - config.damping) * p_next.density + config.damping * p.density
            p_next = GridDensity(grid, blended).normalized()
        tv = tv_distance(p, p_next)
        tv_hist.append(tv)
        p = p_next
        if tv < config.tol_tv:
            converged = True
            break

    oscillating = False
    if not converged and len(tv_hist) >= 4:
        tail = tv_hist[-4:]
        if abs(tail[-1] - tail[-3]) < 1e-3 * max(tail[-1], 1e-30) and \
           abs(tail[-2] - tail[-4]) < 1e-3 * max(tail[-2], 1e-30):
            oscillating = True

    obs = _observables(payload, p, config)
    return SMFTResult(
        p_alpha=p,
        alpha_mean=p.mean(),
        avg_state=obs["avg_state"],
        distributions=obs["dists"],
        mean_n=obs["mean_n"],
        var_n=obs["var_n"],
        mean_z=obs["mean_z"],
        ent_avg_state=obs["ent_avg"],
        iterations=len(tv_hist),
        converged=converged,
        oscillating=oscillating,
        tv_history=tv_hist,
        saturated_mass=payload.saturated if payload else 0.0,
    )
