"""Experiment configuration: strict schemas, dotted overrides, validation.

Configs are JSON documents mirroring the dataclasses below.  Parsing is
strict: unknown keys are rejected with their dotted path so that typos
cannot silently fall back to defaults.  Values are dimensionless multiples
of the reference coupling g_ref; chemical potentials are quoted relative
to the clean cavity frequency omega_c.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields, is_dataclass

EXPERIMENTS = (
    "clean-two-site",
    "mf-phase-diagram",
    "disorder-ensemble",
    "smft-solve",
    "smft-sweep",
)

DISORDER_TARGETS = ("detuning", "hopping", "coupling")


class ConfigError(ValueError):
    """Configuration could not be parsed or failed validation."""


@dataclass
class SMFTSettings:
    """Numerical controls shared by the smft-solve and smft-sweep experiments."""

    z: int = 4
    n_grid: int = 512
    alpha_max: float = 3.0
    tol_tv: float = 1e-4
    max_iters: int = 200
    n_xi: int = 64
    n_eta: int = 64
    n_max: int = 20


@dataclass
class CleanTwoSiteSettings:
    """Ground-state negativity maps of the two-site system at unit filling."""

    n_max: int = 3
    n_a: int = 60
    n_delta: int = 60
    log10_a_range: tuple = (-2.0, 2.0)
    delta_range: tuple = (-5.0, 10.0)


@dataclass
class MFPhaseDiagramSettings:
    """Cluster mean-field sweep over chemical potential and hopping."""

    cluster_sites: int = 2
    n_max: int = 6
    detuning: float = 0.0
    mu_range: tuple = (-1.0, 0.0)
    n_mu: int = 21
    log10_a_range: tuple = (-3.0, 0.0)
    n_a: int = 21
    alpha_max: float = 3.0
    n_scan: int = 31
    z: int = 2


@dataclass
class DisorderEnsembleSettings:
    """Two-site Gaussian-disorder ensembles at fixed excitation number.

    The clean values double as the disorder means: the target family
    fluctuates around its clean value with each width in ``widths``.
    """

    n_sites: int = 2
    n_max: int = 3
    target: str = "detuning"
    detuning: float = 5.0
    coupling: float = 1.0
    hopping: float = 1.0
    widths: tuple = (0.01, 0.05, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 30.0)
    n_samples: int = 4000
    n_bins: int = 40


@dataclass
class SMFTSolveSettings:
    """Single stochastic mean-field fixed point."""

    mu_minus_omega: float = -1.0
    log10_a: float = -1.9
    detuning: float = 0.0
    coupling: float = 1.0
    target: str = "detuning"
    width: float = 0.0


@dataclass
class SMFTSweepSettings:
    """Either a disorder-width sweep at one (mu, A) point or a (mu, A) map."""

    kind: str = "delta"
    mu_minus_omega: float = -1.0
    log10_a: float = -1.9
    detuning: float = 0.0
    coupling: float = 1.0
    target: str = "detuning"
    widths: tuple = (0.0, 0.05, 0.1, 0.15, 0.2)
    width: float = 0.1
    mu_range: tuple = (-1.0, 0.0)
    n_mu: int = 11
    log10_a_range: tuple = (-3.0, -1.0)
    n_a: int = 11


@dataclass
class ExperimentConfig:
    experiment: str = ""
    seed: int = 1234
    workers: int = 0
    out: str = ""
    make_figures: bool = True
    clean_two_site: CleanTwoSiteSettings = field(default_factory=CleanTwoSiteSettings)
    mf_phase_diagram: MFPhaseDiagramSettings = field(default_factory=MFPhaseDiagramSettings)
    disorder_ensemble: DisorderEnsembleSettings = field(default_factory=DisorderEnsembleSettings)
    smft_solve: SMFTSolveSettings = field(default_factory=SMFTSolveSettings)
    smft_sweep: SMFTSweepSettings = field(default_factory=SMFTSweepSettings)
    smft: SMFTSettings = field(default_factory=SMFTSettings)


def _coerce(value, typ, path):
    if is_dataclass(typ):
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected an object, got {type(value).__name__}")
        return _from_dict(typ, value, path)
    if typ is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean, got {value!r}")
        return value
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if typ is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if typ is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list of numbers, got {value!r}")
        try:
            return tuple(float(v) for v in value)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: expected a list of numbers, got {value!r}") from None
    raise ConfigError(f"{path}: unsupported config field type {typ}")


def _from_dict(cls, data: dict, path: str = ""):
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        where = f"{path}." if path else ""
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(where + k for k in unknown))}")
    kwargs = {}
    for name, f in known.items():
        if name not in data:
            continue
        sub_path = f"{path}.{name}" if path else name
        typ = f.type if not isinstance(f.type, str) else _resolve_type(f.type)
        kwargs[name] = _coerce(data[name], typ, sub_path)
    return cls(**kwargs)


def _resolve_type(name: str):
    return {
        "int": int,
        "float": float,
        "str": str,
        "bool": bool,
        "tuple": tuple,
        "SMFTSettings": SMFTSettings,
        "CleanTwoSiteSettings": CleanTwoSiteSettings,
        "MFPhaseDiagramSettings": MFPhaseDiagramSettings,
        "DisorderEnsembleSettings": DisorderEnsembleSettings,
        "SMFTSolveSettings": SMFTSolveSettings,
        "SMFTSweepSettings": SMFTSweepSettings,
    }[name]


def parse_config(data: dict) -> ExperimentConfig:
    """Strictly parse a config mapping; unknown keys or bad types raise."""
    cfg = _from_dict(ExperimentConfig, data)
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(
            f"experiment must be one of {', '.join(EXPERIMENTS)}; got {cfg.experiment!r}"
        )
    return cfg


def load_config_file(path: str) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: line {exc.lineno}: {exc.msg}") from None


def default_config(experiment: str) -> dict:
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; try list-experiments")
    data = dataclasses.asdict(ExperimentConfig())
    data["experiment"] = experiment
    return data


def apply_overrides(data: dict, overrides) -> dict:
    """Apply dotted-key overrides like smft.z=4; values parsed as JSON."""
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} must have the form key.path=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        parts = key.split(".")
        for p in parts[:-1]:
            nxt = node.setdefault(p, {})
            if not isinstance(nxt, dict):
                raise ConfigError(f"override {key!r}: {p} is not a section")
            node = nxt
        node[parts[-1]] = value
    return data


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return dataclasses.asdict(cfg)


def _dim_cost(n_max: int, n_sites: int):
    dim = (2 * (n_max + 1)) ** n_sites
    return dim, float(dim) ** 3


def validate(cfg: ExperimentConfig):
    """Dry-run check: (problems, warnings, cost_estimate).

    The cost model is grid_points x dim^3 elementary operations per dense
    diagonalisation; anything above 1e14 or a local space above 1e5 states
    is flagged as beyond a desk-scale budget.
    """
    problems: list = []
    warnings: list = []
    cost = 0.0

    if cfg.workers < 0:
        problems.append("workers must be >= 0")
    if cfg.seed < 0:
        problems.append("seed must be a non-negative integer")

    if cfg.experiment == "clean-two-site":
        s = cfg.clean_two_site
        if s.n_max < 1:
            problems.append("clean_two_site.n_max must be >= 1")
        if s.n_a < 1 or s.n_delta < 1:
            problems.append("clean_two_site grid sizes must be >= 1")
        if len(s.log10_a_range) != 2 or len(s.delta_range) != 2:
            problems.append("clean_two_site ranges must be [lo, hi]")
        dim, c = _dim_cost(s.n_max, 2)
        cost = s.n_a * s.n_delta * c
    elif cfg.experiment == "mf-phase-diagram":
        s = cfg.mf_phase_diagram
        if s.cluster_sites < 1:
            problems.append("mf_phase_diagram.cluster_sites must be >= 1")
        if s.n_scan < 3:
            problems.append("mf_phase_diagram.n_scan must be >= 3")
        if s.alpha_max <= 0:
            problems.append("mf_phase_diagram.alpha_max must be > 0")
        dim, c = _dim_cost(s.n_max, s.cluster_sites)
        if dim > 1e5:
            warnings.append(
                f"local space dimension {dim} = (2*(n_max+1))^sites exceeds desk-scale budget"
            )
        cost = s.n_mu * s.n_a * s.n_scan * c
    elif cfg.experiment == "disorder-ensemble":
        s = cfg.disorder_ensemble
        if s.target not in DISORDER_TARGETS:
            problems.append(f"disorder_ensemble.target must be one of {DISORDER_TARGETS}")
        if any(w < 0 for w in s.widths):
            problems.append("disorder_ensemble.widths must be >= 0")
        if s.n_samples < 1:
            problems.append("disorder_ensemble.n_samples must be >= 1")
        if s.n_sites < 2:
            problems.append("disorder_ensemble.n_sites must be >= 2")
        dim, c = _dim_cost(s.n_max, s.n_sites)
        cost = len(s.widths) * s.n_samples * c
    elif cfg.experiment in ("smft-solve", "smft-sweep"):
        s = cfg.smft_solve if cfg.experiment == "smft-solve" else cfg.smft_sweep
        if s.target not in DISORDER_TARGETS:
            problems.append(f"{cfg.experiment}: target must be one of {DISORDER_TARGETS}")
        widths = (s.width,) if cfg.experiment == "smft-solve" else tuple(s.widths) + (s.width,)
        if any(w < 0 for w in widths):
            problems.append(f"{cfg.experiment}: disorder widths must be >= 0")
        n = cfg.smft
        if n.z < 1 or n.n_grid < 8 or n.n_xi < 1 or n.n_eta < 1 or n.alpha_max <= 0:
            problems.append("smft numerical settings out of range")
        dim, c = _dim_cost(n.n_max, 1)
        points = 1
        if cfg.experiment == "smft-sweep":
            if s.kind not in ("delta", "grid"):
                problems.append("smft_sweep.kind must be 'delta' or 'grid'")
            points = len(s.widths) if s.kind == "delta" else s.n_mu * s.n_a
        cost = points * n.max_iters * n.n_xi * n.n_eta * c

    if cost > 1e14:
        warnings.append(f"estimated cost {cost:.2e} elementary ops exceeds desk-scale budget")
    return problems, warnings, cost
