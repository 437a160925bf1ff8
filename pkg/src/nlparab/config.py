"""Run-configuration parsing and validation.

Configs are flat sectioned key = value text (INI syntax).  Keys carry their
symbol in the name (radius_r, time_t0, ...), unknown sections or keys are
hard errors, and every numeric range is validated before any computation
starts: s in (0,1), lambda >= 1, r < R/2, alpha in (1, 2^(2s)),
theta, delta in (0,1), exterior decay gamma < 2s.
"""

import configparser
import hashlib
from dataclasses import dataclass
from typing import Optional

from .analysis import EnsembleSpec, default_alpha
from .errors import ConfigError
from .exterior import (ExteriorData, constant_exterior, heat_kernel_exterior,
                       negative_annulus_exterior, power_decay_exterior,
                       zero_exterior)
from .geometry import Grid
from .kernels import FAMILIES, MODULATIONS, KernelSpec
from .solver import SCHEMES

COMMANDS = ("solve", "tail", "verify", "estimate", "oracle", "lemma-check")

_KNOWN = {
    "run": {"seed", "jobs"},
    "kernel": {"family", "order_s", "ellipticity_lambda", "multiple",
               "modulation"},
    "grid": {"dim_n", "half_width_L", "nodes_N"},
    "time": {"t_start", "t_end", "dt", "scheme"},
    "exterior": {"generator", "constant_value", "coefficient",
                 "decay_exponent_gamma", "mass_M", "annulus_inner",
                 "annulus_outer", "time_offset"},
    "geometry": {"center_x0", "radius_r", "radius_R", "time_t0", "alpha",
                 "theta", "delta", "tail_t1", "eps"},
    "ensemble": {"count", "initial_kind", "bump_count_min", "bump_count_max",
                 "amplitude_min", "amplitude_max", "exterior_kind",
                 "exterior_coefficient_min", "exterior_coefficient_max",
                 "exterior_decay_min", "exterior_decay_max",
                 "negative_mass"},
    "output": {"directory", "formats"},
}


@dataclass(frozen=True)
class RunConfig:
    command: Optional[str]
    seed: int
    jobs: int
    kernel: KernelSpec
    grid: Grid
    t_start: float
    t_end: float
    dt: float
    scheme: str
    exterior: ExteriorData
    exterior_kind: str
    x0: float
    r: float
    big_r: float
    t0: float
    alpha: float
    theta: float
    delta: float
    tail_t1: float
    eps: float
    out_dir: str
    formats: tuple
    ensemble: EnsembleSpec
    sha256: str
    text: str


class _Reader:
    def __init__(self, parser: configparser.ConfigParser):
        self.parser = parser

    def get(self, section, key, cast, default=None, required=False):
        if not self.parser.has_option(section, key):
            if required:
                raise ConfigError(f"missing required key [{section}] {key}")
            return default
        raw = self.parser.get(section, key)
        try:
            if cast is bool:
                low = raw.strip().lower()
                if low not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(raw)
                return low in ("true", "1", "yes")
            return cast(raw)
        except ValueError as exc:
            raise ConfigError(
                f"key [{section}] {key} = {raw!r} is not a valid "
                f"{cast.__name__}") from exc


def _reject_unknown(parser: configparser.ConfigParser) -> None:
    for section in parser.sections():
        if section not in _KNOWN:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser.options(section):
            if key not in _KNOWN[section]:
                raise ConfigError(
                    f"unknown key {key!r} in section [{section}]; "
                    f"known keys: {sorted(_KNOWN[section])}")


def parse_config(text: str, command: Optional[str] = None) -> RunConfig:
    """Parse and validate configuration text into a RunConfig."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case sensitive (radius_r vs radius_R)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    _reject_unknown(parser)
    rd = _Reader(parser)

    seed = rd.get("run", "seed", int, default=0)
    jobs = rd.get("run", "jobs", int, default=1)
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")

    family = rd.get("kernel", "family", str, default="fractional_laplacian")
    if family not in FAMILIES:
        raise ConfigError(f"kernel family {family!r} not in {FAMILIES}")
    modulation_name = rd.get("kernel", "modulation", str, default="sin_cos")
    if modulation_name not in MODULATIONS:
        raise ConfigError(f"unknown modulation {modulation_name!r}; "
                          f"registry has {sorted(MODULATIONS)}")
    s = rd.get("kernel", "order_s", float, default=0.5)
    if not 0.0 < s < 1.0:
        raise ConfigError(f"order_s must lie in (0, 1), got {s}")
    lam = rd.get("kernel", "ellipticity_lambda", float, default=None)
    if lam is not None and lam < 1.0:
        raise ConfigError(f"ellipticity_lambda must be >= 1, got {lam}")
    dim = rd.get("grid", "dim_n", int, default=1)
    if dim != 1:
        raise ConfigError("runs are 1D; dim_n must be 1 "
                          "(2D support covers kernels/lemma snapshots only)")
    if family == "fractional_laplacian":
        kernel = KernelSpec.fractional_laplacian(dim, s)
    elif family == "constant_multiple":
        multiple = rd.get("kernel", "multiple", float, default=1.0)
        kernel = KernelSpec.constant_multiple(dim, s, multiple, lam=lam)
    else:
        kernel = KernelSpec.modulated(dim, s, lam if lam is not None else 2.0,
                                      MODULATIONS[modulation_name])

    half_width = rd.get("grid", "half_width_L", float, default=4.0)
    nodes = rd.get("grid", "nodes_N", int, default=256)
    grid = Grid(dim=dim, half_width=half_width, nodes_per_axis=nodes)

    t_start = rd.get("time", "t_start", float, default=0.0)
    t_end = rd.get("time", "t_end", float, default=2.0)
    dt = rd.get("time", "dt", float, default=1.0 / 64.0)
    scheme = rd.get("time", "scheme", str, default="implicit_euler")
    if scheme not in SCHEMES:
        raise ConfigError(f"scheme {scheme!r} not in {SCHEMES}")
    if dt <= 0 or t_end <= t_start:
        raise ConfigError(f"need dt > 0 and t_end > t_start, got dt={dt}, "
                          f"span=({t_start}, {t_end})")

    ext_kind = rd.get("exterior", "generator", str, default="zero")
    exterior = _build_exterior(rd, ext_kind, s)

    x0 = rd.get("geometry", "center_x0", float, default=0.0)
    r = rd.get("geometry", "radius_r", float, default=0.5)
    big_r = rd.get("geometry", "radius_R", float, default=1.5)
    t0 = rd.get("geometry", "time_t0", float, default=0.5 * (t_start + t_end))
    alpha = rd.get("geometry", "alpha", float, default=None)
    theta = rd.get("geometry", "theta", float, default=0.5)
    delta = rd.get("geometry", "delta", float, default=0.5)
    eps = rd.get("geometry", "eps", float, default=0.5)
    tail_t1 = rd.get("geometry", "tail_t1", float,
                     default=t0 - 0.5 * r ** (2.0 * s))
    if r <= 0:
        raise ConfigError(f"radius_r must be positive, got {r}")
    if not r < big_r / 2.0:
        raise ConfigError(f"radius_r < radius_R / 2 required "
                          f"(got r={r}, R={big_r})")
    alpha_hi = 2.0 ** (2.0 * s)
    if alpha is None:
        alpha = default_alpha(s)
    if not 1.0 < alpha < alpha_hi:
        raise ConfigError(
            f"alpha = {alpha} outside the admissible interval "
            f"(1, 2^(2s)) = (1, {alpha_hi:g})")
    for name, val in (("theta", theta), ("delta", delta)):
        if not 0.0 < val < 1.0:
            raise ConfigError(f"{name} must lie in (0, 1), got {val}")
    if eps <= 0:
        raise ConfigError(f"eps must be positive, got {eps}")

    out_dir = rd.get("output", "directory", str, default="out")
    formats = tuple(f.strip() for f in
                    rd.get("output", "formats", str,
                           default="csv,binary").split(",") if f.strip())
    for fmt in formats:
        if fmt not in ("csv", "binary"):
            raise ConfigError(f"unknown output format {fmt!r}")

    ens = EnsembleSpec(
        count=rd.get("ensemble", "count", int, default=20),
        initial_kind=rd.get("ensemble", "initial_kind", str,
                            default="bumps"),
        seed=seed,
        base_n=nodes,
        half_width=half_width,
        dt=dt,
        t_end=t_end,
        kernel_family=family,
        order=s,
        lam=lam if lam is not None else 2.0,
        modulation=modulation_name,
        scheme=scheme,
        x0=x0, r=r, big_r=big_r, t0=t0, alpha=alpha, theta=theta,
        delta=delta, eps=eps, tail_t1=tail_t1,
        bump_count_range=(rd.get("ensemble", "bump_count_min", int, default=1),
                          rd.get("ensemble", "bump_count_max", int, default=3)),
        amplitude_range=(rd.get("ensemble", "amplitude_min", float, default=0.5),
                         rd.get("ensemble", "amplitude_max", float, default=2.0)),
        exterior_kind=rd.get("ensemble", "exterior_kind", str, default="zero"),
        exterior_coefficient_range=(
            rd.get("ensemble", "exterior_coefficient_min", float, default=0.0),
            rd.get("ensemble", "exterior_coefficient_max", float, default=0.5)),
        exterior_decay_range=(
            rd.get("ensemble", "exterior_decay_min", float, default=-2.0),
            rd.get("ensemble", "exterior_decay_max", float, default=-1.0)),
        negative_mass=rd.get("ensemble", "negative_mass", float, default=0.0),
    )
    if ens.initial_kind not in ("bumps", "constant_one"):
        raise ConfigError(f"ensemble initial_kind {ens.initial_kind!r} unknown")
    if ens.exterior_kind not in ("zero", "constant_one", "power_decay",
                                 "negative_annulus"):
        raise ConfigError(
            f"ensemble exterior_kind {ens.exterior_kind!r} unknown")
    if ens.exterior_decay_range[1] >= 2.0 * s:
        raise ConfigError(
            f"ensemble exterior decay exponents must stay below 2s = "
            f"{2 * s:g} or tail integrals diverge")

    return RunConfig(
        command=command, seed=seed, jobs=jobs, kernel=kernel,
        grid=grid, t_start=t_start, t_end=t_end, dt=dt, scheme=scheme,
        exterior=exterior, exterior_kind=ext_kind, x0=x0, r=r, big_r=big_r,
        t0=t0, alpha=alpha, theta=theta, delta=delta, tail_t1=tail_t1,
        eps=eps, out_dir=out_dir, formats=formats, ensemble=ens,
        sha256=hashlib.sha256(text.encode()).hexdigest(), text=text,
    )


def _build_exterior(rd: _Reader, kind: str, s: float) -> ExteriorData:
    if kind == "zero":
        return zero_exterior()
    if kind == "constant":
        return constant_exterior(rd.get("exterior", "constant_value", float,
                                        default=0.0))
    if kind == "power_decay":
        gamma = rd.get("exterior", "decay_exponent_gamma", float,
                       required=True)
        if gamma >= 2.0 * s:
            raise ConfigError(
                f"exterior decay_exponent_gamma = {gamma} makes the tail "
                f"integral divergent; gamma < 2s = {2 * s:g} required")
        coef = rd.get("exterior", "coefficient", float, default=1.0)
        return power_decay_exterior(coef, gamma)
    if kind == "negative_annulus":
        mass = rd.get("exterior", "mass_M", float, required=True)
        inner = rd.get("exterior", "annulus_inner", float, required=True)
        outer = rd.get("exterior", "annulus_outer", float, required=True)
        return negative_annulus_exterior(mass, inner, outer)
    if kind == "heat_kernel":
        offset = rd.get("exterior", "time_offset", float, default=1.0)
        return heat_kernel_exterior(offset)
    raise ConfigError(f"unknown exterior generator {kind!r}")
