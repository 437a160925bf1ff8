"""Grids, space-time fields, and parabolic cylinders.

The spatial grid is uniform on the box [-L, L]^n with nodes exactly at
``x_i = -L + i*h``, ``h = 2L/(N-1)``.  Each node owns the cell of
half-width h/2 around it, so nodal sums with weight h^n integrate over the
slightly larger box of half-width ``L + h/2``; that is where the grid's
responsibility ends and analytic exterior data takes over (no overlap, no
gap at the interface).

Parabolic cylinders pair a ball with a time interval of length r^(2s):
backward ones end at the anchor time, forward ones start there.  Discrete
time windows are half-open (a, b]: the anchor level of a backward cylinder
is included, the far end excluded.
"""

import csv
import struct
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import EmptyIntersectionError, GeometryError

_MAGIC = b"NLPF\x01"
_TIME_TOL = 1e-9


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [-L, L]^n, n in {1, 2}."""

    dim: int
    half_width: float
    nodes_per_axis: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.half_width <= 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if self.nodes_per_axis < 3:
            raise ValueError(f"need at least 3 nodes per axis, got {self.nodes_per_axis}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.nodes_per_axis - 1)

    @property
    def axis_nodes(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.nodes_per_axis)

    @property
    def n_points(self) -> int:
        return self.nodes_per_axis ** self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def coverage_half_width(self) -> float:
        """Half-width L + h/2 of the region tiled by nodal cells."""
        return self.half_width + 0.5 * self.spacing

    def points(self) -> np.ndarray:
        """All nodes as an (N^n, n) array, row-major over axes."""
        ax = self.axis_nodes
        if self.dim == 1:
            return ax.reshape(-1, 1)
        xx, yy = np.meshgrid(ax, ax, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])

    def refined(self) -> "Grid":
        """Grid with doubled node count (for refinement-stability studies)."""
        return replace(self, nodes_per_axis=2 * self.nodes_per_axis)


@dataclass(frozen=True)
class SpaceTimeField:
    """Nodal values on a grid at strictly increasing stored times.

    ``values`` has shape (len(times), grid.n_points).  ``order_s`` is
    metadata recording the kernel order a solve used; it travels with the
    serialized field and is NaN when unknown.
    """

    grid: Grid
    times: np.ndarray
    values: np.ndarray
    order_s: Optional[float] = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.ndim != 1 or len(times) < 1:
            raise ValueError("times must be a nonempty 1D array")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        if values.shape != (len(times), self.grid.n_points):
            raise ValueError(
                f"values shape {values.shape} does not match "
                f"({len(times)}, {self.grid.n_points})"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")

    def scaled(self, factor: float) -> "SpaceTimeField":
        return replace(self, values=factor * self.values)

    def positive_part(self) -> "SpaceTimeField":
        return replace(self, values=np.maximum(self.values, 0.0))

    def negative_part(self) -> "SpaceTimeField":
        return replace(self, values=np.maximum(-self.values, 0.0))


@dataclass(frozen=True)
class ParabolicCylinder:
    """Ball B_r(center) times a backward or forward window of length r^(2s)."""

    center: float | tuple
    radius: float
    anchor_time: float
    orientation: str
    order: float

    def __post_init__(self):
        if self.radius <= 0:
            raise GeometryError(f"cylinder radius must be positive, got {self.radius}")
        if not 0.0 < self.order < 1.0:
            raise GeometryError(f"order must lie in (0,1), got {self.order}")
        if self.orientation not in ("backward", "forward"):
            raise GeometryError(f"orientation must be backward or forward, "
                                f"got {self.orientation!r}")

    @property
    def duration(self) -> float:
        return self.radius ** (2.0 * self.order)

    @property
    def time_interval(self) -> tuple:
        if self.orientation == "backward":
            return (self.anchor_time - self.duration, self.anchor_time)
        return (self.anchor_time, self.anchor_time + self.duration)

    def __str__(self):
        a, b = self.time_interval
        return (f"B_{self.radius:g}({self.center}) x ({a:g}, {b:g}] "
                f"[{self.orientation}, s={self.order:g}]")


def cylinder(x0, t0: float, r: float, s: float,
             orientation: str = "backward") -> ParabolicCylinder:
    """Parabolic cylinder with the exact time interval of length r^(2s)."""
    return ParabolicCylinder(center=x0, radius=r, anchor_time=t0,
                             orientation=orientation, order=s)


def _center_array(center, dim):
    c = np.asarray(center, dtype=np.float64).reshape(-1)
    if c.size != dim:
        raise GeometryError(f"center {center!r} does not match grid dim {dim}")
    return c


def ball_mask(grid: Grid, center, radius: float) -> np.ndarray:
    """Boolean mask of nodes strictly inside B_radius(center); no tolerance."""
    c = _center_array(center, grid.dim)
    pts = grid.points()
    d = np.sqrt(((pts - c[None, :]) ** 2).sum(axis=1))
    return d < radius


def level_indices(times: np.ndarray, a: float, b: float) -> np.ndarray:
    """Indices of stored levels in the half-open window (a, b].

    Endpoint matching uses a relative tolerance so levels produced by
    ``t_start + m*dt`` are classified stably.
    """
    times = np.asarray(times)
    tol = _TIME_TOL * max(abs(a), abs(b), b - a, 1.0)
    return np.nonzero((times > a + tol) & (times <= b + tol))[0]


@dataclass(frozen=True)
class Extrema:
    sup: float
    inf: float
    mean: float
    node_count: int


def window_extrema(field: SpaceTimeField, center, radius: float,
                   t_lo: float, t_hi: float, label: str = "window") -> Extrema:
    """Sup/inf/mean over B_radius(center) x (t_lo, t_hi].

    Spatial selection is strict (|x - center| < radius, boundary nodes
    excluded); the mean is the plain average over the selected space-time
    samples, i.e. the lattice volume average.
    """
    mask = ball_mask(field.grid, center, radius)
    levels = level_indices(field.times, t_lo, t_hi)
    if not mask.any() or len(levels) == 0:
        raise EmptyIntersectionError(
            f"{label} B_{radius:g}({center}) x ({t_lo:g}, {t_hi:g}] does not "
            f"intersect the field (grid half-width {field.grid.half_width}, "
            f"times [{field.times[0]:g}, {field.times[-1]:g}])"
        )
    block = field.values[np.ix_(levels, np.nonzero(mask)[0])]
    return Extrema(sup=float(block.max()), inf=float(block.min()),
                   mean=float(block.mean()), node_count=int(block.size))


def field_extrema(field: SpaceTimeField, cyl: ParabolicCylinder) -> Extrema:
    """Sup/inf/mean of nodal values over a parabolic cylinder."""
    a, b = cyl.time_interval
    return window_extrema(field, cyl.center, cyl.radius, a, b,
                          label=f"cylinder {cyl}")


# ---------------------------------------------------------------------------
# serialization


def save_field(field: SpaceTimeField, path) -> None:
    """Write a field; format chosen by extension (.csv text, else binary).

    Binary layout (little endian): magic ``NLPF\\x01``, int32 n, float64 L,
    int32 N, int32 M, float64 s, then times ((M+1) float64) and values
    ((M+1) x N^n float64, row-major).  Binary round-trips are bit exact.
    """
    path = str(path)
    if path.endswith(".csv"):
        _save_csv(field, path)
    else:
        _save_binary(field, path)


def load_field(path) -> SpaceTimeField:
    path = str(path)
    if path.endswith(".csv"):
        return _load_csv(path)
    return _load_binary(path)


def _save_binary(field: SpaceTimeField, path: str) -> None:
    g = field.grid
    m = len(field.times) - 1
    s = np.nan if field.order_s is None else float(field.order_s)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<idiid", g.dim, g.half_width, g.nodes_per_axis, m, s))
        fh.write(np.ascontiguousarray(field.times, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def _load_binary(path: str) -> SpaceTimeField:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a field file (bad magic {magic!r})")
        dim, half_width, n, m, s = struct.unpack("<idiid", fh.read(28))
        grid = Grid(dim=dim, half_width=half_width, nodes_per_axis=n)
        times = np.frombuffer(fh.read(8 * (m + 1)), dtype="<f8").copy()
        k = grid.n_points
        values = np.frombuffer(fh.read(8 * (m + 1) * k), dtype="<f8").copy()
    return SpaceTimeField(grid=grid, times=times,
                          values=values.reshape(m + 1, k),
                          order_s=None if np.isnan(s) else s)


def _save_csv(field: SpaceTimeField, path: str) -> None:
    g = field.grid
    s = np.nan if field.order_s is None else float(field.order_s)
    with open(path, "w", newline="") as fh:
        fh.write(f"# n={g.dim} L={g.half_width!r} N={g.nodes_per_axis} "
                 f"M={len(field.times) - 1} s={s!r}\n")
        writer = csv.writer(fh)
        writer.writerow(["time"] + [f"v{i}" for i in range(g.n_points)])
        for t, row in zip(field.times, field.values):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])


def _load_csv(path: str) -> SpaceTimeField:
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("# "):
            raise ValueError(f"{path}: missing field header line")
        meta = dict(item.split("=") for item in header[2:].split())
        grid = Grid(dim=int(meta["n"]), half_width=float(meta["L"]),
                    nodes_per_axis=int(meta["N"]))
        s = float(meta["s"])
        reader = csv.reader(fh)
        next(reader)  # column names
        times, rows = [], []
        for rec in reader:
            times.append(float(rec[0]))
            rows.append([float(v) for v in rec[1:]])
    return SpaceTimeField(grid=grid, times=np.array(times),
                          values=np.array(rows),
                          order_s=None if np.isnan(s) else s)
