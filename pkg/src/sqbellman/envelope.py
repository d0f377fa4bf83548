"""Grid solvers for the two obstacle problems.

Least supersolution (heat envelope, sup-type)::

    V(p, q) = max(O(p, q), max_a  1/2 [V(p+a, sqrt(q^2+a^2)) + V(p-a, sqrt(q^2+a^2))])

Greatest subsolution (inf-type, coordinates (x, lambda))::

    V(x, l) = min(O(x, l), min_a  1/2 [V(x-a, l-a^2) + V(x+a, l-a^2)])

Reads between lattice points are bilinear.  Reads off the lattice follow the
grid's extension rule: the obstacle itself, a clamp to the boundary, or the
current iterate pulled back along the homogeneity ray.

Two solvers share the same operator.  ``method="value"`` is plain Jacobi value
iteration.  ``method="rowwise"`` exploits that children always sit on the far
side of the second coordinate (larger q, smaller lambda): rows are settled one
at a time in dependency order, each by policy iteration on the reads that stay
inside the row.  Both only ever raise (sup) or lower (inf) the iterate.
"""

from __future__ import annotations

import enum
import io
import math
import re
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .lattice import Axis
from .specfn import davis_constant

INF_SENTINEL = 1e12


class Direction(enum.Enum):
    SUP = "least_supersolution"
    INF = "greatest_subsolution"


class Extension(enum.Enum):
    BY_OBSTACLE = "by_obstacle"
    HOMOGENEOUS = "homogeneous"
    CLAMP = "clamp"


@dataclass(frozen=True)
class Homogeneity:
    """``power``: O(tp, tq) = t^d O(p, q).  ``parabolic``: O(tx, t^2 l) = |t|^d O(x, l)."""

    degree: float
    kind: str = "power"


# -- obstacles ---------------------------------------------------------------------

@dataclass(frozen=True)
class ObstacleSpec:
    kind: str
    direction: Direction
    params: dict = field(default_factory=dict)
    homogeneity: Homogeneity | None = None
    fn: Callable | None = field(default=None, compare=False, repr=False)

    def __call__(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        return np.asarray(self.fn(p, q), dtype=float)

    def describe(self) -> str:
        if not self.params:
            return self.kind
        inner = ",".join(f"{k}={v:.12g}" if isinstance(v, float) else f"{k}={v}" for k, v in self.params.items())
        return f"{self.kind}({inner})"

    # Example 0: c^alpha |q|^alpha - |p|^alpha
    @classmethod
    def davis_power(cls, alpha: float, c: float | None = None) -> "ObstacleSpec":
        if c is None:
            c = davis_constant(alpha).c_alpha
        ca = c**alpha
        return cls(
            "DavisPower", Direction.SUP, {"alpha": float(alpha), "c": float(c)}, Homogeneity(alpha, "power"),
            lambda p, q: ca * np.abs(q) ** alpha - np.abs(p) ** alpha,
        )

    # Example 1: 1_{q >= 1} - C|p|
    @classmethod
    def bollobas_q(cls, C: float) -> "ObstacleSpec":
        return cls("BollobasQ", Direction.SUP, {"C": float(C)}, None,
                   lambda p, q: (q >= 1.0).astype(float) - C * np.abs(p))

    # Example 2: 1_{p^2 + q^2 >= 1} - C|p|
    @classmethod
    def bollobas_disk(cls, C: float) -> "ObstacleSpec":
        return cls("BollobasDisk", Direction.SUP, {"C": float(C)}, None,
                   lambda p, q: (p * p + q * q >= 1.0).astype(float) - C * np.abs(p))

    # Example 3: 1_{[lambda, inf)}(p) 1_{[0, 1]}(q)
    @classmethod
    def chang_wilson_wolff(cls, lam: float) -> "ObstacleSpec":
        return cls("ChangWilsonWolff", Direction.SUP, {"lambda": float(lam)}, None,
                   lambda p, q: ((p >= lam) & (q >= 0.0) & (q <= 1.0)).astype(float))

    # |x| where x^2 >= lambda, +infinity inside the parabola
    @classmethod
    def bollobas_range(cls) -> "ObstacleSpec":
        return cls("BollobasRange", Direction.INF, {}, Homogeneity(1.0, "parabolic"),
                   lambda x, lam: np.where(x * x >= lam, np.abs(x), INF_SENTINEL))

    @classmethod
    def tabulated(cls, grid: "Grid2D", direction: Direction) -> "ObstacleSpec":
        if not np.all(np.isfinite(grid.values)):
            raise ValueError("tabulated obstacle must be finite on its lattice")
        frozen = replace(grid, extension=Extension.CLAMP)
        return cls("Tabulated", direction, {}, None, lambda p, q: frozen.sample(p, q))

    @classmethod
    def from_function(cls, fn: Callable, direction: Direction, name: str = "Custom",
                      homogeneity: Homogeneity | None = None, **params) -> "ObstacleSpec":
        return cls(name, direction, params, homogeneity, fn)


# -- tabulated functions ---------------------------------------------------------------

@dataclass
class Grid2D:
    """Values on the product lattice ``x_axis x y_axis``; ``values[i, j]`` sits at (x_i, y_j)."""

    x_axis: Axis
    y_axis: Axis
    values: np.ndarray
    names: tuple = ("p", "q")
    extension: Extension = Extension.BY_OBSTACLE
    obstacle: ObstacleSpec | None = None
    diverged: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.x_axis.n, self.y_axis.n):
            raise ValueError(f"values shape {self.values.shape} != ({self.x_axis.n}, {self.y_axis.n})")
        if not self.diverged and not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite unless flagged diverged")

    @classmethod
    def from_obstacle(cls, obstacle: ObstacleSpec, x_axis: Axis, y_axis: Axis,
                      extension: Extension | None = None) -> "Grid2D":
        X, Y = np.meshgrid(x_axis.points, y_axis.points, indexing="ij")
        names = ("p", "q") if obstacle.direction is Direction.SUP else ("x", "lambda")
        if extension is None:
            extension = default_extension(obstacle, x_axis, y_axis)
        return cls(x_axis, y_axis, obstacle(X, Y), names, extension, obstacle)

    def mesh(self):
        return np.meshgrid(self.x_axis.points, self.y_axis.points, indexing="ij")

    def sample(self, X, Y):
        """Bilinear read with the grid's extension rule."""
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        idx, w, const = _read_stencil(self, X, Y)
        out = (self.values.ravel()[idx] * w).sum(-1) + const
        return float(out) if out.ndim == 0 else out

    # grid dump: header line, then one line of y-values per x index
    def dump(self, fh=None, direction: Direction | None = None) -> str:
        if direction is None:
            direction = self.obstacle.direction if self.obstacle is not None else Direction.SUP
        obstacle = self.obstacle.describe() if self.obstacle is not None else "none"
        nx, ny = self.names
        buf = io.StringIO()
        buf.write(
            f"# axes: {nx}[{self.x_axis.lo!r},{self.x_axis.hi!r},{self.x_axis.n}] "
            f"{ny}[{self.y_axis.lo!r},{self.y_axis.hi!r},{self.y_axis.n}] "
            f"direction={direction.value} obstacle={obstacle}\n"
        )
        for row in self.values:
            buf.write(" ".join(format(float(v), ".17g") for v in row))
            buf.write("\n")
        text = buf.getvalue()
        if fh is not None:
            if isinstance(fh, (str, bytes)) or hasattr(fh, "__fspath__"):
                with open(fh, "w", encoding="utf-8") as out:
                    out.write(text)
            else:
                fh.write(text)
        return text

    @classmethod
    def load(cls, source) -> "Grid2D":
        if hasattr(source, "read"):
            text = source.read()
        elif isinstance(source, str) and "\n" in source:
            text = source
        else:
            with open(source, encoding="utf-8") as fh:
                text = fh.read()
        lines = text.splitlines()
        m = re.match(
            r"#\s*axes:\s*(\w+)\[([^,\]]+),([^,\]]+),(\d+)\]\s+(\w+)\[([^,\]]+),([^,\]]+),(\d+)\]", lines[0]
        )
        if m is None:
            raise ValueError("missing or malformed grid header")
        x_axis = Axis(float(m.group(2)), float(m.group(3)), int(m.group(4)))
        y_axis = Axis(float(m.group(6)), float(m.group(7)), int(m.group(8)))
        values = np.array([[float(v) for v in ln.split()] for ln in lines[1:] if ln.strip()])
        return cls(x_axis, y_axis, values, (m.group(1), m.group(5)), Extension.CLAMP)


def default_extension(obstacle: ObstacleSpec, x_axis: Axis, y_axis: Axis) -> Extension:
    """Homogeneous pull-back when the obstacle is power-homogeneous on a symmetric
    half-plane lattice; the obstacle itself otherwise."""
    h = obstacle.homogeneity
    symmetric = math.isclose(x_axis.lo, -x_axis.hi) and y_axis.lo == 0.0
    if h is not None and h.kind == "power" and symmetric and obstacle.direction is Direction.SUP:
        return Extension.HOMOGENEOUS
    return Extension.BY_OBSTACLE


def _cubic_weights(u):
    # Lagrange weights for nodes at 0, 1, 2, 3 evaluated at u
    return np.stack([
        -(u - 1) * (u - 2) * (u - 3) / 6.0,
        u * (u - 2) * (u - 3) / 2.0,
        -u * (u - 1) * (u - 3) / 2.0,
        u * (u - 1) * (u - 2) / 6.0,
    ], axis=-1)


def _read_stencil(grid: Grid2D, X: np.ndarray, Y: np.ndarray):
    """Corner indices, weights and constant term for reads at (X, Y).

    Returns ``idx`` and ``w`` with a trailing axis of 4 nodes, and ``const``,
    so that the read equals ``sum(values.flat[idx] * w) + const``.  Lattice
    reads are bilinear.  Homogeneous pull-backs that land on the top row use
    four-point Lagrange interpolation along that row: the top row is then a
    closed, self-referencing problem whose accuracy sets the accuracy of
    everything below it, and linear interpolation of the concave profile
    there biases the whole solution downward.
    """
    xa, ya = grid.x_axis, grid.y_axis
    X, Y = np.broadcast_arrays(np.asarray(X, float), np.asarray(Y, float))
    const = np.zeros(X.shape)
    scale = np.ones(X.shape)
    Xr, Yr = X, Y
    inside = (X >= xa.lo) & (X <= xa.hi) & (Y >= ya.lo) & (Y <= ya.hi)
    ext = grid.extension
    out = ~inside
    if ext is Extension.HOMOGENEOUS and np.any(out):
        h = grid.obstacle.homogeneity
        below = Y < ya.lo
        t = np.ones(X.shape)
        with np.errstate(divide="ignore"):
            if h.kind == "power":
                t = np.minimum(t, np.where(np.abs(X) > 0, xa.hi / np.abs(X), np.inf))
                t = np.minimum(t, np.where(Y > 0, ya.hi / Y, np.inf))
                scale = t ** (-h.degree)
            else:
                t = np.minimum(t, np.where(np.abs(X) > 0, xa.hi / np.abs(X), np.inf))
                t = np.minimum(t, np.where(Y > 0, np.sqrt(ya.hi / np.maximum(Y, 1e-300)), np.inf))
                scale = t ** (-h.degree)
        Xr = np.where(out & ~below, X * t, X)
        Yr = np.where(out & ~below, Y * (t if h.kind == "power" else t * t), Y)
        scale = np.where(out & ~below, scale, 1.0)
        top = out & ~below & (Yr >= ya.hi) & (xa.n >= 4)
        # reads below the lattice fall back to the obstacle
        obst = below
    elif ext is Extension.BY_OBSTACLE:
        obst = out
        top = None
    else:
        obst = np.zeros(X.shape, dtype=bool)
        top = None
    if np.any(obst):
        if grid.obstacle is None:
            raise ValueError("extension by obstacle needs the grid's obstacle")
        const = np.where(obst, grid.obstacle(np.where(obst, X, 0.0), np.where(obst, Y, 1.0)), 0.0)
    fx = (np.clip(Xr, xa.lo, xa.hi) - xa.lo) / xa.spacing
    fy = (np.clip(Yr, ya.lo, ya.hi) - ya.lo) / ya.spacing
    i0 = np.clip(np.floor(fx).astype(np.int64), 0, xa.n - 2)
    j0 = np.clip(np.floor(fy).astype(np.int64), 0, ya.n - 2)
    wx = np.clip(fx - i0, 0.0, 1.0)
    wy = np.clip(fy - j0, 0.0, 1.0)
    ny = ya.n
    base = i0 * ny + j0
    idx = np.stack([base, base + ny, base + 1, base + ny + 1], axis=-1)
    w = np.stack([(1 - wx) * (1 - wy), wx * (1 - wy), (1 - wx) * wy, wx * wy], axis=-1)
    if top is not None and np.any(top):
        ic = np.clip(np.floor(fx).astype(np.int64) - 1, 0, xa.n - 4)
        wc = _cubic_weights(fx - ic)
        rowc = ic[..., None] + np.arange(4)
        idx = np.where(top[..., None], rowc * ny + (ny - 1), idx)
        w = np.where(top[..., None], wc, w)
    w = w * np.where(obst, 0.0, scale)[..., None]
    return idx, w, const


# -- step sets ---------------------------------------------------------------------

def default_a_set(x_axis: Axis, n: int = 64, snap: bool = True) -> np.ndarray:
    """Log-spaced step magnitudes in [spacing, half the first-axis range].

    With ``snap`` the magnitudes are rounded to multiples of the first-axis
    spacing (duplicates dropped), so horizontal reads land on lattice columns.
    Signs are omitted: +a and -a produce the same pair of children.
    """
    h = x_axis.spacing
    mags = np.geomspace(h, 0.5 * (x_axis.hi - x_axis.lo), n)
    if snap:
        mags = np.unique(np.maximum(1, np.round(mags / h))) * h
    return mags


def _children(direction: Direction, X, Y, a):
    if direction is Direction.SUP:
        r = np.sqrt(Y * Y + a * a)
        return (X + a, r), (X - a, r)
    lam = Y - a * a
    return (X - a, lam), (X + a, lam)


def _row_reads(grid: Grid2D, direction: Direction, j: int, a_set: np.ndarray):
    """Stencil of both children for every (a, i) in row j: idx/w of shape (na, nx, 8), const (na, nx)."""
    xs = grid.x_axis.points
    y = grid.y_axis.points[j]
    A = np.asarray(a_set, dtype=float)[:, None]
    X = np.broadcast_to(xs[None, :], (A.shape[0], xs.size))
    (x1, y1), (x2, y2) = _children(direction, X, np.full(X.shape, y), A)
    i1, w1, c1 = _read_stencil(grid, x1, y1)
    i2, w2, c2 = _read_stencil(grid, x2, y2)
    idx = np.concatenate([i1, i2], axis=-1)
    w = 0.5 * np.concatenate([w1, w2], axis=-1)
    return idx, w, 0.5 * (c1 + c2)


def bellman_step(grid: Grid2D, obstacle: ObstacleSpec, a_set: Sequence[float]) -> Grid2D:
    """One Jacobi sweep of the obstacle operator in the obstacle's direction."""
    a_set = np.asarray(a_set, dtype=float)
    src = grid.values.ravel()
    sup = obstacle.direction is Direction.SUP
    new = np.empty_like(grid.values)
    O = obstacle(*grid.mesh())
    for j in range(grid.y_axis.n):
        idx, w, const = _row_reads(grid, obstacle.direction, j, a_set)
        vals = (src[idx] * w).sum(-1) + const
        if sup:
            new[:, j] = np.maximum(O[:, j], vals.max(axis=0)) if vals.size else O[:, j]
        else:
            new[:, j] = np.minimum(O[:, j], vals.min(axis=0)) if vals.size else O[:, j]
    if not sup:
        new = np.minimum(new, INF_SENTINEL)
    diverged = not np.all(np.isfinite(new))
    return replace(grid, values=np.where(np.isfinite(new), new, np.nan) if diverged else new, diverged=diverged)


def bellman_step_sup(grid: Grid2D, obstacle: ObstacleSpec, a_set) -> Grid2D:
    if obstacle.direction is not Direction.SUP:
        raise ValueError("bellman_step_sup needs a least-supersolution obstacle")
    return bellman_step(grid, obstacle, a_set)


def bellman_step_inf(grid: Grid2D, obstacle: ObstacleSpec, a_set) -> Grid2D:
    if obstacle.direction is not Direction.INF:
        raise ValueError("bellman_step_inf needs a greatest-subsolution obstacle")
    return bellman_step(grid, obstacle, a_set)


# -- solvers -------------------------------------------------------------------------

@dataclass
class SolveReport:
    iterations: int = 0
    sup_norm_delta_history: list = field(default_factory=list)
    diverged: bool = False
    cap_hit_location: tuple | None = None
    converged: bool = False
    monotone: bool = True
    worst_monotone_step: float = 0.0
    operator_worst_step: float = 0.0
    fixed_point_residual: float = float("nan")
    method: str = "value"
    wall_time_ms: float = 0.0

    def to_dict(self) -> dict:
        hist = self.sup_norm_delta_history
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "diverged": self.diverged,
            "cap_hit_location": list(self.cap_hit_location) if self.cap_hit_location else None,
            "monotone": self.monotone,
            "worst_monotone_step": self.worst_monotone_step,
            "operator_worst_step": self.operator_worst_step,
            "fixed_point_residual": self.fixed_point_residual,
            "method": self.method,
            "wall_time_ms": round(self.wall_time_ms, 1),
            "sup_norm_delta_history": [float(v) for v in (hist if len(hist) <= 200 else hist[-200:])],
        }


def _signed_progress(direction: Direction, new: np.ndarray, old: np.ndarray) -> np.ndarray:
    # positive = moved the allowed way
    return new - old if direction is Direction.SUP else old - new


def _monotone_step(grid, obstacle, a_set, report):
    """T applied to the grid, then clamped so the iterate cannot move backwards.

    The cubic top-row reads have negative weights, so T alone is not order
    preserving there; the clamp keeps iterates monotone and the raw backward
    movement is kept in ``report.operator_worst_step``.  The fixed-point
    residual is computed with the raw operator, so the clamp cannot hide a
    point where V > T V.
    """
    new = bellman_step(grid, obstacle, a_set)
    if new.diverged:
        return new
    raw = _signed_progress(obstacle.direction, new.values, grid.values)
    report.operator_worst_step = min(report.operator_worst_step, float(raw.min()))
    clamp = np.maximum if obstacle.direction is Direction.SUP else np.minimum
    return replace(new, values=clamp(new.values, grid.values))


def _value_iteration(grid, obstacle, a_set, max_iters, stop_tol, value_cap, report, watch=None):
    for it in range(1, max_iters + 1):
        new = _monotone_step(grid, obstacle, a_set, report)
        report.iterations = it
        if new.diverged:
            report.diverged = True
            grid = new
            break
        prog = _signed_progress(obstacle.direction, new.values, grid.values)
        report.worst_monotone_step = min(report.worst_monotone_step, float(prog.min()))
        delta = float(np.abs(new.values - grid.values).max())
        report.sup_norm_delta_history.append(delta)
        grid = new
        if obstacle.direction is Direction.SUP:
            if watch is not None:
                if grid.sample(*watch) > value_cap:
                    report.diverged = True
                    report.cap_hit_location = tuple(float(v) for v in watch)
                    break
            elif grid.values.max() > value_cap:
                k = np.unravel_index(np.argmax(grid.values), grid.values.shape)
                report.diverged = True
                report.cap_hit_location = (float(grid.x_axis.points[k[0]]), float(grid.y_axis.points[k[1]]))
                break
        if delta < stop_tol:
            report.converged = True
            break
    return grid


def _row_order(direction: Direction, ny: int):
    return range(ny - 1, -1, -1) if direction is Direction.SUP else range(ny)


def _solve_row(grid, obstacle, a_set, j, o_row, value_cap, max_policy_iters=200):
    """Settle row j by policy iteration; other rows are held at their current values."""
    nx, ny = grid.x_axis.n, grid.y_axis.n
    sup = obstacle.direction is Direction.SUP
    idx, w, const = _row_reads(grid, obstacle.direction, j, a_set)
    col = idx // ny
    in_row = (idx % ny) == j
    flat = grid.values.ravel()
    # reads landing outside row j are frozen into the right-hand side
    rhs = const + np.where(in_row, 0.0, w * flat[idx]).sum(-1)
    w_in = np.where(in_row, w, 0.0)
    v = grid.values[:, j].copy()
    policy = np.full(nx, -1)
    cols_i = np.arange(nx)
    for _ in range(max_policy_iters):
        vals = rhs + (w_in * v[col]).sum(-1)
        if sup:
            k = np.argmax(vals, axis=0)
            best = vals[k, cols_i]
            better = best > o_row
            cur = np.where(policy >= 0, vals[np.maximum(policy, 0), cols_i], o_row)
            improve = best > cur + 1e-13 * np.maximum(1.0, np.abs(cur))
        else:
            k = np.argmin(vals, axis=0)
            best = vals[k, cols_i]
            better = best < o_row
            cur = np.where(policy >= 0, vals[np.maximum(policy, 0), cols_i], o_row)
            improve = best < cur - 1e-13 * np.maximum(1.0, np.abs(cur))
        new_policy = np.where(improve, np.where(better, k, -1), policy)
        if np.array_equal(new_policy, policy) and _ is not None and _ > 0:
            break
        policy = new_policy
        cont = policy >= 0
        rows_c = cols_i[cont]
        pk = policy[cont]
        wsel = w_in[pk, rows_c]  # (m, 8)
        csel = col[pk, rows_c]
        R = np.repeat(rows_c, wsel.shape[1])
        A = sp.csr_matrix((-wsel.ravel(), (R, csel.ravel())), shape=(nx, nx)) + sp.identity(nx, format="csr")
        b = np.where(cont, 0.0, o_row)
        b[cont] = rhs[pk, rows_c]
        if np.any(w_in[pk, rows_c]):
            with np.errstate(all="ignore"):
                v_new = spla.spsolve(A.tocsc(), b)
        else:
            v_new = b
        if not np.all(np.isfinite(v_new)):
            return v, False
        if sup and v_new.max() > value_cap:
            # the frozen-policy system is not subcritical: no finite fixed point in this row
            return v_new, False
        v = v_new
        if not np.any(improve):
            break
    return v, True


def _rowwise(grid, obstacle, a_set, max_outer, stop_tol, value_cap, report):
    """Dependency-ordered passes of per-row policy iteration.

    Returns (grid, fell_back).  A row whose policy system is not subcritical
    has no meaningful linear solution; it shows up as a result that moves
    against the monotone direction.  Such a row is rejected and the caller
    continues with plain value iteration from the last valid grid.
    """
    O = obstacle(*grid.mesh())
    for outer in range(1, max_outer + 1):
        before = grid.values.copy()
        for j in _row_order(obstacle.direction, grid.y_axis.n):
            v, ok = _solve_row(grid, obstacle, a_set, j, O[:, j], value_cap)
            prog = _signed_progress(obstacle.direction, v, grid.values[:, j])
            slack = 1e-9 * max(1.0, float(np.abs(grid.values[:, j]).max()))
            if not ok or not np.all(np.isfinite(v)) or prog.min() < -slack:
                report.iterations = outer
                return grid, True
            report.worst_monotone_step = min(report.worst_monotone_step, float(prog.min()))
            grid.values[:, j] = v
        delta = float(np.abs(grid.values - before).max())
        report.sup_norm_delta_history.append(delta)
        report.iterations = outer
        if delta < stop_tol:
            break
    return grid, False


def _solve(obstacle, direction, x_axis, y_axis, a_set, max_iters, stop_tol, value_cap, method,
           extension, certify_sweeps, watch=None):
    if obstacle.direction is not direction:
        raise ValueError(f"obstacle direction {obstacle.direction} does not match solver {direction}")
    if x_axis.n < 2 or y_axis.n < 2:
        raise ValueError("grid needs at least 2 points per axis")
    t0 = time.perf_counter()
    grid = Grid2D.from_obstacle(obstacle, x_axis, y_axis, extension)
    if a_set is None:
        a_set = default_a_set(x_axis)
    a_set = np.asarray(a_set, dtype=float)
    report = SolveReport(method=method)
    if method == "value":
        grid = _value_iteration(grid, obstacle, a_set, max_iters, stop_tol, value_cap, report, watch)
    elif method == "rowwise":
        grid, fell_back = _rowwise(grid, obstacle, a_set, max_iters, stop_tol, value_cap, report)
        if fell_back:
            report.method = "rowwise+value"
            passes = report.iterations
            grid = _value_iteration(grid, obstacle, a_set, max_iters, stop_tol, value_cap, report, watch)
            report.iterations += passes
        elif not report.diverged:
            # a few plain sweeps from the settled grid certify the fixed point
            for _ in range(certify_sweeps):
                new = _monotone_step(grid, obstacle, a_set, report)
                prog = _signed_progress(direction, new.values, grid.values)
                report.worst_monotone_step = min(report.worst_monotone_step, float(prog.min()))
                report.sup_norm_delta_history.append(float(np.abs(new.values - grid.values).max()))
                grid = new
    else:
        raise ValueError(f"unknown method {method!r}")
    if not report.diverged:
        check = bellman_step(grid, obstacle, a_set)
        report.fixed_point_residual = float(np.abs(check.values - grid.values).max())
        report.converged = report.fixed_point_residual < stop_tol
    scale = max(1.0, float(np.nanmax(np.abs(grid.values)))) if not report.diverged else 1.0
    report.monotone = report.worst_monotone_step >= -1e-12 * scale
    report.wall_time_ms = 1e3 * (time.perf_counter() - t0)
    grid.diverged = report.diverged
    return grid, report


def solve_heat_envelope(
    obstacle: ObstacleSpec,
    p_axis: Axis,
    q_axis: Axis,
    a_set=None,
    max_iters: int = 20000,
    stop_tol: float = 1e-7,
    value_cap: float = 1e6,
    method: str = "rowwise",
    extension: Extension | None = None,
    certify_sweeps: int = 1,
    watch: tuple | None = None,
):
    """Least supersolution above ``obstacle`` on the (p, q) lattice.

    Starts from the obstacle and raises the grid until the sup-norm change drops
    below ``stop_tol``.  Exceeding ``value_cap`` flags divergence, which is how a
    missing finite envelope shows up; with ``watch=(p, q)`` only the value at
    that point is compared with the cap.  With ``method="rowwise"`` the
    iteration budget counts full top-down passes, and a row whose policy system
    turns out supercritical hands over to plain value iteration.
    """
    return _solve(obstacle, Direction.SUP, p_axis, q_axis, a_set, max_iters, stop_tol, value_cap, method,
                  extension, certify_sweeps, watch)


def solve_greatest_subsolution(
    obstacle: ObstacleSpec,
    x_axis: Axis,
    lam_axis: Axis,
    a_set=None,
    max_iters: int = 20000,
    stop_tol: float = 1e-7,
    method: str = "rowwise",
    extension: Extension | None = None,
    certify_sweeps: int = 1,
):
    """Greatest subsolution below ``obstacle`` on the (x, lambda) lattice.

    Reads with lambda - a^2 below the lattice resolve to the obstacle, which is
    |x| there (constraint exhausted).
    """
    return _solve(obstacle, Direction.INF, x_axis, lam_axis, a_set, max_iters, stop_tol, np.inf, method,
                  extension, certify_sweeps)


# -- homogeneity-reduced profile ---------------------------------------------------------

@dataclass
class Profile1D:
    x: np.ndarray
    values: np.ndarray

    def __call__(self, s):
        return np.interp(s, self.x, self.values)


def reduced_solve_1d(
    obstacle: ObstacleSpec,
    x_axis: Axis,
    offsets=None,
    degree: float | None = None,
    max_iters: int = 200,
    tol: float = 1e-12,
    method: str = "policy",
):
    """Iterate the homogeneity-reduced operator on the slice q = 1 (or lambda = 1).

    Davis type (power homogeneity of degree d)::

        b(x) = max(o(x), max_t 1/2 (1+t^2)^(d/2) [b((x+t)/s) + b((x-t)/s)]),  s = sqrt(1+t^2)

    Bollobas type (parabolic homogeneity)::

        b(x) = min(o(x), min_t 1/2 s [b((x-t)/s) + b((x+t)/s)]),  s = sqrt(1-t^2), t < 1

    with t >= 1 exhausting the constraint (value (|x-t| + |x+t|)/2).
    Off-range reads use the reduced obstacle o(x) = O(x, 1).
    """
    h = obstacle.homogeneity
    if h is None:
        raise ValueError("reduced_solve_1d needs an obstacle with homogeneity metadata")
    d = h.degree if degree is None else degree
    x = x_axis.points
    hx = x_axis.spacing
    o = obstacle(x, np.ones_like(x))
    sup = obstacle.direction is Direction.SUP
    if offsets is None:
        top = 0.5 * (x_axis.hi - x_axis.lo) if sup else 1.0
        offsets = np.geomspace(hx, top, 64)
    offsets = np.asarray(offsets, dtype=float)
    nx, nt = x.size, offsets.size
    I = np.zeros((nt, 2, nx), dtype=np.int64)
    W = np.zeros((nt, 2, nx, 2))
    CONST = np.zeros((nt, nx))
    for k, t in enumerate(offsets):
        if sup:
            s = math.sqrt(1.0 + t * t)
            factor = 0.5 * s**d
            ys = ((x + t) / s, (x - t) / s)
        else:
            if t >= 1.0:
                CONST[k] = 0.5 * (np.abs(x - t) + np.abs(x + t))
                continue
            s = math.sqrt(1.0 - t * t)
            factor = 0.5 * s**d
            ys = ((x - t) / s, (x + t) / s)
        for c, y in enumerate(ys):
            inside = (y >= x_axis.lo) & (y <= x_axis.hi)
            f = (np.clip(y, x_axis.lo, x_axis.hi) - x_axis.lo) / hx
            i0 = np.clip(np.floor(f).astype(np.int64), 0, nx - 2)
            wy = np.clip(f - i0, 0.0, 1.0)
            I[k, c] = i0
            W[k, c, :, 0] = np.where(inside, factor * (1 - wy), 0.0)
            W[k, c, :, 1] = np.where(inside, factor * wy, 0.0)
            CONST[k] += np.where(inside, 0.0, factor * obstacle(y, np.ones_like(y)))

    def apply(v):
        return (W[..., 0] * v[I] + W[..., 1] * v[I + 1]).sum(1) + CONST

    report = SolveReport(method=method)
    v = o.copy()
    cols = np.arange(nx)
    for it in range(1, max_iters + 1):
        vals = apply(v)
        k = np.argmax(vals, 0) if sup else np.argmin(vals, 0)
        best = vals[k, cols]
        if method == "value":
            v_new = np.maximum(o, best) if sup else np.minimum(o, best)
        else:
            cont = best > o if sup else best < o
            rows = cols[cont]
            kk = k[cont]
            R = np.repeat(rows, 4)
            C = np.stack([I[kk, 0, rows], I[kk, 0, rows] + 1, I[kk, 1, rows], I[kk, 1, rows] + 1], -1).ravel()
            D = -np.stack([W[kk, 0, rows, 0], W[kk, 0, rows, 1], W[kk, 1, rows, 0], W[kk, 1, rows, 1]], -1).ravel()
            A = sp.csr_matrix((D, (R, C)), shape=(nx, nx)) + sp.identity(nx, format="csr")
            b = np.where(cont, 0.0, o)
            b[cont] = CONST[kk, rows]
            v_new = spla.spsolve(A.tocsc(), b)
        prog = _signed_progress(obstacle.direction, v_new, v)
        report.worst_monotone_step = min(report.worst_monotone_step, float(prog.min()))
        delta = float(np.abs(v_new - v).max())
        report.sup_norm_delta_history.append(delta)
        report.iterations = it
        v = v_new
        if not np.all(np.isfinite(v)) or (sup and v.max() > 1e6):
            report.diverged = True
            break
        if delta < tol:
            report.converged = True
            break
    if not report.diverged:
        best = apply(v)
        best = np.maximum(o, best.max(0)) if sup else np.minimum(o, best.min(0))
        report.fixed_point_residual = float(np.abs(best - v).max())
    report.monotone = report.worst_monotone_step >= -1e-9
    return Profile1D(x, v), report


# -- comparison -----------------------------------------------------------------------------

def compare_to_closed_form(grid: Grid2D, reference: Callable, mask: Callable | np.ndarray | None = None) -> dict:
    """Pointwise |grid - reference| over a masked region.

    ``max_rel`` is the max error divided by max |reference| on the region.
    """
    X, Y = grid.mesh()
    if mask is None:
        sel = np.ones(X.shape, dtype=bool)
    elif callable(mask):
        sel = np.asarray(mask(X, Y), dtype=bool)
    else:
        sel = np.asarray(mask, dtype=bool)
    ref = np.asarray(reference(X, Y), dtype=float)
    err = np.abs(grid.values - ref)
    e = np.where(sel, err, -np.inf)
    k = np.unravel_index(np.argmax(e), e.shape)
    max_abs = float(err[sel].max()) if sel.any() else 0.0
    ref_scale = float(np.abs(ref[sel]).max()) if sel.any() else 0.0
    signed = (grid.values - ref)[sel]
    return {
        "max_abs": max_abs,
        "mean_abs": float(err[sel].mean()) if sel.any() else 0.0,
        "max_rel": max_abs / ref_scale if ref_scale > 0 else (0.0 if max_abs == 0 else np.inf),
        "location": (float(X[k]), float(Y[k])),
        "max_above": float(signed.max()) if sel.any() else 0.0,
        "max_below": float(-signed.min()) if sel.any() else 0.0,
        "samples": int(sel.sum()),
    }
