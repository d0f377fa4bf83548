"""Dyadic test functions, the square function, and depth-limited DP oracles.

A test function of depth N is its 2^N leaf values on the dyadic intervals of
generation N.  Its Haar difference on a node J is +d_J on the left half of J
and -d_J on the right half, so (Sf)^2 at a leaf is the sum of d_J^2 over the
N ancestors J of that leaf.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .lattice import Axis
from .reports import VerificationReport, stopwatch, worst_of
from .specfn import psi

MAX_TREE_DEPTH = 24
MAX_ORACLE_DEPTH = 20
DAVIS_EMPIRICAL_TOL = 1e-12
INF_SENTINEL = 1e12


@dataclass
class DyadicTestFunction:
    leaves: np.ndarray

    def __post_init__(self):
        self.leaves = np.asarray(self.leaves, dtype=float)
        n = self.leaves.size
        if n == 0 or n & (n - 1):
            raise ValueError(f"number of leaves must be a power of two, got {n}")
        if self.depth > MAX_TREE_DEPTH:
            raise ValueError(f"depth {self.depth} exceeds the cap {MAX_TREE_DEPTH}")

    @property
    def depth(self) -> int:
        return int(self.leaves.size).bit_length() - 1

    @property
    def mean(self) -> float:
        return float(self.leaves.mean())

    def to_text(self) -> str:
        return "\n".join([str(self.depth)] + [repr(float(v)) for v in self.leaves]) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DyadicTestFunction":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        depth = int(lines[0])
        leaves = np.array([float(v) for v in lines[1:]])
        if leaves.size != 2**depth:
            raise ValueError(f"expected {2**depth} leaf values, found {leaves.size}")
        return cls(leaves)


@dataclass
class HaarCoefficients:
    """Root average and, for each level k = 0..N-1, the 2^k differences d_J."""

    root: object
    diffs: list

    @property
    def depth(self) -> int:
        return len(self.diffs)


def haar_decompose(f: DyadicTestFunction, exact: bool = False) -> HaarCoefficients:
    """Bottom-up averages and half-differences.

    With ``exact=True`` the arithmetic is done in rationals (every float is a
    rational), so :func:`reconstruct` returns the original leaves bit for bit.
    """
    vals = [Fraction(v) for v in f.leaves.tolist()] if exact else f.leaves.copy()
    diffs = []
    while len(vals) > 1:
        if exact:
            left, right = vals[0::2], vals[1::2]
            diffs.append([(a - b) / 2 for a, b in zip(left, right)])
            vals = [(a + b) / 2 for a, b in zip(left, right)]
        else:
            left, right = vals[0::2], vals[1::2]
            diffs.append(0.5 * (left - right))
            vals = 0.5 * (left + right)
    diffs.reverse()
    return HaarCoefficients(vals[0], diffs)


def reconstruct(coeffs: HaarCoefficients) -> DyadicTestFunction:
    exact = isinstance(coeffs.root, Fraction)
    if exact:
        vals = [coeffs.root]
        for d in coeffs.diffs:
            vals = [x for m, dd in zip(vals, d) for x in (m + dd, m - dd)]
        return DyadicTestFunction(np.array([float(v) for v in vals]))
    vals = np.array([float(coeffs.root)])
    for d in coeffs.diffs:
        d = np.asarray(d, dtype=float)
        vals = np.stack([vals + d, vals - d], axis=-1).ravel()
    return DyadicTestFunction(vals)


def _leaf_square_sum(diffs: Sequence, depth: int) -> np.ndarray:
    sq = np.zeros(2**depth)
    for k, d in enumerate(diffs):
        d = np.asarray([float(v) for v in d]) if not isinstance(d, np.ndarray) else d
        sq += np.repeat(d * d, 2 ** (depth - k))
    return sq


@dataclass
class SquareFunctionProfile:
    values: np.ndarray


def square_function(f: DyadicTestFunction) -> SquareFunctionProfile:
    coeffs = haar_decompose(f)
    return SquareFunctionProfile(np.sqrt(_leaf_square_sum(coeffs.diffs, f.depth)))


# -- batched generation ------------------------------------------------------------

def _batch_from_diffs(root: np.ndarray, diffs: Sequence[np.ndarray]):
    """Leaves and S^2 for a batch: root (n,), diffs[k] (n, 2^k)."""
    leaves = root[:, None]
    sq = np.zeros_like(leaves)
    for d in diffs:
        leaves = np.stack([leaves + d, leaves - d], axis=-1).reshape(root.size, -1)
        sq = np.repeat(sq + d * d, 2, axis=1)
    return leaves, sq


def random_batch(rng: np.random.Generator, n: int, depth: int, sigma: float = 1.0, decay: float = 0.8):
    """n random test functions: root ~ U[-1, 1], level-k differences ~ U[-s_k, s_k],
    s_k = sigma * decay^k.  Returns (leaves, S^2), each of shape (n, 2^depth)."""
    root = rng.uniform(-1.0, 1.0, n)
    diffs = [rng.uniform(-1.0, 1.0, (n, 2**k)) * sigma * decay**k for k in range(depth)]
    return _batch_from_diffs(root, diffs)


def random_test_function(rng: np.random.Generator, depth: int, sigma: float = 1.0, decay: float = 0.8):
    leaves, _ = random_batch(rng, 1, depth, sigma, decay)
    return DyadicTestFunction(leaves[0])


def rademacher_test_function(coeffs: Sequence[float]) -> DyadicTestFunction:
    """sum_k a_k r_k: every node of level k-1 carries the difference a_k."""
    diffs = [np.full((1, 2**k), float(a)) for k, a in enumerate(coeffs)]
    leaves, _ = _batch_from_diffs(np.zeros(1), diffs)
    return DyadicTestFunction(leaves[0])


# -- Bellman induction ------------------------------------------------------------------

def bellman_induction_margin(U: Callable, leaves: np.ndarray, sq: np.ndarray, q: float) -> np.ndarray:
    """U(<f>, q) - <U(f, sqrt(q^2 + (Sf)^2))> for each row of a batch."""
    leaves = np.atleast_2d(leaves)
    sq = np.atleast_2d(sq)
    mean = leaves.mean(axis=1)
    avg = np.asarray(U(leaves, np.sqrt(q * q + sq))).mean(axis=1)
    return np.asarray(U(mean, np.full_like(mean, q))) - avg


def check_bellman_induction(U: Callable, f, q: float, tol: float = 1e-9, name: str = "dyadic.bellman_induction"):
    """Margin of the Bellman induction for one function or a batch (leaves, S^2)."""
    if q < 0:
        raise ValueError("q must be nonnegative")
    with stopwatch() as ms:
        if isinstance(f, DyadicTestFunction):
            leaves = f.leaves[None, :]
            sq = (square_function(f).values ** 2)[None, :]
        else:
            leaves, sq = f
        margin = bellman_induction_margin(U, leaves, sq, q)
        worst, where = worst_of(margin, (np.arange(margin.size), np.full(margin.size, q)))
        elapsed = ms()
    return VerificationReport(name, worst, where, tol, int(margin.size), elapsed)


def negative_control_U(p, q):
    """p^2 + q^2 grows along every split, so it violates the main inequality."""
    return np.asarray(p) ** 2 + np.asarray(q) ** 2


# -- empirical inequalities ------------------------------------------------------------

def empirical_inequality_suite(alpha: float, n_samples: int = 10_000, depth: int = 10, seed: int = 0,
                               c_alpha: float | None = None, levels=None, batch: int = 1000):
    """Davis inequality  c^alpha <(Sf)^alpha> <= <|f|^alpha>  and the weak-type
    inequality  l |{Sf >= l}| <= Psi(1) <|f|>  on seeded random test functions.

    Margins are RHS - LHS; a negative margin is a violation.
    """
    from .specfn import davis_constant

    c = davis_constant(alpha).c_alpha if c_alpha is None else c_alpha
    levels = np.linspace(0.1, 3.0, 30) if levels is None else np.asarray(levels, dtype=float)
    psi1 = float(psi(1.0))
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    worst_d = (np.inf, ())
    worst_w = (np.inf, ())
    viol_d = viol_w = 0
    with stopwatch() as ms:
        done = 0
        while done < n_samples:
            m = min(batch, n_samples - done)
            leaves, sq = random_batch(rng, m, depth)
            S = np.sqrt(sq)
            md = np.mean(np.abs(leaves) ** alpha, axis=1) - c**alpha * np.mean(S**alpha, axis=1)
            l1 = np.mean(np.abs(leaves), axis=1)
            frac = (S[:, :, None] >= levels).mean(axis=1)  # (m, L)
            mw = psi1 * l1[:, None] - levels * frac
            # alpha = 2 is an identity, so exact ties may round either way
            viol_d += int((md < -DAVIS_EMPIRICAL_TOL).sum())
            viol_w += int((mw < 0).sum())
            k = int(np.argmin(md))
            if md[k] < worst_d[0]:
                worst_d = (float(md[k]), (float(done + k),))
            k = np.unravel_index(np.argmin(mw), mw.shape)
            if mw[k] < worst_w[0]:
                worst_w = (float(mw[k]), (float(done + k[0]), float(levels[k[1]])))
            done += m
        elapsed = ms()
    davis = VerificationReport(f"dyadic.davis_inequality[alpha={alpha:g}]", worst_d[0], worst_d[1],
                               DAVIS_EMPIRICAL_TOL, n_samples, elapsed,
                               details={"violations": viol_d, "seed": seed, "depth": depth})
    weak = VerificationReport("dyadic.weak_type_inequality", worst_w[0], worst_w[1], 0.0, n_samples * levels.size,
                              elapsed, details={"violations": viol_w, "seed": seed, "depth": depth})
    return davis, weak


# -- DP oracles --------------------------------------------------------------------------

def _oracle_a_grid(spacing: float, top: float, n: int = 48) -> np.ndarray:
    return np.geomspace(spacing, top, n)


def sup_oracle_davis(p: float, q: float, depth: int, a_grid=None, alpha: float = 3.0,
                     p_axis: Axis | None = None, q_axis: Axis | None = None, history: bool = False):
    """Best value of <O(f, sqrt(q^2 + (Sf)^2))> over test functions of depth <= k.

    V_0 = O and V_{j+1} = max(V_j, max_a 1/2 [V_j(p+a, r) + V_j(p-a, r)]),
    r = sqrt(q^2 + a^2), on a lattice around (p, q) with linear interpolation.
    Reads off the lattice take the obstacle value, which never exceeds V_j.
    """
    from .specfn import davis_constant

    if depth > MAX_ORACLE_DEPTH:
        raise ValueError(f"depth {depth} exceeds the oracle cap {MAX_ORACLE_DEPTH}")
    c = davis_constant(alpha).c_alpha
    ca = c**alpha

    def obst(P, Q):
        return ca * np.abs(Q) ** alpha - np.abs(P) ** alpha

    if p_axis is None:
        p_axis = Axis(p - 3.0 * max(q, 1.0), p + 3.0 * max(q, 1.0), 241)
    if q_axis is None:
        q_axis = Axis(0.0, 3.0 * max(q, 1.0), 241)
    if a_grid is None:
        a_grid = _oracle_a_grid(p_axis.spacing, 0.5 * (p_axis.hi - p_axis.lo))
    a_grid = np.asarray(a_grid, dtype=float)
    P, Q = np.meshgrid(p_axis.points, q_axis.points, indexing="ij")
    O = obst(P, Q)
    V = O.copy()
    trace = [float(obst(p, q))]
    for _ in range(depth):
        interp = RegularGridInterpolator((p_axis.points, q_axis.points), V, bounds_error=False, fill_value=np.nan)
        best = V.copy()
        for a in a_grid:
            r = np.sqrt(Q * Q + a * a)
            s = 0.0
            for pp in (P + a, P - a):
                v = interp(np.stack([pp, r], axis=-1))
                s = s + np.where(np.isnan(v), obst(pp, r), v)
            best = np.maximum(best, 0.5 * s)
        V = best
        trace.append(float(RegularGridInterpolator((p_axis.points, q_axis.points), V)([[p, q]])[0]))
    return (trace[-1], trace) if history else trace[-1]


def inf_oracle_bollobas(x: float, lam: float, depth: int, a_grid=None,
                        x_axis: Axis | None = None, lam_axis: Axis | None = None, history: bool = False):
    """Least value of <|f|> over test functions of depth <= k with (Sf)^2 >= lam.

    W_0 = |x| if lam <= 0 else +infinity (sentinel); W_{j+1} = min(W_j, min_a
    1/2 [W_j(x-a, lam-a^2) + W_j(x+a, lam-a^2)]).  Steps with a^2 >= lam exhaust
    the constraint in one split; their best value max(|x|, sqrt(lam)) is used in
    closed form.  Reads off the lattice use that same one-split value, which
    bounds W_j from above for j >= 1.
    """
    if depth > MAX_ORACLE_DEPTH:
        raise ValueError(f"depth {depth} exceeds the oracle cap {MAX_ORACLE_DEPTH}")
    if lam <= 0:
        return (abs(x), [abs(x)] * (depth + 1)) if history else abs(x)
    scale = np.sqrt(lam)
    if x_axis is None:
        x_axis = Axis(x - 2.0 * scale, x + 2.0 * scale, 241)
    if lam_axis is None:
        lam_axis = Axis(0.0, lam, 121)
    if a_grid is None:
        a_grid = np.geomspace(x_axis.spacing, scale, 48)
    a_grid = np.asarray(a_grid, dtype=float)
    X, L = np.meshgrid(x_axis.points, lam_axis.points, indexing="ij")
    one_split = np.maximum(np.abs(X), np.sqrt(L))
    W = np.where(L <= 0, np.abs(X), INF_SENTINEL)

    def read(interp, xx, ll):
        exhausted = ll <= 0
        v = interp(np.stack([xx, np.maximum(ll, 0.0)], axis=-1))
        fallback = np.maximum(np.abs(xx), np.sqrt(np.maximum(ll, 0.0)))
        v = np.where(np.isnan(v), fallback, v)
        return np.where(exhausted, np.abs(xx), v)

    def at_point(W):
        return float(RegularGridInterpolator((x_axis.points, lam_axis.points), W)([[x, lam]])[0])

    trace = [abs(x) if lam <= 0 else INF_SENTINEL]
    for _ in range(depth):
        interp = RegularGridInterpolator((x_axis.points, lam_axis.points), W, bounds_error=False, fill_value=np.nan)
        best = np.minimum(W, one_split)
        for a in a_grid:
            ll = L - a * a
            s = read(interp, X - a, ll) + read(interp, X + a, ll)
            best = np.minimum(best, np.minimum(0.5 * s, INF_SENTINEL))
        W = best
        trace.append(min(at_point(W), INF_SENTINEL))
    return (trace[-1], trace) if history else trace[-1]
