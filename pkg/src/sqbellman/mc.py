"""Monte-Carlo checks of the Brownian facts behind the Davis function.

Paths are Euler walks W(t + dt) = W(t) + sqrt(dt) Z.  Crossings are detected
on the time lattice only (no bridge correction), so first-passage times carry
the usual O(sqrt(dt)) overshoot bias.

Every path draws from its own Philox stream: the key comes from the seed and
the counter starts at the path index, so results do not depend on how paths
are grouped into batches.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .reports import VerificationReport, stopwatch

# expected overshoot of a discretely monitored Brownian path, in units of sqrt(dt)
# (-zeta(1/2) / sqrt(2 pi))
OVERSHOOT_BETA = 0.5825971579390106


@dataclass
class McConfig:
    n_paths: int = 200_000
    dt: float = 1e-4
    t_max: float = 50.0
    seed: int = 20240601
    a_values: tuple = ()
    n_boot: int = 200

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.t_max > 0:
            raise ValueError("t_max must be > 0")
        self.a_values = tuple(float(a) for a in self.a_values)


def _path_rng(seed: int, index: int) -> np.random.Generator:
    key = np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, index, 0]))


def _bootstrap_se(stat: Callable, samples: Sequence[np.ndarray], n_boot: int, seed: int) -> float:
    """Standard deviation of ``stat`` over paired resamples of the path index."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xB007]))
    n = samples[0].size
    if n < 2:
        return float("nan")
    vals = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, n, n)
        vals[b] = stat(*(s[idx] for s in samples))
    return float(np.std(vals, ddof=1))


# -- T_a ------------------------------------------------------------------------------

@njit(cache=True)
def _walk_T(rng, a_sorted, dt, t_max, T_out, W_out):
    # first time |W| >= a sqrt(t + 1) for every a (ascending); the boundaries are
    # nested, so one walk serves all of them.  Unreached levels keep t_max.
    sq = math.sqrt(dt)
    w = 0.0
    t = 0.0
    k = 0
    na = a_sorted.size
    while k < na:
        w += sq * rng.standard_normal()
        t += dt
        if t >= t_max:
            for j in range(k, na):
                T_out[j] = t_max
                W_out[j] = w
            return k
        r = math.sqrt(t + 1.0)
        while k < na and abs(w) >= a_sorted[k] * r:
            T_out[k] = t
            W_out[k] = w
            k += 1
    return na


@dataclass
class PathStats:
    a: float
    alpha: float
    n_paths: int
    censored: int
    e_w_alpha: float
    e_t_half_alpha: float
    ratio: float
    ratio_se: float
    ratio_boundary: float
    ratio_boundary_se: float
    e_t: float
    inconclusive: bool = False

    def to_row(self) -> dict:
        return asdict(self)


def simulate_paths_T(config: McConfig, first_path: int = 0, n: int | None = None):
    """Raw (T, W(T)) arrays of shape (n, len(a_values)); censored entries hold t_max."""
    a = np.sort(np.asarray(config.a_values, dtype=float))
    if a.size == 0 or np.any(a <= 0):
        raise ValueError("a_values must be positive")
    n = config.n_paths if n is None else n
    T = np.empty((n, a.size))
    W = np.empty((n, a.size))
    for i in range(n):
        _walk_T(_path_rng(config.seed, first_path + i), a, config.dt, config.t_max, T[i], W[i])
    return a, T, W


def simulate_T_a(config: McConfig, alpha: float) -> list[PathStats]:
    """Sharpness ratio E|W(T_a)|^alpha / E T_a^alpha/2 per a, plus the boundary form
    a^alpha E(T_a + 1)^alpha/2 / E T_a^alpha/2.  Censored paths enter as T = t_max."""
    a, T, W = simulate_paths_T(config)
    h = 0.5 * alpha
    out = []
    for j, aj in enumerate(a):
        t, w = T[:, j], W[:, j]
        cens = int(np.sum(t >= config.t_max))
        wa = np.abs(w) ** alpha
        th = t**h
        ratio = float(wa.mean() / th.mean())
        rb = float(aj**alpha * ((t + 1.0) ** h).mean() / th.mean())
        se = _bootstrap_se(lambda x, y: x.mean() / y.mean(), (wa, th), config.n_boot, config.seed + j)
        se_b = _bootstrap_se(lambda x, y: x.mean() / y.mean(), ((t + 1.0) ** h * aj**alpha, th),
                             config.n_boot, config.seed + 100 + j)
        out.append(PathStats(float(aj), float(alpha), int(t.size), cens, float(wa.mean()), float(th.mean()),
                             ratio, se, rb, se_b, float(t.mean()), inconclusive=cens == t.size))
    return out


def stats_to_csv(stats: Sequence[PathStats], path=None) -> str:
    buf = io.StringIO()
    rows = [s.to_row() for s in stats]
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()) if rows else ["a"])
    writer.writeheader()
    for r in rows:
        writer.writerow(r)
    text = buf.getvalue()
    if path is not None:
        with open(os.fspath(path), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


# -- exit from (-a, a) ----------------------------------------------------------------

@njit(cache=True)
def _walk_exit(rng, a, dt, t_max):
    sq = math.sqrt(dt)
    w = 0.0
    t = 0.0
    while abs(w) < a:
        w += sq * rng.standard_normal()
        t += dt
        if t >= t_max:
            return t, w, True
    return t, w, False


def simulate_exit(a: float, config: McConfig, offset: int = 0):
    """Exit time tau and position W(tau) from (-a, a) for each path."""
    if not a > 0:
        raise ValueError("exit interval (-a, a) needs a > 0")
    tau = np.empty(config.n_paths)
    pos = np.empty(config.n_paths)
    cens = 0
    for i in range(config.n_paths):
        t, w, c = _walk_exit(_path_rng(config.seed + offset, i), a, config.dt, config.t_max)
        tau[i], pos[i] = t, w
        cens += c
    return tau, pos, cens


def hitting_time_moments(a: float, config: McConfig) -> dict:
    """P(W(tau) = +-a) and E(tau | W(tau) = +-a) with bootstrap standard errors.

    ``shifted_target`` is (a + beta sqrt(dt))^2, the exit-time mean expected from
    the discrete-monitoring overshoot; it is the reference the check compares to.
    """
    tau, pos, cens = simulate_exit(a, config, offset=7919)
    plus = pos > 0
    n = tau.size
    up = plus.astype(float)
    res = {
        "a": a,
        "n_paths": n,
        "censored": cens,
        "p_plus": float(up.mean()),
        "p_minus": float(1.0 - up.mean()),
        "p_se": _bootstrap_se(lambda u: u.mean(), (up,), config.n_boot, config.seed + 1),
        "e_tau_given_plus": float(tau[plus].mean()),
        "e_tau_given_minus": float(tau[~plus].mean()),
        "e_tau_plus_se": _bootstrap_se(lambda t: t.mean(), (tau[plus],), config.n_boot, config.seed + 2),
        "e_tau_minus_se": _bootstrap_se(lambda t: t.mean(), (tau[~plus],), config.n_boot, config.seed + 3),
        "e_tau": float(tau.mean()),
        "target": a * a,
        "shifted_target": (a + OVERSHOOT_BETA * math.sqrt(config.dt)) ** 2,
    }
    return res


def check_hitting_time_moments(a: float, config: McConfig, n_se: float = 3.0) -> list[VerificationReport]:
    with stopwatch() as ms:
        m = hitting_time_moments(a, config)
        elapsed = ms()
    reps = []
    dev = abs(m["p_plus"] - 0.5)
    reps.append(VerificationReport("mc.exit_side_probability", n_se * m["p_se"] - dev, (a,), 0.0, m["n_paths"],
                                   elapsed, details={"p_plus": m["p_plus"], "se": m["p_se"]}))
    for side in ("plus", "minus"):
        est, se = m[f"e_tau_given_{side}"], m[f"e_tau_{side}_se"]
        dev = abs(est - m["shifted_target"])
        reps.append(VerificationReport(
            f"mc.exit_time_given_{side}", n_se * se - dev, (a,), 0.0, m["n_paths"], elapsed,
            details={"estimate": est, "se": se, "a_squared": m["target"], "shifted_target": m["shifted_target"],
                     "raw_deviation_from_a_squared": est - m["target"]},
        ))
    return reps


# -- supermartingale ----------------------------------------------------------------------

def supermartingale_means(U: Callable, config: McConfig, checkpoints: Sequence[float], offset: int = 104729):
    """Means of U(W(t_i), sqrt(t_i)) with W sampled exactly at the checkpoints."""
    ts = np.asarray(checkpoints, dtype=float)
    if np.any(np.diff(ts) <= 0) or ts[0] < 0:
        raise ValueError("checkpoints must be increasing and nonnegative")
    rng = _path_rng(config.seed + offset, 0)
    steps = np.diff(np.concatenate([[0.0], ts]))
    W = np.cumsum(rng.standard_normal((config.n_paths, ts.size)) * np.sqrt(steps), axis=1)
    vals = np.asarray(U(W, np.sqrt(ts)[None, :]), dtype=float)
    return ts, vals


def supermartingale_check(U: Callable, config: McConfig, checkpoints=(0.0, 0.25, 0.5, 1.0, 2.0),
                          n_se: float = 3.0, increasing: bool = False, name: str = "mc.supermartingale"):
    """Means nonincreasing (or nondecreasing with ``increasing``) within n_se
    bootstrap standard errors of each successive paired difference."""
    with stopwatch() as ms:
        ts, vals = supermartingale_means(U, config, checkpoints)
        means = vals.mean(axis=0)
        worst = np.inf
        where = ()
        ses = []
        for i in range(ts.size - 1):
            d = vals[:, i + 1] - vals[:, i]
            se = _bootstrap_se(lambda x: x.mean(), (d,), config.n_boot, config.seed + 10 + i)
            ses.append(se)
            step = d.mean() if not increasing else -d.mean()
            margin = n_se * se - step
            if margin < worst:
                worst, where = margin, (float(ts[i]), float(ts[i + 1]))
        elapsed = ms()
    return VerificationReport(name, worst, where, 0.0, int(vals.size), elapsed,
                              details={"checkpoints": ts.tolist(), "means": means.tolist(), "diff_se": ses})


# -- Jensen chain -----------------------------------------------------------------------

def jensen_gap_check(V: Callable, p: float, q: float, a: float, config: McConfig, n_se: float = 3.0):
    """The chain  V(p, q) >= E V(p + W(tau), sqrt(q^2 + tau)) >= mean of V(p +- a, sqrt(q^2 + a^2)),
    tau the exit time of (-a, a); each link must hold within n_se bootstrap SEs."""
    with stopwatch() as ms:
        if a == 0:
            top = float(V(p, q))
            mid = top
            se = 0.0
            bottom = top
        else:
            tau, pos, _ = simulate_exit(a, config, offset=15485863)
            # keep the overshoot: on the sampling lattice X is an exact discrete-time
            # supermartingale, so optional stopping applies without a bias term
            samples = np.asarray(V(p + pos, np.sqrt(q * q + tau)), dtype=float)
            mid = float(samples.mean())
            se = _bootstrap_se(lambda x: x.mean(), (samples,), config.n_boot, config.seed + 20)
            top = float(V(p, q))
            r = math.sqrt(q * q + a * a)
            bottom = 0.5 * float(V(p + a, r) + V(p - a, r))
        margin = min(top - mid + n_se * se, mid - bottom + n_se * se)
        elapsed = ms()
    return VerificationReport("mc.jensen_chain", margin, (p, q, a), 0.0, config.n_paths, elapsed,
                              details={"V(p,q)": top, "E V(p+W(tau), sqrt(q^2+tau))": mid, "se": se,
                                       "two_point_mean": bottom})
