"""Special functions behind the two Bellman functions.

``N_alpha(x) = 1F1(-alpha/2, 1/2, x^2/2)`` and its smallest positive zero
``c_alpha`` drive the Davis function; the Gaussian integral ``Phi`` and
``Psi(t) = t*Phi(t) + exp(-t^2/2)`` drive the Bollobas function.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

SQRT_HALF_PI = math.sqrt(math.pi / 2.0)


class TruncationError(ArithmeticError):
    """Series did not reach its tolerance within ``max_terms``."""


class BracketError(ValueError):
    """Root bracket has no sign change."""


class OutOfVerifiedRange(UserWarning):
    pass


@dataclass(frozen=True)
class SeriesParams:
    alpha: float
    tol: float = 1e-15
    max_terms: int = 500

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")

    @property
    def terminates(self) -> bool:
        """True when alpha is an even positive integer (polynomial N_alpha)."""
        half = self.alpha / 2.0
        return half == int(half)


def _series(alpha: float, tol: float, max_terms: int, x, deriv: bool):
    """Sum the 1F1 series in z = x^2; optionally the termwise x-derivative.

    term_{m+1} = term_m * (-2 x^2) (alpha/2 - m) / ((2m+1)(2m+2))
    """
    x = np.asarray(x, dtype=float)
    z = x * x
    half = alpha / 2.0
    coef = 1.0
    zpow = np.ones_like(z)
    total = np.ones_like(z)
    dtotal = np.zeros_like(z)  # sum of m * coef * z^(m-1)
    zpow_prev = np.zeros_like(z)  # z^(m-1)
    done = False
    for m in range(max_terms):
        coef = coef * (-2.0) * (half - m) / ((2 * m + 1) * (2 * m + 2))
        zpow_prev = zpow
        zpow = zpow * z
        term = coef * zpow
        total = total + term
        if deriv:
            dtotal = dtotal + (m + 1) * coef * zpow_prev
        if coef == 0.0:
            done = True
            break
        if m + 1 > half:
            small = np.abs(term) < tol * np.maximum(1.0, np.abs(total))
            if deriv:
                dterm = (m + 1) * coef * zpow_prev * np.abs(x)
                small &= np.abs(dterm) < tol * np.maximum(1.0, np.abs(dtotal * x))
            if np.all(small):
                done = True
                break
    if not done:
        raise TruncationError(
            f"N_alpha series (alpha={alpha}) not converged after "
            f"{max_terms} terms at max|x|={float(np.max(np.abs(x), initial=0.0)):.3g}"
        )
    if deriv:
        return 2.0 * x * dtotal
    return total


def _scalar_or_array(value, x):
    return float(value) if np.ndim(x) == 0 else value


def n_alpha(params: SeriesParams, x):
    """N_alpha(x) by the alternating power series (vectorised over ``x``)."""
    return _scalar_or_array(_series(params.alpha, params.tol, params.max_terms, x, False), x)


def n_alpha_deriv(params: SeriesParams, x, order: int = 1):
    """First derivative termwise; second via N''_alpha = -alpha N_{alpha-2}."""
    if order == 1:
        return _scalar_or_array(_series(params.alpha, params.tol, params.max_terms, x, True), x)
    if order == 2:
        lower = _series(params.alpha - 2.0, params.tol, params.max_terms, x, False)
        return _scalar_or_array(-params.alpha * lower, x)
    raise ValueError("order must be 1 or 2")


def hermite_residual(params: SeriesParams, x):
    """N'' - x N' + alpha N, which vanishes identically."""
    return (
        n_alpha_deriv(params, x, 2)
        - np.asarray(x) * n_alpha_deriv(params, x, 1)
        + params.alpha * n_alpha(params, x)
    )


# -- Gaussian integral and Psi ------------------------------------------------

_PHI_SERIES_MAX = 2.0


def _phi_series(tau):
    # sum (-1)^k tau^(2k+1) / (2^k k! (2k+1))
    tau = np.asarray(tau, dtype=float)
    t2 = -0.5 * tau * tau
    term = tau.copy()  # (-1/2)^k tau^(2k+1) / k!
    total = tau.copy()
    for k in range(1, 80):
        term = term * t2 / k
        inc = term / (2 * k + 1)
        total = total + inc
        if np.all(np.abs(inc) < 1e-17 * np.maximum(1.0, np.abs(total))):
            break
    return total


def _gauss(y):
    return math.exp(-0.5 * y * y)


def _phi_quad(tau: float) -> float:
    head = float(_phi_series(_PHI_SERIES_MAX))
    tail, _ = integrate.quad(_gauss, _PHI_SERIES_MAX, tau, epsabs=1e-14, epsrel=1e-14, limit=200)
    return head + tail


def phi(tau):
    """Integral of exp(-y^2/2) over [0, tau]; tau >= 0."""
    t = np.asarray(tau, dtype=float)
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ValueError("phi expects finite tau >= 0")
    out = np.empty_like(t)
    small = t <= _PHI_SERIES_MAX
    out[small] = _phi_series(t[small])
    if np.any(~small):
        out[~small] = [_phi_quad(v) for v in t[~small]]
    return _scalar_or_array(out, tau)


def psi(tau):
    """Psi(tau) = tau*Phi(tau) + exp(-tau^2/2); Psi' = Phi, Psi'' = exp(-tau^2/2)."""
    t = np.asarray(tau, dtype=float)
    return _scalar_or_array(t * np.asarray(phi(t)) + np.exp(-0.5 * t * t), tau)


def psi_inverse(y, lo: float = 0.0, hi: float = 8.0, tol: float = 1e-12):
    """Inverse of the increasing map Psi on [lo, hi], by vectorised bisection."""
    y = np.asarray(y, dtype=float)
    plo, phi_ = psi(lo), psi(hi)
    if np.any(y < plo) or np.any(y > phi_):
        raise ValueError(f"psi_inverse: value outside [{plo}, {phi_}]")
    # tighten the bracket first so most bisection steps stay in the series regime
    top = float(np.max(y, initial=plo))
    hi_eff = max(lo, min(hi, 1.0))
    while psi(hi_eff) < top and hi_eff < hi:
        hi_eff = min(hi, 2.0 * hi_eff if hi_eff > 0 else 1.0)
    a = np.full_like(y, lo)
    b = np.full_like(y, hi_eff)
    while np.max(b - a, initial=0.0) > tol:
        mid = 0.5 * (a + b)
        below = np.asarray(psi(mid)) < y
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
    return _scalar_or_array(0.5 * (a + b), y)


# -- the Davis constant ---------------------------------------------------------

@dataclass(frozen=True)
class DavisConstant:
    alpha: float
    c_alpha: float
    kappa_alpha: float
    residual: float
    out_of_range: bool = False


def _bracket_scan(params: SeriesParams, lo: float, hi: float, step: float):
    xs = np.arange(lo, hi + step, step)
    vals = np.asarray(n_alpha(params, xs))
    flips = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    if flips.size == 0:
        return None
    k = flips[0]
    return float(xs[k]), float(xs[k + 1])


def find_c_alpha(params: SeriesParams, root_tol: float = 1e-14) -> DavisConstant:
    """Smallest positive zero of N_alpha together with kappa_alpha.

    For alpha >= 2 the zero lies in (0, 1], which brackets the Brent search.
    Smaller alpha falls back to a sign scan on (0, 4] and sets ``out_of_range``.
    """
    alpha = params.alpha
    f = lambda x: float(n_alpha(params, x))  # noqa: E731
    out_of_range = alpha < 2.0
    if not out_of_range:
        lo, hi = 1e-6, 1.0
        if f(hi) == 0.0:
            root = hi
        elif f(lo) * f(hi) > 0:
            raise BracketError(f"no sign change of N_alpha on [{lo}, {hi}] for alpha={alpha}")
        else:
            root = optimize.brentq(f, lo, hi, xtol=1e-16, rtol=1e-15, maxiter=200)
    else:
        warnings.warn(
            f"alpha={alpha} < 2 is outside the verified range; using a widened bracket",
            OutOfVerifiedRange,
            stacklevel=2,
        )
        bracket = _bracket_scan(params, 1e-6, 4.0, 1e-2)
        if bracket is None:
            raise BracketError(f"no sign change of N_alpha on (0, 4] for alpha={alpha}")
        root = optimize.brentq(f, *bracket, xtol=1e-16, rtol=1e-15, maxiter=200)
    residual = abs(f(root))
    if residual > root_tol:
        raise BracketError(f"root residual {residual:.3g} exceeds {root_tol:.3g} for alpha={alpha}")
    slope = float(n_alpha_deriv(params, root, 1))
    kappa = -alpha * root ** (alpha - 1.0) / slope
    return DavisConstant(alpha, root, kappa, residual, out_of_range)


def davis_constant(alpha: float) -> DavisConstant:
    """Shorthand with default series parameters."""
    return find_c_alpha(SeriesParams(alpha))
