"""Closed-form weak-type Bellman function and the scalar facts behind it.

``B(x, l) = sqrt(l) Psi(|x|/sqrt(l)) / Psi(1)`` inside the parabola ``x^2 <= l``
and ``|x|`` outside.  B satisfies the *reversed* main inequality

    B(x-a, l-a^2) + B(x+a, l-a^2) - 2 B(x, l) >= 0,

so the checks here report that margin (note the opposite sign convention to
the Davis checks, which use ``2U - children``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Sequence

import numpy as np

from .reports import VerificationReport, stopwatch, worst_of
from .specfn import phi, psi, psi_inverse

CLOSED_FORM_TOL = 1e-9
FD_TOL = 1e-6


def weak_type_constant() -> float:
    """Sharp constant C in  l |{Sf >= l}| <= C <|f|> |I|,  equal to Psi(1).

    By the scaling B(tx, t^2 l) = |t| B(x, l), the best constant for the level
    sqrt(l) is sqrt(l) / B(0, l) = 1 / b(0) with b(0) = Psi(0)/Psi(1) = 1/Psi(1).
    """
    return float(psi(1.0))


@dataclass(frozen=True)
class BollobasBellman:
    psi1: float = field(default_factory=weak_type_constant)

    def __call__(self, x, lam):
        return bollobas_B(x, lam, self.psi1)

    def reduced(self, tau):
        """b(tau) = B(tau, 1)."""
        return bollobas_B(tau, 1.0, self.psi1)


def bollobas_B(x, lam, psi1: float | None = None):
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("bollobas_B needs lambda >= 0")
    if psi1 is None:
        psi1 = weak_type_constant()
    ax = np.abs(x)
    inside = (ax * ax <= lam) & (lam > 0)
    root = np.sqrt(np.where(inside, lam, 1.0))
    tau = np.where(inside, ax / root, 0.0)
    val = np.where(inside, root * np.asarray(psi(np.broadcast_to(tau, np.broadcast(x, lam).shape))) / psi1, ax)
    return float(val) if val.ndim == 0 else val


# -- main inequality, stratified by case ----------------------------------------------

CASE_NAMES = {1: "both children inside", 2: "left child outside", 3: "right child outside only"}


def classify_cases(x, lam, a):
    """1: both children inside the parabola, 2: the child nearer the axis is
    outside (hence both are), 3: only the farther child is outside.  Points are
    reflected to x >= 0, a >= 0 first."""
    ax, aa = np.abs(x), np.abs(a)
    lam2 = lam - aa * aa
    left_out = (ax - aa) ** 2 >= lam2
    right_out = (ax + aa) ** 2 >= lam2
    return np.where(left_out, 2, np.where(right_out, 3, 1))


def default_B_lattice(n_x: int = 81, n_lam: int = 40, n_s: int = 81):
    """(x, lambda, a) samples with a^2 < lambda: a = s sqrt(lambda), |s| < 1."""
    x = np.linspace(-1.6, 1.6, n_x)
    lam = np.linspace(0.05, 2.0, n_lam)
    s = np.linspace(-0.995, 0.995, n_s)
    X, L, S = np.meshgrid(x, lam, s, indexing="ij")
    return X.ravel(), L.ravel(), (S * np.sqrt(L)).ravel()


def check_main_inequality_B(
    x=None, lam=None, a=None, tol: float = CLOSED_FORM_TOL, min_per_case: int = 1000, bell=None
) -> list[VerificationReport]:
    """Reversed main inequality on a lattice, one report per proof case plus a total."""
    if x is None:
        x, lam, a = default_B_lattice()
    x, lam, a = (np.asarray(v, dtype=float).ravel() for v in np.broadcast_arrays(x, lam, a))
    if np.any(a * a >= lam):
        raise ValueError("main inequality samples need a^2 < lambda")
    B = bell if bell is not None else BollobasBellman()
    with stopwatch() as ms:
        lam2 = lam - a * a
        margin = B(x - a, lam2) + B(x + a, lam2) - 2.0 * B(x, lam)
        cases = classify_cases(x, lam, a)
        elapsed = ms()
    reports = []
    for k in (1, 2, 3):
        sel = cases == k
        worst, where = worst_of(margin[sel], (x[sel], lam[sel], a[sel]))
        rep = VerificationReport(
            f"bollobas.main_inequality.case{k}", worst, where, tol, int(sel.sum()), elapsed,
            details={"case": CASE_NAMES[k], "min_samples": min_per_case},
        )
        rep.passed = bool(rep.passed and sel.sum() >= min_per_case)
        reports.append(rep)
    worst, where = worst_of(margin, (x, lam, a))
    reports.append(VerificationReport("bollobas.main_inequality", worst, where, tol, margin.size, elapsed))
    return reports


# -- scalar facts ----------------------------------------------------------------------

def _phi_signed(t):
    t = np.asarray(t, dtype=float)
    return np.sign(t) * np.asarray(phi(np.abs(t)))


def X_map(x, tau):
    """X(x, tau) = (x + tau) / sqrt(1 - tau^2)."""
    return (x + tau) / np.sqrt(1.0 - tau * tau)


def check_case1_concavity(x=None, tau=None, tol: float = 1e-12) -> VerificationReport:
    """Average of exp(-s^2/2) over [X(x,-tau), X(x,tau)] is at least the average of
    its endpoint values, whenever both endpoints lie in [-1, 1]."""
    if x is None:
        X, T = np.meshgrid(np.linspace(0.0, 0.99, 100), np.linspace(0.0, 0.99, 100), indexing="ij")
        x, tau = X.ravel(), T.ravel()
    x, tau = (np.asarray(v, dtype=float).ravel() for v in np.broadcast_arrays(x, tau))
    with stopwatch() as ms:
        hi, lo = X_map(x, tau), X_map(x, -tau)
        keep = (np.abs(hi) <= 1.0) & (np.abs(lo) <= 1.0)
        hi, lo, xs, ts = hi[keep], lo[keep], x[keep], tau[keep]
        width = hi - lo
        ends = 0.5 * (np.exp(-0.5 * hi * hi) + np.exp(-0.5 * lo * lo))
        safe = np.where(width > 1e-9, width, 1.0)
        mean = np.where(width > 1e-9, (_phi_signed(hi) - _phi_signed(lo)) / safe, np.exp(-0.5 * hi * hi))
        margin = mean - ends
        worst, where = worst_of(margin, (xs, ts))
        elapsed = ms()
    return VerificationReport("bollobas.case1_concavity", worst, where, tol, int(keep.sum()), elapsed)


def _report(name, margin, coords, tol, t0):
    worst, where = worst_of(np.asarray(margin), coords)
    return VerificationReport(name, worst, where, tol, int(np.asarray(margin).size), t0())


def check_scalar_inequalities(n: int = 10_000) -> list[VerificationReport]:
    """The one-variable inequalities used in the case analysis, on n-point samples."""
    psi1 = weak_type_constant()
    x = np.linspace(0.0, 1.0, n)
    out = []
    with stopwatch() as ms:
        out.append(_report("bollobas.ori", np.asarray(psi(x)) - psi1 * x, (x,), 1e-12, ms))
    with stopwatch() as ms:
        lhs = 0.5 * (x + np.sqrt(2.0 - x * x)) * (2.0 * np.asarray(psi(x)) / psi1 - x)
        out.append(_report("bollobas.sami", 1.0 - lhs, (x,), 1e-12, ms))
    with stopwatch() as ms:
        xp = x[1:]
        ratio = np.asarray(psi(xp)) / xp
        out.append(_report("bollobas.psi_over_x_decreasing", ratio[:-1] - ratio[1:], (xp[:-1],), 0.0, ms))
    with stopwatch() as ms:
        t = np.linspace(1.0 / math.sqrt(2.0), 1.0, n)
        xt = t - np.sqrt(np.clip(1.0 - t * t, 0.0, None))
        rhs = np.asarray(psi_inverse(np.minimum(psi1 * t, psi1)))
        out.append(_report("bollobas.case2_reduction", rhs - xt, (t,), 1e-10, ms))
    with stopwatch() as ms:
        out.append(_report("bollobas.psi1_lower_bound", np.array([psi1 - 29.0 / 28.0]), (np.array([1.0]),), 0.0, ms))
    with stopwatch() as ms:
        r2 = math.sqrt(2.0)
        m = np.array([r2 - 41.0 / 29.0, 17.0 / 12.0 - r2])
        out.append(_report("bollobas.sqrt2_bounds", m, (np.array([41 / 29, 17 / 12]),), 0.0, ms))
    with stopwatch() as ms:
        quartic = CASE3_QUARTIC(x)
        out.append(_report("bollobas.case3_quartic_nonpositive", -quartic, (x,), 0.0, ms))
    with stopwatch() as ms:
        roots = sturm_root_count(CASE3_QUARTIC, (0, 1))
        rep = VerificationReport("bollobas.case3_sturm", float(-roots), (0.0, 1.0), 0.0, 1, ms(),
                                 details={"roots_in_open_interval": roots})
        out.append(rep)
    return out


def check_properties_B(bell: BollobasBellman | None = None) -> list[VerificationReport]:
    """Structural facts: minimum at x = 0, convexity in x, growth in lambda, the
    range condition, the scaling law, and the reduced ODE inside the parabola."""
    B = bell or BollobasBellman()
    x = np.linspace(-2.0, 2.0, 201)
    lam = np.linspace(0.0, 2.0, 101)
    X, L = np.meshgrid(x, lam, indexing="ij")
    V = B(X, L)
    reps = []
    with stopwatch() as ms:
        reps.append(_report("bollobas.min_at_zero", V - B(0.0, L), (X, L), CLOSED_FORM_TOL, ms))
    with stopwatch() as ms:
        sec = V[:-2] - 2 * V[1:-1] + V[2:]
        reps.append(_report("bollobas.convex_in_x", sec, (X[1:-1], L[1:-1]), CLOSED_FORM_TOL, ms))
    with stopwatch() as ms:
        d = V[:, 1:] - V[:, :-1]
        reps.append(_report("bollobas.increasing_in_lambda", d, (X[:, :-1], L[:, :-1]), CLOSED_FORM_TOL, ms))
    with stopwatch() as ms:
        rng = np.maximum(np.abs(X), np.sqrt(L)) - V
        reps.append(_report("bollobas.range_condition", rng, (X, L), CLOSED_FORM_TOL, ms))
    with stopwatch() as ms:
        reps.append(_report("bollobas.above_abs_x", V - np.abs(X), (X, L), CLOSED_FORM_TOL, ms))
    with stopwatch() as ms:
        t = 1.7
        m = -np.abs(B(t * X, t * t * L) - t * V)
        reps.append(_report("bollobas.homogeneity", m, (X, L), CLOSED_FORM_TOL, ms))
    with stopwatch() as ms:
        tau = np.linspace(-0.97, 0.97, 195)
        h = 1e-4
        b = B.reduced
        bpp = (b(tau + h) - 2 * b(tau) + b(tau - h)) / (h * h)
        bp = (b(tau + h) - b(tau - h)) / (2 * h)
        res = -np.abs(bpp + tau * bp - b(tau))
        reps.append(_report("bollobas.reduced_ode", res, (tau,), FD_TOL, ms))
    return reps


# -- polynomials and Sturm chains -------------------------------------------------------

class EndpointRootError(ValueError):
    """An interval endpoint is a root; shift the endpoint slightly and retry."""


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial, coefficients in ascending degree.

    Integer and Fraction coefficients are kept exact; anything else is float.
    Trailing zero coefficients are dropped.
    """

    coeffs: tuple

    def __init__(self, coeffs: Sequence):
        cs = list(coeffs)
        exact = all(isinstance(c, Rational) for c in cs)
        cs = [Fraction(c) for c in cs] if exact else [float(c) for c in cs]
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        if not cs:
            cs = [Fraction(0) if exact else 0.0]
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def from_descending(cls, coeffs: Sequence) -> "Polynomial":
        return cls(list(coeffs)[::-1])

    @property
    def exact(self) -> bool:
        return isinstance(self.coeffs[0], Fraction)

    @property
    def degree(self) -> int:
        return -1 if self.is_zero() else len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and self.coeffs[0] == 0

    def __call__(self, x):
        if isinstance(x, (int, Fraction)) and self.exact:
            acc = Fraction(0)
            for c in reversed(self.coeffs):
                acc = acc * x + c
            return acc
        x = np.asarray(x, dtype=float)
        acc = np.zeros_like(x)
        for c in reversed(self.coeffs):
            acc = acc * x + float(c)
        return float(acc) if acc.ndim == 0 else acc

    def derivative(self) -> "Polynomial":
        if len(self.coeffs) == 1:
            return Polynomial([self.coeffs[0] * 0])
        return Polynomial([k * c for k, c in enumerate(self.coeffs)][1:])

    def monic(self) -> "Polynomial":
        lead = self.coeffs[-1]
        return Polynomial([c / lead for c in self.coeffs])

    def divmod(self, other: "Polynomial", drop: float = 0.0):
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        num = list(self.coeffs)
        den = other.coeffs
        dd = len(den) - 1
        zero = num[0] * 0
        if len(num) - 1 < dd:
            return Polynomial([zero]), self
        quot = [zero] * (len(num) - dd)
        for k in range(len(num) - 1, dd - 1, -1):
            f = num[k] / den[-1]
            quot[k - dd] = f
            for i in range(dd + 1):
                num[k - dd + i] -= f * den[i]
        rem = num[:dd] or [zero]
        if drop > 0:
            scale = max(abs(c) for c in self.coeffs)
            rem = [0.0 if abs(c) <= drop * scale else c for c in rem]
        return Polynomial(quot), Polynomial(rem)


def _poly_gcd(p: Polynomial, q: Polynomial, drop: float) -> Polynomial:
    while not q.is_zero():
        _, r = p.divmod(q, drop)
        p, q = q, r
    return p.monic()


def square_free(p: Polynomial, drop: float = 1e-12) -> Polynomial:
    """p / gcd(p, p'), which has the same distinct roots but no repeated ones."""
    if p.degree <= 1:
        return p
    g = _poly_gcd(p, p.derivative(), drop if not p.exact else 0.0)
    if g.degree <= 0:
        return p
    quot, _ = p.divmod(g)
    return quot


def sturm_chain(p: Polynomial, drop: float = 1e-12) -> list[Polynomial]:
    """p0 = p, p1 = p', p_{k+1} = -rem(p_{k-1}, p_k).  Float chains are
    normalised to unit max-coefficient at each step."""
    d = 0.0 if p.exact else drop
    chain = [p, p.derivative()]
    while chain[-1].degree > 0:
        _, r = chain[-2].divmod(chain[-1], d)
        if r.is_zero():
            break
        r = Polynomial([-c for c in r.coeffs])
        if not p.exact:
            s = max(abs(c) for c in r.coeffs)
            r = Polynomial([c / s for c in r.coeffs])
        chain.append(r)
    return chain


def _sign_changes(values) -> int:
    signs = [v > 0 for v in values if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def sturm_root_count(poly, interval, drop: float = 1e-12) -> int:
    """Number of distinct real roots of ``poly`` in the open interval (a, b)."""
    p = poly if isinstance(poly, Polynomial) else Polynomial(poly)
    a, b = interval
    if not a < b:
        raise ValueError("interval must satisfy a < b")
    if p.degree <= 0:
        if p.is_zero():
            raise ValueError("the zero polynomial has infinitely many roots")
        return 0
    exact = p.exact and isinstance(a, Rational) and isinstance(b, Rational)
    if not exact and p.exact:
        p = Polynomial([float(c) for c in p.coeffs])
    if exact:
        a, b = Fraction(a), Fraction(b)
    for end in (a, b):
        val = p(end)
        if val == 0 or (not exact and abs(val) <= drop * max(abs(float(c)) for c in p.coeffs)):
            raise EndpointRootError(
                f"{end} is a root of the polynomial; move the endpoint by a small amount and retry"
            )
    chain = sturm_chain(square_free(p, drop), drop)
    return _sign_changes([q(a) for q in chain]) - _sign_changes([q(b) for q in chain])


# 246x^4 - 486x^3 + 233x^2 - 12x - 8, negative on [0, 1]
CASE3_QUARTIC = Polynomial([-8, -12, 233, -486, 246])
