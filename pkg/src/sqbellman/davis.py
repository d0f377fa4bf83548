"""Closed-form Davis Bellman function and its pointwise properties.

``U(p, q) = q^alpha u_alpha(|p|/q)`` where ``u_alpha`` is ``kappa_alpha N_alpha``
inside the cone ``|x| <= c_alpha`` and the obstacle ``c_alpha^alpha - |x|^alpha``
outside it.  Every check returns a :class:`VerificationReport`.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .lattice import DEFAULT_DAVIS_LATTICE, Axis, Lattice3
from .reports import VerificationReport, stopwatch, worst_of
from .specfn import DavisConstant, SeriesParams, find_c_alpha, n_alpha, n_alpha_deriv

CLOSED_FORM_TOL = 1e-9
FD_TOL = 1e-6
DEFAULT_ALPHAS = (2.0, 2.5, 3.0, 4.0, 6.0)


@dataclass(frozen=True)
class DavisBellman:
    alpha: float
    constant: DavisConstant
    params: SeriesParams

    @classmethod
    def for_alpha(cls, alpha: float) -> "DavisBellman":
        params = SeriesParams(alpha)
        return cls(alpha, find_c_alpha(params), params)

    @property
    def c(self) -> float:
        return self.constant.c_alpha

    @property
    def kappa(self) -> float:
        return self.constant.kappa_alpha

    def with_kappa(self, kappa: float) -> "DavisBellman":
        """Same function with a different interior amplitude (negative controls)."""
        return dataclasses.replace(self, constant=dataclasses.replace(self.constant, kappa_alpha=kappa))

    def obstacle(self, p, q):
        """O_0(p, q) = c^alpha |q|^alpha - |p|^alpha."""
        return self.c**self.alpha * np.abs(q) ** self.alpha - np.abs(p) ** self.alpha

    def __call__(self, p, q):
        return davis_U(self, p, q)


def u_alpha(bell: DavisBellman, x):
    x = np.abs(np.asarray(x, dtype=float))
    inside = x <= bell.c
    out = bell.c**bell.alpha - x**bell.alpha
    if np.any(inside):
        out = np.where(inside, 0.0, out)
        out[inside] = bell.kappa * np.asarray(n_alpha(bell.params, x[inside]))
    return float(out) if out.ndim == 0 else out


def davis_U(bell: DavisBellman, p, q):
    """U(p, q); ``q`` must be nonnegative."""
    p = np.abs(np.asarray(p, dtype=float))
    q = np.asarray(q, dtype=float)
    if np.any(q < 0):
        raise ValueError("davis_U needs q >= 0")
    p, q = np.broadcast_arrays(p, q)
    a = bell.alpha
    # the exterior branch is written exactly as the obstacle so that U - O vanishes bit-for-bit
    out = bell.c**a * q**a - p**a
    inside = (q > 0) & (p <= bell.c * q)
    if np.any(inside):
        out = np.array(out, dtype=float)
        qi = q[inside]
        out[inside] = bell.kappa * qi**a * np.asarray(n_alpha(bell.params, p[inside] / qi))
    return float(out) if np.ndim(out) == 0 else out


# -- finite-difference inequality on a lattice ----------------------------------

def check_main_inequality(
    bell: DavisBellman, lattice: Lattice3 = DEFAULT_DAVIS_LATTICE, tol: float = CLOSED_FORM_TOL
) -> VerificationReport:
    """min over the lattice of 2U(p,q) - U(p+a, r) - U(p-a, r), r = sqrt(a^2+q^2)."""
    worst, where = np.inf, ()
    with stopwatch() as ms:
        P, Q = lattice.plane()
        centre = 2.0 * davis_U(bell, P, Q)
        for a in lattice.step.points:
            r = np.sqrt(a * a + Q * Q)
            margin = centre - davis_U(bell, P + a, r) - davis_U(bell, P - a, r)
            w, loc = worst_of(margin, (P, Q, np.full_like(P, a)))
            if w < worst:
                worst, where = w, loc
        elapsed = ms()
    return VerificationReport(
        f"davis.main_inequality[alpha={bell.alpha:g}]", worst, where, tol, lattice.size, elapsed
    )


def check_obstacle_majorization(
    bell: DavisBellman, lattice: Lattice3 = DEFAULT_DAVIS_LATTICE, tol: float = CLOSED_FORM_TOL
) -> VerificationReport:
    """min of U - O_0 on the (p, q) plane of ``lattice``.

    ``details['exterior_max_abs']`` records max |U - O_0| over samples with
    |p| >= c q, where the two coincide exactly.
    """
    with stopwatch() as ms:
        P, Q = lattice.plane()
        margin = davis_U(bell, P, Q) - bell.obstacle(P, Q)
        worst, where = worst_of(margin, (P, Q))
        exterior = np.abs(P) >= bell.c * Q
        ext_max = float(np.max(np.abs(margin[exterior]), initial=0.0))
        elapsed = ms()
    rep = VerificationReport(
        f"davis.obstacle_majorization[alpha={bell.alpha:g}]", worst, where, tol, margin.size, elapsed,
        details={"exterior_max_abs": ext_max, "exterior_samples": int(exterior.sum())},
    )
    rep.passed = bool(rep.passed and ext_max == 0.0)
    return rep


def _fd_heat_once(fun: Callable, P, Q, h):
    upp = (fun(P + h, Q) - 2.0 * fun(P, Q) + fun(P - h, Q)) / (h * h)
    uq = (fun(P, Q + h) - fun(P, Q - h)) / (2.0 * h)
    return uq / Q + upp


def _fd_heat(fun: Callable, P, Q, h):
    """U_q/q + U_pp by central differences at steps h and h/2, Richardson-combined
    (fourth order); h may be an array."""
    return (4.0 * _fd_heat_once(fun, P, Q, 0.5 * h) - _fd_heat_once(fun, P, Q, h)) / 3.0


def check_infinitesimal(
    bell: DavisBellman,
    p_axis: Axis = DEFAULT_DAVIS_LATTICE.first,
    q_axis: Axis = Axis(0.25, 3.0, 111),
    h: float = 1e-3,
    tol: float = FD_TOL,
) -> VerificationReport:
    """U_q/q + U_pp <= 0 everywhere, with equality inside the cone |p| < c q.

    The operator is homogeneous of degree alpha - 2, so the residual is reported
    in scale-free form (U_q/q + U_pp) / q^(alpha-2), i.e. the value at the
    rescaled point (p/q, 1).  The stencil step is ``h * q`` for the same reason.
    The margin is minus the residual outside the cone and minus its absolute
    value inside.
    Stencils that straddle p = 0 or the cone boundary are skipped.
    """
    if q_axis.lo <= 0:
        raise ValueError("check_infinitesimal needs q > 0 on the whole lattice")
    with stopwatch() as ms:
        P, Q = np.meshgrid(p_axis.points, q_axis.points, indexing="ij")
        hq = h * Q
        heat = _fd_heat(bell, P, Q, hq) / Q ** (bell.alpha - 2.0)
        ratio = np.abs(P) / Q
        keep = (np.abs(P) > 2 * hq) & (np.abs(np.abs(P) - bell.c * Q) > 2 * hq * (1 + bell.c))
        inside = ratio < bell.c
        margin = np.where(inside, -np.abs(heat), -heat)[keep]
        worst, where = worst_of(margin, (P[keep], Q[keep]))
        eq_resid = float(np.max(np.abs(heat[keep & inside]), initial=0.0))
        elapsed = ms()
    return VerificationReport(
        f"davis.infinitesimal[alpha={bell.alpha:g}]", worst, where, tol, int(keep.sum()), elapsed,
        details={"h": h, "interior_equality_residual": eq_resid},
    )


def check_convexity_in_t(
    bell, p_points=None, t_points=None, tol: float = CLOSED_FORM_TOL, name: str | None = None
) -> VerificationReport:
    """Second differences of t -> U(p, sqrt(t)) on a uniform t-grid."""
    if p_points is None:
        p_points = DEFAULT_DAVIS_LATTICE.first.points
    if t_points is None:
        t_points = np.linspace(0.0, 9.0, 181)
    fun = bell if callable(bell) else None
    with stopwatch() as ms:
        P, T = np.meshgrid(np.asarray(p_points, float), np.asarray(t_points, float), indexing="ij")
        V = fun(P, np.sqrt(T))
        second = V[:, :-2] - 2.0 * V[:, 1:-1] + V[:, 2:]
        worst, where = worst_of(second, (P[:, 1:-1], T[:, 1:-1]))
        elapsed = ms()
    label = name or f"davis.convexity_in_t[alpha={getattr(bell, 'alpha', float('nan')):g}]"
    return VerificationReport(label, worst, where, tol, second.size, elapsed)


def check_ode_residual(
    bell: DavisBellman, x_points=None, h: float = 1e-4, tol: float = FD_TOL
) -> VerificationReport:
    """b'' - x b' + alpha b = 0 for b(x) = U(x, 1) on (-c, c); left slope at c."""
    c = bell.c
    if x_points is None:
        x_points = np.linspace(-0.98 * c, 0.98 * c, 99)
    x = np.asarray(x_points, dtype=float)
    if np.any(np.abs(x) + h >= c):
        raise ValueError("ODE residual points must stay inside (-c_alpha, c_alpha)")
    b = lambda s: davis_U(bell, s, 1.0)  # noqa: E731
    with stopwatch() as ms:
        b2 = (b(x + h) - 2.0 * b(x) + b(x - h)) / (h * h)
        b1 = (b(x + h) - b(x - h)) / (2.0 * h)
        resid = np.abs(b2 - x * b1 + bell.alpha * b(x))
        slope = (3.0 * b(c) - 4.0 * b(c - h) + b(c - 2.0 * h)) / (2.0 * h)
        slope_err = abs(slope + bell.alpha * c ** (bell.alpha - 1.0))
        margin = -np.append(resid, slope_err)
        worst, where = worst_of(margin, (np.append(x, c),))
        elapsed = ms()
    return VerificationReport(
        f"davis.ode_residual[alpha={bell.alpha:g}]", worst, where, tol, margin.size, elapsed,
        details={"slope_at_c": slope, "expected_slope": -bell.alpha * c ** (bell.alpha - 1.0)},
    )


def backward_heat_checker(
    obstacle: Callable,
    p_axis: Axis,
    q_axis: Axis,
    region: Callable | None = None,
    h: float = 1e-3,
    tol: float = FD_TOL,
    kink_band: float | None = None,
) -> dict:
    """Test O_pp + O_q/q <= 0 and convexity of t -> O(p, sqrt(t)).

    When both hold the obstacle is its own heat envelope; ``prediction`` is
    that verdict.  ``region(p, q)`` optionally restricts the samples.  The
    stencil step at (p, q) is ``h * q``.
    """
    if q_axis.lo <= 0:
        raise ValueError("backward_heat_checker needs q > 0 on the lattice")
    P, Q = np.meshgrid(p_axis.points, q_axis.points, indexing="ij")
    keep = np.ones_like(P, dtype=bool) if region is None else np.asarray(region(P, Q), dtype=bool)
    hq = h * Q
    if region is not None:
        # every stencil point must stay in the region
        for dp, dq in ((hq, 0), (-hq, 0), (0, hq), (0, -hq)):
            keep &= np.asarray(region(P + dp, Q + dq), dtype=bool)
    band = 2 * hq if kink_band is None else kink_band
    keep &= np.abs(P) > band
    with stopwatch() as ms:
        vals = obstacle(P, Q)
        if not np.all(np.isfinite(vals[keep])):
            raise ValueError("obstacle is not finite on the lattice")
        heat = _fd_heat(obstacle, P, Q, hq)
        worst, where = worst_of(-heat[keep], (P[keep], Q[keep]))
        elapsed = ms()
    residual = VerificationReport(
        "heat.backward_residual", worst, where, tol, int(keep.sum()), elapsed,
        details={"max_abs_residual": float(np.max(np.abs(heat[keep]), initial=0.0))},
    )
    # convexity in t = q^2 on the q-range of the lattice, restricted the same way
    t = np.linspace(q_axis.lo**2, q_axis.hi**2, 2 * q_axis.n)
    with stopwatch() as ms:
        PT, TT = np.meshgrid(p_axis.points, t, indexing="ij")
        V = obstacle(PT, np.sqrt(TT))
        second = V[:, :-2] - 2.0 * V[:, 1:-1] + V[:, 2:]
        mask = np.ones_like(second, dtype=bool)
        if region is not None:
            for k in (0, 1, 2):
                mask &= np.asarray(region(PT[:, k : k + second.shape[1]], np.sqrt(TT[:, k : k + second.shape[1]])))
        cw, cwhere = worst_of(second[mask], (PT[:, 1:-1][mask], TT[:, 1:-1][mask]))
        elapsed = ms()
    convexity = VerificationReport("heat.convexity_in_t", cw, cwhere, CLOSED_FORM_TOL, int(mask.sum()), elapsed)
    equality = bool(residual.details["max_abs_residual"] <= tol)
    return {
        "residual_report": residual,
        "convexity_report": convexity,
        "backward_heat_equality": equality,
        "prediction": bool(residual.passed and convexity.passed),
    }


# -- structural properties -------------------------------------------------------

def check_properties(bell: DavisBellman, lattice: Lattice3 = DEFAULT_DAVIS_LATTICE) -> list[VerificationReport]:
    """Evenness, monotonicity in q, C^1 matching at c, and the N' ratio monotonicity."""
    reports = []
    P, Q = lattice.plane()
    with stopwatch() as ms:
        diff = -np.abs(davis_U(bell, P, Q) - davis_U(bell, -P, Q))
        w, loc = worst_of(diff, (P, Q))
        reports.append(VerificationReport(f"davis.evenness[alpha={bell.alpha:g}]", w, loc, 0.0, diff.size, ms()))
    with stopwatch() as ms:
        V = davis_U(bell, P, Q)
        inc = V[:, 1:] - V[:, :-1]
        w, loc = worst_of(inc, (P[:, 1:], Q[:, 1:]))
        reports.append(
            VerificationReport(f"davis.monotone_in_q[alpha={bell.alpha:g}]", w, loc, CLOSED_FORM_TOL, inc.size, ms())
        )
    with stopwatch() as ms:
        c, a = bell.c, bell.alpha
        inner_val = bell.kappa * n_alpha(bell.params, c)
        inner_slope = bell.kappa * n_alpha_deriv(bell.params, c, 1)
        gap = max(abs(inner_val), abs(inner_slope + a * c ** (a - 1.0)))
        reports.append(VerificationReport(f"davis.c1_matching[alpha={a:g}]", -gap, (c,), 1e-8, 2, ms()))
    with stopwatch() as ms:
        x = np.linspace(1e-3, bell.c, 400)
        ratio = -np.asarray(n_alpha_deriv(bell.params, x, 1)) / x ** (bell.alpha - 1.0)
        dec = ratio[:-1] - ratio[1:]
        w, loc = worst_of(dec, (x[1:],))
        reports.append(
            VerificationReport(f"davis.nprime_ratio_decreasing[alpha={bell.alpha:g}]", w, loc, 1e-12, dec.size, ms())
        )
    return reports
