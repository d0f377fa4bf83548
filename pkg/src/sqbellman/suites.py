"""Named verification suites and the configuration record that reproduces them."""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import asdict, dataclass, field, fields
from importlib import resources

import numpy as np

from . import bollobas, davis, dyadic
from .lattice import Axis
from .reports import VerificationReport, stopwatch
from .specfn import OutOfVerifiedRange, davis_constant

SUITES = ("davis", "bollobas", "dyadic", "all")


def load_defaults() -> dict:
    text = resources.files("sqbellman").joinpath("defaults.json").read_text(encoding="utf-8")
    return json.loads(text)


def parse_grid(text: str) -> dict[str, Axis]:
    """``"p:-3,3,401 q:0,3,401"`` -> {"p": Axis, "q": Axis}."""
    out = {}
    for part in text.split():
        name, _, spec = part.partition(":")
        if not spec:
            raise ValueError(f"bad grid component {part!r}; expected name:min,max,n")
        out[name] = Axis.parse(spec)
    if len(out) != 2:
        raise ValueError(f"grid needs exactly two axes, got {text!r}")
    return out


@dataclass
class SuiteConfig:
    suite: str
    alpha: list = field(default_factory=lambda: [3.0])
    grid: str = "p:-3,3,401 q:0,3,401"
    a_set: int = 64
    tol: float = 1e-9
    seed: int = 0
    depth: int = 16
    paths: int = 200_000
    dt: float = 1e-4
    t_max: float = 50.0
    n_functions: int = 1000
    n_samples: int = 10_000
    out: str | None = None
    format: str = "json"
    version: int = 1

    @classmethod
    def from_defaults(cls, suite: str, **overrides) -> "SuiteConfig":
        base = load_defaults()
        if os.environ.get("BELLMAN_SEED"):
            base["seed"] = int(os.environ["BELLMAN_SEED"])
        base.update({k: v for k, v in overrides.items() if v is not None})
        names = {f.name for f in fields(cls)}
        return cls(suite=suite, **{k: v for k, v in base.items() if k in names and k != "suite"})

    def to_dict(self) -> dict:
        return asdict(self)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "SuiteConfig":
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))


# -- suites -------------------------------------------------------------------------------

def constant_reports(alphas=(2.0, 2.5, 3.0, 4.0, 6.0, 8.0, 10.0)) -> list[VerificationReport]:
    reps = []
    with stopwatch() as ms:
        c2 = davis_constant(2.0).c_alpha
        reps.append(VerificationReport("davis.c2_equals_one", 1e-10 - abs(c2 - 1.0), (2.0,), 0.0, 1, ms(),
                                       details={"c": c2}))
    with stopwatch() as ms:
        c4 = davis_constant(4.0).c_alpha
        exact = float(np.sqrt(3.0 - np.sqrt(6.0)))
        reps.append(VerificationReport("davis.c4_closed_form", 1e-8 - abs(c4 - exact), (4.0,), 0.0, 1, ms(),
                                       details={"c": c4, "closed_form": exact}))
    with stopwatch() as ms:
        cs = np.array([davis_constant(a).c_alpha for a in alphas])
        gaps = np.append(cs[:-1] - cs[1:], [cs.min(), 1.0 - cs.max()])
        ok = bool(np.all(gaps[:-1] > 0) and gaps[-1] >= -1e-12)  # c_2 = 1 sits on the closed end
        k = int(np.argmin(gaps))
        reps.append(VerificationReport(
            "davis.c_decreasing_in_unit_interval", float(gaps[k]), (float(alphas[min(k, len(alphas) - 1)]),),
            0.0, len(alphas), ms(), details={"alpha": list(alphas), "c": cs.tolist()}, passed=ok,
        ))
    return reps


def davis_suite(alphas, tol: float = davis.CLOSED_FORM_TOL) -> list[VerificationReport]:
    reps = constant_reports()
    for a in alphas:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OutOfVerifiedRange)
            bell = davis.DavisBellman.for_alpha(float(a))
        reps += [
            davis.check_main_inequality(bell, tol=tol),
            davis.check_obstacle_majorization(bell, tol=tol),
            davis.check_infinitesimal(bell),
            davis.check_convexity_in_t(bell),
            davis.check_ode_residual(bell),
            *davis.check_properties(bell),
        ]
    return reps


def sturm_reports() -> list[VerificationReport]:
    reps = []
    with stopwatch() as ms:
        n = bollobas.sturm_root_count(bollobas.CASE3_QUARTIC, (0, 1))
        reps.append(VerificationReport("sturm.case3_quartic_roots", float(-n), (0.0, 1.0), 0.0, 1, ms(),
                                       details={"roots": n}, passed=n == 0))
    with stopwatch() as ms:
        from fractions import Fraction

        n = bollobas.sturm_root_count(bollobas.Polynomial([Fraction(-1, 4), 0, 1]), (0, 1))
        reps.append(VerificationReport("sturm.control_quadratic_roots", -abs(n - 1.0), (0.0, 1.0), 0.0, 1, ms(),
                                       details={"roots": n}, passed=n == 1))
    return reps


def bollobas_suite() -> list[VerificationReport]:
    reps = []
    with stopwatch() as ms:
        psi1 = bollobas.weak_type_constant()
        b = bollobas.bollobas_B(0.0, 1.0) * psi1
        reps.append(VerificationReport("bollobas.B01_times_psi1", 1e-10 - abs(b - 1.0), (0.0, 1.0), 0.0, 1, ms(),
                                       details={"value": b}))
    with stopwatch() as ms:
        from scipy import integrate

        # independent oracle: adaptive quadrature for Phi(1), no series involved
        phi1 = integrate.quad(lambda y: np.exp(-0.5 * y * y), 0.0, 1.0, epsabs=1e-14, epsrel=1e-13)[0]
        quad = phi1 + float(np.exp(-0.5))
        ref = 1.4621550515
        margin = min(1e-9 - abs(psi1 - quad), 1e-9 - abs(psi1 - ref), psi1 - 29.0 / 28.0, 1.5 - psi1)
        reps.append(VerificationReport("bollobas.psi1_value", margin, (1.0,), 0.0, 1, ms(),
                                       details={"psi1": psi1, "reference": ref, "independent_quadrature": quad}))
    reps += bollobas.check_main_inequality_B()
    reps.append(bollobas.check_case1_concavity())
    reps += bollobas.check_scalar_inequalities()
    reps += bollobas.check_properties_B()
    reps += sturm_reports()
    return reps


def dyadic_suite(alphas, seed: int = 0, n_functions: int = 1000, n_samples: int = 10_000,
                 depth: int = 10) -> list[VerificationReport]:
    reps = []
    bell = davis.DavisBellman.for_alpha(3.0)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    leaves, sq = dyadic.random_batch(rng, n_functions, depth)
    for q in (0.0, 0.5, 1.0):
        reps.append(dyadic.check_bellman_induction(bell, (leaves, sq), q, name=f"dyadic.bellman_induction[q={q:g}]"))
    neg = dyadic.check_bellman_induction(dyadic.negative_control_U, (leaves, sq), 1.0, name="neg")
    reps.append(VerificationReport("dyadic.negative_control_detected", -neg.worst_violation, neg.location, 0.0,
                                   neg.samples, neg.wall_time_ms, passed=not neg.passed,
                                   details={"control_worst_margin": neg.worst_violation}))
    for a in alphas:
        d, w = dyadic.empirical_inequality_suite(float(a), n_samples=n_samples, depth=depth, seed=seed)
        reps.append(d)
        if a == alphas[0]:
            reps.append(w)
    return reps


def run_suite(config: SuiteConfig) -> list[VerificationReport]:
    name = config.suite
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES}")
    reps = []
    if name in ("davis", "all"):
        reps += davis_suite(config.alpha, config.tol)
    if name in ("bollobas", "all"):
        reps += bollobas_suite()
    if name in ("dyadic", "all"):
        reps += dyadic_suite(config.alpha, config.seed, config.n_functions, config.n_samples)
    return reps
