"""Phase-space geometry over an interior curve.

A unit direction based at a point of the curve is recorded as a
:class:`TransversalPoint`. Its tangential frequency sigma = <xi, T(s)> and
normal component xi_n = <xi, nu(s)> identify the two "sheets" (xi_n > 0 and
xi_n < 0) lying over the same coball coordinates (s, sigma), and the sheets
are swapped by the reflection involution :func:`involution_gammaE` while
:func:`project_piE` forgets the sheet.

The induced invariant measure on this set has density ds dsigma/sqrt(1-sigma^2)
per sheet (each sheet weighted 1/2), normalized by the phase-space volume
pi * area of the billiard table. :class:`NuMeasureQuadrature` integrates
against it with Gauss-Chebyshev nodes in sigma, which absorb the endpoint
singularity exactly, and :func:`nu_limit` evaluates the limiting value that
restricted eigenfunction matrix elements concentrate on.

:func:`exceptional_fraction` estimates, by Monte Carlo over this measure, the
fraction of directions whose forward/backward trajectory returns to the curve
in coincidence with the trajectory of its reflection; ergodic limit theorems
for restricted eigenfunctions require this fraction to vanish. The estimate
ships with a Wilson confidence interval and a three-decade tolerance sweep so
a genuinely positive-measure coincidence set (for example across a mirror
symmetry axis) shows up as tolerance-insensitive.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError
from .geometry import CurveSegment
from .seeding import child_rng

__all__ = [
    "TransversalPoint",
    "CotangentOnN",
    "NuMeasureQuadrature",
    "MatchTolerances",
    "ExceptionalEstimate",
    "project_piE",
    "involution_gammaE",
    "nu_limit",
    "sample_nu_measure",
    "wilson_interval",
    "exceptional_fraction",
]


@dataclass(frozen=True)
class TransversalPoint:
    """Unit direction xi based at arclength s on the curve.

    sigma^2 + normal_component^2 = 1 holds to roundoff since (T, nu) is an
    orthonormal frame. Tangential directions (|sigma| = 1) are representable;
    transversality is enforced where it matters, at crossing detection.
    """

    curve: CurveSegment
    s: float
    xi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "s", float(self.s))
        xi = np.asarray(self.xi, dtype=float)
        object.__setattr__(self, "xi", xi)
        if abs(float(np.hypot(xi[0], xi[1])) - 1.0) > 1e-9:
            raise ValueError("direction must be a unit vector")

    @classmethod
    def from_frequencies(cls, curve: CurveSegment, s: float, sigma: float,
                         sheet: float = 1.0) -> "TransversalPoint":
        """Build the point over (s, sigma) on the given sheet (sign of xi_n)."""
        if not -1.0 <= sigma <= 1.0:
            raise ValueError("tangential frequency must lie in [-1, 1]")
        r = math.sqrt(max(0.0, 1.0 - sigma * sigma))
        xi = sigma * curve.tangent(s) + (1.0 if sheet >= 0 else -1.0) * r * curve.normal(s)
        return cls(curve, s, xi)

    @property
    def sigma(self) -> float:
        return float(np.dot(self.xi, self.curve.tangent(self.s)))

    @property
    def normal_component(self) -> float:
        return float(np.dot(self.xi, self.curve.normal(self.s)))

    @property
    def sheet(self) -> int:
        return 1 if self.normal_component >= 0 else -1

    def position(self) -> np.ndarray:
        return self.curve.point(self.s)


@dataclass(frozen=True)
class CotangentOnN:
    """Coball coordinates on the curve: arclength s and frequency |sigma| <= 1."""

    s: float
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "s", float(self.s))
        sig = float(self.sigma)
        if abs(sig) > 1.0 + 1e-12:
            raise ValueError("frequency outside the coball bundle")
        object.__setattr__(self, "sigma", min(1.0, max(-1.0, sig)))


def project_piE(rho: TransversalPoint) -> CotangentOnN:
    """Forget the sheet: (s, xi) -> (s, <xi, T(s)>)."""
    return CotangentOnN(rho.s, rho.sigma)


def involution_gammaE(rho: TransversalPoint) -> TransversalPoint:
    """Flip the normal component of xi; fixes the projection, swaps sheets."""
    nu = rho.curve.normal(rho.s)
    xi = rho.xi - 2.0 * float(np.dot(rho.xi, nu)) * nu
    return TransversalPoint(rho.curve, rho.s, xi)


class NuMeasureQuadrature:
    """Quadrature for the invariant measure over the curve.

    Integrates f(s, sigma, sheet) with density ds dsigma / sqrt(1 - sigma^2)
    per sheet (sheets averaged with weight 1/2 each) divided by pi * area.
    Gauss-Chebyshev nodes of the first kind make the sigma rule exact for
    polynomials of degree <= 2 * n_sigma - 1 against the singular weight;
    the arclength rule is a trapezoid on uniform nodes.
    """

    def __init__(self, curve: CurveSegment, n_sigma: int = 160,
                 n_arc: int = 4097):
        if n_sigma < 1 or n_arc < 2:
            raise ValueError("need at least one sigma node and two arc nodes")
        self.curve = curve
        i = np.arange(1, n_sigma + 1)
        self.sigma_nodes = np.cos((2 * i - 1) * np.pi / (2 * n_sigma))
        self.sigma_weight = np.pi / n_sigma
        self.s_nodes = np.linspace(0.0, curve.length, n_arc)
        h = curve.length / (n_arc - 1)
        w = np.full(n_arc, h)
        w[0] = w[-1] = h / 2.0
        self.s_weights = w
        self.normalization = np.pi * curve.domain.area

    def integrate(self, f: Callable) -> float:
        """Integral of f(s, sigma, sheet) against the measure (both sheets)."""
        S = self.s_nodes[:, None]
        G = self.sigma_nodes[None, :]
        shape = (len(self.s_nodes), len(self.sigma_nodes))
        plus = np.broadcast_to(np.asarray(f(S, G, 1.0), dtype=float), shape)
        minus = np.broadcast_to(np.asarray(f(S, G, -1.0), dtype=float), shape)
        half = 0.5 * (plus + minus)
        return float(self.sigma_weight * np.sum(self.s_weights @ half)
                     / self.normalization)

    def total_mass(self) -> float:
        return self.integrate(lambda s, g, sheet: np.ones(1))


def nu_limit(curve: CurveSegment, symbol, qweights=(1.0, 0.0), *,
             n_sigma: int = 160, n_arc: int = 4097,
             quadrature: Optional[NuMeasureQuadrature] = None) -> float:
    """Limiting matrix-element value for a curve symbol and Cauchy weights.

    ``symbol`` is evaluated as a(s, sigma) (numpy-broadcastable); ``qweights``
    = (alpha, beta) weights the boundary trace and the scaled normal
    derivative, entering through the sheet-averaged factor
    0.5 * [(alpha + beta*r)^2 + (alpha - beta*r)^2] with r = sqrt(1-sigma^2).
    For a == 1 and (1, 0) the value is length(curve)/area (the sigma integral
    of the Chebyshev weight is pi, cancelling the normalization's pi).
    """
    if not callable(symbol):
        raise ConfigError("curve symbol must be callable as a(s, sigma)")
    alpha, beta = (float(qweights[0]), float(qweights[1]))
    if not (math.isfinite(alpha) and math.isfinite(beta)):
        raise ConfigError("Cauchy weights must be finite reals")
    quad = quadrature if quadrature is not None else NuMeasureQuadrature(
        curve, n_sigma=n_sigma, n_arc=n_arc)

    def integrand(s, sigma, sheet):
        r = np.sqrt(np.maximum(0.0, 1.0 - sigma * sigma))
        w = (alpha + beta * sheet * r) ** 2
        return np.asarray(symbol(s, sigma), dtype=float) * w

    return quad.integrate(integrand)


def sample_nu_measure(curve: CurveSegment, n: int, rng) -> tuple:
    """Draw n points of the invariant measure: (s, sigma, sheet) arrays.

    s is uniform on [0, L]; sigma = cos(uniform angle), which has the
    1/sqrt(1-sigma^2) marginal; sheets are fair coin flips.
    """
    s = rng.uniform(0.0, curve.length, size=n)
    sigma = np.cos(rng.uniform(0.0, np.pi, size=n))
    sheet = np.where(rng.random(size=n) < 0.5, 1.0, -1.0)
    return s, sigma, sheet


def wilson_interval(successes: int, trials: int,
                    z: float = 1.959963984540054) -> tuple:
    """Wilson score interval for a binomial proportion (default 95%)."""
    if trials <= 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials
                         + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class MatchTolerances:
    """Tolerances for declaring two curve returns coincident.

    ``position`` is arclength on the curve (None resolves to 1e-6 * length),
    ``direction`` is Euclidean distance between unit vectors, and ``time``
    is the pairing window for matching crossings of the two trajectories.
    """

    position: Optional[float] = None
    direction: float = 1e-6
    time: float = 1e-9

    def resolved(self, curve: CurveSegment) -> "MatchTolerances":
        if self.position is not None:
            return self
        return replace(self, position=1e-6 * curve.length)


@dataclass(frozen=True)
class ExceptionalEstimate:
    """Monte Carlo estimate of the reflection-coincidence fraction."""

    fraction: float
    wilson_low: float
    wilson_high: float
    n_samples: int
    n_effective: int
    n_excluded: int        # samples whose trajectory became undefined
    n_exceptional: int
    horizon: float
    t_min: float
    tol_position: float
    tol_direction: float
    tol_time: float
    sweep: dict            # tolerance factor -> fraction at that factor
    seed: int

    @property
    def half_width(self) -> float:
        return 0.5 * (self.wilson_high - self.wilson_low)

    def to_json_dict(self) -> dict:
        return {
            "fraction": self.fraction,
            "ci": [self.wilson_low, self.wilson_high],
            "n": self.n_samples,
            "T": self.horizon,
            "t0": self.t_min,
            "tolerances": {
                "position": self.tol_position,
                "direction": self.tol_direction,
                "time": self.tol_time,
            },
            "excluded_bt_fraction": self.n_excluded / self.n_samples,
            "sweep": {str(k): v for k, v in sorted(self.sweep.items())},
            "seed": self.seed,
        }


def _coincidence_score(crossings_a, crossings_b, tol: MatchTolerances) -> float:
    """min over paired crossings of max(position, direction)/tolerance.

    Crossings are paired by nearest signed time within tol.time; the
    direction of the partner trajectory is compared against the reflected
    direction of the reference crossing. A score <= f means the sample is
    coincident when both tolerances are scaled by f.
    """
    if not crossings_a or not crossings_b:
        return math.inf
    times_b = [c.t for c in crossings_b]
    best = math.inf
    for ca in crossings_a:
        idx = bisect_left(times_b, ca.t)
        for j in (idx - 1, idx):
            if not 0 <= j < len(times_b):
                continue
            cb = crossings_b[j]
            if abs(cb.t - ca.t) > tol.time:
                continue
            pos = abs(cb.point.s - ca.point.s) / tol.position
            mirrored = involution_gammaE(ca.point).xi
            direc = float(np.hypot(*(cb.point.xi - mirrored))) / tol.direction
            best = min(best, max(pos, direc))
    return best


def exceptional_fraction(domain, curve: CurveSegment, t0: float, T: float,
                         n: int, tol: Optional[MatchTolerances] = None,
                         seed: int = 0, *, flow_tol=None,
                         sweep_factors=(0.1, 1.0, 10.0)) -> ExceptionalEstimate:
    """Fraction of invariant-measure samples with a reflection coincidence.

    Each sample is a direction at a curve point; its trajectory and the
    trajectory of its reflection are scanned over t0 <= |t| <= T for curve
    crossings, and the sample counts as exceptional when a crossing pair
    (nearest times within tol.time) agrees in arclength within tol.position
    and, after reflecting the reference direction, in direction within
    tol.direction. Samples where either trajectory becomes undefined before
    the horizon are excluded and tallied separately.

    Per-sample child seeds make the estimate independent of execution order;
    sample i draws, from its own stream, s then the frequency angle then the
    sheet coin.
    """
    from .billiard_flow import DEFAULT_TOL, PhasePoint, crossings_with_curve

    if n < 1:
        raise ValueError("need at least one sample")
    if not (0.0 < t0 < T and math.isfinite(T)):
        raise ValueError("need 0 < t0 < T < infinity")
    match = (tol if tol is not None else MatchTolerances()).resolved(curve)
    ftol = flow_tol if flow_tol is not None else DEFAULT_TOL

    scores = []
    excluded = 0
    for i in range(n):
        rng = child_rng(seed, "exceptional", str(i))
        s = rng.uniform(0.0, curve.length)
        sigma = math.cos(rng.uniform(0.0, math.pi))
        sheet = 1.0 if rng.random() < 0.5 else -1.0
        rho = TransversalPoint.from_frequencies(curve, s, sigma, sheet)
        base = rho.position()
        pair = []
        failed = False
        for point in (rho, involution_gammaE(rho)):
            phase = PhasePoint(base, point.xi)
            fwd = crossings_with_curve(domain, curve, phase, T, ftol)
            bwd = crossings_with_curve(domain, curve, phase, -T, ftol)
            if fwd.truncated or bwd.truncated:
                failed = True
                break
            kept = [c for c in bwd.crossings + fwd.crossings
                    if abs(c.t) >= t0]
            kept.sort(key=lambda c: c.t)
            pair.append(kept)
        if failed:
            excluded += 1
            continue
        scores.append(_coincidence_score(pair[0], pair[1], match))

    n_eff = len(scores)
    scores = np.array(scores, dtype=float)
    hits = int(np.sum(scores <= 1.0)) if n_eff else 0
    sweep = {}
    for f in sweep_factors:
        sweep[float(f)] = (float(np.mean(scores <= f)) if n_eff
                           else float("nan"))
    if n_eff:
        fraction = hits / n_eff
        lo, hi = wilson_interval(hits, n_eff)
    else:
        fraction, (lo, hi) = float("nan"), (0.0, 1.0)
    return ExceptionalEstimate(
        fraction=fraction, wilson_low=lo, wilson_high=hi,
        n_samples=n, n_effective=n_eff, n_excluded=excluded,
        n_exceptional=hits, horizon=T, t_min=t0,
        tol_position=match.position, tol_direction=match.direction,
        tol_time=match.time, sweep=sweep, seed=seed,
    )
