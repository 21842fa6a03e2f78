"""Broken geodesic (billiard) flow: straight flight plus specular reflection.

The flow is undefined on the measure-zero set of trajectories that reach a
boundary corner or hit the boundary tangentially within tolerance; such
outcomes are reported as values (``FlowResult.failure``), not exceptions.
Time reversal is direction flip, and negative times run the reversed flow.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import BounceLimitError, NumericalError
from .geometry import BilliardDomain, CurveSegment
from .microlocal import TransversalPoint

__all__ = [
    "PhasePoint",
    "ToleranceSet",
    "FlowFailure",
    "FlowResult",
    "CurveCrossing",
    "CrossingScan",
    "BirkhoffResult",
    "advance",
    "crossings_with_curve",
    "birkhoff_average",
    "trajectory_events",
    "write_trajectory_csv",
]


@dataclass(frozen=True)
class PhasePoint:
    """Unit-speed phase point: position x in the closed domain, |xi| = 1."""

    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "xi", np.asarray(self.xi, dtype=float))

    def reversed(self) -> "PhasePoint":
        return PhasePoint(self.x, -self.xi)


@dataclass(frozen=True)
class ToleranceSet:
    """Numerical tolerances of the flow and of curve-crossing matching."""

    glancing: float = 1e-8       # |<xi, n>| below this at impact is tangential
    corner: float = 1e-10       # impact closer than this to a corner is undefined
    rehit_guard: float = 1e-12  # ignore intersections closer than this in time
    bounce_cap: int = 10_000_000


DEFAULT_TOL = ToleranceSet()


@dataclass(frozen=True)
class FlowFailure:
    reason: str          # "corner" or "glancing"
    time: float          # flow time at which the trajectory became undefined
    location: np.ndarray


@dataclass(frozen=True)
class FlowResult:
    point: Optional[PhasePoint]
    failure: Optional[FlowFailure]
    bounces: int
    time: float

    @property
    def defined(self) -> bool:
        return self.failure is None


@dataclass(frozen=True)
class CurveCrossing:
    """Transversal intersection of the trajectory with an interior curve."""

    t: float
    point: TransversalPoint  # arclength and direction at the crossing
    sign: int                # sign of <xi, nu(s)>


@dataclass(frozen=True)
class CrossingScan:
    crossings: list
    truncated: bool
    failure: Optional[FlowFailure]


@dataclass(frozen=True)
class BirkhoffResult:
    value: float
    time: float          # completed averaging time
    samples: int
    truncated: bool
    failure: Optional[FlowFailure]


def _next_hit(domain: BilliardDomain, x, xi, tol: ToleranceSet):
    """First boundary impact of the ray x + t*xi with t above the guard."""
    best = None
    for idx, piece in enumerate(domain.pieces):
        for t, u in piece.ray_intersections(x, xi):
            if t <= tol.rehit_guard:
                continue
            if best is None or t < best[0]:
                best = (t, idx, u)
    if best is None:
        raise NumericalError("billiard ray found no boundary intersection")
    return best


def _reflect(xi, n):
    return xi - 2.0 * float(np.dot(xi, n)) * n


class _Walker:
    """Shared bounce loop: iterates straight flight segments up to a horizon.

    ``step()`` returns (t0, x0, xi, tau) for the next segment, where the
    trajectory occupies x0 + (t - t0) * xi for t in [t0, t0 + tau]. After the
    final segment ``done`` is True; if the flow became undefined, ``failure``
    is set and the last segment ends at the impact.
    """

    def __init__(self, domain, rho: PhasePoint, horizon: float, tol: ToleranceSet):
        self.domain = domain
        self.tol = tol
        self.horizon = float(horizon)
        self.t = 0.0
        self.x = rho.x.copy()
        self.xi = rho.xi.copy()
        self.bounces = 0
        self.done = False
        self.failure: Optional[FlowFailure] = None

    def step(self):
        if self.done:
            return None
        tol = self.tol
        try:
            t_hit, idx, u = _next_hit(self.domain, self.x, self.xi, tol)
        except NumericalError:
            # salvage an outward start exactly on the boundary: reflect in place
            if abs(self.domain.signed_boundary_distance(self.x)) < 1e-9:
                piece = min(self.domain.pieces, key=lambda p: p.distance(self.x))
                n = piece.inward_normal(0.5)
                self.xi = _reflect(self.xi, n)
                t_hit, idx, u = _next_hit(self.domain, self.x, self.xi, tol)
            else:
                raise
        remaining = self.horizon - self.t
        seg = (self.t, self.x.copy(), self.xi.copy(), min(t_hit, remaining))
        if t_hit >= remaining:
            self.x = self.x + remaining * self.xi
            self.t = self.horizon
            self.done = True
            return seg
        piece = self.domain.pieces[idx]
        hit = piece.project_point(self.x + t_hit * self.xi)
        self.t += t_hit
        self.x = hit
        if len(self.domain.corners):
            d_corner = np.min(np.hypot(*(self.domain.corners - hit).T))
            if d_corner < tol.corner:
                self.failure = FlowFailure("corner", self.t, hit)
                self.done = True
                return seg
        n = piece.inward_normal(u)
        if abs(float(np.dot(self.xi, n))) < tol.glancing:
            self.failure = FlowFailure("glancing", self.t, hit)
            self.done = True
            return seg
        self.xi = _reflect(self.xi, n)
        self.bounces += 1
        if self.bounces > tol.bounce_cap:
            raise BounceLimitError(
                f"exceeded {tol.bounce_cap} reflections in a single call"
            )
        return seg


def advance(domain: BilliardDomain, rho: PhasePoint, t: float,
            tol: ToleranceSet = DEFAULT_TOL) -> FlowResult:
    """Flow rho for time t (negative t runs the reversed flow).

    Returns the final phase point, or the failure record if the trajectory
    reaches a corner or a tangential impact before |t| elapses.
    """
    if not np.isfinite(t):
        raise ValueError("flow time must be finite")
    if t < 0:
        res = advance(domain, rho.reversed(), -t, tol)
        return FlowResult(
            point=res.point.reversed() if res.point is not None else None,
            failure=None if res.failure is None else replace(res.failure, time=-res.failure.time),
            bounces=res.bounces,
            time=-res.time,
        )
    walker = _Walker(domain, rho, t, tol)
    while not walker.done:
        walker.step()
    if walker.failure is not None:
        return FlowResult(None, walker.failure, walker.bounces, walker.failure.time)
    return FlowResult(PhasePoint(walker.x, walker.xi), None, walker.bounces, t)


def _scan_forward(domain, curve, rho, T, tol):
    walker = _Walker(domain, rho, T, tol)
    crossings = []
    while not walker.done:
        t0, x0, xi, tau = walker.step()
        for t_ray, s in curve.ray_intersections(x0, xi):
            if t_ray <= tol.rehit_guard or t_ray > tau:
                continue
            nu = curve.normal(s)
            trans = float(np.dot(xi, nu))
            if abs(trans) <= tol.glancing:
                continue  # tangential: excluded
            crossings.append(CurveCrossing(t0 + t_ray,
                                           TransversalPoint(curve, s, xi.copy()),
                                           1 if trans > 0 else -1))
    crossings.sort(key=lambda c: c.t)
    return CrossingScan(crossings, walker.failure is not None, walker.failure)


def crossings_with_curve(domain: BilliardDomain, curve: CurveSegment,
                         rho: PhasePoint, T: float,
                         tol: ToleranceSet = DEFAULT_TOL) -> CrossingScan:
    """All transversal curve crossings for t in (0, T] (or [T, 0) if T < 0).

    If the flow becomes undefined before the horizon the scan is truncated
    and flagged. Tangential intersections are dropped.
    """
    if not np.isfinite(T) or T == 0:
        raise ValueError("crossing horizon must be finite and nonzero")
    if T > 0:
        return _scan_forward(domain, curve, rho, T, tol)
    rev = _scan_forward(domain, curve, rho.reversed(), -T, tol)
    crossings = [
        CurveCrossing(-c.t,
                      TransversalPoint(curve, c.point.s, -c.point.xi),
                      -c.sign)
        for c in rev.crossings
    ]
    crossings.sort(key=lambda c: c.t)
    failure = rev.failure
    if failure is not None:
        failure = replace(failure, time=-failure.time)
    return CrossingScan(crossings, rev.truncated, failure)


def birkhoff_average(domain: BilliardDomain, observable: Callable,
                     rho: PhasePoint, T: float, dt: float,
                     tol: ToleranceSet = DEFAULT_TOL) -> BirkhoffResult:
    """Time average of ``observable(points, directions)`` along the flow.

    Samples at midpoints of n = round(T/dt) equal slots (the step is adjusted
    to tile [0, T] exactly, so a constant observable averages to itself
    exactly). If the flow fails at time t* < T the average covers the
    completed samples and is flagged truncated.
    """
    if not (T > 0 and 0 < dt <= T):
        raise ValueError("need T > 0 and 0 < dt <= T")
    n = max(1, int(round(T / dt)))
    step = T / n
    walker = _Walker(domain, rho, T, tol)
    total = 0.0
    m = 0  # next sample index
    while not walker.done:
        t0, x0, xi, tau = walker.step()
        t1 = t0 + tau
        hi = int(np.floor(t1 / step - 0.5 + 1e-12))
        if hi >= m:
            js = np.arange(m, min(hi, n - 1) + 1)
            ts = (js + 0.5) * step
            pts = x0 + np.multiply.outer(ts - t0, xi)
            total += float(np.sum(observable(pts, np.broadcast_to(xi, pts.shape))))
            m = js[-1] + 1 if len(js) else m
    if walker.failure is not None:
        completed = walker.failure.time
        value = total / m if m else np.nan
        return BirkhoffResult(value, completed, m, True, walker.failure)
    return BirkhoffResult(total / n, T, n, False, None)


def trajectory_events(domain: BilliardDomain, rho: PhasePoint, T: float,
                      tol: ToleranceSet = DEFAULT_TOL) -> np.ndarray:
    """Event log of one trajectory for debugging: launch, each reflection,
    and the terminal state, as rows (t, x, y, xi_x, xi_y).

    The direction in each row is the one in force just after the event; on
    an undefined ending the last row carries the incoming direction at the
    failure point.
    """
    if not (np.isfinite(T) and T > 0):
        raise ValueError("event dump horizon must be positive and finite")
    walker = _Walker(domain, rho, T, tol)
    rows = []
    while not walker.done:
        t0, x0, xi, _ = walker.step()
        rows.append((t0, x0[0], x0[1], xi[0], xi[1]))
    t_end = walker.failure.time if walker.failure is not None else T
    rows.append((t_end, walker.x[0], walker.x[1], walker.xi[0], walker.xi[1]))
    return np.array(rows, dtype=float)


def write_trajectory_csv(path, events: np.ndarray) -> None:
    np.savetxt(path, events, delimiter=",", header="t,x,y,xi_x,xi_y",
               comments="", fmt="%.17g")
