"""Planar billiard tables and interior observation curves.

A domain is a compact region of the plane whose boundary is an ordered,
positively oriented (counterclockwise) loop of straight segments and circular
arcs; the ellipse is the one exception and is handled implicitly. Interior
curves are straight segments or circular arcs kept at strictly positive
distance from the boundary; they carry an arclength parametrization and a
unit frame (T, nu) with det[T nu] = +1.

Conventions: points are float64 arrays of shape (2,) (or (n, 2) where noted),
angles are radians, all lengths are in the same unit as coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ellipe

__all__ = [
    "Segment",
    "Arc",
    "EllipseArc",
    "BilliardDomain",
    "CurveSegment",
    "curve_frame",
    "signed_normal_coordinate",
    "domain_metrics",
]

_LOOP_TOL = 1e-12


def _rot90(v):
    """Left-hand perpendicular: rotation by +pi/2."""
    return np.array([-v[1], v[0]])


def _cross(a, b) -> float:
    return a[0] * b[1] - a[1] * b[0]


def _wrap_angle(theta: float) -> float:
    """Wrap into [0, 2*pi)."""
    return float(np.mod(theta, 2.0 * np.pi))


@dataclass(frozen=True)
class Segment:
    """Straight boundary piece from p0 to p1, parametrized by u in [0, 1]."""

    p0: np.ndarray
    p1: np.ndarray

    @property
    def length(self) -> float:
        return float(np.hypot(*(self.p1 - self.p0)))

    def point(self, u):
        u = np.asarray(u, dtype=float)
        return self.p0 + np.multiply.outer(u, self.p1 - self.p0)

    def unit_tangent(self, u):
        t = (self.p1 - self.p0) / self.length
        u = np.asarray(u, dtype=float)
        return np.broadcast_to(t, u.shape + (2,)).copy() if u.ndim else t

    def inward_normal(self, u):
        t = self.unit_tangent(0.0)
        n = _rot90(t)
        u = np.asarray(u, dtype=float)
        return np.broadcast_to(n, u.shape + (2,)).copy() if u.ndim else n

    def speed(self, u):
        u = np.asarray(u, dtype=float)
        return np.full(u.shape, self.length) if u.ndim else self.length

    def endpoints(self):
        return self.p0, self.p1

    def project_point(self, x):
        """Closest point on the carrying line, clipped to the piece."""
        e = self.p1 - self.p0
        u = float(np.dot(x - self.p0, e) / np.dot(e, e))
        return self.p0 + min(max(u, 0.0), 1.0) * e

    def ray_intersections(self, origin, direction):
        """(t, u) pairs with origin + t*direction on the piece, t real."""
        e = self.p1 - self.p0
        den = _cross(direction, e)
        if abs(den) < 1e-300:
            return []
        m = self.p0 - origin
        t = _cross(m, e) / den
        u = _cross(m, direction) / den
        slack = 1e-9 / max(self.length, 1e-9)
        if -slack <= u <= 1.0 + slack:
            return [(float(t), float(min(max(u, 0.0), 1.0)))]
        return []

    def distance(self, x) -> float:
        e = self.p1 - self.p0
        u = float(np.dot(x - self.p0, e) / np.dot(e, e))
        u = min(max(u, 0.0), 1.0)
        return float(np.hypot(*(x - (self.p0 + u * e))))


@dataclass(frozen=True)
class Arc:
    """Circular boundary piece.

    Runs from angle theta0 to theta1 at constant radius about ``center``;
    the sweep theta1 - theta0 is signed, so a negative sweep traverses the
    circle clockwise (used for concave pieces of a counterclockwise loop).
    """

    center: np.ndarray
    radius: float
    theta0: float
    theta1: float

    @property
    def sweep(self) -> float:
        return self.theta1 - self.theta0

    @property
    def length(self) -> float:
        return self.radius * abs(self.sweep)

    def _theta(self, u):
        return self.theta0 + np.asarray(u, dtype=float) * self.sweep

    def point(self, u):
        th = self._theta(u)
        return self.center + self.radius * np.stack(
            [np.cos(th), np.sin(th)], axis=-1
        )

    def unit_tangent(self, u):
        th = self._theta(u)
        s = np.sign(self.sweep)
        return s * np.stack([-np.sin(th), np.cos(th)], axis=-1)

    def inward_normal(self, u):
        t = self.unit_tangent(u)
        return np.stack([-t[..., 1], t[..., 0]], axis=-1)

    def speed(self, u):
        u = np.asarray(u, dtype=float)
        val = self.length
        return np.full(u.shape, val) if u.ndim else val

    def endpoints(self):
        return self.point(0.0), self.point(1.0)

    def _angle_param(self, theta: float):
        """Parameter u in [0, 1] if theta lies on the sweep, else None."""
        d = _wrap_angle(theta - self.theta0)
        sw = self.sweep
        slack = 1e-12 / max(self.radius, 1e-12) + 1e-14
        if sw >= 0:
            if d <= sw + slack:
                return min(d / sw, 1.0) if sw > 0 else 0.0
            if d >= 2.0 * np.pi - slack:
                return 0.0
        else:
            d_neg = d - 2.0 * np.pi  # in (-2*pi, 0]
            if d_neg >= sw - slack:
                return min(d_neg / sw, 1.0)
            if d >= 2.0 * np.pi - slack or d <= slack:
                return 0.0
        return None

    def project_point(self, x):
        """Radial projection onto the circle (angle kept)."""
        rel = x - self.center
        rho = np.hypot(*rel)
        return self.center + self.radius * rel / rho if rho > 0 else self.point(0.0)

    def ray_intersections(self, origin, direction):
        oc = origin - self.center
        b = float(np.dot(direction, oc))
        c = float(np.dot(oc, oc) - self.radius**2)
        disc = b * b - c
        if disc < 0.0:
            return []
        sq = np.sqrt(disc)
        out = []
        for t in (-b - sq, -b + sq):
            p = origin + t * np.asarray(direction)
            u = self._angle_param(float(np.arctan2(p[1] - self.center[1], p[0] - self.center[0])))
            if u is not None:
                out.append((float(t), float(u)))
        return out

    def distance(self, x) -> float:
        rel = x - self.center
        rho = float(np.hypot(*rel))
        u = self._angle_param(float(np.arctan2(rel[1], rel[0])))
        if u is not None:
            return abs(rho - self.radius)
        a, b = self.endpoints()
        return min(float(np.hypot(*(x - a))), float(np.hypot(*(x - b))))


@dataclass(frozen=True)
class EllipseArc:
    """Elliptic boundary piece x = (a cos th, b sin th), th in [theta0, theta1].

    Kept implicit: ray intersections solve the quadratic of the implicit
    equation, distances come from a bisection on the closest-point condition.
    The full boundary is the sweep [0, 2*pi].
    """

    a: float
    b: float
    theta0: float = 0.0
    theta1: float = 2.0 * np.pi

    @property
    def sweep(self) -> float:
        return self.theta1 - self.theta0

    @property
    def length(self) -> float:
        if abs(self.sweep - 2.0 * np.pi) < 1e-15:
            m = 1.0 - (self.b / self.a) ** 2
            return float(4.0 * self.a * ellipe(m))
        # generic sweep: fine fixed quadrature of the speed
        th = np.linspace(self.theta0, self.theta1, 4097)
        sp = np.hypot(self.a * np.sin(th), self.b * np.cos(th))
        return float(np.trapezoid(sp, th))

    def _theta(self, u):
        return self.theta0 + np.asarray(u, dtype=float) * self.sweep

    def point(self, u):
        th = self._theta(u)
        return np.stack([self.a * np.cos(th), self.b * np.sin(th)], axis=-1)

    def unit_tangent(self, u):
        th = self._theta(u)
        v = np.stack([-self.a * np.sin(th), self.b * np.cos(th)], axis=-1)
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    def inward_normal(self, u):
        t = self.unit_tangent(u)
        return np.stack([-t[..., 1], t[..., 0]], axis=-1)

    def speed(self, u):
        th = self._theta(u)
        return np.hypot(self.a * np.sin(th), self.b * np.cos(th)) * abs(self.sweep)

    def endpoints(self):
        return self.point(0.0), self.point(1.0)

    def project_point(self, x):
        """Rescale onto the ellipse along the ray from the center."""
        f = np.sqrt(x[0] ** 2 / self.a**2 + x[1] ** 2 / self.b**2)
        return x / f if f > 0 else np.array([self.a, 0.0])

    def ray_intersections(self, origin, direction):
        a2, b2 = self.a**2, self.b**2
        A = direction[0] ** 2 / a2 + direction[1] ** 2 / b2
        B = 2.0 * (origin[0] * direction[0] / a2 + origin[1] * direction[1] / b2)
        C = origin[0] ** 2 / a2 + origin[1] ** 2 / b2 - 1.0
        disc = B * B - 4.0 * A * C
        if disc < 0.0:
            return []
        sq = np.sqrt(disc)
        out = []
        for t in ((-B - sq) / (2 * A), (-B + sq) / (2 * A)):
            p = origin + t * np.asarray(direction)
            th = _wrap_angle(float(np.arctan2(p[1] / self.b, p[0] / self.a)))
            d = _wrap_angle(th - self.theta0)
            if d <= abs(self.sweep) + 1e-12 or d >= 2 * np.pi - 1e-12:
                u = min(d / abs(self.sweep), 1.0) if abs(self.sweep) > 0 else 0.0
                out.append((float(t), float(u)))
        return out

    def distance(self, x) -> float:
        return abs(_ellipse_signed_distance(self.a, self.b, x))


def _ellipse_signed_distance(a: float, b: float, x) -> float:
    """Distance from x to the ellipse x^2/a^2 + y^2/b^2 = 1, negative inside."""
    px, py = abs(float(x[0])), abs(float(x[1]))
    # closest-point angle solves g(th) = (a^2-b^2) c s - a px s + b py c = 0
    lo, hi = 0.0, np.pi / 2.0
    glo = b * py
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        c, s = np.cos(mid), np.sin(mid)
        g = (a * a - b * b) * c * s - a * px * s + b * py * c
        if (g >= 0.0) == (glo >= 0.0):
            lo = mid
        else:
            hi = mid
    th = 0.5 * (lo + hi)
    d = float(np.hypot(px - a * np.cos(th), py - b * np.sin(th)))
    inside = (px / a) ** 2 + (py / b) ** 2 <= 1.0
    return -d if inside else d


class BilliardDomain:
    """A compact planar billiard table.

    Use the factory classmethods (``rectangle``, ``disk``, ``ellipse``,
    ``stadium``, ``sinai_cell``); the constructor only wires validated parts
    together. Available metrics: ``area``, ``perimeter``, ``corners`` (array
    of corner points where the boundary tangent jumps).
    """

    def __init__(self, kind, params, pieces, area, perimeter, center,
                 mirror_symmetric, bbox, contains_fn):
        self.kind = kind
        self.params = dict(params)
        self.pieces = list(pieces)
        self.area = float(area)
        self.perimeter = float(perimeter)
        self.center = np.asarray(center, dtype=float)
        self.mirror_symmetric = bool(mirror_symmetric)
        self.bbox = tuple(float(v) for v in bbox)  # (xmin, xmax, ymin, ymax)
        self._contains = contains_fn
        self.corners = self._find_corners()
        self._validate_loop()

    # -- construction -----------------------------------------------------

    @classmethod
    def rectangle(cls, width: float, height: float) -> "BilliardDomain":
        """Axis-aligned rectangle [0, width] x [0, height]."""
        if not (width > 0 and height > 0):
            raise ValueError("rectangle sides must be positive")
        w, h = float(width), float(height)
        p = [np.array(q, dtype=float) for q in [(0, 0), (w, 0), (w, h), (0, h)]]
        pieces = [Segment(p[i], p[(i + 1) % 4]) for i in range(4)]

        def inside(x, y):
            return (x >= 0) & (x <= w) & (y >= 0) & (y <= h)

        return cls("rectangle", {"width": w, "height": h}, pieces,
                   area=w * h, perimeter=2 * (w + h), center=(w / 2, h / 2),
                   mirror_symmetric=True, bbox=(0, w, 0, h), contains_fn=inside)

    @classmethod
    def disk(cls, radius: float) -> "BilliardDomain":
        """Disk of the given radius centered at the origin."""
        if not radius > 0:
            raise ValueError("disk radius must be positive")
        r = float(radius)
        pieces = [Arc(np.zeros(2), r, 0.0, 2.0 * np.pi)]

        def inside(x, y):
            return x * x + y * y <= r * r

        return cls("disk", {"radius": r}, pieces,
                   area=np.pi * r * r, perimeter=2 * np.pi * r, center=(0, 0),
                   mirror_symmetric=True, bbox=(-r, r, -r, r), contains_fn=inside)

    @classmethod
    def ellipse(cls, semi_major: float, semi_minor: float) -> "BilliardDomain":
        """Ellipse x^2/a^2 + y^2/b^2 <= 1 centered at the origin, a >= b."""
        a, b = float(semi_major), float(semi_minor)
        if not (a >= b > 0):
            raise ValueError("ellipse needs semi_major >= semi_minor > 0")
        piece = EllipseArc(a, b)

        def inside(x, y):
            return (x / a) ** 2 + (y / b) ** 2 <= 1.0

        return cls("ellipse", {"semi_major": a, "semi_minor": b}, [piece],
                   area=np.pi * a * b, perimeter=piece.length, center=(0, 0),
                   mirror_symmetric=True, bbox=(-a, a, -b, b), contains_fn=inside)

    @classmethod
    def stadium(cls, half_length: float, radius: float) -> "BilliardDomain":
        """Bunimovich stadium: rectangle [-a, a] x [-r, r] capped by half disks."""
        a, r = float(half_length), float(radius)
        if not (a > 0 and r > 0):
            raise ValueError("stadium parameters must be positive")
        pieces = [
            Segment(np.array([-a, -r]), np.array([a, -r])),
            Arc(np.array([a, 0.0]), r, -np.pi / 2, np.pi / 2),
            Segment(np.array([a, r]), np.array([-a, r])),
            Arc(np.array([-a, 0.0]), r, np.pi / 2, 3 * np.pi / 2),
        ]

        def inside(x, y):
            xc = np.clip(x, -a, a)
            return (x - xc) ** 2 + y**2 <= r * r

        return cls("stadium", {"half_length": a, "radius": r}, pieces,
                   area=4 * a * r + np.pi * r * r, perimeter=4 * a + 2 * np.pi * r,
                   center=(0, 0), mirror_symmetric=True,
                   bbox=(-a - r, a + r, -r, r), contains_fn=inside)

    @classmethod
    def sinai_cell(cls, side: float, notch_radius: float) -> "BilliardDomain":
        """Square [0, side]^2 with a quarter-disk notch at the origin corner.

        The single-cell desymmetrization of a dispersing scatterer array; the
        boundary stays one closed loop (a full scatterer would add a second).
        """
        L, r = float(side), float(notch_radius)
        if not (L > 0 and 0 < r < L):
            raise ValueError("need 0 < notch_radius < side")
        pieces = [
            Segment(np.array([r, 0.0]), np.array([L, 0.0])),
            Segment(np.array([L, 0.0]), np.array([L, L])),
            Segment(np.array([L, L]), np.array([0.0, L])),
            Segment(np.array([0.0, L]), np.array([0.0, r])),
            Arc(np.zeros(2), r, np.pi / 2, 0.0),  # concave, clockwise sweep
        ]

        def inside(x, y):
            return (x >= 0) & (x <= L) & (y >= 0) & (y <= L) & (x * x + y * y >= r * r)

        return cls("sinai_cell", {"side": L, "notch_radius": r}, pieces,
                   area=L * L - np.pi * r * r / 4,
                   perimeter=4 * L - 2 * r + np.pi * r / 2,
                   center=(L / 2, L / 2), mirror_symmetric=False,
                   bbox=(0, L, 0, L), contains_fn=inside)

    @classmethod
    def from_config(cls, kind: str, params: dict) -> "BilliardDomain":
        factories = {
            "rectangle": cls.rectangle,
            "disk": cls.disk,
            "ellipse": cls.ellipse,
            "stadium": cls.stadium,
            "sinai_cell": cls.sinai_cell,
        }
        if kind not in factories:
            raise ValueError(f"unknown domain kind {kind!r}")
        return factories[kind](**params)

    # -- validation --------------------------------------------------------

    def _validate_loop(self):
        scale = max(self.perimeter, 1.0)
        n = len(self.pieces)
        for i, piece in enumerate(self.pieces):
            end = piece.endpoints()[1]
            start_next = self.pieces[(i + 1) % n].endpoints()[0]
            if np.hypot(*(end - start_next)) > _LOOP_TOL * scale:
                raise ValueError(
                    f"boundary pieces {i} and {(i + 1) % n} do not chain into a loop"
                )
        # positive (counterclockwise) orientation via Green's theorem
        area = 0.0
        for piece in self.pieces:
            u = (np.arange(2048) + 0.5) / 2048
            pts = piece.point(u)
            tans = piece.unit_tangent(u)
            sp = piece.speed(u)
            area += 0.5 * np.sum(
                (pts[:, 0] * tans[:, 1] - pts[:, 1] * tans[:, 0]) * sp / 2048
            )
        if area <= 0:
            raise ValueError("boundary loop is not positively oriented")
        if abs(area - self.area) > 1e-6 * self.area:
            raise ValueError("boundary loop area disagrees with closed form")

    def _find_corners(self):
        corners = []
        n = len(self.pieces)
        for i, piece in enumerate(self.pieces):
            nxt = self.pieces[(i + 1) % n]
            end = piece.endpoints()[1]
            if np.hypot(*(end - nxt.endpoints()[0])) > 1e-9:
                continue  # loop validation reports this
            t_out = piece.unit_tangent(1.0)
            t_in = nxt.unit_tangent(0.0)
            if np.hypot(*(t_out - t_in)) > 1e-9:
                corners.append(end)
        return np.array(corners) if corners else np.zeros((0, 2))

    # -- queries ------------------------------------------------------------

    def contains(self, points) -> np.ndarray:
        """Vectorized membership test (boundary counts as inside)."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            return bool(self._contains(pts[0], pts[1]))
        return self._contains(pts[..., 0], pts[..., 1])

    def signed_boundary_distance(self, x) -> float:
        """Distance from x to the boundary, negative strictly inside."""
        x = np.asarray(x, dtype=float)
        d = min(piece.distance(x) for piece in self.pieces)
        return -d if self.contains(x) else d

    def interior_cloud(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n points drawn uniformly from the interior by rejection."""
        xmin, xmax, ymin, ymax = self.bbox
        out = np.empty((0, 2))
        while len(out) < n:
            m = max(64, int(1.8 * (n - len(out)) * (xmax - xmin) * (ymax - ymin) / self.area))
            cand = rng.uniform([xmin, ymin], [xmax, ymax], size=(m, 2))
            out = np.vstack([out, cand[self.contains(cand)]])
        return out[:n]

    def boundary_collocation(self, k: float, points_per_wavelength: float):
        """Midpoint collocation on every piece, at least the requested density.

        Returns (points, inward_normals, weights); the weights are the
        arclength each point represents, so that sum(w * f(points)) is the
        boundary integral of f at trapezoid-level accuracy.
        """
        return collocation_on_pieces(self.pieces, k, points_per_wavelength)

    def quarter_boundary_pieces(self):
        """Physical boundary in the (+,+) quadrant relative to the center.

        Only defined for the mirror-symmetric kinds used by the
        symmetry-reduced solver (rectangle, ellipse, stadium).
        """
        if self.kind == "rectangle":
            w, h = self.params["width"], self.params["height"]
            return [
                Segment(np.array([w, h / 2]), np.array([w, h])),
                Segment(np.array([w, h]), np.array([w / 2, h])),
            ]
        if self.kind == "stadium":
            # counterclockwise like every other piece list, so the normal
            # convention (left of travel) keeps pointing into the table
            a, r = self.params["half_length"], self.params["radius"]
            return [
                Arc(np.array([a, 0.0]), r, 0.0, np.pi / 2),
                Segment(np.array([a, r]), np.array([0.0, r])),
            ]
        if self.kind == "ellipse":
            return [EllipseArc(self.params["semi_major"], self.params["semi_minor"],
                               0.0, np.pi / 2)]
        raise ValueError(f"no quarter boundary for domain kind {self.kind!r}")


def collocation_on_pieces(pieces, k: float, points_per_wavelength: float):
    pts, nrm, wts = [], [], []
    for piece in pieces:
        n = max(8, int(np.ceil(points_per_wavelength * k * piece.length / (2 * np.pi))))
        u = (np.arange(n) + 0.5) / n
        pts.append(piece.point(u))
        nrm.append(piece.inward_normal(u))
        wts.append(piece.speed(u) / n)
    return np.vstack(pts), np.vstack(nrm), np.concatenate(wts)


class CurveSegment:
    """An observation curve inside a domain: a straight segment or circular arc.

    Parametrized by arclength s in [0, length]. The frame at s is the unit
    tangent T(s) and the unit normal nu(s) = T rotated by +pi/2, so that
    det[T nu] = +1 identically. ``clearance`` is the minimal distance from
    the curve to the domain boundary and is required to be positive.
    """

    def __init__(self, domain: BilliardDomain, kind: str, geom: dict):
        self.domain = domain
        self.kind = kind
        if kind == "line":
            p0 = np.asarray(geom["start"], dtype=float)
            p1 = np.asarray(geom["end"], dtype=float)
            self.length = float(np.hypot(*(p1 - p0)))
            if self.length <= 0:
                raise ValueError("curve endpoints coincide")
            self._p0, self._tan = p0, (p1 - p0) / self.length
        elif kind == "arc":
            self._center = np.asarray(geom["center"], dtype=float)
            self._radius = float(geom["radius"])
            self._a0 = float(geom["angle0"])
            self._a1 = float(geom["angle1"])
            if self._radius <= 0 or self._a1 == self._a0:
                raise ValueError("arc needs positive radius and nonzero sweep")
            self.length = self._radius * abs(self._a1 - self._a0)
            self._dir = 1.0 if self._a1 > self._a0 else -1.0
        else:
            raise ValueError(f"unknown curve kind {kind!r}")
        self.clearance = self._compute_clearance()
        if not self.clearance > 0:
            raise ValueError("curve touches or leaves the domain (zero clearance)")

    @classmethod
    def line(cls, domain, start, end) -> "CurveSegment":
        return cls(domain, "line", {"start": start, "end": end})

    @classmethod
    def arc(cls, domain, center, radius, angle0, angle1) -> "CurveSegment":
        return cls(domain, "arc", {"center": center, "radius": radius,
                                   "angle0": angle0, "angle1": angle1})

    def _compute_clearance(self) -> float:
        s = np.linspace(0.0, self.length, 512)
        pts = self.point(s)
        if not np.all(self.domain.contains(pts)):
            raise ValueError("curve leaves the domain")
        d = [self.domain.signed_boundary_distance(p) for p in pts]
        return float(-max(d))

    # -- parametrization ----------------------------------------------------

    def _check_s(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < -1e-12) or np.any(s > self.length + 1e-12):
            raise ValueError("arclength parameter outside [0, length]")
        return np.clip(s, 0.0, self.length)

    def point(self, s):
        s = self._check_s(s)
        if self.kind == "line":
            return self._p0 + np.multiply.outer(s, self._tan)
        th = self._a0 + self._dir * s / self._radius
        return self._center + self._radius * np.stack([np.cos(th), np.sin(th)], axis=-1)

    def tangent(self, s):
        s = self._check_s(s)
        if self.kind == "line":
            return (np.broadcast_to(self._tan, s.shape + (2,)).copy()
                    if s.ndim else self._tan.copy())
        th = self._a0 + self._dir * s / self._radius
        return self._dir * np.stack([-np.sin(th), np.cos(th)], axis=-1)

    def normal(self, s):
        t = self.tangent(s)
        return np.stack([-t[..., 1], t[..., 0]], axis=-1)

    def frame(self, s):
        """(point, T, nu) at arclength s; see ``curve_frame``."""
        return self.point(s), self.tangent(s), self.normal(s)

    # -- geometry queries ----------------------------------------------------

    def normal_coordinate(self, x):
        """Arclength foot and signed offset of a point near the curve.

        Returns (s, delta) with x = point(s) + delta * nu(s). Raises
        ValueError when x lies outside the tubular neighborhood of width
        ``clearance`` (offset too large or foot beyond the endpoints).
        """
        x = np.asarray(x, dtype=float)
        if self.kind == "line":
            rel = x - self._p0
            s = float(np.dot(rel, self._tan))
            delta = float(_cross(self._tan, rel))
        else:
            rel = x - self._center
            rho = float(np.hypot(*rel))
            th = np.arctan2(rel[1], rel[0])
            d = _wrap_angle(self._dir * (th - self._a0))
            s = self._radius * d
            if s > self.length and 2 * np.pi * self._radius - s < 1e-9:
                s = 0.0
            delta = self._dir * (self._radius - rho)
        if s < -1e-12 or s > self.length + 1e-12:
            raise ValueError("point projects beyond the curve endpoints")
        if abs(delta) >= self.clearance:
            raise ValueError("point outside the curve's tubular neighborhood")
        return float(min(max(s, 0.0), self.length)), float(delta)

    def ray_intersections(self, origin, direction):
        """(t, s) pairs where origin + t*direction meets the curve."""
        if self.kind == "line":
            e = self._tan * self.length
            den = _cross(direction, e)
            if abs(den) < 1e-300:
                return []
            m = self._p0 - origin
            t = _cross(m, e) / den
            s = _cross(m, direction) / den * self.length
            if -1e-12 <= s <= self.length + 1e-12:
                return [(float(t), float(min(max(s, 0.0), self.length)))]
            return []
        out = []
        oc = origin - self._center
        b = float(np.dot(direction, oc))
        c = float(np.dot(oc, oc) - self._radius**2)
        disc = b * b - c
        if disc < 0.0:
            return []
        for t in (-b - np.sqrt(disc), -b + np.sqrt(disc)):
            p = origin + t * np.asarray(direction)
            th = np.arctan2(p[1] - self._center[1], p[0] - self._center[0])
            d = _wrap_angle(self._dir * (th - self._a0))
            s = self._radius * d
            if s <= self.length + 1e-12:
                out.append((float(t), float(min(s, self.length))))
        return out

    def to_config(self) -> dict:
        if self.kind == "line":
            return {"kind": "segment", "start": list(self.point(0.0)),
                    "end": list(self.point(self.length))}
        return {"kind": "arc", "center": list(self._center), "radius": self._radius,
                "angles": [self._a0, self._a1]}


def curve_frame(curve: CurveSegment, s):
    """Point, unit tangent and unit normal at arclength s (det[T nu] = +1)."""
    return curve.frame(s)


def signed_normal_coordinate(curve: CurveSegment, x):
    """Signed tube coordinates (s, delta) of x relative to the curve."""
    return curve.normal_coordinate(x)


def domain_metrics(domain: BilliardDomain):
    """(area, perimeter, corners) of the domain, from closed forms."""
    return domain.area, domain.perimeter, domain.corners
