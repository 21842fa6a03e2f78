"""Interior quadrature over billiard tables, sized for oscillatory integrands.

Every rule here is a composite Gauss-Legendre panel rule mapped onto an
exact parametrization of the table (tensor panels for rectangles, polar
panels for disks and caps, a scaled-polar chart for the ellipse, a radial
chart around the notch for the dispersing cell). Panels are sized so that
an integrand oscillating at wavenumber 2k (a product of two eigenfunctions
at k) completes about one period per panel; a 12-node rule then resolves
each panel to near machine precision. Weights sum to the exact area.
"""

from __future__ import annotations

import numpy as np

__all__ = ["panel_rule_1d", "interior_quadrature"]

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl(nodes: int):
    if nodes not in _GL_CACHE:
        _GL_CACHE[nodes] = np.polynomial.legendre.leggauss(nodes)
    return _GL_CACHE[nodes]


def panel_rule_1d(lo: float, hi: float, max_panel: float, nodes: int = 12):
    """Composite Gauss-Legendre rule on [lo, hi] with panel length <= max_panel.

    Returns (points, weights) as flat arrays; exact for polynomials of
    degree 2*nodes - 1 on each panel.
    """
    lo, hi = float(lo), float(hi)
    if hi <= lo:
        return np.zeros(0), np.zeros(0)
    n_panels = max(1, int(np.ceil((hi - lo) / float(max_panel))))
    edges = np.linspace(lo, hi, n_panels + 1)
    x0, w0 = _gl(int(nodes))
    half = np.diff(edges) / 2.0
    mid = (edges[:-1] + edges[1:]) / 2.0
    x = (mid[:, None] + half[:, None] * x0[None, :]).ravel()
    w = (half[:, None] * w0[None, :]).ravel()
    return x, w


def _tensor_rect(x_lo, x_hi, y_lo, y_hi, panel, nodes):
    xs, wx = panel_rule_1d(x_lo, x_hi, panel, nodes)
    ys, wy = panel_rule_1d(y_lo, y_hi, panel, nodes)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()]), np.outer(wx, wy).ravel()


def _polar_patch(center, radius, th_lo, th_hi, panel, nodes, rho_lo=0.0):
    # dA = rho drho dtheta; theta panels sized by arc length at the rim
    th, wth = panel_rule_1d(th_lo, th_hi, panel / radius, nodes)
    rho, wrho = panel_rule_1d(rho_lo, radius, panel, nodes)
    R, T = np.meshgrid(rho, th, indexing="ij")
    pts = np.column_stack([
        center[0] + (R * np.cos(T)).ravel(),
        center[1] + (R * np.sin(T)).ravel(),
    ])
    w = np.outer(wrho * rho, wth).ravel()
    return pts, w


def _ellipse_rule(a, b, panel, nodes, th_lo=0.0, th_hi=2 * np.pi):
    # chart (t, th) -> (a t cos th, b t sin th), Jacobian a b t
    s = max(a, b)
    th, wth = panel_rule_1d(th_lo, th_hi, panel / s, nodes)
    t, wt = panel_rule_1d(0.0, 1.0, panel / s, nodes)
    T2, TH = np.meshgrid(t, th, indexing="ij")
    pts = np.column_stack([
        (a * T2 * np.cos(TH)).ravel(),
        (b * T2 * np.sin(TH)).ravel(),
    ])
    w = np.outer(wt * t * a * b, wth).ravel()
    return pts, w


def _stadium_rule(a, r, panel, nodes):
    parts = [
        _tensor_rect(-a, a, -r, r, panel, nodes),
        _polar_patch(np.array([a, 0.0]), r, -np.pi / 2, np.pi / 2, panel, nodes),
        _polar_patch(np.array([-a, 0.0]), r, np.pi / 2, 3 * np.pi / 2, panel, nodes),
    ]
    return np.vstack([p for p, _ in parts]), np.concatenate([w for _, w in parts])


def _sinai_rule(side, r, panel, nodes):
    # radial chart about the notch corner; the square's far boundary is
    # rho = side/cos(th) or side/sin(th), non-smooth across th = pi/4
    rmax = side * np.sqrt(2.0)
    pts, wts = [], []
    for th_lo, th_hi in [(0.0, np.pi / 4), (np.pi / 4, np.pi / 2)]:
        th, wth = panel_rule_1d(th_lo, th_hi, panel / rmax, nodes)
        for tj, wj in zip(th, wth):
            f = side / np.cos(tj) if tj <= np.pi / 4 else side / np.sin(tj)
            rho, wrho = panel_rule_1d(r, f, panel, nodes)
            pts.append(np.column_stack([rho * np.cos(tj), rho * np.sin(tj)]))
            wts.append(wrho * rho * wj)
    return np.vstack(pts), np.concatenate(wts)


def interior_quadrature(domain, k: float, *, nodes: int = 12,
                        panel_scale: float = 1.0, quadrant: bool = False):
    """Quadrature rule (points, weights) resolving products of waves at k.

    Panel length is panel_scale * pi / k, clamped to a quarter of the
    larger bounding-box side so small k still yields a few panels per axis.
    Halving panel_scale (or raising nodes) gives an independent rule for
    convergence checks.

    quadrant=True restricts the rule to the (+, +) quadrant about the
    center of a mirror-symmetric table (weights sum to area/4); integrands
    even about both axes then integrate as 4x the quadrant value.
    """
    k = max(float(k), 1.0)
    xmin, xmax, ymin, ymax = domain.bbox
    panel = panel_scale * np.pi / k
    panel = min(panel, max(xmax - xmin, ymax - ymin) / 4.0)
    kind = domain.kind
    if kind == "rectangle":
        w, h = domain.params["width"], domain.params["height"]
        if quadrant:
            return _tensor_rect(w / 2, w, h / 2, h, panel, nodes)
        return _tensor_rect(0.0, w, 0.0, h, panel, nodes)
    if kind == "ellipse":
        th_hi = np.pi / 2 if quadrant else 2 * np.pi
        return _ellipse_rule(domain.params["semi_major"],
                             domain.params["semi_minor"], panel, nodes,
                             th_hi=th_hi)
    if kind == "stadium":
        a, r = domain.params["half_length"], domain.params["radius"]
        if quadrant:
            rect = _tensor_rect(0.0, a, 0.0, r, panel, nodes)
            cap = _polar_patch(np.array([a, 0.0]), r, 0.0, np.pi / 2,
                               panel, nodes)
            return np.vstack([rect[0], cap[0]]), np.concatenate([rect[1], cap[1]])
        return _stadium_rule(a, r, panel, nodes)
    if quadrant:
        raise ValueError(f"no quadrant rule for domain kind {kind!r}")
    if kind == "disk":
        return _polar_patch(np.zeros(2), domain.params["radius"],
                            0.0, 2 * np.pi, panel, nodes)
    if kind == "sinai_cell":
        return _sinai_rule(domain.params["side"],
                           domain.params["notch_radius"], panel, nodes)
    raise ValueError(f"no interior rule for domain kind {kind!r}")
