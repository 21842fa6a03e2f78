import numpy as np
import pytest
from scipy.special import j1, jn_zeros

from qerest.errors import ConfigError
from qerest.geometry import BilliardDomain
from qerest.quadrature import interior_quadrature
from qerest.seeding import child_rng
from qerest.spectral_solver import (
    SolverParams,
    default_basis,
    evaluate_eigenfunction,
    find_spectrum,
    fourier_bessel_basis,
    plane_wave_basis,
    tension,
    weyl_check,
    weyl_expected,
)

RECT = BilliardDomain.rectangle(1.0, 2.0)
DISK = BilliardDomain.disk(1.0)

K11 = np.pi * np.sqrt(1.25)  # rectangle mode (1,1)


def rect_lattice(k_lo, k_hi):
    """Exhaustive enumeration of pi * sqrt(m^2 + n^2/4) in [k_lo, k_hi]."""
    out = []
    m_max = int(k_hi / np.pi) + 2
    n_max = int(2 * k_hi / np.pi) + 2
    for m in range(1, m_max):
        for n in range(1, n_max):
            k = np.pi * np.hypot(m, n / 2.0)
            if k_lo <= k <= k_hi:
                out.append(k)
    return np.sort(np.array(out))


def disk_zeros(k_lo, k_hi, m_max=10):
    """Bessel-zero oracle with circle multiplicities."""
    out = []
    for m in range(m_max):
        for z in jn_zeros(m, int(k_hi) + 2):
            if k_lo <= z <= k_hi:
                out.extend([z] * (1 if m == 0 else 2))
    return np.sort(np.array(out))


# -- bases -------------------------------------------------------------------


@pytest.mark.parametrize("make", [
    lambda k: plane_wave_basis(k, 11, (0.5, 1.0)),
    lambda k: plane_wave_basis(k, 9, (0.5, 1.0), parity=(0, 1),
                               jitter=np.linspace(-0.4, 0.4, 9)),
    lambda k: fourier_bessel_basis(k, 9, (0.0, 0.0)),
], ids=["full", "parity", "bessel"])
def test_basis_satisfies_helmholtz(make):
    k = 6.3
    basis = make(k)
    pts = np.array([[0.7, 1.3], [0.31, 0.52], [0.95, 1.81]])
    h = 1e-4
    e1, e2 = np.array([h, 0.0]), np.array([0.0, h])
    lap = (basis.evaluate(pts + e1) + basis.evaluate(pts - e1)
           + basis.evaluate(pts + e2) + basis.evaluate(pts - e2)
           - 4 * basis.evaluate(pts)) / h**2
    resid = lap + k**2 * basis.evaluate(pts)
    assert np.abs(resid).max() < 1e-3 * k**2


@pytest.mark.parametrize("make", [
    lambda k: plane_wave_basis(k, 11, (0.5, 1.0)),
    lambda k: plane_wave_basis(k, 9, (0.5, 1.0), parity=(1, 0),
                               jitter=np.zeros(9)),
    lambda k: fourier_bessel_basis(k, 9, (0.1, -0.2)),
], ids=["full", "parity", "bessel"])
def test_basis_gradient_matches_finite_differences(make):
    basis = make(4.7)
    pts = np.array([[0.71, 1.29], [0.42, 0.66]])
    g = basis.gradient(pts)
    h = 1e-6
    for j, e in enumerate([np.array([h, 0.0]), np.array([0.0, h])]):
        fd = (basis.evaluate(pts + e) - basis.evaluate(pts - e)) / (2 * h)
        assert np.abs(g[:, :, j] - fd).max() < 1e-7


def test_parity_symmetry_of_basis_values():
    c = np.array([0.5, 1.0])
    b = plane_wave_basis(5.0, 7, c, parity=(1, 0), jitter=np.zeros(7))
    p = np.array([0.2, 0.3])
    vp = b.evaluate(c + p)[0]
    vm_x = b.evaluate(c + p * np.array([-1, 1]))[0]
    vm_y = b.evaluate(c + p * np.array([1, -1]))[0]
    assert np.allclose(vm_x, -vp, atol=1e-14)  # odd in x
    assert np.allclose(vm_y, vp, atol=1e-14)   # even in y


def test_basis_argument_validation():
    with pytest.raises(ConfigError):
        plane_wave_basis(-1.0, 5, (0, 0))
    with pytest.raises(ConfigError):
        plane_wave_basis(1.0, 5, (0, 0), parity=(2, 0))
    with pytest.raises(ConfigError):
        fourier_bessel_basis(1.0, 0, (0, 0))


# -- tension -----------------------------------------------------------------


def test_tension_vanishes_at_rectangle_eigenvalue():
    basis = default_basis(RECT, K11)
    assert tension(RECT, basis, K11) < 1e-8


def test_tension_large_between_eigenvalues():
    k_mid = 0.5 * (K11 + np.pi * np.sqrt(2.0))  # between first two levels
    t_at = tension(RECT, default_basis(RECT, K11), K11)
    t_mid = tension(RECT, default_basis(RECT, k_mid), k_mid)
    assert t_mid > 1e3 * t_at


def test_tension_vanishes_at_disk_eigenvalue():
    j01 = 2.40482556
    basis = default_basis(DISK, j01)
    assert tension(DISK, basis, j01) < 1e-8


def test_tension_parity_class_floor():
    basis = default_basis(RECT, K11, parity=(0, 0))  # (1,1) is even-even
    assert tension(RECT, basis, K11) < 1e-10


def test_tension_rejects_mismatched_basis():
    basis = default_basis(RECT, 5.0)
    with pytest.raises(ConfigError):
        tension(RECT, basis, 5.1)
    with pytest.raises(ConfigError):
        tension(RECT, basis, -5.0)


# -- find_spectrum on closed-form tables --------------------------------------


@pytest.fixture(scope="module")
def rect_window():
    return find_spectrum(RECT, (3.0, 10.0))


@pytest.fixture(scope="module")
def disk_window():
    return find_spectrum(DISK, (2.0, 6.0))


def test_rectangle_window_matches_lattice(rect_window):
    oracle = rect_lattice(3.0, 10.0)
    assert len(rect_window.pairs) == len(oracle) == 12
    assert np.abs(rect_window.ks - oracle).max() < 1e-7
    assert rect_window.n_rejected == 0
    assert not rect_window.missing_levels


def test_rectangle_cross_class_degeneracy(rect_window):
    # k = pi sqrt(5): modes (1,4) and (2,2) live in different parity classes
    k5 = np.pi * np.sqrt(5.0)
    hits = [p for p in rect_window.pairs if abs(p.k - k5) < 1e-7]
    assert len(hits) == 2
    assert hits[0].class_tag != hits[1].class_tag


def test_rectangle_within_class_degeneracy(rect_window):
    # k = pi sqrt(10): modes (1,6) and (3,2) share a parity class; the
    # solver must split the two-dimensional null space itself
    k10 = np.pi * np.sqrt(10.0)
    hits = [p for p in rect_window.pairs if abs(p.k - k10) < 1e-7]
    assert len(hits) == 2
    assert hits[0].class_tag == hits[1].class_tag
    assert all(p.multiplicity == 2 for p in hits)


def test_rectangle_pair_quality(rect_window):
    for p in rect_window.pairs:
        assert p.boundary_residual <= 1e-7
        assert p.norm_check <= 1e-5
        assert p.tension_value <= 1e-6


def test_disk_window_matches_bessel_zeros(disk_window):
    oracle = disk_zeros(2.0, 6.0)
    assert len(disk_window.pairs) == len(oracle) == 6
    assert np.abs(disk_window.ks - oracle).max() < 1e-7
    mults = [p.multiplicity for p in disk_window.pairs]
    assert mults == [1, 2, 2, 2, 2, 1]


def test_empty_window_below_first_eigenvalue():
    win = find_spectrum(RECT, (1.0, 3.0))  # first level is 3.5124
    assert win.pairs == []
    assert not win.missing_levels
    _, two_term = weyl_expected(RECT, 1.0, 3.0)
    assert two_term < 1.0
    assert weyl_check(win) == pytest.approx(-weyl_expected(RECT, 1, 3)[0])


def test_find_spectrum_window_validation():
    with pytest.raises(ConfigError):
        find_spectrum(RECT, (0.0, 5.0))
    with pytest.raises(ConfigError):
        find_spectrum(RECT, (5.0, 4.0))
    with pytest.raises(ConfigError):
        find_spectrum(RECT, (np.inf, np.inf))


def test_find_spectrum_deterministic(rect_window):
    again = find_spectrum(RECT, (3.0, 10.0))
    assert np.array_equal(again.ks, rect_window.ks)


def test_solver_params_validation():
    with pytest.raises(ConfigError):
        SolverParams(basis_scale=1.0)
    with pytest.raises(ConfigError):
        SolverParams(points_per_wavelength=4.0)


# -- eigenfunction evaluation --------------------------------------------------


def test_mode_11_value_at_center(rect_window):
    # sin(pi x) sin(pi y / 2) normalized: sqrt(2) at (1/2, 1)
    p = rect_window.pairs[0]
    v = evaluate_eigenfunction(p, np.array([0.5, 1.0]))
    assert abs(abs(v) - np.sqrt(2.0)) < 1e-6


def test_boundary_values_bounded_by_residual(rect_window):
    rng = child_rng(0, "boundary-samples")
    for p in rect_window.pairs[:3]:
        bp, _, _ = RECT.boundary_collocation(p.k, 24.0)
        take = rng.choice(len(bp), size=min(1000, len(bp)), replace=False)
        sup_boundary = np.abs(evaluate_eigenfunction(p, bp[take])).max()
        sup_interior = np.abs(
            evaluate_eigenfunction(p, RECT.interior_cloud(500, rng))).max()
        assert sup_boundary <= 10.0 * p.boundary_residual * sup_interior


def test_disk_ground_mode_center_value(disk_window):
    # normalized J0 mode: |u(0)| = 1 / (sqrt(pi) |J1(j01)|)
    j01 = jn_zeros(0, 1)[0]
    analytic = 1.0 / (np.sqrt(np.pi) * abs(j1(j01)))
    v = evaluate_eigenfunction(disk_window.pairs[0], np.array([0.0, 0.0]))
    assert abs(abs(v) - analytic) < 1e-6


def test_eigenfunction_gradient_consistent(rect_window):
    p = rect_window.pairs[2]
    x = np.array([0.3, 0.7])
    g = evaluate_eigenfunction(p, x, derivative="gradient")
    h = 1e-6
    for j, e in enumerate([np.array([h, 0.0]), np.array([0.0, h])]):
        fd = (evaluate_eigenfunction(p, x + e)
              - evaluate_eigenfunction(p, x - e)) / (2 * h)
        assert abs(g[j] - fd) < 1e-6
    with pytest.raises(ConfigError):
        evaluate_eigenfunction(p, x, derivative="hessian")


def test_orthonormality_in_quadrature_norm(rect_window):
    pts, w = interior_quadrature(RECT, 10.0)
    vals = [evaluate_eigenfunction(p, pts) for p in rect_window.pairs[:6]]
    for i, ui in enumerate(vals):
        assert abs(np.sum(w * ui * ui) - 1.0) < 1e-6
        for uj in vals[i + 1:]:
            assert abs(np.sum(w * ui * uj)) < 1e-4


# -- Weyl validation -----------------------------------------------------------


def test_weyl_zero_width_window(rect_window):
    import dataclasses
    degenerate = dataclasses.replace(rect_window.__class__(
        domain=RECT, k_min=5.0, k_max=5.0, pairs=[], h=0.2,
        weyl_deviation=0.0, weyl_deviation_two_term=0.0,
        missing_levels=False))
    assert weyl_check(degenerate) == 0.0


def test_weyl_rectangle_long_window():
    win = find_spectrum(RECT, (0.5, 40.0))
    oracle = rect_lattice(0.5, 40.0)
    assert len(win.pairs) == len(oracle)  # count exact against the lattice
    assert np.abs(win.ks - oracle).max() < 1e-7
    assert abs(win.weyl_deviation) < 0.05
    assert not win.missing_levels


@pytest.mark.parametrize("win_fixture,dom,lo,hi", [
    ("rect_window", RECT, 3.0, 10.0),
    ("disk_window", DISK, 2.0, 6.0),
])
def test_monotone_completeness(request, win_fixture, dom, lo, hi):
    win = request.getfixturevalue(win_fixture)
    ks = win.ks
    assert np.all(np.diff(ks) >= 0)
    # the two-term prediction itself oscillates around the true staircase
    # by more than one level on integrable tables, so the drift band is 2
    for k in np.linspace(lo, hi, 317):
        _, two = weyl_expected(dom, lo, k) if k > lo else (0.0, 0.0)
        assert abs(np.sum(ks <= k) - two) <= 2.0


# -- the chaotic table ----------------------------------------------------------


def test_stadium_weyl_two_term(stadium_window_40_60):
    win = stadium_window_40_60
    assert abs(win.weyl_deviation) < 0.05
    assert abs(win.weyl_deviation_two_term) < 0.01
    assert not win.missing_levels


def test_stadium_pair_quality(stadium_window_40_60):
    win = stadium_window_40_60
    res = np.array([p.boundary_residual for p in win.pairs])
    nch = np.array([p.norm_check for p in win.pairs])
    assert res.max() <= 1e-7
    assert nch.max() <= 1e-5


def test_stadium_pointwise_completeness(stadium_window_40_60):
    win = stadium_window_40_60
    stad = win.domain
    ks = win.ks
    for k in np.linspace(40.0, 60.0, 503):
        _, two = weyl_expected(stad, 40.0, k) if k > 40 else (0.0, 0.0)
        assert abs(np.sum(ks <= k) - two) <= 2.0


def test_stadium_neighbor_orthogonality(stadium_window_40_60):
    win = stadium_window_40_60
    pts, w = interior_quadrature(win.domain, 60.0)
    gaps = np.diff(win.ks)
    for i in np.argsort(gaps)[:5]:  # closest spacings are the hard cases
        ui = evaluate_eigenfunction(win.pairs[i], pts)
        uj = evaluate_eigenfunction(win.pairs[i + 1], pts)
        assert abs(np.sum(w * ui * uj)) < 1e-4
