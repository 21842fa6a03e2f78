import numpy as np
import pytest

from qerest.errors import BounceLimitError
from qerest.billiard_flow import (
    DEFAULT_TOL,
    PhasePoint,
    ToleranceSet,
    advance,
    birkhoff_average,
    crossings_with_curve,
)
from qerest.geometry import BilliardDomain, CurveSegment


SQ = BilliardDomain.rectangle(1.0, 1.0)


def unfolded_square_position(x0, v, t):
    """Reflection closed form for the unit square: fold the free motion."""
    p = np.asarray(x0) + np.asarray(v) * t
    return 1.0 - np.abs(1.0 - np.mod(p, 2.0))


class TestAdvance:
    def test_straight_flight(self):
        res = advance(SQ, PhasePoint((0.5, 0.5), (1.0, 0.0)), 0.25)
        assert res.defined and res.bounces == 0
        assert np.allclose(res.point.x, [0.75, 0.5], atol=1e-15)
        assert np.allclose(res.point.xi, [1.0, 0.0], atol=1e-15)

    def test_corner_shot_is_undefined(self):
        xi = np.array([1.0, 1.0]) / np.sqrt(2)
        res = advance(SQ, PhasePoint((0.5, 0.5), xi), 2.0)
        assert not res.defined
        assert res.failure.reason == "corner"
        assert res.failure.time == pytest.approx(np.sqrt(0.5), abs=1e-12)
        assert np.allclose(res.failure.location, [1.0, 1.0], atol=1e-9)

    def test_glancing_impact_is_undefined(self):
        d = np.array([1.0, 1e-9])
        d /= np.hypot(*d)
        res = advance(SQ, PhasePoint((0.5, 1.0 - 1e-10), d), 1.0)
        assert not res.defined
        assert res.failure.reason == "glancing"

    def test_unfolding_oracle_unit_square(self):
        rng = np.random.default_rng(42)
        x0 = rng.uniform(0.05, 0.95, 2)
        ang = rng.uniform(0.3, 1.2)
        v = np.array([np.cos(ang), np.sin(ang)])
        # roughly 1e3 reflections
        for t in rng.uniform(400.0, 700.0, 8):
            res = advance(SQ, PhasePoint(x0, v), t)
            assert res.defined
            assert np.allclose(res.point.x, unfolded_square_position(x0, v, t), atol=1e-9)

    def test_negative_time_is_reverse_flow(self):
        dom = BilliardDomain.stadium(1.0, 1.0)
        rho = PhasePoint((0.3, -0.2), np.array([0.6, 0.8]))
        fwd = advance(dom, rho, 37.0)
        assert fwd.defined
        back = advance(dom, fwd.point, -37.0)
        assert back.defined
        assert np.allclose(back.point.x, rho.x, atol=1e-10)
        assert np.allclose(back.point.xi, rho.xi, atol=1e-10)
        assert back.time == -37.0

    def test_one_reflection_and_diameter_retroreflection(self):
        res = advance(SQ, PhasePoint((0.5, 0.5), (1.0, 0.0)), 1.0)
        assert np.allclose(res.point.x, [0.5, 0.5], atol=1e-14)
        assert np.allclose(res.point.xi, [-1.0, 0.0], atol=1e-14)
        disk = BilliardDomain.disk(1.0)
        res = advance(disk, PhasePoint((0.0, 0.0), (1.0, 0.0)), 2.0)
        assert np.allclose(res.point.x, [0.0, 0.0], atol=1e-12)
        assert np.allclose(res.point.xi, [-1.0, 0.0], atol=1e-12)

    def test_reversibility_chaotic_short_horizon(self):
        # roundoff grows with the Lyapunov exponent, so keep the horizon modest
        dom = BilliardDomain.stadium(1.0, 1.0)
        rho = PhasePoint((0.123, 0.271), np.array([np.cos(0.7), np.sin(0.7)]))
        fwd = advance(dom, rho, 40.0)
        assert fwd.defined
        rev = advance(dom, fwd.point.reversed(), 40.0)
        assert rev.defined
        assert np.allclose(rev.point.x, rho.x, atol=1e-9)
        assert np.allclose(rev.point.xi, -rho.xi, atol=1e-9)

    def test_reversibility_square_many_bounces(self):
        # integrable table: error stays near roundoff over thousands of bounces
        rho = PhasePoint((0.123, 0.271), np.array([np.cos(0.7), np.sin(0.7)]))
        T = 2000.0
        fwd = advance(SQ, rho, T)
        assert fwd.defined and fwd.bounces > 2500
        rev = advance(SQ, fwd.point.reversed(), T)
        assert rev.defined
        assert np.allclose(rev.point.x, rho.x, atol=1e-9)
        assert np.allclose(rev.point.xi, -rho.xi, atol=1e-9)

    def test_speed_preserved_over_many_bounces(self):
        dom = BilliardDomain.sinai_cell(1.0, 0.3)
        rho = PhasePoint((0.7, 0.52), np.array([np.cos(1.1), np.sin(1.1)]))
        res = advance(dom, rho, 5000.0)
        assert res.defined
        assert abs(np.hypot(*res.point.xi) - 1.0) < 1e-12

    def test_bounce_cap(self):
        tol = ToleranceSet(bounce_cap=10)
        with pytest.raises(BounceLimitError):
            advance(SQ, PhasePoint((0.5, 0.5), (1.0, 0.0)), 100.0, tol)

    def test_infinite_time_rejected(self):
        with pytest.raises(ValueError):
            advance(SQ, PhasePoint((0.5, 0.5), (1.0, 0.0)), np.inf)


class TestCrossings:
    def test_square_crossings_closed_form(self):
        N = CurveSegment.line(SQ, (0.5, 0.2), (0.5, 0.8))
        scan = crossings_with_curve(SQ, N, PhasePoint((0.0, 0.5), (1.0, 0.0)), 2.0)
        assert not scan.truncated
        assert [pytest.approx(c.t, abs=1e-12) for c in scan.crossings] == [0.5, 1.5]
        assert scan.crossings[0].point.s == pytest.approx(0.3, abs=1e-12)
        assert scan.crossings[0].sign == -1  # nu points in -x
        assert scan.crossings[1].sign == +1

    def test_arc_curve_crossings(self):
        dom = BilliardDomain.disk(1.0)
        N = CurveSegment.arc(dom, (0.0, 0.0), 0.5, -np.pi / 4, np.pi / 4)
        scan = crossings_with_curve(dom, N, PhasePoint((-0.9, 0.0), (1.0, 0.0)), 2.6)
        ts = [c.t for c in scan.crossings]
        assert ts == [pytest.approx(1.4, abs=1e-12), pytest.approx(2.4, abs=1e-12)]
        assert scan.crossings[0].point.s == pytest.approx(0.5 * np.pi / 4, abs=1e-12)

    def test_negative_horizon_mirrors_forward(self):
        dom = BilliardDomain.stadium(1.0, 1.0)
        N = CurveSegment.line(dom, (-0.3, -0.4), (0.2, 0.45))
        rho = PhasePoint((0.9, 0.1), np.array([np.cos(2.2), np.sin(2.2)]))
        back = crossings_with_curve(dom, N, rho, -30.0)
        fwd_of_rev = crossings_with_curve(dom, N, rho.reversed(), 30.0)
        assert len(back.crossings) == len(fwd_of_rev.crossings)
        assert len(back.crossings) > 0
        for b, f in zip(back.crossings, reversed(fwd_of_rev.crossings)):
            assert b.t == pytest.approx(-f.t, abs=1e-12)
            assert b.point.s == pytest.approx(f.point.s, abs=1e-12)
            assert np.allclose(b.point.xi, -f.point.xi)
            assert b.sign == -f.sign

    def test_truncation_reported(self):
        N = CurveSegment.line(SQ, (0.4, 0.2), (0.4, 0.8))
        xi = np.array([1.0, 1.0]) / np.sqrt(2)
        scan = crossings_with_curve(SQ, N, PhasePoint((0.5, 0.5), xi), 10.0)
        assert scan.truncated and scan.failure.reason == "corner"
        assert scan.crossings == []


class TestBirkhoff:
    def test_constant_observable_is_exact(self):
        rho = PhasePoint((0.3, 0.41), np.array([np.cos(0.9), np.sin(0.9)]))
        res = birkhoff_average(SQ, lambda x, xi: np.ones(len(x)), rho, 17.0, 0.03)
        assert res.value == 1.0 and not res.truncated

    def test_periodic_orbit_indicator(self):
        rho = PhasePoint((0.0, 0.5), (1.0, 0.0))
        obs = lambda x, xi: (x[:, 0] < 0.5).astype(float)
        res = birkhoff_average(SQ, obs, rho, 2.0, 0.01)
        assert res.value == pytest.approx(0.5, abs=1e-15)
        assert res.samples == 200

    def test_ergodic_disk_fraction_in_stadium(self):
        dom = BilliardDomain.stadium(1.0, 1.0)
        c, r = np.array([0.3, -0.2]), 0.45
        obs = lambda x, xi: (np.hypot(*(x - c).T) < r).astype(float)
        rho = PhasePoint((0.37, -0.12), np.array([np.cos(0.63), np.sin(0.63)]))
        res = birkhoff_average(dom, obs, rho, 10000.0, 0.05)
        assert not res.truncated
        # oracle: Monte Carlo occupancy fraction of the same disk
        rng = np.random.default_rng(5)
        cloud = dom.interior_cloud(400000, rng)
        mc = (np.hypot(*(cloud - c).T) < r).mean()
        assert mc == pytest.approx(np.pi * r * r / dom.area, abs=3e-3)
        assert abs(res.value - mc) < 0.02

    def test_truncated_average(self):
        xi = np.array([1.0, 1.0]) / np.sqrt(2)
        rho = PhasePoint((0.5, 0.5), xi)
        res = birkhoff_average(SQ, lambda x, xi: np.ones(len(x)), rho, 50.0, 0.01)
        assert res.truncated and res.failure.reason == "corner"
        assert res.time < 50.0
        assert res.value == pytest.approx(1.0)


class TestLiouville:
    def test_phase_volume_preserved(self):
        """Push uniform S*M samples forward; cell occupancies must be stable."""
        dom = BilliardDomain.stadium(1.0, 1.0)
        rng = np.random.default_rng(2024)
        n = 20000
        pts = dom.interior_cloud(n, rng)
        angs = rng.uniform(0, 2 * np.pi, n)
        boxes = [
            lambda x: (x[0] < -1.0),
            lambda x: (x[0] >= -1.0) & (x[0] < 0.0) & (x[1] > 0),
            lambda x: (x[0] >= 0.5) & (x[1] <= 0),
        ]
        before = np.array([sum(b(p) for p in pts) for b in boxes], dtype=float)
        after = np.zeros(len(boxes))
        lost = 0
        for p, a in zip(pts, angs):
            res = advance(dom, PhasePoint(p, (np.cos(a), np.sin(a))), 3.0)
            if not res.defined:
                lost += 1
                continue
            for i, b in enumerate(boxes):
                after[i] += b(res.point.x)
        assert lost < n * 1e-3  # undefined set is tiny
        for i in range(len(boxes)):
            p_hat = before[i] / n
            sigma = np.sqrt(n * p_hat * (1 - p_hat))
            assert abs(after[i] - before[i]) < 4 * sigma
