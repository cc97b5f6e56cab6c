import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nslag.core import DomainError, Grid, Params, State, build_grid, \
    equilibrium_state
from nslag.model import (MmsProfile, boundary_stress, cell_strain_and_stress,
                         conductivity, face_heat_flux, mms_source, pressure,
                         rhs)
from oracles import sympy_mms_sources

# frozen spot values of the forcing terms, derived symbolically
# (amp 0.1, length 20); keyed by (params set, x, t)
MMS_FROZEN = {
    ("default", 10.0, 0.0): (0.0,
                             -0.08339543195857359,
                             0.09111735603901958),
    ("default", 3.7, 0.25): (-0.07531748687479423,
                             -0.05680644901259745,
                             -0.018512868165545654),
    ("general", 10.0, 0.0): (0.0,
                             -0.08130821890042448,
                             0.09452256962059760),
    ("general", 3.7, 0.25): (-0.07531748687479423,
                             -0.06008114944215592,
                             -0.022927551997911750),
}
GENERAL = dict(mu=0.7, kappa=1.3, beta=2.5, R=1.2, cv=1.8)


def test_pressure_values():
    assert pressure(1.0, 1.0, Params()) == 1.0
    assert pressure(2.0, 1.0, Params()) == 0.5
    assert pressure(0.5, 2.0, Params(R=2.0)) == 8.0


def test_pressure_rejects_nonpositive_volume():
    with pytest.raises(DomainError):
        pressure(0.0, 1.0, Params())
    with pytest.raises(DomainError):
        pressure(np.array([1.0, -2.0]), np.array([1.0, 1.0]), Params())


def test_conductivity_values():
    assert conductivity(1.0, Params(beta=3.7)) == 1.0
    assert conductivity(4.0, Params(beta=0.5)) == 2.0


@given(theta=st.floats(1e-6, 1e6))
def test_conductivity_constant_when_exponent_zero(theta):
    assert conductivity(theta, Params(beta=0.0, kappa=3.0)) == 3.0


def test_conductivity_rejects_nonpositive_temperature():
    with pytest.raises(DomainError):
        conductivity(-1.0, Params())


def test_strain_and_stress_at_equilibrium():
    grid = build_grid(10.0, 8)
    params = Params()
    ux, sigma = cell_strain_and_stress(equilibrium_state(grid), grid, params)
    assert np.all(ux == 0.0)
    np.testing.assert_allclose(sigma, -params.R, rtol=0, atol=0)


def test_stress_vanishes_for_balanced_strain():
    # slope-1 velocity, mu = R = 1: viscous stress cancels the pressure
    grid = build_grid(10.0, 8)
    s = equilibrium_state(grid)
    s.u = grid.faces().copy()
    _, sigma = cell_strain_and_stress(s, grid, Params())
    np.testing.assert_allclose(sigma, 0.0, atol=1e-15)
    s.v = np.full(8, 2.0)
    _, sigma = cell_strain_and_stress(s, grid, Params())
    np.testing.assert_allclose(sigma, 0.0, atol=1e-15)
    s.theta = np.full(8, 3.0)
    _, sigma = cell_strain_and_stress(s, grid, Params())
    np.testing.assert_allclose(sigma, -1.0, rtol=1e-15)


def test_boundary_stress_is_minus_outer_pressure():
    assert boundary_stress(0.0, Params()) == -1.0
    assert boundary_stress(123.4, Params(R=2.0)) == -2.0


def test_heat_flux_zero_at_equilibrium():
    grid = build_grid(10.0, 8)
    q = face_heat_flux(equilibrium_state(grid), grid, Params()).q
    np.testing.assert_allclose(q, 0.0, atol=0)


def test_heat_flux_two_cell_value():
    grid = Grid(2.0, 2, 1.0)
    s = State(0.0, np.array([1.0, 1.0]), np.array([1.0, 3.0]),
              np.zeros(3))
    q = face_heat_flux(s, grid, Params()).q
    assert q[0] == 0.0
    assert q[1] == 4.0   # mean conductivity 2, gradient 2


def test_heat_flux_far_face_uses_ghost():
    grid = Grid(2.0, 2, 1.0)
    s = State(0.0, np.array([1.0, 1.0]), np.array([1.0, 3.0]),
              np.zeros(3))
    q = face_heat_flux(s, grid, Params()).q
    # ghost (v, theta) = (1, 1): mean conductivity 2, gradient -2
    assert q[2] == -4.0


@settings(max_examples=60)
@given(data=st.data())
def test_heat_flux_antisymmetric_under_cell_swap(data):
    """Swapping the two cells adjacent to a face negates its flux."""
    n = 6
    grid = build_grid(6.0, n)
    pos = st.floats(0.2, 5.0)
    v = np.array(data.draw(st.lists(pos, min_size=n, max_size=n)))
    th = np.array(data.draw(st.lists(pos, min_size=n, max_size=n)))
    i = data.draw(st.integers(1, n - 1))
    params = Params(beta=data.draw(st.floats(0.0, 3.0)))
    s = State(0.0, v, th, np.zeros(n + 1))
    q = face_heat_flux(s, grid, params).q
    v2, th2 = v.copy(), th.copy()
    v2[i - 1], v2[i] = v[i], v[i - 1]
    th2[i - 1], th2[i] = th[i], th[i - 1]
    q2 = face_heat_flux(State(0.0, v2, th2, np.zeros(n + 1)), grid, params).q
    assert q2[i] == -q[i] or abs(q2[i] + q[i]) < 1e-14 * abs(q[i])


def test_rhs_zero_at_equilibrium():
    grid = build_grid(50.0, 64)
    r = rhs(equilibrium_state(grid), grid, Params(R=1.3))
    assert np.max(np.abs(r.dv)) <= 1e-14
    assert np.max(np.abs(r.du)) <= 1e-14
    assert np.max(np.abs(r.dtheta)) <= 1e-14


def test_rhs_uniform_strain():
    # v = theta = 1, u = c*x: compression work -c plus heating c^2
    grid = build_grid(10.0, 8)
    c = 0.5
    s = equilibrium_state(grid)
    s.u = c * grid.faces()
    r = rhs(s, grid, Params())
    np.testing.assert_allclose(r.dv, c, rtol=0, atol=0)
    np.testing.assert_allclose(r.dtheta, -c + c * c, rtol=1e-14)
    assert np.all(r.du[1:-1] == 0.0)
    assert r.du[-1] == 0.0


@settings(max_examples=40)
@given(data=st.data())
def test_volume_rate_telescopes(data):
    """Total volume change equals the boundary flux u[N] - u[0]."""
    n = 12
    grid = build_grid(12.0, n)
    vals = st.floats(-2.0, 2.0)
    u = np.array(data.draw(st.lists(vals, min_size=n + 1, max_size=n + 1)))
    u[-1] = 0.0
    s = State(0.0, np.full(n, 1.3), np.full(n, 0.9), u)
    r = rhs(s, grid, Params())
    total = grid.h * math.fsum(r.dv.tolist())
    assert abs(total - (-u[0])) <= 1e-13


def test_forward_euler_substep_conserves_volume():
    grid = build_grid(12.0, 12)
    s = equilibrium_state(grid)
    s.u = 0.3 * np.cos(grid.faces())
    s.u[-1] = 0.0
    r = rhs(s, grid, Params())
    dt = 0.01
    v_new = s.v + dt * r.dv
    change = grid.h * math.fsum((v_new - s.v).tolist())
    assert abs(change - (-dt * s.u[0])) <= 1e-15


def test_mms_sources_vanish_at_zero_amplitude():
    prof = MmsProfile(amp=0.0, length=20.0)
    x = np.linspace(0.0, 20.0, 11)
    for term in mms_source(x, 0.7, prof, Params()):
        np.testing.assert_allclose(term, 0.0, atol=0)


def test_mms_sources_decay_in_time():
    prof = MmsProfile(amp=0.1, length=20.0)
    x = np.linspace(0.0, 20.0, 11)
    late = mms_source(x, 40.0, prof, Params())
    assert max(np.max(np.abs(term)) for term in late) < 1e-15


def test_mms_source_frozen_spot_values():
    prof = MmsProfile(amp=0.1, length=20.0)
    for (tag, xv, tv), expected in MMS_FROZEN.items():
        params = Params(**GENERAL) if tag == "general" else Params()
        got = mms_source(xv, tv, prof, params)
        for g, e in zip(got, expected):
            assert abs(float(g) - e) <= 1e-12


def test_mms_source_matches_symbolic_oracle():
    """Independent sympy differentiation agrees at the midpoint spot."""
    prof = MmsProfile(amp=0.1, length=20.0)
    got = mms_source(10.0, 0.0, prof, Params())
    want = sympy_mms_sources(10.0, 0.0, 0.1, 20.0, 1, 1, 1, 1, 1)
    for g, w in zip(got, want):
        assert abs(float(g) - w) <= 1e-12


def _mms_rhs_residual(n, t=0.3):
    prof = MmsProfile(amp=0.1, length=20.0)
    params = Params()
    grid = build_grid(prof.length, n)
    xc, xf = grid.centers(), grid.faces()
    s = State(t, np.asarray(prof.v_exact(xc, t)),
              np.asarray(prof.theta_exact(xc, t)),
              np.asarray(prof.u_exact(xf, t)))
    r = rhs(s, grid, params, mms=prof)
    a, length = prof.amp, prof.length
    decay = a * math.exp(-t)
    dv_ex = -decay * np.cos(np.pi * xc / length)
    du_ex = -decay * np.sin(np.pi * xf / length)
    dth_ex = -decay * np.cos(2.0 * np.pi * xc / length)
    h = grid.h
    wf = np.full(n + 1, h)
    wf[0] = wf[-1] = 0.5 * h
    return math.sqrt(h * float(np.sum((r.dv - dv_ex) ** 2))
                     + float(np.sum(wf * (r.du - du_ex) ** 2))
                     + h * float(np.sum((r.dtheta - dth_ex) ** 2)))


def test_rhs_truncation_error_second_order():
    res = [_mms_rhs_residual(n) for n in (100, 200, 400)]
    for coarse, fine in zip(res[:-1], res[1:]):
        assert 3.5 <= coarse / fine <= 4.5
