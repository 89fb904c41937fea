import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nhms_memory.experiments import build_scenario, redistribution_factor
from nhms_memory.model import GaussianEnvelope, Grid, InputPulse, MagneticPulse, PulseTrain, TargetParams
from nhms_memory.polarization import (
    VECTOR_GRID,
    SublevelState,
    initial_state,
    level_spin_matrices,
    quantization_frame,
    rotate_quantization_axis,
    rotation_operator,
    run_vector,
    spin_matrices,
)
from nhms_memory.solver import echo_segments

GAMMA = 1 / 141
angles = st.floats(0.0, 2 * math.pi)


def planar(theta):
    return (math.cos(theta), math.sin(theta), 0.0)


def random_state(seed, n_slabs=3, axis=(0.0, 1.0, 0.0)):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(n_slabs, 6, 6)) + 1j * rng.normal(size=(n_slabs, 6, 6))
    rho = m @ np.conj(np.swapaxes(m, 1, 2))
    rho /= np.trace(rho, axis1=1, axis2=2)[:, None, None]
    return SublevelState(rho, axis)


def expect(op, rho):
    return np.real(np.einsum("ab,sba->s", op, rho))


# --- spin algebra -----------------------------------------------------------

@pytest.mark.parametrize("j", [0.5, 1.0, 1.5])
def test_spin_commutators(j):
    jx, jy, jz = spin_matrices(j)
    assert np.allclose(jx @ jy - jy @ jx, 1j * jz)
    assert np.allclose(jx @ jx + jy @ jy + jz @ jz, j * (j + 1) * np.eye(int(2 * j + 1)))


def test_level_spin_matrices_block_structure():
    jx, _, jz = level_spin_matrices()
    assert jx.shape == (6, 6)
    assert np.allclose(np.diag(jz), [0.5, -0.5, 1.5, 0.5, -0.5, -1.5])
    assert np.all(jx[:2, 2:] == 0)


@given(angles)
def test_frame_right_handed(theta):
    f = quantization_frame(planar(theta))
    assert np.allclose(f.T @ f, np.eye(3))
    assert np.linalg.det(f) == pytest.approx(1.0)
    assert np.allclose(f[:, 2], planar(theta))


@pytest.mark.parametrize("axis", [(0, 0, 1), (0, 1, 1), (0, 0, 0)])
def test_axis_along_propagation_rejected(axis):
    with pytest.raises(ValueError):
        quantization_frame(axis)


# --- rotations --------------------------------------------------------------

@given(angles)
def test_rotation_to_same_axis_is_identity(theta):
    assert np.allclose(rotation_operator(planar(theta), planar(theta)), np.eye(6), atol=1e-12)


@given(angles, angles, st.integers(0, 2**32 - 1))
def test_rotation_unitary_preserves_trace_and_spectrum(a, b, seed):
    d = rotation_operator(planar(a), planar(b))
    assert np.allclose(d @ d.conj().T, np.eye(6), atol=1e-12)
    state = random_state(seed, axis=planar(a))
    out = rotate_quantization_axis(state, planar(b))
    assert out.trace_deviation() < 1e-12
    assert out.hermiticity_deviation() < 1e-12
    assert np.allclose(np.linalg.eigvalsh(out.rho), np.linalg.eigvalsh(state.rho), atol=1e-12)


@given(angles, angles, st.integers(0, 2**32 - 1))
def test_rotation_round_trip(a, b, seed):
    state = random_state(seed, axis=planar(a))
    back = rotate_quantization_axis(rotate_quantization_axis(state, planar(b)), planar(a))
    assert np.allclose(back.rho, state.rho, atol=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_rotation_preserves_lab_angular_momentum(seed):
    # old axis y: J.y is Jz. new axis x: frame e1 = z x x = y, so J.y is Jx.
    jx, jy, jz = level_spin_matrices()
    state = random_state(seed, axis=(0.0, 1.0, 0.0))
    out = rotate_quantization_axis(state, (1.0, 0.0, 0.0))
    assert np.allclose(expect(jx, out.rho), expect(jz, state.rho), atol=1e-12)
    # lab z is e2 in both frames
    assert np.allclose(expect(jy, out.rho), expect(jy, state.rho), atol=1e-12)


def test_unpolarized_ground_state_is_invariant():
    state = initial_state(4)
    assert state.trace_deviation() < 1e-15
    out = rotate_quantization_axis(state, (1.0, 1.0, 0.0))
    assert np.allclose(out.rho, state.rho, atol=1e-14)


@given(angles)
def test_redistribution_factor_range(theta):
    f = redistribution_factor((0, 1, 0), planar(theta))
    assert 0.0 <= f <= 1.0 + 1e-12
    assert redistribution_factor((0, 1, 0), (0, 1, 0)) == pytest.approx(1.0)
    assert redistribution_factor((0, 1, 0), (1, 0, 0)) == pytest.approx(0.25)


# --- propagation ------------------------------------------------------------

SHORT = Grid(n_z=40, dt=0.02, t_end=150.0)


def test_zero_input_zero_output():
    train = PulseTrain((MagneticPulse.from_area(math.pi, 15, 9), MagneticPulse.from_area(math.pi, 90, 9, axis=(1, 0, 0))))
    ts = run_vector(train, [InputPulse(GaussianEnvelope(0.0, 15, 9))], TargetParams(16.0), SHORT)
    assert np.all(ts.omega_x == 0) and np.all(ts.omega_y == 0)
    assert ts.final_state.axis == (1.0, 0.0, 0.0)


def test_fixed_axis_keeps_polarizations_apart():
    # along a fixed y axis pi light drives Delta m = 0 and sigma light Delta m = +-1 only
    train = PulseTrain((MagneticPulse.from_area(math.pi, 15, 9), MagneticPulse.from_area(math.pi, 90, 9)))
    pi = InputPulse(GaussianEnvelope(1e-3 * GAMMA, 15, 9))
    ts_pi = run_vector(train, [pi], TargetParams(16.0), SHORT)
    ts_sigma = run_vector(train, [replace(pi, polarization="sigma")], TargetParams(16.0), SHORT)
    assert np.all(ts_pi.omega_y == 0)
    assert np.all(ts_sigma.omega_x == 0)
    assert np.max(np.abs(ts_sigma.omega_y)) > 0


def test_vector_needs_a_pulse():
    with pytest.raises(ValueError):
        run_vector(PulseTrain(()), [InputPulse(GaussianEnvelope(1e-6, 15, 9))], TargetParams(16.0), SHORT)


def test_axis_change_echo(fig6):
    state = fig6.series.final_state
    assert state.hermiticity_deviation() < 1e-12
    assert state.min_eigenvalue() > -1e-12
    assert state.trace_deviation() < 1e-6
    assert fig6.series.metadata["axes"] == [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]
    echo = fig6.echoes[1]
    assert echo.energy_y / echo.energy > 0.99


def test_axis_change_efficiency_follows_redistribution(fig6):
    scalar = build_scenario("fig2a", grid=replace(VECTOR_GRID, t_end=300.0)).run()
    eta_scalar = echo_segments(scalar, build_scenario("fig2a").train)[1].efficiency
    expected = eta_scalar * redistribution_factor((0, 1, 0), (1, 0, 0))
    assert fig6.echoes[1].efficiency == pytest.approx(expected, rel=0.20)
