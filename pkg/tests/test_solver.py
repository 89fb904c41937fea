import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nhms_memory.model import GaussianEnvelope, Grid, InputPulse, MagneticPulse, PulseTrain, TargetParams
from nhms_memory.solver import (
    SolverInstabilityError,
    coupling_constant,
    echo_segments,
    run_full,
    run_reduced,
)

GAMMA = 1 / 141
OMEGA0 = 1e-3 * GAMMA
SMALL = Grid(n_z=60, dt=0.02, t_end=150.0, dt_out=0.1)
WRITE = MagneticPulse.from_area(math.pi, 15.0, 9.0)
READ = MagneticPulse.from_area(math.pi, 90.0, 9.0)
MEMORY = PulseTrain((WRITE, READ))


def pulse(amplitude=OMEGA0, center=15.0, phase=0.0, fwhm=9.0):
    return InputPulse(GaussianEnvelope(amplitude, center, fwhm), phase)


def run(inputs, xi=16.0, train=MEMORY, grid=SMALL, **kw):
    return run_reduced(train, inputs, TargetParams(xi), grid, **kw)


# --- trivial limits ---------------------------------------------------------

def test_no_splitting_leaves_spin_coherence_empty():
    ts = run([pulse()], train=PulseTrain(()))
    assert np.all(ts.rho_s == 0)
    assert np.max(np.abs(ts.rho_p)) > 0


def test_no_absorber_transmits_input():
    ts = run([pulse()], xi=0.0)
    assert np.allclose(ts.omega_x, ts.input_x, rtol=0, atol=1e-15)


def test_zero_input_gives_zero_output():
    ts = run([pulse(amplitude=0.0)])
    assert np.all(ts.omega_x == 0)
    full = run_full(MEMORY, [pulse(amplitude=0.0)], TargetParams(16.0), SMALL)
    assert np.all(full.omega_x == 0)


# --- linearity --------------------------------------------------------------

@settings(max_examples=5)
@given(st.floats(0.05, 1.0), st.floats(-math.pi, math.pi))
def test_output_scales_with_input(scale, phase):
    base = run([pulse()])
    scaled = run([pulse(OMEGA0 * scale, phase=phase)])
    expected = base.omega_x * scale * complex(math.cos(phase), math.sin(phase))
    assert np.allclose(scaled.omega_x, expected, rtol=0, atol=1e-9 * OMEGA0)


def test_superposition_of_inputs():
    a, b = pulse(0.6 * OMEGA0), pulse(0.4 * OMEGA0, center=40.0, phase=1.0)
    both = run([a, b])
    assert np.allclose(both.omega_x, run([a]).omega_x + run([b]).omega_x, rtol=0, atol=1e-9 * OMEGA0)


# --- storage ----------------------------------------------------------------

def test_storage_at_entrance_face():
    # z = 0 sees no propagation: a pi pulse leaves rho_S = C Omega0 / Delta0
    ts = run([pulse()], decay=False, snapshot_times=[50.0])
    state = ts.snapshots[0]
    assert state.time == pytest.approx(50.0)
    expected = coupling_constant() * OMEGA0 / WRITE.peak
    assert abs(state.rho_s[0]) == pytest.approx(expected, rel=1e-3)
    assert state.omega[0] == pytest.approx(ts.input_x[500], abs=1e-18)


def test_spin_coherence_decays_at_half_gamma_while_stored():
    on, off = run([pulse()]), run([pulse()], decay=False)
    i, j = 400, 650  # 40 ns and 65 ns, between the pulses
    assert abs(on.rho_s[j] / on.rho_s[i]) == pytest.approx(math.exp(-GAMMA * 25 / 2), rel=1e-4)
    assert abs(off.rho_s[j] / off.rho_s[i]) == pytest.approx(1.0, rel=1e-4)


def test_optical_coherence_small_after_write():
    ts = run([pulse()])
    stored = ts.window(45.0, 65.0)
    assert np.max(np.abs(ts.rho_p[stored])) < 0.02 * np.max(np.abs(ts.rho_s[stored]))


def test_snapshot_field_matches_exit_output():
    ts = run([pulse()], snapshot_times=[95.0, 20.0])
    assert [s.time for s in ts.snapshots] == pytest.approx([20.0, 95.0])
    late = ts.snapshots[1]
    assert late.omega[-1] == pytest.approx(ts.omega_x[950], rel=1e-6)
    assert late.z[0] == 0.0 and late.z[-1] == 1.0


def test_echo_peak_within_ten_percent():
    ts = run([pulse()], grid=Grid(t_end=150.0))
    echo = echo_segments(ts, MEMORY)[1]
    a = TargetParams(16.0).absorption(READ.peak)
    expected = OMEGA0 * 2 * a * math.exp(-a) * math.exp(-GAMMA * 75 / 2)
    assert abs(echo.peak) == pytest.approx(expected, rel=0.10)


@pytest.mark.xfail(strict=True, reason="simulated echo is 7.6% taller than 2 A e^{-A} Omega0")
def test_echo_peak_within_five_percent():
    ts = run([pulse()], grid=Grid(t_end=150.0))
    echo = echo_segments(ts, MEMORY)[1]
    a = TargetParams(16.0).absorption(READ.peak)
    expected = OMEGA0 * 2 * a * math.exp(-a) * math.exp(-GAMMA * 75 / 2)
    assert abs(echo.peak) == pytest.approx(expected, rel=0.05)


# --- full four-level model --------------------------------------------------

def test_full_model_agrees_with_reduced():
    red = run([pulse()])
    full = run_full(MEMORY, [pulse()], TargetParams(16.0), SMALL)
    scale = np.max(np.abs(red.omega_x))
    assert np.max(np.abs(full.omega_x - red.omega_x)) < 1e-6 * scale
    assert np.allclose(full.rho_s, red.rho_s, rtol=0, atol=1e-6 * np.max(np.abs(red.rho_s)))


def test_full_model_trace_and_populations():
    full = run_full(MEMORY, [pulse()], TargetParams(16.0), SMALL, decay=False)
    assert np.max(full.trace_deviation) < 1e-12
    pops = full.final_state.populations
    assert np.allclose(pops[:, :2], 0.5, atol=1e-9)
    assert np.allclose(pops[:, 2:], 0.0, atol=1e-9)


# --- errors -----------------------------------------------------------------

def test_instability_detected():
    with pytest.raises(SolverInstabilityError, match="decrease dt"):
        run([pulse(1e-6)], xi=1e4, train=PulseTrain(()), grid=Grid(n_z=50, dt=5.0, t_end=300.0, dt_out=5.0))


def test_unresolved_splitting_rejected():
    with pytest.raises(ValueError, match="decrease dt"):
        run([pulse()], grid=Grid(n_z=20, dt=0.5, t_end=150.0, dt_out=0.5))


def test_strong_input_rejected():
    with pytest.raises(ValueError, match="weak-field"):
        run([pulse(10 * OMEGA0)])
    run([pulse(10 * OMEGA0)], weak_field_ratio=1e-2)


def test_scalar_models_reject_sigma_and_axis_changes():
    sigma = InputPulse(GaussianEnvelope(OMEGA0, 15, 9), polarization="sigma")
    with pytest.raises(ValueError, match="sigma"):
        run([sigma])
    turned = PulseTrain((WRITE, MagneticPulse.from_area(math.pi, 90, 9, axis=(1, 0, 0))))
    with pytest.raises(ValueError, match="run_vector"):
        run_full(turned, [pulse()], TargetParams(16.0), SMALL)


# --- echo segmentation ------------------------------------------------------

def test_segments_follow_pulse_count():
    ts = run([pulse()])
    reports = echo_segments(ts, MEMORY)
    assert len(reports) == 2
    assert reports[0].t_end == reports[1].t_begin == pytest.approx(52.5)
    assert len(echo_segments(ts, PulseTrain(()))) == 1
    total = sum(r.energy for r in reports)
    assert total == pytest.approx(np.trapezoid(ts.intensity, ts.times), rel=1e-2)


def test_segment_report_fields():
    ts = run([pulse()])
    echo = echo_segments(ts, MEMORY)[1]
    assert READ.center - 5 < echo.peak_time < READ.center + 5
    assert echo.energy_y == 0.0
    assert echo.efficiency == pytest.approx(echo.energy / ts.input_energy)
    assert echo.sign == int(np.sign(echo.peak.real))
    d = echo.as_dict()
    assert d["peak"] == [echo.peak.real, echo.peak.imag]


def test_empty_window_report():
    ts = run([pulse(0.0)])
    r = echo_segments(ts, MEMORY)[1]
    assert r.energy == 0.0 and r.sign == 0 and math.isnan(r.peak_time)
