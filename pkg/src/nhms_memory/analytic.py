"""
Closed-form storage and echo amplitudes for pi-area Gaussian splitting pulses.

All predictions are expressed at the exit face z = L. Decay factors are
referenced to the center ``t0`` of the stored input pulse, i.e. they read
exp(-Gamma (t - t0) / 2). Phase integrals start at the pulse's ``start``
(center - 4 sigma).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import FE57, InputPulse, IsotopeParams, MagneticPulse, TargetParams
from .solver import TimeSeries, coupling_constant

__all__ = [
    "EchoPrediction",
    "FirstPass",
    "NthEcho",
    "NTH_ECHO_CALIBRATION",
    "first_pass",
    "first_echo",
    "first_echo_mismatched",
    "second_echo",
    "nth_echo",
    "nth_echo_prediction",
    "f_coeff",
    "echo_efficiency",
    "first_echo_prefactor",
    "second_echo_prefactor",
    "mismatched_prefactor",
]

# Ratio between the explicit n = 2, 3 echo amplitudes and the general n-pulse
# sum. Fixed against run_reduced (see calibrate_nth_echo in experiments).
NTH_ECHO_CALIBRATION = 0.5


def _absorption(target: TargetParams, pulse: MagneticPulse) -> float:
    if pulse.peak == 0:
        raise ValueError("splitting amplitude must be non-zero")
    return target.absorption(pulse.peak)


def first_echo_prefactor(a: float) -> float:
    return 2.0 * a * math.exp(-a)


def second_echo_prefactor(a: float) -> float:
    return 2.0 * (a * a - a) * math.exp(-a)


def mismatched_prefactor(a_write: float, a_read: float) -> float:
    """First-echo prefactor when write and read pulses have different peaks.

    Reduces to 2 A exp(-A) for equal absorption parameters.
    """
    if abs(a_read - a_write) < 1e-9 * max(1.0, a_write):
        return first_echo_prefactor(0.5 * (a_write + a_read))
    return 2.0 * a_write * (math.exp(-a_write) - math.exp(-a_read)) / (a_read - a_write)


@dataclass(frozen=True)
class EchoPrediction:
    """Analytic echo Omega(L, t) = Omega0 * prefactor * Sin[phase(t)] * decay(t)."""

    prefactor: float
    absorption: float
    omega0: complex
    read: MagneticPulse
    t0: float
    decay_rate: float
    decay: bool = True

    def decay_factor(self, t):
        if not self.decay:
            return np.ones_like(np.asarray(t, dtype=float))
        return np.exp(-0.5 * self.decay_rate * (np.asarray(t, dtype=float) - self.t0))

    def field(self, t) -> np.ndarray:
        phase = np.clip(self.read.envelope.integral(t), 0.0, None)
        return self.omega0 * self.prefactor * np.sin(phase) * self.decay_factor(t)

    def shape_approx(self, t) -> np.ndarray:
        """Same echo with Sin[phase] replaced by Delta(t)/Delta0 (reporting only)."""
        return self.omega0 * self.prefactor * self.read.envelope(t) / self.read.peak * self.decay_factor(t)

    @property
    def peak_amplitude(self) -> complex:
        return self.omega0 * self.prefactor * complex(self.decay_factor(self.read.center))


@dataclass(frozen=True)
class FirstPass:
    rho_s: np.ndarray
    rho_p: np.ndarray
    omega: np.ndarray
    absorption: float
    stored: float


def first_pass(target: TargetParams, write: MagneticPulse, pulse: InputPulse, t, decay: bool = True) -> FirstPass:
    """Exit-face coherences and transmitted field during a pi write pulse.

    rho_S = (C Omega0 / 2 Delta01) e^{-A} (1 - cos phi) e^{-Gamma (t - t0)/2},
    rho_P = i (C Omega0 / 2 Delta01) e^{-A} sin phi e^{-Gamma (t - t0)/2},
    Omega = Omega(0, t) - Omega0 (1 - e^{-A}) sin phi e^{-Gamma (t - t0)/2},
    with A = 2 Gamma xi / Delta01 and phi the accumulated write-pulse phase.
    ``stored`` is the spin coherence left behind, (C Omega0 / Delta01) e^{-A}.
    """
    t = np.asarray(t, dtype=float)
    a = _absorption(target, write)
    params = target.params
    c = coupling_constant(params)
    omega0 = pulse.complex_amplitude
    phase = np.clip(write.envelope.integral(t), 0.0, None)
    if decay:
        damping = np.exp(-0.5 * params.decay_rate * (t - pulse.envelope.center))
    else:
        damping = np.ones_like(t)
    amp = c * omega0 / (2.0 * write.peak) * math.exp(-a)
    rho_s = amp * (1.0 - np.cos(phase)) * damping
    rho_p = 1j * amp * np.sin(phase) * damping
    omega = pulse(t) - omega0 * (1.0 - math.exp(-a)) * np.sin(phase) * damping
    return FirstPass(rho_s, rho_p, omega, a, abs(2.0 * amp))


def first_echo(target: TargetParams, read: MagneticPulse, pulse: InputPulse, decay: bool = True) -> EchoPrediction:
    """First echo, prefactor 2 A e^{-A} with A = 2 Gamma xi / Delta02."""
    a = _absorption(target, read)
    return EchoPrediction(first_echo_prefactor(a), a, pulse.complex_amplitude, read,
                          pulse.envelope.center, target.params.decay_rate, decay)


def first_echo_mismatched(target: TargetParams, write: MagneticPulse, read: MagneticPulse,
                          pulse: InputPulse, decay: bool = True) -> EchoPrediction:
    """First echo when the read pulse peak differs from the write pulse peak."""
    a_w = _absorption(target, write)
    a_r = _absorption(target, read)
    return EchoPrediction(mismatched_prefactor(a_w, a_r), a_r, pulse.complex_amplitude, read,
                          pulse.envelope.center, target.params.decay_rate, decay)


def second_echo(target: TargetParams, read: MagneticPulse, pulse: InputPulse, decay: bool = True) -> EchoPrediction:
    """Second echo (third pi pulse), prefactor 2 (A^2 - A) e^{-A}."""
    a = _absorption(target, read)
    return EchoPrediction(second_echo_prefactor(a), a, pulse.complex_amplitude, read,
                          pulse.envelope.center, target.params.decay_rate, decay)


# =============================================================================
# Echo trains
# =============================================================================

def f_coeff(n: int, j: int) -> int:
    """Nested-sum coefficient F(n, j) of the n-pulse echo series.

    F(n, 1) = 1, F(n, 2) = n - 2, and for j > 2 the (j-2)-fold nested sum
    collapses (hockey-stick identity) to the binomial C(n - 2, j - 1).
    """
    if n < 2 or not 1 <= j <= n - 1:
        raise ValueError(f"need n >= 2 and 1 <= j <= n - 1, got n={n}, j={j}")
    return math.comb(n - 2, j - 1)


@dataclass(frozen=True)
class NthEcho:
    """Echo prefactor at the n-th pulse, in units of Omega0.

    ``raw`` is the general-series value, ``calibrated = calibration * raw``.
    ``flagged`` is set because the series disagrees with the explicit n = 2
    and n = 3 results by the calibration factor.
    """

    n: int
    absorption: float
    raw: float
    calibrated: float
    calibration: float
    flagged: bool


def nth_echo(n: int, xi: float, splitting: float, params: IsotopeParams = FE57,
             calibration: float = NTH_ECHO_CALIBRATION) -> NthEcho:
    """Prefactor of the echo released by the n-th pi pulse (n >= 2)."""
    if n < 2:
        raise ValueError("n must be >= 2")
    a = TargetParams(xi, params=params).absorption(splitting)
    total = sum(2.0**j / math.factorial(j) * (-a) ** j * f_coeff(n, j) for j in range(1, n))
    raw = 2.0 * (-1) ** (n - 1) * math.exp(-a) * total
    return NthEcho(n, a, raw, calibration * raw, calibration, calibration != 1.0)


def nth_echo_prediction(n: int, target: TargetParams, read: MagneticPulse, pulse: InputPulse,
                        decay: bool = True, calibrated: bool = True) -> EchoPrediction:
    res = nth_echo(n, target.resonant_thickness, read.peak, target.params)
    pref = res.calibrated if calibrated else res.raw
    return EchoPrediction(pref, res.absorption, pulse.complex_amplitude, read,
                          pulse.envelope.center, target.params.decay_rate, decay)


# =============================================================================
# Efficiency
# =============================================================================

def echo_efficiency(source, window=None, pulse: InputPulse = None, n_points: int = 4001) -> float:
    """Ratio of echo energy to input energy.

    ``source`` is either a :class:`TimeSeries` (with ``window=(t_begin, t_end)``
    selecting the echo; the whole series when omitted) or an
    :class:`EchoPrediction` together with the stored ``pulse``.
    """
    if isinstance(source, TimeSeries):
        e_in = source.input_energy
        if not e_in > 0:
            raise ValueError("input energy is zero")
        if window is None:
            mask = np.ones(source.times.shape, bool)
        else:
            mask = source.window(*window)
        t = source.times[mask]
        return float(np.trapezoid(source.intensity[mask], t) / e_in)
    if isinstance(source, EchoPrediction):
        if pulse is None or not pulse.energy > 0:
            raise ValueError("input energy is zero")
        env = source.read.envelope
        t = np.linspace(env.start, env.stop, n_points)
        return float(np.trapezoid(np.abs(source.field(t)) ** 2, t) / pulse.energy)
    raise TypeError(f"cannot compute an efficiency from {type(source).__name__}")
