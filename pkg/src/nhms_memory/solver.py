"""
Direct numerical integration of the x-ray/nuclei equations on a slab grid.

Two models are provided:

* :func:`run_reduced` integrates the weak-field spin/polarization coherence
  system (rho_S, rho_P) driven by the splitting Delta(t),
* :func:`run_full` integrates the two Delta m = 0 transitions with explicit
  populations, which makes it an independent check of the weak-field
  reduction.

Both drop the retardation term of the wave equation; the field at depth z is
the input plus the cumulative trapezoidal integral of the nuclear source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .model import (
    FE57,
    Grid,
    InputPulse,
    IsotopeParams,
    PulseTrain,
    TargetParams,
    check_weak_field,
    clebsch_gordan,
)

__all__ = [
    "SolverInstabilityError",
    "FieldState",
    "TimeSeries",
    "EchoReport",
    "run_reduced",
    "run_full",
    "echo_segments",
    "coupling_constant",
]


class SolverInstabilityError(RuntimeError):
    """Raised when a coherence leaves its analytic bound during integration."""


def coupling_constant(params: IsotopeParams = FE57) -> float:
    """Coefficient C shared by the two Delta m = 0 transitions."""
    return clebsch_gordan(-0.5, -0.5, params)


@dataclass
class FieldState:
    """Slab-resolved state at one instant.

    Reduced runs fill ``rho_s``/``rho_p``; full runs additionally fill
    ``populations`` (columns rho11..rho44) and ``coherences`` (rho32, rho41).
    """

    time: float
    z: np.ndarray
    rho_s: np.ndarray
    rho_p: np.ndarray
    omega: np.ndarray
    populations: Optional[np.ndarray] = None
    coherences: Optional[np.ndarray] = None


@dataclass
class TimeSeries:
    """Sampled output of one run.

    ``omega_x``/``omega_y`` hold the exit field Omega(L, t) in the lab
    polarization basis (pi = x, sigma = y); scalar models leave ``omega_y``
    zero. ``rho_s``/``rho_p`` are the exit-face coherences (scalar models).
    """

    times: np.ndarray
    omega_x: np.ndarray
    input_x: np.ndarray
    omega_y: np.ndarray = None
    input_y: np.ndarray = None
    rho_s: Optional[np.ndarray] = None
    rho_p: Optional[np.ndarray] = None
    trace_deviation: Optional[np.ndarray] = None
    snapshots: list = field(default_factory=list)
    final_state: Optional[FieldState] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.omega_y is None:
            self.omega_y = np.zeros_like(self.omega_x)
        if self.input_y is None:
            self.input_y = np.zeros_like(self.input_x)

    @property
    def omega(self) -> np.ndarray:
        return self.omega_x

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.omega_x) ** 2 + np.abs(self.omega_y) ** 2

    @property
    def input_energy(self) -> float:
        return float(np.trapezoid(np.abs(self.input_x) ** 2 + np.abs(self.input_y) ** 2, self.times))

    def window(self, t_begin: float, t_end: float) -> np.ndarray:
        return (self.times >= t_begin) & (self.times < t_end)


@dataclass
class EchoReport:
    """Summary of the output inside one inter-pulse window."""

    index: int
    t_begin: float
    t_end: float
    peak: complex
    sign: int
    peak_time: float
    centroid: float
    fwhm: float
    energy: float
    energy_x: float
    energy_y: float
    efficiency: float

    def as_dict(self) -> dict:
        out = dict(self.__dict__)
        out["peak"] = [float(self.peak.real), float(self.peak.imag)]
        return out


# =============================================================================
# Drivers
# =============================================================================

def _half_step_times(grid: Grid) -> np.ndarray:
    return np.arange(2 * grid.n_steps + 1) * (0.5 * grid.dt)


def _drive(inputs: Sequence[InputPulse], t: np.ndarray, polarization: str) -> np.ndarray:
    out = np.zeros(t.shape, dtype=complex)
    for p in inputs:
        if p.polarization == polarization:
            out += p(t)
    return out


def _check_scalar(train: PulseTrain, inputs: Sequence[InputPulse]) -> None:
    if train.uses_multiple_axes():
        raise ValueError("pulse axes change between pulses; use polarization.run_vector")
    for k, p in enumerate(inputs):
        if p.polarization != "pi":
            raise ValueError(f"input {k} is {p.polarization}-polarized; scalar models need 'pi' inputs")


def _coherence_bound(inputs, train: PulseTrain, coupling: float) -> float:
    drive_area = sum(abs(p.envelope.area) for p in inputs)
    bound = 0.5 * coupling * drive_area
    if train.min_peak_splitting > 0:
        peak = sum(abs(p.envelope.amplitude) for p in inputs)
        bound = max(bound, coupling * peak / (2.0 * train.min_peak_splitting))
    return max(bound, 1e-300)


def _prepare(train, inputs, target, grid, weak_field_ratio):
    params = target.params
    check_weak_field(inputs, params, weak_field_ratio)
    grid.check_resolution(max(train.peak_splitting, params.decay_rate))
    th = _half_step_times(grid)
    return th, train.splitting(th), _drive(inputs, th, "pi")


def _step_of(t: float, grid: Grid) -> int:
    return int(min(max(round(t / grid.dt), 0), grid.n_steps))


def _raise_unstable(step: int, grid: Grid) -> None:
    raise SolverInstabilityError(
        f"coherence exceeded 10x its analytic bound at t={step * grid.dt:.3f} ns; "
        f"decrease dt (currently {grid.dt} ns)"
    )


def run_reduced(
    train: PulseTrain,
    inputs: Sequence[InputPulse],
    target: TargetParams,
    grid: Grid = Grid(),
    *,
    decay: bool = True,
    snapshot_times: Sequence[float] = (),
    weak_field_ratio: float = 1e-3,
) -> TimeSeries:
    """Integrate the weak-field coherence system through the target.

    ``decay=False`` removes the Gamma/2 damping of both coherences while the
    coupling beta is unchanged. ``snapshot_times`` returns slab-resolved
    :class:`FieldState` objects at (the steps nearest to) those times.
    """
    _check_scalar(train, inputs)
    params = target.params
    th, delta, drive = _prepare(train, inputs, target, grid, weak_field_ratio)
    c = coupling_constant(params)
    z = np.linspace(0.0, target.length, grid.n_z + 1)
    dz = z[1] - z[0]
    beta_c = target.beta / c
    damp = 0.5 * params.decay_rate if decay else 0.0

    S = np.zeros(grid.n_z + 1, dtype=complex)
    P = np.zeros(grid.n_z + 1, dtype=complex)
    n = grid.n_samples
    out_field = np.zeros(n, dtype=complex)
    out_s = np.zeros(n, dtype=complex)
    out_p = np.zeros(n, dtype=complex)
    bound = _coherence_bound(inputs, train, c)

    def state_at(k):
        omega = drive[2 * k] + 1j * beta_c * np.concatenate(([0.0], np.cumsum(0.5 * dz * (P[1:] + P[:-1]))))
        return FieldState(k * grid.dt, z, S.copy(), P.copy(), omega)

    snapshots = []
    k0 = 0
    for k in sorted(_step_of(t, grid) for t in snapshot_times) + [grid.n_steps]:
        status = _kernels.reduced_run(S, P, delta, drive, beta_c, 0.5 * c, damp, dz, grid.dt, k0, k,
                                      grid.stride, out_field, out_s, out_p, bound, 0.5 * params.decay_rate)
        if status >= 0:
            _raise_unstable(status, grid)
        if len(snapshots) < len(snapshot_times):
            snapshots.append(state_at(k))
        k0 = k

    times = grid.sample_times()
    return TimeSeries(
        times=times,
        omega_x=out_field,
        input_x=drive[2 * grid.stride * np.arange(n)],
        rho_s=out_s,
        rho_p=out_p,
        snapshots=snapshots,
        final_state=state_at(grid.n_steps),
        metadata={"model": "reduced", "decay": decay, "xi": target.resonant_thickness},
    )


def run_full(
    train: PulseTrain,
    inputs: Sequence[InputPulse],
    target: TargetParams,
    grid: Grid = Grid(),
    *,
    decay: bool = True,
    weak_field_ratio: float = 1e-3,
) -> TimeSeries:
    """Integrate the four-level populations and both Delta m = 0 coherences.

    Starts from rho11 = rho22 = 1/2 and uses Delta_{4->1} = -Delta_{3->2} =
    Delta(t). ``trace_deviation`` holds the largest |trace - 1| over the slabs
    at every sample.
    """
    _check_scalar(train, inputs)
    params = target.params
    th, delta, drive = _prepare(train, inputs, target, grid, weak_field_ratio)
    cg = np.array([
        clebsch_gordan(-0.5, 0.5, params),
        clebsch_gordan(-0.5, -0.5, params),
        clebsch_gordan(0.5, 0.5, params),
        clebsch_gordan(0.5, -0.5, params),
    ])
    z = np.linspace(0.0, target.length, grid.n_z + 1)
    dz = z[1] - z[0]
    y = np.zeros((grid.n_z + 1, 6), dtype=complex)
    y[:, 0] = y[:, 1] = 0.5
    n = grid.n_samples
    out_field = np.zeros(n, dtype=complex)
    out_s = np.zeros(n, dtype=complex)
    out_p = np.zeros(n, dtype=complex)
    out_trace = np.zeros(n)
    gam = params.decay_rate if decay else 0.0
    # weak-field coherences carry the population difference 1/2
    bound = _coherence_bound(inputs, train, cg[1])
    status = _kernels.full_run(y, delta, drive, target.beta, cg, gam, dz, grid.dt, 0, grid.n_steps,
                               grid.stride, out_field, out_s, out_p, out_trace, bound,
                               0.5 * params.decay_rate)
    if status >= 0:
        _raise_unstable(status, grid)

    rho_s = y[:, 5] - y[:, 4]
    rho_p = y[:, 5] + y[:, 4]
    src = y[:, 5] / cg[1] + y[:, 4] / cg[2]
    omega = drive[-1] + 1j * target.beta * np.concatenate(([0.0], np.cumsum(0.5 * dz * (src[1:] + src[:-1]))))
    final = FieldState(grid.n_steps * grid.dt, z, rho_s, rho_p, omega,
                       populations=y[:, :4].real.copy(), coherences=y[:, 4:].copy())
    return TimeSeries(
        times=grid.sample_times(),
        omega_x=out_field,
        input_x=drive[2 * grid.stride * np.arange(n)],
        rho_s=out_s,
        rho_p=out_p,
        trace_deviation=out_trace,
        final_state=final,
        metadata={"model": "full", "decay": decay, "xi": target.resonant_thickness},
    )


# =============================================================================
# Echo segmentation
# =============================================================================

def _fwhm(t: np.ndarray, y: np.ndarray, k: int) -> float:
    half = 0.5 * y[k]
    i = k
    while i > 0 and y[i - 1] >= half:
        i -= 1
    if i > 0:
        left = t[i - 1] + (half - y[i - 1]) * (t[i] - t[i - 1]) / (y[i] - y[i - 1])
    else:
        left = t[0]
    j = k
    while j < len(y) - 1 and y[j + 1] >= half:
        j += 1
    if j < len(y) - 1:
        right = t[j] + (y[j] - half) * (t[j + 1] - t[j]) / (y[j] - y[j + 1])
    else:
        right = t[-1]
    return float(right - left)


def echo_segments(ts: TimeSeries, train: PulseTrain) -> list:
    """One :class:`EchoReport` per inter-pulse window of ``ts``.

    Window edges are the midpoints between consecutive magnetic-pulse centers;
    the first window starts at the first sample and the last one ends at the
    final sample. Efficiencies are relative to the total input energy.
    """
    if len(ts.times) == 0:
        raise ValueError("empty time series")
    edges = [ts.times[0]] + list(train.boundaries) + [ts.times[-1] + 1e-9]
    e_in = ts.input_energy
    reports = []
    for k in range(len(edges) - 1):
        mask = ts.window(edges[k], edges[k + 1])
        t = ts.times[mask]
        ex = np.abs(ts.omega_x[mask]) ** 2
        ey = np.abs(ts.omega_y[mask]) ** 2
        inten = ex + ey
        energy_x = float(np.trapezoid(ex, t)) if len(t) > 1 else 0.0
        energy_y = float(np.trapezoid(ey, t)) if len(t) > 1 else 0.0
        energy = energy_x + energy_y
        if len(t) == 0 or not inten.max() > 0:
            reports.append(EchoReport(k, float(edges[k]), float(edges[k + 1]), 0j, 0, math.nan,
                                      math.nan, 0.0, 0.0, 0.0, 0.0, 0.0))
            continue
        i = int(np.argmax(inten))
        # the dominant polarization carries the reported complex peak
        comp = ts.omega_x[mask] if ex[i] >= ey[i] else ts.omega_y[mask]
        peak = complex(comp[i])
        reports.append(EchoReport(
            index=k,
            t_begin=float(edges[k]),
            t_end=float(edges[k + 1]),
            peak=peak,
            sign=int(np.sign(peak.real)),
            peak_time=float(t[i]),
            centroid=float(np.trapezoid(t * inten, t) / np.trapezoid(inten, t)),
            fwhm=_fwhm(t, inten, i),
            energy=energy,
            energy_x=energy_x,
            energy_y=energy_y,
            efficiency=energy / e_in if e_in > 0 else 0.0,
        ))
    return reports
