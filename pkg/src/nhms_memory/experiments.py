"""
Turn-key scenarios: storage and retrieval, efficiency maps, temporal shaping,
beam splitting, two-pulse interference and polarization switching.

All builders place the first input pulse (and the write pulse) at ``t0`` =
15 ns so that the leading 4 sigma of a 9 ns pulse fit on the grid. Storage
times are measured from ``t0``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import analytic
from .model import FE57, GaussianEnvelope, Grid, InputPulse, MagneticPulse, PulseTrain, TargetParams
from .polarization import VECTOR_GRID, run_vector
from .solver import EchoReport, TimeSeries, echo_segments, run_full, run_reduced

__all__ = [
    "Scenario",
    "ScenarioResult",
    "EfficiencyMap",
    "OptimizeResult",
    "SCENARIOS",
    "FIGURES",
    "MODELS",
    "build_scenario",
    "storage_retrieval",
    "beam_splitter",
    "interference",
    "polarization_switch",
    "run_scenario",
    "run_many",
    "analytic_predictions",
    "scenario_storage_retrieval",
    "scenario_efficiency_map",
    "scenario_temporal_shaping",
    "scenario_beam_splitter",
    "scenario_interference",
    "scenario_polarization",
    "optimize_thickness",
    "golden_section",
    "calibrate_nth_echo",
    "Calibration",
    "redistribution_factor",
]

T0 = 15.0
FWHM = 9.0
AMPLITUDE_RATIO = 1e-3
MODELS = ("reduced", "full", "vector")
Y_AXIS = (0.0, 1.0, 0.0)
X_AXIS = (1.0, 0.0, 0.0)


@dataclass(frozen=True)
class Scenario:
    """A fully specified run: target, pulses, inputs, grid and model."""

    name: str
    target: TargetParams
    train: PulseTrain
    inputs: tuple
    grid: Grid
    model: str = "reduced"
    decay: bool = True
    outputs: tuple = ("field", "coherences")

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        object.__setattr__(self, "inputs", tuple(self.inputs))
        t_end = self.grid.t_end
        for k, p in enumerate(self.train):
            if not 0.0 <= p.center <= t_end:
                raise ValueError(f"magnetic pulse {k} centered at {p.center} ns lies outside [0, {t_end}]")
        for k, p in enumerate(self.inputs):
            if not 0.0 <= p.envelope.center <= t_end:
                raise ValueError(f"input pulse {k} centered at {p.envelope.center} ns lies outside [0, {t_end}]")
        if self.model != "vector":
            if self.train.uses_multiple_axes():
                raise ValueError("axis changes between pulses require model='vector'")
            if any(p.polarization != "pi" for p in self.inputs):
                raise ValueError("sigma-polarized inputs require model='vector'")

    def run(self) -> TimeSeries:
        kw = dict(decay=self.decay)
        if self.model == "reduced":
            ts = run_reduced(self.train, self.inputs, self.target, self.grid, **kw)
        elif self.model == "full":
            ts = run_full(self.train, self.inputs, self.target, self.grid, **kw)
        else:
            ts = run_vector(self.train, self.inputs, self.target, self.grid, **kw)
        ts.metadata["scenario"] = self.name
        return ts


@dataclass
class ScenarioResult:
    scenario: Scenario
    series: TimeSeries
    echoes: list
    predictions: dict = field(default_factory=dict)

    @property
    def analytic_field(self) -> np.ndarray:
        out = np.zeros_like(self.series.omega_x)
        for pred in self.predictions.values():
            out = out + pred.field(self.series.times)
        return out

    def echo(self, k: int) -> EchoReport:
        return self.echoes[k]


# =============================================================================
# Builders
# =============================================================================

def _input(amplitude_ratio=AMPLITUDE_RATIO, center=T0, fwhm=FWHM, phase=0.0, polarization="pi"):
    return InputPulse(GaussianEnvelope(amplitude_ratio * FE57.decay_rate, center, fwhm), phase, polarization)


def _grid(grid: Optional[Grid], t_end: float, model: str) -> Grid:
    if grid is not None:
        return grid
    base = VECTOR_GRID if model == "vector" else Grid()
    return replace(base, t_end=t_end)


def storage_retrieval(xi: float = 16.0, storage_time: float = 75.0, fwhm: float = FWHM,
                      read_fwhm: Optional[float] = None, area: float = math.pi, read: bool = True,
                      amplitude_ratio: float = AMPLITUDE_RATIO, t_end: float = 300.0, decay: bool = True,
                      model: str = "reduced", grid: Optional[Grid] = None, name: str = "storage") -> Scenario:
    """Write pulse with the input at t0, read pulse ``storage_time`` later."""
    pulses = [MagneticPulse.from_area(area, T0, fwhm)]
    if read:
        pulses.append(MagneticPulse.from_area(area, T0 + storage_time, read_fwhm or fwhm))
    return Scenario(name, TargetParams(xi), PulseTrain(tuple(pulses)), (_input(amplitude_ratio, fwhm=fwhm),),
                    _grid(grid, t_end, model), model, decay)


def beam_splitter(xi: float = 8.0, n_pulses: int = 4, spacing: float = 50.0, fwhm: float = FWHM,
                  amplitude_ratio: float = AMPLITUDE_RATIO, t_end: float = 500.0, decay: bool = True,
                  model: str = "reduced", grid: Optional[Grid] = None, name: str = "beam_splitter") -> Scenario:
    """Identical pi pulses every ``spacing`` ns; each releases part of the stored photon."""
    pulses = tuple(MagneticPulse.from_area(math.pi, T0 + k * spacing, fwhm) for k in range(n_pulses))
    return Scenario(name, TargetParams(xi), PulseTrain(pulses), (_input(amplitude_ratio, fwhm=fwhm),),
                    _grid(grid, t_end, model), model, decay)


def interference(phase: float = 0.0, xi: float = 8.0, second_ratio: float = 0.5, spacing: float = 50.0,
                 fwhm: float = FWHM, amplitude_ratio: float = AMPLITUDE_RATIO, t_end: float = 500.0,
                 decay: bool = True, model: str = "reduced", grid: Optional[Grid] = None,
                 name: str = "interference") -> Scenario:
    """Three pi pulses; a second input (scaled, phase shifted) arrives with pulse 2.

    The third-window echo superposes the second echo of input 1 and the first
    echo of input 2.
    """
    base = beam_splitter(xi, 3, spacing, fwhm, amplitude_ratio, t_end, decay, model, grid, name)
    second = _input(amplitude_ratio * second_ratio, T0 + spacing, fwhm, phase)
    inputs = base.inputs + ((second,) if second_ratio != 0 else ())
    return replace(base, inputs=inputs)


def polarization_switch(xi: float = 16.0, storage_time: float = 75.0, write_axis=Y_AXIS, read_axis=X_AXIS,
                        fwhm: float = FWHM, amplitude_ratio: float = AMPLITUDE_RATIO, t_end: float = 300.0,
                        decay: bool = True, grid: Optional[Grid] = None, name: str = "polarization") -> Scenario:
    """Write along ``write_axis``, read along ``read_axis`` with a pi-polarized input."""
    pulses = (MagneticPulse.from_area(math.pi, T0, fwhm, write_axis),
              MagneticPulse.from_area(math.pi, T0 + storage_time, fwhm, read_axis))
    return Scenario(name, TargetParams(xi), PulseTrain(pulses), (_input(amplitude_ratio, fwhm=fwhm),),
                    _grid(grid, t_end, "vector"), "vector", decay)


# name -> (builder, keyword arguments, description)
SCENARIOS = {
    "fig2a": (storage_retrieval, {}, "storage for 75 ns and retrieval, xi = 16"),
    "fig3_compress": (storage_retrieval, {"read_fwhm": 4.5}, "read pulse of 4.5 ns compresses the echo"),
    "fig3_stretch": (storage_retrieval, {"read_fwhm": 18.0}, "read pulse of 18 ns stretches the echo"),
    "fig4_xi8": (beam_splitter, {"xi": 8.0}, "four pi pulses, A = 0.5"),
    "fig4_xi16": (beam_splitter, {"xi": 16.0}, "four pi pulses, A ~ 1 (second echo vanishes)"),
    "fig4_xi24": (beam_splitter, {"xi": 24.0}, "four pi pulses, A ~ 1.45"),
    "fig5_xi8_phase0": (interference, {"xi": 8.0, "phase": 0.0}, "interference, A = 0.5, in phase"),
    "fig5_xi8_phasepi": (interference, {"xi": 8.0, "phase": math.pi}, "interference, A = 0.5, pi shifted"),
    "fig5_xi24_phase0": (interference, {"xi": 24.0, "phase": 0.0}, "interference, A ~ 1.45, in phase"),
    "fig5_xi24_phasepi": (interference, {"xi": 24.0, "phase": math.pi}, "interference, A ~ 1.45, pi shifted"),
    "fig6": (polarization_switch, {}, "write along y, read along x: sigma-polarized echo"),
}

# figure -> scenarios it is made of; fig2b is the efficiency map
FIGURES = {
    "fig2a": ("fig2a",),
    "fig2b": (),
    "fig3": ("fig3_compress", "fig3_stretch"),
    "fig4": ("fig4_xi8", "fig4_xi16", "fig4_xi24"),
    "fig5": ("fig5_xi8_phase0", "fig5_xi8_phasepi", "fig5_xi24_phase0", "fig5_xi24_phasepi"),
    "fig6": ("fig6",),
}


def build_scenario(name: str, **overrides) -> Scenario:
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    builder, kw, _ = SCENARIOS[name]
    return builder(**{**kw, **overrides, "name": name})


# =============================================================================
# Running
# =============================================================================

def _write_index(train: PulseTrain, pulse: InputPulse) -> Optional[int]:
    d = np.abs(train.centers - pulse.envelope.center)
    k = int(np.argmin(d))
    return k if d[k] < pulse.envelope.fwhm else None


def analytic_predictions(scenario: Scenario, calibrated: bool = True) -> dict:
    """Closed-form echoes keyed by (input index, pulse index).

    Input i written by pulse w is released by every later pulse k as the
    (k - w + 1)-th pulse echo: explicit first/second echo formulas for
    n = 2, 3 and the calibrated n-pulse series beyond.
    """
    out = {}
    target = scenario.target
    for i, pulse in enumerate(scenario.inputs):
        w = _write_index(scenario.train, pulse)
        if w is None:
            continue
        for k in range(w + 1, len(scenario.train)):
            n = k - w + 1
            read = scenario.train[k]
            if n == 2:
                pred = analytic.first_echo(target, read, pulse, scenario.decay)
            elif n == 3:
                pred = analytic.second_echo(target, read, pulse, scenario.decay)
            else:
                pred = analytic.nth_echo_prediction(n, target, read, pulse, scenario.decay, calibrated)
            out[(i, k)] = pred
    return out


def run_scenario(scenario: Scenario) -> ScenarioResult:
    ts = scenario.run()
    preds = analytic_predictions(scenario) if scenario.model != "vector" else {}
    return ScenarioResult(scenario, ts, echo_segments(ts, scenario.train), preds)


def run_many(scenarios: Sequence[Scenario], workers: int = 1) -> list:
    """Run independent scenarios, optionally in worker processes; order is preserved."""
    if workers <= 1 or len(scenarios) <= 1:
        return [run_scenario(s) for s in scenarios]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_scenario, scenarios))


# =============================================================================
# Figure scenarios
# =============================================================================

def scenario_storage_retrieval(**kw) -> ScenarioResult:
    return run_scenario(build_scenario("fig2a", **kw))


@dataclass
class EfficiencyMap:
    """First-echo efficiency eta[i, j] at xi[i] and storage time storage_times[j]."""

    xi: np.ndarray
    storage_times: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=float)
        self.storage_times = np.asarray(self.storage_times, dtype=float)
        self.eta = np.asarray(self.eta, dtype=float)
        if self.eta.shape != (self.xi.size, self.storage_times.size):
            raise ValueError("eta shape does not match the axes")
        if np.any(self.eta < 0) or np.any(self.eta > 1):
            raise ValueError("efficiencies must lie in [0, 1]")

    def argmax_xi(self, j: int = 0) -> float:
        return float(self.xi[int(np.argmax(self.eta[:, j]))])


def _first_echo_efficiency(result: ScenarioResult) -> float:
    return result.echoes[1].efficiency


def scenario_efficiency_map(xi_values: Sequence[float] = tuple(range(0, 42, 4)),
                            storage_times: Sequence[float] = (25.0, 50.0, 75.0, 100.0, 125.0, 150.0),
                            decay: bool = True, grid: Optional[Grid] = None, workers: int = 1,
                            tail: float = 40.0) -> EfficiencyMap:
    """First-echo efficiency over thickness and storage time.

    Each run stops ``tail`` ns after the read pulse center.
    """
    runs = []
    for xi in xi_values:
        for t in storage_times:
            t_end = T0 + t + tail
            g = replace(grid, t_end=t_end) if grid is not None else None
            runs.append(storage_retrieval(xi, t, t_end=t_end, decay=decay, grid=g, name="fig2b"))
    results = run_many(runs, workers)
    eta = np.array([_first_echo_efficiency(r) for r in results]).reshape(len(xi_values), len(storage_times))
    return EfficiencyMap(np.array(xi_values, float), np.array(storage_times, float), eta)


def scenario_temporal_shaping(**kw) -> tuple:
    return run_scenario(build_scenario("fig3_compress", **kw)), run_scenario(build_scenario("fig3_stretch", **kw))


def scenario_beam_splitter(xi: float = 8.0, **kw) -> ScenarioResult:
    return run_scenario(beam_splitter(xi, **{"name": f"beam_splitter_xi{xi:g}", **kw}))


def scenario_interference(phase_shift: float = 0.0, xi: float = 8.0, **kw) -> ScenarioResult:
    return run_scenario(interference(phase_shift, xi, **{"name": f"interference_xi{xi:g}", **kw}))


def scenario_polarization(**kw) -> ScenarioResult:
    return run_scenario(build_scenario("fig6", **kw))


def redistribution_factor(old_axis, new_axis) -> float:
    """Fraction of the stored echo energy that survives an axis change.

    The stored coherence is a rank-2, q = 0 tensor along the old axis; only
    its q = 0 part along the new axis is read out, with amplitude
    P2(cos theta).
    """
    a = np.asarray(old_axis, float) / np.linalg.norm(old_axis)
    b = np.asarray(new_axis, float) / np.linalg.norm(new_axis)
    c = float(np.dot(a, b))
    return (1.5 * c * c - 0.5) ** 2


# =============================================================================
# Optimization
# =============================================================================

@dataclass
class OptimizeResult:
    xi: float
    eta: float
    evaluations: int
    history: list


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float = 0.1):
    """Maximize a unimodal ``f`` on [lo, hi]; returns (x, f(x), evaluations, history)."""
    if not lo <= hi:
        raise ValueError(f"bounds do not bracket an interval: [{lo}, {hi}]")
    history = []

    def ev(x):
        y = f(x)
        history.append((x, y))
        return y

    if hi - lo <= tol:
        x = 0.5 * (lo + hi)
        return x, ev(x), len(history), history
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = ev(c), ev(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = ev(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = ev(d)
    x, y = (c, fc) if fc >= fd else (d, fd)
    return x, y, len(history), history


def optimize_thickness(bounds=(4.0, 40.0), tol: float = 0.1, storage_time: float = 75.0, decay: bool = False,
                       objective: Optional[Callable[[float], float]] = None, grid: Optional[Grid] = None,
                       tail: float = 40.0) -> OptimizeResult:
    """Golden-section search for the thickness maximizing first-echo efficiency.

    The default objective runs :func:`run_reduced` for the storage/retrieval
    scenario; ``decay=False`` gives the immediate-read limit.
    """
    lo, hi = map(float, bounds)
    if not (0.0 <= lo <= hi <= 100.0):
        raise ValueError(f"bounds must satisfy 0 <= lo <= hi <= 100, got {bounds}")
    if objective is None:
        t_end = T0 + storage_time + tail

        def objective(xi):
            g = replace(grid, t_end=t_end) if grid is not None else None
            s = storage_retrieval(xi, storage_time, t_end=t_end, decay=decay, grid=g)
            return _first_echo_efficiency(run_scenario(s))

    x, y, n, hist = golden_section(objective, lo, hi, tol)
    return OptimizeResult(x, y, n, hist)


@dataclass
class Calibration:
    """Simulated-to-raw echo ratios per pulse count and the selected factor."""

    ratios: dict
    factor: float
    candidates: tuple


def calibrate_nth_echo(orders: Sequence[int] = (2, 3, 4), xi: float = 8.0, candidates=(1.0, 0.5),
                       grid: Optional[Grid] = None) -> Calibration:
    """Fix the normalization of the raw n-pulse echo series against :func:`run_reduced`.

    For every n in ``orders`` the n-th pulse echo of an n-pulse train (decay
    off) is divided by the raw series. The candidate closest to all ratios in
    log distance is selected; the spread of the ratios shows how far the
    closed form drifts from the simulation as n grows.
    """
    ratios = {}
    for n in orders:
        s = beam_splitter(xi, n, decay=False, grid=grid, t_end=T0 + 50.0 * (n - 1) + 40.0)
        res = run_scenario(s)
        raw = analytic.nth_echo_prediction(n, s.target, s.train[n - 1], s.inputs[0], decay=False,
                                           calibrated=False)
        ratios[n] = float(res.echoes[n - 1].peak.real / raw.peak_amplitude.real)
    cost = [sum(abs(math.log(r / c)) for r in ratios.values()) for c in candidates]
    return Calibration(ratios, candidates[int(np.argmin(cost))], tuple(candidates))
