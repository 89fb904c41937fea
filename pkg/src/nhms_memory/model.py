"""
Physical constants, level structure and pulse definitions for the 57Fe target.

Time is measured in ns and every rate or splitting in rad/ns. The magnetic
splitting Delta(t) is the detuning of the |m_g=-1/2> -> |m_e=-1/2> transition;
the |+1/2> -> |+1/2> transition sees -Delta(t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import constants
from scipy.special import ndtr

__all__ = [
    "IsotopeParams",
    "FE57",
    "GaussianEnvelope",
    "MagneticPulse",
    "InputPulse",
    "PulseTrain",
    "TargetParams",
    "Grid",
    "clebsch_gordan",
    "splitting_from_field",
    "field_from_splitting",
    "amplitude_for_area",
    "check_weak_field",
    "GAUSS_AREA_FACTOR",
    "START_SIGMAS",
]

# integral of exp(-2 ln2 (t/tau)^2) dt = tau * GAUSS_AREA_FACTOR
GAUSS_AREA_FACTOR = math.sqrt(math.pi / (2.0 * math.log(2.0)))
# pulse "start" used as the lower limit of phase integrals, in units of sigma
START_SIGMAS = 4.0

_MU_N = constants.physical_constants["nuclear magneton"][0]  # J/T


# =============================================================================
# Isotope
# =============================================================================

@dataclass(frozen=True)
class IsotopeParams:
    """Nuclear constants of a Moessbauer isotope (57Fe by default).

    ``mu_g`` and ``mu_e`` are dimensionless g-factors, i.e. magnetic moment
    divided by (spin * nuclear magneton).
    """

    lifetime: float = 141.0  # ns
    transition_energy: float = 14.413  # keV
    natural_linewidth: float = 4.66  # neV
    ground_spin: float = 0.5
    excited_spin: float = 1.5
    mu_g: float = 0.0904 / 0.5
    mu_e: float = -0.1549 / 1.5

    def __post_init__(self):
        if not self.lifetime > 0:
            raise ValueError("lifetime must be positive")
        for name in ("ground_spin", "excited_spin"):
            spin = getattr(self, name)
            if spin < 0 or (2 * spin) != int(2 * spin):
                raise ValueError(f"{name} must be a non-negative half-integer")

    @property
    def decay_rate(self) -> float:
        """Spontaneous decay rate Gamma in 1/ns."""
        return 1.0 / self.lifetime

    @property
    def nuclear_magneton(self) -> float:
        return _MU_N

    @property
    def hbar(self) -> float:
        return constants.hbar

    @property
    def ground_shift_per_splitting(self) -> float:
        """Ground Zeeman frequency per unit m, in units of Delta."""
        return 2.0 * self.mu_g / (self.mu_g - self.mu_e)

    @property
    def excited_shift_per_splitting(self) -> float:
        """Excited Zeeman frequency per unit m, in units of Delta."""
        return 2.0 * self.mu_e / (self.mu_g - self.mu_e)


FE57 = IsotopeParams()


def splitting_from_field(b_field: float, params: IsotopeParams = FE57) -> float:
    """Splitting Delta in rad/ns produced by a flux density in tesla."""
    m_e4 = m_g1 = -0.5
    moment = (m_e4 * params.mu_e - m_g1 * params.mu_g) * params.nuclear_magneton
    return moment * b_field / params.hbar * 1e-9


def field_from_splitting(delta: float, params: IsotopeParams = FE57) -> float:
    """Inverse of :func:`splitting_from_field`; returns tesla."""
    return delta / splitting_from_field(1.0, params)


# =============================================================================
# Angular momentum coupling
# =============================================================================

def _cg(j1: Fraction, m1: Fraction, j2: Fraction, m2: Fraction, j: Fraction, m: Fraction) -> float:
    # Racah's closed form for <j1 m1; j2 m2 | j m>
    if m1 + m2 != m or not abs(j1 - j2) <= j <= j1 + j2:
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(m) > j:
        return 0.0
    f = math.factorial

    def i(x: Fraction) -> int:
        assert x.denominator == 1
        return int(x)

    pre = (2 * j + 1) * f(i(j + j1 - j2)) * f(i(j - j1 + j2)) * f(i(j1 + j2 - j)) / f(i(j1 + j2 + j + 1))
    pre *= f(i(j + m)) * f(i(j - m)) * f(i(j1 - m1)) * f(i(j1 + m1)) * f(i(j2 - m2)) * f(i(j2 + m2))
    total = 0.0
    for k in range(0, i(j1 + j2 - j) + 1):
        terms = (j1 + j2 - j - k, j1 - m1 - k, j2 + m2 - k, j - j2 + m1 + k, j - j1 - m2 + k)
        if any(t < 0 for t in terms):
            continue
        denom = f(k)
        for t in terms:
            denom *= f(i(t))
        total += (-1) ** k / denom
    return math.sqrt(pre) * total


def clebsch_gordan(m_g: float, m_e: float, params: IsotopeParams = FE57) -> float:
    """Coupling coefficient C(I_g I_e 1; m_g m_e M) with M = m_e - m_g.

    This is <I_g m_g; 1 M | I_e m_e>; sublevels outside the manifold or
    transitions with |M| > 1 raise ``ValueError``.
    """
    jg, je = Fraction(params.ground_spin), Fraction(params.excited_spin)
    mg, me = Fraction(m_g).limit_denominator(4), Fraction(m_e).limit_denominator(4)
    if abs(float(mg) - m_g) > 1e-12 or abs(float(me) - m_e) > 1e-12:
        raise ValueError("sublevels must be half-integers")
    if abs(mg) > jg or (mg - jg).denominator != 1:
        raise ValueError(f"m_g={m_g} is not a sublevel of I_g={params.ground_spin}")
    if abs(me) > je or (me - je).denominator != 1:
        raise ValueError(f"m_e={m_e} is not a sublevel of I_e={params.excited_spin}")
    q = me - mg
    if abs(q) > 1:
        raise ValueError(f"|m_e - m_g| = {abs(float(q))} exceeds 1 for a dipole transition")
    return _cg(jg, mg, Fraction(1), q, je, me)


# =============================================================================
# Pulses
# =============================================================================

def amplitude_for_area(fwhm: float, area: float) -> float:
    """Peak value of a Gaussian of the given FWHM whose integral is ``area``."""
    if not fwhm > 0:
        raise ValueError("fwhm must be positive")
    return area / (fwhm * GAUSS_AREA_FACTOR)


@dataclass(frozen=True)
class GaussianEnvelope:
    """``amplitude * exp(-2 ln2 ((t - center)/fwhm)^2)``.

    ``fwhm`` is the full width at half maximum of the squared envelope.
    """

    amplitude: float
    center: float
    fwhm: float

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ValueError("fwhm must be positive")

    @property
    def sigma(self) -> float:
        return self.fwhm / (2.0 * math.sqrt(math.log(2.0)))

    @property
    def area(self) -> float:
        return self.amplitude * self.fwhm * GAUSS_AREA_FACTOR

    @property
    def start(self) -> float:
        return self.center - START_SIGMAS * self.sigma

    @property
    def stop(self) -> float:
        return self.center + START_SIGMAS * self.sigma

    def __call__(self, t):
        x = (np.asarray(t, dtype=float) - self.center) / self.fwhm
        return self.amplitude * np.exp(-2.0 * math.log(2.0) * x * x)

    def integral(self, t):
        """Integral of the envelope from :attr:`start` to ``t``."""
        x = (np.asarray(t, dtype=float) - self.center) / self.sigma
        return self.area * (ndtr(x) - ndtr(-START_SIGMAS))


@dataclass(frozen=True)
class MagneticPulse:
    """A pulsed splitting Delta(t) along a quantization axis."""

    envelope: GaussianEnvelope
    axis: tuple = (0.0, 1.0, 0.0)

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        if axis.shape != (3,):
            raise ValueError("axis must be a 3-vector")
        norm = np.linalg.norm(axis)
        if not norm > 0:
            raise ValueError("axis must be non-zero")
        object.__setattr__(self, "axis", tuple(float(a) for a in axis / norm))

    @classmethod
    def from_area(cls, area: float, center: float, fwhm: float, axis=(0.0, 1.0, 0.0)) -> "MagneticPulse":
        return cls(GaussianEnvelope(amplitude_for_area(fwhm, area), center, fwhm), axis)

    @property
    def area(self) -> float:
        return self.envelope.area

    @property
    def center(self) -> float:
        return self.envelope.center

    @property
    def peak(self) -> float:
        return self.envelope.amplitude


POLARIZATIONS = ("pi", "sigma")


@dataclass(frozen=True)
class InputPulse:
    """Weak Gaussian x-ray envelope Omega_p(0, t) entering the target.

    ``polarization`` is ``"pi"`` (electric field along x) or ``"sigma"``
    (along y); propagation is along z.
    """

    envelope: GaussianEnvelope
    phase: float = 0.0
    polarization: str = "pi"

    def __post_init__(self):
        if self.polarization not in POLARIZATIONS:
            raise ValueError(f"polarization must be one of {POLARIZATIONS}")

    @property
    def complex_amplitude(self) -> complex:
        return self.envelope.amplitude * complex(math.cos(self.phase), math.sin(self.phase))

    def __call__(self, t):
        return complex(math.cos(self.phase), math.sin(self.phase)) * self.envelope(t)

    @property
    def energy(self) -> float:
        """Exact integral of |Omega|^2 over all time."""
        env = self.envelope
        return env.amplitude**2 * env.fwhm * math.sqrt(math.pi / (4.0 * math.log(2.0)))


def check_weak_field(inputs: Sequence[InputPulse], params: IsotopeParams = FE57, ratio: float = 1e-3) -> None:
    """Raise ``ValueError`` unless every input amplitude is at most ratio * Gamma."""
    limit = ratio * params.decay_rate
    for k, pulse in enumerate(inputs):
        if abs(pulse.envelope.amplitude) > limit * (1 + 1e-12):
            raise ValueError(
                f"input pulse {k} amplitude {pulse.envelope.amplitude:.3e} rad/ns exceeds the "
                f"weak-field bound {limit:.3e} rad/ns ({ratio:g} * Gamma)"
            )


@dataclass(frozen=True)
class PulseTrain:
    """Time-ordered sequence of magnetic pulses."""

    pulses: tuple = ()

    def __post_init__(self):
        pulses = tuple(sorted(self.pulses, key=lambda p: p.center))
        object.__setattr__(self, "pulses", pulses)

    def __len__(self) -> int:
        return len(self.pulses)

    def __iter__(self):
        return iter(self.pulses)

    def __getitem__(self, k):
        return self.pulses[k]

    @property
    def centers(self) -> np.ndarray:
        return np.array([p.center for p in self.pulses])

    @property
    def boundaries(self) -> np.ndarray:
        """Midpoints between consecutive pulse centers."""
        c = self.centers
        return 0.5 * (c[1:] + c[:-1])

    @property
    def peak_splitting(self) -> float:
        return max((abs(p.peak) for p in self.pulses), default=0.0)

    @property
    def min_peak_splitting(self) -> float:
        return min((abs(p.peak) for p in self.pulses), default=0.0)

    def splitting(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for p in self.pulses:
            out = out + p.envelope(t)
        return out

    def epochs(self):
        """Split the train into runs of equal axis: list of (t_begin, axis)."""
        out = []
        for k, p in enumerate(self.pulses):
            if out and np.allclose(out[-1][1], p.axis, atol=1e-12):
                continue
            begin = -math.inf if k == 0 else float(self.boundaries[k - 1])
            out.append((begin, p.axis))
        return out

    def uses_multiple_axes(self) -> bool:
        return len(self.epochs()) > 1


# =============================================================================
# Target and grid
# =============================================================================

@dataclass(frozen=True)
class TargetParams:
    """Nuclear target of resonant thickness ``resonant_thickness`` (xi)."""

    resonant_thickness: float
    length: float = 1.0
    params: IsotopeParams = field(default=FE57, repr=False)

    def __post_init__(self):
        if not self.resonant_thickness >= 0:
            raise ValueError("resonant_thickness must be non-negative")
        if not self.length > 0:
            raise ValueError("length must be positive")

    @property
    def beta(self) -> float:
        return 4.0 * self.params.decay_rate * self.resonant_thickness / self.length

    def absorption(self, splitting: float) -> float:
        """Absorption parameter A = 2 Gamma xi / splitting."""
        if splitting == 0:
            raise ValueError("splitting amplitude must be non-zero")
        return 2.0 * self.params.decay_rate * self.resonant_thickness / splitting


@dataclass(frozen=True)
class Grid:
    """Discretization: ``n_z`` slabs, RK4 step ``dt`` and output spacing ``dt_out`` (ns)."""

    n_z: int = 200
    dt: float = 0.01
    t_end: float = 300.0
    dt_out: float = 0.1

    def __post_init__(self):
        if int(self.n_z) != self.n_z or self.n_z < 2:
            raise ValueError("n_z must be an integer >= 2")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not self.dt_out >= self.dt:
            raise ValueError("dt_out must be >= dt")

    @property
    def stride(self) -> int:
        return max(1, int(round(self.dt_out / self.dt)))

    @property
    def n_samples(self) -> int:
        return int(math.ceil(self.t_end / (self.stride * self.dt) - 1e-9))

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def check_resolution(self, rate: float, limit: float = 0.05) -> None:
        if self.dt * rate > limit:
            raise ValueError(
                f"dt={self.dt} ns does not resolve rate {rate:.4g} rad/ns "
                f"(dt*rate={self.dt * rate:.3g} > {limit}); decrease dt"
            )

    def sample_times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.stride * self.dt
