"""
Polarization-resolved propagation with magnetic pulses along changing axes.

Propagation is along z and every magnetic axis u lies in the x-y plane. Each
epoch of equal axis is integrated in the basis quantized along u, with the
frame e1 = z x u, e2 = z, e3 = u. The x-ray magnetic vector b = z x e (e the
electric polarization) drives Delta m = 0 through b.u and Delta m = +-1
through b.e1. Between epochs the sublevel density matrix is re-expressed in
the new basis by an exact spin rotation.

Level order: ground m = +I_g ... -I_g, then excited m = +I_e ... -I_e.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import block_diag, expm
from scipy.spatial.transform import Rotation

from . import _kernels
from .model import FE57, Grid, InputPulse, IsotopeParams, PulseTrain, TargetParams, check_weak_field, clebsch_gordan
from .solver import SolverInstabilityError, TimeSeries, _coherence_bound, _half_step_times

__all__ = [
    "SublevelState",
    "spin_matrices",
    "level_spin_matrices",
    "quantization_frame",
    "rotation_operator",
    "rotate_quantization_axis",
    "initial_state",
    "run_vector",
    "VECTOR_GRID",
    "max_transition_shift",
]

VECTOR_GRID = Grid(n_z=100, dt=0.02)

_Z = np.array([0.0, 0.0, 1.0])


def spin_matrices(j: float):
    """(Jx, Jy, Jz) for spin j in the basis m = j, j-1, ..., -j."""
    m = np.arange(j, -j - 1, -1)
    jp = np.diag(np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1)), 1).astype(complex)
    jm = jp.conj().T
    return 0.5 * (jp + jm), -0.5j * (jp - jm), np.diag(m).astype(complex)


def _levels(params: IsotopeParams):
    mg = np.arange(params.ground_spin, -params.ground_spin - 1, -1)
    me = np.arange(params.excited_spin, -params.excited_spin - 1, -1)
    return mg, me


def level_spin_matrices(params: IsotopeParams = FE57):
    """Block-diagonal (ground + excited) angular momentum components."""
    g = spin_matrices(params.ground_spin)
    e = spin_matrices(params.excited_spin)
    return tuple(block_diag(a, b) for a, b in zip(g, e))


def _unit_axis(axis) -> np.ndarray:
    u = np.asarray(axis, dtype=float)
    if u.shape != (3,):
        raise ValueError("axis must be a 3-vector")
    norm = np.linalg.norm(u)
    if not norm > 0:
        raise ValueError("axis must be non-zero")
    u = u / norm
    if abs(u[2]) > 1e-12:
        raise ValueError("axes with a component along the propagation direction z are not supported")
    return u


def quantization_frame(axis) -> np.ndarray:
    """Columns (e1, e2, e3) = (z x u, z, u) for an axis u in the x-y plane."""
    u = _unit_axis(axis)
    return np.column_stack([np.cross(_Z, u), _Z, u])


def rotation_operator(old_axis, new_axis, params: IsotopeParams = FE57) -> np.ndarray:
    """Unitary D with |m>_new = D |m>_old, written in the old basis."""
    f_old = quantization_frame(old_axis)
    f_new = quantization_frame(new_axis)
    rotvec = Rotation.from_matrix(f_old.T @ f_new).as_rotvec()
    jx, jy, jz = level_spin_matrices(params)
    return expm(-1j * (rotvec[0] * jx + rotvec[1] * jy + rotvec[2] * jz))


@dataclass
class SublevelState:
    """Slab-resolved sublevel density matrices quantized along ``axis``.

    ``rho`` has shape (n_slabs, n_levels, n_levels). ``omega_x``/``omega_y``
    optionally carry the lab-frame field at the slab boundaries.
    """

    rho: np.ndarray
    axis: tuple
    omega_x: Optional[np.ndarray] = None
    omega_y: Optional[np.ndarray] = None
    params: IsotopeParams = FE57

    def trace_deviation(self) -> float:
        tr = np.trace(self.rho, axis1=1, axis2=2)
        return float(np.max(np.abs(tr - 1.0)))

    def hermiticity_deviation(self) -> float:
        return float(np.max(np.abs(self.rho - np.conj(np.swapaxes(self.rho, 1, 2)))))

    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.rho + np.conj(np.swapaxes(self.rho, 1, 2)))
        return float(np.min(np.linalg.eigvalsh(herm)))


def initial_state(n_slabs: int, axis=(0.0, 1.0, 0.0), params: IsotopeParams = FE57) -> SublevelState:
    """Unpolarized ground state in every slab."""
    mg, me = _levels(params)
    nl = len(mg) + len(me)
    rho = np.zeros((n_slabs, nl, nl), dtype=complex)
    for k in range(len(mg)):
        rho[:, k, k] = 1.0 / len(mg)
    return SublevelState(rho, tuple(_unit_axis(axis)), params=params)


def rotate_quantization_axis(state: SublevelState, new_axis) -> SublevelState:
    """Re-express ``state`` in the basis quantized along ``new_axis``."""
    new = _unit_axis(new_axis)
    d = rotation_operator(state.axis, new, state.params)
    rho = np.einsum("ab,sbc,cd->sad", d.conj().T, state.rho, d)
    return SublevelState(rho, tuple(new), state.omega_x, state.omega_y, state.params)


def _transitions(params: IsotopeParams):
    mg, me = _levels(params)
    ng = len(mg)
    tg, te, tq, tc = [], [], [], []
    for a, m_g in enumerate(mg):
        for b, m_e in enumerate(me):
            q = m_e - m_g
            if abs(q) <= 1:
                tg.append(a)
                te.append(ng + b)
                tq.append(int(round(q)) % 3)  # 0, +1 -> 1, -1 -> 2
                tc.append(clebsch_gordan(m_g, m_e, params))
    return (np.array(tg, np.int64), np.array(te, np.int64), np.array(tq, np.int64), np.array(tc))


def max_transition_shift(params: IsotopeParams = FE57) -> float:
    """Largest transition detuning of the manifold in units of Delta."""
    mg, me = _levels(params)
    return max(abs(params.excited_shift_per_splitting * b - params.ground_shift_per_splitting * a)
               for a in mg for b in me if abs(b - a) <= 1)


def _lab_magnetic(inputs: Sequence[InputPulse], t: np.ndarray) -> np.ndarray:
    """Lab magnetic vector (b_x, b_y) of the summed inputs, shape (2, len(t))."""
    b = np.zeros((2, t.size), dtype=complex)
    for p in inputs:
        if p.polarization == "pi":
            b[1] += p(t)  # e = x -> b = y
        else:
            b[0] -= p(t)  # e = y -> b = -x
    return b


def run_vector(
    train: PulseTrain,
    inputs: Sequence[InputPulse],
    target: TargetParams,
    grid: Grid = VECTOR_GRID,
    *,
    decay: bool = True,
    weak_field_ratio: float = 1e-3,
) -> TimeSeries:
    """Propagate both transverse polarizations through the sublevel manifold.

    The axis switches at the midpoint between the centers of the last pulse
    of one epoch and the first pulse of the next. The returned series holds
    ``omega_x``/``omega_y`` in the lab basis; ``final_state`` is the
    :class:`SublevelState` at ``t_end`` and ``metadata['axes']`` the epoch list.
    """
    params = target.params
    check_weak_field(inputs, params, weak_field_ratio)
    if len(train) == 0:
        raise ValueError("run_vector needs at least one magnetic pulse to define the axis")
    epochs = train.epochs()
    for _, axis in epochs:
        _unit_axis(axis)
    mg, me = _levels(params)
    shift = np.concatenate([params.ground_shift_per_splitting * mg, params.excited_shift_per_splitting * me])
    excited = np.concatenate([np.zeros(len(mg)), np.ones(len(me))])
    tg, te, tq, tc = _transitions(params)
    grid.check_resolution(max(train.peak_splitting * max_transition_shift(params), params.decay_rate))

    th = _half_step_times(grid)
    delta = train.splitting(th)
    b_lab = _lab_magnetic(inputs, th)
    c0 = clebsch_gordan(-0.5, -0.5, params)
    beta_p = target.beta / c0**2
    gam = params.decay_rate if decay else 0.0
    dz = target.length / grid.n_z
    state = initial_state(grid.n_z + 1, epochs[0][1], params)
    rho = state.rho

    n = grid.n_samples
    out_par = np.zeros(n, dtype=complex)
    out_perp = np.zeros(n, dtype=complex)
    out_trace = np.zeros(n)
    omega_x = np.zeros(n, dtype=complex)
    omega_y = np.zeros(n, dtype=complex)
    bound = _coherence_bound(inputs, train, 1.0)
    sample_k = grid.stride * np.arange(n)

    starts = [0] + [int(min(max(round(t / grid.dt), 0), grid.n_steps)) for t, _ in epochs[1:]]
    stops = starts[1:] + [grid.n_steps]
    for e, ((_, axis), k0, k1) in enumerate(zip(epochs, starts, stops)):
        if e > 0:
            state = rotate_quantization_axis(SublevelState(rho, state.axis, params=params), axis)
            rho = np.ascontiguousarray(state.rho)
        f = quantization_frame(axis)
        d_par = f[0, 2] * b_lab[0] + f[1, 2] * b_lab[1]
        d_perp = f[0, 0] * b_lab[0] + f[1, 0] * b_lab[1]
        status = _kernels.vector_run(rho, delta, d_par, d_perp, shift, excited, tg, te, tq, tc, beta_p, gam,
                                     dz, grid.dt, k0, k1, grid.stride, out_par, out_perp, out_trace, bound,
                                     0.5 * params.decay_rate)
        if status >= 0:
            raise SolverInstabilityError(
                f"coherence exceeded 10x its analytic bound at t={status * grid.dt:.3f} ns; "
                f"decrease dt (currently {grid.dt} ns)"
            )
        last = e == len(epochs) - 1
        sel = (sample_k >= k0) & ((sample_k <= k1) if last else (sample_k < k1))
        b = out_par[sel][None, :] * f[:2, 2, None] + out_perp[sel][None, :] * f[:2, 0, None]
        omega_x[sel] = b[1]
        omega_y[sel] = -b[0]

    state = SublevelState(rho, state.axis, params=params)
    idx = 2 * sample_k
    return TimeSeries(
        times=grid.sample_times(),
        omega_x=omega_x,
        input_x=b_lab[1, idx],
        omega_y=omega_y,
        input_y=-b_lab[0, idx],
        trace_deviation=out_trace,
        final_state=state,
        metadata={"model": "vector", "decay": decay, "xi": target.resonant_thickness,
                  "axes": [list(a) for _, a in epochs]},
    )
