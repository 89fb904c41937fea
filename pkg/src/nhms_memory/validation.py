"""
Oracle suites: closed forms against the reduced solver, and the four-level
model against the reduced one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import analytic
from .experiments import build_scenario, calibrate_nth_echo, run_scenario

__all__ = ["Check", "oracle_checks", "full_vs_reduced", "analytic_vs_numeric"]


@dataclass
class Check:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: measured {self.measured:.4g} (tolerance {self.tolerance:g}) {self.detail}".rstrip()


def _max_rel(a, b) -> float:
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


def full_vs_reduced(name: str, tol: float = 0.01) -> Check:
    reduced = build_scenario(name)
    full = replace(reduced, model="full")
    dev = _max_rel(full.run().omega_x, reduced.run().omega_x)
    return Check(f"full_vs_reduced[{name}]", dev < tol, dev, tol, "max-norm relative deviation of Omega(L,t)")


def analytic_vs_numeric(name: str = "fig2a", tol_peak: float = 0.05, tol_l2: float = 0.10):
    res = run_scenario(build_scenario(name))
    echo = res.echoes[1]
    ts = res.series
    mask = ts.window(echo.t_begin, echo.t_end)
    pred = res.analytic_field[mask]
    num = ts.omega_x[mask]
    l2 = float(np.linalg.norm(num - pred) / np.linalg.norm(pred))
    peak_pred = abs(res.predictions[(0, 1)].peak_amplitude)
    peak_dev = abs(abs(echo.peak) / peak_pred - 1.0)
    return [
        Check(f"first_echo_peak[{name}]", peak_dev < tol_peak, peak_dev, tol_peak,
              "relative deviation of the echo peak from 2 A exp(-A) Omega0 decay"),
        Check(f"first_echo_l2[{name}]", l2 < tol_l2, l2, tol_l2, "relative L2 error over the echo window"),
    ]


def oracle_checks(quick: bool = True) -> list:
    checks = [full_vs_reduced("fig2a")]
    checks += analytic_vs_numeric("fig2a")

    res = run_scenario(build_scenario("fig2a", decay=False))
    a = res.scenario.target.absorption(res.scenario.train[1].peak)
    eta_pred = analytic.first_echo_prefactor(a) ** 2
    d = abs(res.echoes[1].efficiency - eta_pred)
    checks.append(Check("no_decay_efficiency[fig2a]", d < 0.02, d, 0.02,
                        f"eta={res.echoes[1].efficiency:.4f} vs (2A exp(-A))^2={eta_pred:.4f}"))

    cal = calibrate_nth_echo(orders=(2, 3) if quick else (2, 3, 4))
    ok = cal.factor == analytic.NTH_ECHO_CALIBRATION
    checks.append(Check("nth_echo_calibration", ok, cal.factor, 0.0,
                        "ratios " + ", ".join(f"n={n}: {r:.3f}" for n, r in cal.ratios.items())))
    if quick:
        return checks

    checks.append(full_vs_reduced("fig4_xi8"))
    checks.append(full_vs_reduced("fig5_xi8_phase0"))

    res = run_scenario(build_scenario("fig4_xi8"))
    pred = res.predictions[(0, 2)].peak_amplitude.real
    dev = abs(res.echoes[2].peak.real / pred - 1.0)
    checks.append(Check("second_echo_peak[fig4_xi8]", dev < 0.10, dev, 0.10,
                        "relative deviation from 2 (A^2 - A) exp(-A) Omega0 decay"))

    base = build_scenario("fig2a")
    fine = replace(base, grid=replace(base.grid, dt=base.grid.dt / 2, n_z=2 * base.grid.n_z,
                                      dt_out=base.grid.dt_out))
    e0 = [e.energy for e in run_scenario(base).echoes]
    e1 = [e.energy for e in run_scenario(fine).echoes]
    worst = max(abs(b / a_ - 1.0) for a_, b in zip(e0, e1))
    checks.append(Check("convergence[fig2a]", worst < 0.005, worst, 0.005,
                        "largest relative echo-energy change on halving dt and doubling n_z"))
    return checks
