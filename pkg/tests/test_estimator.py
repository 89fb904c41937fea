import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from nhms_memory.estimator import EchoMemory
from nhms_memory.experiments import build_scenario, run_scenario
from nhms_memory.model import Grid

OMEGA0 = 1e-3 / 141
FAST = dict(n_z=60, dt=0.02, t_end=150.0)


def test_transform_matches_scenario():
    est = EchoMemory(**FAST).fit()
    out = est.transform([[OMEGA0, 15.0, 9.0, 0.0]])
    ref = build_scenario("fig2a", grid=Grid(**FAST)).run()
    assert out.shape == (1, est.times_.size)
    assert np.array_equal(out[0], ref.omega_x)


def test_rows_are_independent_inputs():
    est = EchoMemory(**FAST).fit()
    out = est.transform([[OMEGA0, 15.0, 9.0, 0.0], [0.5 * OMEGA0, 15.0, 9.0, np.pi]])
    assert np.allclose(out[1], -0.5 * out[0], atol=1e-9 * OMEGA0)


def test_fitted_attributes_and_clone():
    est = EchoMemory(resonant_thickness=8.0, n_reads=3, **FAST).fit()
    assert len(est.train_) == 4
    assert list(est.train_.centers) == [15.0, 90.0, 140.0, 190.0]
    assert est.absorption_ == pytest.approx(0.489, abs=1e-3)
    fresh = clone(est)
    assert fresh.get_params() == est.get_params()
    assert not hasattr(fresh, "train_")


def test_score_is_first_echo_efficiency(fig2a):
    est = EchoMemory().fit()
    score = est.score([[OMEGA0, 15.0, 9.0, 0.0]])
    assert score == pytest.approx(fig2a.echoes[1].efficiency, rel=1e-12)
    assert EchoMemory(n_reads=0, **FAST).fit().score([[OMEGA0, 15.0, 9.0, 0.0]]) == 0.0


def test_validation():
    with pytest.raises(NotFittedError):
        EchoMemory().transform([[OMEGA0, 15.0, 9.0, 0.0]])
    with pytest.raises(ValueError):
        EchoMemory(model="vector").fit()
    with pytest.raises(ValueError):
        EchoMemory(n_reads=-1).fit()
    with pytest.raises(ValueError, match="4 columns"):
        EchoMemory(**FAST).fit().transform([[OMEGA0, 15.0, 9.0]])


def test_echo_reports():
    est = EchoMemory(**FAST).fit()
    reports = est.echo_reports([[OMEGA0, 15.0, 9.0, 0.0]])
    assert len(reports) == 1 and len(reports[0]) == 2
    ref = run_scenario(build_scenario("fig2a", grid=Grid(**FAST)))
    assert reports[0][1].energy == pytest.approx(ref.echoes[1].energy, rel=1e-12)
