"""
scikit-learn facade: the memory as a transformer from input pulses to exit fields.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .model import GaussianEnvelope, Grid, InputPulse, MagneticPulse, PulseTrain, TargetParams
from .solver import echo_segments, run_full, run_reduced

__all__ = ["EchoMemory"]

_RUNNERS = {"reduced": run_reduced, "full": run_full}


class EchoMemory(TransformerMixin, BaseEstimator):
    """Write pulse at ``write_center`` and ``n_reads`` pi read pulses.

    The first read comes ``storage_time`` after the write pulse, the others
    every ``spacing`` ns. Rows of ``X`` describe Gaussian input pulses as
    ``(amplitude [rad/ns], center [ns], fwhm [ns], phase [rad])``;
    :meth:`transform` returns the complex exit field sampled on ``times_``.
    """

    def __init__(self, resonant_thickness=16.0, storage_time=75.0, fwhm=9.0, read_fwhm=None, n_reads=1,
                 spacing=50.0, write_center=15.0, model="reduced", decay=True, n_z=200, dt=0.01,
                 t_end=300.0, dt_out=0.1):
        self.resonant_thickness = resonant_thickness
        self.storage_time = storage_time
        self.fwhm = fwhm
        self.read_fwhm = read_fwhm
        self.n_reads = n_reads
        self.spacing = spacing
        self.write_center = write_center
        self.model = model
        self.decay = decay
        self.n_z = n_z
        self.dt = dt
        self.t_end = t_end
        self.dt_out = dt_out

    def fit(self, X=None, y=None):
        if self.model not in _RUNNERS:
            raise ValueError(f"model must be one of {sorted(_RUNNERS)}")
        if int(self.n_reads) != self.n_reads or self.n_reads < 0:
            raise ValueError("n_reads must be a non-negative integer")
        pulses = [MagneticPulse.from_area(math.pi, self.write_center, self.fwhm)]
        for k in range(int(self.n_reads)):
            center = self.write_center + self.storage_time + k * self.spacing
            pulses.append(MagneticPulse.from_area(math.pi, center, self.read_fwhm or self.fwhm))
        self.train_ = PulseTrain(tuple(pulses))
        self.target_ = TargetParams(self.resonant_thickness)
        self.grid_ = Grid(self.n_z, self.dt, self.t_end, self.dt_out)
        self.times_ = self.grid_.sample_times()
        self.absorption_ = self.target_.absorption(self.train_[-1].peak)
        self.n_features_in_ = 4
        return self

    def _inputs(self, X):
        X = check_array(X, ensure_2d=True)
        if X.shape[1] != 4:
            raise ValueError(f"X must have 4 columns (amplitude, center, fwhm, phase), got {X.shape[1]}")
        return [InputPulse(GaussianEnvelope(a, c, w), p) for a, c, w, p in X]

    def _run(self, pulse):
        return _RUNNERS[self.model](self.train_, [pulse], self.target_, self.grid_, decay=self.decay)

    def transform(self, X):
        check_is_fitted(self, "train_")
        return np.array([self._run(p).omega_x for p in self._inputs(X)])

    def echo_reports(self, X) -> list:
        """Per input row, the list of per-window echo reports."""
        check_is_fitted(self, "train_")
        return [echo_segments(self._run(p), self.train_) for p in self._inputs(X)]

    def score(self, X, y=None) -> float:
        """Mean first-echo efficiency over the rows of ``X``."""
        reports = self.echo_reports(X)
        if len(self.train_) < 2:
            return 0.0
        return float(np.mean([r[1].efficiency for r in reports]))
