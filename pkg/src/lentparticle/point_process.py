"""Poisson configurations on [0,T] x E and integrals against them.

A configuration is a finite set of (time, mark) atoms drawn from a Poisson
random measure with intensity dt x nu (nu truncated, so the total mass is
finite). Sampling is counter-based: sample index i under seed s always
yields the same configuration, no matter how work is spread over
processes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import InvalidInput, NumericError, PreconditionError
from .intensity import adaptive_quad, compensator_of_field


@dataclass(frozen=True)
class PointConfiguration:
    """Immutable finite configuration: sorted times (m,), marks (m, p)."""

    times: np.ndarray
    marks: np.ndarray
    T: float

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        marks = np.asarray(self.marks, dtype=float)
        if marks.ndim == 1:
            marks = marks[:, None]
        if times.ndim != 1 or marks.ndim != 2 or len(times) != len(marks):
            raise PreconditionError(
                f"times {times.shape} and marks {marks.shape} are inconsistent")
        if len(times) and (times[0] < 0.0 or times[-1] > self.T):
            raise PreconditionError("atom times must lie in [0, T]")
        if np.any(np.diff(times) <= 0.0):
            raise PreconditionError("atom times must be strictly increasing")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(marks))):
            raise PreconditionError("non-finite atom data")
        times = times.copy()
        marks = marks.copy()
        times.flags.writeable = False
        marks.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "marks", marks)

    @classmethod
    def empty(cls, T=1.0, mark_dim=1):
        return cls(np.empty(0), np.empty((0, mark_dim)), T)

    @classmethod
    def from_atoms(cls, atoms, T=1.0):
        """Build from [(t, x), ...] pairs; x scalar or vector."""
        if not atoms:
            return cls.empty(T)
        times = np.array([a[0] for a in atoms], dtype=float)
        marks = np.array([np.atleast_1d(a[1]) for a in atoms], dtype=float)
        order = np.argsort(times)
        return cls(times[order], marks[order], T)

    @property
    def count(self):
        return len(self.times)

    @property
    def mark_dim(self):
        return self.marks.shape[1]

    def with_insertion(self, alpha, x):
        """Add one atom at a fresh time alpha in [0, T]."""
        alpha = float(alpha)
        if not 0.0 <= alpha <= self.T:
            raise PreconditionError(f"insertion time {alpha} outside [0, {self.T}]")
        if np.any(self.times == alpha):
            raise PreconditionError(f"an atom already sits at time {alpha}")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.mark_dim,):
            raise PreconditionError(f"mark shape {x.shape} != ({self.mark_dim},)")
        pos = int(np.searchsorted(self.times, alpha))
        times = np.insert(self.times, pos, alpha)
        marks = np.insert(self.marks, pos, x, axis=0)
        return PointConfiguration(times, marks, self.T)

    def without_atom(self, index):
        index = int(index)
        if not 0 <= index < self.count:
            raise PreconditionError(f"atom index {index} out of range ({self.count} atoms)")
        return PointConfiguration(
            np.delete(self.times, index), np.delete(self.marks, index, axis=0), self.T)

    def insertion_index(self, alpha):
        return int(np.searchsorted(self.times, alpha))


@dataclass(frozen=True)
class MarkedConfiguration:
    """Configuration with one auxiliary uniform r_i in [0,1) per atom."""

    config: PointConfiguration
    r: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        if r.shape != (self.config.count,):
            raise PreconditionError("one auxiliary mark per atom required")
        r = r.copy()
        r.flags.writeable = False
        object.__setattr__(self, "r", r)


def sample_configuration(measure, seed, index=0):
    """Draw configuration `index` of the run keyed by `seed`.

    Atom count is Poisson with the truncated mass, times are uniform on
    [0, T], marks come from the measure's inverse CDF. The draw is a pure
    function of (seed, index).
    """
    gen = rng.stream(seed, rng.CONFIGURATION, index)
    times, marks = measure._sample_atoms(gen)
    order = np.argsort(times, kind="stable")
    times, marks = times[order], marks[order]
    # Exact ties have probability zero but float grids make them possible;
    # redraw the offending times rather than the whole configuration.
    while len(times) > 1 and np.any(np.diff(times) == 0.0):
        dup = np.where(np.diff(times) == 0.0)[0] + 1
        times = times.copy()
        times[dup] = gen.random(len(dup)) * measure.T
        order = np.argsort(times, kind="stable")
        times, marks = times[order], marks[order]
    return PointConfiguration(times, marks, measure.T)


def attach_auxiliary_marks(config, seed, index=0):
    gen = rng.stream(seed, rng.AUX_MARKS, index)
    return MarkedConfiguration(config, gen.random(config.count))


def merge_configurations(a, b):
    """Superpose two configurations on the same horizon (times must not collide)."""
    if a.T != b.T:
        raise PreconditionError("configurations live on different horizons")
    times = np.concatenate([a.times, b.times])
    marks = np.vstack([a.marks, b.marks]) if a.mark_dim == b.mark_dim else None
    if marks is None:
        raise PreconditionError("mark dimensions differ")
    order = np.argsort(times, kind="stable")
    return PointConfiguration(times[order], marks[order], a.T)


def integrate_N(config, field):
    """N(f) = sum of f over atoms; empty sum is 0."""
    if config.count == 0:
        return 0.0
    vals = field.value(config.times, config.marks)
    bad = np.where(~np.isfinite(vals))[0]
    if len(bad):
        i = int(bad[0])
        raise NumericError(
            f"field {field.name!r} not finite at atom {i} "
            f"(t={config.times[i]}, x={config.marks[i]})")
    return float(np.sum(vals))


def integrate_N_compensated(config, field, measure, compensator=None):
    """Ntilde(f) = N(f) - Int f d(dt x nu); pass `compensator` to amortize quadrature."""
    if compensator is None:
        compensator = compensator_of_field(measure, field)
    return integrate_N(config, field) - compensator


@dataclass(frozen=True)
class LaplaceResult:
    estimate: complex
    target: complex
    n_samples: int
    se_real: float
    se_imag: float

    @property
    def abs_diff(self):
        return abs(self.estimate - self.target)

    def within(self, k=3.0):
        d = self.estimate - self.target
        return abs(d.real) <= k * self.se_real and abs(d.imag) <= k * self.se_imag


def laplace_target(measure, field):
    """Closed form E[exp(i Ntilde(f))] = exp(-Int (1 - e^{if} + if) d(dt x nu))."""

    def mark_int(t):
        def integrand(x):
            v = field.at(t, x)
            return 1.0 - np.exp(1j * v) + 1j * v
        return measure.integrate_mark_complex(integrand)

    if not field.time_dependent:
        exponent = measure.T * mark_int(0.0)
    else:
        exponent = complex(
            adaptive_quad(lambda t: mark_int(t).real, 0.0, measure.T),
            adaptive_quad(lambda t: mark_int(t).imag, 0.0, measure.T),
        )
    return complex(np.exp(-exponent))


def laplace_characteristic(measure, field, n_samples, seed):
    """Monte Carlo E[e^{i Ntilde(f)}] against the closed form, with SEs."""
    if n_samples < 2:
        raise InvalidInput("need at least 2 samples")
    comp = compensator_of_field(measure, field)
    vals = np.empty(n_samples, dtype=complex)
    for i in range(n_samples):
        config = sample_configuration(measure, seed, i)
        vals[i] = np.exp(1j * (integrate_N(config, field) - comp))
    est = complex(vals.mean())
    se_r = float(vals.real.std(ddof=1) / np.sqrt(n_samples))
    se_i = float(vals.imag.std(ddof=1) / np.sqrt(n_samples))
    return LaplaceResult(est, laplace_target(measure, field), n_samples, se_r, se_i)
