"""Intensity measures on [0,T] x E and the bottom carre du champ.

A driving measure here is dt x nu where nu is a Levy-type mark measure on
E, a subset of R^p, truncated at a cutoff `eps`: atoms with |mark| < eps are
dropped outright (no Gaussian substitute for the small jumps). The omitted
quadratic mass T * Int_{|x|<eps} |x|^2 nu(dx) is exposed so reports can
state the truncation bias instead of hiding it.

The bottom structure is the carre du champ on the mark space,
gamma[f,g](x) = grad f(x)^T xi(x) grad g(x). The Levy preset uses
xi(x) = diag(x_1^2, ..., x_p^2), which for p=1 is the familiar
gamma[f](x) = x^2 f'(x)^2.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import InvalidInput, NumericError, PreconditionError, QuadratureError

QUAD_TOL = 1e-10


def adaptive_quad(fn, a, b):
    """1-d adaptive quadrature at the package tolerance; raises on non-convergence."""
    if a >= b:
        return 0.0
    out = quad(fn, a, b, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200, full_output=1)
    if len(out) > 3:
        raise QuadratureError(f"quadrature on [{a}, {b}] did not converge: {out[3]}")
    return out[0]


def adaptive_quad_complex(fn, a, b):
    re = adaptive_quad(lambda x: fn(x).real, a, b)
    im = adaptive_quad(lambda x: fn(x).imag, a, b)
    return complex(re, im)


# ---------------------------------------------------------------------------
# Bottom carre du champ


@dataclass(frozen=True)
class BottomStructure:
    """Carre du champ on the mark space: gamma[f,g] = grad f^T xi grad g.

    `xi_diag` is set when xi(x) is diagonal with entries xi_diag(x); the
    Levy preset xi = diag(x_k^2) is the only structure the closed-form
    gamma formulas know about, hence the `is_levy` flag.
    """

    name: str
    dim: int
    is_levy: bool = False

    def xi(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            raise PreconditionError(f"mark has shape {x.shape}, expected ({self.dim},)")
        return self._xi_matrix(x)

    def _xi_matrix(self, x):
        raise NotImplementedError


@dataclass(frozen=True)
class LevyStructure(BottomStructure):
    def _xi_matrix(self, x):
        return np.diag(x * x)

    def xi_diag_of(self, marks):
        """Diagonal entries xi_kk for an (m, p) array of marks, shape (m, p)."""
        marks = np.asarray(marks, dtype=float)
        return marks * marks


@dataclass(frozen=True)
class CallableStructure(BottomStructure):
    """General xi given as a callable mark -> (p, p) PSD matrix."""

    xi_fn: object = None

    def _xi_matrix(self, x):
        m = np.asarray(self.xi_fn(x), dtype=float)
        if m.shape != (self.dim, self.dim):
            raise InvalidInput(f"xi returned shape {m.shape}, expected ({self.dim}, {self.dim})")
        return m


def levy_structure(dim=1):
    return LevyStructure(name="levy", dim=dim, is_levy=True)


def gamma_bottom(grad_f, grad_g, structure, x):
    """Bilinear bottom carre du champ gamma[f,g](x) from the two gradients."""
    grad_f = np.atleast_1d(np.asarray(grad_f, dtype=float))
    grad_g = np.atleast_1d(np.asarray(grad_g, dtype=float))
    if grad_f.shape != (structure.dim,) or grad_g.shape != (structure.dim,):
        raise PreconditionError(
            f"gradient shapes {grad_f.shape}, {grad_g.shape} do not match dim {structure.dim}")
    if not (np.all(np.isfinite(grad_f)) and np.all(np.isfinite(grad_g))):
        raise NumericError("non-finite gradient passed to gamma_bottom")
    return float(grad_f @ structure.xi(x) @ grad_g)


# ---------------------------------------------------------------------------
# Mark measures


@dataclass(frozen=True)
class MarkMeasure:
    """Base for 1-d mark measures with hard truncation at `eps`.

    Subclasses define the density on their support and a closed-form
    truncated mass and quantile; `mass_quadrature` recomputes the mass by
    adaptive quadrature as an independent cross-check.
    """

    T: float = 1.0
    eps: float = 0.0

    def __post_init__(self):
        if not self.T > 0.0:
            raise InvalidInput(f"time horizon T must be positive, got {self.T}")
        if self.eps < 0.0:
            raise InvalidInput(f"truncation eps must be nonnegative, got {self.eps}")

    @property
    def mark_dim(self):
        return 1

    def with_eps(self, eps):
        return dataclasses.replace(self, eps=float(eps))

    def support(self):
        """Truncated support as a tuple of disjoint (lo, hi) intervals."""
        raise NotImplementedError

    def density(self, x):
        raise NotImplementedError

    def mass(self):
        """Lambda = T * nu({|x| >= eps}), closed form."""
        raise NotImplementedError

    def mass_quadrature(self):
        total = 0.0
        for lo, hi in self.support():
            total += adaptive_quad(self.density, lo, hi)
        return self.T * total

    def sample_marks(self, n, gen):
        """(n, 1) array of marks drawn by inverse CDF from the truncated law."""
        raise NotImplementedError

    def _sample_atoms(self, gen):
        """Unsorted (times, marks) of one Poisson configuration draw."""
        lam = self.mass()
        n = int(gen.poisson(lam)) if lam > 0 else 0
        times = gen.random(n) * self.T
        marks = self.sample_marks(n, gen)
        return times, marks

    def integrate_mark(self, g):
        """Int g(x) nu(dx) over the truncated support (no time factor)."""
        total = 0.0
        for lo, hi in self.support():
            total += adaptive_quad(lambda x: g(x) * self.density(x), lo, hi)
        return total

    def integrate_mark_complex(self, g):
        total = 0.0j
        for lo, hi in self.support():
            total += adaptive_quad_complex(lambda x: g(x) * self.density(x), lo, hi)
        return total

    def omitted_quadratic_mass(self):
        """T * Int_{|x| < eps} x^2 nu(dx): the bias of dropping small jumps."""
        raise NotImplementedError


@dataclass(frozen=True)
class PowerLawMeasure(MarkMeasure):
    """nu(dx) = x^{-(1+beta)} dx on (lo, c], one-sided, beta in (0, 1).

    Infinite activity at the origin when lo = 0; truncation keeps the mass
    finite: T * (a^-beta - c^-beta) / beta with a = max(lo, eps).
    """

    beta: float = 0.5
    c: float = 1.0
    lo: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        if not 0.0 < self.beta < 1.0:
            raise InvalidInput(f"beta must be in (0, 1), got {self.beta}")
        if self.c <= self.lo:
            raise InvalidInput("need lo < c")
        if max(self.lo, self.eps) <= 0.0:
            raise InvalidInput("power law needs a positive cutoff (eps or lo)")

    @property
    def _a(self):
        return max(self.lo, self.eps)

    def support(self):
        a = self._a
        return ((a, self.c),) if a < self.c else ()

    def density(self, x):
        return x ** (-(1.0 + self.beta))

    def mass(self):
        a = self._a
        if a >= self.c:
            return 0.0
        return self.T * (a**-self.beta - self.c**-self.beta) / self.beta

    def sample_marks(self, n, gen):
        a = self._a
        if a >= self.c:
            return np.empty((0, 1))
        u = gen.random(n)
        lo_pow, hi_pow = a**-self.beta, self.c**-self.beta
        x = (lo_pow - u * (lo_pow - hi_pow)) ** (-1.0 / self.beta)
        return x[:, None]

    def omitted_quadratic_mass(self):
        a, b = self.lo, min(self._a, self.c)
        if b <= a:
            return 0.0
        # Int_a^b x^{1-beta} dx, finite down to a = 0
        e = 2.0 - self.beta
        return self.T * (b**e - a**e) / e


@dataclass(frozen=True)
class SymmetricPowerLawMeasure(MarkMeasure):
    """nu(dx) = |x|^{-(1+beta)} dx on [-c, c] minus (-lo, lo), two-sided."""

    beta: float = 0.5
    c: float = 1.0
    lo: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        if not 0.0 < self.beta < 1.0:
            raise InvalidInput(f"beta must be in (0, 1), got {self.beta}")
        if self.c <= self.lo:
            raise InvalidInput("need lo < c")
        if max(self.lo, self.eps) <= 0.0:
            raise InvalidInput("power law needs a positive cutoff (eps or lo)")

    @property
    def _one_sided(self):
        return PowerLawMeasure(T=self.T, eps=self.eps, beta=self.beta, c=self.c, lo=self.lo)

    def support(self):
        one = self._one_sided.support()
        return tuple((-hi, -lo) for lo, hi in one) + one

    def density(self, x):
        return abs(x) ** (-(1.0 + self.beta))

    def mass(self):
        return 2.0 * self._one_sided.mass()

    def sample_marks(self, n, gen):
        mags = self._one_sided.sample_marks(n, gen)
        signs = np.where(gen.random(n) < 0.5, -1.0, 1.0)
        return mags * signs[:, None]

    def omitted_quadratic_mass(self):
        return 2.0 * self._one_sided.omitted_quadratic_mass()


@dataclass(frozen=True)
class UniformMeasure(MarkMeasure):
    """Finite measure with uniform density on [lo, hi], total mass `total`.

    With two_sided=True the support is mirrored to [-hi, -lo] as well and
    `total` is split evenly between the sides.
    """

    total: float = 1.0
    lo: float = 1.0
    hi: float = 2.0
    two_sided: bool = False

    def __post_init__(self):
        super().__post_init__()
        if not 0.0 < self.lo < self.hi:
            raise InvalidInput("need 0 < lo < hi")
        if self.total < 0:
            raise InvalidInput("mass must be nonnegative")

    @property
    def _a(self):
        return max(self.lo, self.eps)

    def _side_density(self):
        sides = 2.0 if self.two_sided else 1.0
        return self.total / (sides * (self.hi - self.lo))

    def support(self):
        a = self._a
        if a >= self.hi:
            return ()
        one = ((a, self.hi),)
        if self.two_sided:
            return ((-self.hi, -a),) + one
        return one

    def density(self, x):
        return self._side_density()

    def mass(self):
        a = self._a
        if a >= self.hi:
            return 0.0
        sides = 2.0 if self.two_sided else 1.0
        return self.T * sides * self._side_density() * (self.hi - a)

    def sample_marks(self, n, gen):
        a = self._a
        x = a + gen.random(n) * (self.hi - a)
        if self.two_sided:
            signs = np.where(gen.random(n) < 0.5, -1.0, 1.0)
            x = x * signs
        return x[:, None]

    def omitted_quadratic_mass(self):
        a, b = self.lo, min(self._a, self.hi)
        if b <= a:
            return 0.0
        sides = 2.0 if self.two_sided else 1.0
        return self.T * sides * self._side_density() * (b**3 - a**3) / 3.0


@dataclass(frozen=True)
class PairMeasure:
    """Two independent 1-d drivers with marks embedded on the axes of R^2.

    An atom of the first component carries mark (x, 0), one of the second
    (0, y). This is the natural truncation-finite home for systems driven
    by two independent processes; a genuine product of two infinite-activity
    measures would have infinite mass in every Euclidean annulus.
    """

    first: MarkMeasure
    second: MarkMeasure

    def __post_init__(self):
        if self.first.T != self.second.T:
            raise InvalidInput("pair components must share the time horizon")

    @property
    def T(self):
        return self.first.T

    @property
    def eps(self):
        return min(self.first.eps, self.second.eps)

    @property
    def mark_dim(self):
        return 2

    def with_eps(self, eps):
        return PairMeasure(self.first.with_eps(eps), self.second.with_eps(eps))

    def mass(self):
        return self.first.mass() + self.second.mass()

    def mass_quadrature(self):
        return self.first.mass_quadrature() + self.second.mass_quadrature()

    def _sample_atoms(self, gen):
        t1, m1 = self.first._sample_atoms(gen)
        t2, m2 = self.second._sample_atoms(gen)
        n1, n2 = len(t1), len(t2)
        marks = np.zeros((n1 + n2, 2))
        marks[:n1, 0] = m1[:, 0]
        marks[n1:, 1] = m2[:, 0]
        return np.concatenate([t1, t2]), marks

    def integrate_mark(self, g):
        a = self.first.integrate_mark(lambda x: g(np.array([x, 0.0])))
        b = self.second.integrate_mark(lambda y: g(np.array([0.0, y])))
        return a + b

    def integrate_mark_complex(self, g):
        a = self.first.integrate_mark_complex(lambda x: g(np.array([x, 0.0])))
        b = self.second.integrate_mark_complex(lambda y: g(np.array([0.0, y])))
        return a + b

    def omitted_quadratic_mass(self):
        return self.first.omitted_quadratic_mass() + self.second.omitted_quadratic_mass()


# ---------------------------------------------------------------------------
# Module-level operations


def truncated_mass(measure, eps_trunc=None):
    """Lambda = T * nu({|x| >= eps}); monotone nonincreasing in eps."""
    m = measure if eps_trunc is None else measure.with_eps(eps_trunc)
    return m.mass()


def compensator_integral(measure, g):
    """Int_0^T Int g d(dt x nu) = T * Int g dnu for a mark function g.

    g takes a scalar mark for 1-d measures, a length-2 vector for pair
    measures. Evaluated by adaptive quadrature over the truncated support.
    """
    return measure.T * measure.integrate_mark(g)


def compensator_of_field(measure, field):
    """Compensator Int_0^T Int f(t, x) dnu dt of a scalar field.

    Time-independent fields reduce to T * Int f(0, x) dnu; otherwise the
    time integral is done by an outer adaptive quadrature.
    """
    if not field.time_dependent:
        return measure.T * measure.integrate_mark(lambda x: field.at(0.0, x))
    inner = lambda t: measure.integrate_mark(lambda x: field.at(t, x))
    return adaptive_quad(inner, 0.0, measure.T)


PRESETS = {
    "power_law": PowerLawMeasure,
    "symmetric_power_law": SymmetricPowerLawMeasure,
    "uniform": UniformMeasure,
}


def make_measure(preset, **params):
    """Build a measure from a preset name; `pair_*` params build a PairMeasure."""
    if preset == "pair":
        first = params.pop("first")
        second = params.pop("second")
        if params:
            raise InvalidInput(f"unexpected pair parameters {sorted(params)}")
        return PairMeasure(first, second)
    try:
        cls = PRESETS[preset]
    except KeyError:
        raise InvalidInput(
            f"unknown measure preset {preset!r}; known: {sorted(PRESETS) + ['pair']}") from None
    return cls(**params)
