"""The lent particle computation.

Gamma[F] is assembled atom by atom: lend the configuration a particle at
(alpha, x) (epsilon_plus), differentiate in the mark through the bottom
structure, take the particle back (epsilon_minus), and integrate against
the configuration itself. Adding a particle at an existing atom is the
identity, so the per-atom term is computed by removing the atom and
re-inserting it with a variable mark; the term is J xi(x) J^T with J the
insertion Jacobian at the atom's own (time, mark).

The sharp operator uses the same insertion Jacobians: F-sharp is
sum_i x_i J_i eps_i over independent Rademacher signs eps_i, and averaging
(F-sharp)^2 over the signs recovers Gamma[F] exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NumericError, PreconditionError
from .intensity import PairMeasure

DEFAULT_FD_STEP = 1e-5
PSD_FLOOR_SCALE = 1e-10
_SHRINK_TRIES = 4


def epsilon_plus(config, alpha, x):
    """Add one particle at a fresh time; at an existing atom it is the identity."""
    if config.count and np.any(config.times == alpha):
        return config
    return config.with_insertion(alpha, x)


def epsilon_minus(config, index):
    """Remove the atom at `index`."""
    return config.without_atom(index)


def _coordinate_supports(measure, mark_dim):
    if measure is None:
        return [None] * mark_dim
    if isinstance(measure, PairMeasure):
        return [measure.first.support(), measure.second.support()]
    return [measure.support()]


def _containing_interval(intervals, v):
    if intervals is None:
        return None
    for lo, hi in intervals:
        if lo <= v <= hi:
            return (lo, hi)
    return None


def _fd_jacobian(F, config, alpha, x, fd_step, measure):
    """Central differences of x -> F(config + atom), support-aware steps.

    The step in coordinate k starts at fd_step * max(|x_k|, 1) and shrinks
    by 10 up to 4 times if it would leave the truncated support interval
    the coordinate sits in; coordinates outside the support (padding zeros
    of axis-embedded marks) are unconstrained.
    """
    d, p = F.output_dim, F.mark_dim
    supports = _coordinate_supports(measure, p)
    jac = np.empty((d, p))
    for k in range(p):
        eta = fd_step * max(abs(x[k]), 1.0)
        interval = _containing_interval(supports[k], x[k])
        if interval is not None:
            lo, hi = interval
            tries = 0
            while (x[k] - eta < lo or x[k] + eta > hi) and tries < _SHRINK_TRIES:
                eta /= 10.0
                tries += 1
            if x[k] - eta < lo or x[k] + eta > hi:
                raise NumericError(
                    f"finite-difference step at coordinate {k} exits the support "
                    f"[{lo}, {hi}] around x={x[k]} after {_SHRINK_TRIES} shrinks")
        xp = x.copy()
        xm = x.copy()
        xp[k] += eta
        xm[k] -= eta
        fp = F.evaluate_with_insertion(config, alpha, xp)
        fm = F.evaluate_with_insertion(config, alpha, xm)
        jac[:, k] = (fp - fm) / (2.0 * eta)
    if not np.all(np.isfinite(jac)):
        raise NumericError("non-finite finite-difference Jacobian")
    return jac


def insertion_jacobian(F, config, alpha, x, mode="auto", fd_step=DEFAULT_FD_STEP,
                       measure=None):
    """(d, p) Jacobian of the mark of a particle lent at (alpha, x)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (F.mark_dim,):
        raise PreconditionError(f"mark shape {x.shape} != ({F.mark_dim},)")
    if mode not in ("auto", "analytic", "fd"):
        raise InvalidInput(f"mode {mode!r} not one of auto, analytic, fd")
    if mode in ("auto", "analytic"):
        jac = F.mark_jacobian(config, alpha, x)
        if jac is not None:
            jac = np.asarray(jac, dtype=float)
            if jac.shape != (F.output_dim, F.mark_dim):
                raise NumericError(
                    f"mark_jacobian returned shape {jac.shape}, "
                    f"expected ({F.output_dim}, {F.mark_dim})")
            return jac
        if mode == "analytic":
            raise InvalidInput(
                f"{type(F).__name__} has no analytic mark Jacobian")
    return _fd_jacobian(F, config, alpha, x, fd_step, measure)


def gamma_of_added_particle(F, config, alpha, x, structure, mode="auto",
                            fd_step=DEFAULT_FD_STEP, measure=None):
    """gamma[epsilon_plus F](alpha, x) = J xi(x) J^T, PSD by construction."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    jac = insertion_jacobian(F, config, alpha, x, mode, fd_step, measure)
    g = jac @ structure.xi(x) @ jac.T
    return 0.5 * (g + g.T)


@dataclass(frozen=True)
class GammaSample:
    """One carre du champ matrix with its per-atom decomposition.

    `matrix` is the PSD projection of the raw sum; `min_eigenvalue` is the
    smallest eigenvalue before projection and `clamped` records whether any
    negative (noise-level) eigenvalue was zeroed.
    """

    matrix: np.ndarray
    atom_terms: np.ndarray
    min_eigenvalue: float
    clamped: bool
    jacobian_mode: str

    @property
    def value(self):
        if self.matrix.shape != (1, 1):
            raise InvalidInput("scalar value only defined for 1x1 matrices")
        return float(self.matrix[0, 0])


def _kahan_add(total, comp, term):
    y = term - comp
    t = total + y
    comp = (t - total) - y
    return t, comp


def carre_du_champ(F, config, structure, mode="auto", fd_step=DEFAULT_FD_STEP,
                   measure=None):
    """Gamma[F] = sum over atoms of the lent-particle term at that atom.

    Per-atom terms are accumulated with compensated summation so the result
    is insensitive to atom order at the ulp level. The sum of PSD terms is
    projected back to exact PSD; an eigenvalue below -1e-10 * trace would
    mean a genuinely broken term and raises instead.
    """
    if structure.dim != F.mark_dim:
        raise PreconditionError(
            f"structure dim {structure.dim} != functional mark dim {F.mark_dim}")
    d = F.output_dim
    m = config.count
    terms = np.zeros((m, d, d))
    total = np.zeros((d, d))
    comp = np.zeros((d, d))
    used_mode = mode
    if mode == "auto":
        used_mode = "analytic" if F.has_analytic_jacobian else "fd"
    for i in range(m):
        reduced = config.without_atom(i)
        term = gamma_of_added_particle(
            F, reduced, config.times[i], config.marks[i], structure,
            used_mode, fd_step, measure)
        terms[i] = term
        total, comp = _kahan_add(total, comp, term)
    total = 0.5 * (total + total.T)
    if m == 0:
        return GammaSample(total, terms, 0.0, False, used_mode)
    eigvals, eigvecs = np.linalg.eigh(total)
    min_eig = float(eigvals[0])
    floor = PSD_FLOOR_SCALE * abs(float(np.trace(total)))
    if min_eig < -floor:
        raise NumericError(
            f"carre du champ has eigenvalue {min_eig} below the PSD noise floor "
            f"{-floor}; per-atom terms are inconsistent")
    clamped = min_eig < 0.0
    if clamped:
        total = (eigvecs * np.maximum(eigvals, 0.0)) @ eigvecs.T
        total = 0.5 * (total + total.T)
    return GammaSample(total, terms, min_eig, clamped, used_mode)


@dataclass(frozen=True)
class SharpSample:
    """One draw of F-sharp: vector value, the signs used, and the D rows."""

    vector: np.ndarray
    noise: np.ndarray
    atom_rows: np.ndarray


class SharpSampler:
    """Precomputes the per-atom rows D_i = x_i * J_i of the sharp operator.

    Only defined for scalar marks under the Levy bottom structure, where
    the derivative of the lent mark contributes x f'(x) against a
    zero-mean, unit-variance noise; Rademacher signs realize that noise.
    Averaging draws' outer products recovers Gamma[F] exactly:
    sum_i D_i D_i^T = sum_i x_i^2 J_i J_i^T.
    """

    def __init__(self, F, config, structure, mode="auto", fd_step=DEFAULT_FD_STEP,
                 measure=None):
        if F.mark_dim != 1:
            raise InvalidInput("sharp sampling is defined for scalar marks only")
        if not getattr(structure, "is_levy", False):
            raise InvalidInput("sharp sampling needs the Levy bottom structure")
        self.F = F
        self.config = config
        d = F.output_dim
        m = config.count
        rows = np.empty((m, d))
        for i in range(m):
            reduced = config.without_atom(i)
            jac = insertion_jacobian(
                F, reduced, config.times[i], config.marks[i], mode, fd_step, measure)
            rows[i] = config.marks[i, 0] * jac[:, 0]
        self.rows = rows

    def gamma(self):
        return self.rows.T @ self.rows

    def sample(self, noise):
        noise = np.asarray(noise, dtype=float)
        if noise.shape != (len(self.rows),):
            raise PreconditionError("one noise value per atom required")
        return SharpSample(self.rows.T @ noise, noise, self.rows)

    def draws(self, n, gen):
        """(n, d) matrix of F-sharp draws under fresh Rademacher signs."""
        signs = np.where(gen.random((n, len(self.rows))) < 0.5, -1.0, 1.0)
        return signs @ self.rows

    def mean_square(self, n, gen):
        """Average of F-sharp outer products over n draws, with its SE.

        Returns (mean (d,d), se (d,d)) where se is the entrywise standard
        error of the Monte Carlo mean.
        """
        vals = self.draws(n, gen)
        outer = np.einsum("ni,nj->nij", vals, vals)
        mean = outer.mean(axis=0)
        se = outer.std(axis=0, ddof=1) / np.sqrt(n)
        return mean, se


def sharp_sample(F, config, structure, noise, mode="auto", fd_step=DEFAULT_FD_STEP,
                 measure=None):
    """One F-sharp draw.

    `noise` is either a Generator (Rademacher signs are derived from fresh
    uniforms) or a MarkedConfiguration whose auxiliary uniforms are mapped
    through sign(r - 1/2).
    """
    sampler = SharpSampler(F, config, structure, mode, fd_step, measure)
    if hasattr(noise, "r"):
        r = np.asarray(noise.r, dtype=float)
    else:
        r = noise.random(config.count)
    signs = np.where(r < 0.5, -1.0, 1.0)
    return sampler.sample(signs)
