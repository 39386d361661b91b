"""Multiple Poisson integrals of product form and the exponential identity.

I_n(g^(x)n) is evaluated on a realized configuration either through
complete Bell polynomials in the compensated/raw power sums of g, or by
brute-force enumeration over ordered tuples of distinct atoms. The two
routes share nothing past the atom values of g, so their agreement is a
real cross-check of the combinatorics.

The exponential identity
    exp(N(log(1+g)) - nu(g)) = 1 + sum_n I_n(g^(x)n) / n!
holds pathwise for -1/2 <= g <= 0 and is the package's verification that
the I_n actually are the chaos of the left side.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, PreconditionError, SizeError
from .intensity import compensator_of_field

BRUTE_FORCE_BUDGET = 10_000_000


def _partitions_into_parts(n, k):
    """Partitions of n into exactly k parts, as descending lists."""

    def rec(rem, parts, maxpart):
        if parts == 0:
            if rem == 0:
                yield []
            return
        top = min(rem - parts + 1, maxpart)
        for p in range(top, 0, -1):
            for rest in rec(rem - p, parts - 1, p):
                yield [p] + rest

    yield from rec(n, k, n)


def bell_polynomial(n, k, x):
    """Partial Bell polynomial B_{n,k}(x_1, ..., x_{n-k+1}).

    The sum runs over partitions of n into exactly k parts; a partition
    with c_j parts equal to j contributes
        n! / (prod_j c_j! (j!)^{c_j}) * prod_j x_j^{c_j}.
    """
    if n < 1 or k < 1 or k > n:
        raise InvalidInput(f"bell_polynomial needs 1 <= k <= n, got n={n}, k={k}")
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) < n - k + 1:
        raise InvalidInput(
            f"bell_polynomial(n={n}, k={k}) needs at least {n - k + 1} arguments, "
            f"got {len(x)}")
    n_fact = math.factorial(n)
    total = 0.0
    for parts in _partitions_into_parts(n, k):
        coeff = n_fact
        prod = 1.0
        j_prev = None
        count = 0
        for j in parts + [None]:
            if j == j_prev:
                count += 1
                continue
            if j_prev is not None:
                coeff //= math.factorial(count) * math.factorial(j_prev) ** count
                prod *= x[j_prev - 1] ** count
            j_prev = j
            count = 1
        total += coeff * prod
    return total


@dataclass(frozen=True)
class PowerSums:
    """Atom power sums of g on one configuration.

    tilde is the compensated sum N(g) - nu(g); raw[j - 2] is N(g^j) for
    j = 2 ... m_max. These are the only configuration-dependent inputs the
    Bell route needs.
    """

    nu_g: float
    tilde: float
    raw: tuple

    @property
    def m_max(self):
        return len(self.raw) + 1

    def bell_arguments(self, n):
        """x_1 ... x_n with x_1 = tilde and x_j = (-1)^(j-1) (j-1)! N(g^j)."""
        if n > self.m_max:
            raise PreconditionError(
                f"power sums were computed up to order {self.m_max}, need {n}")
        x = [self.tilde]
        for j in range(2, n + 1):
            x.append((-1) ** (j - 1) * math.factorial(j - 1) * self.raw[j - 2])
        return np.array(x)


def power_sums(config, g_field, measure, m_max, nu_g=None):
    """Compute PowerSums of g_field up to order m_max on one configuration."""
    if m_max < 1:
        raise InvalidInput("m_max must be at least 1")
    if nu_g is None:
        nu_g = compensator_of_field(measure, g_field)
    if config.count:
        gv = g_field.value(config.times, config.marks)
    else:
        gv = np.zeros(0)
    tilde = float(gv.sum()) - nu_g
    raw = tuple(float(np.sum(gv ** j)) for j in range(2, m_max + 1))
    return PowerSums(nu_g=float(nu_g), tilde=tilde, raw=raw)


def _bell_route(ps, n):
    return sum(bell_polynomial(n, k, ps.bell_arguments(n)) for k in range(1, n + 1))


def _brute_force_route(config, g_field, nu_g, n):
    """sum_a C(n,a) (-nu_g)^(n-a) sum over ordered distinct atom a-tuples."""
    m = config.count
    total_tuples = sum(math.perm(m, a) for a in range(0, min(n, m) + 1))
    if total_tuples > BRUTE_FORCE_BUDGET:
        raise SizeError(
            f"brute-force route needs {total_tuples} tuples for {m} atoms at "
            f"order {n}, over the budget of {BRUTE_FORCE_BUDGET}")
    if m:
        gv = g_field.value(config.times, config.marks)
    else:
        gv = np.zeros(0)
    total = 0.0
    for a in range(0, min(n, m) + 1):
        tuple_sum = 0.0
        for idx in itertools.permutations(range(m), a):
            prod = 1.0
            for i in idx:
                prod *= gv[i]
            tuple_sum += prod
        total += math.comb(n, a) * (-nu_g) ** (n - a) * tuple_sum
    return total


def multiple_integral(config, g_field, measure, n, method="bell", nu_g=None):
    """n-th multiple integral of the product kernel g^(x)n on a configuration.

    method "bell" uses the Bell-polynomial expansion in power sums of g;
    "bruteforce" enumerates ordered tuples of distinct atoms directly and
    exists as an independent oracle for small configurations.
    """
    if n < 0:
        raise InvalidInput("order n must be nonnegative")
    if n == 0:
        return 1.0
    if method == "bell":
        ps = power_sums(config, g_field, measure, n, nu_g=nu_g)
        return _bell_route(ps, n)
    if method == "bruteforce":
        if nu_g is None:
            nu_g = compensator_of_field(measure, g_field)
        return _brute_force_route(config, g_field, float(nu_g), n)
    raise InvalidInput(f"method {method!r} not one of bell, bruteforce")


def _check_exponential_range(config, g_field, measure, grid_points=256):
    """The identity needs -1/2 <= g <= 0 on the support, not just at atoms."""
    lo, hi = -0.5, 0.0
    tol = 1e-12
    if config.count:
        gv = g_field.value(config.times, config.marks)
        if gv.min() < lo - tol or gv.max() > hi + tol:
            raise InvalidInput(
                f"exponential identity needs -1/2 <= g <= 0; atom values span "
                f"[{gv.min()}, {gv.max()}]")
    t_grid = np.linspace(0.0, measure.T, 5) if g_field.time_dependent else [0.0]
    for a, b in measure.support():
        xs = np.linspace(a, b, grid_points)
        for t in t_grid:
            vals = np.array([g_field.at(t, x) for x in xs])
            if vals.min() < lo - tol or vals.max() > hi + tol:
                raise InvalidInput(
                    f"exponential identity needs -1/2 <= g <= 0 on the support; "
                    f"on [{a}, {b}] values span [{vals.min()}, {vals.max()}]")


def exponential_identity_residuals(config, g_field, measure, n_max, nu_g=None):
    """|exp(N(log(1+g)) - nu(g)) - partial chaos sum| for n = 1 ... n_max.

    Returns the (n_max,) array of absolute residuals of the partial sums
    1 + sum_{j<=n} I_j / j!. Partial sums can overshoot at low orders, so
    the residuals converge to zero as n grows rather than falling at every
    single step.
    """
    if n_max < 1:
        raise InvalidInput("n_max must be at least 1")
    _check_exponential_range(config, g_field, measure)
    if nu_g is None:
        nu_g = compensator_of_field(measure, g_field)
    if config.count:
        gv = g_field.value(config.times, config.marks)
        log_mass = float(np.sum(np.log1p(gv)))
    else:
        log_mass = 0.0
    lhs = math.exp(log_mass - nu_g)
    ps = power_sums(config, g_field, measure, n_max, nu_g=nu_g)
    partial = 1.0
    residuals = np.empty(n_max)
    for n in range(1, n_max + 1):
        partial += _bell_route(ps, n) / math.factorial(n)
        residuals[n - 1] = abs(lhs - partial)
    return residuals
