"""Functionals of a Poisson configuration.

Each family knows how to evaluate itself on a configuration, how to
evaluate after inserting one extra atom (alpha, x) without rebuilding the
configuration, and, where the mark dependence is tractable, the analytic
Jacobian of that insertion map x -> F(config + delta_(alpha,x)). The
Jacobian is what the lent particle computation differentiates; families
without one fall back to central finite differences.

Families with a known closed-form carre du champ expose it through
closed_form_gamma; the generic machinery in lent_particle never calls it,
so the two routes stay independent checks of each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from ._backend import kernels
from .errors import InvalidInput, PreconditionError
from .intensity import compensator_of_field
from .point_process import integrate_N
from .registry import MatrixSmooth, ScalarField, Smooth1D, SmoothMap, get_field, get_smooth


@dataclass(frozen=True)
class PiecewisePath:
    """Cadlag piecewise-constant auxiliary path on a fixed time grid.

    `times` starts at 0.0; `values` holds the level on [times[j], times[j+1]).
    Scalar paths use float values, vector paths tuples of floats. These are
    deterministic data, or pre-sampled once per run, never resampled per
    Monte Carlo draw.
    """

    times: tuple
    values: tuple

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if not times or times[0] != 0.0:
            raise InvalidInput("path grid must start at time 0.0")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidInput("path grid times must be strictly increasing")
        if len(self.values) != len(times):
            raise InvalidInput("one value per grid time required")
        vals = tuple(
            tuple(float(v) for v in row) if np.ndim(row) else float(row)
            for row in self.values)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self):
        v0 = self.values[0]
        return len(v0) if isinstance(v0, tuple) else 1

    @property
    def initial(self):
        return self.values[0]

    def increment_events(self):
        """(time, delta) for each grid point after 0; deltas match dim."""
        out = []
        for j in range(1, len(self.times)):
            a, b = self.values[j - 1], self.values[j]
            if isinstance(a, tuple):
                out.append((self.times[j], tuple(y - x for x, y in zip(a, b))))
            else:
                out.append((self.times[j], b - a))
        return out

    @classmethod
    def zero(cls, dim=1):
        v = tuple([0.0] * dim) if dim > 1 else 0.0
        return cls((0.0,), (v,))

    @classmethod
    def random_walk(cls, T, n_steps, scale, gen, dim=1):
        """Pre-sampled walk: n_steps equal segments, centered normal steps."""
        times = tuple(j * T / n_steps for j in range(n_steps))
        steps = gen.normal(0.0, scale, size=(n_steps, dim))
        steps[0] = 0.0
        levels = np.cumsum(steps, axis=0)
        if dim == 1:
            values = tuple(float(v) for v in levels[:, 0])
        else:
            values = tuple(tuple(float(x) for x in row) for row in levels)
        return cls(times, values)


class Functional:
    """Base interface; subclasses are picklable dataclasses."""

    output_dim = 1
    mark_dim = 1

    def evaluate(self, config):
        raise NotImplementedError

    def evaluate_with_insertion(self, config, alpha, x):
        return self.evaluate(config.with_insertion(alpha, x))

    def mark_jacobian(self, config, alpha, x):
        """(output_dim, mark_dim) Jacobian of x -> F(config + atom), or None."""
        return None

    @property
    def has_analytic_jacobian(self):
        return False

    def closed_form_gamma(self, config, structure):
        return None

    def describe(self):
        return type(self).__name__

    def _check_config(self, config):
        if config.mark_dim != self.mark_dim:
            raise PreconditionError(
                f"{type(self).__name__} expects mark dim {self.mark_dim}, "
                f"configuration has {config.mark_dim}")


def _as_mark(x, p):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (p,):
        raise PreconditionError(f"mark shape {x.shape} != ({p},)")
    return x


@dataclass(frozen=True)
class LinearCompensated(Functional):
    """F = Ntilde(f) = N(f) - Int f d(dt x nu) for a registry field f."""

    field: ScalarField
    measure: object
    compensator: float = None

    def __post_init__(self):
        if self.compensator is None:
            object.__setattr__(
                self, "compensator", compensator_of_field(self.measure, self.field))

    @property
    def mark_dim(self):
        return self.measure.mark_dim

    def evaluate(self, config):
        self._check_config(config)
        return np.array([integrate_N(config, self.field) - self.compensator])

    def evaluate_with_insertion(self, config, alpha, x):
        self._check_config(config)
        x = _as_mark(x, self.mark_dim)
        return self.evaluate(config) + self.field.at(alpha, x)

    def mark_jacobian(self, config, alpha, x):
        x = _as_mark(x, self.mark_dim)
        return self.field.grad_at(alpha, x)[None, :]

    @property
    def has_analytic_jacobian(self):
        return True

    def closed_form_gamma(self, config, structure):
        """N(gamma[f]) = sum over atoms of grad f^T xi grad f."""
        self._check_config(config)
        if config.count == 0:
            return np.zeros((1, 1))
        grads = self.field.grad(config.times, config.marks)
        if getattr(structure, "is_levy", False):
            total = float(np.sum(grads * grads * structure.xi_diag_of(config.marks)))
        else:
            total = 0.0
            for i in range(config.count):
                g = grads[i]
                total += float(g @ structure.xi(config.marks[i]) @ g)
        return np.array([[total]])

    def describe(self):
        return f"compensated linear functional of field {self.field.name!r}"


@dataclass(frozen=True)
class StochIntegral(Functional):
    """V = Int_0^T phi(Y_{s-}) dY_s where Y jumps by h(x) at each atom."""

    phi: Smooth1D
    h: Smooth1D = dc_field(default_factory=lambda: get_smooth("identity"))

    def _jumps(self, config):
        col = config.marks[:, 0]
        return col if self.h.is_identity else np.asarray(self.h.value(col), dtype=float)

    def _hval(self, x):
        return float(x) if self.h.is_identity else float(self.h.value(float(x)))

    def _hderiv(self, x):
        return 1.0 if self.h.is_identity else float(self.h.deriv(float(x)))

    def evaluate(self, config):
        self._check_config(config)
        p = self.phi
        return np.array([kernels.stoch_value(self._jumps(config), p.code, p.a, p.b, p.c)])

    def evaluate_with_insertion(self, config, alpha, x):
        self._check_config(config)
        x = _as_mark(x, 1)
        pos = config.insertion_index(alpha)
        p = self.phi
        v = kernels.stoch_inserted_value(
            self._jumps(config), pos, self._hval(x[0]), p.code, p.a, p.b, p.c)
        return np.array([v])

    def mark_jacobian(self, config, alpha, x):
        x = _as_mark(x, 1)
        pos = config.insertion_index(alpha)
        p = self.phi
        d = kernels.stoch_inserted_deriv(
            self._jumps(config), pos, self._hval(x[0]), p.code, p.a, p.b, p.c)
        return np.array([[self._hderiv(x[0]) * d]])

    @property
    def has_analytic_jacobian(self):
        return True

    def closed_form_gamma(self, config, structure):
        """Gamma[V] = sum_i xi(x_i) h'(x_i)^2 (phi(Y_{i-}) + suffix phi' dY)^2."""
        self._check_config(config)
        if not getattr(structure, "is_levy", False):
            return None
        if config.count == 0:
            return np.zeros((1, 1))
        p = self.phi
        coeffs = kernels.stoch_gamma_coeffs(self._jumps(config), p.code, p.a, p.b, p.c)
        col = config.marks[:, 0]
        hd = np.ones_like(col) if self.h.is_identity else np.asarray(self.h.deriv(col))
        terms = col * col * hd * hd * coeffs * coeffs
        return np.array([[float(np.sum(terms))]])

    def describe(self):
        return f"stochastic integral with phi={self.phi.name!r}, h={self.h.name!r}"


@dataclass(frozen=True)
class RunningSupremum(Functional):
    """M = sup_{s <= T} (Y_s + K_s), K a fixed piecewise-constant path."""

    h: Smooth1D = dc_field(default_factory=lambda: get_smooth("identity"))
    k_path: PiecewisePath = dc_field(default_factory=PiecewisePath.zero)

    def __post_init__(self):
        if self.k_path.dim != 1:
            raise InvalidInput("K must be a scalar path")

    def _events(self, config):
        """Merged increments of H = Y + K: (times, incs, atom_mask)."""
        jumps = (config.marks[:, 0] if self.h.is_identity
                 else np.asarray(self.h.value(config.marks[:, 0]), dtype=float))
        k_events = self.k_path.increment_events()
        if not k_events:
            return config.times, jumps, np.ones(config.count, dtype=bool)
        kt = np.array([e[0] for e in k_events])
        kd = np.array([e[1] for e in k_events])
        times = np.concatenate([config.times, kt])
        incs = np.concatenate([jumps, kd])
        mask = np.concatenate(
            [np.ones(config.count, dtype=bool), np.zeros(len(kt), dtype=bool)])
        order = np.argsort(times, kind="stable")
        times, incs, mask = times[order], incs[order], mask[order]
        if len(times) > 1 and np.any(np.diff(times) == 0.0):
            raise PreconditionError("atom time collides with a K grid time")
        return times, incs, mask

    @property
    def _h0(self):
        return float(self.k_path.initial)

    def evaluate(self, config):
        self._check_config(config)
        _, incs, _ = self._events(config)
        return np.array([kernels.sup_value(incs, self._h0)])

    def _insert_parts(self, config, alpha):
        times, incs, _ = self._events(config)
        pos = int(np.searchsorted(times, alpha))
        if pos < len(times) and times[pos] == alpha:
            raise PreconditionError(f"an event already sits at time {alpha}")
        return kernels.sup_insert_parts(incs, self._h0, pos)

    def evaluate_with_insertion(self, config, alpha, x):
        self._check_config(config)
        x = _as_mark(x, 1)
        p, s = self._insert_parts(config, alpha)
        return np.array([max(p, s + self._hval(x[0]))])

    def _hval(self, x):
        return float(x) if self.h.is_identity else float(self.h.value(float(x)))

    def mark_jacobian(self, config, alpha, x):
        """h'(x) when the sup is attained at or after the insertion, else 0.

        On the tie set {S + h(x) = P} the sup is not differentiable; the
        added-side value is used. Atom laws are nonatomic so ties have
        probability zero.
        """
        x = _as_mark(x, 1)
        p, s = self._insert_parts(config, alpha)
        ind = 1.0 if s + self._hval(x[0]) >= p else 0.0
        hd = 1.0 if self.h.is_identity else float(self.h.deriv(float(x[0])))
        return np.array([[hd * ind]])

    @property
    def has_analytic_jacobian(self):
        return True

    def closed_form_gamma(self, config, structure):
        """sum_i xi(x_i) h'(x_i)^2 1{sup_{s>=t_i} H >= sup_{s<t_i} H}."""
        self._check_config(config)
        if not getattr(structure, "is_levy", False):
            return None
        if config.count == 0:
            return np.zeros((1, 1))
        _, incs, mask = self._events(config)
        ind = kernels.sup_atom_indicators(incs, self._h0, mask)
        col = config.marks[:, 0]
        hd = np.ones_like(col) if self.h.is_identity else np.asarray(self.h.deriv(col))
        return np.array([[float(np.sum(col * col * hd * hd * ind))]])

    def describe(self):
        return f"running supremum of Y + K (h={self.h.name!r})"


@dataclass(frozen=True)
class VectorStochIntegral(Functional):
    """R = Int_0^T psi(Z_{s-}) dZ_s with Z = (S^1 + Y, S^2, ..., S^p).

    The jump part enters the first coordinate only; the other coordinates
    follow the fixed auxiliary path S. Output dimension is p.
    """

    psi: MatrixSmooth
    h: Smooth1D = dc_field(default_factory=lambda: get_smooth("identity"))
    s_path: PiecewisePath = dc_field(default_factory=lambda: PiecewisePath.zero(dim=2))

    def __post_init__(self):
        if self.s_path.dim != self.psi.dim:
            raise InvalidInput("S path dimension must match psi")

    @property
    def output_dim(self):
        return self.psi.dim

    def _merged_events(self, config):
        """(times, dz rows (n_ev, p), atom_mask) in time order."""
        p = self.psi.dim
        col = config.marks[:, 0]
        jumps = col if self.h.is_identity else np.asarray(self.h.value(col), dtype=float)
        ev_t = [config.times]
        dz_atoms = np.zeros((config.count, p))
        dz_atoms[:, 0] = jumps
        ev_dz = [dz_atoms]
        mask = [np.ones(config.count, dtype=bool)]
        s_events = self.s_path.increment_events()
        if s_events:
            ev_t.append(np.array([e[0] for e in s_events]))
            ev_dz.append(np.array([e[1] for e in s_events], dtype=float))
            mask.append(np.zeros(len(s_events), dtype=bool))
        times = np.concatenate(ev_t)
        dz = np.vstack(ev_dz)
        mask = np.concatenate(mask)
        order = np.argsort(times, kind="stable")
        times, dz, mask = times[order], dz[order], mask[order]
        if len(times) > 1 and np.any(np.diff(times) == 0.0):
            raise PreconditionError("atom time collides with an S grid time")
        return times, dz, mask

    def _z0(self):
        return np.asarray(self.s_path.initial, dtype=float).copy()

    def evaluate(self, config):
        self._check_config(config)
        _, dz, _ = self._merged_events(config)
        z = self._z0()
        r = np.zeros(self.output_dim)
        for k in range(len(dz)):
            r += self.psi.psi(z) @ dz[k]
            z += dz[k]
        return r

    def evaluate_with_insertion(self, config, alpha, x):
        self._check_config(config)
        x = _as_mark(x, 1)
        times, dz, _ = self._merged_events(config)
        pos = int(np.searchsorted(times, alpha))
        if pos < len(times) and times[pos] == alpha:
            raise PreconditionError(f"an event already sits at time {alpha}")
        hx = float(x[0]) if self.h.is_identity else float(self.h.value(float(x[0])))
        e1 = np.zeros(self.output_dim)
        e1[0] = hx
        z = self._z0()
        r = np.zeros(self.output_dim)
        for k in range(pos):
            r += self.psi.psi(z) @ dz[k]
            z += dz[k]
        r += self.psi.psi(z) @ e1
        z += e1
        for k in range(pos, len(dz)):
            r += self.psi.psi(z) @ dz[k]
            z += dz[k]
        return r

    def mark_jacobian(self, config, alpha, x):
        """h'(x) [psi_{.1}(Z_{alpha-}) + sum_{s>alpha} d1 psi(Z_{s-}) dZ_s].

        The suffix runs over every later event, jump or auxiliary, and uses
        the full derivative of each column against its own increment.
        """
        x = _as_mark(x, 1)
        times, dz, _ = self._merged_events(config)
        pos = int(np.searchsorted(times, alpha))
        if pos < len(times) and times[pos] == alpha:
            raise PreconditionError(f"an event already sits at time {alpha}")
        hx = float(x[0]) if self.h.is_identity else float(self.h.value(float(x[0])))
        hd = 1.0 if self.h.is_identity else float(self.h.deriv(float(x[0])))
        e1 = np.zeros(self.output_dim)
        e1[0] = hx
        z = self._z0()
        for k in range(pos):
            z += dz[k]
        u = self.psi.psi(z)[:, 0].copy()
        z = z + e1
        for k in range(pos, len(dz)):
            u += self.psi.d1_psi(z) @ dz[k]
            z += dz[k]
        return (hd * u)[:, None]

    @property
    def has_analytic_jacobian(self):
        return True

    def closed_form_gamma(self, config, structure):
        """Gamma[R] = sum_atoms xi(x) h'(x)^2 U U^T with the full-path U."""
        self._check_config(config)
        if not getattr(structure, "is_levy", False):
            return None
        p = self.output_dim
        g = np.zeros((p, p))
        times, dz, mask = self._merged_events(config)
        if not len(times):
            return g
        # left limits of Z before each event
        z = self._z0()
        zminus = np.empty((len(dz), p))
        for k in range(len(dz)):
            zminus[k] = z
            z += dz[k]
        col = config.marks[:, 0]
        hd_all = np.ones_like(col) if self.h.is_identity else np.asarray(self.h.deriv(col))
        atom_positions = np.where(mask)[0]
        for a_idx, ev_idx in enumerate(atom_positions):
            u = self.psi.psi(zminus[ev_idx])[:, 0].copy()
            for k in range(ev_idx + 1, len(dz)):
                u += self.psi.d1_psi(zminus[k]) @ dz[k]
            x = col[a_idx]
            g += (x * x) * (hd_all[a_idx] ** 2) * np.outer(u, u)
        return g

    def gamma_first_column_only(self, config, structure):
        """Variant keeping only jump-driven suffix terms of the first column.

        Coincides with closed_form_gamma exactly when psi's other columns
        do not depend on z_1 and S^1 is flat; otherwise it drops the
        auxiliary-driven terms and differs.
        """
        self._check_config(config)
        if not getattr(structure, "is_levy", False):
            return None
        p = self.output_dim
        g = np.zeros((p, p))
        times, dz, mask = self._merged_events(config)
        if not len(times):
            return g
        z = self._z0()
        zminus = np.empty((len(dz), p))
        for k in range(len(dz)):
            zminus[k] = z
            z += dz[k]
        col = config.marks[:, 0]
        hd_all = np.ones_like(col) if self.h.is_identity else np.asarray(self.h.deriv(col))
        atom_positions = np.where(mask)[0]
        for a_idx, ev_idx in enumerate(atom_positions):
            u = self.psi.psi(zminus[ev_idx])[:, 0].copy()
            for k in range(ev_idx + 1, len(dz)):
                if mask[k]:
                    u += self.psi.d1_psi(zminus[k])[:, 0] * dz[k, 0]
            x = col[a_idx]
            g += (x * x) * (hd_all[a_idx] ** 2) * np.outer(u, u)
        return g

    def describe(self):
        return f"system of stochastic integrals with psi={self.psi.name!r}"


@dataclass(frozen=True)
class TriangularSystem(Functional):
    """Terminal value of the explicit triangular system driven by two streams.

    Z1 = z1 + Y1, Z2 = z2 + Int 2 Z1_- dY1 + Y2, Z3 = z3 + Int Z1_- dY1 + 2 Y2,
    with (Y1, Y2) read off the two mark coordinates.
    """

    z0: tuple = (0.0, 0.0, 0.0)

    output_dim = 3
    mark_dim = 2

    def __post_init__(self):
        z = tuple(float(v) for v in self.z0)
        if len(z) != 3:
            raise InvalidInput("z0 must have length 3")
        object.__setattr__(self, "z0", z)

    def evaluate(self, config):
        self._check_config(config)
        return kernels.triangular_value(
            config.marks[:, 0], config.marks[:, 1], *self.z0)

    def mark_jacobian(self, config, alpha, x):
        """Columns d/dy1, d/dy2 of the inserted-atom map: [[1,0],[2c,1],[c,2]].

        c = z1 + Y1_T of the configuration inserted into; the system is
        quadratic, so the Jacobian does not depend on the inserted mark.
        """
        _as_mark(x, 2)
        c = self.z0[0] + float(np.sum(config.marks[:, 0]))
        return np.array([[1.0, 0.0], [2.0 * c, 1.0], [c, 2.0]])

    @property
    def has_analytic_jacobian(self):
        return True

    def closed_form_gamma(self, config, structure):
        self._check_config(config)
        if not getattr(structure, "is_levy", False):
            return None
        return kernels.triangular_gamma(
            config.marks[:, 0], config.marks[:, 1], self.z0[0])

    def describe(self):
        return f"triangular system terminal state, z0={self.z0}"


@dataclass(frozen=True)
class Composite(Functional):
    """Phi(F_1, ..., F_n) for a smooth registry map Phi and functional parts."""

    phi_map: SmoothMap
    parts: tuple

    def __post_init__(self):
        if not self.parts:
            raise InvalidInput("composite needs at least one part")
        dims = {p.mark_dim for p in self.parts}
        if len(dims) != 1:
            raise InvalidInput("composite parts must share the mark space")
        need = self.phi_map.input_dim
        total = sum(p.output_dim for p in self.parts)
        if need is not None and total != need:
            raise InvalidInput(
                f"map {self.phi_map.name!r} expects {need} inputs, parts give {total}")
        object.__setattr__(self, "parts", tuple(self.parts))

    @property
    def output_dim(self):
        return self.phi_map.output_dim

    @property
    def mark_dim(self):
        return self.parts[0].mark_dim

    def evaluate(self, config):
        u = np.concatenate([p.evaluate(config) for p in self.parts])
        return self.phi_map.value(u)

    def evaluate_with_insertion(self, config, alpha, x):
        u = np.concatenate(
            [p.evaluate_with_insertion(config, alpha, x) for p in self.parts])
        return self.phi_map.value(u)

    def mark_jacobian(self, config, alpha, x):
        """Chain rule: DPhi at the inserted values times the stacked part Jacobians."""
        blocks = []
        for p in self.parts:
            j = p.mark_jacobian(config, alpha, x)
            if j is None:
                return None
            blocks.append(j)
        u_plus = np.concatenate(
            [p.evaluate_with_insertion(config, alpha, x) for p in self.parts])
        return self.phi_map.jacobian(u_plus) @ np.vstack(blocks)

    @property
    def has_analytic_jacobian(self):
        return all(p.has_analytic_jacobian for p in self.parts)

    def describe(self):
        inner = ", ".join(p.describe() for p in self.parts)
        return f"{self.phi_map.name}({inner})"


@dataclass(frozen=True)
class Stacked(Functional):
    """(F_1, ..., F_n) stacked into one vector functional (shared marks)."""

    parts: tuple

    def __post_init__(self):
        dims = {p.mark_dim for p in self.parts}
        if len(dims) != 1:
            raise InvalidInput("stacked parts must share the mark space")
        object.__setattr__(self, "parts", tuple(self.parts))

    @property
    def output_dim(self):
        return sum(p.output_dim for p in self.parts)

    @property
    def mark_dim(self):
        return self.parts[0].mark_dim

    def evaluate(self, config):
        return np.concatenate([p.evaluate(config) for p in self.parts])

    def evaluate_with_insertion(self, config, alpha, x):
        return np.concatenate(
            [p.evaluate_with_insertion(config, alpha, x) for p in self.parts])

    def mark_jacobian(self, config, alpha, x):
        blocks = []
        for p in self.parts:
            j = p.mark_jacobian(config, alpha, x)
            if j is None:
                return None
            blocks.append(j)
        return np.vstack(blocks)

    @property
    def has_analytic_jacobian(self):
        return all(p.has_analytic_jacobian for p in self.parts)

    def describe(self):
        return "stack(" + ", ".join(p.describe() for p in self.parts) + ")"


FAMILIES = ("linear", "stoch_integral", "running_sup", "vector_stoch",
            "triangular", "composite")


def make_functional(family, measure=None, **params):
    """Build a functional from CLI-style parameters.

    Registry entries are referred to by name (`phi`, `h`, `psi`, `field`,
    `map`); auxiliary paths are passed prebuilt as `k_path` / `s_path`.
    """
    if family == "linear":
        if measure is None:
            raise InvalidInput("linear functional needs the measure for its compensator")
        f = get_field(params.pop("field", "x"),
                      params.pop("field_a", None), params.pop("field_b", None))
        _reject_extras(family, params)
        return LinearCompensated(f, measure)
    if family == "stoch_integral":
        phi = get_smooth(params.pop("phi", "sin"), params.pop("phi_a", None),
                         params.pop("phi_b", None), params.pop("phi_c", None))
        h = get_smooth(params.pop("h", "identity"), params.pop("h_a", None),
                       params.pop("h_b", None), params.pop("h_c", None))
        _reject_extras(family, params)
        return StochIntegral(phi, h)
    if family == "running_sup":
        h = get_smooth(params.pop("h", "identity"), params.pop("h_a", None),
                       params.pop("h_b", None), params.pop("h_c", None))
        k_path = params.pop("k_path", PiecewisePath.zero())
        _reject_extras(family, params)
        return RunningSupremum(h, k_path)
    if family == "vector_stoch":
        psi = MatrixSmooth(params.pop("psi", "sep_trig"))
        h = get_smooth(params.pop("h", "identity"), params.pop("h_a", None),
                       params.pop("h_b", None), params.pop("h_c", None))
        s_path = params.pop("s_path", PiecewisePath.zero(dim=2))
        _reject_extras(family, params)
        return VectorStochIntegral(psi, h, s_path)
    if family == "triangular":
        z0 = params.pop("z0", (0.0, 0.0, 0.0))
        _reject_extras(family, params)
        return TriangularSystem(tuple(z0))
    if family == "composite":
        names = params.pop("parts", ("x", "x2"))
        phi_map = SmoothMap(params.pop("map", "sum"))
        _reject_extras(family, params)
        if isinstance(names, str):
            names = tuple(s.strip() for s in names.split(";") if s.strip())
        if all(isinstance(p, Functional) for p in names):
            return Composite(phi_map, tuple(names))
        if measure is None:
            raise InvalidInput("composite of linear parts needs the measure")
        parts = tuple(LinearCompensated(get_field(n), measure) for n in names)
        return Composite(phi_map, parts)
    raise InvalidInput(f"unknown functional family {family!r}; known: {FAMILIES}")


def _reject_extras(family, params):
    if params:
        raise InvalidInput(f"unexpected {family} parameters: {sorted(params)}")
