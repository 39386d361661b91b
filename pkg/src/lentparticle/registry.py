"""Named smooth functions with hand-coded derivatives.

Functionals, the CLI and the compiled kernels all refer to the same small
catalog: scalar C^1 functions (integrand coefficients phi and jump maps h),
scalar fields f(t, x) on the time-mark space, matrix-valued coefficients
for systems of integrals, and smooth outer maps for composition. Entries
are dataclasses holding only a name and float parameters, so they pickle
cheaply across worker processes; the callables live in module-level tables
keyed by name.

Kernel codes: the compiled backend evaluates phi inside C loops, so each
scalar entry carries an integer code understood by both backends.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput

# Codes shared with the kernel backends.
CODE_IDENTITY = 0
CODE_AFFINE = 1
CODE_SIN = 2
CODE_COS = 3
CODE_TANH = 4

_SMOOTH_VALUE = {
    CODE_IDENTITY: lambda y, a, b, c: y,
    CODE_AFFINE: lambda y, a, b, c: a * y + b,
    CODE_SIN: lambda y, a, b, c: a * np.sin(b * y) + c,
    CODE_COS: lambda y, a, b, c: a * np.cos(b * y) + c,
    CODE_TANH: lambda y, a, b, c: a * np.tanh(b * y),
}

_SMOOTH_DERIV = {
    CODE_IDENTITY: lambda y, a, b, c: np.ones_like(np.asarray(y, dtype=float)),
    CODE_AFFINE: lambda y, a, b, c: a * np.ones_like(np.asarray(y, dtype=float)),
    CODE_SIN: lambda y, a, b, c: a * b * np.cos(b * y),
    CODE_COS: lambda y, a, b, c: -a * b * np.sin(b * y),
    CODE_TANH: lambda y, a, b, c: a * b * (1.0 - np.tanh(b * y) ** 2),
}

_SMOOTH_CODES = {
    "identity": CODE_IDENTITY,
    "affine": CODE_AFFINE,
    "sin": CODE_SIN,
    "cos": CODE_COS,
    "tanh": CODE_TANH,
}


@dataclass(frozen=True)
class Smooth1D:
    """Scalar Lipschitz C^1 function y -> a,b,c-parameterized family member."""

    name: str
    a: float = 1.0
    b: float = 1.0
    c: float = 0.0

    def __post_init__(self):
        if self.name not in _SMOOTH_CODES:
            raise InvalidInput(
                f"unknown smooth function {self.name!r}; known: {sorted(_SMOOTH_CODES)}")

    @property
    def code(self):
        return _SMOOTH_CODES[self.name]

    @property
    def is_identity(self):
        return self.name == "identity"

    def value(self, y):
        return _SMOOTH_VALUE[self.code](y, self.a, self.b, self.c)

    def deriv(self, y):
        return _SMOOTH_DERIV[self.code](y, self.a, self.b, self.c)


SMOOTH_DEFAULTS = {
    "identity": {},
    "affine": {"a": 0.5, "b": 1.0},
    # 2 + sin(y): bounded, positive, derivative cos(y)
    "sin": {"a": 1.0, "b": 1.0, "c": 2.0},
    "cos": {"a": 1.0, "b": 1.0, "c": 0.0},
    "tanh": {"a": 1.0, "b": 1.0},
}


def get_smooth(name, a=None, b=None, c=None):
    params = dict(SMOOTH_DEFAULTS.get(name, {}))
    if a is not None:
        params["a"] = a
    if b is not None:
        params["b"] = b
    if c is not None:
        params["c"] = c
    return Smooth1D(name, **params)


# ---------------------------------------------------------------------------
# Scalar fields f(t, x) on [0, T] x E


def _col(marks, j):
    return np.asarray(marks, dtype=float)[:, j]


def _e(marks, j, vals):
    out = np.zeros_like(np.asarray(marks, dtype=float))
    out[:, j] = vals
    return out


# name -> (value(t, marks)->(m,), grad_x(t, marks)->(m,p), time_dependent, min_mark_dim)
_FIELD_IMPLS = {
    "x": (
        lambda t, X, a, b: _col(X, 0),
        lambda t, X, a, b: _e(X, 0, np.ones(len(X))),
        False, 1),
    "x2": (
        lambda t, X, a, b: _col(X, 0) ** 2,
        lambda t, X, a, b: _e(X, 0, 2.0 * _col(X, 0)),
        False, 1),
    "sin_x": (
        lambda t, X, a, b: np.sin(_col(X, 0)),
        lambda t, X, a, b: _e(X, 0, np.cos(_col(X, 0))),
        False, 1),
    "tx": (
        lambda t, X, a, b: np.asarray(t, dtype=float) * _col(X, 0),
        lambda t, X, a, b: _e(X, 0, np.broadcast_to(np.asarray(t, dtype=float), (len(X),)).copy()),
        True, 1),
    "one": (
        lambda t, X, a, b: np.ones(len(X)),
        lambda t, X, a, b: np.zeros_like(np.asarray(X, dtype=float)),
        False, 1),
    "rational": (
        lambda t, X, a, b: _col(X, 0) / (1.0 + _col(X, 0) ** 2),
        lambda t, X, a, b: _e(X, 0, (1.0 - _col(X, 0) ** 2) / (1.0 + _col(X, 0) ** 2) ** 2),
        False, 1),
    "sum2": (
        lambda t, X, a, b: _col(X, 0) + _col(X, 1),
        lambda t, X, a, b: np.ones_like(np.asarray(X, dtype=float)),
        False, 2),
    "normsq2": (
        lambda t, X, a, b: _col(X, 0) ** 2 + _col(X, 1) ** 2,
        lambda t, X, a, b: 2.0 * np.asarray(X, dtype=float),
        False, 2),
    # chaos integrands constrained to [-1/2, 0] for a in [-1/2, 0]
    "g_const": (
        lambda t, X, a, b: np.full(len(X), a),
        lambda t, X, a, b: np.zeros_like(np.asarray(X, dtype=float)),
        False, 1),
    "g_sin": (
        lambda t, X, a, b: a * (1.0 + np.sin(_col(X, 0))) / 2.0,
        lambda t, X, a, b: _e(X, 0, a * np.cos(_col(X, 0)) / 2.0),
        False, 1),
    "g_rational": (
        lambda t, X, a, b: a * _col(X, 0) ** 2 / (1.0 + _col(X, 0) ** 2),
        lambda t, X, a, b: _e(X, 0, 2.0 * a * _col(X, 0) / (1.0 + _col(X, 0) ** 2) ** 2),
        False, 1),
}

_FIELD_DEFAULTS = {
    "g_const": {"a": -0.25},
    "g_sin": {"a": -0.5},
    "g_rational": {"a": -0.4},
}


@dataclass(frozen=True)
class ScalarField:
    """Scalar field f(t, x), C^1 in the mark, with hand-coded mark gradient."""

    name: str
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if self.name not in _FIELD_IMPLS:
            raise InvalidInput(
                f"unknown field {self.name!r}; known: {sorted(_FIELD_IMPLS)}")

    @property
    def time_dependent(self):
        return _FIELD_IMPLS[self.name][2]

    @property
    def min_mark_dim(self):
        return _FIELD_IMPLS[self.name][3]

    def value(self, t, marks):
        """Vectorized evaluation: t scalar or (m,), marks (m, p) -> (m,)."""
        return np.asarray(_FIELD_IMPLS[self.name][0](t, marks, self.a, self.b), dtype=float)

    def grad(self, t, marks):
        """Mark gradients, shape (m, p)."""
        return np.asarray(_FIELD_IMPLS[self.name][1](t, marks, self.a, self.b), dtype=float)

    def at(self, t, x):
        """Scalar evaluation at one (t, x); x a scalar (p=1) or length-p vector."""
        X = np.atleast_1d(np.asarray(x, dtype=float))[None, :]
        return float(self.value(t, X)[0])

    def grad_at(self, t, x):
        X = np.atleast_1d(np.asarray(x, dtype=float))[None, :]
        return self.grad(t, X)[0]


def get_field(name, a=None, b=None):
    params = dict(_FIELD_DEFAULTS.get(name, {}))
    if a is not None:
        params["a"] = a
    if b is not None:
        params["b"] = b
    return ScalarField(name, **params)


FIELD_NAMES = tuple(sorted(_FIELD_IMPLS))


# ---------------------------------------------------------------------------
# Matrix coefficients psi: R^2 -> R^{2x2} for systems of stochastic integrals

# name -> (psi(z)->(2,2), d1_psi(z)->(2,2)); d1 is the derivative in z_1.
_MATRIX_IMPLS = {
    # z_1-dependence confined to the first column: the column-driven
    # closed form is exact for this entry when the auxiliary path is flat.
    "sep_trig": (
        lambda z: np.array([[1.0 + 0.5 * np.sin(z[0]), 0.3 * np.cos(z[1])],
                            [0.5 * np.cos(z[0]), 1.0 + 0.2 * np.sin(z[1])]]),
        lambda z: np.array([[0.5 * np.cos(z[0]), 0.0],
                            [-0.5 * np.sin(z[0]), 0.0]]),
    ),
    "mixed_trig": (
        lambda z: np.array([[1.0 + 0.5 * np.sin(z[0]), 0.3 * np.sin(z[0] + z[1])],
                            [0.5 * np.cos(z[0]), 1.0 + 0.2 * np.cos(z[0] - z[1])]]),
        lambda z: np.array([[0.5 * np.cos(z[0]), 0.3 * np.cos(z[0] + z[1])],
                            [-0.5 * np.sin(z[0]), -0.2 * np.sin(z[0] - z[1])]]),
    ),
}


@dataclass(frozen=True)
class MatrixSmooth:
    """C^1 matrix field z -> psi(z) in R^{2x2} with hand-coded d/dz_1."""

    name: str

    def __post_init__(self):
        if self.name not in _MATRIX_IMPLS:
            raise InvalidInput(
                f"unknown matrix coefficient {self.name!r}; known: {sorted(_MATRIX_IMPLS)}")

    @property
    def dim(self):
        return 2

    def psi(self, z):
        return _MATRIX_IMPLS[self.name][0](np.asarray(z, dtype=float))

    def d1_psi(self, z):
        return _MATRIX_IMPLS[self.name][1](np.asarray(z, dtype=float))

    @property
    def first_column_only(self):
        """True when columns other than the first do not depend on z_1."""
        return self.name == "sep_trig"


# ---------------------------------------------------------------------------
# Smooth outer maps for composed functionals

_MAP_IMPLS = {
    "sum": (
        1, None,
        lambda u: np.array([np.sum(u)]),
        lambda u: np.ones((1, len(u)))),
    "sin_sum": (
        1, None,
        lambda u: np.array([np.sin(np.sum(u))]),
        lambda u: np.cos(np.sum(u)) * np.ones((1, len(u)))),
    "prod2": (
        1, 2,
        lambda u: np.array([u[0] * u[1]]),
        lambda u: np.array([[u[1], u[0]]])),
}


@dataclass(frozen=True)
class SmoothMap:
    """C^1 map R^n -> R^k with hand-coded Jacobian, for composing functionals."""

    name: str

    def __post_init__(self):
        if self.name not in _MAP_IMPLS:
            raise InvalidInput(
                f"unknown smooth map {self.name!r}; known: {sorted(_MAP_IMPLS)}")

    @property
    def output_dim(self):
        return _MAP_IMPLS[self.name][0]

    @property
    def input_dim(self):
        """Required input length, or None if any length is accepted."""
        return _MAP_IMPLS[self.name][1]

    def value(self, u):
        u = np.asarray(u, dtype=float)
        self._check(u)
        return _MAP_IMPLS[self.name][2](u)

    def jacobian(self, u):
        u = np.asarray(u, dtype=float)
        self._check(u)
        return _MAP_IMPLS[self.name][3](u)

    def _check(self, u):
        need = self.input_dim
        if need is not None and len(u) != need:
            raise InvalidInput(f"map {self.name!r} expects {need} inputs, got {len(u)}")
