"""Functional families: values, insertion maps and analytic Jacobians."""

import numpy as np
import pytest

from lentparticle import rng
from lentparticle.errors import InvalidInput, PreconditionError
from lentparticle.functionals import (Composite, LinearCompensated,
                                      PiecewisePath, RunningSupremum,
                                      Stacked, StochIntegral,
                                      TriangularSystem, VectorStochIntegral,
                                      make_functional)
from lentparticle.intensity import UniformMeasure, levy_structure
from lentparticle.point_process import PointConfiguration
from lentparticle.registry import (MatrixSmooth, SmoothMap, get_field,
                                   get_smooth)

from conftest import hand_config, random_config, synth_gen


def fd_insertion_jacobian(F, config, alpha, x, eta=1e-6):
    """Central difference of x -> F(config + delta_(alpha, x)), test-local."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    cols = []
    for k in range(len(x)):
        up, dn = x.copy(), x.copy()
        up[k] += eta
        dn[k] -= eta
        cols.append((F.evaluate_with_insertion(config, alpha, up)
                     - F.evaluate_with_insertion(config, alpha, dn)) / (2.0 * eta))
    return np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# PiecewisePath


def test_path_validation():
    with pytest.raises(InvalidInput):
        PiecewisePath((0.5,), (1.0,))
    with pytest.raises(InvalidInput):
        PiecewisePath((0.0, 0.4, 0.4), (0.0, 1.0, 2.0))
    with pytest.raises(InvalidInput):
        PiecewisePath((0.0, 0.4), (0.0,))


def test_path_increments_and_dim():
    path = PiecewisePath((0.0, 0.3, 0.8), (0.5, 2.0, 1.0))
    assert path.dim == 1
    assert path.initial == 0.5
    assert path.increment_events() == [(0.3, 1.5), (0.8, -1.0)]
    flat = PiecewisePath.zero(dim=2)
    assert flat.dim == 2
    assert flat.increment_events() == []
    vec = PiecewisePath((0.0, 0.5), ((0.0, 1.0), (2.0, 1.5)))
    assert vec.dim == 2
    assert vec.increment_events() == [(0.5, (2.0, 0.5))]


def test_random_walk_is_deterministic():
    a = PiecewisePath.random_walk(1.0, 8, 0.3, synth_gen(100))
    b = PiecewisePath.random_walk(1.0, 8, 0.3, synth_gen(100))
    assert a == b
    assert len(a.times) == 8
    assert a.initial == 0.0
    c = PiecewisePath.random_walk(1.0, 8, 0.3, synth_gen(101), dim=2)
    assert c.dim == 2


# ---------------------------------------------------------------------------
# Compensated linear functionals


def test_linear_compensated_value_and_jacobian(uniform_measure):
    F = LinearCompensated(get_field("x2"), uniform_measure)
    config = hand_config([(0.2, 1.0), (0.7, -2.0)])
    assert np.isclose(F.evaluate(config)[0], 5.0 - F.compensator)
    J = F.mark_jacobian(config, 0.5, np.array([1.5]))
    assert J.shape == (1, 1)
    assert np.isclose(J[0, 0], 3.0)
    fd = fd_insertion_jacobian(F, config, 0.5, [1.5])
    assert np.allclose(J, fd, atol=1e-8)


def test_linear_closed_form_gamma_is_sum_of_squared_gradients(structure):
    F = LinearCompensated(
        get_field("sin_x"), UniformMeasure(total=1.0, lo=1.0, hi=2.0))
    config = hand_config([(0.2, 1.2), (0.7, 1.8)])
    got = F.closed_form_gamma(config, structure)[0, 0]
    want = sum(x * x * np.cos(x) ** 2 for x in (1.2, 1.8))
    assert np.isclose(got, want, rtol=1e-14)


# ---------------------------------------------------------------------------
# Scalar stochastic integral


def test_stoch_integral_constant_phi_gives_terminal_value():
    F = StochIntegral(get_smooth("affine", a=0.0, b=1.0))
    config = hand_config([(0.1, 1.0), (0.5, 2.0), (0.9, -0.5)])
    assert np.isclose(F.evaluate(config)[0], 2.5, rtol=1e-15)


def test_stoch_integral_identity_phi_hand_value():
    # V = sum Y_- dY over jumps [1, 2, -0.5]: 0*1 + 1*2 + 3*(-0.5) = 0.5
    F = StochIntegral(get_smooth("identity"))
    config = hand_config([(0.1, 1.0), (0.5, 2.0), (0.9, -0.5)])
    assert np.isclose(F.evaluate(config)[0], 0.5, rtol=1e-15)
    assert F.evaluate(PointConfiguration.empty()).item() == 0.0


def test_stoch_integral_jump_map_transforms_terminal_value():
    F = StochIntegral(get_smooth("affine", a=0.0, b=1.0), get_smooth("tanh"))
    config = hand_config([(0.1, 1.0), (0.5, 2.0)])
    assert np.isclose(F.evaluate(config)[0], np.tanh(1.0) + np.tanh(2.0), rtol=1e-14)


@pytest.mark.parametrize("phi_name,h_name", [
    ("sin", "identity"), ("identity", "tanh"), ("tanh", "tanh"), ("cos", "identity")])
def test_stoch_insertion_shortcut_matches_rebuild(phi_name, h_name):
    F = StochIntegral(get_smooth(phi_name), get_smooth(h_name))
    gen = synth_gen(7)
    for trial in range(10):
        config = random_config(gen, 5)
        alpha = float(gen.random())
        while np.any(config.times == alpha):
            alpha = float(gen.random())
        x = np.array([gen.random() * 3.0 - 1.5])
        fast = F.evaluate_with_insertion(config, alpha, x)
        slow = F.evaluate(config.with_insertion(alpha, x))
        assert np.allclose(fast, slow, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("phi_name,h_name", [
    ("sin", "identity"), ("sin", "tanh"), ("affine", "identity")])
def test_stoch_jacobian_matches_finite_differences(phi_name, h_name):
    F = StochIntegral(get_smooth(phi_name), get_smooth(h_name))
    config = hand_config([(0.2, 0.8), (0.5, -1.1), (0.8, 0.4)])
    for alpha, x in [(0.1, 0.6), (0.35, -0.9), (0.95, 1.3)]:
        J = F.mark_jacobian(config, alpha, np.array([x]))
        fd = fd_insertion_jacobian(F, config, alpha, [x])
        assert np.allclose(J, fd, rtol=1e-6, atol=1e-8)


def test_stoch_closed_form_gamma_matches_suffix_oracle(structure):
    # Gamma = sum_i x_i^2 (phi(Y_i-) + sum_{j>i} phi'(Y_j-) dY_j)^2 for h = id.
    phi = get_smooth("sin")
    F = StochIntegral(phi)
    config = hand_config([(0.1, 0.9), (0.4, -0.7), (0.6, 1.4), (0.85, 0.3)])
    jumps = config.marks[:, 0]
    prefix = np.concatenate([[0.0], np.cumsum(jumps)])
    total = 0.0
    for i in range(len(jumps)):
        coeff = phi.value(prefix[i])
        for j in range(i + 1, len(jumps)):
            coeff += phi.deriv(prefix[j]) * jumps[j]
        total += jumps[i] ** 2 * coeff ** 2
    got = F.closed_form_gamma(config, structure)[0, 0]
    assert np.isclose(got, total, rtol=1e-13)


# ---------------------------------------------------------------------------
# Running supremum


def test_running_sup_positive_jumps_no_drift_is_terminal_value():
    F = RunningSupremum()
    config = hand_config([(0.2, 1.0), (0.6, 0.5), (0.9, 2.0)])
    assert np.isclose(F.evaluate(config)[0], 3.5, rtol=1e-15)
    assert F.evaluate(PointConfiguration.empty()).item() == 0.0


def test_running_sup_with_drift_path_hand_value():
    k_path = PiecewisePath((0.0, 0.5), (0.0, 2.0))
    F = RunningSupremum(k_path=k_path)
    config = hand_config([(0.2, 1.0), (0.7, -0.5)])
    # running levels: 0, 1 (atom), 3 (K step), 2.5 (atom): sup = 3
    assert np.isclose(F.evaluate(config)[0], 3.0, rtol=1e-15)


def test_running_sup_rejects_atom_on_grid_time():
    k_path = PiecewisePath((0.0, 0.5), (0.0, 2.0))
    F = RunningSupremum(k_path=k_path)
    config = hand_config([(0.5, 1.0)])
    with pytest.raises(PreconditionError):
        F.evaluate(config)
    with pytest.raises(InvalidInput):
        RunningSupremum(k_path=PiecewisePath.zero(dim=2))


def test_running_sup_insertion_shortcut_matches_rebuild():
    k_path = PiecewisePath((0.0, 0.3, 0.7), (0.2, -0.5, 1.0))
    F = RunningSupremum(get_smooth("tanh"), k_path)
    gen = synth_gen(8)
    for trial in range(10):
        config = random_config(gen, 4)
        alpha = float(gen.random())
        while np.any(config.times == alpha) or alpha in (0.3, 0.7):
            alpha = float(gen.random())
        x = np.array([gen.random() * 4.0 - 2.0])
        fast = F.evaluate_with_insertion(config, alpha, x)
        slow = F.evaluate(config.with_insertion(alpha, x))
        assert np.allclose(fast, slow, rtol=1e-12, atol=1e-12)


def test_running_sup_jacobian_is_gated_by_where_the_sup_sits():
    F = RunningSupremum()
    config = hand_config([(0.3, 5.0), (0.8, -0.2)])
    # Tiny mark inserted after the big jump cannot move the sup from 5.0 side
    # unless it lands on the suffix that still attains it.
    J_live = F.mark_jacobian(config, 0.5, np.array([0.1]))
    assert J_live[0, 0] == 1.0
    # Insert before the big jump: the suffix still carries the sup, slope 1.
    config2 = hand_config([(0.3, -4.0), (0.8, -0.2)])
    J_dead = F.mark_jacobian(config2, 0.5, np.array([-1.0]))
    assert J_dead[0, 0] == 0.0
    fd = fd_insertion_jacobian(F, config, 0.5, [0.1])
    assert np.allclose(J_live, fd, atol=1e-9)


def test_running_sup_closed_form_matches_prefix_suffix_oracle(structure):
    k_path = PiecewisePath((0.0, 0.35, 0.75), (0.1, 0.9, -0.4))
    F = RunningSupremum(k_path=k_path)
    config = hand_config([(0.2, 1.1), (0.5, -0.8), (0.9, 0.6)])
    # test-local oracle: merge events, compare prefix and suffix running sups
    events = sorted(
        [(t, x, True) for t, x in zip(config.times, config.marks[:, 0])]
        + [(t, d, False) for t, d in k_path.increment_events()])
    h0 = k_path.initial
    levels = [h0]
    for _, d, _ in events:
        levels.append(levels[-1] + d)
    total = 0.0
    for k, (t, d, is_atom) in enumerate(events):
        if not is_atom:
            continue
        before = max(levels[:k + 1])
        after = max(levels[k + 1:])
        ind = 1.0 if after >= before else 0.0
        total += d * d * ind
    got = F.closed_form_gamma(config, structure)[0, 0]
    assert np.isclose(got, total, rtol=1e-13)


# ---------------------------------------------------------------------------
# Triangular system


def test_triangular_empty_config_returns_initial_state():
    F = TriangularSystem(z0=(0.5, -1.0, 2.0))
    out = F.evaluate(PointConfiguration.empty(mark_dim=2))
    assert np.allclose(out, [0.5, -1.0, 2.0], rtol=0, atol=0)


def test_triangular_hand_value():
    F = TriangularSystem()
    config = hand_config([(0.3, (1.0, 0.5)), (0.6, (-0.5, 0.2))])
    # Z1 = 0.5; Z2 = 0.5 + 2*1*(-0.5) + 0.2 = -0.3; Z3 = 1.0 - 0.5 + 0.4 = 0.9
    assert np.allclose(F.evaluate(config), [0.5, -0.3, 0.9], rtol=1e-14)


def test_triangular_jacobian_matches_finite_differences():
    F = TriangularSystem(z0=(0.2, 0.0, -0.1))
    config = hand_config([(0.3, (1.0, 0.5)), (0.6, (-0.5, 0.2))])
    x = np.array([0.7, -0.3])
    J = F.mark_jacobian(config, 0.45, x)
    c = 0.2 + 0.5
    assert np.allclose(J, [[1.0, 0.0], [2 * c, 1.0], [c, 2.0]], rtol=1e-14)
    fd = fd_insertion_jacobian(F, config, 0.45, x)
    assert np.allclose(J, fd, rtol=1e-7, atol=1e-8)
    with pytest.raises(InvalidInput):
        TriangularSystem(z0=(0.0, 0.0))


# ---------------------------------------------------------------------------
# Systems of stochastic integrals


def _vector_oracle(psi, h, s_path, config, z0=None):
    """Test-local replay of R = Int psi(Z_-) dZ over merged events."""
    events = [(t, np.array([float(h.value(x)), 0.0]))
              for t, x in zip(config.times, config.marks[:, 0])]
    events += [(t, np.asarray(d, dtype=float)) for t, d in s_path.increment_events()]
    events.sort(key=lambda e: e[0])
    z = np.asarray(s_path.initial, dtype=float).copy()
    r = np.zeros(2)
    for _, dz in events:
        r += psi.psi(z) @ dz
        z += dz
    return r


def test_vector_integral_matches_event_replay():
    s_path = PiecewisePath((0.0, 0.4, 0.8), ((0.1, -0.2), (0.3, 0.1), (-0.2, 0.4)))
    psi = MatrixSmooth("mixed_trig")
    h = get_smooth("tanh")
    F = VectorStochIntegral(psi, h, s_path)
    config = hand_config([(0.25, 0.8), (0.55, -0.6), (0.9, 1.1)])
    assert np.allclose(F.evaluate(config),
                       _vector_oracle(psi, h, s_path, config), rtol=1e-13)
    # no atoms: the auxiliary path alone drives the integral
    empty = PointConfiguration.empty()
    assert np.allclose(F.evaluate(empty),
                       _vector_oracle(psi, h, s_path, empty), rtol=1e-13)


def test_vector_integral_insertion_shortcut_matches_rebuild():
    s_path = PiecewisePath((0.0, 0.4), ((0.0, 0.1), (0.2, -0.3)))
    F = VectorStochIntegral(MatrixSmooth("mixed_trig"), get_smooth("identity"), s_path)
    config = hand_config([(0.25, 0.8), (0.55, -0.6)])
    for alpha, x in [(0.1, 0.5), (0.5, -1.2), (0.95, 0.9)]:
        fast = F.evaluate_with_insertion(config, alpha, np.array([x]))
        slow = F.evaluate(config.with_insertion(alpha, x))
        assert np.allclose(fast, slow, rtol=1e-12, atol=1e-13)


def test_vector_integral_jacobian_matches_finite_differences():
    s_path = PiecewisePath((0.0, 0.4, 0.8), ((0.1, -0.2), (0.3, 0.1), (-0.2, 0.4)))
    F = VectorStochIntegral(MatrixSmooth("mixed_trig"), get_smooth("tanh"), s_path)
    config = hand_config([(0.25, 0.8), (0.55, -0.6), (0.9, 1.1)])
    for alpha, x in [(0.1, 0.5), (0.45, -0.7), (0.7, 1.2)]:
        J = F.mark_jacobian(config, alpha, np.array([x]))
        assert J.shape == (2, 1)
        fd = fd_insertion_jacobian(F, config, alpha, [x])
        assert np.allclose(J, fd, rtol=1e-6, atol=1e-8)


def test_first_column_gamma_exact_when_coupling_is_separable(structure):
    # sep_trig keeps z1 out of the other columns; S^1 stays flat.
    s_path = PiecewisePath((0.0, 0.4), ((0.0, 0.1), (0.0, 0.6)))
    F = VectorStochIntegral(MatrixSmooth("sep_trig"), get_smooth("identity"), s_path)
    config = hand_config([(0.25, 0.8), (0.55, -0.6), (0.9, 1.1)])
    full = F.closed_form_gamma(config, structure)
    first = F.gamma_first_column_only(config, structure)
    assert np.allclose(full, first, rtol=1e-13, atol=1e-15)


def test_first_column_gamma_differs_once_columns_couple(structure):
    s_path = PiecewisePath((0.0, 0.4), ((0.1, -0.2), (0.5, 0.3)))
    F = VectorStochIntegral(MatrixSmooth("mixed_trig"), get_smooth("identity"), s_path)
    config = hand_config([(0.25, 0.8), (0.55, -0.6), (0.9, 1.1)])
    full = F.closed_form_gamma(config, structure)
    first = F.gamma_first_column_only(config, structure)
    assert np.max(np.abs(full - first)) > 1e-3


def test_vector_integral_rejects_mismatched_path_dim():
    with pytest.raises(InvalidInput):
        VectorStochIntegral(MatrixSmooth("sep_trig"), get_smooth("identity"),
                            PiecewisePath.zero(dim=1))


# ---------------------------------------------------------------------------
# Composition and stacking


def test_composite_sum_of_linear_parts(uniform_measure):
    F = make_functional("composite", uniform_measure, parts="x; x2", map="sum")
    config = hand_config([(0.2, 1.2), (0.7, 1.8)])
    parts = [LinearCompensated(get_field(n), uniform_measure) for n in ("x", "x2")]
    want = sum(p.evaluate(config)[0] for p in parts)
    assert np.isclose(F.evaluate(config)[0], want, rtol=1e-14)
    assert F.output_dim == 1


def test_composite_accepts_prebuilt_parts(uniform_measure):
    F1 = LinearCompensated(get_field("x"), uniform_measure)
    F2 = StochIntegral(get_smooth("sin"))
    F = make_functional("composite", parts=(F1, F2), map="prod2")
    config = hand_config([(0.2, 1.2), (0.7, 1.8)])
    assert np.isclose(F.evaluate(config)[0],
                      F1.evaluate(config)[0] * F2.evaluate(config)[0], rtol=1e-14)


def test_composite_jacobian_is_chain_rule(uniform_measure):
    F1 = LinearCompensated(get_field("x"), uniform_measure)
    F2 = LinearCompensated(get_field("x2"), uniform_measure)
    F = Composite(SmoothMap("prod2"), (F1, F2))
    config = hand_config([(0.2, 1.2), (0.7, 1.8)])
    J = F.mark_jacobian(config, 0.5, np.array([1.5]))
    fd = fd_insertion_jacobian(F, config, 0.5, [1.5])
    assert np.allclose(J, fd, rtol=1e-6, atol=1e-8)


def test_composite_validation(uniform_measure):
    with pytest.raises(InvalidInput):
        Composite(SmoothMap("prod2"),
                  (LinearCompensated(get_field("x"), uniform_measure),))
    with pytest.raises(InvalidInput):
        Composite(SmoothMap("sum"), ())


def test_stacked_concatenates_parts_and_jacobians(uniform_measure):
    F1 = LinearCompensated(get_field("x"), uniform_measure)
    F2 = StochIntegral(get_smooth("sin"))
    S = Stacked((F1, F2))
    config = hand_config([(0.2, 1.2), (0.7, 1.8)])
    assert S.output_dim == 2
    assert np.allclose(S.evaluate(config),
                       [F1.evaluate(config)[0], F2.evaluate(config)[0]])
    J = S.mark_jacobian(config, 0.5, np.array([1.5]))
    assert J.shape == (2, 1)
    assert np.allclose(J[0], F1.mark_jacobian(config, 0.5, np.array([1.5]))[0])
    assert S.has_analytic_jacobian


def test_make_functional_rejects_unknown_input(uniform_measure):
    with pytest.raises(InvalidInput, match="unknown functional family"):
        make_functional("no_such_family")
    with pytest.raises(InvalidInput, match="unexpected"):
        make_functional("stoch_integral", bogus=1.0)
    with pytest.raises(InvalidInput):
        make_functional("linear")  # compensator needs the measure


def test_describe_mentions_the_ingredients(uniform_measure):
    assert "sin" in StochIntegral(get_smooth("sin")).describe()
    assert "x2" in LinearCompensated(get_field("x2"), uniform_measure).describe()
