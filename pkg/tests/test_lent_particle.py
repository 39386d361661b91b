"""Lent particle machinery: insertion Jacobians, Gamma assembly and sharp."""

import numpy as np
import pytest

from lentparticle import rng
from lentparticle.errors import InvalidInput, NumericError, PreconditionError
from lentparticle.functionals import (Composite, LinearCompensated,
                                      PiecewisePath, RunningSupremum, Stacked,
                                      StochIntegral, TriangularSystem,
                                      VectorStochIntegral)
from lentparticle.intensity import CallableStructure, UniformMeasure
from lentparticle.lent_particle import (SharpSampler, carre_du_champ,
                                        epsilon_minus, epsilon_plus,
                                        gamma_of_added_particle,
                                        insertion_jacobian, sharp_sample)
from lentparticle.point_process import (PointConfiguration,
                                        attach_auxiliary_marks,
                                        sample_configuration)
from lentparticle.registry import MatrixSmooth, SmoothMap, get_field, get_smooth

from conftest import hand_config, random_config, synth_gen


def scalar_families(measure):
    return [
        LinearCompensated(get_field("sin_x"), measure),
        StochIntegral(get_smooth("sin"), get_smooth("tanh")),
        RunningSupremum(k_path=PiecewisePath((0.0, 0.45), (0.0, 0.8))),
        VectorStochIntegral(MatrixSmooth("mixed_trig"), get_smooth("identity"),
                            PiecewisePath((0.0, 0.65), ((0.1, -0.2), (0.3, 0.1)))),
    ]


# ---------------------------------------------------------------------------
# Adding and removing particles


def test_epsilon_plus_and_minus_round_trip():
    config = hand_config([(0.2, 1.0), (0.7, -2.0)])
    grown = epsilon_plus(config, 0.5, 3.0)
    assert grown.count == 3
    assert epsilon_minus(grown, 1).times.tolist() == [0.2, 0.7]
    # at an existing atom the added particle is absorbed: identity
    assert epsilon_plus(config, 0.7, 9.9) is config


def test_insertion_jacobian_validates_input(uniform_measure):
    F = LinearCompensated(get_field("x"), uniform_measure)
    config = hand_config([(0.2, 1.5)])
    with pytest.raises(PreconditionError):
        insertion_jacobian(F, config, 0.5, np.array([1.0, 2.0]))
    with pytest.raises(InvalidInput):
        insertion_jacobian(F, config, 0.5, np.array([1.5]), mode="nonsense")


class _EarlyWindowSum:
    """Functional stub ignoring every atom at or after the cutoff time."""

    output_dim = 1
    mark_dim = 1
    has_analytic_jacobian = False
    cutoff = 0.5

    def evaluate(self, config):
        live = config.times < self.cutoff
        return np.array([float(np.sum(np.sin(config.marks[live, 0])))])

    def evaluate_with_insertion(self, config, alpha, x):
        return self.evaluate(config.with_insertion(alpha, x))

    def mark_jacobian(self, config, alpha, x):
        return None


def test_analytic_mode_requires_an_analytic_jacobian():
    config = hand_config([(0.2, 1.0)])
    with pytest.raises(InvalidInput, match="no analytic mark Jacobian"):
        insertion_jacobian(_EarlyWindowSum(), config, 0.6, np.array([1.0]),
                           mode="analytic")


@pytest.mark.parametrize("family_idx", range(4))
def test_fd_jacobian_agrees_with_analytic(uniform_measure, family_idx):
    F = scalar_families(uniform_measure)[family_idx]
    gen = synth_gen(210 + family_idx)
    for trial in range(8):
        config = random_config(gen, 4, lo=0.3, hi=2.0, positive=True)
        alpha = float(gen.random())
        while np.any(config.times == alpha) or alpha in (0.45, 0.65):
            alpha = float(gen.random())
        x = np.array([0.3 + 1.5 * gen.random()])
        ana = insertion_jacobian(F, config, alpha, x, mode="analytic")
        fd = insertion_jacobian(F, config, alpha, x, mode="fd")
        assert np.allclose(ana, fd, rtol=1e-6, atol=1e-8)


def test_fd_jacobian_vector_marks():
    F = TriangularSystem(z0=(0.1, 0.0, 0.0))
    config = hand_config([(0.3, (1.0, 0.5)), (0.6, (-0.5, 0.2))])
    x = np.array([0.7, -0.3])
    ana = insertion_jacobian(F, config, 0.45, x, mode="analytic")
    fd = insertion_jacobian(F, config, 0.45, x, mode="fd")
    assert np.allclose(ana, fd, rtol=1e-7, atol=1e-9)


def test_fd_step_shrinks_near_the_support_boundary():
    measure = UniformMeasure(T=1.0, total=2.0, lo=1.0, hi=2.0)
    F = LinearCompensated(get_field("sin_x"), measure)
    config = hand_config([(0.2, 1.5)])
    x = np.array([1.0 + 1e-6])
    jac = insertion_jacobian(F, config, 0.6, x, mode="fd", measure=measure)
    assert np.isclose(jac[0, 0], np.cos(x[0]), rtol=1e-6)


def test_fd_step_gives_up_when_pinned_to_the_boundary():
    measure = UniformMeasure(T=1.0, total=2.0, lo=1.0, hi=2.0)
    F = LinearCompensated(get_field("sin_x"), measure)
    config = hand_config([(0.2, 1.5)])
    with pytest.raises(NumericError, match="support"):
        insertion_jacobian(F, config, 0.6, np.array([1.0 + 1e-12]),
                           mode="fd", measure=measure)


def test_gamma_of_added_particle_linear_field_is_x_squared(structure, uniform_measure):
    F = LinearCompensated(get_field("x"), uniform_measure)
    config = hand_config([(0.2, 1.5)])
    for x in (1.1, 1.7, 1.95):
        g = gamma_of_added_particle(F, config, 0.6, np.array([x]), structure)
        assert np.isclose(g[0, 0], x * x, rtol=1e-15)


# ---------------------------------------------------------------------------
# Gamma assembly


def test_carre_du_champ_empty_config_is_zero(structure, uniform_measure):
    F = LinearCompensated(get_field("x"), uniform_measure)
    sample = carre_du_champ(F, PointConfiguration.empty(), structure)
    assert sample.value == 0.0
    assert sample.atom_terms.shape == (0, 1, 1)
    assert not sample.clamped


@pytest.mark.parametrize("family_idx", range(4))
def test_carre_du_champ_matches_closed_forms(structure, uniform_measure, family_idx):
    F = scalar_families(uniform_measure)[family_idx]
    gen = synth_gen(230 + family_idx)
    for trial in range(6):
        config = random_config(gen, 5, lo=0.2, hi=1.8, positive=True)
        want = F.closed_form_gamma(config, structure)
        got = carre_du_champ(F, config, structure, mode="analytic")
        assert np.allclose(got.matrix, want, rtol=1e-9, atol=1e-12)
        got_fd = carre_du_champ(F, config, structure, mode="fd")
        assert np.allclose(got_fd.matrix, want, rtol=1e-5, atol=1e-7)


def test_carre_du_champ_triangular_closed_form(structure2):
    F = TriangularSystem(z0=(0.2, -0.1, 0.3))
    gen = synth_gen(240)
    for trial in range(6):
        config = random_config(gen, 4, mark_dim=2)
        want = F.closed_form_gamma(config, structure2)
        got = carre_du_champ(F, config, structure2)
        assert got.matrix.shape == (3, 3)
        assert np.allclose(got.matrix, want, rtol=1e-10, atol=1e-12)


def test_carre_du_champ_is_psd_up_to_noise(structure, uniform_measure):
    families = scalar_families(uniform_measure)
    gen = synth_gen(250)
    for trial in range(30):
        F = families[trial % len(families)]
        config = random_config(gen, 1 + trial % 7, lo=0.2, hi=1.9, positive=True)
        sample = carre_du_champ(F, config, structure)
        eigs = np.linalg.eigvalsh(sample.matrix)
        # the clamp reconstruction itself rounds, so exact 0 is not attainable
        assert eigs[0] >= -1e-14 * max(1.0, abs(np.trace(sample.matrix)))
        assert sample.min_eigenvalue >= -1e-10 * abs(np.trace(sample.matrix))


def test_carre_du_champ_rejects_mismatched_structure(structure2, uniform_measure):
    F = LinearCompensated(get_field("x"), uniform_measure)
    config = hand_config([(0.2, 1.5)])
    with pytest.raises(PreconditionError):
        carre_du_champ(F, config, structure2)


def test_atom_terms_vanish_outside_the_functionals_window(structure):
    # atoms at t >= 0.5 never influence the value, so their lent-particle
    # terms must come out exactly zero
    F = _EarlyWindowSum()
    config = hand_config([(0.1, 0.8), (0.3, -0.4), (0.7, 1.3), (0.9, 0.6)])
    sample = carre_du_champ(F, config, structure, mode="fd")
    assert sample.atom_terms[2, 0, 0] == 0.0
    assert sample.atom_terms[3, 0, 0] == 0.0
    assert sample.atom_terms[0, 0, 0] > 0.0
    live = sample.atom_terms[:2].sum(axis=0)
    assert np.allclose(sample.matrix, live, rtol=1e-12)


def test_chain_rule_through_a_smooth_map(structure, uniform_measure):
    F1 = LinearCompensated(get_field("x"), uniform_measure)
    F2 = StochIntegral(get_smooth("sin"))
    stacked = Stacked((F1, F2))
    composed = Composite(SmoothMap("prod2"), (F1, F2))
    gen = synth_gen(260)
    for trial in range(5):
        config = random_config(gen, 4, lo=0.3, hi=1.9, positive=True)
        grad = SmoothMap("prod2").jacobian(stacked.evaluate(config))
        inner = carre_du_champ(stacked, config, structure).matrix
        outer = carre_du_champ(composed, config, structure).matrix
        assert np.allclose(outer, grad @ inner @ grad.T, rtol=1e-10, atol=1e-13)
        outer_fd = carre_du_champ(composed, config, structure, mode="fd").matrix
        assert np.allclose(outer_fd, grad @ inner @ grad.T, rtol=1e-4, atol=1e-6)


def test_gamma_sample_scalar_accessor(structure, uniform_measure):
    F = TriangularSystem()
    config = hand_config([(0.3, (1.0, 0.5))])
    from lentparticle.intensity import levy_structure
    sample = carre_du_champ(F, config, levy_structure(2))
    with pytest.raises(InvalidInput):
        sample.value


# ---------------------------------------------------------------------------
# The sharp operator


def test_sharp_rows_are_mark_times_derivative(structure, uniform_measure):
    F = LinearCompensated(get_field("sin_x"), uniform_measure)
    config = hand_config([(0.2, 1.1), (0.5, 1.6), (0.8, 1.9)])
    sampler = SharpSampler(F, config, structure)
    marks = config.marks[:, 0]
    assert np.allclose(sampler.rows[:, 0], marks * np.cos(marks), rtol=1e-14)
    assert np.allclose(sampler.gamma(),
                       carre_du_champ(F, config, structure).matrix, rtol=1e-13)


def test_sharp_square_recovers_gamma_exactly_over_all_signs(structure, uniform_measure):
    # with m atoms, averaging (F-sharp)^2 over all 2^m sign vectors is Gamma
    F = StochIntegral(get_smooth("sin"))
    config = hand_config([(0.2, 0.9), (0.5, -0.7), (0.8, 1.4)])
    sampler = SharpSampler(F, config, structure)
    total = np.zeros((1, 1))
    for bits in range(8):
        signs = np.array([1.0 if bits >> k & 1 else -1.0 for k in range(3)])
        v = sampler.sample(signs).vector
        total += np.outer(v, v)
    assert np.allclose(total / 8.0,
                       carre_du_champ(F, config, structure).matrix, rtol=1e-13)


def test_sharp_draws_are_deterministic_and_centered(structure, uniform_measure):
    F = LinearCompensated(get_field("x"), uniform_measure)
    config = sample_configuration(uniform_measure, seed=61, index=0)
    sampler = SharpSampler(F, config, structure)
    a = sampler.draws(64, rng.stream(5, rng.SHARP_NOISE, 0))
    b = sampler.draws(64, rng.stream(5, rng.SHARP_NOISE, 0))
    assert np.array_equal(a, b)
    n = 20000
    vals = sampler.draws(n, rng.stream(5, rng.SHARP_NOISE, 1))[:, 0]
    se = vals.std(ddof=1) / np.sqrt(n)
    assert abs(vals.mean()) <= 3.0 * se


def test_sharp_mean_square_converges_to_gamma(structure, uniform_measure):
    F = StochIntegral(get_smooth("sin"), get_smooth("tanh"))
    config = sample_configuration(uniform_measure, seed=62, index=1)
    sampler = SharpSampler(F, config, structure)
    mean, se = sampler.mean_square(20000, rng.stream(6, rng.SHARP_NOISE, 0))
    gamma = sampler.gamma()
    assert np.all(np.abs(mean - gamma) <= 3.0 * se + 1e-15)


def test_sharp_sample_uses_auxiliary_marks(structure, uniform_measure):
    F = LinearCompensated(get_field("x"), uniform_measure)
    config = sample_configuration(uniform_measure, seed=63, index=2)
    marked = attach_auxiliary_marks(config, seed=63, index=2)
    out = sharp_sample(F, config, structure, marked)
    signs = np.where(marked.r < 0.5, -1.0, 1.0)
    assert np.array_equal(out.noise, signs)
    sampler = SharpSampler(F, config, structure)
    assert np.allclose(out.vector, sampler.rows.T @ signs, rtol=1e-15)
    assert set(np.unique(out.noise)) <= {-1.0, 1.0}


def test_sharp_rejects_unsupported_setups(structure, structure2, uniform_measure):
    config2 = hand_config([(0.3, (1.0, 0.5))])
    with pytest.raises(InvalidInput):
        SharpSampler(TriangularSystem(), config2, structure2)
    flat = CallableStructure("flat", 1, xi_fn=lambda x: np.eye(1))
    F = LinearCompensated(get_field("x"), uniform_measure)
    config = hand_config([(0.2, 1.5)])
    with pytest.raises(InvalidInput):
        SharpSampler(F, config, flat)
    sampler = SharpSampler(F, config, structure)
    with pytest.raises(PreconditionError):
        sampler.sample(np.array([1.0, -1.0]))
