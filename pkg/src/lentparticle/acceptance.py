"""The acceptance battery.

Ten numbered criteria, each a standalone function returning a
CriterionResult with a one-line detail string. run_all executes them in
order, reusing the Monte Carlo artifacts of the supremum and triangular
criteria for the reproducibility check at a different worker count.

Each criterion draws its configurations from its own block of stream
indices (criterion number times 10^6) so the batteries never share
samples even though they share the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .chaos import exponential_identity_residuals, multiple_integral
from .diagnostics import (RANK_TOL, parallel_chunks, rank_statistics,
                          rows_to_csv, run_monte_carlo)
from .functionals import (LinearCompensated, RunningSupremum, StochIntegral,
                          TriangularSystem)
from .intensity import (PairMeasure, PowerLawMeasure, SymmetricPowerLawMeasure,
                        UniformMeasure, compensator_of_field, levy_structure)
from .lent_particle import SharpSampler, carre_du_champ
from .point_process import (integrate_N_compensated, laplace_characteristic,
                            sample_configuration)
from .registry import get_field, get_smooth


@dataclass(frozen=True)
class CriterionResult:
    key: str
    title: str
    passed: bool
    detail: str


def _offset(number):
    return number * 1_000_000


def criterion_isometry_linear(seed=42, workers=1, artifacts=None, out_dir=None):
    """Gamma[N~(f)] equals N(gamma[f]) pathwise, analytic and FD routes."""
    structure = levy_structure(1)
    measures = [
        UniformMeasure(T=1.0, total=3.0, lo=1.0, hi=2.0),
        PowerLawMeasure(T=1.0, eps=0.04, beta=0.5, c=1.0),
        SymmetricPowerLawMeasure(T=1.0, eps=0.04, beta=0.5, c=1.0),
    ]
    field_names = ["x", "x2", "sin_x", "tx", "rational"]
    cache = {}
    worst_an = 0.0
    worst_fd = 0.0
    for i in range(500):
        mi = i % len(measures)
        measure = measures[mi]
        config = sample_configuration(measure, seed, index=_offset(1) + i)
        for name in field_names:
            if (mi, name) not in cache:
                cache[(mi, name)] = LinearCompensated(get_field(name), measure)
            F = cache[(mi, name)]
            target = F.closed_form_gamma(config, structure)[0, 0]
            scale = 1.0 + abs(target)
            g_an = carre_du_champ(F, config, structure, mode="analytic").value
            g_fd = carre_du_champ(F, config, structure, mode="fd",
                                  measure=measure).value
            worst_an = max(worst_an, abs(g_an - target) / scale)
            worst_fd = max(worst_fd, abs(g_fd - target) / scale)
    passed = worst_an <= 1e-10 and worst_fd <= 1e-6
    detail = (f"500 configs x 5 fields: worst analytic dev {worst_an:.2e} "
              f"(tol 1e-10) / worst fd dev {worst_fd:.2e} (tol 1e-6)")
    return CriterionResult("isometry_linear", "pathwise isometry of N~", passed, detail)


def criterion_stoch_closed_form(seed=42, workers=1, artifacts=None, out_dir=None):
    """Generic Gamma[V] for the stochastic integral matches the jump sum."""
    structure = levy_structure(1)
    measures = [
        PowerLawMeasure(T=1.0, eps=0.04, beta=0.5, c=1.0),
        UniformMeasure(T=1.0, total=3.0, lo=1.0, hi=2.0),
    ]
    phis = [get_smooth("sin"), get_smooth("affine"), get_smooth("tanh")]
    hs = [get_smooth("identity"), get_smooth("tanh")]
    worst_an = 0.0
    worst_fd = 0.0
    for i in range(200):
        measure = measures[i % 2]
        F = StochIntegral(phis[i % 3], hs[i % 2])
        config = sample_configuration(measure, seed, index=_offset(2) + i)
        closed = F.closed_form_gamma(config, structure)[0, 0]
        scale = 1.0 + abs(closed)
        g_an = carre_du_champ(F, config, structure, mode="analytic").value
        g_fd = carre_du_champ(F, config, structure, mode="fd",
                              measure=measure).value
        worst_an = max(worst_an, abs(g_an - closed) / scale)
        worst_fd = max(worst_fd, abs(g_fd - closed) / scale)
    passed = worst_an <= 1e-6 and worst_fd <= 1e-4
    detail = (f"200 configs: worst analytic dev {worst_an:.2e} (tol 1e-6) / "
              f"worst fd dev {worst_fd:.2e} (tol 1e-4)")
    return CriterionResult("stoch_closed_form", "stochastic integral closed form",
                           passed, detail)


def criterion_sharp_isometry(seed=42, workers=1, artifacts=None, out_dir=None):
    """Mean of (F-sharp)^2 over 10^4 Rademacher draws is within 3 SE of Gamma."""
    structure = levy_structure(1)
    measure = PowerLawMeasure(T=1.0, eps=0.04, beta=0.5, c=1.0)
    families = [
        ("linear", LinearCompensated(get_field("sin_x"), measure)),
        ("stoch_integral", StochIntegral(get_smooth("sin"))),
        ("running_sup", RunningSupremum()),
    ]
    n_draws = 10_000
    worst_z = 0.0
    n_fail = 0
    for fi, (fname, F) in enumerate(families):
        for j in range(20):
            idx = _offset(3) + fi * 1000 + j
            config = sample_configuration(measure, seed, index=idx)
            target = carre_du_champ(F, config, structure).value
            sampler = SharpSampler(F, config, structure)
            gen = rng.stream(seed, rng.SHARP_NOISE, idx)
            mean, se = sampler.mean_square(n_draws, gen)
            diff = abs(mean[0, 0] - target)
            if se[0, 0] > 0:
                z = diff / se[0, 0]
                worst_z = max(worst_z, z)
                n_fail += z > 3.0
            else:
                n_fail += diff > 1e-12 * (1.0 + abs(target))
    passed = n_fail == 0
    detail = (f"3 families x 20 configs x {n_draws} draws: worst |z| "
              f"{worst_z:.2f} (tol 3 SE), {n_fail} outside")
    return CriterionResult("sharp_isometry", "E-hat (F-sharp)^2 = Gamma[F]",
                           passed, detail)


def criterion_variance_identity(seed=42, workers=1, artifacts=None, out_dir=None):
    """Monte Carlo Var N~(f) matches T * integral of f^2 dnu at 10^5 samples."""
    pairs = [
        (UniformMeasure(T=1.0, total=3.0, lo=1.0, hi=2.0), "x"),
        (PowerLawMeasure(T=1.0, eps=0.04, beta=0.5, c=1.0), "x2"),
        (SymmetricPowerLawMeasure(T=1.0, eps=0.04, beta=0.5, c=1.0), "sin_x"),
    ]
    n = 100_000
    worst_z = 0.0
    details = []
    passed = True
    for pi, (measure, fname) in enumerate(pairs):
        field = get_field(fname)
        comp = compensator_of_field(measure, field)
        target = measure.T * measure.integrate_mark(
            lambda x: field.at(0.0, x) ** 2)
        vals = np.empty(n)
        for i in range(n):
            config = sample_configuration(measure, seed,
                                          index=_offset(4) + pi * n + i)
            vals[i] = integrate_N_compensated(config, field, measure,
                                              compensator=comp)
        var = vals.var(ddof=1)
        centered = vals - vals.mean()
        m2 = np.mean(centered ** 2)
        m4 = np.mean(centered ** 4)
        se = np.sqrt((m4 - m2 ** 2) / n)
        z = abs(var - target) / se
        worst_z = max(worst_z, z)
        passed &= z <= 3.0
        details.append(f"{fname}: var {var:.4f} vs {target:.4f} (z {z:.2f})")
    detail = f"{n} samples; " + "; ".join(details) + "; tol 3 SE"
    return CriterionResult("variance_identity", "E N~(f)^2 = nu(f^2)", passed, detail)


def criterion_laplace(seed=42, workers=1, artifacts=None, out_dir=None):
    """MC characteristic functional matches the closed form, Re and Im."""
    measure = UniformMeasure(T=1.0, total=2.0, lo=1.0, hi=2.0)
    n = 100_000
    results = []
    passed = True
    for name in ("one", "x"):
        field = get_field(name)
        res = laplace_characteristic(measure, field, n, seed)
        ok = res.within(3.0)
        passed &= ok
        results.append(f"f={name}: |diff| {res.abs_diff:.2e}, "
                       f"se ({res.se_real:.1e}, {res.se_imag:.1e}), "
                       f"{'ok' if ok else 'FAIL'}")
    detail = f"{n} samples; " + "; ".join(results) + "; tol 3 SE per part"
    return CriterionResult("laplace", "compensated Laplace functional", passed, detail)


def criterion_bell_bruteforce(seed=42, workers=1, artifacts=None, out_dir=None):
    """Bell route equals tuple enumeration; I_n(lambda g) = lambda^n I_n(g)."""
    measure = UniformMeasure(T=1.0, total=3.0, lo=1.0, hi=2.0)
    specs = [("g_sin", -0.5), ("g_rational", -0.4), ("g_const", -0.25),
             ("sin_x", None), ("rational", None)]
    nu_cache = {}
    worst_eq = 0.0
    worst_hom = 0.0
    trials = 0
    idx = _offset(6)
    while trials < 500:
        config = sample_configuration(measure, seed, index=idx)
        idx += 1
        if config.count > 8:
            continue
        name, amp = specs[trials % len(specs)]
        field = get_field(name, amp)
        if name not in nu_cache:
            nu_cache[name] = compensator_of_field(measure, field)
        nu_g = nu_cache[name]
        for n in range(1, 5):
            bell = multiple_integral(config, field, measure, n, "bell", nu_g=nu_g)
            brute = multiple_integral(config, field, measure, n, "bruteforce",
                                      nu_g=nu_g)
            worst_eq = max(worst_eq, abs(bell - brute) / (1.0 + abs(brute)))
        if amp is not None:
            lam = 0.5 + 0.25 * (trials % 8)
            n = 1 + trials % 4
            scaled = get_field(name, amp * lam)
            i_scaled = multiple_integral(config, scaled, measure, n, "bell",
                                         nu_g=lam * nu_g)
            i_base = multiple_integral(config, field, measure, n, "bell",
                                       nu_g=nu_g)
            target = lam ** n * i_base
            worst_hom = max(worst_hom, abs(i_scaled - target) / (1.0 + abs(target)))
        trials += 1
    passed = worst_eq <= 1e-9 and worst_hom <= 1e-10
    detail = (f"500 trials, n <= 4, atoms <= 8: worst bell-vs-brute dev "
              f"{worst_eq:.2e} (tol 1e-9); worst homogeneity dev {worst_hom:.2e} "
              f"(tol 1e-10)")
    return CriterionResult("bell_bruteforce", "multiple integral equivalence",
                           passed, detail)


def criterion_exponential_identity(seed=42, workers=1, artifacts=None, out_dir=None):
    """Chaos partial sums converge to the pathwise exponential, 100 configs.

    The integrand amplitudes are capped at 0.3 so that truncating the
    series at order 12 leaves less than 1e-8 even for configurations in
    the far tail of the atom-count distribution (checked adversarially
    with 10 atoms at the maximizer of |g|).
    """
    measure = UniformMeasure(T=1.0, total=1.5, lo=1.0, hi=2.0)
    specs = [("g_sin", -0.3), ("g_rational", -0.3), ("g_const", -0.2)]
    nu_cache = {}
    n_max = 12
    worst = 0.0
    for i in range(100):
        config = sample_configuration(measure, seed, index=_offset(7) + i)
        name, amp = specs[i % 3]
        field = get_field(name, amp)
        if name not in nu_cache:
            nu_cache[name] = compensator_of_field(measure, field)
        res = exponential_identity_residuals(config, field, measure, n_max,
                                             nu_g=nu_cache[name])
        worst = max(worst, float(res[-1]))
    passed = worst < 1e-8
    detail = (f"100 configs, n_max = {n_max}: worst final residual {worst:.2e} "
              f"(tol 1e-8)")
    return CriterionResult("exponential_identity", "pathwise chaos identity",
                           passed, detail)


def _sup_chunk(payload, start, stop):
    measure, F, seed = payload
    structure = levy_structure(1)
    n = stop - start
    atoms = np.zeros(n, dtype=np.int64)
    gammas = np.zeros(n)
    devs = np.zeros(n)
    for j, i in enumerate(range(start, stop)):
        config = sample_configuration(measure, seed, index=_offset(8) + i)
        atoms[j] = config.count
        closed = F.closed_form_gamma(config, structure)[0, 0]
        generic = carre_du_champ(F, config, structure, mode="analytic").value
        gammas[j] = closed
        devs[j] = abs(generic - closed) / (1.0 + abs(closed))
    return {"atoms": atoms, "gammas": gammas, "devs": devs}


def _run_sup_mc(seed, workers, n=10_000):
    measure = PowerLawMeasure(T=1.0, eps=1e-3, beta=0.5, c=1.0)
    F = RunningSupremum()
    chunks = parallel_chunks(_sup_chunk, (measure, F, seed), n, workers)
    atoms = np.concatenate([c["atoms"] for c in chunks])
    gammas = np.concatenate([c["gammas"] for c in chunks])
    devs = np.concatenate([c["devs"] for c in chunks])
    rows = [(i, atoms[i], gammas[i], devs[i]) for i in range(n)]
    csv_text = rows_to_csv(["sample", "atoms", "gamma", "generic_dev"], rows)
    return atoms, gammas, devs, csv_text


def criterion_sup_positivity(seed=42, workers=1, artifacts=None, out_dir=None):
    """Supremum of a one-sided infinite-activity path: Gamma > 0 a.s."""
    n = 10_000
    atoms, gammas, devs, csv_text = _run_sup_mc(seed, workers, n)
    if artifacts is not None:
        artifacts["sup_csv"] = csv_text
        artifacts["sup_workers"] = workers
    if out_dir is not None:
        with open(f"{out_dir}/sup_positivity.csv", "w", encoding="utf-8",
                  newline="") as fh:
            fh.write(csv_text)
    nonempty = atoms > 0
    n_nonempty = int(nonempty.sum())
    frac_pos = float(np.mean(gammas[nonempty] > 0.0)) if n_nonempty else 0.0
    worst_dev = float(devs.max())
    passed = frac_pos >= 0.99 and worst_dev <= 1e-12
    detail = (f"{n} samples at eps 1e-3 (mean {atoms.mean():.1f} atoms): "
              f"frac(Gamma>0 | nonempty) = {frac_pos:.4f} over {n_nonempty} "
              f"nonempty (tol 0.99); worst generic-vs-closed dev {worst_dev:.2e} "
              f"(tol 1e-12)")
    return CriterionResult("sup_positivity", "supremum density criterion",
                           passed, detail)


def _tri_chunk(payload, start, stop):
    measure, F, seed = payload
    structure = levy_structure(2)
    n = stop - start
    atoms = np.zeros(n, dtype=np.int64)
    eigs = np.zeros((n, 3))
    devs = np.zeros(n)
    for j, i in enumerate(range(start, stop)):
        config = sample_configuration(measure, seed, index=_offset(9) + i)
        atoms[j] = config.count
        closed = F.closed_form_gamma(config, structure)
        generic = carre_du_champ(F, config, structure, mode="analytic").matrix
        devs[j] = (np.linalg.norm(generic - closed)
                   / (1.0 + np.linalg.norm(closed)))
        eigs[j] = np.linalg.eigvalsh(generic)
    return {"atoms": atoms, "eigs": eigs, "devs": devs}


def _run_tri_mc(seed, workers, n=10_000):
    component = PowerLawMeasure(T=1.0, eps=1e-3, beta=0.5, c=1.0)
    measure = PairMeasure(first=component, second=component)
    F = TriangularSystem()
    chunks = parallel_chunks(_tri_chunk, (measure, F, seed), n, workers)
    atoms = np.concatenate([c["atoms"] for c in chunks])
    eigs = np.concatenate([c["eigs"] for c in chunks])
    devs = np.concatenate([c["devs"] for c in chunks])
    dets = np.prod(eigs, axis=1)
    rows = [(i, atoms[i], dets[i], eigs[i, 0], eigs[i, 1], eigs[i, 2], devs[i])
            for i in range(n)]
    csv_text = rows_to_csv(
        ["sample", "atoms", "det", "eig_1", "eig_2", "eig_3", "closed_dev"], rows)
    return atoms, eigs, devs, csv_text


def criterion_triangular_rank(seed=42, workers=1, artifacts=None, out_dir=None):
    """Two independent infinite-activity drivers give full-rank Gamma[Z]."""
    n = 10_000
    atoms, eigs, devs, csv_text = _run_tri_mc(seed, workers, n)
    if artifacts is not None:
        artifacts["tri_csv"] = csv_text
        artifacts["tri_workers"] = workers
    if out_dir is not None:
        with open(f"{out_dir}/triangular_rank.csv", "w", encoding="utf-8",
                  newline="") as fh:
            fh.write(csv_text)
    _, _, frac_full = rank_statistics(eigs, RANK_TOL)
    worst_dev = float(devs.max())
    passed = frac_full >= 0.95 and worst_dev <= 1e-6
    detail = (f"{n} samples at eps 1e-3 (mean {atoms.mean():.1f} atoms): "
              f"frac_full_rank(3) = {frac_full:.4f} (tol 0.95); worst "
              f"closed-form dev {worst_dev:.2e} (tol 1e-6)")
    return CriterionResult("triangular_rank", "system driven by two jump sizes",
                           passed, detail)


def _diag_csv(seed, workers, n=2000):
    """run_monte_carlo artifact for the determinism check."""
    measure = PowerLawMeasure(T=1.0, eps=0.04, beta=0.5, c=1.0)
    F = StochIntegral(get_smooth("sin"))
    structure = levy_structure(1)
    report = run_monte_carlo(F, measure, structure, n, seed, workers=workers)
    rows = [(i, report.atom_counts[i], report.values[i, 0], report.dets[i],
             report.ranks[i]) for i in range(n)]
    return rows_to_csv(["sample", "atoms", "value", "det", "rank"], rows)


def criterion_determinism(seed=42, workers=1, artifacts=None, out_dir=None):
    """Identical CSV bytes under different worker counts, same seed."""
    artifacts = artifacts if artifacts is not None else {}
    base_workers = artifacts.get("sup_workers", workers)
    alt_workers = base_workers + 1
    base_sup = artifacts.get("sup_csv")
    if base_sup is None:
        base_sup = _run_sup_mc(seed, base_workers)[3]
    base_tri = artifacts.get("tri_csv")
    if base_tri is None:
        base_tri = _run_tri_mc(seed, base_workers)[3]
    alt_sup = _run_sup_mc(seed, alt_workers)[3]
    alt_tri = _run_tri_mc(seed, alt_workers)[3]
    diag_a = _diag_csv(seed, base_workers)
    diag_b = _diag_csv(seed, alt_workers)
    checks = {
        "supremum csv": base_sup == alt_sup,
        "triangular csv": base_tri == alt_tri,
        "diagnostics csv": diag_a == diag_b,
    }
    passed = all(checks.values())
    status = ", ".join(f"{k}: {'identical' if v else 'DIFFER'}"
                       for k, v in checks.items())
    detail = f"workers {base_workers} vs {alt_workers}: {status}"
    return CriterionResult("determinism", "bit-identical CSVs across workers",
                           passed, detail)


CRITERIA = (
    ("isometry_linear", criterion_isometry_linear),
    ("stoch_closed_form", criterion_stoch_closed_form),
    ("sharp_isometry", criterion_sharp_isometry),
    ("variance_identity", criterion_variance_identity),
    ("laplace", criterion_laplace),
    ("bell_bruteforce", criterion_bell_bruteforce),
    ("exponential_identity", criterion_exponential_identity),
    ("sup_positivity", criterion_sup_positivity),
    ("triangular_rank", criterion_triangular_rank),
    ("determinism", criterion_determinism),
)


def run_criterion(key, seed=42, workers=1, out_dir=None):
    for k, fn in CRITERIA:
        if k == key:
            return fn(seed=seed, workers=workers, artifacts={}, out_dir=out_dir)
    raise KeyError(f"unknown criterion {key!r}; known: {[k for k, _ in CRITERIA]}")


def run_all(seed=42, workers=1, out_dir=None):
    """Run all criteria in order; returns the list of CriterionResults."""
    artifacts = {}
    results = []
    for _, fn in CRITERIA:
        results.append(fn(seed=seed, workers=workers, artifacts=artifacts,
                          out_dir=out_dir))
    return results
