"""Command line interface.

One run = one config file + one subcommand. The config format is a flat
INI-style text with four sections: [measure], [functional], [run],
[tolerances]. Parsing is strict: every unknown section, unknown key,
duplicate, or untypable value is reported with its line number, all at
once, with a close-match suggestion where one exists.

Exit codes: 0 success, 1 usage or configuration error, 2 scientific
failure (a gate in the requested task did not hold).

All artifacts are deterministic for a fixed (config, seed): CSVs are
bit-identical across worker counts because every sample owns its own
counter-based RNG stream and reductions happen in the parent in index
order. Wall-clock runtime appears only in report.txt, never in a CSV.
"""

from __future__ import annotations

import argparse
import difflib
import hashlib
import os
import sys
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import __version__, rng
from ._backend import BACKEND
from .chaos import exponential_identity_residuals
from .diagnostics import (DET_TOL_SCALE, RANK_TOL, kde, kde2d, parallel_chunks,
                          report_lines, run_monte_carlo, write_csv,
                          write_report, write_svg_line)
from .errors import ConfigError, InvalidInput, LentParticleError
from .functionals import FAMILIES, PiecewisePath, make_functional
from .intensity import compensator_of_field, levy_structure, make_measure
from .lent_particle import SharpSampler, carre_du_champ
from .point_process import laplace_characteristic, sample_configuration
from .registry import get_field

SEED_ENV_VAR = "LENTPARTICLE_SEED"

_PAIR_COMPONENT_KEYS = ("preset", "beta", "c", "lo", "hi", "mass", "two_sided")

_MEASURE_KEYS = {
    "preset": str, "T": float, "eps": float, "beta": float, "c": float,
    "lo": float, "hi": float, "mass": float, "two_sided": bool,
}
for _pref in ("first_", "second_"):
    for _k in _PAIR_COMPONENT_KEYS:
        _MEASURE_KEYS[_pref + _k] = _MEASURE_KEYS[_k]

_FUNCTIONAL_KEYS = {
    "family": str, "field": str, "field_a": float, "field_b": float,
    "phi": str, "phi_a": float, "phi_b": float, "phi_c": float,
    "h": str, "h_a": float, "h_b": float, "h_c": float,
    "psi": str, "z0": "floats", "map": str, "parts": str,
    "k_kind": str, "k_steps": int, "k_scale": float,
    "s_kind": str, "s_steps": int, "s_scale": float,
}

_RUN_KEYS = {
    "task": str, "n_samples": int, "seed": int, "workers": int, "out": str,
    "plots": bool, "mode": str, "fd_step": float, "n_draws": int,
    "n_configs": int, "n_trials": int, "n_max": int,
}

_TOLERANCE_KEYS = {
    "se_multiplier": float, "rel_tol": float, "chaos_tol": float,
    "det_tol_scale": float, "rank_tol": float,
}

_SCHEMA = {
    "measure": _MEASURE_KEYS,
    "functional": _FUNCTIONAL_KEYS,
    "run": _RUN_KEYS,
    "tolerances": _TOLERANCE_KEYS,
}

_RUN_DEFAULTS = {
    "n_samples": 10000, "seed": 42, "workers": 1, "out": "out", "plots": False,
    "mode": "auto", "fd_step": 1e-5, "n_draws": 10000, "n_configs": 5,
    "n_trials": 20, "n_max": 12,
}

_TOL_DEFAULTS = {
    "se_multiplier": 3.0, "rel_tol": 1e-6, "chaos_tol": 1e-8,
    "det_tol_scale": DET_TOL_SCALE, "rank_tol": RANK_TOL,
}

TASKS = ("simulate", "gamma", "sharp", "chaos", "laplace", "diagnose", "verify")

_TRUE_WORDS = {"true", "1", "yes", "on"}
_FALSE_WORDS = {"false", "0", "no", "off"}


@dataclass(frozen=True)
class RunConfig:
    """Typed view of one parsed config file. Only explicit keys are stored;

    defaults are applied at access time so render/parse round-trips are
    exact.
    """

    measure: dict = dc_field(default_factory=dict)
    functional: dict = dc_field(default_factory=dict)
    run: dict = dc_field(default_factory=dict)
    tolerances: dict = dc_field(default_factory=dict)

    def run_value(self, key):
        return self.run.get(key, _RUN_DEFAULTS.get(key))

    def tol(self, key):
        return self.tolerances.get(key, _TOL_DEFAULTS[key])

    @property
    def task(self):
        return self.run.get("task")

    @property
    def seed(self):
        return self.run_value("seed")

    @property
    def workers(self):
        return self.run_value("workers")

    @property
    def out(self):
        return self.run_value("out")


def _type_name(kind):
    if kind == "floats":
        return "comma-separated floats"
    return kind.__name__


def _parse_value(kind, raw):
    if kind is str:
        return raw
    if kind is bool:
        word = raw.lower()
        if word in _TRUE_WORDS:
            return True
        if word in _FALSE_WORDS:
            return False
        raise ValueError(raw)
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    if kind == "floats":
        parts = [p.strip() for p in raw.split(",")]
        return tuple(float(p) for p in parts)
    raise ValueError(f"unhandled schema type {kind!r}")


def parse_config(text):
    """Parse config text into a RunConfig, collecting every error at once."""
    sections = {name: {} for name in _SCHEMA}
    errors = []
    current = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                errors.append(f"line {ln}: malformed section header {line!r}")
                current = "__skip__"
                continue
            name = line[1:-1].strip()
            if name not in _SCHEMA:
                close = difflib.get_close_matches(name, _SCHEMA, 1)
                hint = f"; did you mean [{close[0]}]?" if close else ""
                errors.append(f"line {ln}: unknown section [{name}]{hint}")
                current = "__skip__"
            else:
                current = name
            continue
        if "=" not in line:
            errors.append(f"line {ln}: expected key = value, got {line!r}")
            continue
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if current == "__skip__":
            continue
        if current is None:
            errors.append(f"line {ln}: key {key!r} appears before any section header")
            continue
        schema = _SCHEMA[current]
        if key not in schema:
            close = difflib.get_close_matches(key, schema, 1)
            hint = f"; did you mean {close[0]!r}?" if close else ""
            errors.append(f"line {ln}: unknown key {key!r} in [{current}]{hint}")
            continue
        if key in sections[current]:
            errors.append(f"line {ln}: duplicate key {key!r} in [{current}]")
            continue
        try:
            sections[current][key] = _parse_value(schema[key], val)
        except ValueError:
            errors.append(
                f"line {ln}: value {val!r} for {key!r} is not a valid "
                f"{_type_name(schema[key])}")
    if errors:
        raise ConfigError(errors)
    return RunConfig(measure=sections["measure"], functional=sections["functional"],
                     run=sections["run"], tolerances=sections["tolerances"])


def _render_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(repr(float(p)) for p in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_config(cfg):
    """Canonical text form; parse(render(cfg)) == cfg."""
    out = []
    for section in _SCHEMA:
        entries = getattr(cfg, section)
        if not entries:
            continue
        out.append(f"[{section}]")
        for key in sorted(entries):
            out.append(f"{key} = {_render_value(entries[key])}")
        out.append("")
    return "\n".join(out)


def config_hash(cfg):
    return hashlib.sha256(render_config(cfg).encode("utf-8")).hexdigest()[:16]


def load_config_file(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"cannot read config file {path}: {exc}"]) from None
    return parse_config(text)


def build_measure(cfg):
    """Instantiate the measure described by [measure]."""
    params = dict(cfg.measure)
    preset = params.pop("preset", None)
    if preset is None:
        raise ConfigError(["[measure] needs a preset (power_law, "
                           "symmetric_power_law, uniform, pair)"])
    shared = {k: params.pop(k) for k in ("T", "eps") if k in params}
    try:
        if preset == "pair":
            components = []
            for pref in ("first_", "second_"):
                comp = {k[len(pref):]: v for k, v in params.items()
                        if k.startswith(pref)}
                for k in list(params):
                    if k.startswith(pref):
                        params.pop(k)
                comp_preset = comp.pop("preset", None)
                if comp_preset is None:
                    raise ConfigError(
                        [f"[measure] pair needs {pref}preset"])
                if "mass" in comp:
                    comp["total"] = comp.pop("mass")
                components.append(make_measure(comp_preset, **shared, **comp))
            if params:
                raise ConfigError(
                    [f"[measure] pair does not take key {k!r}" for k in sorted(params)])
            return make_measure("pair", first=components[0], second=components[1])
        bad = [k for k in params if k.startswith(("first_", "second_"))]
        if bad:
            raise ConfigError(
                [f"[measure] key {k!r} only applies to preset = pair" for k in bad])
        if "mass" in params:
            params["total"] = params.pop("mass")
        return make_measure(preset, **shared, **params)
    except TypeError as exc:
        raise ConfigError([f"[measure] {exc}"]) from None
    except InvalidInput as exc:
        raise ConfigError([f"[measure] {exc}"]) from None


def _build_walk(kind, steps, scale, T, seed, stream_index, dim):
    if kind in (None, "zero"):
        return None
    if kind != "walk":
        raise ConfigError([f"[functional] path kind {kind!r} not one of zero, walk"])
    gen = rng.stream(seed, rng.AUX_PATH, stream_index)
    return PiecewisePath.random_walk(T, steps, scale, gen, dim=dim)


def build_functional(cfg, measure, seed):
    """Instantiate the functional described by [functional].

    Auxiliary paths (k_kind/s_kind = walk) are drawn once from the run
    seed's auxiliary-path stream and then fixed for the whole run.
    """
    params = dict(cfg.functional)
    family = params.pop("family", None)
    if family is None:
        raise ConfigError([f"[functional] needs a family; known: {FAMILIES}"])
    k_path = _build_walk(params.pop("k_kind", None), params.pop("k_steps", 8),
                         params.pop("k_scale", 1.0), measure.T, seed, 0, 1)
    if k_path is not None:
        params["k_path"] = k_path
    s_path = _build_walk(params.pop("s_kind", None), params.pop("s_steps", 8),
                         params.pop("s_scale", 0.3), measure.T, seed, 1, 2)
    if s_path is not None:
        params["s_path"] = s_path
    try:
        return make_functional(family, measure=measure, **params)
    except InvalidInput as exc:
        raise ConfigError([f"[functional] {exc}"]) from None


def _chaos_field(cfg):
    params = dict(cfg.functional)
    params.pop("family", None)
    name = params.pop("field", None)
    a = params.pop("field_a", None)
    b = params.pop("field_b", None)
    if name is None:
        raise ConfigError(["[functional] needs field = <name> for this task"])
    if params:
        raise ConfigError(
            [f"[functional] key {k!r} is not used by this task" for k in sorted(params)])
    try:
        return get_field(name, a, b)
    except InvalidInput as exc:
        raise ConfigError([f"[functional] {exc}"]) from None


# ---------------------------------------------------------------------------
# Tasks

def _common_lines(cfg, extra, t0):
    lines = [
        f"tool: lentparticle {__version__}",
        f"task: {cfg.task}",
        f"config sha256: {config_hash(cfg)}",
        f"seed: {cfg.seed}",
        f"workers: {cfg.workers}",
        f"backend: {BACKEND}",
    ]
    lines += extra
    lines.append(f"runtime seconds: {time.perf_counter() - t0:.3f}")
    return lines


def _task_simulate(cfg, out_dir):
    t0 = time.perf_counter()
    measure = build_measure(cfg)
    n = cfg.run_value("n_samples")
    p = measure.mark_dim
    header = ["sample", "atom", "t"] + [f"x{k + 1}" for k in range(p)]
    rows = []
    counts = np.zeros(n, dtype=np.int64)
    for i in range(n):
        config = sample_configuration(measure, cfg.seed, index=i)
        counts[i] = config.count
        for j in range(config.count):
            rows.append((i, j, config.times[j], *config.marks[j]))
    write_csv(out_dir / "configurations.csv", header, rows)
    extra = [
        f"measure: {measure!r}",
        f"samples: {n}",
        f"truncated mass: {measure.mass()!r}",
        f"mean atom count: {counts.mean()!r}",
        f"omitted quadratic mass: {measure.omitted_quadratic_mass()!r}",
    ]
    write_report(out_dir / "report.txt", _common_lines(cfg, extra, t0))
    return 0


def _gamma_chunk(payload, start, stop):
    F, measure, structure, seed, mode, fd_step = payload
    d = F.output_dim
    rows = []
    devs = np.full(stop - start, np.nan)
    for j, i in enumerate(range(start, stop)):
        config = sample_configuration(measure, seed, index=i)
        sample = carre_du_champ(F, config, structure, mode=mode,
                                fd_step=fd_step, measure=measure)
        value = F.evaluate(config)
        eigs = np.linalg.eigvalsh(sample.matrix)
        det = float(np.prod(eigs))
        closed = F.closed_form_gamma(config, structure)
        if closed is not None:
            scale = 1.0 + float(np.linalg.norm(closed))
            devs[j] = float(np.linalg.norm(sample.matrix - closed)) / scale
        rank = int(np.sum(eigs > RANK_TOL * max(eigs.max(), 0.0))) if eigs.max() > 0 else 0
        rows.append((i, config.count, *value, det, *eigs, rank,
                     int(sample.clamped), devs[j]))
    return {"rows": rows, "devs": devs}


def _task_gamma(cfg, out_dir):
    t0 = time.perf_counter()
    measure = build_measure(cfg)
    F = build_functional(cfg, measure, cfg.seed)
    structure = levy_structure(F.mark_dim)
    n = cfg.run_value("n_samples")
    rel_tol = cfg.tol("rel_tol")
    payload = (F, measure, structure, cfg.seed, cfg.run_value("mode"),
               cfg.run_value("fd_step"))
    chunks = parallel_chunks(_gamma_chunk, payload, n, cfg.workers)
    rows = [row for c in chunks for row in c["rows"]]
    devs = np.concatenate([c["devs"] for c in chunks])
    d = F.output_dim
    header = (["sample", "atoms"] + [f"value_{k + 1}" for k in range(d)]
              + ["det"] + [f"eig_{k + 1}" for k in range(d)]
              + ["rank", "clamped", "closed_dev"])
    write_csv(out_dir / "gamma_samples.csv", header, rows)
    have_closed = np.isfinite(devs)
    n_closed = int(have_closed.sum())
    n_bad = int(np.sum(devs[have_closed] > rel_tol))
    worst = float(devs[have_closed].max()) if n_closed else float("nan")
    extra = [
        f"functional: {F.describe()}",
        f"measure: {measure!r}",
        f"samples: {n}",
        f"closed-form checks: {n_closed}",
        f"worst closed-form deviation: {worst!r}",
        f"closed-form tolerance: {rel_tol!r}",
        f"closed-form failures: {n_bad}",
    ]
    write_report(out_dir / "report.txt", _common_lines(cfg, extra, t0))
    if n_bad:
        print(f"gamma: {n_bad} of {n_closed} samples exceed the closed-form "
              f"tolerance {rel_tol} (worst {worst:.3e})", file=sys.stderr)
        return 2
    return 0


def _task_sharp(cfg, out_dir):
    t0 = time.perf_counter()
    measure = build_measure(cfg)
    F = build_functional(cfg, measure, cfg.seed)
    structure = levy_structure(F.mark_dim)
    n_configs = cfg.run_value("n_configs")
    n_draws = cfg.run_value("n_draws")
    k = cfg.tol("se_multiplier")
    d = F.output_dim
    rows = []
    n_bad = 0
    for i in range(n_configs):
        config = sample_configuration(measure, cfg.seed, index=i)
        sampler = SharpSampler(F, config, structure, mode=cfg.run_value("mode"),
                               fd_step=cfg.run_value("fd_step"), measure=measure)
        gamma = carre_du_champ(F, config, structure, mode=cfg.run_value("mode"),
                               fd_step=cfg.run_value("fd_step"), measure=measure).matrix
        gen = rng.stream(cfg.seed, rng.SHARP_NOISE, i)
        mean, se = sampler.mean_square(n_draws, gen)
        for a in range(d):
            for b in range(a, d):
                diff = abs(mean[a, b] - gamma[a, b])
                ok = diff <= k * se[a, b] if se[a, b] > 0 else diff == 0.0
                n_bad += not ok
                rows.append((i, a + 1, b + 1, gamma[a, b], mean[a, b],
                             se[a, b], int(ok)))
    write_csv(out_dir / "sharp_checks.csv",
              ["config", "i", "j", "gamma", "mean_square", "se", "within"], rows)
    extra = [
        f"functional: {F.describe()}",
        f"measure: {measure!r}",
        f"configs: {n_configs}",
        f"draws per config: {n_draws}",
        f"se multiplier: {k!r}",
        f"entries outside the band: {n_bad}",
    ]
    write_report(out_dir / "report.txt", _common_lines(cfg, extra, t0))
    if n_bad:
        print(f"sharp: {n_bad} matrix entries fall outside {k} standard errors",
              file=sys.stderr)
        return 2
    return 0


def _task_chaos(cfg, out_dir):
    t0 = time.perf_counter()
    measure = build_measure(cfg)
    g = _chaos_field(cfg)
    n_trials = cfg.run_value("n_trials")
    n_max = cfg.run_value("n_max")
    tol = cfg.tol("chaos_tol")
    nu_g = compensator_of_field(measure, g)
    rows = []
    finals = np.empty(n_trials)
    monotone = 0
    for i in range(n_trials):
        config = sample_configuration(measure, cfg.seed, index=i)
        res = exponential_identity_residuals(config, g, measure, n_max, nu_g=nu_g)
        finals[i] = res[-1]
        monotone += bool(np.all(np.diff(res) <= 1e-13))
        for n, r in enumerate(res, start=1):
            rows.append((i, n, r))
    write_csv(out_dir / "chaos_residuals.csv", ["trial", "n", "residual"], rows)
    worst = float(finals.max())
    extra = [
        f"integrand: {g!r}",
        f"measure: {measure!r}",
        f"trials: {n_trials}",
        f"orders: 1..{n_max}",
        f"worst final residual: {worst!r}",
        f"residual tolerance: {tol!r}",
        f"monotone residual curves: {monotone} of {n_trials}",
    ]
    write_report(out_dir / "report.txt", _common_lines(cfg, extra, t0))
    if worst >= tol:
        print(f"chaos: final residual {worst:.3e} is not below {tol:.1e}",
              file=sys.stderr)
        return 2
    return 0


def _task_laplace(cfg, out_dir):
    t0 = time.perf_counter()
    measure = build_measure(cfg)
    f = _chaos_field(cfg)
    n = cfg.run_value("n_samples")
    k = cfg.tol("se_multiplier")
    res = laplace_characteristic(measure, f, n, cfg.seed)
    rows = [
        ("estimate_re", res.estimate.real), ("estimate_im", res.estimate.imag),
        ("target_re", res.target.real), ("target_im", res.target.imag),
        ("se_re", res.se_real), ("se_im", res.se_imag),
        ("abs_diff", res.abs_diff),
    ]
    write_csv(out_dir / "laplace.csv", ["quantity", "value"], rows)
    ok = res.within(k)
    extra = [
        f"field: {f!r}",
        f"measure: {measure!r}",
        f"samples: {n}",
        f"estimate: {res.estimate!r}",
        f"target: {res.target!r}",
        f"abs diff: {res.abs_diff!r}",
        f"se (re, im): {res.se_real!r}, {res.se_imag!r}",
        f"within {k!r} se: {ok}",
    ]
    write_report(out_dir / "report.txt", _common_lines(cfg, extra, t0))
    if not ok:
        print(f"laplace: |estimate - target| = {res.abs_diff:.3e} exceeds "
              f"{k} standard errors", file=sys.stderr)
        return 2
    return 0


def _task_diagnose(cfg, out_dir):
    t0 = time.perf_counter()
    measure = build_measure(cfg)
    F = build_functional(cfg, measure, cfg.seed)
    structure = levy_structure(F.mark_dim)
    report = run_monte_carlo(
        F, measure, structure, cfg.run_value("n_samples"), cfg.seed,
        workers=cfg.workers, mode=cfg.run_value("mode"),
        fd_step=cfg.run_value("fd_step"),
        det_tol_scale=cfg.tol("det_tol_scale"), rank_tol=cfg.tol("rank_tol"))
    d = report.output_dim
    header = (["sample", "atoms"] + [f"value_{k + 1}" for k in range(d)]
              + ["det"] + [f"eig_{k + 1}" for k in range(d)]
              + ["rank", "clamped", "ok"])
    rows = []
    for i in range(report.n_samples):
        rows.append((i, report.atom_counts[i], *report.values[i], report.dets[i],
                     *report.eigenvalues[i], report.ranks[i],
                     int(report.clamped[i]), int(report.ok[i])))
    write_csv(out_dir / "gamma_samples.csv", header, rows)
    good = report.values[report.ok]
    wrote_kde = False
    if len(good) >= 2:
        if d == 1:
            est = kde(good[:, 0])
            write_csv(out_dir / "kde.csv", ["x", "density"],
                      list(zip(est.grid, est.density)))
            if cfg.run_value("plots"):
                write_svg_line(out_dir / "kde.svg", est.grid, est.density,
                               title=f"kde of {F.describe()}")
            wrote_kde = True
        else:
            est = kde2d(good[:, :2])
            rows2 = []
            for a, xv in enumerate(est.grid_x):
                for b, yv in enumerate(est.grid_y):
                    rows2.append((xv, yv, est.density[a, b]))
            write_csv(out_dir / "kde.csv", ["x", "y", "density"], rows2)
            if cfg.run_value("plots"):
                marginal = est.density.sum(axis=1) * (est.grid_y[1] - est.grid_y[0])
                write_svg_line(out_dir / "kde.svg", est.grid_x, marginal,
                               title=f"first-component kde of {F.describe()}")
            wrote_kde = True
    extra = [f"functional: {F.describe()}", f"measure: {measure!r}"]
    extra += report_lines(report)
    extra.append(f"kde written: {wrote_kde}")
    write_report(out_dir / "report.txt", _common_lines(cfg, extra, t0))
    return 0


def _task_verify(cfg, out_dir):
    from .acceptance import run_all
    t0 = time.perf_counter()
    results = run_all(seed=cfg.seed, workers=cfg.workers, out_dir=out_dir)
    rows = []
    for idx, res in enumerate(results, start=1):
        status = "PASS" if res.passed else "FAIL"
        print(f"[{status}] criterion {idx:2d} {res.key}: {res.detail}")
        rows.append((idx, res.key, int(res.passed), res.detail.replace(",", ";")))
    write_csv(out_dir / "acceptance.csv",
              ["criterion", "key", "passed", "detail"], rows)
    n_pass = sum(r.passed for r in results)
    extra = [f"criteria passed: {n_pass} of {len(results)}"]
    extra += [f"{r.key}: {'PASS' if r.passed else 'FAIL'}" for r in results]
    write_report(out_dir / "report.txt", _common_lines(cfg, extra, t0))
    if n_pass < len(results):
        print(f"verify: {len(results) - n_pass} criteria failed", file=sys.stderr)
        return 2
    return 0


_TASKS = {
    "simulate": _task_simulate,
    "gamma": _task_gamma,
    "sharp": _task_sharp,
    "chaos": _task_chaos,
    "laplace": _task_laplace,
    "diagnose": _task_diagnose,
    "verify": _task_verify,
}


# ---------------------------------------------------------------------------
# Argument handling

class _Parser(argparse.ArgumentParser):
    """argparse with usage errors on exit code 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="lentparticle",
                     description="carre du champ matrices for Poisson functionals")
    parser.add_argument("--version", action="version",
                        version=f"lentparticle {__version__}")
    sub = parser.add_subparsers(dest="task", metavar="task")
    sub.required = True
    descriptions = {
        "simulate": "sample configurations and write them out",
        "gamma": "compute carre du champ samples, check closed forms",
        "sharp": "check E (F-sharp)^2 = Gamma[F] by Monte Carlo",
        "chaos": "check the pathwise chaos exponential identity",
        "laplace": "check the compensated Laplace functional",
        "diagnose": "rank/determinant statistics and a density estimate",
        "verify": "run the full acceptance battery",
    }
    for task in TASKS:
        p = sub.add_parser(task, help=descriptions[task], description=descriptions[task])
        p.add_argument("--config", help="path to the run config file")
        p.add_argument("--seed", type=int, help="override the run seed")
        p.add_argument("--samples", type=int, help="override run n_samples")
        p.add_argument("--workers", type=int, help="override run workers")
        p.add_argument("--out", help="override the output directory")
        p.add_argument("--plots", action="store_true", help="also write SVG plots")
    return parser


def _resolve_config(args):
    if args.config:
        cfg = load_config_file(args.config)
    elif args.task == "verify":
        cfg = RunConfig()
    else:
        raise ConfigError([f"task {args.task} needs --config"])
    if cfg.task is not None and cfg.task != args.task:
        raise ConfigError(
            [f"[run] task = {cfg.task} does not match the {args.task} subcommand"])
    run = dict(cfg.run)
    run["task"] = args.task
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            run["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(
                [f"{SEED_ENV_VAR}={env_seed!r} is not an integer"]) from None
    if args.seed is not None:
        run["seed"] = args.seed
    if args.samples is not None:
        run["n_samples"] = args.samples
    if args.workers is not None:
        run["workers"] = args.workers
    if args.out is not None:
        run["out"] = args.out
    if args.plots:
        run["plots"] = True
    return RunConfig(measure=cfg.measure, functional=cfg.functional, run=run,
                     tolerances=cfg.tolerances)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else int(exc.code)
    try:
        cfg = _resolve_config(args)
        out_dir = Path(cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        return _TASKS[args.task](cfg, out_dir)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return 1
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except LentParticleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
