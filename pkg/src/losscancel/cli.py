"""Config-driven command line front end.

Subcommands:

* ``run <config.json>``       execute an experiment, write CSV + manifest
* ``validate <config.json>``  check a config without running anything
* ``presets``                 list built-in configs (``--dump NAME`` prints one)
* ``calibrate <config.json>`` shorthand for running a calibrate config

Exit codes: 0 ok, 2 config error, 3 numeric/leakage error.  The environment
variable LOSSCANCEL_THREADS caps the worker threads used for independent
repetitions of a shot experiment.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .calibration import LossyDevice, ProbeConfig, estimate_gamma, plan_shots, predicted_variance
from .channels import LossParams, decompose_inverse
from .errors import ConfigError, LossCancelError
from .fock import (
    FockState,
    cat_state,
    coherent_state,
    entangled_coherent_state,
    fock_basis_state,
    make_space,
    squeezed_vacuum,
    two_mode_squeezed_vacuum,
)
from .observables import (
    MatrixObservable,
    ProjectorObservable,
    covariance_entry_observable,
    number_observable,
)
from .protocol import (
    DiscretizedGaussianGamma,
    JSet,
    PointMassGamma,
    _loss_bundle,
    analytic_expectations,
    build_heralding,
    derive_rng,
    herald_probabilities,
    mitigated_estimator,
    monte_carlo_run,
    monte_carlo_state_plan,
    simulate_shots,
)
from .fock import BosonicOperator


# ---------------------------------------------------------------------------
# config access with field paths

_sentinel = object()


def _get(cfg: dict, path: str, typ=None, default=_sentinel):
    node = cfg
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            if default is not _sentinel:
                return default
            raise ConfigError(f"missing config field '{path}'")
        node = node[part]
    if typ is not None and not isinstance(node, typ):
        if typ is float and isinstance(node, int) and not isinstance(node, bool):
            return float(node)
        raise ConfigError(
            f"config field '{path}' must be {getattr(typ, '__name__', typ)}, "
            f"got {type(node).__name__}")
    return node


def _gamma_list(cfg: dict, path: str) -> tuple:
    raw = _get(cfg, path, list)
    gam = []
    for i, g in enumerate(raw):
        if not isinstance(g, (int, float)) or isinstance(g, bool):
            raise ConfigError(f"config field '{path}[{i}]' must be a number")
        if not 0.0 <= g < 1.0:
            raise ConfigError(f"config field '{path}[{i}]' must lie in [0, 1)")
        gam.append(float(g))
    if not gam:
        raise ConfigError(f"config field '{path}' must be non-empty")
    return tuple(gam)


def _thread_count() -> int:
    raw = os.environ.get("LOSSCANCEL_THREADS", "")
    try:
        n = int(raw)
        return max(1, n)
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# state / observable / distribution construction

def build_state(cfg: dict) -> FockState:
    family = _get(cfg, "state.family", str)
    cutoffs = _get(cfg, "cutoffs", list)
    tol = float(_get(cfg, "leakage_tol", (int, float), default=1e-10))
    space = make_space(len(cutoffs), cutoffs)
    if family == "squeezed":
        return squeezed_vacuum(space, _get(cfg, "state.r0", (int, float)), leakage_tol=tol)
    if family == "tmsv":
        return two_mode_squeezed_vacuum(space, _get(cfg, "state.r0", (int, float)), leakage_tol=tol)
    if family == "cat":
        return cat_state(space, _get(cfg, "state.alpha", (int, float)),
                         float(_get(cfg, "state.phi", (int, float), default=0.0)),
                         leakage_tol=tol)
    if family == "ecs":
        alpha = _get(cfg, "state.alpha", (int, float))
        beta = _get(cfg, "state.beta", (int, float), default=alpha)
        sign = int(_get(cfg, "state.sign", int, default=-1))
        return entangled_coherent_state(space, alpha, beta, sign, leakage_tol=tol)
    if family == "coherent":
        return coherent_state(space, _get(cfg, "state.alphas", list), leakage_tol=tol)
    if family == "single_photon":
        return fock_basis_state(space, (1,) * space.num_modes)
    if family == "dual_rail":
        n = int(_get(cfg, "state.n_qubits", int))
        if space.num_modes != 2 * n:
            raise ConfigError("config field 'cutoffs' must list two modes per qubit")
        return fock_basis_state(space, (0, 1) * n)
    raise ConfigError(f"config field 'state.family': unknown family {family!r}")


def load_custom_observable(path: str, space) -> MatrixObservable:
    """Plain-text complex matrix: a dimension header then row-major
    "re im" pairs, one matrix element per line."""
    try:
        with open(path) as fh:
            tokens = fh.read().split()
    except OSError as exc:
        raise ConfigError(f"observable file {path!r}: {exc}") from exc
    if not tokens:
        raise ConfigError(f"observable file {path!r} is empty")
    dim = int(tokens[0])
    need = 1 + 2 * dim * dim
    if len(tokens) != need:
        raise ConfigError(
            f"observable file {path!r}: expected {need} numbers, got {len(tokens)}")
    vals = np.array([float(t) for t in tokens[1:]])
    m = (vals[0::2] + 1j * vals[1::2]).reshape(dim, dim)
    if dim != space.dim:
        raise ConfigError(
            f"observable file {path!r}: dimension {dim} does not match the "
            f"space dimension {space.dim}")
    if np.abs(m - m.conj().T).max() > 1e-10:
        raise ConfigError(f"observable file {path!r}: matrix is not Hermitian")
    return MatrixObservable(BosonicOperator(space, m, hermitian_hint=True))


def build_observable(cfg: dict, state0: FockState):
    kind = _get(cfg, "observable.kind", str)
    space = state0.space
    if kind == "projector-on-initial":
        return ProjectorObservable(state0)
    if kind == "number":
        return number_observable(space, int(_get(cfg, "observable.mode", int, default=0)))
    if kind == "quadrature-covariance-entry":
        return covariance_entry_observable(
            space, int(_get(cfg, "observable.k", int)), int(_get(cfg, "observable.l", int)))
    if kind == "custom":
        return load_custom_observable(_get(cfg, "observable.path", str), space)
    raise ConfigError(f"config field 'observable.kind': unknown kind {kind!r}")


def build_gamma_distribution(cfg: dict):
    gam = _gamma_list(cfg, "loss.gamma")
    sd_fraction = float(_get(cfg, "loss.sd_fraction", (int, float), default=0.0))
    if sd_fraction < 0:
        raise ConfigError("config field 'loss.sd_fraction' must be >= 0")
    if sd_fraction == 0.0:
        return PointMassGamma(gam)
    bins = int(_get(cfg, "loss.bins", int, default=21))
    return DiscretizedGaussianGamma(gam, tuple(sd_fraction * g for g in gam), bins=bins)


def build_j_set(cfg: dict, num_modes: int) -> JSet:
    kind = _get(cfg, "j_set.kind", str)
    if kind in ("local", "global"):
        j_max = int(_get(cfg, "j_set.j_max", int))
        return JSet.local(j_max, num_modes) if kind == "local" else JSet.global_(j_max, num_modes)
    if kind == "explicit":
        return JSet.explicit(_get(cfg, "j_set.patterns", list))
    raise ConfigError(f"config field 'j_set.kind': unknown kind {kind!r}")


# ---------------------------------------------------------------------------
# output

def _fmt(x) -> str:
    if isinstance(x, float):
        return "%.17g" % x
    return str(x)


def write_csv(path: str, header: list, rows: list):
    names = list(header)
    if len(set(names)) != len(names):
        raise ConfigError("internal: duplicate CSV column names")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def write_manifest(outdir: str, cfg: dict, outputs: list):
    manifest = {
        "tool": "losscancel",
        "version": __version__,
        "seed": cfg.get("seed"),
        "config": cfg,
        "outputs": outputs,
    }
    path = os.path.join(outdir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return path


# ---------------------------------------------------------------------------
# experiment kinds

def run_bias_sweep(cfg: dict, outdir: str) -> list:
    """Analytic mitigated/unmitigated percentage bias versus J_max."""
    curves = _get(cfg, "curves", list)
    if not curves:
        raise ConfigError("config field 'curves' must be non-empty")
    j_values = [int(j) for j in _get(cfg, "j_max_values", list)]
    if not j_values:
        raise ConfigError("config field 'j_max_values' must be non-empty")
    tol = float(_get(cfg, "leakage_tol", (int, float), default=1e-10))
    rows = []
    for ci, curve in enumerate(curves):
        sub = dict(cfg)
        sub["state"] = curve.get("state")
        if sub["state"] is None:
            raise ConfigError(f"missing config field 'curves[{ci}].state'")
        state0 = build_state(sub)
        gam = _gamma_list({"loss": curve.get("loss", {})}, "loss.gamma")
        params = LossParams(gam)
        obs = build_observable(cfg, state0)
        label = curve.get("label", f"curve{ci}")
        dec = decompose_inverse(state0, params, j_limit=max(j_values), leakage_tol=tol)
        for j_max in j_values:
            rep = analytic_expectations(
                state0, params, obs, JSet.local(j_max, state0.space.num_modes),
                decomposition=dec, leakage_tol=tol)
            rows.append([label, gam[0], j_max,
                         rep.percentage_bias(), rep.unmitigated_percentage_bias(),
                         rep.expected_mitigated, rep.ideal, rep.noisy])
    path = os.path.join(outdir, "bias_sweep.csv")
    write_csv(path, ["label", "gamma", "j_max", "mitigated_percentage_bias",
                     "unmitigated_percentage_bias", "expected_mitigated",
                     "ideal", "noisy"], rows)
    return [path]


def run_overhead_sweep(cfg: dict, outdir: str) -> list:
    """Approximate sampling overhead and amplified squeezing versus mu."""
    curves = _get(cfg, "curves", list)
    mu_values = [float(m) for m in _get(cfg, "mu_values", list)]
    tol = float(_get(cfg, "leakage_tol", (int, float), default=1e-10))
    rows = []
    for ci, curve in enumerate(curves):
        sub = dict(cfg)
        sub["state"] = curve.get("state")
        state0 = build_state(sub)
        gam = _gamma_list({"loss": curve.get("loss", {})}, "loss.gamma")
        params = LossParams(gam)
        j_max = int(curve.get("j_max", 1))
        label = curve.get("label", f"curve{ci}")
        r0 = float(curve["state"].get("r0", 0.0))
        obs = build_observable(cfg, state0)
        j_set = JSet.local(j_max, state0.space.num_modes)
        base = analytic_expectations(state0, params, obs, j_set, leakage_tol=tol)
        noisy_var = None
        for mu in mu_values:
            try:
                setup = build_heralding(state0, params, (mu,) * state0.space.num_modes,
                                        leakage_tol=tol, squeezing_r0=r0 or None)
                probs = herald_probabilities(setup, j_limit=j_set.per_mode_limit())
            except LossCancelError:
                continue
            approx = 0.0
            full = 0.0
            ok = True
            for p, w in base.weights.items():
                if w == 0.0:
                    continue
                pj = probs.get(p, 0.0)
                if pj <= 0.0:
                    ok = False
                    break
                approx += w * w / pj
                if noisy_var is None:
                    nm = base.noisy
                    o = obs.matrix(state0.space)
                    from .channels import apply_loss
                    st = apply_loss(state0, params)
                    noisy_var = float(np.trace(o @ o @ st.density()).real) - nm * nm
                full += w * w / pj * (base.per_channel_variances[p] / noisy_var)
            if not ok:
                continue
            g = setup.g_mu
            gains = g if state0.space.num_modes == 2 else (g[0], g[0])
            t = math.tanh(r0) * float(np.prod(gains)) if r0 else 0.0
            r_amp = math.atanh(t) if t < 1 else math.inf
            rows.append([label, r0, gam[0], j_max, mu, approx, full, r_amp])
    path = os.path.join(outdir, "overhead_sweep.csv")
    write_csv(path, ["label", "r0", "gamma", "j_max", "mu", "overhead_approx",
                     "overhead_with_variance_ratio", "r_amp"], rows)
    return [path]


def run_mismatch_sweep(cfg: dict, outdir: str) -> list:
    """Mitigated expectation versus the assumed loss parameter."""
    state0 = build_state(cfg)
    gam = _gamma_list(cfg, "loss.gamma")
    params = LossParams(gam)
    obs = build_observable(cfg, state0)
    j_set = build_j_set(cfg, state0.space.num_modes)
    tol = float(_get(cfg, "leakage_tol", (int, float), default=1e-10))
    tilde_values = [float(g) for g in _get(cfg, "gamma_tilde_values", list)]
    if not tilde_values:
        raise ConfigError("config field 'gamma_tilde_values' must be non-empty")
    rows = []
    for gt in tilde_values:
        assumed = LossParams.uniform(gt, state0.space.num_modes)
        rep = analytic_expectations(state0, params, obs, j_set,
                                    assumed_params=assumed, leakage_tol=tol)
        rows.append([gt, rep.expected_mitigated, rep.percentage_bias(),
                     rep.unmitigated_percentage_bias(), rep.ideal, rep.noisy])
    path = os.path.join(outdir, "mismatch_sweep.csv")
    write_csv(path, ["gamma_tilde", "expected_mitigated", "mitigated_percentage_bias",
                     "unmitigated_percentage_bias", "ideal", "noisy"], rows)
    return [path]


def run_cat_mc(cfg: dict, outdir: str) -> list:
    """S^2 of the cat-state Monte-Carlo plan over an (alpha, gamma) grid,
    with optional sampled verification runs."""
    from .protocol import cat_mc_s

    alphas = [float(a) for a in _get(cfg, "alpha_values", list)]
    gammas = [float(g) for g in _get(cfg, "gamma_values", list)]
    phi = float(_get(cfg, "state.phi", (int, float), default=0.0))
    shots = int(_get(cfg, "shots", int, default=0))
    seed = int(_get(cfg, "seed", int, default=0))
    tol = float(_get(cfg, "leakage_tol", (int, float), default=1e-10))
    rows = []
    for alpha in alphas:
        for gamma in gammas:
            s = cat_mc_s(alpha, phi, gamma)
            est = math.nan
            if shots > 0:
                cutoffs = _get(cfg, "cutoffs", list)
                space = make_space(len(cutoffs), cutoffs)
                plan = monte_carlo_state_plan(
                    space, "cat", {"alpha": alpha, "phi": phi},
                    LossParams.uniform(gamma, 1), leakage_tol=tol)
                rho0 = cat_state(space, alpha, phi, leakage_tol=tol)
                rep = monte_carlo_run(plan, None, ProjectorObservable(rho0), shots,
                                      PointMassGamma((gamma,)),
                                      derive_seed(seed, alpha, gamma))
                est = rep.mitigated_mean
            rows.append([alpha, gamma, phi, s, s * s, est])
    path = os.path.join(outdir, "cat_mc.csv")
    write_csv(path, ["alpha", "gamma", "phi", "s", "s_squared", "estimate"], rows)
    return [path]


def derive_seed(seed: int, *parts) -> int:
    rng = derive_rng(seed, "sweep-" + "-".join(_fmt(p) for p in parts))
    return int(rng.integers(0, 2 ** 63))


def _hist_rows(samples, bins, label_cols):
    counts, edges = np.histogram(samples, bins=bins)
    return [list(label_cols) + [edges[i], edges[i + 1], int(c)]
            for i, c in enumerate(counts)]


def run_tmsv_cov(cfg: dict, outdir: str) -> list:
    """Shot-level covariance-entry estimation for a lossy two-mode squeezed
    vacuum; emits per-experiment estimates and result histograms."""
    state0 = build_state(cfg)
    gam = _gamma_list(cfg, "loss.gamma")
    params = LossParams(gam)
    mu_cfg = _get(cfg, "mu")
    r0 = float(_get(cfg, "state.r0", (int, float)))
    tol = float(_get(cfg, "leakage_tol", (int, float), default=1e-3))
    shot_tol = float(_get(cfg, "shot_leakage_tol", (int, float), default=0.05))
    j_set = build_j_set(cfg, 2)
    dist = build_gamma_distribution(cfg)
    shots = int(_get(cfg, "shots", int))
    n_exp = int(_get(cfg, "experiments", int, default=1))
    seed = int(_get(cfg, "seed", int))
    entries = _get(cfg, "entries", list, default=[[0, 0], [0, 2]])

    if mu_cfg == "optimize":
        from .protocol import optimize_mu
        obs0 = covariance_entry_observable(state0.space, *entries[0])
        mu_val = optimize_mu(state0, params, obs0, include_variance_ratio=False,
                             leakage_tol=tol)
        mu = (mu_val,) * 2
    else:
        mu = tuple(float(m) for m in mu_cfg)
    setup = build_heralding(state0, params, mu, leakage_tol=tol, squeezing_r0=r0)
    dec = decompose_inverse(state0, params, j_limit=j_set.per_mode_limit(),
                            leakage_tol=tol)

    result_rows, line_rows, hist_rows = [], [], []
    threads = _thread_count()
    for k, l in entries:
        obs = covariance_entry_observable(state0.space, int(k), int(l))
        name = f"sigma_{k}{l}"
        rep_an = analytic_expectations(state0, params, obs, j_set, mu=mu,
                                       leakage_tol=tol)
        line_rows.append([name, rep_an.ideal, rep_an.noisy, rep_an.expected_mitigated])
        cache: dict = {}

        def one_experiment(rep_i, _obs=obs, _cache=cache):
            recs = simulate_shots(setup, None, _obs, shots, dist,
                                  seed=derive_seed(seed, name, rep_i),
                                  j_set=j_set, cache=_cache, leakage_tol=shot_tol)
            observed = set(r.herald_pattern for r in recs if not r.discarded)
            usable = JSet.explicit(sorted(observed & set(j_set.members())))
            est = mitigated_estimator(recs, dec, usable)
            oh1 = mitigated_estimator(recs, dec, JSet.local(1, 2)).sampling_overhead
            return est, oh1

        # warm the cache serially, then fan out
        results = [one_experiment(0)]
        if threads > 1 and n_exp > 1:
            with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as ex:
                results += list(ex.map(one_experiment, range(1, n_exp)))
        else:
            results += [one_experiment(i) for i in range(1, n_exp)]

        mitigated = [est.mitigated_mean for est, _ in results]
        # unmitigated baseline: direct sampling of the noisy state
        unmit = []
        for rep_i in range(n_exp):
            rng = derive_rng(derive_seed(seed, name, rep_i), "unmitigated")
            ck = ("noisy-dist", name)
            if ck not in cache:
                bundle = _loss_bundle(state0.data, state0.space.dims, gam, cache)
                cache[ck] = obs.outcome_distribution(bundle, state0.space)
            vals, probs = cache[ck]
            draw = rng.choice(len(vals), size=shots, p=probs)
            unmit.append(float(vals[draw].mean()))
        for rep_i, ((est, oh1), u) in enumerate(zip(results, unmit)):
            result_rows.append([name, rep_i, est.mitigated_mean, u, oh1,
                                est.sampling_overhead, est.shots_total,
                                est.shots_discarded])
        bins = int(_get(cfg, "hist_bins", int, default=20))
        hist_rows += _hist_rows(mitigated, bins, [name, "mitigated"])
        hist_rows += _hist_rows(unmit, bins, [name, "unmitigated"])

    p1 = os.path.join(outdir, "tmsv_cov_results.csv")
    write_csv(p1, ["observable", "experiment", "mitigated_estimate",
                   "unmitigated_estimate", "overhead_jmax1", "overhead_jset",
                   "shots", "discarded"], result_rows)
    p2 = os.path.join(outdir, "tmsv_cov_lines.csv")
    write_csv(p2, ["observable", "ideal", "noisy", "expected_mitigated"], line_rows)
    p3 = os.path.join(outdir, "tmsv_cov_hist.csv")
    write_csv(p3, ["observable", "series", "bin_left", "bin_right", "count"], hist_rows)
    return [p1, p2, p3]


def run_ecs_mc(cfg: dict, outdir: str) -> list:
    """Entangled-coherent-state fidelity recovery versus alpha."""
    alphas = [float(a) for a in _get(cfg, "alpha_values", list)]
    gam = _gamma_list(cfg, "loss.gamma")
    if len(gam) != 2:
        raise ConfigError("config field 'loss.gamma' must list two modes")
    dist = build_gamma_distribution(cfg)
    shots = int(_get(cfg, "shots", int))
    n_exp = int(_get(cfg, "experiments", int, default=1))
    seed = int(_get(cfg, "seed", int))
    cutoffs = _get(cfg, "cutoffs", list)
    tol = float(_get(cfg, "leakage_tol", (int, float), default=1e-8))
    rows, summary = [], []
    for alpha in alphas:
        space = make_space(2, cutoffs)
        plan = monte_carlo_state_plan(space, "ecs", {"alpha": alpha},
                                      LossParams(gam), leakage_tol=tol)
        rho0 = entangled_coherent_state(space, alpha, alpha, -1, leakage_tol=tol)
        obs = ProjectorObservable(rho0)
        cache: dict = {}
        ests = []
        for rep_i in range(n_exp):
            rep = monte_carlo_run(plan, None, obs, shots, dist,
                                  derive_seed(seed, alpha, rep_i), cache=cache)
            ests.append(rep.mitigated_mean)
            rows.append([alpha, rep_i, rep.mitigated_mean, plan.s_norm ** 2])
        summary.append([alpha, float(np.mean(ests)), plan.s_norm ** 2,
                        float(max(ests) - min(ests))])
    p1 = os.path.join(outdir, "ecs_mc_results.csv")
    write_csv(p1, ["alpha", "experiment", "estimate", "s_squared"], rows)
    p2 = os.path.join(outdir, "ecs_mc_summary.csv")
    write_csv(p2, ["alpha", "mean_estimate", "s_squared", "delta"], summary)
    return [p1, p2]


def run_gamma_shots(cfg: dict, outdir: str) -> list:
    """One sampled experiment with fluctuating loss, recording the gamma
    draws per mode as histograms alongside the estimate."""
    gam = _gamma_list(cfg, "loss.gamma")
    dist = build_gamma_distribution(cfg)
    shots = int(_get(cfg, "shots", int))
    seed = int(_get(cfg, "seed", int))
    cutoffs = _get(cfg, "cutoffs", list)
    tol = float(_get(cfg, "leakage_tol", (int, float), default=1e-8))
    alpha = float(_get(cfg, "state.alpha", (int, float)))
    space = make_space(len(cutoffs), cutoffs)
    plan = monte_carlo_state_plan(space, "ecs", {"alpha": alpha},
                                  LossParams(gam), leakage_tol=tol)
    rho0 = entangled_coherent_state(space, alpha, alpha, -1, leakage_tol=tol)
    rep = monte_carlo_run(plan, None, ProjectorObservable(rho0), shots, dist, seed)

    # the gamma stream of the run, regenerated with the same sub-seeds
    values = dist.support()
    probs = dist.probs()
    hist_rows = []
    counts = [np.zeros(len(v), dtype=int) for v in values]
    batch = 50000
    n_batches = (shots + batch - 1) // batch
    for b in range(n_batches):
        m = min(batch, shots - b * batch)
        rng = derive_rng(seed, "mc-batch", b)
        rng.choice(len(plan.probabilities), size=m, p=np.asarray(plan.probabilities))
        for mode, (v, p) in enumerate(zip(values, probs)):
            idx = rng.choice(len(v), size=m, p=p)
            counts[mode] += np.bincount(idx, minlength=len(v))
    for mode, (v, c) in enumerate(zip(values, counts)):
        width = (v[1] - v[0]) if len(v) > 1 else 0.0
        for val, n in zip(v, c):
            hist_rows.append([mode, val - width / 2, val + width / 2, int(n)])
    p1 = os.path.join(outdir, "gamma_hist.csv")
    write_csv(p1, ["mode", "bin_left", "bin_right", "count"], hist_rows)
    p2 = os.path.join(outdir, "shots_result.csv")
    write_csv(p2, ["estimate", "s_squared", "shots"],
              [[rep.mitigated_mean, rep.sampling_overhead, shots]])
    return [p1, p2]


def run_calibrate(cfg: dict, outdir: str) -> list:
    amps = tuple(complex(a) if isinstance(a, (int, float)) else complex(*a)
                 for a in _get(cfg, "probe.amplitudes", list))
    shots = int(_get(cfg, "probe.shots", int))
    gamma = float(_get(cfg, "gamma_true", (int, float)))
    seed = int(_get(cfg, "seed", int))
    probe = ProbeConfig(amps, shots)
    est = estimate_gamma(probe, LossyDevice(gamma), seed)
    rows = [[gamma, est.gamma_hat, est.variance,
             predicted_variance(gamma, shots, probe.total_intensity),
             est.n_shots_used]]
    header = ["gamma_true", "gamma_hat", "empirical_variance",
              "predicted_variance", "shots"]
    planned = None
    if "plan" in cfg:
        planned = plan_shots(float(_get(cfg, "plan.target_accuracy", (int, float))),
                             float(_get(cfg, "plan.confidence", (int, float))),
                             probe.total_intensity)
        header.append("planned_shots")
        rows[0].append(planned)
    path = os.path.join(outdir, "calibration.csv")
    write_csv(path, header, rows)
    return [path]


_RUNNERS = {
    "bias-sweep": run_bias_sweep,
    "overhead-sweep": run_overhead_sweep,
    "mismatch-sweep": run_mismatch_sweep,
    "cat-mc": run_cat_mc,
    "tmsv-cov": run_tmsv_cov,
    "ecs-mc": run_ecs_mc,
    "shots": run_gamma_shots,
    "calibrate": run_calibrate,
}


# ---------------------------------------------------------------------------
# presets (parameter values mirror the worked examples)

def _preset_fig2():
    # two panels: gamma varied at fixed r0 = 1, then r0 varied at gamma = 0.1
    points = [(1.0, 0.05), (1.0, 0.1), (1.0, 0.15),
              (0.5, 0.1), (1.33, 0.1)]
    curves = [{"label": f"r0={r0}_gamma={g}",
               "state": {"family": "squeezed", "r0": r0},
               "loss": {"gamma": [g]}}
              for r0, g in points]
    return {
        "kind": "bias-sweep",
        "curves": curves,
        "j_max_values": [0, 1, 2, 3, 4, 5],
        "observable": {"kind": "projector-on-initial"},
        "cutoffs": [160],
        "leakage_tol": 1.0,
        "seed": 20240901,
        "notes": "percentage bias against the per-mode subtraction budget",
    }


def _preset_fig3():
    mu_values = [round(0.005 * k, 3) for k in range(1, 61)]
    curves = [{"label": f"r0={r0}", "state": {"family": "squeezed", "r0": r0},
               "loss": {"gamma": [0.1]}, "j_max": j}
              for r0, j in ((0.75, 1), (1.0, 2), (1.1, 3), (1.2, 3))]
    return {
        "kind": "overhead-sweep",
        "curves": curves,
        "mu_values": mu_values,
        "observable": {"kind": "projector-on-initial"},
        "cutoffs": [160],
        "leakage_tol": 1e-2,
        "seed": 20240902,
    }


def _preset_fig4():
    return {
        "kind": "mismatch-sweep",
        "state": {"family": "squeezed", "r0": 1.0},
        "loss": {"gamma": [0.1]},
        "j_set": {"kind": "local", "j_max": 3},
        "observable": {"kind": "projector-on-initial"},
        "gamma_tilde_values": [round(0.005 * k, 3) for k in range(0, 41)],
        "cutoffs": [70],
        "leakage_tol": 1e-3,
        "seed": 20240903,
    }


def _preset_fig5():
    return {
        "kind": "cat-mc",
        "alpha_values": [round(0.25 * k, 2) for k in range(1, 13)],
        "gamma_values": [0.05, 0.1, 0.2, 0.3],
        "state": {"family": "cat", "alpha": 1.0, "phi": 0.0},
        "cutoffs": [30],
        "shots": 0,
        "leakage_tol": 1e-6,
        "seed": 20240904,
    }


def _preset_fig6():
    return {
        "kind": "tmsv-cov",
        "state": {"family": "tmsv", "r0": 0.75},
        "loss": {"gamma": [0.15, 0.15], "sd_fraction": 0.1, "bins": 21},
        "mu": [0.105, 0.105],
        "j_set": {"kind": "local", "j_max": 3},
        "entries": [[0, 0], [0, 2]],
        "cutoffs": [25, 25],
        "shots": 100000,
        "experiments": 20,
        "leakage_tol": 1e-3,
        "shot_leakage_tol": 0.05,
        "seed": 20240906,
    }


def _preset_fig7():
    return {
        "kind": "ecs-mc",
        "alpha_values": [0.5, 0.75, 1.0, 1.25, 1.5],
        "loss": {"gamma": [0.2, 0.2], "sd_fraction": 0.1, "bins": 21},
        "cutoffs": [17, 17],
        "shots": 100000,
        "experiments": 10,
        "leakage_tol": 1e-6,
        "seed": 20240907,
    }


def _preset_fig8():
    return {
        "kind": "shots",
        "state": {"family": "ecs", "alpha": 1.0},
        "loss": {"gamma": [0.5, 0.6], "sd_fraction": 0.1, "bins": 21},
        "cutoffs": [18, 18],
        "shots": 100000,
        "leakage_tol": 1e-6,
        "seed": 20240908,
    }


def _preset_calibrate():
    return {
        "kind": "calibrate",
        "probe": {"amplitudes": [1.0, 1.0, 1.0, 1.0], "shots": 100000},
        "gamma_true": 0.1,
        "plan": {"target_accuracy": 0.01, "confidence": 0.99},
        "seed": 20240910,
    }


PRESETS = {
    "fig2": _preset_fig2,
    "fig3": _preset_fig3,
    "fig4": _preset_fig4,
    "fig5": _preset_fig5,
    "fig6": _preset_fig6,
    "fig7": _preset_fig7,
    "fig8": _preset_fig8,
    "calibrate": _preset_calibrate,
}

_PRESET_BLURBS = {
    "fig2": "analytic bias vs subtraction budget, squeezed vacuum grid",
    "fig3": "sampling overhead and amplified squeezing vs tap-off reflectivity",
    "fig4": "mitigated expectation vs assumed loss parameter",
    "fig5": "cat-state Monte-Carlo one-norm squared over (alpha, gamma)",
    "fig6": "shot-level covariance entries of a lossy two-mode squeezed vacuum",
    "fig7": "entangled-coherent-state fidelity recovery vs alpha",
    "fig8": "fluctuating-loss experiment with sampled-gamma histograms",
    "calibrate": "coherent-probe loss estimation and Chebyshev shot planning",
}


# ---------------------------------------------------------------------------
# command plumbing

def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    if isinstance(cfg, dict) and "config" in cfg and "tool" in cfg:
        cfg = cfg["config"]  # accept a run manifest directly
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def validate_config(cfg: dict):
    kind = _get(cfg, "kind", str)
    if kind not in _RUNNERS:
        raise ConfigError(
            f"config field 'kind': unknown kind {kind!r}; choose from "
            + ", ".join(sorted(_RUNNERS)))
    if kind in ("mismatch-sweep", "tmsv-cov", "ecs-mc", "shots"):
        _gamma_list(cfg, "loss.gamma")
    if kind in ("tmsv-cov", "ecs-mc", "shots"):
        shots = _get(cfg, "shots", int)
        if shots < 1:
            raise ConfigError("config field 'shots' must be >= 1")
        _get(cfg, "seed", int)
    if kind in ("bias-sweep", "overhead-sweep"):
        curves = _get(cfg, "curves", list)
        if not curves:
            raise ConfigError("config field 'curves' must be non-empty")
        for ci, curve in enumerate(curves):
            try:
                _gamma_list({"loss": curve.get("loss", {})}, "loss.gamma")
            except ConfigError as exc:
                raise ConfigError(str(exc).replace(
                    "'loss.gamma", f"'curves[{ci}].loss.gamma")) from None
    if kind == "mismatch-sweep" and not _get(cfg, "gamma_tilde_values", list):
        raise ConfigError("config field 'gamma_tilde_values' must be non-empty")
    if kind in ("cat-mc", "ecs-mc") and not _get(cfg, "alpha_values", list):
        raise ConfigError("config field 'alpha_values' must be non-empty")
    if kind == "cat-mc" and not _get(cfg, "gamma_values", list):
        raise ConfigError("config field 'gamma_values' must be non-empty")
    if kind not in ("calibrate",):
        cutoffs = _get(cfg, "cutoffs", list, default=None)
        if cutoffs is not None:
            if not cutoffs or any(not isinstance(c, int) or c < 1 for c in cutoffs):
                raise ConfigError("config field 'cutoffs' must list integers >= 1")
    return kind


def _apply_overrides(cfg: dict, sets, output):
    for item in sets or ():
        if "=" not in item:
            raise ConfigError(f"--set expects PATH=JSONVALUE, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw  # bare strings are convenient on the command line
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set path {key!r} crosses a non-object field")
        node[parts[-1]] = value
    if output is not None:
        cfg["output"] = output


def cmd_run(path: str, sets=None, output=None) -> int:
    cfg = load_config(path)
    _apply_overrides(cfg, sets, output)
    kind = validate_config(cfg)
    outdir = cfg.get("output", os.path.splitext(os.path.basename(path))[0] + "_out")
    os.makedirs(outdir, exist_ok=True)
    outputs = _RUNNERS[kind](cfg, outdir)
    manifest = write_manifest(outdir, cfg, [os.path.basename(p) for p in outputs])
    for p in outputs + [manifest]:
        print(p)
    return 0


def cmd_validate(path: str) -> int:
    cfg = load_config(path)
    kind = validate_config(cfg)
    echo = {"kind": kind}
    for key in ("loss", "state", "mu", "shots", "experiments", "seed"):
        if key in cfg:
            echo[key] = cfg[key]
    print("ok " + json.dumps(echo, sort_keys=True))
    return 0


def cmd_presets(dump: str | None) -> int:
    if dump is not None:
        if dump not in PRESETS:
            raise ConfigError(f"unknown preset {dump!r}")
        print(json.dumps(PRESETS[dump](), indent=2, sort_keys=True))
        return 0
    for name in PRESETS:
        print(f"{name}\t{_PRESET_BLURBS[name]}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="losscancel",
        description="Photon-loss error-cancellation experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--set", dest="sets", action="append", metavar="PATH=VALUE",
                       help="override a config field (JSON value or bare string)")
    p_run.add_argument("-o", "--output", default=None,
                       help="override the output directory")
    p_val = sub.add_parser("validate", help="validate a config without running")
    p_val.add_argument("config")
    p_pre = sub.add_parser("presets", help="list built-in configs")
    p_pre.add_argument("--dump", metavar="NAME", default=None,
                       help="print the named preset as JSON")
    p_cal = sub.add_parser("calibrate", help="run a calibration config")
    p_cal.add_argument("config")
    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            return cmd_run(args.config, args.sets, args.output)
        if args.command == "validate":
            return cmd_validate(args.config)
        if args.command == "presets":
            return cmd_presets(args.dump)
        if args.command == "calibrate":
            cfg = load_config(args.config)
            if cfg.get("kind") != "calibrate":
                raise ConfigError("config field 'kind' must be 'calibrate'")
            return cmd_run(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (LossCancelError, OverflowError, FloatingPointError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
