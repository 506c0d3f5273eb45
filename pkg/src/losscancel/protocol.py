"""The loss-cancellation protocol: amplification and heralded photon
subtraction, shot-level simulation, mitigated estimator assembly, exact
bias/variance/overhead analytics, and the Monte-Carlo initial-state variant.

The workflow mirrors an experiment.  The input state is noiselessly
amplified by g_mu^n per mode, a weak beam-splitter tap-off with
reflectivity mu_i heralds how many photons were subtracted from each mode,
and the recorded outcomes are recombined with quasi-probability weights
omega_j so that the weighted average estimates the loss-free expectation
value.  Setting g_mu = 1/sqrt((1-gamma)(1-mu)) makes the heralded states
coincide with the channels E_j of the inverse-loss decomposition, which is
the central identity everything here relies on.
"""

from __future__ import annotations

import itertools
import math
import warnings
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm as _gauss

from .channels import (
    InverseDecomposition,
    LossParams,
    _apply_mode_operator_pure,
    _apply_single_mode_kraus,
    _gain_diag,
    _loss_kraus_matrix,
    _patterns,
    apply_loss,
    decompose_inverse,
)
from .errors import (
    LeakageError,
    MissingChannelError,
    SpaceMismatchError,
    UnphysicalAmplificationError,
)
from .fock import (
    LEAKAGE_TOL,
    BosonicOperator,
    FockSpace,
    FockState,
    TwoModeBeamSplitter,
    beam_splitter_unitary,
    cat_state,
    check_leakage,
    entangled_coherent_state,
    fock_basis_state,
    make_space,
)
from .observables import Observable

_SEED_MASK = (1 << 64) - 1


def derive_rng(master_seed: int, label: str, batch: int = 0) -> np.random.Generator:
    """Deterministic sub-stream from (master seed, stage label, batch index)."""
    entropy = [int(master_seed) & _SEED_MASK, zlib.crc32(label.encode("utf-8")), int(batch)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


# ---------------------------------------------------------------------------
# loss-parameter distributions (shot-to-shot fluctuation)

class GammaDistribution:
    """Per-mode distribution of the loss parameter, independent across modes."""

    def support(self) -> list:
        """Per-mode arrays of possible gamma values."""
        raise NotImplementedError

    def probs(self) -> list:
        raise NotImplementedError

    def mean(self) -> tuple:
        return tuple(float(np.dot(v, p)) for v, p in zip(self.support(), self.probs()))


@dataclass(frozen=True)
class PointMassGamma(GammaDistribution):
    gamma: tuple

    def support(self):
        return [np.array([g]) for g in self.gamma]

    def probs(self):
        return [np.array([1.0]) for _ in self.gamma]


@dataclass(frozen=True)
class DiscretizedGaussianGamma(GammaDistribution):
    """Gaussian gamma fluctuation, linearly discretised per mode.

    Each mode's Gaussian (mean_i, sd_i) is sampled on ``bins`` equally
    spaced points spanning the symmetric interval that leaves ``tail_mass``
    of probability outside; point weights follow the density, renormalised.
    """

    mean_gamma: tuple
    sd: tuple
    bins: int = 21
    tail_mass: float = 1e-7

    def __post_init__(self):
        if len(self.mean_gamma) != len(self.sd):
            raise ValueError("need one sd per mode")
        if self.bins < 1 or not 0.0 < self.tail_mass < 1.0:
            raise ValueError("invalid discretisation")
        for v in self.support():
            if v.min() < 0.0 or v.max() >= 1.0:
                raise ValueError(
                    "discretised gamma range leaves [0, 1); shrink the sd")

    def support(self):
        k = float(_gauss.isf(self.tail_mass / 2.0))
        out = []
        for m, s in zip(self.mean_gamma, self.sd):
            if s == 0.0 or self.bins == 1:
                out.append(np.array([float(m)]))
            else:
                out.append(np.linspace(m - k * s, m + k * s, self.bins))
        return out

    def probs(self):
        out = []
        for v, (m, s) in zip(self.support(), zip(self.mean_gamma, self.sd)):
            if len(v) == 1:
                out.append(np.array([1.0]))
            else:
                w = _gauss.pdf(v, loc=m, scale=s)
                out.append(w / w.sum())
        return out

    def mean(self):
        return tuple(float(m) for m in self.mean_gamma)


# ---------------------------------------------------------------------------
# heralded photon subtraction

def amplified_squeezing(r0: float, gains) -> float:
    """Squeezing parameter after noiseless amplification.

    ``gains`` holds the gain seen by each leg of the squeezed amplitude:
    (g, g) for single-mode squeezed vacuum, (g1, g2) for a two-mode squeezed
    vacuum.  tanh(r_amp) = tanh(r0) * prod(gains); raises when >= 1.
    """
    t = math.tanh(r0) * float(np.prod(list(gains)))
    if t >= 1.0:
        raise UnphysicalAmplificationError(
            f"amplified squeezing would need tanh(r_amp) = {t:.4f} >= 1; "
            "reduce the tap-off reflectivity, or redefine the target "
            "squeezing so the amplified state stays normalisable")
    return math.atanh(t)


@dataclass(frozen=True)
class HeraldingSetup:
    """Amplified input plus the beam-splitter reflectivities that herald it."""

    state0: FockState
    params: LossParams
    mu: tuple
    g_mu: tuple
    amplified_state: FockState
    leakage_tol: float = LEAKAGE_TOL


def _gain_for(gamma: float, mu: float) -> float:
    return 1.0 / math.sqrt((1.0 - gamma) * (1.0 - mu))


def _amplify_pure(vec: np.ndarray, dims, gains) -> np.ndarray:
    for mode, g in enumerate(gains):
        if g != 1.0:
            vec = _apply_mode_operator_pure(
                vec, dims, mode, np.diag(_gain_diag(dims[mode], g)).astype(complex))
    return vec


def build_heralding(state0: FockState, params: LossParams, mu,
                    leakage_tol: float = LEAKAGE_TOL,
                    squeezing_r0: float | None = None) -> HeraldingSetup:
    """Materialise the amplified state for given loss and tap-off settings.

    ``squeezing_r0`` enables the parametric sanity check for squeezed
    inputs before any matrix work: the amplified squeezing must stay
    physical (tanh(r_amp) < 1).
    """
    space = state0.space
    mu = tuple(float(m) for m in mu)
    if len(mu) != space.num_modes or len(params.gamma) != space.num_modes:
        raise ValueError("need one mu and one gamma per mode")
    if any(not 0.0 <= m < 1.0 for m in mu):
        raise ValueError("mu must lie in [0, 1)")
    g_mu = tuple(_gain_for(g, m) for g, m in zip(params.gamma, mu))
    if squeezing_r0 is not None:
        gains = g_mu if space.num_modes == 2 else (g_mu[0], g_mu[0])
        amplified_squeezing(squeezing_r0, gains)
    dims = space.dims
    if state0.is_pure:
        v = _amplify_pure(state0.data, dims, g_mu)
        amp = FockState(space, v / np.linalg.norm(v))
    else:
        rho = state0.density()
        for mode, g in enumerate(g_mu):
            gd = np.diag(_gain_diag(dims[mode], g)).astype(complex)
            rho = _apply_single_mode_kraus(rho, dims, mode, [gd])
        rho = (rho + rho.conj().T) / 2
        amp = FockState(space, rho / np.trace(rho).real)
    check_leakage(amp, leakage_tol, "amplified state")
    return HeraldingSetup(state0, params, mu, g_mu, amp, leakage_tol)


def _subtract_kraus_pure(vec: np.ndarray, dims, mu, pattern) -> np.ndarray:
    for mode, j in enumerate(pattern):
        k = _loss_kraus_matrix(dims[mode], mu[mode], j)
        vec = _apply_mode_operator_pure(vec, dims, mode, k)
    return vec


def herald_probabilities(setup: HeraldingSetup, j_limit=None) -> dict:
    """p_j = Tr[K_j(mu) rho_amp K_j(mu)†] over subtraction patterns.

    With ``j_limit`` None the patterns run over the full truncated range,
    in which case the probabilities sum to one up to truncation round-off.
    """
    space = setup.amplified_state.space
    if j_limit is None:
        j_limit = space.cutoffs
    dims = space.dims
    probs = {}
    if setup.amplified_state.is_pure:
        for pattern in _patterns(space.num_modes, j_limit):
            v = _subtract_kraus_pure(setup.amplified_state.data, dims, setup.mu, pattern)
            probs[pattern] = float(np.vdot(v, v).real)
    else:
        for pattern in _patterns(space.num_modes, j_limit):
            rho = setup.amplified_state.data
            for mode, j in enumerate(pattern):
                k = _loss_kraus_matrix(dims[mode], setup.mu[mode], j)
                rho = _apply_single_mode_kraus(rho, dims, mode, [k])
            probs[pattern] = float(np.trace(rho).real)
    return probs


def heralded_state(setup: HeraldingSetup, pattern) -> FockState:
    """Normalised post-herald state K_j rho_amp K_j† / p_j."""
    space = setup.amplified_state.space
    dims = space.dims
    pattern = tuple(int(j) for j in pattern)
    if setup.amplified_state.is_pure:
        v = _subtract_kraus_pure(setup.amplified_state.data, dims, setup.mu, pattern)
        nrm = np.linalg.norm(v)
        if nrm < 1e-150:
            raise ValueError(f"herald pattern {pattern} has zero probability")
        return FockState(space, v / nrm)
    rho = setup.amplified_state.data
    for mode, j in enumerate(pattern):
        k = _loss_kraus_matrix(dims[mode], setup.mu[mode], j)
        rho = _apply_single_mode_kraus(rho, dims, mode, [k])
    tr = float(np.trace(rho).real)
    if tr < 1e-150:
        raise ValueError(f"herald pattern {pattern} has zero probability")
    return FockState(space, (rho + rho.conj().T) / 2 / tr)


def beam_splitter_herald(state: FockState, mu: float, j: int,
                         ancilla_cutoff: int | None = None):
    """Single-mode tap-off simulated with an explicit ancilla.

    Couples the (single-mode) input to a vacuum ancilla through a beam
    splitter of transmissivity 1 - mu and projects the ancilla on |j>.
    Returns (probability, normalised post-herald system state).  This is
    the slow, first-principles reference for the Kraus-based heralding.
    """
    if state.space.num_modes != 1:
        raise SpaceMismatchError("explicit tap-off implemented for one system mode")
    if not state.is_pure:
        raise ValueError("reference tap-off implemented for pure states")
    sys_cut = state.space.cutoffs[0]
    # the weak tap-off leaves the ancilla nearly empty; a short ancilla
    # register keeps the joint space (and its matrix exponential) small
    anc_cut = min(sys_cut, 16) if ancilla_cutoff is None else ancilla_cutoff
    joint = FockSpace((sys_cut, anc_cut))
    v = np.kron(state.data, np.eye(1, anc_cut + 1, 0, dtype=complex).ravel())
    u = beam_splitter_unitary(joint, TwoModeBeamSplitter(1.0 - mu, 0, 1))
    v = u.matrix @ v
    block = v.reshape(sys_cut + 1, anc_cut + 1)[:, j].copy()
    p = float(np.vdot(block, block).real)
    if p < 1e-300:
        raise ValueError("herald outcome has zero probability")
    return p, FockState(state.space, block / math.sqrt(p))


# ---------------------------------------------------------------------------
# J sets

@dataclass(frozen=True)
class JSet:
    """Finite set of herald patterns kept by the estimator.

    kind "local" keeps j_i <= j_max per mode, "global" keeps sum(j) <=
    j_max, "explicit" keeps a given list.  Every J set contains the
    all-zeros pattern.
    """

    kind: str
    num_modes: int
    j_max: int | None = None
    pattern_list: tuple = ()

    def __post_init__(self):
        if self.kind not in ("local", "global", "explicit"):
            raise ValueError("kind must be local, global or explicit")
        if self.kind in ("local", "global"):
            if self.j_max is None or self.j_max < 0:
                raise ValueError("local/global J sets need j_max >= 0")
        else:
            pats = tuple(tuple(int(j) for j in p) for p in self.pattern_list)
            if not pats:
                raise ValueError("explicit J set must be non-empty")
            if any(len(p) != self.num_modes for p in pats):
                raise ValueError("pattern length must match the mode count")
            if any(j < 0 for p in pats for j in p):
                raise ValueError("subtraction orders must be >= 0")
            if (0,) * self.num_modes not in pats:
                raise ValueError("J set must contain the all-zeros pattern")
            object.__setattr__(self, "pattern_list", pats)

    @classmethod
    def local(cls, j_max: int, num_modes: int) -> "JSet":
        return cls("local", num_modes, j_max=j_max)

    @classmethod
    def global_(cls, j_max: int, num_modes: int) -> "JSet":
        return cls("global", num_modes, j_max=j_max)

    @classmethod
    def explicit(cls, patterns) -> "JSet":
        pats = [tuple(p) for p in patterns]
        return cls("explicit", len(pats[0]), pattern_list=tuple(pats))

    def contains(self, pattern) -> bool:
        p = tuple(int(j) for j in pattern)
        if self.kind == "local":
            return all(0 <= j <= self.j_max for j in p)
        if self.kind == "global":
            return all(j >= 0 for j in p) and sum(p) <= self.j_max
        return p in self.pattern_list

    def members(self) -> list:
        if self.kind == "explicit":
            return sorted(self.pattern_list)
        ranges = [range(self.j_max + 1)] * self.num_modes
        pats = [tuple(p) for p in itertools.product(*ranges)]
        if self.kind == "global":
            pats = [p for p in pats if sum(p) <= self.j_max]
        return pats

    def per_mode_limit(self) -> tuple:
        m = [0] * self.num_modes
        for p in self.members():
            for i, j in enumerate(p):
                m[i] = max(m[i], j)
        return tuple(m)


# ---------------------------------------------------------------------------
# shot-level simulation

@dataclass(slots=True)
class ShotRecord:
    shot_index: int
    sampled_gamma: tuple
    herald_pattern: tuple
    observable_value: float
    discarded: bool


def _loss_bundle(vec: np.ndarray, dims, gammas, kraus_cache: dict) -> np.ndarray:
    """Columns K_k |vec> over all Kraus combinations of per-mode loss."""
    t = vec.reshape(dims + (1,))
    for mode, gamma in enumerate(gammas):
        if gamma == 0.0:
            continue
        d = dims[mode]
        key = ("kraus", mode, float(gamma))
        if key not in kraus_cache:
            kraus_cache[key] = np.stack(
                [_loss_kraus_matrix(d, gamma, j) for j in range(d)])
        kstack = kraus_cache[key]
        r = np.tensordot(kstack, t, axes=([2], [mode]))
        r = np.moveaxis(r, 1, mode + 1)
        r = np.moveaxis(r, 0, -1)
        t = r.reshape(dims + (-1,))
    return t.reshape(int(np.prod(dims)), -1)


def _combo_gammas(gamma_values, combo) -> tuple:
    return tuple(float(gamma_values[m][i]) for m, i in enumerate(combo))


def _shot_amp_state(setup, combo, gamma_values, cache, leakage_tol):
    key = ("amp", combo)
    if key not in cache:
        gam = _combo_gammas(gamma_values, combo)
        gains = tuple(_gain_for(g, m) for g, m in zip(gam, setup.mu))
        dims = setup.state0.space.dims
        v = _amplify_pure(setup.state0.data, dims, gains)
        v = v / np.linalg.norm(v)
        check_leakage(FockState(setup.state0.space, v), leakage_tol,
                      "per-shot amplified state")
        cache[key] = v
    return cache[key]


def _shot_pattern_probs(setup, combo, patterns, gamma_values, cache, leakage_tol):
    key = ("p", combo)
    if key not in cache:
        dims = setup.state0.space.dims
        amp = _shot_amp_state(setup, combo, gamma_values, cache, leakage_tol)
        p = np.empty(len(patterns))
        for i, pattern in enumerate(patterns):
            v = _subtract_kraus_pure(amp, dims, setup.mu, pattern)
            p[i] = np.vdot(v, v).real
        p = np.clip(p, 0.0, None)
        cache[key] = p / p.sum()
    return cache[key]


def _shot_outcome_dist(setup, combo, pattern, observable, dynamics_matrix,
                       gamma_values, cache, leakage_tol):
    key = ("d", combo, pattern)
    if key not in cache:
        space = setup.state0.space
        dims = space.dims
        amp = _shot_amp_state(setup, combo, gamma_values, cache, leakage_tol)
        h = _subtract_kraus_pure(amp, dims, setup.mu, pattern)
        h = h / np.linalg.norm(h)
        gam = _combo_gammas(gamma_values, combo)
        bundle = _loss_bundle(h, dims, gam, cache)
        if dynamics_matrix is not None:
            bundle = dynamics_matrix @ bundle
        cache[key] = observable.outcome_distribution(bundle, space)
    return cache[key]


def simulate_shots(setup: HeraldingSetup, dynamics: BosonicOperator | None,
                   observable: Observable, n_shots: int,
                   gamma_distribution: GammaDistribution, seed: int,
                   j_set: JSet | None = None, j_limit=None,
                   batch_size: int = 50000, cache: dict | None = None,
                   leakage_tol: float | None = None) -> list:
    """Simulate heralded single-shot measurements.

    Per shot: sample the loss parameters, re-derive the herald
    probabilities at the sampled gamma (the hardware loses photons at the
    true rate), sample a herald pattern, push the heralded state through
    loss and the ideal dynamics, and sample one measurement outcome from
    the observable's eigendecomposition.  Deterministic given the seed;
    shots are partitioned into batches with derived sub-seeds and merged in
    batch order, so the stream does not depend on how work is scheduled.

    ``cache`` may be shared across calls with the same setup/observable to
    reuse per-(gamma, pattern) outcome distributions.
    """
    if n_shots < 0:
        raise ValueError("n_shots must be >= 0")
    if not setup.state0.is_pure:
        raise ValueError("shot simulation implemented for pure input states")
    space = setup.state0.space
    num_modes = space.num_modes
    gamma_values = gamma_distribution.support()
    gamma_probs = gamma_distribution.probs()
    if len(gamma_values) != num_modes:
        raise ValueError("gamma distribution mode count mismatch")
    if j_limit is None:
        j_limit = tuple(min(6, c) for c in space.cutoffs)
    patterns = _patterns(num_modes, j_limit)
    if cache is None:
        cache = {}
    ltol = setup.leakage_tol if leakage_tol is None else leakage_tol
    dyn = None if dynamics is None else dynamics.matrix

    records: list[ShotRecord] = []
    n_batches = (n_shots + batch_size - 1) // batch_size
    for b in range(n_batches):
        m = min(batch_size, n_shots - b * batch_size)
        rng = derive_rng(seed, "shot-batch", b)
        gidx = np.stack(
            [rng.choice(len(v), size=m, p=p)
             for v, p in zip(gamma_values, gamma_probs)], axis=1)
        uniq, inverse = np.unique(gidx, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        pattern_idx = np.empty(m, dtype=int)
        for u_i in range(len(uniq)):
            sel = np.nonzero(inverse == u_i)[0]
            combo = tuple(int(x) for x in uniq[u_i])
            p = _shot_pattern_probs(setup, combo, patterns, gamma_values, cache, ltol)
            pattern_idx[sel] = rng.choice(len(patterns), size=len(sel), p=p)
        outcomes = np.empty(m)
        for u_i in range(len(uniq)):
            sel = np.nonzero(inverse == u_i)[0]
            combo = tuple(int(x) for x in uniq[u_i])
            for p_i in np.unique(pattern_idx[sel]):
                ssel = sel[pattern_idx[sel] == p_i]
                vals, probs = _shot_outcome_dist(
                    setup, combo, patterns[p_i], observable, dyn,
                    gamma_values, cache, ltol)
                draw = rng.choice(len(vals), size=len(ssel), p=probs)
                outcomes[ssel] = vals[draw]
        for i in range(m):
            pat = patterns[pattern_idx[i]]
            gam = _combo_gammas(gamma_values, tuple(int(x) for x in gidx[i]))
            disc = j_set is not None and not j_set.contains(pat)
            records.append(ShotRecord(b * batch_size + i, gam, pat,
                                      float(outcomes[i]), disc))
    return records


# ---------------------------------------------------------------------------
# estimator assembly

@dataclass(frozen=True)
class EstimatorReport:
    mitigated_mean: float
    per_channel_means: dict
    per_channel_counts: dict
    weights_used: dict
    bias_estimate: float
    fractional_bias_estimate: float
    variance: float
    sampling_overhead: float
    shots_total: int
    shots_discarded: int


class SingleShotChannelWarning(UserWarning):
    """A channel contributed a single shot; its variance is unavailable."""


def mitigated_estimator(records, decomposition: InverseDecomposition,
                        j_set: JSet, noisy_variance: float | None = None) -> EstimatorReport:
    """Combine per-channel shot averages into the mitigated estimator.

    Every pattern in the J set with nonzero weight must appear in the
    records; otherwise a MissingChannelError lists the absent ones.  The
    plug-in variance sums |omega_j|^2 Var[O_j]/N_j over channels; channels
    with a single shot cannot contribute and trigger a warning.

    The reported sampling overhead is the standard approximation
    sum_j |omega_j|^2 / p_j with p_j taken from the observed herald
    frequencies.  Passing ``noisy_variance`` (population variance of the
    unmitigated single-shot outcome) switches it to the empirical variance
    ratio shots_total * Var[mitigated] / Var[noisy] instead.
    """
    grouped: dict = {}
    discarded = 0
    total = 0
    for rec in records:
        total += 1
        pat = tuple(rec.herald_pattern)
        if not j_set.contains(pat):
            discarded += 1
            continue
        grouped.setdefault(pat, []).append(rec.observable_value)

    weights = {p: decomposition.weights.get(p, 0.0) for p in j_set.members()}
    required = [p for p, w in weights.items() if w != 0.0]
    missing = sorted(p for p in required if p not in grouped)
    if missing:
        raise MissingChannelError(
            f"no shots observed for J-set patterns {missing}")

    means, counts = {}, {}
    mit = 0.0
    var = 0.0
    for p, vals in sorted(grouped.items()):
        arr = np.asarray(vals)
        means[p] = float(arr.mean())
        counts[p] = len(arr)
        w = weights.get(p, 0.0)
        mit += w * means[p]
        if w != 0.0:
            if len(arr) == 1:
                warnings.warn(
                    f"channel {p} has a single shot; its variance "
                    "contribution is unknown and was skipped",
                    SingleShotChannelWarning, stacklevel=2)
            else:
                var += w * w * float(arr.var(ddof=1)) / len(arr)

    frac_bias = abs(1.0 - sum(weights.values()))
    if noisy_variance is not None and noisy_variance > 0:
        overhead = var * total / noisy_variance
    else:
        overhead = 0.0
        for p, w in weights.items():
            if w == 0.0:
                continue
            overhead += w * w * total / counts[p]
    return EstimatorReport(
        mitigated_mean=float(mit),
        per_channel_means=means,
        per_channel_counts=counts,
        weights_used=weights,
        bias_estimate=frac_bias * abs(mit),
        fractional_bias_estimate=frac_bias,
        variance=float(var),
        sampling_overhead=float(overhead),
        shots_total=total,
        shots_discarded=discarded,
    )


# ---------------------------------------------------------------------------
# exact analytics

@dataclass(frozen=True)
class AnalyticReport:
    ideal: float
    noisy: float
    per_channel_means: dict
    per_channel_variances: dict
    weights: dict
    expected_mitigated: float
    exact_bias: float
    fractional_bias_estimate: float
    sampling_overhead: float | None
    herald_probs: dict | None
    pseudo_state: FockState
    pseudo_min_eigenvalue: float

    def percentage_bias(self) -> float:
        return 100.0 * abs(self.exact_bias / self.ideal)

    def unmitigated_percentage_bias(self) -> float:
        return 100.0 * abs((self.noisy - self.ideal) / self.ideal)


def _evolve_noisy(state: FockState, params: LossParams,
                  dynamics: BosonicOperator | None) -> FockState:
    out = apply_loss(state, params)
    if dynamics is not None:
        rho = dynamics.matrix @ out.density() @ dynamics.matrix.conj().T
        out = FockState(state.space, (rho + rho.conj().T) / 2)
    return out


def analytic_expectations(state0: FockState, params: LossParams,
                          observable: Observable, j_set: JSet,
                          dynamics: BosonicOperator | None = None,
                          assumed_params: LossParams | None = None,
                          mu=None,
                          decomposition: InverseDecomposition | None = None,
                          leakage_tol: float = LEAKAGE_TOL) -> AnalyticReport:
    """Deterministic matrix computation of every protocol-level quantity.

    ``params`` is the true loss; ``assumed_params`` (default: the same) is
    what the decomposition weights and channel gains are built from, which
    models imperfect loss characterisation.  With ``mu`` given, the herald
    probabilities enter and the report carries the analytic sampling
    overhead; otherwise that field is None.
    """
    space = state0.space
    assumed = params if assumed_params is None else assumed_params
    members = j_set.members()
    if decomposition is None:
        decomposition = decompose_inverse(
            state0, assumed, j_limit=j_set.per_mode_limit(),
            leakage_tol=leakage_tol)

    o_mat = observable.matrix(space)
    o_sq = o_mat @ o_mat

    def stats(state: FockState):
        rho = state.density()
        m = float(np.trace(o_mat @ rho).real)
        v = float(np.trace(o_sq @ rho).real) - m * m
        return m, max(v, 0.0)

    if dynamics is None:
        ideal_state = state0
    else:
        if state0.is_pure:
            ideal_state = FockState(space, dynamics.matrix @ state0.data)
        else:
            r = dynamics.matrix @ state0.data @ dynamics.matrix.conj().T
            ideal_state = FockState(space, (r + r.conj().T) / 2)
    ideal, _ = stats(ideal_state)
    noisy, noisy_var = stats(_evolve_noisy(state0, params, dynamics))

    weights = {p: decomposition.weights.get(p, 0.0) for p in members}
    per_mean, per_var = {}, {}
    pseudo = np.zeros((space.dim, space.dim), dtype=complex)
    expected = 0.0
    for p in members:
        w = weights[p]
        if w == 0.0 or p not in decomposition.channels:
            continue
        sigma = _evolve_noisy(decomposition.channels[p], params, dynamics)
        m, v = stats(sigma)
        per_mean[p], per_var[p] = m, v
        expected += w * m
        pseudo += w * sigma.density()

    pseudo = (pseudo + pseudo.conj().T) / 2
    pseudo_state = FockState(space, pseudo)
    min_eig = float(np.linalg.eigvalsh(pseudo).min())
    frac_bias = abs(1.0 - sum(weights.values()))

    overhead = None
    herald_probs = None
    if mu is not None:
        setup = build_heralding(state0, assumed, mu, leakage_tol=leakage_tol)
        herald_probs = herald_probabilities(setup, j_limit=j_set.per_mode_limit())
        overhead = 0.0
        for p, w in weights.items():
            if w == 0.0:
                continue
            pj = herald_probs.get(p, 0.0)
            if pj <= 0.0:
                overhead = math.inf
                break
            ratio = per_var[p] / noisy_var if noisy_var > 0 else 1.0
            overhead += w * w / pj * ratio

    return AnalyticReport(
        ideal=ideal, noisy=noisy,
        per_channel_means=per_mean, per_channel_variances=per_var,
        weights=weights, expected_mitigated=float(expected),
        exact_bias=float(expected - ideal),
        fractional_bias_estimate=float(frac_bias),
        sampling_overhead=overhead, herald_probs=herald_probs,
        pseudo_state=pseudo_state, pseudo_min_eigenvalue=min_eig)


def optimize_mu(state0: FockState, params: LossParams, observable: Observable,
                dynamics: BosonicOperator | None = None, j_max: int = 1,
                step: float = 0.005, leakage_tol: float = LEAKAGE_TOL,
                include_variance_ratio: bool = True) -> float:
    """Grid search (resolution ``step``) for the uniform tap-off
    reflectivity minimising the analytic sampling overhead at the given
    per-mode subtraction budget.

    With ``include_variance_ratio`` False the objective drops the
    Var[O_j]/Var[O_noisy] factors and minimises sum |omega_j|^2 / p_j only.
    """
    space = state0.space
    j_set = JSet.local(j_max, space.num_modes)
    base = analytic_expectations(state0, params, observable, j_set,
                                 dynamics=dynamics, leakage_tol=leakage_tol)
    noisy_var = None
    best_mu, best_cost = None, math.inf
    mu = step
    while mu < 1.0:
        try:
            setup = build_heralding(state0, params, (mu,) * space.num_modes,
                                    leakage_tol=leakage_tol)
            probs = herald_probabilities(setup, j_limit=j_set.per_mode_limit())
        except (LeakageError, UnphysicalAmplificationError):
            break
        if noisy_var is None:
            noisy_state = _evolve_noisy(state0, params, dynamics)
            o = observable.matrix(space)
            m = float(np.trace(o @ noisy_state.density()).real)
            noisy_var = float(np.trace(o @ o @ noisy_state.density()).real) - m * m
        cost = 0.0
        for p, w in base.weights.items():
            if w == 0.0:
                continue
            pj = probs.get(p, 0.0)
            if pj <= 0.0:
                cost = math.inf
                break
            ratio = 1.0
            if include_variance_ratio and noisy_var > 0:
                ratio = base.per_channel_variances[p] / noisy_var
            cost += w * w / pj * ratio
        if cost < best_cost:
            best_cost, best_mu = cost, mu
        mu = round(mu + step, 10)
    if best_mu is None:
        raise UnphysicalAmplificationError(
            "no physical tap-off reflectivity found on the grid")
    return best_mu


# ---------------------------------------------------------------------------
# Monte-Carlo initial-state variant

@dataclass(frozen=True)
class MonteCarloPlan:
    """Prepare ``states[k]`` with probability ``probabilities[k]``, weight
    each outcome by s_norm * signs[k], and average."""

    states: tuple
    probabilities: tuple
    signs: tuple
    s_norm: float
    labels: tuple
    loss: LossParams

    def __post_init__(self):
        q = np.asarray(self.probabilities)
        if np.any(q < 0) or abs(q.sum() - 1.0) > 1e-9:
            raise ValueError("plan probabilities must be a distribution")
        if self.s_norm < 1.0 - 1e-12:
            raise ValueError("S must be >= 1")


def cat_mc_weights(alpha: complex, phi: float, gamma: float) -> tuple:
    """(W_even, W_odd) for the two-component cat state under loss gamma."""
    a2 = abs(alpha) ** 2
    g0 = 1.0 / math.sqrt(1.0 - gamma)
    x = gamma * a2 / (1.0 - gamma)

    def a_norm_sq(amp2, ph):
        return 2.0 * (1.0 + math.cos(ph) * math.exp(-2.0 * amp2))

    amp2 = (g0 * abs(alpha)) ** 2
    w_even = math.exp(x) * math.cosh(x) * a_norm_sq(amp2, phi) / a_norm_sq(a2, phi)
    w_odd = -math.exp(x) * math.sinh(x) * a_norm_sq(amp2, phi + math.pi) / a_norm_sq(a2, phi)
    return w_even, w_odd


def cat_mc_s(alpha: complex, phi: float, gamma: float) -> float:
    """Closed-form S = |W_even| + |W_odd| for cat-state Monte Carlo."""
    a2 = abs(alpha) ** 2
    num = math.exp(2.0 * gamma * a2 / (1.0 - gamma)) \
        + math.cos(phi) * math.exp(-2.0 * a2 / (1.0 - gamma))
    den = 1.0 + math.cos(phi) * math.exp(-2.0 * a2)
    return num / den


def ecs_mc_weights(alpha: complex, gamma1: float, gamma2: float) -> tuple:
    """(W_even, W_odd) for the odd entangled coherent state |a,a> - |-a,-a>."""
    at1 = abs(alpha) ** 2 / (1.0 - gamma1)
    at2 = abs(alpha) ** 2 / (1.0 - gamma2)
    x1, x2 = gamma1 * at1, gamma2 * at2

    def b_norm_sq(s1, s2, sign):
        return 2.0 * (1.0 + sign * math.exp(-2.0 * (s1 + s2)))

    a2 = abs(alpha) ** 2
    pref = math.exp(x1 + x2)
    den = b_norm_sq(a2, a2, -1)
    w_even = pref * b_norm_sq(at1, at2, -1) / den * (
        math.cosh(x1) * math.cosh(x2) + math.sinh(x1) * math.sinh(x2))
    w_odd = -pref * b_norm_sq(at1, at2, +1) / den * (
        math.cosh(x1) * math.sinh(x2) + math.sinh(x1) * math.cosh(x2))
    return w_even, w_odd


def monte_carlo_state_plan(space: FockSpace, family: str, family_params: dict,
                           loss_params: LossParams,
                           leakage_tol: float = LEAKAGE_TOL) -> MonteCarloPlan:
    """Build the ensemble of preparable states realising the inverse map.

    Families: "single_photon", "cat" (alpha, phi), "ecs" (alpha; the odd
    superposition of +/- alpha in both modes) and "dual_rail" (n_qubits;
    logical all-zeros, uniform gamma).
    """
    gam = loss_params.gamma
    if family == "single_photon":
        if space.num_modes != 1:
            raise SpaceMismatchError("single-photon plan needs one mode")
        g = gam[0]
        w1, w0 = 1.0 / (1.0 - g), -g / (1.0 - g)
        s = (1.0 + g) / (1.0 - g)
        states = (fock_basis_state(space, (1,)), fock_basis_state(space, (0,)))
        return MonteCarloPlan(states, (w1 / s, -w0 / s), (1.0, -1.0), s,
                              ("one", "vacuum"), loss_params)

    if family == "cat":
        if space.num_modes != 1:
            raise SpaceMismatchError("cat plan needs one mode")
        alpha = complex(family_params["alpha"])
        phi = float(family_params.get("phi", 0.0))
        g = gam[0]
        w_even, w_odd = cat_mc_weights(alpha, phi, g)
        s = abs(w_even) + abs(w_odd)
        g0a = alpha / math.sqrt(1.0 - g)
        states = (cat_state(space, g0a, phi, leakage_tol=leakage_tol),
                  cat_state(space, g0a, phi + math.pi, leakage_tol=leakage_tol))
        return MonteCarloPlan(states, (abs(w_even) / s, abs(w_odd) / s),
                              (math.copysign(1.0, w_even), math.copysign(1.0, w_odd)),
                              s, ("even", "odd"), loss_params)

    if family == "ecs":
        if space.num_modes != 2:
            raise SpaceMismatchError("entangled-coherent plan needs two modes")
        alpha = complex(family_params["alpha"])
        beta = complex(family_params.get("beta", alpha))
        if beta != alpha:
            raise ValueError(
                "the two-term collapse only holds for equal amplitudes")
        if int(family_params.get("sign", -1)) != -1:
            raise ValueError("plan derived for the odd (minus) superposition")
        g1, g2 = gam
        w_even, w_odd = ecs_mc_weights(alpha, g1, g2)
        s = abs(w_even) + abs(w_odd)
        at1 = alpha / math.sqrt(1.0 - g1)
        at2 = alpha / math.sqrt(1.0 - g2)
        states = (entangled_coherent_state(space, at1, at2, -1, leakage_tol=leakage_tol),
                  entangled_coherent_state(space, at1, at2, +1, leakage_tol=leakage_tol))
        return MonteCarloPlan(states, (abs(w_even) / s, abs(w_odd) / s),
                              (math.copysign(1.0, w_even), math.copysign(1.0, w_odd)),
                              s, ("even", "odd"), loss_params)

    if family == "dual_rail":
        n_qubits = int(family_params["n_qubits"])
        if space.num_modes != 2 * n_qubits:
            raise SpaceMismatchError("dual-rail plan needs two modes per qubit")
        if len(set(gam)) != 1:
            raise ValueError("dual-rail closed form assumes uniform loss")
        g = gam[0]
        w_keep, w_drop = 1.0 / (1.0 - g), g / (1.0 - g)
        s = ((1.0 + g) / (1.0 - g)) ** n_qubits
        states, probs, signs, labels = [], [], [], []
        for keep_mask in itertools.product((1, 0), repeat=n_qubits):
            occ = []
            weight = 1.0
            for keep in keep_mask:
                occ.extend((0, 1) if keep else (0, 0))
                weight *= w_keep if keep else w_drop
            states.append(fock_basis_state(space, occ))
            probs.append(weight / s)
            signs.append((-1.0) ** (n_qubits - sum(keep_mask)))
            labels.append("".join("k" if keep else "v" for keep in keep_mask))
        return MonteCarloPlan(tuple(states), tuple(probs), tuple(signs), s,
                              tuple(labels), loss_params)

    raise ValueError(f"unknown Monte-Carlo family {family!r}")


def monte_carlo_run(plan: MonteCarloPlan, dynamics: BosonicOperator | None,
                    observable: Observable, n_shots: int,
                    gamma_distribution: GammaDistribution, seed: int,
                    batch_size: int = 50000,
                    cache: dict | None = None) -> EstimatorReport:
    """Sample initial states from the plan and average the signed outcomes.

    Every outcome is multiplied by S * sign before averaging; the reported
    variance is population-style (divided by the shot count) and the
    sampling overhead is the S^2 approximation.
    """
    if n_shots <= 0:
        raise ValueError("n_shots must be > 0")
    space = plan.states[0].space
    gamma_values = gamma_distribution.support()
    gamma_probs = gamma_distribution.probs()
    q = np.asarray(plan.probabilities)
    dyn = None if dynamics is None else dynamics.matrix
    if cache is None:
        cache = {}

    sums: dict = {lab: [0, 0.0] for lab in plan.labels}
    weighted = np.empty(n_shots)
    pos = 0
    n_batches = (n_shots + batch_size - 1) // batch_size
    for b in range(n_batches):
        m = min(batch_size, n_shots - b * batch_size)
        rng = derive_rng(seed, "mc-batch", b)
        kidx = rng.choice(len(q), size=m, p=q)
        gidx = np.stack(
            [rng.choice(len(v), size=m, p=p)
             for v, p in zip(gamma_values, gamma_probs)], axis=1)
        keys = np.concatenate([kidx[:, None], gidx], axis=1)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        out = np.empty(m)
        for u_i in range(len(uniq)):
            sel = np.nonzero(inverse == u_i)[0]
            k = int(uniq[u_i][0])
            combo = tuple(int(x) for x in uniq[u_i][1:])
            ckey = ("mc", k, combo)
            if ckey not in cache:
                gam = _combo_gammas(gamma_values, combo)
                bundle = _loss_bundle(plan.states[k].data, space.dims, gam, cache)
                if dyn is not None:
                    bundle = dyn @ bundle
                cache[ckey] = observable.outcome_distribution(bundle, space)
            vals, probs = cache[ckey]
            draw = rng.choice(len(vals), size=len(sel), p=probs)
            out[sel] = vals[draw]
            acc = sums[plan.labels[k]]
            acc[0] += len(sel)
            acc[1] += float(out[sel].sum())
        signs = np.asarray(plan.signs)[kidx]
        weighted[pos:pos + m] = plan.s_norm * signs * out
        pos += m

    mean = float(weighted.mean())
    var = float(weighted.var()) / n_shots
    means = {lab: (acc[1] / acc[0] if acc[0] else math.nan)
             for lab, acc in sums.items()}
    counts = {lab: acc[0] for lab, acc in sums.items()}
    weights = {lab: plan.s_norm * sign * prob
               for lab, sign, prob in zip(plan.labels, plan.signs, plan.probabilities)}
    return EstimatorReport(
        mitigated_mean=mean, per_channel_means=means,
        per_channel_counts=counts, weights_used=weights,
        bias_estimate=0.0, fractional_bias_estimate=0.0,
        variance=var, sampling_overhead=plan.s_norm ** 2,
        shots_total=n_shots, shots_discarded=0)
