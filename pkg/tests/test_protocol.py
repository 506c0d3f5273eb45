import math
import warnings

import numpy as np
import pytest

from losscancel import (
    DiscretizedGaussianGamma,
    JSet,
    LossParams,
    MissingChannelError,
    PointMassGamma,
    ProjectorObservable,
    ShotRecord,
    SingleShotChannelWarning,
    UnphysicalAmplificationError,
    amplified_squeezing,
    analytic_expectations,
    beam_splitter_herald,
    build_heralding,
    cat_state,
    covariance_entry_observable,
    decompose_inverse,
    derive_rng,
    fock_basis_state,
    herald_probabilities,
    heralded_state,
    make_space,
    mitigated_estimator,
    monte_carlo_run,
    monte_carlo_state_plan,
    optimize_mu,
    simulate_shots,
    squeezed_vacuum,
    trace_distance,
    two_mode_squeezed_vacuum,
)
from losscancel.protocol import cat_mc_s, ecs_mc_weights

import oracles


# --- amplification ----------------------------------------------------------

def test_amplified_squeezing_reference_values():
    # TMSV r0 = 0.75, gamma = 0.15 per mode: gains for mu = 0 and mu = 0.105
    g0 = 1.0 / math.sqrt(0.85)
    assert amplified_squeezing(0.75, (g0, g0)) == pytest.approx(
        0.9666626823081355, abs=1e-12)
    gm = 1.0 / math.sqrt(0.85 * (1.0 - 0.105))
    assert amplified_squeezing(0.75, (gm, gm)) == pytest.approx(
        1.2040916510804527, abs=1e-12)


def test_amplified_squeezing_unphysical():
    with pytest.raises(UnphysicalAmplificationError):
        amplified_squeezing(1.33, (1.0 / math.sqrt(0.85),) * 2)


# --- gamma distributions ----------------------------------------------------

def test_discretized_gaussian_moments():
    d = DiscretizedGaussianGamma((0.15, 0.15), (0.015, 0.015))
    for v, p in zip(d.support(), d.probs()):
        assert len(v) == 21
        assert abs(sum(p) - 1.0) < 1e-12
        mean = float(np.dot(v, p))
        assert mean == pytest.approx(0.15, abs=1e-6)
        # spread covers a bit over five standard deviations each side
        assert v[0] < 0.15 - 5 * 0.015 < 0.15 + 5 * 0.015 < v[-1]
    assert d.mean() == pytest.approx((0.15, 0.15), abs=1e-6)


def test_discretized_gaussian_range_validation():
    with pytest.raises(Exception):
        DiscretizedGaussianGamma((0.95,), (0.05,))  # support spills past 1


def test_point_mass():
    d = PointMassGamma((0.3, 0.4))
    assert d.mean() == (0.3, 0.4)
    assert [list(v) for v in d.support()] == [[0.3], [0.4]]


# --- seeding ----------------------------------------------------------------

def test_derive_rng_determinism_and_independence():
    a = derive_rng(42, "foo").integers(0, 2 ** 31, 5)
    b = derive_rng(42, "foo").integers(0, 2 ** 31, 5)
    c = derive_rng(42, "bar").integers(0, 2 ** 31, 5)
    d = derive_rng(42, "foo", 1).integers(0, 2 ** 31, 5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


# --- heralding --------------------------------------------------------------

@pytest.mark.parametrize("make_state", [
    lambda sp: squeezed_vacuum(sp, 0.6, leakage_tol=1e-6),
    lambda sp: cat_state(sp, 1.0, 0.0, leakage_tol=1e-6),
])
def test_heralding_identity_matches_channels(make_state):
    sp = make_space(1, [50])
    state = make_state(sp)
    params = LossParams((0.1,))
    mu = 0.2
    setup = build_heralding(state, params, (mu,), leakage_tol=1e-4)
    probs = herald_probabilities(setup, j_limit=3)
    dec = decompose_inverse(state, params, j_limit=3, leakage_tol=1e-4)
    for j in range(4):
        if probs[(j,)] < 1e-12:
            continue
        h = heralded_state(setup, (j,))
        e = dec.channels[(j,)]
        assert trace_distance(h, e) < 1e-10


def test_heralding_matches_beam_splitter_reference():
    sp = make_space(1, [60])
    state = squeezed_vacuum(sp, 0.6, leakage_tol=1e-6)
    params = LossParams((0.1,))
    mu = 0.15
    setup = build_heralding(state, params, (mu,), leakage_tol=1e-4)
    probs = herald_probabilities(setup, j_limit=2)
    for j in range(3):
        p_ref, st_ref = beam_splitter_herald(setup.amplified_state, mu, j)
        assert probs[(j,)] == pytest.approx(p_ref, abs=1e-12)
        # the reference picks up a (-1)^j phase from the beam splitter;
        # states agree as density matrices
        assert trace_distance(heralded_state(setup, (j,)), st_ref) < 1e-9


def test_herald_probabilities_sum_to_one():
    sp = make_space(1, [40])
    state = squeezed_vacuum(sp, 0.5, leakage_tol=1e-8)
    setup = build_heralding(state, LossParams((0.1,)), (0.1,), leakage_tol=1e-6)
    probs = herald_probabilities(setup)
    assert sum(probs.values()) == pytest.approx(1.0, abs=1e-9)


# --- J sets -----------------------------------------------------------------

def test_jset_members_and_contains():
    loc = JSet.local(2, 2)
    assert len(loc.members()) == 9
    glo = JSet.global_(2, 2)
    assert set(glo.members()) == {(0, 0), (0, 1), (1, 0), (1, 1), (0, 2), (2, 0)}
    assert loc.contains((2, 2)) and not glo.contains((2, 2))
    exp = JSet.explicit([(0, 0), (1, 2)])
    assert exp.contains((1, 2)) and not exp.contains((1, 1))
    assert exp.per_mode_limit() == (1, 2)
    with pytest.raises(ValueError):
        JSet.explicit([(1, 0)])  # missing the all-zeros pattern


# --- estimator --------------------------------------------------------------

def _records_from_means(means, counts):
    recs = []
    i = 0
    for pat, m in means.items():
        for _ in range(counts):
            recs.append(ShotRecord(i, (0.1,), pat, m, False))
            i += 1
    return recs


def test_estimator_linearity_reproduces_analytic():
    sp = make_space(1, [50])
    state = squeezed_vacuum(sp, 0.8, leakage_tol=1e-6)
    params = LossParams((0.1,))
    j_set = JSet.local(3, 1)
    obs = ProjectorObservable(state)
    rep = analytic_expectations(state, params, obs, j_set, leakage_tol=1e-6)
    dec = decompose_inverse(state, params, j_limit=3, leakage_tol=1e-6)
    recs = _records_from_means(rep.per_channel_means, 2)
    est = mitigated_estimator(recs, dec, j_set)
    assert est.mitigated_mean == pytest.approx(rep.expected_mitigated, abs=1e-12)
    assert est.variance == 0.0
    assert est.fractional_bias_estimate == pytest.approx(
        rep.fractional_bias_estimate, abs=1e-12)


def test_estimator_missing_channel_error():
    sp = make_space(1, [30])
    state = squeezed_vacuum(sp, 0.5, leakage_tol=1e-8)
    dec = decompose_inverse(state, LossParams((0.1,)), j_limit=2,
                            leakage_tol=1e-8)
    recs = [ShotRecord(0, (0.1,), (0,), 1.0, False),
            ShotRecord(1, (0.1,), (0,), 0.0, False)]
    with pytest.raises(MissingChannelError) as exc:
        mitigated_estimator(recs, dec, JSet.local(2, 1))
    assert "(1,)" in str(exc.value) and "(2,)" in str(exc.value)


def test_estimator_single_shot_channel_warns():
    sp = make_space(1, [30])
    state = squeezed_vacuum(sp, 0.5, leakage_tol=1e-8)
    dec = decompose_inverse(state, LossParams((0.1,)), j_limit=1,
                            leakage_tol=1e-8)
    recs = [ShotRecord(0, (0.1,), (0,), 1.0, False),
            ShotRecord(1, (0.1,), (0,), 0.0, False),
            ShotRecord(2, (0.1,), (1,), 0.5, False)]
    with pytest.warns(SingleShotChannelWarning):
        est = mitigated_estimator(recs, dec, JSet.local(1, 1))
    assert math.isfinite(est.mitigated_mean)


def test_j0_only_estimator_is_plain_average():
    sp = make_space(1, [10])
    vac = fock_basis_state(sp, (0,))
    dec = decompose_inverse(vac, LossParams((0.2,)), j_limit=0)
    recs = [ShotRecord(i, (0.2,), (0,), float(v), False)
            for i, v in enumerate([1, 0, 1, 1])]
    est = mitigated_estimator(recs, dec, JSet.local(0, 1))
    assert est.mitigated_mean == pytest.approx(0.75)


# --- analytic expectations --------------------------------------------------

def test_single_photon_exact_unbiasedness():
    sp = make_space(1, [12])
    state = fock_basis_state(sp, (1,))
    obs = ProjectorObservable(state)
    rep = analytic_expectations(state, LossParams((0.3,)), obs, JSet.local(1, 1))
    assert abs(rep.exact_bias) < 1e-12
    assert rep.fractional_bias_estimate < 1e-12


def test_cat_collapsed_unbiasedness():
    sp = make_space(1, [40])
    state = cat_state(sp, 1.0, 0.0, leakage_tol=1e-8)
    obs = ProjectorObservable(state)
    rep = analytic_expectations(state, LossParams((0.1,)), obs,
                                JSet.local(14, 1), leakage_tol=1e-6)
    assert abs(rep.exact_bias) < 1e-12


def test_zero_subtraction_improvement_on_displayed_grid():
    # the displayed curves: gamma varied at r0 = 1, r0 varied at gamma = 0.1
    cases = [(1.0, 0.05, 100), (1.0, 0.1, 100), (1.0, 0.15, 100),
             (0.5, 0.1, 60), (1.33, 0.1, 160)]
    for r0, gamma, cutoff in cases:
        sp = make_space(1, [cutoff])
        state = squeezed_vacuum(sp, r0, leakage_tol=1.0)
        obs = ProjectorObservable(state)
        rep = analytic_expectations(state, LossParams((gamma,)), obs,
                                    JSet.local(0, 1), leakage_tol=1.0)
        assert abs(rep.percentage_bias()) < abs(rep.unmitigated_percentage_bias())


def test_zero_subtraction_known_violation():
    # at (r0, gamma) = (1.33, 0.15) the amplified squeezing is unphysical
    # (tanh r_amp > 1) and zero subtraction makes the bias worse; the
    # improvement property holds only on the displayed parameter cross
    sp = make_space(1, [80])
    state = squeezed_vacuum(sp, 1.33, leakage_tol=1.0)
    obs = ProjectorObservable(state)
    rep = analytic_expectations(state, LossParams((0.15,)), obs,
                                JSet.local(0, 1), leakage_tol=1.0)
    assert abs(rep.percentage_bias()) > abs(rep.unmitigated_percentage_bias())


def test_partial_mitigation_dominance():
    sp = make_space(1, [70])
    state = squeezed_vacuum(sp, 1.0, leakage_tol=1e-6)
    params = LossParams((0.1,))
    obs = ProjectorObservable(state)
    j_set = JSet.local(3, 1)
    for gt in (0.02, 0.04, 0.06, 0.08, 0.1):
        rep = analytic_expectations(state, params, obs, j_set,
                                    assumed_params=LossParams((gt,)),
                                    leakage_tol=1e-3)
        assert abs(rep.percentage_bias()) <= abs(rep.unmitigated_percentage_bias())


def test_overhead_monotone_in_j_max():
    sp = make_space(2, [25, 25])
    state = two_mode_squeezed_vacuum(sp, 0.75, leakage_tol=1e-6)
    params = LossParams((0.15, 0.15))
    obs = covariance_entry_observable(sp, 0, 0)
    prev = 0.0
    for j in range(4):
        rep = analytic_expectations(state, params, obs, JSet.local(j, 2),
                                    mu=(0.105, 0.105), leakage_tol=1e-3)
        assert rep.sampling_overhead >= prev - 1e-12
        prev = rep.sampling_overhead


def test_pseudo_state_diagnostics():
    sp = make_space(1, [50])
    state = squeezed_vacuum(sp, 1.0, leakage_tol=1e-6)
    obs = ProjectorObservable(state)
    rep = analytic_expectations(state, LossParams((0.1,)), obs, JSet.local(2, 1),
                                leakage_tol=1e-3)
    # truncated quasi-probability pseudo-states are generally non-positive
    assert rep.pseudo_min_eigenvalue < 1e-12
    assert abs(np.trace(rep.pseudo_state.density()).real
               - sum(rep.weights.values())) < 1e-10


def test_optimize_mu_reproduces_grid_choice():
    sp = make_space(2, [25, 25])
    state = two_mode_squeezed_vacuum(sp, 0.75, leakage_tol=1e-6)
    params = LossParams((0.15, 0.15))
    obs = covariance_entry_observable(sp, 0, 0)
    mu = optimize_mu(state, params, obs, j_max=1, leakage_tol=1e-3,
                     include_variance_ratio=False)
    assert mu == pytest.approx(0.105, abs=1e-12)


# --- shot simulation --------------------------------------------------------

def _small_setup():
    sp = make_space(1, [40])
    state = squeezed_vacuum(sp, 0.6, leakage_tol=1e-8)
    params = LossParams((0.1,))
    setup = build_heralding(state, params, (0.15,), leakage_tol=1e-6)
    obs = ProjectorObservable(state)
    return state, params, setup, obs


def test_simulate_shots_seed_determinism():
    state, params, setup, obs = _small_setup()
    kw = dict(j_set=JSet.local(2, 1), leakage_tol=1e-4)
    a = simulate_shots(setup, None, obs, 500, PointMassGamma((0.1,)), 7, **kw)
    b = simulate_shots(setup, None, obs, 500, PointMassGamma((0.1,)), 7, **kw)
    c = simulate_shots(setup, None, obs, 500, PointMassGamma((0.1,)), 8, **kw)
    assert a == b
    assert a != c
    assert [r.shot_index for r in a] == list(range(500))


def test_simulate_shots_herald_frequencies():
    state, params, setup, obs = _small_setup()
    n = 40000
    recs = simulate_shots(setup, None, obs, n, PointMassGamma((0.1,)), 11,
                          j_limit=6, leakage_tol=1e-4)
    probs = herald_probabilities(setup, j_limit=6)
    counts = {}
    for r in recs:
        counts[r.herald_pattern] = counts.get(r.herald_pattern, 0) + 1
    for pat, p in probs.items():
        if p < 1e-4:
            continue
        sigma = math.sqrt(n * p * (1 - p))
        assert abs(counts.get(pat, 0) - n * p) < 4 * sigma


def test_simulate_shots_discards_outside_j_set():
    state, params, setup, obs = _small_setup()
    j_set = JSet.local(1, 1)
    recs = simulate_shots(setup, None, obs, 2000, PointMassGamma((0.1,)), 3,
                          j_set=j_set, leakage_tol=1e-4)
    for r in recs:
        assert r.discarded == (not j_set.contains(r.herald_pattern))
    assert any(r.discarded for r in recs)


def test_shot_pipeline_estimates_ideal_value():
    state, params, setup, obs = _small_setup()
    j_set = JSet.local(3, 1)
    dec = decompose_inverse(state, params, j_limit=3, leakage_tol=1e-6)
    recs = simulate_shots(setup, None, obs, 200000, PointMassGamma((0.1,)), 5,
                          j_set=j_set, leakage_tol=1e-4)
    est = mitigated_estimator(recs, dec, j_set)
    rep = analytic_expectations(state, params, obs, j_set, leakage_tol=1e-6)
    se = math.sqrt(est.variance)
    assert abs(est.mitigated_mean - rep.expected_mitigated) < 4 * se
    assert est.shots_total == 200000
    assert est.sampling_overhead > 1.0


# --- Monte-Carlo initial-state variant ---------------------------------------

def test_single_photon_mc_plan():
    sp = make_space(1, [6])
    plan = monte_carlo_state_plan(sp, "single_photon", {}, LossParams((0.3,)))
    assert plan.s_norm == pytest.approx(1.3 / 0.7, abs=1e-12)
    assert sorted(plan.signs) == [-1.0, 1.0]
    assert abs(sum(plan.probabilities) - 1.0) < 1e-12


def test_cat_mc_s_closed_form_and_parity_oracle():
    alpha, phi, gamma = 1.0, 0.0, 0.1
    s_pkg = cat_mc_s(alpha, phi, gamma)
    # independent oracle: parity-sector traces of the pseudo-inverse output
    dim = 26
    sp = make_space(1, [dim - 1])
    rho = cat_state(sp, alpha, phi, leakage_tol=1e-8).density()
    x = oracles.pseudo_inverse_loss(rho, sp.dims, (gamma,))
    par = np.diag((-1.0) ** np.arange(dim))
    w_even = float(np.trace((np.eye(dim) + par) / 2 @ x).real)
    w_odd = -float(np.trace((np.eye(dim) - par) / 2 @ x).real)
    assert s_pkg == pytest.approx(w_even + w_odd, abs=1e-8)
    assert s_pkg >= 1.0


def test_dual_rail_plan_s():
    for n in (1, 2, 3):
        sp = make_space(2 * n, [3] * (2 * n))
        plan = monte_carlo_state_plan(sp, "dual_rail", {"n_qubits": n},
                                      LossParams.uniform(0.2, 2 * n))
        assert plan.s_norm == pytest.approx(oracles.dual_rail_s(0.2, n), abs=1e-9)


def test_ecs_mc_exact_unbiasedness_at_point_mass():
    sp = make_space(2, [14, 14])
    params = LossParams((0.2, 0.3))
    plan = monte_carlo_state_plan(sp, "ecs", {"alpha": 1.0}, params,
                                  leakage_tol=1e-6)
    from losscancel import entangled_coherent_state, apply_loss, FockState
    rho0 = entangled_coherent_state(sp, 1.0, 1.0, -1, leakage_tol=1e-6)
    obs = ProjectorObservable(rho0)
    # exact expectation of the estimator: sum_k q_k S sgn_k <O>_noisy,k
    total = 0.0
    for st_, q, sgn in zip(plan.states, plan.probabilities, plan.signs):
        noisy = apply_loss(st_, params)
        total += q * plan.s_norm * sgn * obs.expectation(noisy)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_monte_carlo_run_determinism_and_accuracy():
    sp = make_space(2, [14, 14])
    params = LossParams((0.2, 0.2))
    plan = monte_carlo_state_plan(sp, "ecs", {"alpha": 1.0}, params,
                                  leakage_tol=1e-6)
    from losscancel import entangled_coherent_state
    rho0 = entangled_coherent_state(sp, 1.0, 1.0, -1, leakage_tol=1e-6)
    obs = ProjectorObservable(rho0)
    dist = PointMassGamma((0.2, 0.2))
    a = monte_carlo_run(plan, None, obs, 30000, dist, 21)
    b = monte_carlo_run(plan, None, obs, 30000, dist, 21)
    assert a.mitigated_mean == b.mitigated_mean
    se = math.sqrt(a.variance)
    assert abs(a.mitigated_mean - 1.0) < 4 * se
    assert a.sampling_overhead == pytest.approx(plan.s_norm ** 2)


def test_ecs_weights_normalization():
    w_keep, probs = None, None
    weights = ecs_mc_weights(1.0, 0.2, 0.3)
    total = sum(abs(w) for w in weights)
    assert total >= 1.0
    assert all(math.isfinite(w) for w in weights)
