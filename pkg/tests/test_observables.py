import numpy as np
import pytest

from losscancel import (
    BosonicOperator,
    LossParams,
    MatrixObservable,
    ProductObservable,
    ProjectorObservable,
    apply_loss,
    cat_state,
    covariance_entry_observable,
    covariance_matrix,
    make_space,
    number_observable,
    number_op,
    squeezed_vacuum,
    two_mode_squeezed_vacuum,
)
from losscancel.protocol import _loss_bundle

import oracles


def _dist_mean(values, probs):
    return float((np.asarray(values) * np.asarray(probs)).sum())


def _noisy_bundle(state, gammas):
    return _loss_bundle(state.data, state.space.dims, gammas, {})


def test_projector_distribution_matches_density():
    sp = make_space(1, [30])
    st_ = squeezed_vacuum(sp, 0.7, leakage_tol=1e-6)
    obs = ProjectorObservable(st_)
    bundle = _noisy_bundle(st_, (0.1,))
    vals, probs = obs.outcome_distribution(bundle, sp)
    rho = apply_loss(st_, LossParams((0.1,))).density()
    ref = float(np.vdot(st_.data, rho @ st_.data).real)
    assert _dist_mean(vals, probs) == pytest.approx(ref, abs=1e-12)
    assert set(vals) == {0.0, 1.0}


def test_matrix_observable_distribution_matches_trace():
    sp = make_space(1, [12])
    st_ = cat_state(sp, 0.8, 0.0)
    obs = MatrixObservable(number_op(sp))
    bundle = _noisy_bundle(st_, (0.25,))
    vals, probs = obs.outcome_distribution(bundle, sp)
    rho = apply_loss(st_, LossParams((0.25,))).density()
    ref = float(np.trace(number_op(sp).matrix @ rho).real)
    assert _dist_mean(vals, probs) == pytest.approx(ref, abs=1e-10)


def test_product_observable_matches_matrix_route():
    sp = make_space(2, [10, 10])
    st_ = two_mode_squeezed_vacuum(sp, 0.5, leakage_tol=1e-4)
    obs = covariance_entry_observable(sp, 0, 2)  # 2 x1 x2
    bundle = _noisy_bundle(st_, (0.1, 0.2))
    vals, probs = obs.outcome_distribution(bundle, sp)
    generic = MatrixObservable(BosonicOperator(sp, obs.matrix(sp),
                                               hermitian_hint=True))
    vals2, probs2 = generic.outcome_distribution(bundle, sp)
    assert _dist_mean(vals, probs) == pytest.approx(_dist_mean(vals2, probs2),
                                                    abs=1e-10)
    # second moments agree too, so the sampled variance is faithful
    m2a = float((np.asarray(vals) ** 2 * probs).sum())
    m2b = float((np.asarray(vals2) ** 2 * probs2).sum())
    assert m2a == pytest.approx(m2b, abs=1e-10)


def test_covariance_entries_reproduce_covariance_matrix():
    r = 0.6
    sp = make_space(2, [25, 25])
    st_ = two_mode_squeezed_vacuum(sp, r, leakage_tol=1e-8)
    sigma = covariance_matrix(st_)
    for (k, l) in [(0, 0), (1, 1), (0, 2), (1, 3)]:
        obs = covariance_entry_observable(sp, k, l)
        assert obs.expectation(st_) == pytest.approx(sigma[k, l], abs=1e-8)


def test_same_mode_cross_quadrature_rejected():
    sp = make_space(2, [5, 5])
    with pytest.raises(ValueError):
        covariance_entry_observable(sp, 0, 1)  # x1 p1 do not commute


def test_number_observable_outcomes_are_integers():
    sp = make_space(1, [9])
    st_ = cat_state(sp, 0.7, 0.0, leakage_tol=1e-6)
    obs = number_observable(sp, 0)
    vals, probs = obs.outcome_distribution(_noisy_bundle(st_, (0.0,)), sp)
    assert np.allclose(np.sort(vals), np.arange(10))
    # even cat: odd Fock levels carry no weight
    assert probs[np.asarray(vals) % 2 == 1].max() < 1e-12


def test_projector_requires_pure_target():
    sp = make_space(1, [8])
    st_ = cat_state(sp, 0.5, 0.0, leakage_tol=1e-6)
    from losscancel import FockState
    mixed = FockState(sp, st_.density())
    with pytest.raises(ValueError):
        ProjectorObservable(mixed)
