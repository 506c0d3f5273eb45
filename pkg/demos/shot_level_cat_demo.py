"""Shot-level loss cancellation for a cat state, the Monte-Carlo way.

Instead of heralding on photon subtraction, the inverse map for a two
component cat collapses to just two preparable states (the amplified even
and odd cats). Sampling which one to prepare, measuring the fidelity
projector on the lossy output, and weighting by +/- S reproduces the
noise-free fidelity of 1.

Run with:  python3 demos/shot_level_cat_demo.py
"""

import math

from losscancel import (
    LossParams,
    PointMassGamma,
    ProjectorObservable,
    cat_state,
    make_space,
    monte_carlo_run,
    monte_carlo_state_plan,
)


def main():
    alpha, gamma, shots = 1.0, 0.1, 100000
    space = make_space(1, [30])
    params = LossParams((gamma,))
    plan = monte_carlo_state_plan(space, "cat", {"alpha": alpha, "phi": 0.0},
                                  params, leakage_tol=1e-6)
    target = cat_state(space, alpha, 0.0, leakage_tol=1e-6)
    obs = ProjectorObservable(target)

    print(f"cat alpha = {alpha}, gamma = {gamma}")
    print(f"ensemble: {plan.labels}, probabilities {plan.probabilities}")
    print(f"one-norm S = {plan.s_norm:.6f}  (overhead S^2 = {plan.s_norm**2:.4f})")
    print()
    cache = {}
    for seed in (1, 2, 3):
        rep = monte_carlo_run(plan, None, obs, shots, PointMassGamma((gamma,)),
                              seed, cache=cache)
        se = math.sqrt(rep.variance)
        print(f"seed {seed}: fidelity estimate {rep.mitigated_mean:.4f} "
              f"+/- {se:.4f}  (true value 1)")


if __name__ == "__main__":
    main()
