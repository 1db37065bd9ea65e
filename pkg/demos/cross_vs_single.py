"""Does an auxiliary domain help before any elicitation happens?

Builds corpora with increasing cross-domain taste correlation and compares
the t=0 MAE of the single- and cross-domain scenarios.

    python3 demos/cross_vs_single.py
"""

from elicitsim import AUXILIARY, TARGET, Hyperparams, build_dataset, run_experiment
from elicitsim.synthetic import SyntheticSpec, generate


def main():
    hp = Hyperparams(factor_count=10, learning_rate=0.01, epochs_per_factor=50)
    print("correlation  single  cross")
    for rho in (0.0, 0.5, 1.0):
        t, a = generate(SyntheticSpec(n_users=120, correlation=rho,
                                      shared_item_factors=rho == 1.0, seed=1))
        target, aux = build_dataset(t, TARGET), build_dataset(a, AUXILIARY)
        single = run_experiment(target, aux, "single", None, hp)[0].mae
        cross = run_experiment(target, aux, "cross", None, hp)[0].mae
        print(f"{rho:>11.1f}  {single:.4f}  {cross:.4f}")


if __name__ == "__main__":
    main()
