"""How each strategy ranks the same candidate list for one new user.

Trains a model on a toy corpus, builds rating statistics, and prints the
top few candidates each strategy would ask about.

    python3 demos/scoring.py
"""

from elicitsim import (TARGET, Hyperparams, StrategyKind, build_dataset, compute_stats,
                       rank_candidates, train)
from elicitsim.data import qualify
from elicitsim.strategies import score
from elicitsim.synthetic import SyntheticSpec, generate


def main():
    t, _ = generate(SyntheticSpec(n_users=40, n_target_items=80, n_aux_items=80, seed=7))
    ds = build_dataset(t, TARGET)
    model = train(ds, Hyperparams(factor_count=5, learning_rate=0.01, epochs_per_factor=30))
    stats = compute_stats(ds, ds.users)

    user = ds.users[0]
    rated = {i for i, _ in ds.ratings_of(user)}
    candidates = [i for i in ds.items if i not in rated][:25]
    print(f"user {user}: {len(candidates)} candidates\n")
    for kind in StrategyKind:
        # the model keys items by domain, the statistics by plain id
        keys = [qualify(TARGET, i) for i in candidates] if kind.personalized else candidates
        ranked = rank_candidates(score(kind, model, stats, user, keys))
        print(f"{kind.value:<18}", " ".join(k.split(":")[-1] for k in ranked[:6]))

    # entropy0 treats "not rated" as a sixth outcome; popular items rise
    print("\nitem  count  histogram(1..5)")
    for item in candidates[:6]:
        r = stats.row(item)
        print(f"{item}  {stats.count[r]:>5}  {stats.histogram[r].tolist()}")


if __name__ == "__main__":
    main()
