import pytest

from elicitsim.data import AUXILIARY, TARGET, build_dataset
from elicitsim.mf import Hyperparams
from elicitsim.synthetic import SyntheticSpec, generate

# protocol checks only need a model that trains, not a good one
TINY_HP = Hyperparams(factor_count=2, epochs_per_factor=5, learning_rate=0.01)


def corpus(n_users=20, n_items=60, seed=0, **kw):
    spec = SyntheticSpec(n_users=n_users, n_target_items=n_items, n_aux_items=n_items,
                         density=0.5, seed=seed, **kw)
    t, a = generate(spec)
    return build_dataset(t, TARGET), build_dataset(a, AUXILIARY)


@pytest.fixture(scope="session")
def small_corpus():
    return corpus()


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "skipped"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance" not in getattr(rep, "nodeid", ""):
                continue
            if getattr(rep, "when", "call") != "call" and outcome != "skipped":
                continue
            label = dict(getattr(rep, "user_properties", [])).get("criterion")
            label = label or rep.nodeid.split("::")[-1]
            lines.append((label, outcome.upper()))
    if lines:
        terminalreporter.section("acceptance criteria")
        for label, outcome in sorted(lines):
            terminalreporter.write_line(f"[{outcome}] criterion {label}")
