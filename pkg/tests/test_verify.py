import numpy as np
import pytest

from opmeans.errors import VerificationFailure
from opmeans.measures import convex_order_leq
from opmeans.verify import (
    SUITES,
    _fail,
    axiom_means,
    mean_preserving_spread,
    random_discrete_measure,
    run_suite,
)


@pytest.mark.parametrize(
    "name, trials",
    [("ka-axioms", 2), ("generators", 1), ("convex-order", 3), ("karcher", 1),
     ("bw", 1), ("hellinger", 1), ("sigma", 1), ("gradients", 1)],
)
def test_suites_pass(name, trials):
    summary = run_suite(name, seed=3, trials=trials)
    assert summary["passed"] is True
    assert summary["checks"] > 0


def test_every_suite_is_covered():
    assert set(SUITES) == {"ka-axioms", "generators", "convex-order", "karcher", "bw", "hellinger", "sigma",
                           "gradients"}


@pytest.mark.parametrize("name, minimum", [("karcher", 50), ("sigma", 10), ("gradients", 10)])
def test_default_trial_counts(name, minimum):
    assert SUITES[name][1] >= minimum


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suite("nope")


def test_axiom_means_are_valid():
    for sigma in axiom_means():
        assert sigma.f(1.0) == pytest.approx(1.0)


def test_spread_dominates(rng):
    for _ in range(10):
        mu = random_discrete_measure(rng)
        assert convex_order_leq(mu, mean_preserving_spread(mu, rng))


def test_failure_carries_counterexample():
    with pytest.raises(VerificationFailure) as info:
        _fail("demo", "check", A=np.eye(2), value=1.5)
    payload = info.value.counterexample
    assert payload["suite"] == "demo"
    assert payload["A"] == [[1.0, 0.0], [0.0, 1.0]]
    assert info.value.category == "verify-failed"
