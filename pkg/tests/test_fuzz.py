import numpy as np

from fuzzing import mutate, run_fuzz


def test_mutator_is_seeded():
    a = mutate(b"hello world", np.random.default_rng(3))
    b = mutate(b"hello world", np.random.default_rng(3))
    assert a == b


def test_parsers_only_raise_typed_errors():
    n, typed, failures = run_fuzz(10_000, seed=1)
    assert n == 10_000
    assert typed > n // 2
    assert not failures, failures[:5]
