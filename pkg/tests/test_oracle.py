import random
from fractions import Fraction

import pytest

from toystab.algebra import Element, Group, matrix_diag
from toystab.oracle import (CapExceeded, Distribution, check_cap,
                            group_from_distribution, measure_observable)

from conftest import random_element, random_group

HALF = Fraction(1, 2)


def test_plus_z_distribution():
    d = Distribution.from_group(Group.parse("+Z").require_valid())
    assert d.probs == (HALF, HALF, 0, 0)


def test_empty_group_is_uniform():
    d = Distribution.from_group(Group(1, []))
    assert d.probs == (Fraction(1, 4),) * 4


def test_two_system_correlated():
    d = Distribution.from_group(Group.parse("+XX\n+YY").require_valid())
    assert len(d.support) == 4
    assert all(p in (0, Fraction(1, 4)) for p in d.probs)


def test_rank_law(rng):
    # support size is 4^n / 2^rank for every valid group
    for _ in range(60):
        n = rng.randrange(1, 5)
        rank = rng.randrange(0, n + 1)
        g = random_group(rng, n, rank)
        d = Distribution.from_group(g)
        assert len(d.support) == 4 ** n // 2 ** rank


def test_distribution_matches_projector_matrix(rng):
    # the distribution literally equals the diagonal of prod (I + g) / 4^n
    for _ in range(25):
        n = rng.randrange(1, 4)
        g = random_group(rng, n, rng.randrange(1, n + 1))
        diag = [Fraction(1)] * 4 ** n
        for gen in g.canonical:
            md = matrix_diag(gen)
            diag = [d * (1 + m) / 2 for d, m in zip(diag, md)]
        scale = Fraction(2 ** len(g.canonical), 4 ** n)
        diag = [d * scale for d in diag]
        assert list(Distribution.from_group(g).probs) == diag


def test_projector_probability_fixture():
    d = Distribution.from_group(Group.parse("+Z").require_valid())
    assert d.projector_probability(Group.parse("+Z")) == 1
    assert d.projector_probability(Group.parse("-Z")) == 0
    assert d.projector_probability(Group.parse("+X")) == HALF
    assert d.projector_probability(Group.parse("-X")) == HALF


def test_measure_observable_probabilities(rng):
    for _ in range(40):
        n = rng.randrange(1, 4)
        g = random_group(rng, n, rng.randrange(1, n + 1))
        d = Distribution.from_group(g)
        e = random_element(rng, n)
        branches = measure_observable(d, e)
        assert sum(p for _, p, _ in branches) == 1
        for _, p, post in branches:
            # every posterior is again a valid state
            back = group_from_distribution(post)
            assert back.is_valid


def test_measure_observable_disturbs():
    # measuring an incompatible observable and forgetting the outcome
    # re-randomizes: conditioning alone would keep the support at 2 points
    d = Distribution.from_group(Group.parse("+Z").require_valid())
    branches = measure_observable(d, Element.parse("+X"))
    for _, p, post in branches:
        assert p == HALF
        assert len(post.support) == 2
        assert group_from_distribution(post).canonical \
            != Group.parse("+Z").canonical


def test_marginal_and_permuted(rng):
    g = Group.parse("+XX\n+ZZ").require_valid()
    d = Distribution.from_group(g)
    m = d.marginal([0])
    assert m.probs == (Fraction(1, 4),) * 4


def test_sample_is_exact_and_seeded():
    d = Distribution.from_group(Group.parse("+Z").require_valid())
    seq = [d.sample(random.Random(5)) for _ in range(3)]
    assert seq[0] == seq[1] == seq[2]
    assert all(s in d.support for s in seq)


def test_sample_frequencies():
    d = Distribution.from_group(Group(1, []))
    r = random.Random(99)
    counts = [0, 0, 0, 0]
    trials = 100_000
    for _ in range(trials):
        counts[d.sample(r)] += 1
    for c in counts:
        assert abs(c / trials - 0.25) < 0.01


def test_json_round_trip(rng):
    for _ in range(10):
        n = rng.randrange(1, 4)
        d = Distribution.from_group(random_group(rng, n, rng.randrange(n + 1)))
        assert Distribution.from_json(d.to_json()) == d


def test_cap_enforced():
    with pytest.raises(CapExceeded):
        check_cap(7)
    check_cap(7, cap=8)  # explicit override is fine


def test_group_from_distribution_rejects_non_states():
    d = Distribution.from_group(Group.parse("+Z").require_valid())
    probs = list(d.probs)
    probs[0], probs[2] = probs[2], Fraction(1, 4)
    probs[1] = Fraction(1, 4)
    with pytest.raises(ValueError):
        group_from_distribution(Distribution(1, tuple(probs)))
