import random

import pytest

from telescopes.action import (
    CantorPoint, LimitPoint, act_cantor_prefix, act_limit, act_word, bounded_type_profile,
    check_projective_action, check_transitivity_limit, limit_point, parse_cantor_point,
    parse_limit_point, stabilization_level, transitivity_witness,
)
from telescopes.instances import build_el
from telescopes.normalform import random_word
from telescopes.telescope import delta, letterwise, substream, tilde
from telescopes.verify import default_generators


def _point(spec, rng, top=3):
    return limit_point(spec, [rng.randrange(5) for _ in range(rng.randint(0, top))])


def test_limit_points_drop_trailing_spine(alt52):
    p = limit_point(alt52, [0, 4, 4])
    assert p == LimitPoint((0,)) and p.at(3, 4) == (0, 4, 4)
    assert parse_limit_point(alt52, "x1x5@2") == p
    assert p.format(alt52) == "x1@1"
    with pytest.raises(ValueError):
        parse_limit_point(alt52, "x1x5@3")


def test_action_matches_level_permutation(alt52):
    rng = random.Random(0)
    for _ in range(20):
        g = random_word(alt52, 3, rng)
        x = _point(alt52, rng)
        t = stabilization_level(g, x.level)
        w = x.at(t + 1, alt52.spine)
        assert act_word(g, w) == alt52.index_word(int(g.act(t + 1, [alt52.word_index(w)])[0]), t + 1)


def test_action_is_associative(alt52):
    rng = substream(1, "assoc")
    for _ in range(20):
        g, h = random_word(alt52, 3, rng), random_word(alt52, 3, rng)
        x = _point(alt52, rng)
        assert act_limit(g * h, x) == act_limit(g, act_limit(h, x))


def test_level_budget(alt52):
    g = tilde(alt52, 1, alt52.b_gens()[0])
    deep = LimitPoint((0,) * 30)
    with pytest.raises(ValueError, match="budget"):
        act_limit(g, deep, budget=20)
    assert act_limit(g, deep).level == 30


def test_letterwise_elements_have_no_limit_action(alt52):
    from telescopes.permgrp import Perm
    with pytest.raises(ValueError):
        act_limit(letterwise(alt52, Perm([1, 0, 2, 3, 4])), LimitPoint(()))


def test_cantor_prefix(alt52):
    g = tilde(alt52, 1, alt52.b_gens()[0])
    res = act_cantor_prefix(g, CantorPoint((0, 0)), 4)
    assert res.complete and res.letters == (0, 1, 4, 4)
    unknown = act_cantor_prefix(g, CantorPoint((0,), None), 4)
    assert not unknown.complete
    # a Delta atom only needs the first letters
    d = delta(alt52, 1, alt52.level_gens(1)[0])
    res = act_cantor_prefix(d, CantorPoint((0, 3), None), 2)
    assert res.complete and res.letters[1] == 3
    assert parse_cantor_point(alt52, "px1x2(o*)") == CantorPoint((0, 1), "o")
    assert parse_cantor_point(alt52, "px1").tail is None


def test_transitivity(alt52):
    assert check_transitivity_limit(alt52, 1, sample_budget=10).passed
    assert check_transitivity_limit(alt52, 2, sample_budget=10).passed
    with pytest.raises(ValueError):
        transitivity_witness(alt52, [LimitPoint(()), LimitPoint(())], [LimitPoint((0,)), LimitPoint((1,))])


def test_bounded_type_profiles(alt52):
    for g in default_generators(alt52):
        prof = bounded_type_profile(g, 5, start=2)
        assert len(set(prof.values())) == 1 and max(prof.values()) <= 3
    two = default_generators(alt52)
    prof = bounded_type_profile(two[-1] * two[-2], 4, start=2)
    assert max(prof.values()) <= 6


def test_projective_action():
    assert check_projective_action(build_el(4, 2, max_level=4), top=4).passed
