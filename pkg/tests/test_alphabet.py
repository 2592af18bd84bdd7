import itertools

import pytest
from hypothesis import given, strategies as st

from telescopes.alphabet import (
    AlphabetWord, CylinderSet, all_words, cylinder_disjoint, cylinder_extend, format_word,
    index_to_word, pairwise_disjoint, parse_word, word_to_index,
)


@given(st.integers(2, 6), st.integers(0, 5), st.data())
def test_index_roundtrip(d, level, data):
    i = data.draw(st.integers(0, d**level - 1))
    w = index_to_word(i, level, d)
    assert word_to_index(w) == i
    assert len(w) == level


def test_lexicographic_order_matches_enumeration():
    for i, w in enumerate(all_words(3, 4)):
        assert word_to_index(w, 4) == i


def test_word_text_roundtrip():
    w = parse_word("x5x5x1", 5)
    assert w.letters == (5, 5, 1)
    assert str(w) == "x5x5x1"
    assert format_word(()) == "e"
    assert parse_word("e", 5).letters == ()


@pytest.mark.parametrize("bad", ["x6", "y1", "x1x", "x0"])
def test_bad_words_rejected(bad):
    with pytest.raises(ValueError):
        parse_word(bad, 5)


def test_concatenation_checks_alphabet():
    assert (AlphabetWord((1,), 5) + AlphabetWord((2, 3), 5)).letters == (1, 2, 3)
    with pytest.raises(ValueError):
        AlphabetWord((1,), 5) + AlphabetWord((1,), 4)


def test_cylinder_membership_and_cardinality():
    c = CylinderSet.build(5, 5, None, {1, 2})
    words = list(c.words())
    assert c.cardinality() == len(words) == 10
    brute = [w for w in itertools.product(range(1, 6), repeat=3) if w in c]
    assert sorted(brute) == sorted(words)
    assert sorted(c.indices()) == sorted(word_to_index(w, 5) for w in words)


def test_cylinder_disjointness_against_brute_force():
    a = CylinderSet.build(5, ("full", 1), 5, {1, 2})
    b = CylinderSet.build(5, ("full", 1), {4, 5}, 3)
    c = CylinderSet.build(5, 1, None, None)
    for x, y in [(a, b), (a, c), (b, c)]:
        brute = not (set(x.words()) & set(y.words()))
        assert cylinder_disjoint(x, y) == brute
    assert pairwise_disjoint([a, CylinderSet.build(5, None, 4, None)])


def test_extend_pads_full_coordinates():
    c = cylinder_extend(CylinderSet.build(5, 2), 2)
    assert c.level == 3 and c.cardinality() == 25
    mixed = cylinder_extend(CylinderSet.build(5, 2), 1, sizes=[3])
    assert mixed.cardinality() == 3 and mixed.sizes == (5, 3)
