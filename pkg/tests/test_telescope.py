import random

import numpy as np
import pytest

from telescopes.instances import build_alt, build_el, build_psl
from telescopes.permgrp import alt_order
from telescopes.telescope import (
    Atom, ExpressionError, LazyElement, TelescopeSpec, commutator, conjugate, delta, equal_all_levels,
    equal_up_to, format_element, one_hot, parse_element, shift, substream, tilde,
)


def _generic(spec, g, n):
    """Evaluate through iota and phi only, bypassing the pointwise evaluator."""
    val = spec.identity(n)
    for atom in g.atoms:
        val = val * TelescopeSpec._atom_projection(spec, atom, n)
    return val


def _random_element(spec, rng, length=4):
    atoms = []
    for _ in range(length):
        if rng.random() < 0.5:
            i = rng.randint(1, 3)
            atoms.append(Atom("D", i, spec.random_level(i, rng)))
        else:
            atoms.append(Atom("T", rng.randint(1, 3), spec.random_b(rng)))
    return LazyElement(spec, atoms)


def test_level_orders(alt52):
    assert [alt52.level_size(i) for i in range(1, 4)] == [5, 25, 125]
    assert alt52.level_order(2) == alt_order(25)


def test_pointwise_matches_generic_evaluation(alt52):
    rng = substream(1, "pointwise")
    for _ in range(20):
        g = _random_element(alt52, rng)
        for n in range(1, 5):
            assert g.project(n) == _generic(alt52, g, n)


def test_pointwise_matches_generic_on_linear(el42):
    rng = substream(2, "pointwise-linear")
    for _ in range(10):
        g = _random_element(el42, rng)
        for n in range(1, 4):
            assert g.project(n) == _generic(el42, g, n)


def test_tilde_recursion_and_homomorphism(alt52):
    rng = substream(3, "recursion")
    for _ in range(10):
        b, c = alt52.random_b(rng), alt52.random_b(rng)
        for n in range(1, 4):
            rec = delta(alt52, n + 1, alt52.phi(n + 1, b)) * tilde(alt52, n + 1, b)
            rev = tilde(alt52, n + 1, b) * delta(alt52, n + 1, alt52.phi(n + 1, b))
            assert equal_up_to(tilde(alt52, n, b), rec, 6)
            assert equal_up_to(tilde(alt52, n, b), rev, 6)
            assert equal_up_to(tilde(alt52, n, b * c), tilde(alt52, n, b) * tilde(alt52, n, c), 6)


@pytest.mark.parametrize("make", [lambda: build_alt(5, 2), lambda: build_el(4, 2, max_level=4)])
def test_subgroup_commutator_identity(make):
    spec = make()
    rng = substream(4, "commutator-identity")
    for _ in range(5):
        h, k = spec.random_b(rng), spec.random_b(rng)
        for i in range(1, spec.max_level - 1):
            a = delta(spec, i, spec.alpha(i))
            lhs = commutator(tilde(spec, i, h), a * tilde(spec, i, k) * a.inverse())
            rhs = delta(spec, i + 1, spec.phi(i + 1, h * k * h.inverse() * k.inverse()))
            assert equal_up_to(lhs, rhs, min(spec.max_level, 5))


def test_word_cancellation_and_conjugation(alt52):
    g = parse_element(alt52, "T(1,b0)*D(2,g1)")
    assert (g * g.inverse()).atoms == ()
    h = parse_element(alt52, "D(1,g0)")
    assert equal_up_to(conjugate(g, h), h.inverse() * g * h, 4)


def test_exact_equality_in_the_product(alt52):
    rng = random.Random(5)
    b = alt52.random_b(rng)
    g = tilde(alt52, 1, b)
    same, L = equal_all_levels(g, delta(alt52, 2, alt52.phi(2, b)) * tilde(alt52, 2, b))
    assert same and L == 4
    w = alt52.random_level(2, rng)
    assert not equal_all_levels(g, g * one_hot(alt52, 2, w))[0]


def test_expression_roundtrip(alt52):
    for text in ["T(1,b0)", "D(2,g1)*T(2,b1)^-1", "(D(1,g0)*T(1,b0))^-1", "1"]:
        g = parse_element(alt52, text)
        again = parse_element(alt52, format_element(g))
        assert equal_up_to(g, again, 4)


@pytest.mark.parametrize("text,pos", [("T(1,b0", 6), ("X(1,b0)", 0), ("T(1,b0)*", 8),
                                      ("D(1,g0))", 7)])
def test_malformed_expressions_report_position(alt52, text, pos):
    with pytest.raises(ExpressionError) as err:
        parse_element(alt52, text)
    assert err.value.position == pos


def test_shifted_telescope_levels(alt52):
    s = shift(alt52, 1)
    assert s.level_size(1) == alt52.level_size(2)
    rng = random.Random(6)
    b = alt52.random_b(rng)
    assert s.phi(2, b) == alt52.phi(3, b)


def test_psl_quotient_identifies_scalars():
    spec = build_psl(4, 3, max_level=2)
    minus = spec.identity(1).scale(spec.base.field.neg_one())
    assert spec.is_identity(minus)
    assert not spec.base.is_identity(minus)


def test_linear_projection_preserves_determinant(el42):
    rng = random.Random(7)
    g = _random_element(el42, rng)
    for n in range(1, 4):
        assert g.project(n).det() == 1
        assert np.count_nonzero(g.project(n).a) > 0
