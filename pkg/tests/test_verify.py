import json
import math
import random
from fractions import Fraction
from pathlib import Path

import jsonschema

from telescopes.permgrp import alt_order
from telescopes.telescope import delta, tilde
from telescopes.verify import (
    VerificationReport, build_two_generators_alt, check_commutator_axiom, check_flexibility,
    check_frame_surjectivity, check_generation_axiom, check_glued_frame, cons_volume,
    cons_volume_conjugated, consistency_mask, default_generators, epsilon_element, is_prime,
    nagura_prime, reports_json, truncated_perm, verify_two_generation,
)

SCHEMA = json.loads((Path(__file__).resolve().parent.parent / "schemas" / "report.v1.json").read_text())


def _full_block_b(spec):
    """A B element moving points in every block {a} x X, a <= r."""
    return next(b for b in spec.b_gens()
                if {int(spec._pair_a[p]) for p in b.support()} == set(range(spec.params["r"])))


def test_axioms_for_alternating_telescope(alt52):
    assert check_commutator_axiom(alt52, 6, samples=2).passed
    rep = check_flexibility(alt52, 6, samples=2)
    assert rep.passed
    assert {d["id"] for d in rep.details} >= {"symbolic-F1", "symbolic-F2", "symbolic-F3"}


def test_generation_orders(alt52):
    rep = check_generation_axiom(alt52, 2)
    assert rep.passed and rep.quantities["order"] == math.factorial(25) // 2


def test_frame_at_two_levels(alt52):
    rep = check_frame_surjectivity(alt52, 2)
    assert rep.passed and rep.quantities["order"] == 60 * alt_order(25)


def test_truncation_is_a_homomorphism(alt52):
    g, h = default_generators(alt52)[:2]
    assert truncated_perm(g * h, [1, 2]) == truncated_perm(g, [1, 2]) * truncated_perm(h, [1, 2])


def test_linear_generation_counts_positions(el42):
    rep = check_generation_axiom(el42, 2)
    assert rep.passed and rep.quantities["positions"] == 240


def test_primes():
    assert [p for p in range(30) if is_prime(p)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert nagura_prime(25) == 13
    for N in range(25, 200):
        p = nagura_prime(N)
        assert p is not None and N / 2 < p < 2 * N / 3


def test_two_generator_certificate(alt52):
    a, b, cert = build_two_generators_alt(alt52)
    assert (cert["n"], cert["p"]) == (2, 13)
    assert cert["jordan_alt"] and cert["tau_generate_B"] and cert["tau_coprime_to_p"]
    rep = verify_two_generation(a, b, 2, 2)
    assert rep.passed and rep.quantities["order"] == alt_order(25)


def test_consistency_volumes(alt52):
    eps = epsilon_element(alt52)
    for i in range(1, 5):
        mask, exact = consistency_mask(eps, i)
        assert exact and not mask.any()
    c = _full_block_b(alt52)
    for i in range(1, 5):
        assert cons_volume(tilde(alt52, 1, c), i) == Fraction(5**i - 3, 5**i)
        assert cons_volume(delta(alt52, 1, alt52.level_gens(1)[0]), i) == 1


def test_consistency_against_brute_force(alt52):
    """Consistent means: the deeper levels act as the level-i image with the
    suffix untouched, checked here word by word."""
    g = tilde(alt52, 1, alt52.b_gens()[0]) * delta(alt52, 2, alt52.level_gens(2)[1])
    i = 2
    mask, _ = consistency_mask(g, i)
    base = g.project(i).images
    deep = g.project(5).images
    M = 5**3
    for w in range(25):
        ok = all(deep[w * M + s] == base[w] * M + s for s in range(M))
        assert ok == bool(mask[w])


def test_subadditivity(alt52):
    rng = random.Random(3)
    gens = default_generators(alt52)
    for _ in range(10):
        g = gens[rng.randrange(len(gens))] * gens[rng.randrange(len(gens))]
        h = gens[rng.randrange(len(gens))]
        for i in range(1, 4):
            assert cons_volume(g * h, i) >= cons_volume(g, i) + cons_volume(h, i) - 1


def test_conjugation_by_epsilon_preserves_consistency(alt52):
    eps = epsilon_element(alt52)
    for g in default_generators(alt52):
        for i in range(1, 4):
            assert cons_volume_conjugated(g, eps, i) == cons_volume(g, i)


def test_glued_frame(alt52):
    rep = check_glued_frame(alt52, 2)
    assert rep.passed and rep.quantities["order"] == 60 * alt_order(25)


def test_reports_are_deterministic_and_valid(alt52):
    runs = [reports_json([check_commutator_axiom(alt52, 4, seed=9), check_generation_axiom(alt52, 2, seed=9)])
            for _ in range(2)]
    assert runs[0] == runs[1]
    jsonschema.validate(json.loads(runs[0]), SCHEMA)


def test_report_verdict_aggregation():
    rep = VerificationReport("x", "s", "1", "m")
    rep.add("a", "m", "1", "pass")
    rep.add("b", "m", "1", "unavailable")
    assert rep.finalize().verdict == "pass"
    rep.add("c", "m", "1", "fail")
    assert rep.finalize().verdict == "fail"


def test_support_volume(alt52):
    from telescopes.verify import support_volume
    g = delta(alt52, 1, alt52.level_gens(1)[0])
    moved = len(alt52.level_gens(1)[0].support())
    for i in range(1, 4):
        assert support_volume(g, i) == Fraction(moved, 5)
    assert support_volume(tilde(alt52, 1, alt52.b_gens()[0]), 1) == 0
