"""Acceptance suite: one test and one printed PASS/FAIL line per criterion.

Orders are compared as exact integers, identities as exact permutations or
matrices; nothing here uses a floating tolerance."""

import json
import time
from fractions import Fraction

import numpy as np
import pytest

from telescopes import verify as V
from telescopes.action import (
    act_limit, act_word, bounded_type_profile, check_transitivity_limit, limit_point,
    stabilization_level,
)
from telescopes.cli import main as cli_main
from telescopes.instances import build_alt, build_el, build_embed, directed_tree_embedding
from telescopes.linfq import Field, MatFq, find_noncommuting_tau, is_scalar, random_sl
from telescopes.normalform import (
    _equal_at, head_equal, in_direct_sum, random_word, simplicity_witness,
    sl_nonscalar_witness, weak_normal_form,
)
from telescopes.permgrp import alt_order
from telescopes.telescope import delta, equal_up_to, one_hot, substream, tilde

SEED = 2024
A25, A125, A360 = alt_order(25), alt_order(125), alt_order(360)


@pytest.fixture
def report(capsys):
    def emit(n: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n[criterion {n:2d}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


@pytest.fixture(scope="module")
def A():
    return build_alt(5, 2)


def test_criterion_01_axioms(A, report):
    t0 = time.perf_counter()
    comm = V.check_commutator_axiom(A, 6, exact_levels=4, seed=SEED, samples=3)
    flex = V.check_flexibility(A, 6, exact_levels=4, seed=SEED, samples=3)
    symbolic = [d for r in (comm, flex) for d in r.details if d["id"].startswith("symbolic")]
    g2 = V.check_generation_axiom(A, 2, seed=SEED)
    g3 = V.check_generation_axiom(A, 3, seed=SEED)
    elapsed = time.perf_counter() - t0
    ok = (comm.passed and flex.passed and all(d["verdict"] == "pass" for d in symbolic)
          and g2.quantities["order"] == A25 and g3.quantities["order"] == A125 and elapsed <= 300)
    report(1, ok, f"commutator/F1-F3 symbolic to 6 and exact to 4, generation orders 25!/2 and "
                  f"125!/2 at levels 2 and 3 ({elapsed:.1f}s)")


def test_criterion_02_frame(A, report):
    t0 = time.perf_counter()
    rep = V.check_frame_surjectivity(A, 3, seed=SEED)
    elapsed = time.perf_counter() - t0
    ok = rep.quantities["order"] == 60 * A25 * A125 and elapsed <= 600
    report(2, ok, f"default generators on levels 1..3 generate order 60*(25!/2)*(125!/2) ({elapsed:.1f}s)")


def test_criterion_03_two_generation(A, report):
    t0 = time.perf_counter()
    a, b, cert = V.build_two_generators_alt(A, seed=SEED)
    rep = V.verify_two_generation(a, b, 2, 3, seed=SEED)
    elapsed = time.perf_counter() - t0
    ok = (cert["n"] == 2 and cert["p"] == 13 and cert["jordan_alt"]
          and rep.quantities["order"] == A25 * A125 and elapsed <= 600)
    report(3, ok, f"n=2, p=13, Jordan certificate for Alt(25), <a,b> on levels 2..3 has order "
                  f"(25!/2)*(125!/2) ({elapsed:.1f}s)")


def test_criterion_04_identities(A, report):
    rng = substream(SEED, "criterion-4")
    failures = []
    for pair in range(100):
        h, k = A.random_b(rng), A.random_b(rng)
        hk = h * k * h.inverse() * k.inverse()
        for i in range(1, 5):
            rec = delta(A, i + 1, A.phi(i + 1, h)) * tilde(A, i + 1, h)
            rev = tilde(A, i + 1, h) * delta(A, i + 1, A.phi(i + 1, h))
            hom = tilde(A, i, h) * tilde(A, i, k)
            a = delta(A, i, A.alpha(i))
            lhs = tilde(A, i, h) * a * tilde(A, i, k) * a.inverse()
            lhs = lhs * tilde(A, i, h).inverse() * (a * tilde(A, i, k) * a.inverse()).inverse()
            rhs = delta(A, i + 1, A.phi(i + 1, hk))
            for name, x, y in (("recursion", tilde(A, i, h), rec), ("reversed", tilde(A, i, h), rev),
                               ("homomorphism", tilde(A, i, h * k), hom), ("commutator", lhs, rhs)):
                if not equal_up_to(x, y, 5):
                    failures.append((pair, i, name))
    report(4, not failures, f"recursion, homomorphism and commutator identity exact at levels <= 5, "
                            f"100 pairs x i=1..4, {len(failures)} failures")


def test_criterion_05_normal_form(A, report):
    rng = substream(SEED, "criterion-5")
    bad, depth = [], []
    for n in range(500):
        g = random_word(A, rng.randint(1, 10), rng)
        nf = weak_normal_form(g)
        depth.append(nf.m)
        h = nf.reassemble()
        if nf.m > g.word_length or not all(_equal_at(g, h, lv) for lv in range(1, nf.m + 5)):
            bad.append(n)
    report(5, not bad, f"500 words of length <= 10: reassembly equal at levels <= m+4 and m <= length "
                       f"(max m {max(depth)}), {len(bad)} failures")


def test_criterion_06_consistency(A, report):
    eps = V.epsilon_element(A)
    eps_zero = all(not V.consistency_mask(eps, i)[0].any() for i in range(1, 7))
    c = next(b for b in A.b_gens() if {int(A._pair_a[p]) for p in b.support()} == {0, 1})
    tc = tilde(A, 1, c)
    formula = all(V.cons_volume(tc, i) == Fraction(5**i - 3, 5**i) for i in range(1, 7))
    rng = substream(SEED, "criterion-6-subadditivity")
    sub_fail = 0
    for _ in range(200):
        g = random_word(A, rng.randint(1, 6), rng)
        h = random_word(A, rng.randint(1, 6), rng)
        for i in range(1, 7):
            if V.cons_volume(g * h, i) < V.cons_volume(g, i) + V.cons_volume(h, i) - 1:
                sub_fail += 1
    rng = substream(SEED, "criterion-6-points")
    point_fail, outside = 0, 0
    for _ in range(100):
        g = random_word(A, rng.randint(1, 10), rng)
        res = in_direct_sum(g)
        if res.member:
            continue
        outside += 1
        k = res.certificate.level
        if k > res.nf.m + 3 or any(V.support_volume(g, i) < Fraction(1, 5**k) for i in range(k, 7)):
            point_fail += 1
    ok = eps_zero and formula and sub_fail == 0 and point_fail == 0
    report(6, ok, f"cons(eps)=0 to 6: {eps_zero}; cons(c~)=(5^i-3)/5^i to 6: {formula}; "
                  f"subadditivity failures {sub_fail}/1200; consistent points for {outside} words, "
                  f"{point_fail} failures")


def test_criterion_07_simplicity(A, report):
    rng = substream(SEED, "criterion-7")
    alt_bad, found = [], 0
    while found < 50:
        g = random_word(A, rng.randint(1, 10), rng)
        if in_direct_sum(g).member:
            continue
        found += 1
        w = simplicity_witness(g)
        if not (w.verified and w.checked_to >= 6 and not w.rho.is_identity()):
            alt_bad.append(w.failure)
    E = build_el(4, 2, max_level=5)
    rng = substream(SEED, "criterion-7-linear")
    lin_bad, lin_found = [], 0
    while lin_found < 20:
        g = random_word(E, rng.randint(1, 4), rng)
        try:
            w = sl_nonscalar_witness(g)
        except ValueError as e:
            if "scalar class" in str(e):
                continue
            lin_bad.append(str(e))
            lin_found += 1
            continue
        lin_found += 1
        if not (w.verified and w.level == weak_normal_form(g).m + 3 and is_scalar(w.value) is None):
            lin_bad.append(w.case)
    ok = not alt_bad and not lin_bad
    report(7, ok, f"50 simplicity witnesses over A(5,2) ({len(alt_bad)} failures), 20 non-scalar "
                  f"witnesses over E_4(F_2) ({len(lin_bad)} failures)")


def test_criterion_08_linear(report):
    details = []
    ok = True
    for q in (2, 3):
        E = build_el(4, q, max_level=4)
        comm = V.check_commutator_axiom(E, 4, seed=SEED)
        flex = V.check_flexibility(E, 4, seed=SEED)
        symbolic = [d["verdict"] for r in (comm, flex) for d in r.details if d["id"].startswith("symbolic")]
        ok &= bool(comm.passed and flex.passed and symbolic and all(v == "pass" for v in symbolic))
        for lam in Field(q).nonzero():
            for i in range(1, 5):
                for j in range(i, 5):
                    x = E.iota(MatFq.scalar(E.field, E.level_size(i), lam), i, j)
                    ok &= is_scalar(x) == lam
    closure = V.check_generation_axiom(build_el(4, 2, max_level=4), 2, seed=SEED)
    ok &= closure.passed and closure.quantities["positions"] == 240
    details.append(f"transvection closure {closure.quantities['positions']}/240 replayed")
    for q in (2, 3, 5):
        f = Field(q)
        rng = substream(SEED, f"criterion-8-tau-{q}")
        fails = done = 0
        while done < 100:
            n = rng.randint(3, 6)
            alpha = random_sl(f, n, rng)
            U = sorted(rng.sample(range(n), rng.randint(2, n)))
            a = alpha.a
            off = [x for x in range(n) if x not in U]
            block_scalar = is_scalar(MatFq(f, a[np.ix_(U, U)])) is not None
            if block_scalar and not a[np.ix_(off, U)].any():
                continue
            done += 1
            try:
                tau = find_noncommuting_tau(alpha, U)
                c = alpha * tau * alpha.inverse() * tau.inverse()
                if is_scalar(c) is not None or not tau.support() <= set(U) or tau.det() != 1:
                    fails += 1
            except (ValueError, AssertionError):
                fails += 1
        ok &= fails == 0
        details.append(f"q={q}: {fails}/100 failures")
    report(8, bool(ok), "E_4(F_2), E_4(F_3) symbolic checks to 4, scalars map to scalars to 4, "
                        + "; ".join(details))


def test_criterion_09_embedding(report):
    t0 = time.perf_counter()
    H = build_embed("alt5", max_level=4)
    comm = V.check_commutator_axiom(H, 4, seed=SEED)
    flex = V.check_flexibility(H, 4, seed=SEED)
    symbolic = [d["verdict"] for r in (comm, flex) for d in r.details if d["id"].startswith("symbolic")]
    gen = V.check_generation_axiom(H, 2, seed=SEED)
    G = H.group
    faithful = all(not directed_tree_embedding(H, g).project(3).is_identity() for g in G.elements[1:])
    rng = substream(SEED, "criterion-9")
    sample = rng.sample(G.elements[1:], 10)
    outside = all(not in_direct_sum(directed_tree_embedding(H, g)).member for g in sample)
    elapsed = time.perf_counter() - t0
    ok = (comm.passed and flex.passed and all(v == "pass" for v in symbolic)
          and gen.quantities["order"] == A360 and faithful and outside and elapsed <= 900)
    report(9, ok, f"H(Alt(5)): symbolic axioms to 4, generation order 360!/2, pi_3 faithful on 59 "
                  f"elements, 10 sampled outside the direct sum ({elapsed:.1f}s)")


def test_criterion_10_counterexample(A, report):
    glued = V.check_glued_frame(A, 2, seed=SEED)
    eps = V.epsilon_element(A)
    rng = substream(SEED, "criterion-10")
    elements = V.default_generators(A) + [random_word(A, rng.randint(1, 6), rng) for _ in range(10)]
    invariant = all(V.cons_volume_conjugated(g, eps, i) == V.cons_volume(g, i)
                    for g in elements for i in range(1, 6))
    ok = glued.passed and glued.quantities["order"] == 60 * A25 and invariant
    report(10, ok, f"glued generators on levels 1..2 have order 60*(25!/2); consistency invariant "
                   f"under eps-conjugation to level 5: {invariant}")


def test_criterion_11_action(A, report):
    rng = substream(SEED, "criterion-11")

    def point():
        return limit_point(A, [rng.randrange(5) for _ in range(rng.randint(0, 4))])

    assoc = oracle = 0
    for _ in range(200):
        g, h, x = random_word(A, rng.randint(1, 5), rng), random_word(A, rng.randint(1, 5), rng), point()
        if act_limit(g * h, x) != act_limit(g, act_limit(h, x)):
            assoc += 1
        t = stabilization_level(g, x.level)
        direct = limit_point(A, act_word(g, x.at(t + 5, A.spine)))
        if direct != act_limit(g, x):
            oracle += 1
    trans = [check_transitivity_limit(A, k, sample_budget=50, seed=SEED) for k in (1, 2)]
    profiles = [bounded_type_profile(g, 6, start=2) for g in V.default_generators(A)]
    bounded = all(len(set(p.values())) == 1 and max(p.values()) <= 3 for p in profiles)
    ok = assoc == 0 and oracle == 0 and all(r.passed for r in trans) and bounded
    report(11, ok, f"associativity failures {assoc}/200, oracle failures {oracle}/200, transitivity "
                   f"k=1,2 on 50 pairs: {[r.quantities['found'] for r in trans]}, profiles "
                   f"{[sorted(set(p.values())) for p in profiles]}")


def test_criterion_12_head_word_problem(A, report):
    rng = substream(SEED, "criterion-12")
    errors = 0
    for _ in range(20):
        g = random_word(A, rng.randint(1, 4), rng)
        i = rng.randint(1, 3)
        f = one_hot(A, i, A.random_level(i, rng))
        if not head_equal(g, g * f):
            errors += 1
    for _ in range(20):
        g = random_word(A, rng.randint(1, 4), rng)
        b = A.random_b(rng)
        while b.is_identity():
            b = A.random_b(rng)
        if head_equal(g, g * tilde(A, rng.randint(1, 2), b)):
            errors += 1
    report(12, errors == 0, f"40 constructed cases (20 equal, 20 unequal), {errors} errors")


def _suite_bytes(A):
    E = build_el(4, 2, max_level=4)
    a, b, _ = V.build_two_generators_alt(A, seed=SEED)
    reports = [
        V.check_commutator_axiom(A, 6, seed=SEED, samples=2),
        V.check_flexibility(A, 6, seed=SEED, samples=2),
        V.check_generation_axiom(A, 2, seed=SEED),
        V.check_frame_surjectivity(A, 2, seed=SEED),
        V.verify_two_generation(a, b, 2, 2, seed=SEED),
        V.check_glued_frame(A, 2, seed=SEED),
        V.check_generation_axiom(E, 2, seed=SEED),
        check_transitivity_limit(A, 2, sample_budget=10, seed=SEED),
    ]
    return V.reports_json(reports)


def test_criterion_13_determinism(A, report, capsys):
    first, second = _suite_bytes(A), _suite_bytes(A)
    outputs = []
    for _ in range(2):
        codes = [cli_main(["verify", "--levels", "3", "--seed", str(SEED), "--format", "json"]),
                 cli_main(["gen2", "--check-levels", "2..2", "--seed", str(SEED), "--format", "json"])]
        outputs.append((codes, capsys.readouterr().out))
    json.loads(first)
    ok = first == second and outputs[0] == outputs[1] and outputs[0][0] == [0, 0]
    report(13, ok, "library suites and CLI reports are byte-identical across reruns with one seed")
