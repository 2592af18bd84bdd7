"""Actions of tree telescopes on the direct limit X_inf (words modulo
trailing o letters) and on the Cantor set of infinite words, plus
bounded-type profiles and transitivity witnesses."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linfq import projective_points
from .permgrp import Perm
from .telescope import Atom, LazyElement, TreeTelescope, substream
from .verify import VerificationReport, consistency_mask

LEVEL_BUDGET = 64


def _spec(g_or_spec) -> TreeTelescope:
    spec = g_or_spec.spec if isinstance(g_or_spec, LazyElement) else g_or_spec
    if not isinstance(spec, TreeTelescope) or spec.is_matrix:
        raise ValueError("word actions need a permutation tree telescope")
    return spec


def act_word(g: LazyElement, letters: Sequence[int]) -> tuple[int, ...]:
    """pi_n(g) applied to one word of length n, evaluated on its letters
    (no index arithmetic, so any length works)."""
    spec = _spec(g)
    D = np.array([list(letters)], dtype=np.int64).reshape(1, len(letters))
    for atom in reversed(g.atoms):
        spec.apply_atom_digits(atom, D)
    return tuple(int(a) for a in D[0])


# -- the direct limit ------------------------------------------------------------
@dataclass(frozen=True)
class LimitPoint:
    """[w] in X_inf; stored canonically with trailing o letters removed."""

    word: tuple[int, ...]

    @property
    def level(self) -> int:
        return len(self.word)

    def at(self, level: int, o: int) -> tuple[int, ...]:
        if level < self.level:
            raise ValueError(f"point lives at level {self.level}, not {level}")
        return self.word + (o,) * (level - self.level)

    def format(self, spec: TreeTelescope) -> str:
        return f"{spec.format_word(self.word)}@{self.level}"


def limit_point(spec: TreeTelescope, letters: Sequence[int]) -> LimitPoint:
    w = list(letters)
    while w and w[-1] == spec.spine:
        w.pop()
    return LimitPoint(tuple(w))


def parse_limit_point(spec: TreeTelescope, text: str) -> LimitPoint:
    """`w@i`, or a bare word."""
    word, _, level = text.partition("@")
    letters = spec.parse_word(word)
    if level and int(level) != len(letters):
        raise ValueError(f"word {word} does not have length {level}")
    return limit_point(spec, letters)


def stabilization_level(g: LazyElement, level: int) -> int:
    """Level t from which pi_t(g) on a level-`level` point is stable: each
    Delta_j atom needs t >= j, each directed atom adds kappa."""
    spec = g.spec
    t = level
    for atom in reversed(g.atoms):
        if atom.kind == "D":
            t = max(t, atom.level)
        elif atom.kind == "F":
            t = max(t, atom.level + 1)
        elif atom.kind in ("T", "Tm"):
            t = max(t, atom.depth) + spec.kappa
    return max(t, 1)


def act_limit(g: LazyElement, x: LimitPoint, budget: int = LEVEL_BUDGET,
              extra: int = 2) -> LimitPoint:
    """g.[x] computed at the stabilization level t and cross-checked at
    t+1..t+extra."""
    spec = _spec(g)
    if g.has_letterwise():
        raise ValueError("letterwise atoms do not act on the direct limit")
    t = stabilization_level(g, x.level)
    if t + extra > budget:
        raise ValueError(f"level budget exceeded: need {t + extra}, budget {budget}")
    out = limit_point(spec, act_word(g, x.at(t, spec.spine)))
    for lv in range(t + 1, t + extra + 1):
        if limit_point(spec, act_word(g, x.at(lv, spec.spine))) != out:
            raise AssertionError(f"action not stable at level {lv}")
    return out


# -- the Cantor set ----------------------------------------------------------------
@dataclass(frozen=True)
class CantorPoint:
    """A point of the Cantor set given by a prefix and a tail rule:
    "o" (eventually o) or None (unknown beyond the prefix)."""

    prefix: tuple[int, ...]
    tail: str | None = "o"

    def letters_to(self, n: int, o: int) -> tuple[int, ...]:
        if n <= len(self.prefix):
            return self.prefix[:n]
        if self.tail != "o":
            raise ValueError("insufficient prefix")
        return self.prefix + (o,) * (n - len(self.prefix))

    def format(self, spec: TreeTelescope) -> str:
        body = "".join(f"x{a + 1}" for a in self.prefix)
        return f"p{body}(o*)" if self.tail == "o" else f"p{body}"


def parse_cantor_point(spec: TreeTelescope, text: str) -> CantorPoint:
    text = text.strip()
    if not text.startswith("p"):
        raise ValueError(f"Cantor points start with 'p': {text!r}")
    body, tail = text[1:], None
    if body.endswith("(o*)"):
        body, tail = body[:-4], "o"
    return CantorPoint(spec.parse_word(body), tail)


@dataclass
class PrefixResult:
    letters: tuple[int, ...]
    stable_length: int
    complete: bool


def _partial_apply(spec: TreeTelescope, atom: Atom, word: list[int], known: int) -> int:
    """Apply one atom to a word whose first `known` letters are known;
    return how many leading letters of the image are known."""
    k = atom.kind
    if k == "F":
        return known
    if k == "D" and known < atom.level:
        return 0
    if k in ("T", "Tm"):
        m = atom.depth if k == "Tm" else 0
        if known < m:
            return 0
        t = next((p for p in range(m, known) if word[p] != spec.spine), None)
        if t is None:
            # the pair sits beyond the known part; a hit may still rewrite the prefix
            return known if m == 0 else 0
        if t + 1 >= known:
            could_hit = t + 2 >= atom.level + 1 and word[t] in set(int(a) for a in spec._pair_a)
            if could_hit:
                return t if m == 0 else 0
            return known
    D = np.array([word[:known]], dtype=np.int64).reshape(1, known)
    spec.apply_atom_digits(atom, D)
    word[:known] = [int(a) for a in D[0]]
    return known


def act_cantor_prefix(g: LazyElement, xi: CantorPoint, out_len: int) -> PrefixResult:
    """First out_len letters of g.xi.  Eventually-o tails are padded far
    enough to be exact; unknown tails give the stable length reached."""
    spec = _spec(g)
    if xi.tail == "o":
        need = stabilization_level(g, max(len(xi.prefix), out_len)) + 2
        word = list(xi.letters_to(need, spec.spine))
    else:
        word = list(xi.prefix)
    known = len(word)
    for atom in reversed(g.atoms):
        known = _partial_apply(spec, atom, word, known)
        if known == 0:
            break
    if known < out_len:
        return PrefixResult(tuple(word[:known]), known, False)
    return PrefixResult(tuple(word[:out_len]), known, True)


# -- bounded type, transitivity, projective action --------------------------------
def bounded_type_profile(g: LazyElement, L: int, start: int = 1) -> dict[int, int]:
    """Number of level-l words at which g is not consistent, l = start..L."""
    spec = g.spec
    out = {}
    for lv in range(start, L + 1):
        mask, exact = consistency_mask(g, lv)
        if not exact:
            raise ValueError("consistency is only certified when absent")
        out[lv] = int(spec.level_size(lv) - mask.sum())
    return out


def transitivity_witness(spec: TreeTelescope, xs: Sequence[LimitPoint], ys: Sequence[LimitPoint],
                         level: int | None = None) -> LazyElement:
    """An element D(i, omega) with omega even mapping x_s to y_s."""
    k = len(xs)
    if len(ys) != k or len(set(xs)) != k or len(set(ys)) != k:
        raise ValueError("tuples must have equal length and distinct entries")
    i = max([p.level for p in xs + ys] + [1] + ([level] if level else []))
    n = spec.level_size(i)
    while n < k + 2:
        i += 1
        n = spec.level_size(i)
    src = [spec.word_index(p.at(i, spec.spine)) for p in xs]
    dst = [spec.word_index(p.at(i, spec.spine)) for p in ys]
    img = np.full(n, -1, dtype=np.int64)
    img[src] = dst
    free_src = [x for x in range(n) if x not in set(src)]
    free_dst = [y for y in range(n) if y not in set(dst)]
    img[free_src] = free_dst
    omega = Perm(img.copy())
    if not omega.is_even():
        a, b = free_src[0], free_src[1]
        img[a], img[b] = img[b], img[a]
        omega = Perm(img)
    return LazyElement(spec, [Atom("D", i, omega)]) if not omega.is_identity() else LazyElement(spec)


def _random_limit_point(spec: TreeTelescope, rng: random.Random, max_level: int) -> LimitPoint:
    i = rng.randint(1, max_level)
    return limit_point(spec, [rng.randrange(spec.size_at(p)) for p in range(i)])


def check_transitivity_limit(spec: TreeTelescope, k: int, sample_budget: int = 50,
                             seed: int = 0) -> VerificationReport:
    """For sampled pairs of k-tuples of distinct points of X_inf, build a
    Delta-atom moving one tuple onto the other and confirm it with act_limit."""
    rep = VerificationReport(f"transitivity-{k}", spec.name, f"1..{max(1, spec.max_level - 1)}",
                             "constructive-witness")
    rng = substream(seed, f"transitivity/{k}")
    top = max(1, spec.max_level - 1)
    found = 0
    for _ in range(sample_budget):
        tuples = []
        for _ in range(2):
            pts: list[LimitPoint] = []
            while len(pts) < k:
                p = _random_limit_point(spec, rng, top)
                if p not in pts:
                    pts.append(p)
            tuples.append(pts)
        xs, ys = tuples
        w = transitivity_witness(spec, xs, ys)
        if all(act_limit(w, x) == y for x, y in zip(xs, ys)):
            found += 1
        else:
            rep.add("witness", "act_limit", "limit", "fail",
                    source=[p.format(spec) for p in xs], target=[p.format(spec) for p in ys])
    rep.add("sampled-pairs", "act_limit", "limit", "pass" if found == sample_budget else "fail",
            found=found, pairs=sample_budget)
    rep.quantities.update({"k": k, "pairs": sample_budget, "found": found})
    return rep.finalize()


def check_projective_action(spec: TreeTelescope, top: int = 3) -> VerificationReport:
    """phi_{i+n}(b) fixes every vector u (x) x_3^n, u a basis vector of V_i,
    for n >= 2 and i + n <= top; since these vectors span the image of V_i,
    every line of P_{i,i+n} is fixed."""
    if not spec.is_matrix:
        raise ValueError("the projective action needs a linear telescope")
    rep = VerificationReport("projective-action", spec.name, f"1..{top}", "exact")
    x3 = 2
    for j in range(3, top + 1):
        for i in range(1, j - 1):
            n = j - i
            suffix = spec.word_index([x3] * n, offset=i)
            M = spec.level_size(j) // spec.level_size(i)
            cols = np.arange(spec.level_size(i)) * M + suffix
            ok = True
            for b in spec.b_gens():
                a = spec.phi(j, b).a
                expect = np.zeros((a.shape[0], cols.size), dtype=np.int64)
                expect[cols, np.arange(cols.size)] = 1
                if not np.array_equal(a[:, cols], expect):
                    ok = False
                    break
            rep.add(f"B{j}-fixes-P{i},{j}", "exact", f"{i}..{j}", "pass" if ok else "fail")
    rep.quantities["lines_at_level_1"] = len(projective_points(spec.field, spec.level_size(1)))
    return rep.finalize()


__all__ = [
    "LimitPoint", "CantorPoint", "PrefixResult", "act_word", "limit_point", "parse_limit_point",
    "parse_cantor_point", "stabilization_level", "act_limit", "act_cantor_prefix",
    "bounded_type_profile", "transitivity_witness", "check_transitivity_limit",
    "check_projective_action",
]
