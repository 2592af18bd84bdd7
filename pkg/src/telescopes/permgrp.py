"""Permutations on indexed point sets and exact permutation group computations.

Permutations compose as functions: ``(a * b)(x) = a(b(x))``.  Groups are
handled through a base and strong generating set built by a seeded
randomized Schreier-Sims pass.  The result is certified either because the
order it proves from below meets the orbit-parity ceiling (the product of
|Alt(O)| or |Sym(O)| over the orbits O), or by a deterministic
Schreier-generator sweep.
"""

from __future__ import annotations

import math
import random
import re
from typing import Iterable, Sequence

import numpy as np

from .alphabet import format_word, parse_word, word_to_index

DEGREE_CAP = 30000


class Perm:
    __slots__ = ("images", "_key")

    def __init__(self, images, check: bool = True):
        arr = np.asarray(images, dtype=np.int64)
        if arr.ndim != 1:
            raise ValueError("permutation images must be one-dimensional")
        if check:
            n = arr.shape[0]
            if n and (arr.min() < 0 or arr.max() >= n or np.unique(arr).shape[0] != n):
                raise ValueError("images do not form a bijection")
        arr.setflags(write=False)
        self.images = arr
        self._key = None

    @classmethod
    def identity(cls, degree: int) -> "Perm":
        return cls(np.arange(degree), check=False)

    @classmethod
    def from_cycles(cls, degree: int, cycles: Iterable[Sequence[int]]) -> "Perm":
        img = np.arange(degree)
        seen = set()
        for cyc in cycles:
            for a in cyc:
                if a in seen or not 0 <= a < degree:
                    raise ValueError(f"bad cycle point {a}")
                seen.add(a)
            for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
                img[a] = b
        return cls(img, check=False)

    @property
    def degree(self) -> int:
        return self.images.shape[0]

    def _check(self, other: "Perm"):
        if self.degree != other.degree:
            raise ValueError(f"degree mismatch: {self.degree} vs {other.degree}")

    def __mul__(self, other: "Perm") -> "Perm":
        self._check(other)
        return Perm(self.images[other.images], check=False)

    def inverse(self) -> "Perm":
        inv = np.empty_like(self.images)
        inv[self.images] = np.arange(self.degree)
        return Perm(inv, check=False)

    def __pow__(self, k: int) -> "Perm":
        if k < 0:
            return self.inverse() ** (-k)
        result = Perm.identity(self.degree)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __call__(self, x: int) -> int:
        return int(self.images[x])

    def key(self) -> bytes:
        if self._key is None:
            self._key = self.images.tobytes()
        return self._key

    def __eq__(self, other) -> bool:
        return isinstance(other, Perm) and self.degree == other.degree and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"Perm({self.cycles()!r}, degree={self.degree})"

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.images, np.arange(self.degree)))

    def cycles(self) -> list[list[int]]:
        """Non-trivial cycles, each starting at its smallest point."""
        img = self.images
        seen = np.zeros(self.degree, dtype=bool)
        out = []
        for start in np.flatnonzero(img != np.arange(self.degree)):
            if seen[start]:
                continue
            cyc = []
            x = int(start)
            while not seen[x]:
                seen[x] = True
                cyc.append(x)
                x = int(img[x])
            out.append(cyc)
        return out

    def cycle_type(self) -> list[int]:
        return sorted(len(c) for c in self.cycles())

    def parity(self) -> int:
        """0 for even, 1 for odd."""
        return sum(len(c) - 1 for c in self.cycles()) % 2

    def is_even(self) -> bool:
        return self.parity() == 0

    def order(self) -> int:
        return math.lcm(*self.cycle_type()) if self.cycles() else 1

    def support(self) -> frozenset[int]:
        return frozenset(int(x) for x in np.flatnonzero(self.images != np.arange(self.degree)))

    def conj(self, h: "Perm") -> "Perm":
        """self^h = h^-1 self h."""
        return h.inverse() * self * h


def compose(a: Perm, b: Perm) -> Perm:
    return a * b


def inverse(a: Perm) -> Perm:
    return a.inverse()


def parity(a: Perm) -> str:
    return "even" if a.parity() == 0 else "odd"


def support_of(a: Perm) -> frozenset[int]:
    return a.support()


def commutator(a, b):
    """[a, b] = a b a^-1 b^-1."""
    return a * b * a.inverse() * b.inverse()


def direct_sum_perm(parts: Sequence[Perm]) -> Perm:
    """Juxtapose permutations on consecutive blocks of points."""
    offs = 0
    chunks = []
    for p in parts:
        chunks.append(p.images + offs)
        offs += p.degree
    return Perm(np.concatenate(chunks) if chunks else np.arange(0), check=False)


def cycle_perm(degree: int, points: Sequence[int]) -> Perm:
    return Perm.from_cycles(degree, [list(points)])


def alt_order(n: int) -> int:
    return math.factorial(n) // 2 if n >= 2 else 1


def orbits(gens: Sequence[np.ndarray] | Sequence[Perm], degree: int) -> list[list[int]]:
    arrs = [g.images if isinstance(g, Perm) else g for g in gens]
    seen = np.zeros(degree, dtype=bool)
    out = []
    for start in range(degree):
        if seen[start]:
            continue
        orb = [start]
        seen[start] = True
        i = 0
        while i < len(orb):
            x = orb[i]
            i += 1
            for g in arrs:
                y = int(g[x])
                if not seen[y]:
                    seen[y] = True
                    orb.append(y)
        out.append(orb)
    return out


def orbit_ceiling(gens: Sequence[Perm], degree: int) -> int:
    """Order of the product of Alt(O) or Sym(O) over the orbits O; an upper
    bound for the order of the generated group."""
    bound = 1
    for orb in orbits(gens, degree):
        if len(orb) == 1:
            continue
        pts = np.array(sorted(orb))
        pos = np.full(degree, -1)
        pos[pts] = np.arange(len(pts))
        all_even = all(Perm(pos[g.images[pts]], check=False).is_even() for g in gens)
        f = math.factorial(len(orb))
        bound *= f // 2 if all_even else f
    return bound


class _Level:
    __slots__ = ("point", "orbit", "reps", "inv_reps")

    def __init__(self, point: int):
        self.point = point
        self.orbit = [point]
        self.reps: dict[int, np.ndarray] = {}
        self.inv_reps: dict[int, np.ndarray] = {}


class PermGroup:
    """Base and strong generating set with exact order.

    ``certified`` records how completeness was established: "ceiling" when
    the proven lower bound meets the orbit-parity ceiling (or a caller-proven
    upper bound passed as ``ceiling``), "schreier" after a full
    Schreier-generator sweep.
    """

    def __init__(self, gens: Sequence[Perm], degree: int | None = None, seed: int = 0,
                 ceiling: int | None = None, complete: bool = True):
        gens = list(gens)
        if degree is None:
            if not gens:
                raise ValueError("degree required for an empty generator list")
            degree = gens[0].degree
        for g in gens:
            if g.degree != degree:
                raise ValueError("generators have unequal degrees")
        if degree > DEGREE_CAP:
            raise ValueError(f"degree {degree} exceeds cap {DEGREE_CAP}")
        self.degree = degree
        self.generators = gens
        self._id = np.arange(degree)
        self.levels: list[_Level] = []
        self.strong: list[np.ndarray] = []
        self.depth: list[int] = []
        self._rng = random.Random(seed)
        self.certified = ""
        self._pool: list[np.ndarray] = []
        self._build(ceiling, complete=complete)

    # -- structure ---------------------------------------------------------
    @property
    def base(self) -> list[int]:
        return [lv.point for lv in self.levels]

    @property
    def strong_generators(self) -> list[Perm]:
        return [Perm(s, check=False) for s in self.strong]

    def order(self) -> int:
        n = 1
        for lv in self.levels:
            n *= len(lv.orbit)
        return n

    def _fix_depth(self, s: np.ndarray) -> int:
        k = 0
        for lv in self.levels:
            if s[lv.point] != lv.point:
                break
            k += 1
        return k

    def _new_level(self, point: int):
        lv = _Level(point)
        lv.reps[point] = self._id
        lv.inv_reps[point] = self._id
        self.levels.append(lv)
        k = len(self.levels) - 1
        for idx, s in enumerate(self.strong):
            if self.depth[idx] == k and s[point] == point:
                self.depth[idx] = k + 1
        acting = self._gens_at(k)
        if acting:
            self._extend_orbit(k, acting)

    def _gens_at(self, k: int) -> list[np.ndarray]:
        return [s for s, dp in zip(self.strong, self.depth) if dp >= k]

    def _extend_orbit(self, k: int, new: list[np.ndarray]):
        lv = self.levels[k]
        gens = self._gens_at(k)
        queue = []
        for s in new:
            for x in list(lv.orbit):
                y = int(s[x])
                if y not in lv.reps:
                    rep = s[lv.reps[x]]
                    lv.reps[y] = rep
                    inv = np.empty_like(rep)
                    inv[rep] = self._id
                    lv.inv_reps[y] = inv
                    lv.orbit.append(y)
                    queue.append(y)
        i = 0
        while i < len(queue):
            x = queue[i]
            i += 1
            for s in gens:
                y = int(s[x])
                if y not in lv.reps:
                    rep = s[lv.reps[x]]
                    lv.reps[y] = rep
                    inv = np.empty_like(rep)
                    inv[rep] = self._id
                    lv.inv_reps[y] = inv
                    lv.orbit.append(y)
                    queue.append(y)

    def _sift(self, g: np.ndarray, start: int = 0) -> tuple[np.ndarray, int]:
        for k in range(start, len(self.levels)):
            lv = self.levels[k]
            y = int(g[lv.point])
            inv = lv.inv_reps.get(y)
            if inv is None:
                return g, k
            g = inv[g]
        return g, len(self.levels)

    def _add_residue(self, h: np.ndarray, k: int):
        if k == len(self.levels):
            moved = np.flatnonzero(h != self._id)
            self._new_level(int(moved[0]))
        self.strong.append(h)
        self.depth.append(self._fix_depth(h))
        for j in range(self._fix_depth(h), -1, -1):
            if j < len(self.levels):
                self._extend_orbit(j, [h])

    def _sift_and_add(self, g: np.ndarray, start: int = 0) -> bool:
        h, k = self._sift(g, start)
        if k == len(self.levels) and np.array_equal(h, self._id):
            return False
        self._add_residue(h, k)
        return True

    # -- construction ------------------------------------------------------
    def _random_element(self) -> np.ndarray:
        pool = self._pool
        i, j = self._rng.sample(range(len(pool)), 2)
        if self._rng.random() < 0.5:
            pool[i] = pool[i][pool[j]]
        else:
            pool[i] = pool[j][pool[i]]
        pool[0] = pool[0][pool[i]]
        return pool[0]

    def _seed_pool(self, gens: list[np.ndarray]):
        pool = [self._id] + list(gens)
        while len(pool) < 11:
            pool.append(gens[len(pool) % len(gens)])
        self._pool = pool
        for _ in range(60):
            self._random_element()

    def _build(self, known_ceiling: int | None = None, stable: int = 40, complete: bool = True):
        gens = [g.images for g in self.generators if not g.is_identity()]
        if not gens:
            self.certified = "ceiling"
            return
        for g in gens:
            self._sift_and_add(g)
        ceiling = orbit_ceiling([Perm(g, check=False) for g in gens], self.degree)
        if known_ceiling is not None:
            ceiling = min(ceiling, known_ceiling)
        self._seed_pool(gens)
        quiet = 0
        while self.order() < ceiling and quiet < stable:
            if self._sift_and_add(self._random_element()):
                quiet = 0
            else:
                quiet += 1
        self._ceiling = ceiling
        if self.order() == ceiling:
            self.certified = "ceiling"
        elif complete:
            self._schreier_sweep()
            self.certified = "schreier"

    def add_generators(self, new: Sequence[Perm], stable: int = 40):
        """Extend an uncertified (randomized) BSGS by further generators."""
        arrs = [g.images for g in new if not g.is_identity()]
        self.generators = self.generators + list(new)
        for g in arrs:
            self._sift_and_add(g)
        if not self._pool:
            self._seed_pool(arrs)
        else:
            self._pool.extend(arrs)
        self._ceiling = orbit_ceiling(self.generators, self.degree)
        quiet = 0
        while self.order() < self._ceiling and quiet < stable:
            if self._sift_and_add(self._random_element()):
                quiet = 0
            else:
                quiet += 1
        self.certified = "ceiling" if self.order() == self._ceiling else ""

    def _schreier_sweep(self):
        """Deterministic completion: every Schreier generator must sift."""
        k = len(self.levels) - 1
        while k >= 0:
            restart = None
            lv = self.levels[k]
            gens = self._gens_at(k)
            for x in list(lv.orbit):
                ux = lv.reps[x]
                for s in gens:
                    y = int(s[ux[lv.point]])
                    sg = lv.inv_reps[y][s[ux]]
                    h, j = self._sift(sg, k + 1)
                    if j < len(self.levels) or not np.array_equal(h, self._id):
                        self._add_residue(h, j)
                        restart = j
                        break
                if restart is not None:
                    break
            if restart is not None:
                k = min(len(self.levels) - 1, max(restart, k))
                continue
            k -= 1

    # -- queries -----------------------------------------------------------
    def contains(self, g: Perm) -> bool:
        if g.degree != self.degree:
            return False
        h, k = self._sift(g.images)
        return k == len(self.levels) and bool(np.array_equal(h, self._id))

    def __contains__(self, g: Perm) -> bool:
        return self.contains(g)

    def random_element(self, rng: random.Random) -> Perm:
        """Random subproduct of coset representatives (uniform over the group)."""
        g = self._id
        for lv in reversed(self.levels):
            y = lv.orbit[rng.randrange(len(lv.orbit))]
            g = lv.reps[y][g]
        return Perm(g, check=False)

    def is_transitive(self) -> bool:
        return len(orbits(self.generators, self.degree)) == 1 if self.degree else True

    def elements(self, limit: int = 100000) -> list[Perm]:
        """Enumerate the group from the transversals (small groups only)."""
        if self.order() > limit:
            raise ValueError("group too large to enumerate")
        elems = [self._id]
        for lv in reversed(self.levels):
            elems = [lv.reps[y][e] for y in lv.orbit for e in elems]
        return [Perm(e, check=False) for e in elems]


def bsgs(gens: Sequence[Perm], degree: int | None = None, seed: int = 0,
         ceiling: int | None = None) -> PermGroup:
    return PermGroup(gens, degree=degree, seed=seed, ceiling=ceiling)


def normal_closure(h_gens: Sequence[Perm], g_gens: Sequence[Perm], degree: int | None = None,
                   seed: int = 0) -> PermGroup:
    """Smallest subgroup containing h_gens and closed under conjugation by g_gens.

    The closure grows one randomized BSGS (sifting success is always a proof
    of membership); the final generating set is rebuilt with certification."""
    if degree is None:
        pool = list(h_gens) + list(g_gens)
        if not pool:
            raise ValueError("degree required")
        degree = pool[0].degree
    gens = [h for h in h_gens if not h.is_identity()]
    if not gens:
        return PermGroup([], degree=degree, seed=seed)
    group = PermGroup(gens, degree=degree, seed=seed, complete=False)
    queue = list(gens)
    i = 0
    while i < len(queue):
        h = queue[i]
        i += 1
        for g in g_gens:
            c = g * h * g.inverse()
            if not group.contains(c):
                gens.append(c)
                queue.append(c)
                group.add_generators([c])
    return PermGroup(gens, degree=degree, seed=seed)


def _primes_between(lo_excl: float, hi_incl: int) -> list[int]:
    out = []
    for p in range(max(2, math.floor(lo_excl) + 1), hi_incl + 1):
        if p > lo_excl and all(p % q for q in range(2, math.isqrt(p) + 1)):
            out.append(p)
    return out


def find_jordan_cycle(gens: Sequence[Perm], budget: int = 200, max_len: int = 8,
                      seed: int = 0) -> tuple[int, Perm] | None:
    """Search words in the generators for an element whose power is a p-cycle
    with p prime and degree/2 < p <= degree - 3."""
    n = gens[0].degree
    window = set(_primes_between(n / 2, n - 3))
    if not window:
        return None
    rng = random.Random(seed)
    words: list[Perm] = list(gens)
    while len(words) < budget:
        length = rng.randint(2, max_len)
        w = gens[rng.randrange(len(gens))]
        for _ in range(length - 1):
            w = w * gens[rng.randrange(len(gens))]
        words.append(w)
    for w in words[:budget]:
        lengths = [len(c) for c in w.cycles()]
        for p in lengths:
            if p in window:
                others = math.lcm(*[m for m in lengths if m != p]) if len(lengths) > 1 else 1
                cyc = w ** others
                if cyc.cycle_type() == [p]:
                    return p, cyc
    return None


def jordan_alt_test(gens: Sequence[Perm], budget: int = 200, seed: int = 0) -> bool:
    """True certifies that the generators generate Alt(degree)."""
    if not gens:
        return False
    for g in gens:
        if not g.is_even():
            raise ValueError("jordan_alt_test needs even generators")
    if len(orbits(gens, gens[0].degree)) != 1:
        return False
    return find_jordan_cycle(gens, budget=budget, seed=seed) is not None


def is_k_transitive(group: PermGroup | Sequence[Perm], k: int) -> bool:
    if k > 4 or k < 1:
        raise ValueError("k must lie in 1..4")
    gens = group.generators if isinstance(group, PermGroup) else list(group)
    n = group.degree if isinstance(group, PermGroup) else gens[0].degree
    if n < k:
        raise ValueError("degree smaller than k")
    start = tuple(range(k))
    seen = {start}
    queue = [start]
    arrs = [g.images for g in gens]
    while queue:
        t = queue.pop()
        for g in arrs:
            u = tuple(int(g[x]) for x in t)
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return len(seen) == math.perm(n, k)


# -- text form -------------------------------------------------------------
def format_perm(p: Perm, d: int, level: int) -> str:
    """Cycle notation over words, e.g. ``(x1x1 x1x2 x1x3)``; identity is ``()``."""
    cyc = p.cycles()
    if not cyc:
        return "()"
    parts = []
    for c in cyc:
        words = []
        for x in c:
            letters = []
            for _ in range(level):
                x, rem = divmod(x, d)
                letters.append(rem + 1)
            words.append(format_word(reversed(letters)))
        parts.append("(" + " ".join(words) + ")")
    return "".join(parts)


_CYCLE_RE = re.compile(r"\(([^()]*)\)")


def parse_perm(text: str, d: int, level: int) -> Perm:
    """Parse cycle notation over words of a fixed level; ``id`` or ``()`` is
    the identity."""
    text = text.strip()
    degree = d**level
    if text in ("id", "()", ""):
        return Perm.identity(degree)
    pos = 0
    cycles = []
    for m in _CYCLE_RE.finditer(text):
        if text[pos:m.start()].strip():
            raise ValueError(f"unexpected text at position {pos}: {text[pos:m.start()]!r}")
        pos = m.end()
        tokens = m.group(1).split()
        pts = []
        for tok in tokens:
            w = parse_word(tok, d)
            if len(w) != level:
                raise ValueError(f"word {tok} has length {len(w)}, expected {level}")
            pts.append(word_to_index(w))
        if pts:
            cycles.append(pts)
    if text[pos:].strip():
        raise ValueError(f"unexpected text at position {pos}: {text[pos:]!r}")
    perm = Perm.identity(degree)
    for c in cycles:
        perm = perm * Perm.from_cycles(degree, [c])
    return perm
