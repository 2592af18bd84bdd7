"""Telescopes of groups and lazily evaluated elements of their level product.

A telescope has level groups Omega_i, transition maps iota_{i,j} and
structure maps phi_k: B -> Omega_k.  Elements of the product of all levels
are kept as formal words in atoms and evaluated one level at a time:

* ``D(i, w)``       diagonal tail Delta_i(w): trivial below level i, iota_{i,j}(w) above
* ``T(n, b)``       directed element: prod_{k=n+1..j} iota_{k,j}(phi_k(b)) at level j
* ``F(i, w)``       one-hot element: w at level i, trivial elsewhere
* ``Tm(m, n, s)``   directed element of the depth-m family (used by normal forms)
* ``L(t)``          letterwise element: the letter permutation t applied to every letter

Tree telescopes (levels acting on words) evaluate atoms pointwise on word
indices, so an element can be applied to single words far beyond the
levels that fit in memory.
"""

from __future__ import annotations

import itertools
import random
import re
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .alphabet import CylinderSet
from .linfq import Field, MatFq, elementary, is_scalar, signed_perm
from .permgrp import Perm, PermGroup, alt_order, cycle_perm

ATOM_KINDS = ("D", "T", "F", "Tm", "L")
POINTWISE_BATCH = 1 << 19


def substream(seed: int, label: str) -> random.Random:
    """A named, reproducible random stream derived from one seed."""
    return random.Random(f"{seed}/{label}")


# -- projection cache --------------------------------------------------------
class _ProjectionCache:
    """LRU cache of level projections with a budget in stored entries."""

    def __init__(self, budget: int = 60_000_000):
        self.budget = budget
        self.used = 0
        self.data: OrderedDict = OrderedDict()

    @staticmethod
    def _size(x) -> int:
        if isinstance(x, Perm):
            return x.degree
        if isinstance(x, MatFq):
            return x.n * x.n
        return 1

    def get(self, key):
        v = self.data.get(key)
        if v is not None:
            self.data.move_to_end(key)
        return v

    def put(self, key, value):
        size = self._size(value)
        if size > self.budget:
            return
        old = self.data.pop(key, None)
        if old is not None:
            self.used -= self._size(old)
        self.data[key] = value
        self.used += size
        while self.used > self.budget:
            _, v = self.data.popitem(last=False)
            self.used -= self._size(v)

    def clear(self):
        self.data.clear()
        self.used = 0


CACHE = _ProjectionCache()
_uid = itertools.count()


@dataclass(frozen=True, eq=False)
class Atom:
    kind: str
    level: int
    elem: object = None
    depth: int = 0
    uid: int = field(default_factory=lambda: next(_uid), compare=False)

    def __post_init__(self):
        if self.kind not in ATOM_KINDS:
            raise ValueError(f"unknown atom kind {self.kind!r}")

    def inverse(self) -> "Atom":
        return Atom(self.kind, self.level, self.elem.inverse(), self.depth)

    def same_slot(self, other: "Atom") -> bool:
        return (self.kind, self.level, self.depth) == (other.kind, other.level, other.depth)

    def max_param(self) -> int:
        """Largest level index the atom refers to."""
        return self.level


# -- telescope interface -----------------------------------------------------
class TelescopeSpec:
    """A telescope instance.  Subclasses provide the level groups and maps."""

    engine = "permutation"
    kappa = 2
    name = "telescope"
    max_level = 4
    is_tree = False

    def describe(self) -> dict:
        return {"name": self.name, "engine": self.engine}

    # level groups
    def level_size(self, i: int) -> int:
        raise NotImplementedError

    def identity(self, i: int):
        raise NotImplementedError

    def iota(self, x, i: int, j: int):
        raise NotImplementedError

    def level_gens(self, i: int) -> list:
        raise NotImplementedError

    def random_level(self, i: int, rng: random.Random):
        raise NotImplementedError

    def level_order(self, i: int) -> int:
        raise NotImplementedError

    # the group B
    def phi(self, k: int, b):
        raise NotImplementedError

    def b_gens(self) -> list:
        raise NotImplementedError

    def b_identity(self):
        raise NotImplementedError

    def random_b(self, rng: random.Random):
        raise NotImplementedError

    def alpha(self, i: int):
        raise NotImplementedError

    # equality (quotients override canon)
    def canon(self, x):
        return x

    def same(self, x, y) -> bool:
        return self.canon(x) == self.canon(y)

    def is_identity(self, x) -> bool:
        return self.canon(x) == self.canon(self._identity_like(x))

    def _identity_like(self, x):
        if isinstance(x, Perm):
            return Perm.identity(x.degree)
        return MatFq.identity(x.field, x.n)

    def check_level(self, n: int):
        if not 1 <= n <= self.max_level:
            raise ValueError(f"level {n} out of range 1..{self.max_level}")

    # symbolic supports (tree telescopes only)
    def b_support(self, i: int, j: int) -> list[CylinderSet] | None:
        return None

    def alpha_support(self, i: int, j: int) -> list[CylinderSet] | None:
        return None

    def b_conj_support(self, i: int, j: int, k: int) -> list[CylinderSet] | None:
        return None

    # element text
    def format_level_element(self, x, level: int) -> str:
        return "id" if x.is_identity() else f"<{type(x).__name__}>"

    def format_b_element(self, b) -> str:
        return "id" if b.is_identity() else "<b>"

    def parse_level_element(self, text: str, level: int):
        text = text.strip()
        if text == "id":
            return self.identity(level)
        if text == "alpha":
            return self.alpha(level)
        m = re.fullmatch(r"g(\d+)", text)
        if m:
            return _pick(self.level_gens(level), int(m.group(1)), "level generator")
        raise ValueError(f"cannot parse level element {text!r}")

    def parse_b_element(self, text: str):
        text = text.strip()
        if text == "id":
            return self.b_identity()
        m = re.fullmatch(r"b(\d+)", text)
        if m:
            return _pick(self.b_gens(), int(m.group(1)), "B generator")
        raise ValueError(f"cannot parse B element {text!r}")

    # atom evaluation, generic version through iota and phi
    def atom_projection(self, atom: Atom, level: int):
        key = (atom.uid, level)
        hit = CACHE.get(key)
        if hit is not None:
            return hit
        val = self._atom_projection(atom, level)
        CACHE.put(key, val)
        return val

    def _atom_projection(self, atom: Atom, level: int):
        k = atom.kind
        if k == "D":
            if level < atom.level:
                return self.identity(level)
            return self.iota(atom.elem, atom.level, level)
        if k == "F":
            return atom.elem if level == atom.level else self.identity(level)
        if k == "T":
            if level <= atom.level:
                return self.identity(level)
            if level == atom.level + 1:
                return self.phi(level, atom.elem)
            below = self.atom_projection(atom, level - 1)
            return self.iota(below, level - 1, level) * self.phi(level, atom.elem)
        raise ValueError(f"atom kind {k} needs a tree telescope")


def _pick(items: list, k: int, what: str):
    if not 0 <= k < len(items):
        raise ValueError(f"{what} index {k} out of range 0..{len(items) - 1}")
    return items[k]


def alt_generators(n: int) -> list[Perm]:
    """Two standard generators of Alt(n) (n >= 3)."""
    if n < 3:
        return []
    if n == 3:
        return [cycle_perm(3, [0, 1, 2])]
    c3 = cycle_perm(n, [0, 1, 2])
    long = cycle_perm(n, list(range(n))) if n % 2 else cycle_perm(n, list(range(1, n)))
    return [c3, long]


def random_even_perm(n: int, rng: random.Random) -> Perm:
    img = list(range(n))
    rng.shuffle(img)
    p = Perm(img, check=False)
    if p.parity() and n >= 2:
        img[0], img[1] = img[1], img[0]
        p = Perm(img, check=False)
    return p


# -- tree telescopes ---------------------------------------------------------
class TreeTelescope(TelescopeSpec):
    """Telescope whose level i acts on words of length i over alphabets
    X_1, X_2, ... (permutations of the words, or matrices indexed by them).

    B acts on a list of letter pairs S; phi_k(b) applies b to the words
    spine^{k-2} a y with (a, y) in S.  The flexibility witness alpha_i moves
    words with prefix aprefix^{i-1} and last letter in `alpha_letters`.
    """

    is_tree = True

    def __init__(self, *, name: str, head_sizes: Sequence[int], tail_size: int, spine: int,
                 pairs: Sequence[tuple[int, int]], pair_rects: Sequence[tuple[Sequence[int], Sequence[int]]],
                 alpha_letters: Sequence[int], escape: int, b_generators: Sequence,
                 max_level: int, engine: str = "permutation", fld: Field | None = None,
                 alpha_prefix: int | None = None, params: dict | None = None):
        self.name = name
        self.engine = engine
        self.field = fld
        self.head_sizes = tuple(head_sizes)
        self.tail_size = tail_size
        self.spine = spine
        self.alpha_prefix = spine if alpha_prefix is None else alpha_prefix
        self.pairs = [tuple(p) for p in pairs]
        self.pair_rects = [(tuple(a), tuple(y)) for a, y in pair_rects]
        self.alpha_letters = tuple(alpha_letters)
        self.escape = escape
        self.max_level = max_level
        self.params = dict(params or {})
        self._b_gens = list(b_generators)
        width = max(self.head_sizes + (tail_size,))
        self._pair_table = np.full((width, width), -1, dtype=np.int64)
        for s, (a, y) in enumerate(self.pairs):
            self._pair_table[a, y] = s
        self._pair_a = np.array([a for a, _ in self.pairs], dtype=np.int64)
        self._pair_y = np.array([y for _, y in self.pairs], dtype=np.int64)
        self._pos_cache: dict = {}
        self._bgroup = None
        self._check_structure()

    def _check_structure(self):
        firsts = {a for a, _ in self.pairs}
        if self.spine in firsts and self.spine == self.alpha_prefix:
            raise ValueError("the spine letter may not start a pair of S")
        if self.escape == self.spine or self.escape in firsts:
            raise ValueError("escape letter must avoid the spine and the first letters of S")
        covered = {(a, y) for a_set, y_set in self.pair_rects for a in a_set for y in y_set}
        if covered != set(self.pairs):
            raise ValueError("pair rectangles do not cover S exactly")

    def describe(self) -> dict:
        out = {"name": self.name, "engine": self.engine}
        out.update(self.params)
        return out

    # words
    @property
    def uniform(self) -> bool:
        return not self.head_sizes or all(s == self.tail_size for s in self.head_sizes)

    def size_at(self, pos: int) -> int:
        return self.head_sizes[pos] if pos < len(self.head_sizes) else self.tail_size

    def sizes(self, level: int) -> tuple[int, ...]:
        return tuple(self.size_at(p) for p in range(level))

    def level_size(self, i: int) -> int:
        n = 1
        for p in range(i):
            n *= self.size_at(p)
        return n

    @property
    def s_size(self) -> int:
        return len(self.pairs)

    def word_index(self, letters: Sequence[int], offset: int = 0) -> int:
        """Rank of a 0-based word whose first letter sits at position `offset`."""
        idx = 0
        for p, a in enumerate(letters):
            s = self.size_at(offset + p)
            if not 0 <= a < s:
                raise ValueError(f"letter {a + 1} out of range at position {offset + p + 1}")
            idx = idx * s + a
        return idx

    def index_word(self, idx: int, level: int, offset: int = 0) -> tuple[int, ...]:
        out = []
        for p in range(level - 1, -1, -1):
            idx, r = divmod(idx, self.size_at(offset + p))
            out.append(r)
        return tuple(reversed(out))

    def digits(self, idx: np.ndarray, level: int) -> np.ndarray:
        D = np.empty((idx.shape[0], level), dtype=np.int64)
        x = idx.astype(np.int64, copy=True)
        for p in range(level - 1, -1, -1):
            s = self.size_at(p)
            D[:, p] = x % s
            x //= s
        return D

    def undigits(self, D: np.ndarray, start: int = 0, stop: int | None = None) -> np.ndarray:
        stop = D.shape[1] if stop is None else stop
        x = np.zeros(D.shape[0], dtype=np.int64)
        for p in range(start, stop):
            x = x * self.size_at(p) + D[:, p]
        return x

    def _write_prefix(self, D: np.ndarray, rows, values: np.ndarray, length: int):
        v = values.copy()
        for p in range(length - 1, -1, -1):
            s = self.size_at(p)
            D[rows, p] = v % s
            v //= s

    def format_word(self, letters: Sequence[int]) -> str:
        return "".join(f"x{a + 1}" for a in letters) or "e"

    def parse_word(self, text: str, offset: int = 0) -> tuple[int, ...]:
        text = text.strip()
        if text in ("", "e"):
            return ()
        if not re.fullmatch(r"(x\d+)+", text):
            raise ValueError(f"bad word {text!r}")
        letters = tuple(int(t) - 1 for t in text[1:].split("x"))
        for p, a in enumerate(letters):
            if not 0 <= a < self.size_at(offset + p):
                raise ValueError(f"letter x{a + 1} out of range at position {offset + p + 1}")
        return letters

    # engine primitives
    @property
    def is_matrix(self) -> bool:
        return self.engine != "permutation"

    def identity(self, i: int):
        n = self.level_size(i)
        return MatFq.identity(self.field, n) if self.is_matrix else Perm.identity(n)

    def _kron(self, x, M: int):
        if M == 1:
            return x
        if self.is_matrix:
            return MatFq(self.field, np.kron(x.a, np.eye(M, dtype=np.int64)), check=False)
        img = (x.images[:, None] * M + np.arange(M)).ravel()
        return Perm(img, check=False)

    def _place(self, small, positions: np.ndarray, n: int):
        if self.is_matrix:
            a = np.eye(n, dtype=np.int64)
            a[np.ix_(positions, positions)] = small.a
            return MatFq(self.field, a, check=False)
        img = np.arange(n)
        img[positions] = positions[small.images]
        return Perm(img, check=False)

    def iota(self, x, i: int, j: int):
        if j < i:
            raise ValueError("iota needs i <= j")
        return self._kron(x, self.level_size(j) // self.level_size(i))

    def phi_positions(self, m: int, k: int) -> np.ndarray:
        """Level-k indices of v spine^{k-m-2} a y for carrier entries (v, (a, y))."""
        key = (m, k)
        pos = self._pos_cache.get(key)
        if pos is None:
            if k < m + 2:
                raise ValueError(f"phi^({m})_{k} needs k >= m + 2")
            run = k - m - 2
            spine_idx = 0
            for p in range(m, m + run):
                spine_idx = spine_idx * self.size_at(p) + self.spine
            sa, sy = self.size_at(k - 2), self.size_at(k - 1)
            tail = (spine_idx * sa + self._pair_a) * sy + self._pair_y
            span = self.level_size(k) // self.level_size(m)
            pos = (np.arange(self.level_size(m))[:, None] * span + tail[None, :]).ravel()
            pos.setflags(write=False)
            self._pos_cache[key] = pos
        return pos

    def phi(self, k: int, b):
        if k < 2:
            raise ValueError("phi_k is defined for k >= 2")
        return self._place(b, self.phi_positions(0, k), self.level_size(k))

    def alpha(self, i: int):
        n = self.level_size(i)
        pre = [self.alpha_prefix] * (i - 1)
        words = [self.word_index(pre + [c]) for c in self.alpha_letters]
        if self.is_matrix:
            return signed_perm(self.field, n, words[0], words[1])
        return cycle_perm(n, words)

    def level_gens(self, i: int) -> list:
        n = self.level_size(i)
        if self.is_matrix:
            out = []
            for r in self._field_basis():
                for y in range(n - 1):
                    out.append(elementary(self.field, n, y, y + 1, r))
                    out.append(elementary(self.field, n, y + 1, y, r))
            return out
        return alt_generators(n)

    def _field_basis(self) -> list[int]:
        return [self.field.p**j for j in range(self.field.e)]

    def random_level(self, i: int, rng: random.Random):
        n = self.level_size(i)
        if self.is_matrix:
            from .linfq import random_sl
            return random_sl(self.field, n, rng)
        return random_even_perm(n, rng)

    def level_order(self, i: int) -> int:
        n = self.level_size(i)
        if self.is_matrix:
            from .linfq import sl_order
            return sl_order(n, self.field.q)
        return alt_order(n)

    def b_gens(self) -> list:
        return list(self._b_gens)

    def b_identity(self):
        n = self.s_size
        return MatFq.identity(self.field, n) if self.is_matrix else Perm.identity(n)

    def b_group(self) -> PermGroup:
        if self._bgroup is None:
            self._bgroup = PermGroup(self._b_gens, self.s_size, seed=0)
        return self._bgroup

    def random_b(self, rng: random.Random):
        if self.is_matrix:
            from .linfq import random_sl
            return random_sl(self.field, self.s_size, rng)
        return self.b_group().random_element(rng)

    # carriers of the depth-m directed families: elements on X^m x S
    def carrier_size(self, m: int) -> int:
        return self.level_size(m) * self.s_size

    def carrier_identity(self, m: int):
        n = self.carrier_size(m)
        return MatFq.identity(self.field, n) if self.is_matrix else Perm.identity(n)

    def carrier_phi(self, sigma, m: int, k: int):
        return self._place(sigma, self.phi_positions(m, k), self.level_size(k))

    def carrier_lift(self, sigma, m: int):
        """X^m x S -> X^m x {spine} x S inside X^{m+1} x S."""
        S = self.s_size
        v = np.arange(self.level_size(m))
        pos = ((v[:, None] * self.size_at(m) + self.spine) * S + np.arange(S)[None, :]).ravel()
        return self._place(sigma, pos, self.carrier_size(m + 1))

    def carrier_at_prefix(self, b, u: int, m: int):
        """b acting on {u} x S inside X^m x S."""
        S = self.s_size
        pos = u * S + np.arange(S)
        return self._place(b, pos, self.carrier_size(m))

    def carrier_ext(self, x, m: int):
        """A level-m element acting on X^m x S through the X^m coordinates."""
        return self._kron(x, self.s_size)

    def spine_index(self, k: int) -> int:
        return self.word_index([self.spine] * k)

    # symbolic supports
    def _cyl(self, cons: list[frozenset[int]]) -> CylinderSet:
        level = len(cons)
        full = [frozenset(range(1, self.size_at(p) + 1)) for p in range(level)]
        cons = [full[p] if c is None else c for p, c in enumerate(cons)]
        if self.uniform:
            return CylinderSet(self.tail_size, tuple(cons))
        return CylinderSet(max(self.head_sizes + (self.tail_size,)), tuple(cons), self.sizes(level))

    @staticmethod
    def _one(a: int) -> frozenset[int]:
        return frozenset([a + 1])

    def b_support(self, i: int, j: int) -> list[CylinderSet]:
        """supp(B_{i,j}): {spine^{i-2}} x S x X^{j-i}."""
        if not 2 <= i <= j:
            raise ValueError("B(i,j) needs 2 <= i <= j")
        out = []
        for a_set, y_set in self.pair_rects:
            cons = [self._one(self.spine)] * (i - 2)
            cons += [frozenset(a + 1 for a in a_set), frozenset(y + 1 for y in y_set)]
            cons += [None] * (j - i)
            out.append(self._cyl(cons))
        return out

    def alpha_support(self, i: int, j: int) -> list[CylinderSet]:
        """supp(alpha_{i,j}): {aprefix^{i-1}} x alpha_letters x X^{j-i}."""
        if not 1 <= i <= j:
            raise ValueError("alpha(i,j) needs 1 <= i <= j")
        cons = [self._one(self.alpha_prefix)] * (i - 1)
        cons += [frozenset(c + 1 for c in self.alpha_letters)] + [None] * (j - i)
        return [self._cyl(cons)]

    def b_conj_support(self, i: int, j: int, k: int) -> list[CylinderSet]:
        """supp(B_{j,k}^{alpha_{i,k}}) for k >= j >= i + 2.

        alpha_i sends aprefix^{i-1} c to aprefix^i where c is the letter just
        before the prefix letter in the alpha cycle, so conjugation moves the
        support of B_{j,k} to words starting aprefix^{i-1} c aprefix^{j-2-i}."""
        if not (i >= 1 and j >= i + 2 and k >= j):
            raise ValueError("B_conj(i,j,k) needs k >= j >= i + 2")
        if self.alpha_prefix != self.spine:
            raise ValueError("conjugated supports need alpha and phi to share the prefix letter")
        letters = self.alpha_letters
        c = letters[letters.index(self.spine) - 1]
        out = []
        for a_set, y_set in self.pair_rects:
            cons = [self._one(self.spine)] * (i - 1) + [self._one(c)]
            cons += [self._one(self.spine)] * (j - 2 - i)
            cons += [frozenset(a + 1 for a in a_set), frozenset(y + 1 for y in y_set)]
            cons += [None] * (k - j)
            out.append(self._cyl(cons))
        return out

    # text forms
    def format_level_element(self, x, level: int) -> str:
        if self.is_matrix:
            if x.is_identity():
                return "id"
            return "M[" + ";".join(",".join(str(int(v)) for v in row) for row in x.a) + "]"
        return self._format_cycles(x, lambda p: self.format_word(self.index_word(p, level)))

    def format_b_element(self, b) -> str:
        if self.is_matrix:
            return self.format_level_element(b, 0)
        return self._format_cycles(b, lambda s: self.format_word(self.pairs[s]))

    def format_carrier(self, sigma, m: int) -> str:
        """Elements on X^m x S; points are written as the words v a y."""
        if self.is_matrix:
            return self.format_level_element(sigma, 0)
        S = self.s_size

        def name(c: int) -> str:
            v, s = divmod(c, S)
            return self.format_word(self.index_word(v, m) + self.pairs[s])
        return self._format_cycles(sigma, name)

    @staticmethod
    def _format_cycles(p: Perm, name: Callable[[int], str]) -> str:
        cyc = p.cycles()
        if not cyc:
            return "id"
        return "".join("(" + " ".join(name(x) for x in c) + ")" for c in cyc)

    def parse_level_element(self, text: str, level: int):
        text = text.strip()
        try:
            return super().parse_level_element(text, level)
        except ValueError:
            pass
        n = self.level_size(level)
        if self.is_matrix:
            return self._parse_matrix_element(text, n, lambda w: self.word_index(self.parse_word(w)),
                                              level)
        return self._parse_cycles(text, n, lambda w: self._level_point(w, level))

    def _level_point(self, w: str, level: int) -> int:
        letters = self.parse_word(w)
        if len(letters) != level:
            raise ValueError(f"word {w} has length {len(letters)}, expected {level}")
        return self.word_index(letters)

    def _s_point(self, w: str) -> int:
        letters = self.parse_word(w, offset=0)
        if len(letters) != 2:
            raise ValueError(f"B acts on two-letter words, got {w!r}")
        s = int(self._pair_table[letters[0], letters[1]])
        if s < 0:
            raise ValueError(f"word {w} is not in the domain of B")
        return s

    def parse_b_element(self, text: str):
        text = text.strip()
        try:
            return super().parse_b_element(text)
        except ValueError:
            pass
        if self.is_matrix:
            return self._parse_matrix_element(text, self.s_size, self._s_point, None)
        return self._parse_cycles(text, self.s_size, self._s_point)

    @staticmethod
    def _parse_cycles(text: str, n: int, point: Callable[[str], int]) -> Perm:
        if not re.fullmatch(r"(\s*\([^()]*\))+\s*", text):
            raise ValueError(f"cannot parse element {text!r}")
        cycles = []
        for body in re.findall(r"\(([^()]*)\)", text):
            pts = [point(tok) for tok in body.split()]
            if pts:
                cycles.append(pts)
        p = Perm.identity(n)
        for c in cycles:
            p = p * Perm.from_cycles(n, [c])
        return p

    def _parse_matrix_element(self, text: str, n: int, point: Callable[[str], int], level):
        m = re.fullmatch(r"e\(\s*([^,\s]+)\s*,\s*([^,\s]+)\s*,\s*(\d+)\s*\)", text)
        if m:
            r = int(m.group(3))
            if r >= self.field.q:
                raise ValueError(f"field element {r} out of range")
            return elementary(self.field, n, point(m.group(1)), point(m.group(2)), r)
        m = re.fullmatch(r"s\(\s*([^,\s]+)\s*,\s*([^,\s]+)\s*\)", text)
        if m:
            return signed_perm(self.field, n, point(m.group(1)), point(m.group(2)))
        m = re.fullmatch(r"M\[(.*)\]", text, re.S)
        if m:
            rows = [[int(v) for v in row.split(",")] for row in m.group(1).split(";")]
            return MatFq(self.field, rows)
        raise ValueError(f"cannot parse matrix element {text!r}")

    # pointwise evaluation
    def _spine_run(self, D: np.ndarray, start: int) -> np.ndarray:
        level = D.shape[1]
        if start >= level:
            return np.zeros(D.shape[0], dtype=np.int64)
        off = D[:, start:] != self.spine
        run = np.argmax(off, axis=1)
        run[~off.any(axis=1)] = level - start
        return run

    def apply_atom_digits(self, atom: Atom, D: np.ndarray):
        """Apply an atom in place to words given as digit rows of one level."""
        level = D.shape[1]
        k = atom.kind
        if k in ("D", "F"):
            if (k == "D" and level < atom.level) or (k == "F" and level != atom.level):
                return
            j = atom.level
            pre = self.undigits(D, 0, j)
            self._write_prefix(D, slice(None), atom.elem.images[pre], j)
            return
        if k == "L":
            D[:] = atom.elem.images[D]
            return
        m = atom.depth if k == "Tm" else 0
        n = atom.level
        t = m + self._spine_run(D, m)
        ok = (t + 1 < level) & (t + 2 >= n + 1)
        rows = np.nonzero(ok)[0]
        if rows.size == 0:
            return
        tr = t[rows]
        s = self._pair_table[D[rows, tr], D[rows, tr + 1]]
        hit = s >= 0
        rows, tr, s = rows[hit], tr[hit], s[hit]
        if rows.size == 0:
            return
        S = self.s_size
        if m:
            v = self.undigits(D[rows], 0, m)
            new = atom.elem.images[v * S + s]
            self._write_prefix(D, rows, new // S, m)
            s_new = new % S
        else:
            s_new = atom.elem.images[s]
        D[rows, tr] = self._pair_a[s_new]
        D[rows, tr + 1] = self._pair_y[s_new]

    def act_points(self, atoms: Sequence[Atom], level: int, points: np.ndarray) -> np.ndarray:
        """Images of level-`level` word indices under the product of atoms."""
        if self.is_matrix:
            raise ValueError("pointwise evaluation needs a permutation telescope")
        points = np.asarray(points, dtype=np.int64)
        out = np.empty_like(points)
        for lo in range(0, points.shape[0], POINTWISE_BATCH):
            D = self.digits(points[lo:lo + POINTWISE_BATCH], level)
            for atom in reversed(atoms):
                self.apply_atom_digits(atom, D)
            out[lo:lo + POINTWISE_BATCH] = self.undigits(D)
        return out

    def _atom_projection(self, atom: Atom, level: int):
        if not self.is_matrix:
            if atom.kind in ("D", "F", "T", "Tm") and self._atom_trivial(atom, level):
                return self.identity(level)
            return Perm(self.act_points([atom], level, np.arange(self.level_size(level))), check=False)
        k = atom.kind
        if k in ("D", "F"):
            return super()._atom_projection(atom, level)
        if k not in ("T", "Tm"):
            raise ValueError(f"atom kind {k} is not available for matrices")
        m = atom.depth if k == "Tm" else 0
        n = self.level_size(level)
        a = np.eye(n, dtype=np.int64)
        for kk in range(max(atom.level + 1, m + 2), level + 1):
            pos = self.phi_positions(m, kk)
            M = n // self.level_size(kk)
            P = (pos[:, None] * M + np.arange(M)[None, :]).ravel()
            a[np.ix_(P, P)] = np.kron(atom.elem.a, np.eye(M, dtype=np.int64))
        return MatFq(self.field, a, check=False)

    @staticmethod
    def _atom_trivial(atom: Atom, level: int) -> bool:
        if atom.kind == "D":
            return level < atom.level
        if atom.kind == "F":
            return level != atom.level
        return level <= atom.level


# -- shifted and quotient telescopes ----------------------------------------
class ShiftedSpec(TelescopeSpec):
    """The telescope with levels Omega_{i+n} and maps phi_{i+n}."""

    def __init__(self, base: TelescopeSpec, n: int):
        if n < 0:
            raise ValueError("shift must be non-negative")
        self.base = base
        self.shift = n
        self.engine = base.engine
        self.kappa = base.kappa
        self.name = f"{base.name}+{n}"
        self.max_level = base.max_level - n

    def describe(self) -> dict:
        out = self.base.describe()
        out["shift"] = self.shift
        return out

    def level_size(self, i):
        return self.base.level_size(i + self.shift)

    def identity(self, i):
        return self.base.identity(i + self.shift)

    def iota(self, x, i, j):
        return self.base.iota(x, i + self.shift, j + self.shift)

    def level_gens(self, i):
        return self.base.level_gens(i + self.shift)

    def random_level(self, i, rng):
        return self.base.random_level(i + self.shift, rng)

    def level_order(self, i):
        return self.base.level_order(i + self.shift)

    def phi(self, k, b):
        return self.base.phi(k + self.shift, b)

    def b_gens(self):
        return self.base.b_gens()

    def b_identity(self):
        return self.base.b_identity()

    def random_b(self, rng):
        return self.base.random_b(rng)

    def alpha(self, i):
        return self.base.alpha(i + self.shift)

    def canon(self, x):
        return self.base.canon(x)

    def b_support(self, i, j):
        return self.base.b_support(i + self.shift, j + self.shift)

    def alpha_support(self, i, j):
        return self.base.alpha_support(i + self.shift, j + self.shift)

    def b_conj_support(self, i, j, k):
        return self.base.b_conj_support(i + self.shift, j + self.shift, k + self.shift)


class QuotientSpec(TelescopeSpec):
    """Levels Omega_i / M_i for normal subgroups with iota(M_i) inside M_j.

    `member(i, x)` decides x in M_i, `gens(i)` lists generators of M_i,
    `canon(x)` returns a representative that is equal for equal cosets, and
    `m_order(i)` gives |M_i|."""

    def __init__(self, base: TelescopeSpec, member: Callable, gens: Callable, canon: Callable,
                 m_order: Callable, label: str = "quotient"):
        self.base = base
        self.member = member
        self.m_gens = gens
        self._canon = canon
        self.m_order = m_order
        self.kappa = base.kappa
        self.max_level = base.max_level
        self.name = f"{base.name}/{label}"
        self.engine = "matrix-mod-scalars" if base.engine == "matrix" else f"{base.engine}-mod"
        self.is_tree = False

    def describe(self) -> dict:
        out = self.base.describe()
        out["engine"] = self.engine
        out["quotient"] = self.name
        return out

    def canon(self, x):
        return self._canon(x)

    def level_size(self, i):
        return self.base.level_size(i)

    def identity(self, i):
        return self.base.identity(i)

    def iota(self, x, i, j):
        return self.base.iota(x, i, j)

    def level_gens(self, i):
        return self.base.level_gens(i)

    def random_level(self, i, rng):
        return self.base.random_level(i, rng)

    def level_order(self, i):
        return self.base.level_order(i) // self.m_order(i)

    def phi(self, k, b):
        return self.base.phi(k, b)

    def b_gens(self):
        return self.base.b_gens()

    def b_identity(self):
        return self.base.b_identity()

    def random_b(self, rng):
        return self.base.random_b(rng)

    def alpha(self, i):
        return self.base.alpha(i)

    def b_support(self, i, j):
        return self.base.b_support(i, j)

    def alpha_support(self, i, j):
        return self.base.alpha_support(i, j)

    def b_conj_support(self, i, j, k):
        return self.base.b_conj_support(i, j, k)

    def atom_projection(self, atom, level):
        return self.base.atom_projection(atom, level)

    def format_level_element(self, x, level):
        return self.base.format_level_element(x, level)

    def format_b_element(self, b):
        return self.base.format_b_element(b)

    def parse_level_element(self, text, level):
        return self.base.parse_level_element(text, level)

    def parse_b_element(self, text):
        return self.base.parse_b_element(text)


def shift(spec: TelescopeSpec, n: int) -> TelescopeSpec:
    if n == 0:
        return spec
    return ShiftedSpec(spec, n)


def quotient(spec: TelescopeSpec, member: Callable, gens: Callable, canon: Callable,
             m_order: Callable, label: str = "quotient") -> QuotientSpec:
    """Quotient telescope; checks iota_{i,j}(M_i) inside M_j on generators."""
    for i in range(1, spec.max_level):
        for g in gens(i):
            if not member(i, g):
                raise ValueError(f"listed generator of M_{i} is not a member")
            for j in range(i + 1, spec.max_level + 1):
                if not member(j, spec.iota(g, i, j)):
                    raise ValueError(f"iota_{i},{j} does not map M_{i} into M_{j}")
    return QuotientSpec(spec, member, gens, canon, m_order, label)


def canonical_mod_scalars(x: MatFq) -> MatFq:
    """Scale so the first nonzero entry (row-major) equals 1."""
    flat = x.a.ravel()
    nz = np.flatnonzero(flat)
    lam = int(flat[nz[0]])
    if lam == 1:
        return x
    return x.scale(int(x.field.inv[lam]))


# -- lazy elements ----------------------------------------------------------
class LazyElement:
    """A formal word in atoms, evaluated one level at a time."""

    __slots__ = ("spec", "atoms", "uid")

    def __init__(self, spec: TelescopeSpec, atoms: Sequence[Atom] = ()):
        self.spec = spec
        self.atoms = tuple(atoms)
        self.uid = next(_uid)

    @property
    def word_length(self) -> int:
        return len(self.atoms)

    def __mul__(self, other: "LazyElement") -> "LazyElement":
        if other.spec is not self.spec:
            raise ValueError("elements belong to different telescopes")
        left = list(self.atoms)
        right = list(other.atoms)
        while left and right and _cancels(left[-1], right[0]):
            left.pop()
            right.pop(0)
        return LazyElement(self.spec, left + right)

    def inverse(self) -> "LazyElement":
        return LazyElement(self.spec, [a.inverse() for a in reversed(self.atoms)])

    def __pow__(self, k: int) -> "LazyElement":
        base = self if k >= 0 else self.inverse()
        out = LazyElement(self.spec)
        for _ in range(abs(k)):
            out = out * base
        return out

    def project(self, n: int):
        spec = self.spec
        spec.check_level(n)
        key = (self.uid, n)
        hit = CACHE.get(key)
        if hit is not None:
            return hit
        if not self.atoms:
            val = spec.identity(n)
        elif isinstance(spec, TreeTelescope) and not spec.is_matrix:
            img = None
            for atom in self.atoms:
                a = spec.atom_projection(atom, n).images
                img = a if img is None else img[a]
            val = Perm(img, check=False)
        else:
            val = None
            for atom in self.atoms:
                a = spec.atom_projection(atom, n)
                val = a if val is None else val * a
            val = spec.canon(val)
        CACHE.put(key, val)
        return val

    def act(self, level: int, points) -> np.ndarray:
        """Pointwise images at any level (permutation tree telescopes)."""
        return self.spec.act_points(self.atoms, level, np.asarray(points, dtype=np.int64))

    def max_param(self) -> int:
        return max((a.max_param() for a in self.atoms), default=0)

    def has_letterwise(self) -> bool:
        return any(a.kind == "L" for a in self.atoms)

    def __str__(self):
        return format_element(self)

    def __repr__(self):
        return f"LazyElement({self.spec.name}, {len(self.atoms)} atoms)"


def _cancels(a: Atom, b: Atom) -> bool:
    if not a.same_slot(b) or a.kind == "L" and b.kind != "L":
        return False
    prod = a.elem * b.elem
    return prod.is_identity()


def identity_element(spec: TelescopeSpec) -> LazyElement:
    return LazyElement(spec)


def delta(spec: TelescopeSpec, i: int, w) -> LazyElement:
    spec.check_level(i)
    if w.is_identity():
        return LazyElement(spec)
    return LazyElement(spec, [Atom("D", i, w)])


def tilde(spec: TelescopeSpec, n: int, b) -> LazyElement:
    if n < 1:
        raise ValueError("tilde needs n >= 1")
    if b.is_identity():
        return LazyElement(spec)
    return LazyElement(spec, [Atom("T", n, b)])


def one_hot(spec: TelescopeSpec, i: int, w) -> LazyElement:
    if w.is_identity():
        return LazyElement(spec)
    return LazyElement(spec, [Atom("F", i, w)])


def carrier_tilde(spec: TreeTelescope, m: int, n: int, sigma) -> LazyElement:
    """sigma~^[n] for sigma acting on X^m x S (n > m)."""
    if n <= m:
        raise ValueError("directed family atoms need n > m")
    if sigma.is_identity():
        return LazyElement(spec)
    if m == 0:
        return LazyElement(spec, [Atom("T", n, sigma)])
    return LazyElement(spec, [Atom("Tm", n, sigma, depth=m)])


def letterwise(spec: TreeTelescope, t: Perm) -> LazyElement:
    if not spec.uniform:
        raise ValueError("letterwise elements need a uniform alphabet")
    return LazyElement(spec, [Atom("L", 1, t)])


def project(g: LazyElement, n: int):
    return g.project(n)


def commutator(g: LazyElement, h: LazyElement) -> LazyElement:
    """[g, h] = g h g^-1 h^-1."""
    return g * h * g.inverse() * h.inverse()


def conjugate(g: LazyElement, h: LazyElement) -> LazyElement:
    """g^h = h^-1 g h."""
    return h.inverse() * g * h


def equal_at(g: LazyElement, h: LazyElement, n: int) -> bool:
    spec = g.spec
    if n <= spec.max_level:
        return spec.same(g.project(n), h.project(n))
    pts = np.arange(spec.level_size(n))
    return bool(np.array_equal(g.act(n, pts), h.act(n, pts)))


def equal_up_to(g: LazyElement, h: LazyElement, n: int) -> bool:
    """pi_j(g) = pi_j(h) for all j <= n."""
    return all(equal_at(g, h, j) for j in range(1, n + 1))


def stable_level(*elements: LazyElement) -> int:
    """A level L such that, for permutation tree telescopes, agreement at
    levels 1..L implies agreement at every level.

    Every atom rewrites a word only inside its first P letters (P the
    largest level index among the atoms) and at the two letters following
    a run of spine letters; the run itself and everything after those two
    letters is never touched.  Collapsing the run therefore maps level-i
    words onto level-(P+2) words compatibly with every atom, so the level
    P+2 permutation determines all deeper ones."""
    p = max((e.max_param() for e in elements), default=0)
    for e in elements:
        if e.has_letterwise():
            raise ValueError("letterwise atoms act on every letter; no stable level")
    return max(p, 1) + 2


def equal_all_levels(g: LazyElement, h: LazyElement) -> tuple[bool, int]:
    """Exact equality in the full product (permutation tree telescopes).
    Returns (verdict, level range checked)."""
    L = stable_level(g, h)
    return equal_up_to(g, h, L), L


# -- element grammar ---------------------------------------------------------
class ExpressionError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


def format_element(g: LazyElement) -> str:
    if not g.atoms:
        return "1"
    spec = g.spec
    parts = []
    for a in g.atoms:
        if a.kind in ("D", "F"):
            parts.append(f"{a.kind}({a.level},{spec.format_level_element(a.elem, a.level)})")
        elif a.kind == "T":
            parts.append(f"T({a.level},{spec.format_b_element(a.elem)})")
        elif a.kind == "Tm":
            body = spec.format_carrier(a.elem, a.depth) if hasattr(spec, "format_carrier") \
                else f"<carrier {a.elem.degree}>"
            parts.append(f"Tm({a.depth},{a.level},{body})")
        else:
            parts.append("L(" + ",".join(str(int(x) + 1) for x in a.elem.images) + ")")
    return "*".join(parts)


class _Parser:
    def __init__(self, spec: TelescopeSpec, text: str):
        self.spec = spec
        self.text = text
        self.pos = 0

    def error(self, msg: str):
        raise ExpressionError(msg, self.pos)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self, s: str) -> bool:
        self.skip()
        return self.text.startswith(s, self.pos)

    def expect(self, s: str):
        if not self.peek(s):
            self.error(f"expected {s!r}")
        self.pos += len(s)

    def expr(self) -> LazyElement:
        g = self.factor()
        while self.peek("*"):
            self.pos += 1
            g = g * self.factor()
        return g

    def factor(self) -> LazyElement:
        g = self.atom()
        if self.peek("^-1"):
            self.pos += 3
            g = g.inverse()
        return g

    def atom(self) -> LazyElement:
        self.skip()
        if self.peek("("):
            self.pos += 1
            g = self.expr()
            self.expect(")")
            return g
        if self.peek("1") and not self.text[self.pos + 1:self.pos + 2].isdigit():
            self.pos += 1
            return LazyElement(self.spec)
        for kind in ("D", "T"):
            if self.peek(kind + "("):
                self.pos += 2
                start = self.pos
                level = self.integer()
                self.expect(",")
                body_start = self.pos
                body = self.balanced()
                try:
                    if kind == "D":
                        if not 1 <= level <= self.spec.max_level:
                            raise ValueError(f"level {level} out of range 1..{self.spec.max_level}")
                        elem = self.spec.parse_level_element(body, level)
                        return delta(self.spec, level, elem)
                    if level < 1:
                        raise ValueError("tilde level must be at least 1")
                    return tilde(self.spec, level, self.spec.parse_b_element(body))
                except ExpressionError:
                    raise
                except ValueError as exc:
                    self.pos = body_start if "level" not in str(exc) else start
                    self.error(str(exc))
        self.error("expected D(, T(, 1 or (")

    def integer(self) -> int:
        self.skip()
        m = re.match(r"\d+", self.text[self.pos:])
        if not m:
            self.error("expected an integer")
        self.pos += m.end()
        return int(m.group(0))

    def balanced(self) -> str:
        """Text up to the ')' closing the current atom."""
        depth = 0
        start = self.pos
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch in "([":
                depth += 1
            elif ch in ")]":
                if depth == 0:
                    body = self.text[start:self.pos]
                    self.pos += 1
                    return body
                depth -= 1
            self.pos += 1
        self.error("unterminated atom")


def parse_element(spec: TelescopeSpec, text: str) -> LazyElement:
    """Parse ``expr := factor {"*" factor}``, ``factor := atom ["^-1"]``,
    ``atom := D(level,elem) | T(level,b) | (expr) | 1``."""
    p = _Parser(spec, text)
    g = p.expr()
    p.skip()
    if p.pos != len(text):
        p.error("unexpected trailing text")
    return g


__all__ = [
    "Atom", "TelescopeSpec", "TreeTelescope", "ShiftedSpec", "QuotientSpec", "LazyElement",
    "ExpressionError", "alt_generators", "random_even_perm", "substream", "shift", "quotient",
    "canonical_mod_scalars", "identity_element", "delta", "tilde", "one_hot", "carrier_tilde",
    "letterwise", "project", "commutator", "conjugate", "equal_at", "equal_up_to",
    "stable_level", "equal_all_levels", "format_element", "parse_element", "is_scalar",
]
