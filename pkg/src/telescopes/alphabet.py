"""Words over a finite alphabet and cylinder sets of words.

Letters are 1-based (x_1 .. x_d); a word of length l is ranked
lexicographically in [0, d**l).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator, Sequence


@dataclass(frozen=True)
class AlphabetWord:
    letters: tuple[int, ...]
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("alphabet size must be positive")
        for a in self.letters:
            if not 1 <= a <= self.d:
                raise ValueError(f"letter {a} out of range 1..{self.d}")

    def __len__(self):
        return len(self.letters)

    def __add__(self, other: "AlphabetWord") -> "AlphabetWord":
        if other.d != self.d:
            raise ValueError("alphabet size mismatch")
        return AlphabetWord(self.letters + other.letters, self.d)

    def __str__(self):
        return format_word(self.letters)


def word_to_index(w: AlphabetWord | Sequence[int], d: int | None = None) -> int:
    """Lexicographic rank of a word inside X^len(w)."""
    if isinstance(w, AlphabetWord):
        letters, d = w.letters, w.d
    else:
        letters = tuple(w)
        if d is None:
            raise ValueError("alphabet size required for a bare letter sequence")
    idx = 0
    for a in letters:
        if not 1 <= a <= d:
            raise ValueError(f"letter {a} out of range 1..{d}")
        idx = idx * d + (a - 1)
    return idx


def index_to_word(index: int, level: int, d: int) -> AlphabetWord:
    if not 0 <= index < d**level:
        raise ValueError(f"index {index} out of range for level {level}")
    letters = []
    for _ in range(level):
        index, rem = divmod(index, d)
        letters.append(rem + 1)
    return AlphabetWord(tuple(reversed(letters)), d)


def all_words(level: int, d: int) -> Iterator[tuple[int, ...]]:
    """X^level in lexicographic order, as letter tuples."""
    return product(range(1, d + 1), repeat=level)


def format_word(letters: Iterable[int]) -> str:
    s = "".join(f"x{a}" for a in letters)
    return s if s else "e"


def parse_word(text: str, d: int) -> AlphabetWord:
    """Parse `x5x5x1` (or `e` for the empty word)."""
    text = text.strip()
    if text in ("", "e"):
        return AlphabetWord((), d)
    if not text.startswith("x"):
        raise ValueError(f"bad word {text!r}")
    parts = text[1:].split("x")
    try:
        letters = tuple(int(p) for p in parts)
    except ValueError:
        raise ValueError(f"bad word {text!r}") from None
    return AlphabetWord(letters, d)


@dataclass(frozen=True)
class CylinderSet:
    """A product A_1 x ... x A_l of non-empty letter sets.

    `sizes` gives per-coordinate alphabet sizes for trees whose alphabets
    vary with depth; when absent every coordinate ranges over 1..d.
    """

    d: int
    constraints: tuple[frozenset[int], ...]
    sizes: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.sizes is not None and len(self.sizes) != len(self.constraints):
            raise ValueError("one alphabet size per coordinate required")
        for i, c in enumerate(self.constraints):
            if not c:
                raise ValueError("cylinder coordinates must be non-empty")
            if not c <= frozenset(range(1, self.size_at(i) + 1)):
                raise ValueError("cylinder letter out of range")

    def size_at(self, i: int) -> int:
        return self.sizes[i] if self.sizes is not None else self.d

    @property
    def level(self) -> int:
        return len(self.constraints)

    @classmethod
    def build(cls, d: int, *parts) -> "CylinderSet":
        """Build from parts: an int is a singleton letter, a word tuple is a
        run of singletons, a set is a subset, `None` is the full alphabet,
        and ("full", k) is k full coordinates."""
        cons: list[frozenset[int]] = []
        full = frozenset(range(1, d + 1))
        for p in parts:
            if p is None:
                cons.append(full)
            elif isinstance(p, int):
                cons.append(frozenset([p]))
            elif isinstance(p, tuple) and len(p) == 2 and p[0] == "full":
                cons.extend([full] * p[1])
            elif isinstance(p, tuple):
                cons.extend(frozenset([a]) for a in p)
            else:
                cons.append(frozenset(p))
        return cls(d, tuple(cons))

    def __contains__(self, word) -> bool:
        letters = word.letters if isinstance(word, AlphabetWord) else tuple(word)
        if len(letters) != self.level:
            return False
        return all(a in c for a, c in zip(letters, self.constraints))

    def cardinality(self) -> int:
        n = 1
        for c in self.constraints:
            n *= len(c)
        return n

    def words(self) -> Iterator[tuple[int, ...]]:
        return product(*(sorted(c) for c in self.constraints))

    def indices(self) -> list[int]:
        if self.sizes is None:
            return [word_to_index(w, self.d) for w in self.words()]
        out = []
        for w in self.words():
            idx = 0
            for a, n in zip(w, self.sizes):
                idx = idx * n + (a - 1)
            out.append(idx)
        return out

    def extend(self, extra: int, sizes: Sequence[int] | None = None) -> "CylinderSet":
        return cylinder_extend(self, extra, sizes)

    def __str__(self):
        parts = []
        for i, c in enumerate(self.constraints):
            if len(c) == self.size_at(i):
                parts.append("X")
            elif len(c) == 1:
                parts.append(f"{{x{next(iter(c))}}}")
            else:
                parts.append("{" + ",".join(f"x{a}" for a in sorted(c)) + "}")
        return "x".join(parts) if parts else "{e}"


def cylinder_disjoint(a: CylinderSet, b: CylinderSet) -> bool:
    if a.level != b.level:
        raise ValueError(f"level mismatch: {a.level} vs {b.level}")
    if a.d != b.d or a.sizes != b.sizes:
        raise ValueError("alphabet size mismatch")
    return any(not (ca & cb) for ca, cb in zip(a.constraints, b.constraints))


def cylinder_extend(a: CylinderSet, extra: int, sizes: Sequence[int] | None = None) -> CylinderSet:
    """Pad with `extra` full coordinates (of the given sizes for mixed trees)."""
    if extra < 0:
        raise ValueError("extra must be non-negative")
    if a.sizes is None and sizes is None:
        full = frozenset(range(1, a.d + 1))
        return CylinderSet(a.d, a.constraints + (full,) * extra)
    if sizes is None or len(sizes) != extra:
        raise ValueError("mixed cylinders need the sizes of the new coordinates")
    new = tuple(frozenset(range(1, n + 1)) for n in sizes)
    old = a.sizes if a.sizes is not None else (a.d,) * a.level
    return CylinderSet(a.d, a.constraints + new, tuple(old) + tuple(sizes))


def pairwise_disjoint(cylinders: Sequence[CylinderSet]) -> bool:
    return all(
        cylinder_disjoint(cylinders[i], cylinders[j])
        for i in range(len(cylinders))
        for j in range(i + 1, len(cylinders))
    )
