"""Concrete telescopes: alternating, elementary/special linear, projective,
the embedding telescope of a finite perfect group, and small toy examples."""

from __future__ import annotations

import math
import random
import re
from pathlib import Path
from typing import Sequence


from .alphabet import CylinderSet
from .linfq import Field, MatFq, elementary, is_scalar
from .permgrp import Perm, PermGroup, normal_closure
from .telescope import (
    LazyElement,
    TelescopeSpec,
    TreeTelescope,
    alt_generators,
    canonical_mod_scalars,
    quotient,
    random_even_perm,
    tilde,
)


# -- alternating telescopes ---------------------------------------------------
def build_alt(d: int, r: int, max_level: int = 6) -> TreeTelescope:
    """Alternating telescope on words over d letters with B = Alt({x_1..x_r} x X)."""
    if d < 5 or not 2 <= r <= d - 3:
        raise ValueError(f"need d >= 5 and 2 <= r <= d-3, got d={d}, r={r}")
    pairs = [(a, y) for a in range(r) for y in range(d)]
    n = len(pairs)
    return TreeTelescope(
        name=f"A({d},{r})", head_sizes=(), tail_size=d, spine=d - 1, pairs=pairs,
        pair_rects=[(range(r), range(d))], alpha_letters=(d - 3, d - 2, d - 1),
        escape=d - 2, b_generators=alt_generators(n), max_level=max_level,
        params={"kind": "alt", "d": d, "r": r, "max_level": max_level})


def alt_support(spec: TreeTelescope, kind: str, *idx: int) -> CylinderSet:
    """Support cylinder of B(i,j), alpha(i,j) or B_conj(i,j,k)."""
    if kind == "B":
        return spec.b_support(*idx)[0]
    if kind == "alpha":
        return spec.alpha_support(*idx)[0]
    if kind == "B_conj":
        return spec.b_conj_support(*idx)[0]
    raise ValueError(f"unknown support descriptor {kind!r}")


def build_corrupted_alt(d: int = 5, r: int = 2, max_level: int = 4) -> TreeTelescope:
    """Negative control: phi places B behind x_1-runs instead of the spine.

    The images of B at different levels then overlap, so the commutator
    axiom fails; the flexibility witnesses are left unchanged."""
    pairs = [(a, y) for a in range(r) for y in range(d)]
    return _Corrupted(
        name=f"A({d},{r})-corrupted", head_sizes=(), tail_size=d, spine=0, pairs=pairs,
        pair_rects=[(range(r), range(d))], alpha_letters=(d - 3, d - 2, d - 1),
        escape=d - 2, b_generators=alt_generators(len(pairs)), max_level=max_level,
        alpha_prefix=d - 1, params={"kind": "alt-corrupted", "d": d, "r": r,
                                    "max_level": max_level})


class _Corrupted(TreeTelescope):
    def _check_structure(self):
        pass

    def _atom_projection(self, atom, level):
        # the pointwise evaluator assumes disjoint factors; use the generic product
        return TelescopeSpec._atom_projection(self, atom, level)


# -- elementary / special linear telescopes -----------------------------------
def build_el(d: int, q: int, max_level: int = 4) -> TreeTelescope:
    """E_d(F_q): SL over words of length n, B = E over {x_1,x_2} x X."""
    if d < 4:
        raise ValueError(f"need d >= 4, got {d}")
    fld = Field(q)
    pairs = [(a, y) for a in (0, 1) for y in range(d)]
    n = len(pairs)
    basis = [fld.p**j for j in range(fld.e)]
    gens = []
    for rr in basis:
        for s in range(n - 1):
            gens.append(elementary(fld, n, s, s + 1, rr))
            gens.append(elementary(fld, n, s + 1, s, rr))
    return TreeTelescope(
        name=f"E_{d}(F_{q})", head_sizes=(), tail_size=d, spine=d - 1, pairs=pairs,
        pair_rects=[((0, 1), range(d))], alpha_letters=(d - 2, d - 1), escape=d - 2,
        b_generators=gens, max_level=max_level, engine="matrix", fld=fld,
        params={"kind": "el", "d": d, "q": q, "max_level": max_level})


def el_support(spec: TreeTelescope, kind: str, *idx: int) -> CylinderSet:
    """Z(n,m) (support of B_{n,m}) or Zi(i,k,m) (support of its alpha_{i,m}-conjugate)."""
    if kind == "Z":
        return spec.b_support(*idx)[0]
    if kind == "Zi":
        return spec.b_conj_support(*idx)[0]
    raise ValueError(f"unknown support descriptor {kind!r}")


def _scalar_count(fld: Field, n: int) -> int:
    """Number of lambda in F_q^* with lambda^n = 1."""
    return math.gcd(n, fld.q - 1)


def _scalar_roots(fld: Field, n: int) -> list[int]:
    out = []
    for lam in fld.nonzero():
        x = 1
        for _ in range(n % (fld.q - 1)):
            x = int(fld.mul[x, lam])
        if x == 1:
            out.append(lam)
    return out


def build_psl(d: int, q: int, max_level: int = 4):
    """PSL telescope: the E_d(F_q) telescope modulo scalar matrices."""
    base = build_el(d, q, max_level)
    fld = base.field

    def member(i, x):
        return is_scalar(x) is not None

    def gens(i):
        n = base.level_size(i)
        return [MatFq.scalar(fld, n, lam) for lam in _scalar_roots(fld, n) if lam != 1]

    def m_order(i):
        return _scalar_count(fld, base.level_size(i))

    spec = quotient(base, member, gens, canonical_mod_scalars, m_order, label="scalars")
    spec.name = f"PSL_{d}(F_{q})"
    return spec


# -- embedding telescope of a finite perfect group ----------------------------
class FiniteGroup:
    """A finite group given by generators, enumerated breadth first from 1."""

    def __init__(self, name: str, gens: Sequence, identity):
        self.name = name
        self.gens = list(gens)
        self.elements = [identity]
        self.index = {identity.key(): 0}
        frontier = [identity]
        while frontier:
            nxt = []
            for x in frontier:
                for g in self.gens:
                    y = g * x
                    k = y.key()
                    if k not in self.index:
                        self.index[k] = len(self.elements)
                        self.elements.append(y)
                        nxt.append(y)
            frontier = nxt
        self._left = {}

    @property
    def order(self) -> int:
        return len(self.elements)

    def left_mult(self, g) -> Perm:
        """x -> g x on element indices."""
        k = g.key()
        if k not in self._left:
            self._left[k] = Perm([self.index[(g * x).key()] for x in self.elements], check=False)
        return self._left[k]

    def element_index(self, g) -> int:
        return self.index[g.key()]

    def is_perfect(self) -> bool:
        regular = [self.left_mult(g) for g in self.gens]
        comms = [a * b * a.inverse() * b.inverse() for a in regular for b in regular]
        comms = [c for c in comms if not c.is_identity()]
        if not comms:
            return self.order == 1
        return normal_closure(comms, regular, self.order).order() == self.order


def named_group(name: str) -> FiniteGroup:
    if name == "alt5":
        return FiniteGroup("alt5", [Perm([1, 2, 0, 3, 4]), Perm([1, 2, 3, 4, 0])], Perm.identity(5))
    if name == "alt6":
        return FiniteGroup("alt6", [Perm([1, 2, 0, 3, 4, 5]), Perm([0, 2, 3, 4, 5, 1])],
                           Perm.identity(6))
    if name == "sl2_5":
        f = Field(5)
        return FiniteGroup("sl2_5", [MatFq(f, [[1, 1], [0, 1]]), MatFq(f, [[1, 0], [1, 1]])],
                           MatFq.identity(f, 2))
    raise ValueError(f"unknown group {name!r}; built-ins are alt5, alt6, sl2_5")


def group_from_file(path: str | Path) -> FiniteGroup:
    """Permutation generators in 1-based cycle notation, one per line."""
    lines = [ln.split("#")[0].strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    degree = None
    if lines and lines[0].startswith("degree"):
        degree = int(lines.pop(0).split()[-1])
    cycles = []
    for ln in lines:
        if not re.fullmatch(r"(\s*\(\s*\d+(\s+\d+)*\s*\))+\s*", ln):
            raise ValueError(f"bad generator line {ln!r}")
        cycles.append([[int(t) - 1 for t in c.split()] for c in re.findall(r"\(([^)]*)\)", ln)])
    if degree is None:
        degree = max((max(c) + 1 for cs in cycles for c in cs), default=1)
    gens = [Perm.from_cycles(degree, cs) for cs in cycles]
    return FiniteGroup(Path(path).stem, gens, Perm.identity(degree))


# canonical letters of the first alphabet, also used as element indices of G
LETTER_O, LETTER_ALPHA, LETTER_DELTA, LETTER_EPS, LETTER_Y, LETTER_Z = range(6)


class EmbedTelescope(TreeTelescope):
    """Embedding telescope H(G) for a finite perfect G with trivial N_i:
    X_1 has six letters, X_i = G for i >= 2, and B = Alt(6) x G."""

    def __init__(self, group: FiniteGroup, max_level: int = 3):
        n = group.order
        if n < 6:
            raise ValueError("the group needs at least six elements")
        o, al, de, ep, y, z = range(6)
        pairs = [(de, y), (de, z), (de, o), (ep, y), (ep, z), (ep, o)]
        pairs += [(al, x) for x in range(n)]
        S = len(pairs)
        b0 = [Perm(list(g.images) + list(range(6, S)), check=False) for g in alt_generators(6)]
        bg = [self._g_part(group, g) for g in group.gens]
        super().__init__(
            name=f"H({group.name})", head_sizes=(6,), tail_size=n, spine=o, pairs=pairs,
            pair_rects=[((de, ep), (y, z, o)), ((al,), range(n))],
            alpha_letters=(y, z, o), escape=y, b_generators=b0 + bg, max_level=max_level,
            params={"kind": "embed", "group": group.name, "max_level": max_level,
                    "specialization": "finite-G"})
        self.group = group
        self.b0_count = len(b0)

    @staticmethod
    def _g_part(group: FiniteGroup, g) -> Perm:
        lm = group.left_mult(g).images
        return Perm(list(range(6)) + [6 + int(v) for v in lm], check=False)

    def g_element(self, g) -> Perm:
        """(1, g) in B = B_0 x G as a permutation of S."""
        return self._g_part(self.group, g)

    def b0_element(self, p: Perm) -> Perm:
        return Perm(list(p.images) + list(range(6, self.s_size)), check=False)

    def random_b(self, rng: random.Random):
        g = self.group.elements[rng.randrange(self.group.order)]
        return self.b0_element(random_even_perm(6, rng)) * self.g_element(g)

    def b_group_order(self) -> int:
        return 360 * self.group.order

    def psi0_support(self, n: int, m: int) -> CylinderSet:
        return self.b_support(n, m)[0]

    def psi_alpha_support(self, n: int, m: int) -> CylinderSet:
        return self.b_support(n, m)[1]


def build_embed(group: str | FiniteGroup = "alt5", max_level: int = 3) -> EmbedTelescope:
    G = named_group(group) if isinstance(group, str) else group
    if not G.is_perfect():
        raise ValueError(f"group {G.name} is not perfect")
    return EmbedTelescope(G, max_level)


def directed_tree_embedding(spec: EmbedTelescope, g) -> LazyElement:
    """The directed element tilde(1, (1, g)) of the embedding telescope."""
    return tilde(spec, 1, spec.g_element(g))


# -- toy telescopes -----------------------------------------------------------
class _PermToy(TelescopeSpec):
    """Level groups given as permutation groups of small degree."""

    engine = "permutation"

    def __init__(self, b_gens: Sequence[Perm], max_level: int):
        self._b = list(b_gens)
        self.b_degree = self._b[0].degree
        self.max_level = max_level
        self._bgroup = PermGroup(self._b, self.b_degree)

    def b_gens(self):
        return list(self._b)

    def b_identity(self):
        return Perm.identity(self.b_degree)

    def random_b(self, rng):
        return self._bgroup.random_element(rng)

    def b_order(self) -> int:
        return self._bgroup.order()


class NonFlexibleTelescope(_PermToy):
    """Omega_i trivial for odd i, equal to B for even i, trivial transitions."""

    def __init__(self, b_gens: Sequence[Perm] | None = None, max_level: int = 6):
        super().__init__(b_gens or alt_generators(5), max_level)
        self.name = "nonflexible"

    def level_size(self, i):
        return self.b_degree if i % 2 == 0 else 1

    def identity(self, i):
        return Perm.identity(self.level_size(i))

    def iota(self, x, i, j):
        return x if i == j else self.identity(j)

    def phi(self, k, b):
        return b if k % 2 == 0 else self.identity(k)

    def alpha(self, i):
        return self.identity(i)

    def level_gens(self, i):
        return self.b_gens() if i % 2 == 0 else []

    def random_level(self, i, rng):
        return self.random_b(rng) if i % 2 == 0 else self.identity(i)

    def level_order(self, i):
        return self.b_order() if i % 2 == 0 else 1


class AbelianTelescope(_PermToy):
    """Omega_i = B (cyclic) for every level, identity transitions and phi."""

    def __init__(self, n: int = 5, max_level: int = 6):
        super().__init__([Perm([(k + 1) % n for k in range(n)])], max_level)
        self.name = f"abelian(C{n})"

    def level_size(self, i):
        return self.b_degree

    def identity(self, i):
        return self.b_identity()

    def iota(self, x, i, j):
        return x

    def phi(self, k, b):
        return b

    def alpha(self, i):
        return self.b_identity()

    def level_gens(self, i):
        return self.b_gens()

    def random_level(self, i, rng):
        return self.random_b(rng)

    def level_order(self, i):
        return self.b_order()


# -- spec files ----------------------------------------------------------------
SPEC_KEYS = {"kind", "d", "r", "q", "max_level", "group"}


def parse_spec_text(text: str, base_dir: str | Path | None = None) -> dict:
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#")[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SPEC_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        if key in ("d", "r", "q", "max_level"):
            if not re.fullmatch(r"\d+", value):
                raise ValueError(f"line {lineno}: {key} must be a non-negative integer")
            out[key] = int(value)
        else:
            out[key] = value
    if "kind" not in out:
        raise ValueError("spec file has no 'kind'")
    if base_dir is not None:
        out["_base"] = str(base_dir)
    return out


def build_from_params(p: dict):
    kind = p["kind"]
    need = {"alt": ("d", "r"), "alt-corrupted": ("d", "r"), "el": ("d", "q"), "psl": ("d", "q"),
            "embed": ("group",)}
    if kind not in need:
        raise ValueError(f"unknown kind {kind!r}; expected alt, alt-corrupted, el, psl or embed")
    for k in need[kind]:
        if k not in p:
            raise ValueError(f"kind {kind} needs key {k!r}")
    extra = {"max_level": p["max_level"]} if "max_level" in p else {}
    if kind == "alt":
        return build_alt(p["d"], p["r"], **extra)
    if kind == "alt-corrupted":
        return build_corrupted_alt(p["d"], p["r"], **extra)
    if kind == "el":
        return build_el(p["d"], p["q"], **extra)
    if kind == "psl":
        return build_psl(p["d"], p["q"], **extra)
    g = p["group"]
    if g not in ("alt5", "alt6", "sl2_5"):
        path = Path(g)
        if not path.is_absolute() and "_base" in p:
            path = Path(p["_base"]) / path
        g = group_from_file(path)
    return build_embed(g, **extra)


def load_spec(path: str | Path):
    path = Path(path)
    return build_from_params(parse_spec_text(path.read_text(), path.parent))


__all__ = [
    "build_alt", "alt_support", "build_corrupted_alt", "build_el", "el_support", "build_psl",
    "FiniteGroup", "named_group", "group_from_file", "EmbedTelescope", "build_embed",
    "directed_tree_embedding", "NonFlexibleTelescope", "AbelianTelescope", "parse_spec_text",
    "build_from_params", "load_spec",
]
