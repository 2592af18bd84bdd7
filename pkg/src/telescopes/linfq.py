"""Finite fields F_q (q <= 9), dense matrices over them, and the linear
algebra used by the special linear telescopes.

Field elements are encoded as integers 0..q-1 (base-p digits are the
coordinates in the polynomial basis).  Matrices compose as functions on
column vectors, matching the permutation convention.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .permgrp import Perm, PermGroup

SUPPORTED_Q = (2, 3, 4, 5, 7, 8, 9)
DIM_CAP = 1024

# modulus coefficients, lowest degree first, monic
_MODULI = {4: (2, (1, 1, 1)), 8: (2, (1, 1, 0, 1)), 9: (3, (1, 0, 1))}


def _poly_mulmod(a: list[int], b: list[int], p: int, mod: tuple[int, ...]) -> list[int]:
    e = len(mod) - 1
    prod = [0] * (2 * e - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            prod[i + j] = (prod[i + j] + x * y) % p
    for k in range(len(prod) - 1, e - 1, -1):
        c = prod[k]
        if c:
            for t in range(e + 1):
                prod[k - e + t] = (prod[k - e + t] - c * mod[t]) % p
    return prod[:e]


class Field:
    """F_q from precomputed addition and multiplication tables."""

    _cache: dict[int, "Field"] = {}

    def __new__(cls, q: int):
        if q in cls._cache:
            return cls._cache[q]
        if q not in SUPPORTED_Q:
            raise ValueError(f"q={q} not supported; choose from {SUPPORTED_Q}")
        self = super().__new__(cls)
        self._init(q)
        cls._cache[q] = self
        return self

    def _init(self, q: int):
        self.q = q
        if q in _MODULI:
            p, mod = _MODULI[q]
        else:
            p, mod = q, (0, 1)
        self.p = p
        self.e = len(mod) - 1
        self.prime = self.e == 1
        digits = [[(x // p**i) % p for i in range(self.e)] for x in range(q)]

        def enc(v):
            return sum(c * p**i for i, c in enumerate(v))

        add = np.zeros((q, q), dtype=np.int64)
        mul = np.zeros((q, q), dtype=np.int64)
        for x in range(q):
            for y in range(q):
                add[x, y] = enc([(a + b) % p for a, b in zip(digits[x], digits[y])])
                mul[x, y] = enc(_poly_mulmod(digits[x], digits[y], p, mod)) if not self.prime else (x * y) % p
        self.add = add
        self.mul = mul
        self.neg = np.array([int(np.flatnonzero(add[x] == 0)[0]) for x in range(q)])
        inv = np.zeros(q, dtype=np.int64)
        for x in range(1, q):
            inv[x] = int(np.flatnonzero(mul[x] == 1)[0])
        self.inv = inv
        self._validate()

    def _validate(self):
        q = self.q
        r = range(q)
        for x in r:
            if self.add[x, 0] != x or self.mul[x, 1] != x:
                raise AssertionError("identity law fails")
            if x and self.mul[x, self.inv[x]] != 1:
                raise AssertionError("inverse law fails")
        a = self.add
        m = self.mul
        if not (np.array_equal(a, a.T) and np.array_equal(m, m.T)):
            raise AssertionError("commutativity fails")
        xs, ys, zs = np.meshgrid(np.arange(q), np.arange(q), np.arange(q), indexing="ij")
        if not np.array_equal(m[xs, a[ys, zs]], a[m[xs, ys], m[xs, zs]]):
            raise AssertionError("distributivity fails")
        if not np.array_equal(m[m[xs, ys], zs], m[xs, m[ys, zs]]):
            raise AssertionError("associativity fails")

    def __repr__(self):
        return f"F_{self.q}"

    def neg_one(self) -> int:
        return int(self.neg[1])

    def nonzero(self) -> range:
        return range(1, self.q)


class MatFq:
    __slots__ = ("field", "a", "_key")

    def __init__(self, fld: Field, a, check: bool = True):
        arr = np.asarray(a, dtype=np.int64)
        if check:
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
                raise ValueError("matrix must be square")
            if arr.shape[0] > DIM_CAP:
                raise ValueError(f"dimension {arr.shape[0]} exceeds cap {DIM_CAP}")
            if arr.size and (arr.min() < 0 or arr.max() >= fld.q):
                raise ValueError("entries must lie in 0..q-1")
        arr.setflags(write=False)
        self.field = fld
        self.a = arr
        self._key = None

    @classmethod
    def identity(cls, fld: Field, n: int) -> "MatFq":
        return cls(fld, np.eye(n, dtype=np.int64), check=False)

    @classmethod
    def scalar(cls, fld: Field, n: int, lam: int) -> "MatFq":
        return cls(fld, np.eye(n, dtype=np.int64) * lam, check=False)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def degree(self) -> int:
        return self.n

    def __mul__(self, other: "MatFq") -> "MatFq":
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        return MatFq(self.field, matmul(self.field, self.a, other.a), check=False)

    def inverse(self) -> "MatFq":
        inv = mat_inverse(self.field, self.a)
        if inv is None:
            raise ValueError("matrix is singular")
        return MatFq(self.field, inv, check=False)

    def __pow__(self, k: int) -> "MatFq":
        if k < 0:
            return self.inverse() ** (-k)
        result = MatFq.identity(self.field, self.n)
        b = self
        while k:
            if k & 1:
                result = result * b
            b = b * b
            k >>= 1
        return result

    def key(self) -> bytes:
        if self._key is None:
            self._key = self.a.tobytes()
        return self._key

    def __eq__(self, other) -> bool:
        return isinstance(other, MatFq) and other.field is self.field and other.n == self.n \
            and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"MatFq(q={self.field.q}, n={self.n})"

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.a, np.eye(self.n, dtype=np.int64)))

    def det(self) -> int:
        return mat_det(self.field, self.a)

    def order(self, cap: int = 100000) -> int:
        g = self
        for k in range(1, cap + 1):
            if g.is_identity():
                return k
            g = g * self
        raise ValueError("order exceeds cap")

    def scale(self, lam: int) -> "MatFq":
        return MatFq(self.field, self.field.mul[lam, self.a], check=False)

    def conj(self, h: "MatFq") -> "MatFq":
        return h.inverse() * self * h

    def support(self) -> frozenset[int]:
        return mat_support(self)


def matmul(fld: Field, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if fld.prime:
        # float64 products are exact here: n * (p-1)^2 stays far below 2^53
        prod = a.astype(np.float64) @ b.astype(np.float64)
        return np.remainder(prod, fld.p).astype(np.int64)
    n = a.shape[0]
    prod = fld.mul[a[:, :, None], b[None, :, :]]
    acc = np.zeros((n, b.shape[1]), dtype=np.int64)
    add = fld.add
    for k in range(a.shape[1]):
        acc = add[acc, prod[:, k, :]]
    return acc


def _row_reduce(fld: Field, a: np.ndarray, aug: np.ndarray | None):
    """Gauss-Jordan elimination; returns (determinant, reduced aug) or (0, None)."""
    a = a.copy()
    aug = None if aug is None else aug.copy()
    n = a.shape[0]
    det = 1
    mul, add, neg, inv = fld.mul, fld.add, fld.neg, fld.inv
    for col in range(n):
        rows = np.flatnonzero(a[col:, col]) + col
        if rows.size == 0:
            return 0, None
        piv = int(rows[0])
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            if aug is not None:
                aug[[col, piv]] = aug[[piv, col]]
            det = int(neg[det])
        pv = int(a[col, col])
        det = int(mul[det, pv])
        pinv = int(inv[pv])
        a[col] = mul[pinv, a[col]]
        if aug is not None:
            aug[col] = mul[pinv, aug[col]]
        others = np.flatnonzero(a[:, col])
        others = others[others != col]
        for r in others:
            f = int(neg[a[r, col]])
            a[r] = add[a[r], mul[f, a[col]]]
            if aug is not None:
                aug[r] = add[aug[r], mul[f, aug[col]]]
    return det, aug


def mat_det(fld: Field, a: np.ndarray) -> int:
    det, _ = _row_reduce(fld, a, None)
    return det


def mat_inverse(fld: Field, a: np.ndarray) -> np.ndarray | None:
    n = a.shape[0]
    det, aug = _row_reduce(fld, a, np.eye(n, dtype=np.int64))
    return aug if det else None


def mat_rank(fld: Field, a: np.ndarray) -> int:
    a = a.copy()
    rows, cols = a.shape
    r = 0
    mul, add, neg, inv = fld.mul, fld.add, fld.neg, fld.inv
    for col in range(cols):
        cand = np.flatnonzero(a[r:, col]) + r
        if cand.size == 0:
            continue
        piv = int(cand[0])
        a[[r, piv]] = a[[piv, r]]
        a[r] = mul[int(inv[a[r, col]]), a[r]]
        for rr in range(rows):
            if rr != r and a[rr, col]:
                a[rr] = add[a[rr], mul[int(neg[a[rr, col]]), a[r]]]
        r += 1
        if r == rows:
            break
    return r


def null_vector(fld: Field, a: np.ndarray) -> np.ndarray | None:
    """A nonzero vector x with a x = 0, or None."""
    rows, cols = a.shape
    for cand in itertools.product(range(fld.q), repeat=cols):
        if any(cand):
            x = np.array(cand, dtype=np.int64)
            if not matvec(fld, a, x).any():
                return x
    return None


def matvec(fld: Field, a: np.ndarray, x: np.ndarray) -> np.ndarray:
    return matmul(fld, a, x.reshape(-1, 1)).reshape(-1)


# -- named matrices ----------------------------------------------------------
def elementary(fld: Field, n: int, y: int, z: int, r: int) -> MatFq:
    """e_{y,z}(r): identity plus r at position (y, z)."""
    if y == z:
        raise ValueError("elementary matrix needs y != z")
    a = np.eye(n, dtype=np.int64)
    a[y, z] = r
    return MatFq(fld, a, check=False)


def signed_perm(fld: Field, n: int, y: int, z: int) -> MatFq:
    """s_{y,z} = e_{y,z}(-1) e_{z,y}(1) e_{y,z}(-1)."""
    m1 = fld.neg_one()
    return elementary(fld, n, y, z, m1) * elementary(fld, n, z, y, 1) * elementary(fld, n, y, z, m1)


def permutation_matrix(fld: Field, perm: Perm) -> MatFq:
    """Matrix sending basis vector e_x to e_{perm(x)}."""
    n = perm.degree
    a = np.zeros((n, n), dtype=np.int64)
    a[perm.images, np.arange(n)] = 1
    return MatFq(fld, a, check=False)


def block_diag(fld: Field, blocks: Sequence[np.ndarray]) -> MatFq:
    n = sum(b.shape[0] for b in blocks)
    a = np.zeros((n, n), dtype=np.int64)
    o = 0
    for b in blocks:
        k = b.shape[0]
        a[o:o + k, o:o + k] = b
        o += k
    return MatFq(fld, a, check=False)


def embed_block(fld: Field, n: int, idx: Sequence[int], block: np.ndarray) -> MatFq:
    """Identity of size n with `block` placed on the coordinates `idx`."""
    a = np.eye(n, dtype=np.int64)
    ix = np.asarray(idx)
    a[np.ix_(ix, ix)] = block
    return MatFq(fld, a, check=False)


def mat_support(m: MatFq) -> frozenset[int]:
    """Smallest set Y' with a_yy = 1 off Y' and no off-diagonal entry in a
    row or column outside Y'."""
    a = m.a
    off = a.copy()
    np.fill_diagonal(off, 0)
    bad = (np.diag(a) != 1) | off.any(axis=0) | off.any(axis=1)
    return frozenset(int(x) for x in np.flatnonzero(bad))


def is_scalar(m: MatFq) -> int | None:
    a = m.a
    d = np.diag(a)
    if d.size == 0:
        return 1
    if np.count_nonzero(a) != np.count_nonzero(d) or not np.all(d == d[0]):
        return None
    return int(d[0])


def commutator(a, b):
    return a * b * a.inverse() * b.inverse()


# -- non-commuting element ---------------------------------------------------
def _sl2_elements(fld: Field):
    q = fld.q
    for vals in itertools.product(range(q), repeat=4):
        t = np.array(vals, dtype=np.int64).reshape(2, 2)
        if mat_det(fld, t) == 1:
            yield t


def _is_scalar_multiple(fld: Field, x: np.ndarray, y: np.ndarray) -> bool:
    """Is x = mu * y for some mu?"""
    nz = np.flatnonzero(y.reshape(-1))
    if nz.size == 0:
        return not x.any()
    k = int(nz[0])
    mu = int(fld.mul[x.reshape(-1)[k], fld.inv[y.reshape(-1)[k]]])
    return bool(np.array_equal(fld.mul[mu, y], x))


def find_noncommuting_tau(alpha: MatFq, U: Sequence[int], W: Sequence[int] | None = None) -> MatFq:
    """Return tau in SL(U) (extended by the identity on W) such that
    [alpha, tau] is not scalar.  Follows the three-case construction: a
    non-scalar U-block, a scalar block with rank-2 mixing block C, or a scalar
    block with rank-1 C."""
    fld = alpha.field
    n = alpha.n
    U = list(U)
    if W is None:
        W = [x for x in range(n) if x not in set(U)]
    if sorted(U + list(W)) != list(range(n)):
        raise ValueError("U and W must partition the index set")
    if len(U) < 2:
        raise ValueError("U needs dimension at least 2")
    a = alpha.a
    pair = _choose_pair(fld, a, U)
    if pair is None:
        raise ValueError("alpha acts as a scalar on U (precondition violated)")
    u1, u2 = pair
    rest = [x for x in range(n) if x not in (u1, u2)]
    a1 = a[np.ix_([u1, u2], [u1, u2])]
    c = a[np.ix_(rest, [u1, u2])]
    lam = is_scalar(MatFq(fld, a1, check=False))
    if lam is None:
        candidates = _sl2_elements(fld)
    else:
        rank = mat_rank(fld, c)
        if rank == 2:
            candidates = iter([np.array([[0, fld.neg_one()], [1, 0]], dtype=np.int64)])
        else:
            y = null_vector(fld, c)
            x = np.array([1, 0], dtype=np.int64) if matvec(fld, c, np.array([1, 0])).any() \
                else np.array([0, 1], dtype=np.int64)
            p = np.stack([x, y], axis=1)
            rot = np.array([[0, fld.neg_one()], [1, 0]], dtype=np.int64)
            t1 = matmul(fld, matmul(fld, p, rot), mat_inverse(fld, p))
            candidates = iter([t1])
    for t1 in candidates:
        tau = embed_block(fld, n, [u1, u2], t1)
        if is_scalar(commutator(alpha, tau)) is None:
            return tau
    raise AssertionError("no non-commuting tau found")


def _choose_pair(fld: Field, a: np.ndarray, U: list[int]) -> tuple[int, int] | None:
    """Two coordinates of U on which alpha is not scalar."""
    for u in U:
        col = a[:, u].copy()
        col[u] = 0
        if col.any():
            others = [v for v in U if v != u]
            inside = [v for v in others if a[v, u]]
            return (u, inside[0]) if inside else (u, others[0])
    diag = [int(a[u, u]) for u in U]
    for i, u in enumerate(U):
        for j in range(i + 1, len(U)):
            if diag[i] != diag[j]:
                return u, U[j]
    return None


# -- transvection closure ----------------------------------------------------
@dataclass(frozen=True)
class Witness:
    """A replayable word: ("gen", label), ("conj", label, w) meaning
    S w S^-1, or ("comm", w1, w2)."""

    kind: str
    label: str = ""
    parts: tuple = ()

    def __str__(self):
        if self.kind == "gen":
            return self.label
        if self.kind == "conj":
            return f"{self.label}*{self.parts[0]}*{self.label}^-1"
        return f"[{self.parts[0]},{self.parts[1]}]"


def _monomial_action(m: MatFq):
    """For a monomial matrix return (pi, coeff) with m e_x = coeff[x] e_{pi[x]}."""
    a = m.a
    nz = a != 0
    if not np.all(nz.sum(axis=0) == 1):
        raise ValueError("conjugator is not monomial")
    pi = np.argmax(nz, axis=0)
    coeff = a[pi, np.arange(a.shape[0])]
    return pi, coeff


def transvection_closure(fld: Field, seed: dict, conjugators: Sequence[tuple[str, MatFq]]):
    """Close a set of certified elementary positions.

    seed maps (u, v) -> (r, Witness) with the witness evaluating to e_{u,v}(r).
    Returns the closed dict, under conjugation by the monomial conjugators
    and the commutator rule [e_{u,v}(a), e_{v,w}(b)] = e_{u,w}(ab)."""
    known = dict(seed)
    actions = [(label, *_monomial_action(m)) for label, m in conjugators]
    queue = sorted(known)
    while queue:
        nxt = []
        for (u, v) in queue:
            r, w = known[(u, v)]
            for label, pi, coeff in actions:
                pos = (int(pi[u]), int(pi[v]))
                if pos not in known:
                    val = int(fld.mul[fld.mul[coeff[u], r], fld.inv[coeff[v]]])
                    known[pos] = (val, Witness("conj", label, (w,)))
                    nxt.append(pos)
            for (s, t) in sorted(known):
                if s == v and t != u and (u, t) not in known:
                    r2, w2 = known[(s, t)]
                    known[(u, t)] = (int(fld.mul[r, r2]), Witness("comm", "", (w, w2)))
                    nxt.append((u, t))
                if t == u and s != v and (s, v) not in known:
                    r2, w2 = known[(s, t)]
                    known[(s, v)] = (int(fld.mul[r2, r]), Witness("comm", "", (w2, w)))
                    nxt.append((s, v))
        queue = sorted(set(nxt))
    return known


def replay_witness(w: Witness, gens: dict[str, MatFq], cache: dict | None = None) -> MatFq:
    if cache is None:
        cache = {}
    key = id(w)
    if key in cache:
        return cache[key][1]
    if w.kind == "gen":
        m = gens[w.label]
    elif w.kind == "conj":
        s = gens[w.label]
        m = s * replay_witness(w.parts[0], gens, cache) * s.inverse()
    else:
        m = commutator(replay_witness(w.parts[0], gens, cache), replay_witness(w.parts[1], gens, cache))
    cache[key] = (w, m)
    return m


# -- SL order and (2,3)-generation ------------------------------------------
def sl_order(n: int, q: int) -> int:
    o = q ** (n * (n - 1) // 2)
    for i in range(2, n + 1):
        o *= q**i - 1
    return o


def psl_order(n: int, q: int) -> int:
    return sl_order(n, q) // math.gcd(n, q - 1)


def projective_points(fld: Field, n: int) -> list[tuple[int, ...]]:
    """Normalized representatives: first nonzero coordinate equal to 1."""
    pts = []
    for v in itertools.product(range(fld.q), repeat=n):
        nz = [c for c in v if c]
        if nz and nz[0] == 1:
            pts.append(v)
    return pts


def normalize_vector(fld: Field, v: np.ndarray) -> tuple[int, ...]:
    nz = np.flatnonzero(v)
    lead = int(v[nz[0]])
    return tuple(int(x) for x in fld.mul[int(fld.inv[lead]), v])


def projective_perm(m: MatFq, points: list[tuple[int, ...]], index: dict) -> Perm:
    fld = m.field
    vecs = np.array(points, dtype=np.int64).T
    imgs = matmul(fld, m.a, vecs)
    return Perm([index[normalize_vector(fld, imgs[:, k])] for k in range(len(points))], check=False)


def generates_sl(gens: Sequence[MatFq], seed: int = 0) -> bool:
    """Decide <gens> = SL_n(q) for det-1 generators through the action on
    projective points: the image has order |PSL_n(q)| iff the group is all of
    SL_n(q) (SL_n(q) is perfect for the dimensions used here)."""
    fld = gens[0].field
    n = gens[0].n
    pts = projective_points(fld, n)
    index = {p: i for i, p in enumerate(pts)}
    perms = [projective_perm(g, pts, index) for g in gens]
    target = psl_order(n, fld.q)
    grp = PermGroup(perms, seed=seed, ceiling=target)
    return grp.order() == target


def random_sl(fld: Field, n: int, rng: random.Random) -> MatFq:
    while True:
        a = np.array([[rng.randrange(fld.q) for _ in range(n)] for _ in range(n)], dtype=np.int64)
        det = mat_det(fld, a)
        if det:
            a[0] = fld.mul[int(fld.inv[det]), a[0]]
            return MatFq(fld, a, check=False)


def element_of_order(fld: Field, n: int, k: int, rng: random.Random, tries: int = 2000) -> MatFq | None:
    for _ in range(tries):
        g = random_sl(fld, n, rng)
        o = g.order()
        if o % k == 0:
            h = g ** (o // k)
            return h
    return None


def find_23_pair(fld: Field, n: int, seed: int = 0, budget: int = 200) -> tuple[MatFq, MatFq] | None:
    """Seeded random search for A of order 2 and B of order 3 generating SL_n(q)."""
    rng = random.Random(f"23pair-{fld.q}-{n}-{seed}")
    for _ in range(budget):
        a = element_of_order(fld, n, 2, rng)
        b = element_of_order(fld, n, 3, rng)
        if a is None or b is None:
            return None
        if generates_sl([a, b], seed=seed):
            return a, b
    return None


# -- text form ---------------------------------------------------------------
def format_matrix(m: MatFq) -> str:
    fld = m.field
    lines = [f"q={fld.p}^{fld.e} n={m.n}"]
    lines.extend(" ".join(str(int(x)) for x in row) for row in m.a)
    return "\n".join(lines)


def parse_matrix(text: str) -> MatFq:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    head = lines[0].split()
    try:
        qpart = head[0].split("=")[1]
        p, e = (int(t) for t in qpart.split("^"))
        n = int(head[1].split("=")[1])
    except (IndexError, ValueError):
        raise ValueError(f"bad matrix header {lines[0]!r}") from None
    rows = [[int(t) for t in ln.split()] for ln in lines[1:]]
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError("matrix body does not match header dimension")
    return MatFq(Field(p**e), rows)
