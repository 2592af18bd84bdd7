"""Weak normal forms, membership in the direct sum, consistent points,
simplicity witnesses, the head word problem, head normal forms and germs.

A weak normal form of depth m writes g as

    F(f_1) ... F(f_m) * D(m+1, delta) * Tm(m, m+1, sigma) * D(m+1, eta)

where sigma lives on the carrier X^m x S of the depth-m directed family.
Words are consumed from the right, prepending one atom at a time.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linfq import MatFq, find_noncommuting_tau, is_scalar
from .permgrp import Perm
from .telescope import (
    Atom, LazyElement, QuotientSpec, TreeTelescope, commutator, equal_at, stable_level,
)

POINT_CAP = 10_000_000


# -- small helpers -------------------------------------------------------------
def _tree(spec) -> TreeTelescope:
    base = spec.base if isinstance(spec, QuotientSpec) else spec
    if not isinstance(base, TreeTelescope):
        raise ValueError(f"{spec.name}: normal forms need a tree telescope")
    return base


def _on_tree(g: LazyElement) -> LazyElement:
    spec = _tree(g.spec)
    return g if g.spec is spec else LazyElement(spec, g.atoms)


def _word(spec, atoms) -> LazyElement:
    return LazyElement(spec, [a for a in atoms if not a.elem.is_identity()])


def _d(spec, level: int, x) -> LazyElement:
    return _word(spec, [Atom("D", level, x)])


def _proj(g: LazyElement, i: int):
    """pi_i(g); permutation telescopes are evaluated pointwise past max_level."""
    spec = g.spec
    if i == 0:
        return spec.identity(0)
    if i <= spec.max_level:
        return g.project(i)
    if spec.is_matrix:
        raise ValueError(f"level {i} exceeds the level budget {spec.max_level}")
    n = spec.level_size(i)
    if n > POINT_CAP:
        raise ValueError(f"level {i} has {n} points; above the evaluation cap")
    return Perm(g.act(i, np.arange(n)), check=False)


def _equal_at(g: LazyElement, h: LazyElement, i: int) -> bool:
    if i > g.spec.max_level and g.spec.level_size(i) > POINT_CAP:
        raise ValueError(f"level {i} has too many points to compare")
    return equal_at(g, h, i)


def reduce_word(atoms: Sequence[Atom]) -> list[Atom]:
    """Merge neighbouring atoms of the same slot (each slot is a homomorphic
    image of its group) and drop trivial ones."""
    out: list[Atom] = []
    for a in atoms:
        if out and out[-1].same_slot(a) and a.kind != "L":
            b = out.pop()
            a = Atom(a.kind, a.level, b.elem * a.elem, a.depth)
        if not a.elem.is_identity():
            out.append(a)
    return out


def random_word(spec, length: int, rng: random.Random) -> LazyElement:
    """A word of the given length in the generators Delta_1(Omega_1) and
    tilde^[1](B), alternating between the two kinds (a reduced word)."""
    spec = _tree(spec)
    kind = rng.choice("DT")
    atoms = []
    for _ in range(length):
        while True:
            x = spec.random_level(1, rng) if kind == "D" else spec.random_b(rng)
            if not x.is_identity():
                break
        atoms.append(Atom(kind, 1, x))
        kind = "T" if kind == "D" else "D"
    return LazyElement(spec, atoms)


# -- weak normal form ------------------------------------------------------------
@dataclass
class NormalForm:
    spec: TreeTelescope
    m: int
    f: list
    delta: object
    sigma: object
    eta: object
    length: int

    def reassemble(self) -> LazyElement:
        spec = self.spec
        atoms = [Atom("F", i + 1, x) for i, x in enumerate(self.f)]
        atoms.append(Atom("D", self.m + 1, self.delta))
        atoms.append(Atom("Tm", self.m + 1, self.sigma, depth=self.m) if self.m
                     else Atom("T", 1, self.sigma))
        atoms.append(Atom("D", self.m + 1, self.eta))
        return _word(spec, atoms)

    def __str__(self):
        return format_normal_form(self)


def format_normal_form(nf: NormalForm) -> str:
    spec = nf.spec
    parts = [f"F({i + 1},{spec.format_level_element(x, i + 1)})"
             for i, x in enumerate(nf.f) if not x.is_identity()]
    lv = nf.m + 1
    if not nf.delta.is_identity():
        parts.append(f"D({lv},{spec.format_level_element(nf.delta, lv)})")
    if not nf.sigma.is_identity():
        if nf.m:
            parts.append(f"Tm({nf.m},{lv},{spec.format_carrier(nf.sigma, nf.m)})")
        else:
            parts.append(f"T(1,{spec.format_b_element(nf.sigma)})")
    if not nf.eta.is_identity():
        parts.append(f"D({lv},{spec.format_level_element(nf.eta, lv)})")
    return "*".join(parts) or "1"


class _State:
    def __init__(self, spec: TreeTelescope):
        self.spec = spec
        self.m = 0
        self.f: list = []
        self.delta = spec.identity(1)
        self.sigma = spec.carrier_identity(0)
        self.eta = spec.identity(1)

    def trivial(self) -> bool:
        return (self.m == 0 and self.delta.is_identity() and self.eta.is_identity()
                and self.sigma.is_identity())

    def deepen(self):
        """Same element, one level deeper: sigma~^[m+1] = D(m+2, phi(sigma)) sigma~^[m+2]."""
        sp, m = self.spec, self.m
        self.f.append(self.delta * self.eta)
        self.delta = sp.iota(self.delta, m + 1, m + 2) * sp.carrier_phi(self.sigma, m, m + 2)
        self.sigma = sp.carrier_lift(self.sigma, m)
        self.eta = sp.iota(self.eta, m + 1, m + 2)
        self.m += 1

    def prepend(self, atom: Atom):
        sp = self.spec
        k = atom.kind
        if k == "D":
            j = atom.level
            while self.m + 1 < j:
                self.deepen()
            for i in range(j, self.m + 1):
                self.f[i - 1] = sp.iota(atom.elem, j, i) * self.f[i - 1]
            self.delta = sp.iota(atom.elem, j, self.m + 1) * self.delta
            return
        if k == "F":
            j = atom.level
            while self.m < j:
                self.deepen()
            self.f[j - 1] = atom.elem * self.f[j - 1]
            return
        if k not in ("T", "Tm"):
            raise ValueError(f"atom {k} is outside the generators of the telescope group")
        p = atom.depth if k == "Tm" else 0
        if k == "T" and atom.level == 1 and self.trivial():
            self.sigma = atom.elem
            return
        while self.m + 1 < atom.level:
            self.deepen()
        m = self.m
        h = LazyElement(sp, [atom])
        for i in range(1, m + 1):
            self.f[i - 1] = _proj(h, i) * self.f[i - 1]
        f_new = _proj(h, m + 1) * self.delta * self.eta
        # the tail of h from level m+2 on, as a depth-(m+1) family, conjugated past delta
        tail = atom.elem
        for q in range(p, m + 1):
            tail = sp.carrier_lift(tail, q)
        ext = sp.carrier_ext(self.delta, m + 1)
        tau = ext.inverse() * tail * ext
        new_delta = _proj(h, m + 2) * sp.iota(self.delta, m + 1, m + 2)
        new_eta = sp.carrier_phi(self.sigma, m, m + 2) * sp.iota(self.eta, m + 1, m + 2)
        self.sigma = tau * sp.carrier_lift(self.sigma, m)
        self.delta, self.eta = new_delta, new_eta
        self.f.append(f_new)
        self.m += 1


def weak_normal_form(g: LazyElement) -> NormalForm:
    """g = F(f) D(m+1,delta) sigma~^[m+1] D(m+1,eta), built by prepending the
    atoms of the (reduced) word from right to left."""
    g = _on_tree(g)
    atoms = reduce_word(g.atoms)
    st = _State(g.spec)
    for atom in reversed(atoms):
        st.prepend(atom)
    return NormalForm(g.spec, st.m, st.f, st.delta, st.sigma, st.eta, len(atoms))


def weak_normal_form_sl(g: LazyElement) -> NormalForm:
    if not _tree(g.spec).is_matrix:
        raise ValueError("the linear normal form needs a matrix telescope")
    return weak_normal_form(g)


# -- membership in the direct sum and consistent points ---------------------------
@dataclass
class ConsistentPoint:
    level: int
    word: tuple
    image: tuple
    case: str
    checked_to: int
    exact: bool

    def to_dict(self, spec) -> dict:
        return {"level": self.level, "word": spec.format_word(self.word),
                "image": spec.format_word(self.image), "case": self.case,
                "checked_to": self.checked_to, "exact": self.exact}


@dataclass
class DirectSumResult:
    member: bool
    nf: NormalForm
    certificate: object

    def __bool__(self):
        return self.member


def _head_part(nf: NormalForm):
    return nf.eta * nf.delta


def in_direct_sum(g: LazyElement, nf: NormalForm | None = None) -> DirectSumResult:
    """g lies in the direct sum iff its normal form has sigma = 1 and
    delta*eta = 1 (scalar for the projective quotient).  The certificate
    is the list f, or a moved consistent point (permutation telescopes)."""
    quotient = isinstance(g.spec, QuotientSpec)
    nf = nf or weak_normal_form(g)
    head = _head_part(nf)
    trivial = head.is_identity() or (quotient and is_scalar(head) is not None)
    if nf.sigma.is_identity() and trivial:
        return DirectSumResult(True, nf, list(nf.f))
    if nf.spec.is_matrix:
        cert = {"sigma_trivial": nf.sigma.is_identity(), "head_scalar": is_scalar(head)}
        return DirectSumResult(False, nf, cert)
    return DirectSumResult(False, nf, find_consistent_point(g, nf))


def _moved_consistently(g: LazyElement, k: int, w: int, top: int) -> tuple[bool, bool]:
    spec = g.spec
    u = int(g.act(k, [w])[0])
    ok = True
    for lv in range(k + 1, top + 1):
        M = spec.level_size(lv) // spec.level_size(k)
        pts = w * M + np.arange(M)
        if not np.array_equal(g.act(lv, pts), u * M + np.arange(M)):
            ok = False
            break
    return u != w, ok


def find_consistent_point(g: LazyElement, nf: NormalForm | None = None) -> ConsistentPoint:
    """A level k <= m+3 and a word w moved by pi_k(g) on which g acts
    consistently.  Works on g' = D(eta) g D(eta)^-1 and maps the point back."""
    g = _on_tree(g)
    sp = g.spec
    if sp.is_matrix:
        raise ValueError("consistent points need a permutation telescope")
    nf = nf or weak_normal_form(g)
    m = nf.m
    dd = nf.eta * nf.delta
    if nf.sigma.is_identity() and dd.is_identity():
        raise ValueError("element lies in the direct sum; no consistent moved point")
    if nf.sigma.is_identity():
        k, case = m + 1, "sigma-trivial"
        w = int(min(dd.support()))
    else:
        n_v = sp.level_size(m)
        vs = np.arange(n_v) * sp.size_at(m) + sp.spine
        hit = np.nonzero(dd.images[vs] != vs)[0]
        if hit.size:
            k, case = m + 2, "spine-moved"
            w = int(vs[hit[0]]) * sp.size_at(m + 1) + sp.escape
        else:
            k, case = m + 3, "carrier"
            c = int(min(nf.sigma.support()))
            v, s = divmod(c, sp.s_size)
            a, y = sp.pairs[s]
            w = sp.word_index(sp.index_word(v, m) + (sp.spine, a, y))
    M = sp.level_size(k) // sp.level_size(m + 1)
    pre, rest = divmod(w, M)
    w = int(nf.eta.inverse().images[pre]) * M + rest
    top = max(g.max_param(), k) + 2
    moved, consistent = _moved_consistently(g, k, w, top)
    if not (moved and consistent):
        raise AssertionError(f"consistent point check failed at level {k}")
    image = int(g.act(k, [w])[0])
    return ConsistentPoint(k, sp.index_word(w, k), sp.index_word(image, k), case, top, True)


# -- simplicity witnesses ------------------------------------------------------------
@dataclass
class SimplicityWitness:
    level: int
    word: tuple
    image: tuple
    tau: object
    rho: object
    commutator: LazyElement
    verified: bool
    checked_to: int
    exact: bool
    failure: str | None = None


def _cylinder_perm(sp: TreeTelescope, k: int, w: int, t: Perm) -> Perm:
    """The level-(k+1) permutation w x -> w t(x)."""
    M = sp.size_at(k)
    img = np.arange(sp.level_size(k + 1))
    img[w * M:(w + 1) * M] = w * M + t.images
    return Perm(img, check=False)


def _largest_level_under_cap(sp) -> int:
    lv = 1
    while lv < sp.max_level and sp.level_size(lv + 1) <= POINT_CAP:
        lv += 1
    return lv


def simplicity_witness(g: LazyElement, point: tuple[int, Sequence[int]] | None = None
                       ) -> SimplicityWitness:
    """tau on {w} x X for a consistent moved point w; then [D(k+1,tau), g]
    is D(k+1, rho) with rho = tau * (t^-1 on {g(w)} x X).  `point` forces
    (k, w) instead of searching, which is how a broken point is reported."""
    g = _on_tree(g)
    sp = g.spec
    if point is None:
        if in_direct_sum(g).member:
            raise ValueError("element lies in the direct sum; no witness")
        cp = find_consistent_point(g)
        k, w_word = cp.level, cp.word
    else:
        k, w_word = point[0], tuple(point[1])
    w = sp.word_index(w_word)
    v = int(g.act(k, [w])[0])
    t = Perm.from_cycles(sp.size_at(k), [[0, 1, 2]])
    tau = _cylinder_perm(sp, k, w, t)
    rho = tau * _cylinder_perm(sp, k, v, t.inverse())
    c = commutator(_d(sp, k + 1, tau), g)
    target = _d(sp, k + 1, rho)
    exact_top = stable_level(c, target)
    if sp.level_size(exact_top) <= POINT_CAP:
        # past the stable level too, so every stored level is compared directly
        top = max(exact_top, min(sp.max_level, _largest_level_under_cap(sp)))
    else:
        top = max(sp.max_level, k + 1)
    failure = None
    if v == w:
        failure = f"level {k} point is not moved"
    else:
        for lv in range(1, top + 1):
            if not _equal_at(c, target, lv):
                failure = f"commutator differs from D({k + 1}, rho) at level {lv}"
                break
    return SimplicityWitness(k, w_word, sp.index_word(v, k), tau, rho, c, failure is None,
                             top, top >= exact_top, failure)


@dataclass
class LinearWitness:
    level: int
    tau: MatFq
    value: MatFq
    commutator: LazyElement
    case: str
    verified: bool
    checked_to: int


def _linear_candidates(sp: TreeTelescope, m: int):
    """Index sets U at level m+3 on which tau may live: X^m x_d x_3 X, then
    X^m x_d {x_1,x_2,x_3} X, then everything."""
    k = m + 3
    d_last = sp.size_at(m + 2)
    out = []
    for name, mids in (("u-x3", (2,)), ("u-x123", (0, 1, 2))):
        idx = [sp.word_index(sp.index_word(v, m) + (sp.spine, x, y))
               for v in range(sp.level_size(m)) for x in mids for y in range(d_last)]
        out.append((name, sorted(idx)))
    out.append(("all", list(range(sp.level_size(k)))))
    return out


def sl_nonscalar_witness(g: LazyElement) -> LinearWitness:
    """A tau at level m+3 with [g, D(m+3, tau)] a non-scalar element of
    D(m+3, SL).  Elements congruent to a scalar modulo the direct sum are
    rejected with the error "scalar class"."""
    g = _on_tree(g)
    sp = g.spec
    nf = weak_normal_form_sl(g)
    m, k = nf.m, nf.m + 3
    dd = nf.eta * nf.delta
    if nf.sigma.is_identity() and is_scalar(dd) is not None:
        raise ValueError("scalar class: element is congruent to a scalar modulo the direct sum")
    if k > sp.max_level:
        raise ValueError(f"witness level {k} exceeds the level budget {sp.max_level}")
    inner = _word(sp, [Atom("D", m + 1, dd)]) * _word(
        sp, [Atom("Tm", m + 1, nf.sigma, depth=m) if m else Atom("T", 1, nf.sigma)])
    alpha = _proj(inner, k)
    lift = sp.iota(nf.eta, m + 1, k)
    for case, U in _linear_candidates(sp, m):
        try:
            t0 = find_noncommuting_tau(alpha, U)
        except ValueError:
            continue
        tau = lift.inverse() * t0 * lift
        c = commutator(g, _d(sp, k, tau))
        ok, value = _check_linear(c, k)
        if ok:
            return LinearWitness(k, tau, value, c, case, True, sp.max_level)
    raise AssertionError("no non-scalar commutator found")


def _check_linear(c: LazyElement, k: int) -> tuple[bool, MatFq | None]:
    sp = c.spec
    for lv in range(1, k):
        if not c.project(lv).is_identity():
            return False, None
    value = c.project(k)
    if is_scalar(value) is not None:
        return False, value
    for lv in range(k + 1, sp.max_level + 1):
        if c.project(lv) != sp.iota(value, k, lv):
            return False, value
    return True, value


# -- head ------------------------------------------------------------------------
def head_equal(g: LazyElement, h: LazyElement) -> bool:
    """Equality in the head Q = G / direct sum."""
    if g.spec is not h.spec:
        raise ValueError("elements belong to different telescopes")
    return in_direct_sum(g * h.inverse()).member


@dataclass
class HeadNormalForm:
    """epsilon * prod_i (b_i~^[n+1])^{D(n, omega_i)} * eta, modulo the direct sum."""

    spec: TreeTelescope
    n: int
    epsilon: Perm
    factors: list = field(default_factory=list)
    eta: Perm = None

    def base_point(self, i: int) -> int:
        """omega_i^-1 (o^n) as a level-n index."""
        omega = self.factors[i][1]
        return int(omega.inverse().images[self.spec.spine_index(self.n)])

    def base_points(self) -> list[int]:
        return [self.base_point(i) for i in range(len(self.factors))]

    def reassemble(self) -> LazyElement:
        sp, n = self.spec, self.n
        out = _d(sp, n + 1, self.epsilon)
        for b, omega in self.factors:
            c = _word(sp, [Atom("T", n + 1, b)])
            if n:
                dlt = _d(sp, n, omega)
                c = dlt.inverse() * c * dlt
            out = out * c
        return out * _d(sp, n + 1, self.eta)

    def __str__(self):
        sp, n = self.spec, self.n
        parts = [f"n={n}", f"epsilon={sp.format_level_element(self.epsilon, n + 1)}"]
        for b, omega in self.factors:
            conj = sp.format_level_element(omega, n) if n else "id"
            parts.append(f"T({n + 1},{sp.format_b_element(b)})^D({n},{conj})")
        parts.append(f"eta={sp.format_level_element(self.eta, n + 1)}")
        return " ".join(parts)


class _Head:
    def __init__(self, spec: TreeTelescope):
        self.sp = spec
        self.n = 0
        self.eps = spec.identity(1)
        self.eta = spec.identity(1)
        self.factors: list[list] = []

    def deepen(self):
        sp, n = self.sp, self.n
        eps = sp.iota(self.eps, n + 1, n + 2)
        for b, omega in self.factors:
            w = sp.iota(omega, n, n + 2)
            eps = eps * (w.inverse() * sp.phi(n + 2, b) * w)
        self.eps = eps
        self.factors = [[b, sp.iota(omega, n, n + 1)] for b, omega in self.factors]
        self.eta = sp.iota(self.eta, n + 1, n + 2)
        self.n += 1

    def append(self, atom: Atom):
        sp = self.sp
        if atom.kind == "F":
            return
        if atom.kind == "D":
            while self.n + 1 < atom.level:
                self.deepen()
            self.eta = self.eta * sp.iota(atom.elem, atom.level, self.n + 1)
            return
        if atom.kind != "T":
            raise ValueError(f"atom {atom.kind} is outside the generators of the telescope group")
        b = atom.elem
        if self.n == 0 and atom.level == 1 and self.eta.is_identity():
            if self.factors:
                self.factors[0][0] = self.factors[0][0] * b
            else:
                self.factors.append([b, sp.identity(0)])
            self._prune()
            return
        while self.n + 2 < atom.level:
            self.deepen()
        tau = self.eta
        self.deepen()
        n = self.n
        h = LazyElement(sp, [atom])
        self.eta = sp.iota(tau, n, n + 1) * _proj(h, n + 1)
        omega = tau.inverse()
        base = int(tau.images[sp.spine_index(n)])
        for fac in self.factors:
            if int(fac[1].inverse().images[sp.spine_index(n)]) == base:
                fac[0] = fac[0] * b
                break
        else:
            self.factors.append([b, omega])
        self._prune()

    def _prune(self):
        self.factors = [f for f in self.factors if not f[0].is_identity()]


def head_normal_form(g: LazyElement, n: int | None = None) -> HeadNormalForm:
    """Head normal form of g, consuming the word from the left; factors
    with equal base points are merged.  `n` asks for at least that depth."""
    g = _on_tree(g)
    if g.spec.is_matrix:
        raise ValueError("head normal forms need a permutation telescope")
    st = _Head(g.spec)
    for atom in reduce_word(g.atoms):
        st.append(atom)
    while n is not None and st.n < n:
        st.deepen()
    return HeadNormalForm(g.spec, st.n, st.eps, [tuple(f) for f in st.factors], st.eta)


# -- germs -------------------------------------------------------------------------
@dataclass
class Germ:
    kind: str
    level: int
    prefix: tuple
    b: object = None
    conjugator: object = None
    checked_to: int = 0
    verified: bool = False

    def representative(self, spec: TreeTelescope) -> LazyElement:
        if self.kind == "trivial":
            return LazyElement(spec)
        c = _word(spec, [Atom("T", self.level, self.b)])
        w = _d(spec, self.level, self.conjugator)
        return w.inverse() * c * w


def _agree_on_cylinder(g: LazyElement, h: LazyElement, v: Sequence[int], top: int) -> bool:
    sp = g.spec
    k = len(v)
    w = sp.word_index(v)
    for lv in range(k, top + 1):
        M = sp.level_size(lv) // sp.level_size(k)
        if M > POINT_CAP:
            break
        pts = w * M + np.arange(M)
        if not np.array_equal(g.act(lv, pts), h.act(lv, pts)):
            return False
    return True


def germ_at(q: LazyElement, prefix: Sequence[int]) -> Germ:
    """Germ of q at xi = prefix o o o ... (0-based letters).  Either q is the
    identity on a cylinder U_v around xi, or it agrees near xi with a
    conjugate (b~^[l])^{D(l, omega)}."""
    from .action import CantorPoint, act_cantor_prefix

    q = _on_tree(q)
    sp = q.spec
    xi = CantorPoint(tuple(prefix), "o")
    hnf = head_normal_form(q)
    n = hnf.n
    length = max(len(prefix), n + 1)
    xs = xi.letters_to(length + 2, sp.spine)
    if act_cantor_prefix(q, xi, length + 2).letters != xs:
        raise ValueError("q does not fix the point")
    # xi' = eta(xi)
    head = sp.word_index(xs[:n + 1])
    moved = sp.index_word(int(hnf.eta.images[head]), n + 1) + xs[n + 1:]
    match = None
    for i, base in enumerate(hnf.base_points()):
        if sp.word_index(moved[:n]) == base:
            match = i
            break
    top = max(q.max_param(), length) + 2
    if match is not None and all(a == sp.spine for a in moved[n:]):
        b, omega = hnf.factors[match]
        conj = sp.iota(omega, n, n + 1) * hnf.eta
        germ = Germ("conjugated", n + 1, tuple(xs[:n + 1]), b, conj)
        rep = germ.representative(sp)
    else:
        v = xs[:n + 1]
        if match is not None:
            tail = moved[n:]
            j = next(p for p, a in enumerate(tail) if a != sp.spine)
            v = xs[:n + j + 2]
        germ = Germ("trivial", len(v), tuple(v))
        rep = LazyElement(sp)
    germ.checked_to = max(top, len(germ.prefix) + 2)
    germ.verified = _agree_on_cylinder(q, rep, germ.prefix, germ.checked_to)
    return germ


__all__ = [
    "NormalForm", "HeadNormalForm", "ConsistentPoint", "DirectSumResult", "SimplicityWitness",
    "LinearWitness", "Germ", "reduce_word", "random_word", "weak_normal_form",
    "weak_normal_form_sl", "format_normal_form", "in_direct_sum", "find_consistent_point",
    "simplicity_witness", "sl_nonscalar_witness", "head_equal", "head_normal_form", "germ_at",
]
