"""
Weak normal forms, the direct sum and simplicity witnesses
==========================================================
"""

from telescopes.instances import build_alt
from telescopes.normalform import (format_normal_form, head_equal, in_direct_sum,
                                   simplicity_witness, weak_normal_form)
from telescopes.telescope import format_element, parse_element

A = build_alt(5, 2)

g = parse_element(A, "D(1,(x1 x2 x3))*T(1,b0)*T(1,b1)^-1")
nf = weak_normal_form(g)
print(format_element(g))
print("  ->", format_normal_form(nf), " m =", nf.m)

# an element of the direct sum is trivial in the head
h = parse_element(A, "D(1,(x1 x2 x3))^-1*D(1,(x1 x2 x3))")
print("in direct sum:", in_direct_sum(h).member, " head-equal to 1:",
      head_equal(h, parse_element(A, "1")))

# outside the direct sum, a commutator with a deep atom is again an atom
res = in_direct_sum(g)
if not res.member:
    w = simplicity_witness(g)
    print("consistent point at level", w.level, w.word, "->", w.image)
    print("witness verified to level", w.checked_to, ":", w.verified)
