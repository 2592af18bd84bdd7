"""
Axioms and frame of the alternating telescope A(5,2)
=====================================================

Build the telescope, check its axioms, and compute the order of the
group generated by its default generators on the first three levels.
"""

from telescopes import verify as V
from telescopes.instances import build_alt
from telescopes.permgrp import alt_order

A = build_alt(5, 2)
print(A.name, "level sizes:", [A.level_size(i) for i in range(1, 5)])

# the two axioms, symbolic up to level 6 and exact (sampled) up to 4
for rep in (V.check_commutator_axiom(A, 6), V.check_flexibility(A, 6)):
    print(rep.check, rep.verdict)

# generation at level 2: the normal closure is all of Alt(25)
rep = V.check_generation_axiom(A, 2)
print(rep.check, rep.verdict, rep.quantities.get("order") == alt_order(25))

# truncated frame: levels 1..3 together give Alt(5) x Alt(25) x Alt(125)
rep = V.check_frame_surjectivity(A, 3)
target = alt_order(5) * alt_order(25) * alt_order(125)
print(rep.check, rep.verdict, "order matches:", int(rep.quantities["order"]) == target)

# two generators for the level-1 kernel
a, b, cert = V.build_two_generators_alt(A)
print("n =", cert["n"], "p =", cert["p"])
print(V.verify_two_generation(a, b, 2, 3).verdict)
