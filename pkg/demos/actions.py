"""
Actions on the direct limit and on the Cantor set
=================================================
"""

from telescopes.action import (act_cantor_prefix, act_limit, bounded_type_profile,
                               parse_cantor_point, parse_limit_point)
from telescopes.instances import build_alt
from telescopes.telescope import parse_element

A = build_alt(5, 2)
g = parse_element(A, "T(1,b1)*D(1,(x1 x2 x3))")

x = parse_limit_point(A, "x1x2@2")
print("limit point", x.format(A), "->", act_limit(g, x).format(A))

# a Cantor point: a finite prefix followed by the spine letter forever
xi = parse_cantor_point(A, "px1x2(o*)")
res = act_cantor_prefix(g, xi, 6)
print("cantor prefix image:", res.letters, "complete:", res.complete)

# inconsistent words per level: a bounded count means bounded type
print("profile:", bounded_type_profile(g, 5))
