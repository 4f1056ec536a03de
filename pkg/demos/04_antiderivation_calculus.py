"""The digit-chain antiderivation calculus and its exact identities.

The antiderivation of f at t sums f over the digit truncations of t
weighted by the single-digit steps; against a path it weights by the path
increments instead.  The integration-by-parts identity and the square
decomposition telescope term by term, so their residuals are exact zeros,
and the time-path covariation at t = 1 is the full increment w(1), the
structural contrast with the classical vanishing of (dt)(dw).
"""

from padicsde import (
    BallSpec,
    GridFunction,
    PAdicValue,
    antider_u,
    antider_w,
    by_parts_residual,
    covariation,
    square_decomposition_residual,
    wiener_path,
)

p, n, depth = 5, 6, 4
ball = BallSpec.unit(p, n)
one = GridFunction.constant(ball, depth, PAdicValue.one(p, n))
idf = GridFunction.coordinate(ball, depth)
w = wiener_path("tree", ball, depth, q=1.0, seed=9)

print("== time antiderivation ==")
t = PAdicValue.from_int(11, p, n)
print("P_u 1 at t:", antider_u(one, t), " (telescopes to t)")
print("P_u id at 11:", antider_u(idf, t).as_fraction(),
      " (two-digit chain: 0*1 + 1*10)")

print("\n== path antiderivation ==")
print("P_w 1 at t equals w(t):", antider_w(one, w, t) == w[t])

print("\n== exact identities ==")
print("by-parts residual (id, w):   ",
      by_parts_residual(idf, w, t).qp_str())
print("square decomposition residual:",
      square_decomposition_residual(w, 77).qp_str())
one_pt = PAdicValue.one(p, n)
print("covariation of (t, w) at 1:  ", covariation(idf, w, 1),
      "== w(1):", covariation(idf, w, 1) == w[one_pt])
