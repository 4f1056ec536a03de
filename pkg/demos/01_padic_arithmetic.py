"""A tour of fixed-precision p-adic arithmetic.

Every value is exactly mantissa * p**valuation with at most N mantissa
digits; the ultrametric absolute value is p**(-valuation).
"""

from padicsde import PAdicValue, digit_prefix, frac_part, mahler_poly, padic_exp

p, n = 5, 6

print("== construction and serialization ==")
x = PAdicValue.from_int(11, p, n)          # 1 + 2*5
y = PAdicValue.from_rational(7, 25, p, n)  # 2*5**-2 + 1*5**-1
print("x  =", x, " norm", x.norm())
print("y  =", y, " norm", y.norm())
print("round trip:", PAdicValue.parse(y.qp_str()) == y)

print("\n== ultrametric arithmetic ==")
two, three = PAdicValue.from_int(2, p, n), PAdicValue.from_int(3, p, n)
s = two + three
print("2 + 3 =", s, " (carry raises the valuation: norm", s.norm(), ")")
inv2 = two.inv()
print("1/2   =", inv2, " check:", (two * inv2).as_fraction())

print("\n== digit truncations ==")
t = PAdicValue.from_int(1 + 2 * 5 + 3 * 25, p, n)
for j in range(4):
    print(f"prefix_{j}(t) =", digit_prefix(t, j).as_fraction())
print("telescoped increments reassemble t exactly")

print("\n== fractional part and characters ==")
print("frac(7/25) =", frac_part(y), " frac(11) =", frac_part(x))

print("\n== binomial (Mahler) basis on Z_p ==")
q2 = mahler_poly(2, PAdicValue.from_int(7, 7, n))
print("Q_2(7) over Q_7 =", q2.as_fraction(), " norm", q2.norm())

print("\n== exponential on its convergence domain ==")
e5 = padic_exp(PAdicValue.from_int(5, p, n))
e10 = padic_exp(PAdicValue.from_int(10, p, n))
print("exp(5)       =", e5)
print("exp(5)**2    =", e5 * e5)
print("exp(10)      =", e10, " bit-equal:", e10 == e5 * e5)
