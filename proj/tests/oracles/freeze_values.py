"""Reference values frozen into the C++ tests (50-digit mpmath)."""
from fractions import Fraction
from math import comb

import mpmath as mp

mp.mp.dps = 50

A = mp.matrix([[2, 1, 0], [1, 3, 1], [0, 1, 4]])
B = mp.matrix([[5, -1, 0.5], [-1, 2, 0], [0.5, 0, 1]])


def sym_fn(m, f):
    e, q = mp.eigsy(m)
    d = mp.diag([f(x) for x in e])
    return q * d * q.T


def congruence_mean(a, b, f):
    h = sym_fn(a, mp.sqrt)
    hi = sym_fn(a, lambda x: 1 / mp.sqrt(x))
    return h * sym_fn(hi * b * hi, f) * h


def show(name, m):
    rows = ", ".join("{" + ", ".join(mp.nstr(m[i, j], 20) for j in range(m.cols)) + "}" for i in range(m.rows))
    print(f"{name}: {{{rows}}}")


show("geometric 0.5", congruence_mean(A, B, mp.sqrt))
show("geometric 0.25", congruence_mean(A, B, lambda x: x ** mp.mpf(0.25)))
show("log mean", congruence_mean(A, B, lambda x: (x - 1) / mp.log(x)))
show("dual log mean", congruence_mean(A, B, lambda x: x * mp.log(x) / (x - 1)))
show("harmonic 0.3", (mp.mpf(0.7) * A ** -1 + mp.mpf(0.3) * B ** -1) ** -1)

# Cantor moments by the exact recursion, then f(x) = Σ m_k (1 - 1/x)^k / x ... via the series of x/((1-t)x + t).
m = [Fraction(1)]
for n in range(1, 121):
    s = sum(comb(n, k) * m[k] * (2 ** (n - k)) for k in range(n))
    m.append(Fraction(1, 2) * s / (3 ** n - 1))
print("cantor moments 1..4:", [str(x) for x in m[1:5]])


def cantor_f(x):
    # x/((1-t)x + t) = 1/(1 - t·c) with c = (x-1)/x, |c| < 1 for x > 1/2
    x = mp.mpf(x)
    c = (x - 1) / x
    return mp.fsum(mp.mpf(m[k].numerator) / m[k].denominator * c ** k for k in range(len(m)))


for x in (2, 0.75, 1.5):
    print(f"cantor f({x}) =", mp.nstr(cantor_f(x), 20))

print("lebesgue f(2) = 2 ln 2 =", mp.nstr(2 * mp.log(2), 20))
print("log-mean mass on |u| <= 40:", mp.nstr(2 / mp.pi * mp.atan(40 / mp.pi), 20))
