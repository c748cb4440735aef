"""Twisted brackets and the exact-derivation solver.

The twisted bracket [x b c] = [x, tau(b), xi(c)] - [sigma(c), tau(b), x]
turns the derivation law into a linear constraint on the matrix of D; the
solver extracts the whole solution space by SVD.

Run:  python demos/02_derivation_solver.py
"""

import numpy as np

import ternstab as ts

print("=" * 72)
print("1. The twisted bracket on the 2x2 matrix self-module")
print("=" * 72)
alg = ts.trivial_matrix_algebra(2)
mod = ts.self_module(alg)
ident = ts.LinearMap.identity(4)

e12 = np.array([0.0, 1.0, 0.0, 0.0])
e21 = np.array([0.0, 0.0, 1.0, 0.0])
eye = np.eye(2).reshape(-1)
br = ts.twisted_bracket(mod, e12, e21, eye, ident, ident, ident)
print("[E01, E10, I] - [I, E10, E01] =", br, " (= E00 - E11)")

print()
print("=" * 72)
print("2. Derivation spaces depend heavily on the algebra")
print("=" * 72)
basis = ts.solve_exact_derivations(mod, ident, ident, ident)
print(f"2x2 matrix algebra, identity twists: space dimension {len(basis)}")
basis = ts.solve_exact_derivations(mod, ident, ident, ident, ts.MIXED_SIGNS)
print(f"  ... with the mixed sign convention (+,-,-): dimension {len(basis)}")

poly = ts.odd_polynomial_algebra(3)
pmod = ts.self_module(poly)
i2 = ts.LinearMap.identity(2)
basis = ts.solve_exact_derivations(pmod, i2, i2, i2)
print(f"odd-polynomial algebra (cap 3): dimension {len(basis)}")
for idx, lm in enumerate(basis):
    print(f"  basis[{idx}] =\n{lm.matrix}")
print("(the truncated product is commutative, so every bracket vanishes and")
print(" a derivation just has to kill the product span, which is only x^3)")

zero_alg = ts.TernaryAlgebra(2, "real", np.zeros((2, 2, 2, 2)))
zmod = ts.self_module(zero_alg)
basis = ts.solve_exact_derivations(zmod, i2, i2, i2)
print(f"zero structure tensor: dimension {len(basis)} (every linear map qualifies)")

print()
print("=" * 72)
print("3. Residuals certify the solutions")
print("=" * 72)
deriv = ts.solve_exact_derivations(pmod, i2, i2, i2)[0]
rng = np.random.default_rng(1)
worst = 0.0
for _ in range(200):
    a, b, c = rng.standard_normal((3, 2))
    res = ts.lie_derivation_residual(pmod, deriv, a, b, c, i2, i2, i2)
    worst = max(worst, float(np.linalg.norm(res)))
print(f"max derivation-identity residual over 200 random triples: {worst:.2e}")

a = rng.standard_normal(2)
jordan = ts.jordan_residual(pmod, deriv, a, i2, i2, i2)
lie = ts.lie_derivation_residual(pmod, deriv, a, a, a, i2, i2, i2)
print("diagonal (jordan) residual equals the lie residual at a=b=c:",
      np.array_equal(jordan, lie))

print()
print("=" * 72)
print("4. Splitting scalars into unit-modulus pairs")
print("=" * 72)
# extending additivity to full linearity needs 2*gamma/N written as a sum of
# two unimodular numbers
for gamma in (1.0, 0.999 * 7, 2.0 + 1.5j):
    n = int(np.ceil(abs(gamma))) + 1
    l1, l2 = ts.unimodular_split(gamma, n)
    print(
        f"gamma = {gamma}: lambda1 = {l1:.6f}, lambda2 = {l2:.6f}, "
        f"|lambda| = {abs(l1):.12f}, sum - 2g/N = {abs(l1 + l2 - 2 * gamma / n):.2e}"
    )
