"""Tour of the algebra layer: building ternary algebras, brute-force axiom
checks, cubic matrices, identity reduction and norm rescaling.

Run:  python demos/01_ternary_algebras.py
"""

import numpy as np

import ternstab as ts

print("=" * 72)
print("1. The trivial ternary algebra of 2x2 matrices: [abc] = a @ b @ c")
print("=" * 72)
alg = ts.trivial_matrix_algebra(2)
print(f"dimension {alg.dim}, field {alg.field}, flags {sorted(alg.flags)}")

# triple product of the identity with itself is the identity
eye = np.eye(2).reshape(-1)
print("[I I I] =", ts.ternary_product(alg, eye, eye, eye))

report = ts.check_ternary_associativity(alg, tol=1e-12)
print(
    f"associativity [[abc]de] = [a[bcd]e]: max residual {report.max_residual:.3e} "
    f"over all {report.checked} basis 5-tuples -> {'pass' if report.passed else 'FAIL'}"
)

print()
print("A structure tensor with random entries is *not* ternary associative:")
rng = np.random.default_rng(0)
random_alg = ts.TernaryAlgebra(2, "real", rng.uniform(size=(2, 2, 2, 2)))
report = ts.check_ternary_associativity(random_alg, tol=1e-8)
print(f"  max residual {report.max_residual:.3f} at basis tuple {report.worst}")

print()
print("=" * 72)
print("2. Cubic matrices and the Cayley-style triple contraction")
print("=" * 72)
ones = ts.CubicMatrix(2, np.ones((2, 2, 2)))
print("all-ones cube, product entries:", np.unique(ts.cubic_product(ones, ones, ones).entries))

# is that product associative in the ternary sense?  Answer empirically:
# embed it as a structure tensor on the 8-dimensional space of 2x2x2 cubes
side = 2
dim = side**3
tensor = np.zeros((dim, dim, dim, dim))
basis = [np.zeros(dim) for _ in range(dim)]
for i in range(dim):
    basis[i][i] = 1.0
for i in range(dim):
    for j in range(dim):
        for k in range(dim):
            prod = ts.cubic_product(
                ts.CubicMatrix(side, basis[i].reshape(side, side, side)),
                ts.CubicMatrix(side, basis[j].reshape(side, side, side)),
                ts.CubicMatrix(side, basis[k].reshape(side, side, side)),
            )
            tensor[i, j, k, :] = prod.entries.reshape(-1)
cubic_alg = ts.TernaryAlgebra(dim, "real", tensor)
report = ts.check_ternary_associativity(cubic_alg, tol=1e-10, budget=40_000)
print(
    f"cubic product vs the associativity law: max residual {report.max_residual:.3f} "
    f"-> the Cayley contraction does NOT satisfy it"
)

print()
print("=" * 72)
print("3. Odd-degree polynomials with degree truncation")
print("=" * 72)
poly = ts.odd_polynomial_algebra(3)
x = np.array([1.0, 0.0])    # the monomial x
x3 = np.array([0.0, 1.0])   # the monomial x^3
print("[x x x]   =", ts.ternary_product(poly, x, x, x), " (the x^3 coefficient)")
print("[x^3 x x] =", ts.ternary_product(poly, x3, x, x), " (degree 5 truncated to 0)")
report = ts.check_ternary_associativity(poly, tol=1e-12)
print(f"truncated algebra associativity residual: {report.max_residual:.1e}")

print()
print("=" * 72)
print("4. Identity elements and reduction to a binary algebra")
print("=" * 72)
red = ts.verify_identity_and_reduce(alg, eye, tol=1e-12)
print(f"vec(I) passes a = [aee] = [eae] = [eea]: residual {red.identity_residual:.1e}")
print(f"binary product a*b := [aeb] is associative: residual {red.assoc_residual:.1e}")
print("E01 * E10 =", red.table[1, 2], " (matrix units multiply as expected)")

try:
    ts.verify_identity_and_reduce(alg, np.zeros(4), tol=1e-12)
except ts.IdentityCheckError as err:
    print(f"zero vector rejected as identity: residual {err.residual}")

print()
print("=" * 72)
print("5. Enforcing the Banach norm condition by rescaling")
print("=" * 72)
scaled = ts.TernaryAlgebra(1, "real", np.full((1, 1, 1, 1), 100.0))
rescaled = ts.rescale_norm_submultiplicative(scaled, samples=200)
print(f"1-dim algebra with tensor 100: fitted norm scale kappa = {rescaled.norm_scale}")
a = np.array([1.0])
lhs = rescaled.norm_of(ts.ternary_product(rescaled, a, a, a))
print(f"|[aaa]|' = {lhs}, |a|'^3 = {rescaled.norm_of(a) ** 3} (now submultiplicative)")
