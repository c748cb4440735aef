"""Finite-dimensional ternary algebras as structure tensors.

An algebra of dimension ``d`` is a rank-4 tensor ``T`` of shape
``(d, d, d, d)``: the triple product of basis vectors is
``[e_i e_j e_k] = sum_l T[i, j, k, l] e_l``, extended trilinearly to
coordinate vectors.  Norms are callables on coordinate vectors; the default
is the Euclidean 2-norm, scaled by a multiplicative factor so the Banach
condition ``|[abc]| <= |a| |b| |c|`` can be enforced by rescaling.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionMismatch, IdentityCheckError

REAL = "real"
COMPLEX = "complex"
FIELDS = (REAL, COMPLEX)

# exhaustive basis enumeration is used up to this many tuples, seeded
# subsampling beyond it
DEFAULT_TUPLE_BUDGET = 1_000_000


def dtype_for(field_tag):
    if field_tag == REAL:
        return np.float64
    if field_tag == COMPLEX:
        return np.complex128
    raise ValueError(f"unknown field tag {field_tag!r}, expected one of {FIELDS}")


def l2_norm(v) -> float:
    return float(np.linalg.norm(v))


@dataclass(frozen=True, eq=False)
class TernaryAlgebra:
    """A coordinatized ternary algebra.

    Parameters
    ----------
    dim : int
        Dimension ``d`` of the underlying vector space.
    field : str
        ``"real"`` or ``"complex"``.
    structure : (d, d, d, d) ndarray
        Structure tensor of the triple product.
    norm : callable or None
        Base norm on coordinate vectors; ``None`` means the 2-norm.
    norm_scale : float
        Multiplicative factor applied on top of the base norm.
    flags : frozenset of str
        Construction guarantees, e.g. ``{"associative"}`` or ``{"partial"}``.
    """

    dim: int
    field: str
    structure: np.ndarray
    norm: object = None
    norm_scale: float = 1.0
    flags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")
        if self.field not in FIELDS:
            raise ValueError(f"field must be one of {FIELDS}")
        if self.norm_scale <= 0:
            raise ValueError("norm_scale must be positive")
        t = np.asarray(self.structure, dtype=dtype_for(self.field))
        if t.shape != (self.dim,) * 4:
            raise DimensionMismatch(
                f"structure tensor shape {t.shape} does not match dim {self.dim}"
            )
        if not np.all(np.isfinite(t)):
            raise ValueError("structure tensor has non-finite entries")
        t = t.copy()
        t.setflags(write=False)
        object.__setattr__(self, "structure", t)
        object.__setattr__(self, "flags", frozenset(self.flags))

    @property
    def dtype(self):
        return dtype_for(self.field)

    def norm_of(self, v) -> float:
        base = l2_norm(v) if self.norm is None else float(self.norm(v))
        return self.norm_scale * base

    def norms_of(self, vectors) -> np.ndarray:
        """Norms along the last axis of a stacked array of vectors."""
        if self.norm is None:
            return self.norm_scale * np.linalg.norm(vectors, axis=-1)
        flat = vectors.reshape(-1, vectors.shape[-1])
        out = np.array([float(self.norm(row)) for row in flat])
        return self.norm_scale * out.reshape(vectors.shape[:-1])

    def vector(self, coords) -> np.ndarray:
        v = np.asarray(coords, dtype=self.dtype)
        if v.shape != (self.dim,):
            raise DimensionMismatch(
                f"vector of length {v.shape} does not live in a {self.dim}-dim space"
            )
        return v

    def basis(self) -> np.ndarray:
        return np.eye(self.dim, dtype=self.dtype)


def ternary_product(alg: TernaryAlgebra, a, b, c) -> np.ndarray:
    """Triple product ``[abc]`` of coordinate vectors, exactly trilinear."""
    a = alg.vector(a)
    b = alg.vector(b)
    c = alg.vector(c)
    return np.einsum("i,j,k,ijkl->l", a, b, c, alg.structure)


# ---------------------------------------------------------------------------
# cubic matrices


@dataclass(frozen=True, eq=False)
class CubicMatrix:
    """Rank-3 array with the Cayley-style triple contraction product."""

    side: int
    entries: np.ndarray

    def __post_init__(self):
        if self.side < 1:
            raise ValueError("side must be >= 1")
        e = np.asarray(self.entries)
        if e.dtype.kind not in "fc":
            e = e.astype(np.float64)
        if e.shape != (self.side,) * 3:
            raise DimensionMismatch(
                f"entries shape {e.shape} does not match side {self.side}"
            )
        if not np.all(np.isfinite(e)):
            raise ValueError("cubic matrix has non-finite entries")
        e = e.copy()
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)


def cubic_product(a: CubicMatrix, b: CubicMatrix, c: CubicMatrix) -> CubicMatrix:
    """Triple contraction ``{a,b,c}_ijk = sum_{l,m,n} a[n,i,l] b[l,j,m] c[m,k,n]``."""
    if not (a.side == b.side == c.side):
        raise DimensionMismatch(
            f"cubic sides differ: {a.side}, {b.side}, {c.side}"
        )
    out = np.einsum("nil,ljm,mkn->ijk", a.entries, b.entries, c.entries)
    return CubicMatrix(a.side, out)


# ---------------------------------------------------------------------------
# builders


def trivial_matrix_algebra(m: int, field: str = REAL) -> TernaryAlgebra:
    """Ternary algebra induced by m x m matrix multiplication.

    Dimension is ``m**2``; coordinates are row-major flattened matrices, so
    the default 2-norm of coordinates is the Frobenius norm.  The product
    ``[abc] = a @ b @ c`` satisfies the associativity law exactly, hence the
    ``associative`` flag, and the Frobenius norm is submultiplicative for it.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    d = m * m
    dt = dtype_for(field)
    units = np.zeros((d, m, m), dtype=dt)
    for i in range(d):
        units[i].flat[i] = 1.0
    tensor = np.zeros((d, d, d, d), dtype=dt)
    for i, j, k in itertools.product(range(d), repeat=3):
        tensor[i, j, k, :] = (units[i] @ units[j] @ units[k]).reshape(-1)
    return TernaryAlgebra(d, field, tensor, flags=frozenset({"associative"}))


def odd_polynomial_algebra(degree_cap: int, field: str = REAL) -> TernaryAlgebra:
    """Truncated algebra of odd-degree polynomials in one variable.

    Basis monomials are ``x, x^3, ..., x^degree_cap``; a product whose degree
    exceeds the cap is truncated to zero.  Flagged ``partial``: the builder
    only guarantees the associativity law on triples whose nested products
    stay below the cap (the checker reports the empirical answer beyond
    that).
    """
    if degree_cap < 1 or degree_cap % 2 == 0:
        raise ValueError("degree_cap must be an odd positive integer")
    degrees = list(range(1, degree_cap + 1, 2))
    index = {deg: n for n, deg in enumerate(degrees)}
    d = len(degrees)
    tensor = np.zeros((d, d, d, d), dtype=dtype_for(field))
    for i, j, k in itertools.product(range(d), repeat=3):
        total = degrees[i] + degrees[j] + degrees[k]
        if total <= degree_cap:
            tensor[i, j, k, index[total]] = 1.0
    return TernaryAlgebra(d, field, tensor, flags=frozenset({"partial"}))


# ---------------------------------------------------------------------------
# axiom checks


@dataclass(frozen=True)
class AssocReport:
    max_residual: float
    tol: float
    passed: bool
    worst: tuple
    checked: int
    exhaustive: bool


def check_ternary_associativity(
    alg: TernaryAlgebra,
    tol: float,
    budget: int = DEFAULT_TUPLE_BUDGET,
    seed: int = 0,
    samples: int | None = None,
) -> AssocReport:
    """Residual of ``[[abc]de] = [a[bcd]e]`` over basis 5-tuples.

    All ``d**5`` tuples are enumerated when that count is within ``budget``;
    otherwise ``budget`` tuples are drawn with a seeded generator.  Passing
    ``samples`` forces a seeded draw of that many tuples (with replacement)
    regardless of the budget.  The report carries the maximum residual norm,
    the worst tuple and a pass flag against ``tol``.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    d = alg.dim
    t = alg.structure
    total = d**5
    worst = (0, 0, 0, 0, 0)
    max_res = 0.0
    if total <= budget and samples is None:
        # chunk over the first index: d^4 x d residual block per slice
        for i in range(d):
            lhs = np.einsum("jkq,qlmr->jklmr", t[i], t)
            rhs = np.einsum("jklq,qmr->jklmr", t, t[i])
            norms = alg.norms_of(lhs - rhs)
            pos = np.unravel_index(int(np.argmax(norms)), norms.shape)
            if norms[pos] > max_res:
                max_res = float(norms[pos])
                worst = (i, *map(int, pos))
        checked = total
        exhaustive = True
    else:
        rng = np.random.default_rng(seed)
        checked = samples if samples is not None else budget
        chunk = 20_000
        done = 0
        while done < checked:
            n = min(chunk, checked - done)
            idx = rng.integers(0, d, size=(5, n))
            i, j, k, l, m = idx
            # t[:, l, m, :] has adjacent advanced axes -> (q, t, r);
            # t[i, :, m, :] has split advanced axes -> (t, q, r)
            lhs = np.einsum("tq,qtr->tr", t[i, j, k, :], t[:, l, m, :])
            rhs = np.einsum("tq,tqr->tr", t[j, k, l, :], t[i, :, m, :])
            norms = alg.norms_of(lhs - rhs)
            pos = int(np.argmax(norms))
            if norms[pos] > max_res:
                max_res = float(norms[pos])
                worst = tuple(int(idx[s, pos]) for s in range(5))
            done += n
        exhaustive = False
    return AssocReport(max_res, float(tol), max_res <= tol, worst, checked, exhaustive)


@dataclass(frozen=True)
class BinaryReduction:
    """Binary product recovered from a verified identity element.

    ``table[i, j, :]`` holds the coordinates of ``e_i * e_j = [e_i e e_j]``.
    """

    identity: np.ndarray
    table: np.ndarray
    identity_residual: float
    assoc_residual: float


def verify_identity_and_reduce(alg: TernaryAlgebra, e, tol: float) -> BinaryReduction:
    """Check ``a = [aee] = [eae] = [eea]`` on the basis and reduce to a binary product.

    On success returns the product table of ``a * b := [aeb]`` together with
    the residual of ``(a*b)*c = [[aeb]ec] = [ae[bec]] = a*(b*c)`` over basis
    triples.  Raises :class:`IdentityCheckError` naming the worst-violating
    basis vector otherwise.
    """
    e = alg.vector(e)
    t = alg.structure
    eye = alg.basis()
    right = np.einsum("j,k,ijkl->il", e, e, t)   # [e_i e e]
    mid = np.einsum("i,k,ijkl->jl", e, e, t)     # [e e_j e]
    left = np.einsum("i,j,ijkl->kl", e, e, t)    # [e e e_k]
    residuals = np.stack(
        [alg.norms_of(right - eye), alg.norms_of(mid - eye), alg.norms_of(left - eye)]
    )
    per_basis = residuals.max(axis=0)
    worst = int(np.argmax(per_basis))
    identity_residual = float(per_basis[worst])
    if identity_residual > tol:
        raise IdentityCheckError(
            f"identity equations fail at basis vector {worst}: "
            f"residual {identity_residual:.3e} > tol {tol:.3e}",
            worst_index=worst,
            residual=identity_residual,
        )
    table = np.einsum("j,ijkl->ikl", e, t)       # [e_i e e_k]
    assoc_left = np.einsum("ijq,qkl->ijkl", table, table)
    assoc_right = np.einsum("jkq,iql->ijkl", table, table)
    assoc_residual = float(alg.norms_of(assoc_left - assoc_right).max())
    return BinaryReduction(e, table, identity_residual, assoc_residual)


def rescale_norm_submultiplicative(
    alg: TernaryAlgebra,
    samples: int,
    seed: int = 0,
    ascent_rounds: int = 4,
) -> TernaryAlgebra:
    """Scale the norm so ``|[abc]| <= |a| |b| |c|`` holds.

    Estimates ``c = sup |[abc]| / (|a| |b| |c|)`` from ``samples`` seeded
    random triples; with the default 2-norm the best sampled triples are
    polished by alternating singular-vector ascent, which drives the
    estimate to a local maximum of the trilinear form.  The returned algebra
    carries ``norm_scale`` multiplied by ``max(1, sqrt(c))``, which bounds
    the product ratio by ``c / kappa**2 <= 1`` on the sample.  A zero tensor
    yields the input unchanged.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    d = alg.dim
    t = alg.structure
    if not np.any(t):
        return alg
    rng = np.random.default_rng(seed)

    def draw():
        v = rng.standard_normal(d)
        if alg.field == COMPLEX:
            v = v + 1j * rng.standard_normal(d)
        return v.astype(alg.dtype)

    def ratio(a, b, c):
        na, nb, nc = alg.norm_of(a), alg.norm_of(b), alg.norm_of(c)
        if na == 0 or nb == 0 or nc == 0:
            return 0.0, None
        val = alg.norm_of(ternary_product(alg, a, b, c)) / (na * nb * nc)
        return val, (a, b, c)

    best_val = 0.0
    top = []
    for _ in range(samples):
        val, triple = ratio(draw(), draw(), draw())
        if triple is None:
            continue
        top.append((val, triple))
        best_val = max(best_val, val)
    top.sort(key=lambda item: -item[0])
    top = top[: min(5, len(top))]

    if alg.norm is None:
        # alternating ascent: with two slots fixed the third enters through a
        # d x d matrix, whose top right singular vector maximizes the 2-norm
        # ratio exactly
        slot_einsum = ("j,k,ijkl->li", "i,k,ijkl->lj", "i,j,ijkl->lk")
        for val, (a, b, c) in top:
            vecs = [a.copy(), b.copy(), c.copy()]
            for _ in range(ascent_rounds):
                for slot in range(3):
                    others = [vecs[s] for s in range(3) if s != slot]
                    mat = np.einsum(slot_einsum[slot], others[0], others[1], t)
                    _, _, vh = np.linalg.svd(mat)
                    vecs[slot] = vh[0].conj()
            val, _ = ratio(*vecs)
            best_val = max(best_val, val)

    kappa = max(1.0, float(np.sqrt(best_val)))
    return replace(alg, norm_scale=alg.norm_scale * kappa)
