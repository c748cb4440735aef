"""Ternary modules over a ternary algebra.

A module ``X`` over ``A`` carries three trilinear products mixing module and
algebra vectors, one per position of the module slot:

* ``[x a b]`` via a tensor of shape ``(dX, dA, dA, dX)``
* ``[a x b]`` via a tensor of shape ``(dA, dX, dA, dX)``
* ``[a b x]`` via a tensor of shape ``(dA, dA, dX, dX)``

The five compatibility chains tie nested module products to the algebra
product; ``check_module_axioms`` measures all of them plus the norm bound
``max(|[xab]|, |[axb]|, |[abx]|) <= |a| |b| |x|``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    COMPLEX,
    DEFAULT_TUPLE_BUDGET,
    TernaryAlgebra,
    dtype_for,
    l2_norm,
)
from .errors import DimensionMismatch


@dataclass(frozen=True, eq=False)
class TernaryModule:
    algebra: TernaryAlgebra
    dim: int
    product_xab: np.ndarray
    product_axb: np.ndarray
    product_abx: np.ndarray
    norm: object = None
    flags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("module dim must be positive")
        da, dx = self.algebra.dim, self.dim
        shapes = {
            "product_xab": (dx, da, da, dx),
            "product_axb": (da, dx, da, dx),
            "product_abx": (da, da, dx, dx),
        }
        for name, shape in shapes.items():
            t = np.asarray(getattr(self, name), dtype=self.dtype)
            if t.shape != shape:
                raise DimensionMismatch(f"{name} has shape {t.shape}, expected {shape}")
            t = t.copy()
            t.setflags(write=False)
            object.__setattr__(self, name, t)
        object.__setattr__(self, "flags", frozenset(self.flags))

    @property
    def dtype(self):
        return dtype_for(self.algebra.field)

    def norm_of(self, v) -> float:
        return l2_norm(v) if self.norm is None else float(self.norm(v))

    def norms_of(self, vectors) -> np.ndarray:
        if self.norm is None:
            return np.linalg.norm(vectors, axis=-1)
        flat = vectors.reshape(-1, vectors.shape[-1])
        out = np.array([float(self.norm(row)) for row in flat])
        return out.reshape(vectors.shape[:-1])

    def vector(self, coords) -> np.ndarray:
        v = np.asarray(coords, dtype=self.dtype)
        if v.shape != (self.dim,):
            raise DimensionMismatch(
                f"module vector length {v.shape} does not match dim {self.dim}"
            )
        return v


def self_module(alg: TernaryAlgebra) -> TernaryModule:
    """The algebra acting on itself: all three products are the triple product."""
    t = alg.structure
    return TernaryModule(
        algebra=alg,
        dim=alg.dim,
        product_xab=t,
        product_axb=t,
        product_abx=t,
        norm=alg.norm_of,
        flags=frozenset({"valid"}) if "associative" in alg.flags else frozenset(),
    )


def product_xab(mod: TernaryModule, x, a, b) -> np.ndarray:
    x = mod.vector(x)
    a = mod.algebra.vector(a)
    b = mod.algebra.vector(b)
    return np.einsum("i,j,k,ijkl->l", x, a, b, mod.product_xab)


def product_axb(mod: TernaryModule, a, x, b) -> np.ndarray:
    a = mod.algebra.vector(a)
    x = mod.vector(x)
    b = mod.algebra.vector(b)
    return np.einsum("i,j,k,ijkl->l", a, x, b, mod.product_axb)


def product_abx(mod: TernaryModule, a, b, x) -> np.ndarray:
    a = mod.algebra.vector(a)
    b = mod.algebra.vector(b)
    x = mod.vector(x)
    return np.einsum("i,j,k,ijkl->l", a, b, x, mod.product_abx)


@dataclass(frozen=True)
class ModuleReport:
    chain_residuals: dict
    max_chain_residual: float
    norm_violation: float
    norm_samples: int
    tuples_checked: int
    exhaustive: bool
    tol: float
    passed: bool


# each chain is a list of (einsum spec, tensor names); all expressions share
# the output index order (a, b, c, d, x, r)
_CHAINS = {
    "abc_d_x": [
        ("abcq,qdxr->abcdxr", ("TA", "Pabx")),
        ("bcdq,aqxr->abcdxr", ("TA", "Pabx")),
        ("cdxq,abqr->abcdxr", ("Pabx", "Pabx")),
    ],
    "abc_x_d": [
        ("abcq,qxdr->abcdxr", ("TA", "Paxb")),
        ("bcxq,aqdr->abcdxr", ("Pabx", "Paxb")),
        ("cxdq,abqr->abcdxr", ("Paxb", "Pabx")),
    ],
    "xab_c_d": [
        ("xabq,qcdr->abcdxr", ("Pxab", "Pxab")),
        ("abcq,xqdr->abcdxr", ("TA", "Pxab")),
        ("bcdq,xaqr->abcdxr", ("TA", "Pxab")),
    ],
    "axb_c_d": [
        ("axbq,qcdr->abcdxr", ("Paxb", "Pxab")),
        ("xbcq,aqdr->abcdxr", ("Pxab", "Paxb")),
        ("bcdq,axqr->abcdxr", ("TA", "Paxb")),
    ],
    "abx_c_d": [
        ("abxq,qcdr->abcdxr", ("Pabx", "Pxab")),
        ("bxcq,aqdr->abcdxr", ("Paxb", "Paxb")),
        ("xcdq,abqr->abcdxr", ("Pxab", "Pabx")),
    ],
}


def check_module_axioms(
    mod: TernaryModule,
    tol: float,
    samples: int = 1000,
    seed: int = 0,
    budget: int = DEFAULT_TUPLE_BUDGET,
) -> ModuleReport:
    """Evaluate the five compatibility chains and the norm inequality.

    Chains run over all basis tuples ``(a, b, c, d, x)`` when
    ``dA**4 * dX <= budget``, otherwise over a seeded subsample of the same
    size cap.  The norm inequality is checked on ``samples`` random tuples.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    alg = mod.algebra
    tensors = {
        "TA": alg.structure,
        "Pxab": mod.product_xab,
        "Paxb": mod.product_axb,
        "Pabx": mod.product_abx,
    }
    total = alg.dim**4 * mod.dim
    chain_residuals = {}
    if total <= budget:
        for name, exprs in _CHAINS.items():
            vals = [
                np.einsum(spec, tensors[t1], tensors[t2]) for spec, (t1, t2) in exprs
            ]
            res = np.maximum(mod.norms_of(vals[0] - vals[1]), mod.norms_of(vals[1] - vals[2]))
            chain_residuals[name] = float(res.max())
        tuples_checked = total
        exhaustive = True
    else:
        rng = np.random.default_rng(seed)
        tuples_checked = min(budget, 100_000)
        ia = rng.integers(0, alg.dim, size=(4, tuples_checked))
        ix = rng.integers(0, mod.dim, size=tuples_checked)
        basis_a = np.eye(alg.dim, dtype=alg.dtype)
        basis_x = np.eye(mod.dim, dtype=mod.dtype)
        for name, exprs in _CHAINS.items():
            worst = 0.0
            for n in range(tuples_checked):
                a, b, c, d = (basis_a[ia[s, n]] for s in range(4))
                x = basis_x[ix[n]]
                vals = _chain_values(name, mod, a, b, c, d, x)
                worst = max(
                    worst,
                    mod.norm_of(vals[0] - vals[1]),
                    mod.norm_of(vals[1] - vals[2]),
                )
            chain_residuals[name] = worst
        exhaustive = False

    rng = np.random.default_rng(seed + 1)
    violation = 0.0
    for _ in range(samples):
        a = _draw(rng, alg.dim, alg.field)
        b = _draw(rng, alg.dim, alg.field)
        x = _draw(rng, mod.dim, alg.field)
        lhs = max(
            mod.norm_of(product_xab(mod, x, a, b)),
            mod.norm_of(product_axb(mod, a, x, b)),
            mod.norm_of(product_abx(mod, a, b, x)),
        )
        rhs = alg.norm_of(a) * alg.norm_of(b) * mod.norm_of(x)
        violation = max(violation, lhs - rhs)

    max_chain = max(chain_residuals.values())
    passed = max_chain <= tol and violation <= tol
    return ModuleReport(
        chain_residuals=chain_residuals,
        max_chain_residual=max_chain,
        norm_violation=float(violation),
        norm_samples=samples,
        tuples_checked=tuples_checked,
        exhaustive=exhaustive,
        tol=float(tol),
        passed=passed,
    )


def _draw(rng, dim, field_tag):
    v = rng.standard_normal(dim)
    if field_tag == COMPLEX:
        v = v + 1j * rng.standard_normal(dim)
    return v


def _chain_values(name, mod, a, b, c, d, x):
    from .algebra import ternary_product as tp

    alg = mod.algebra
    if name == "abc_d_x":
        return (
            product_abx(mod, tp(alg, a, b, c), d, x),
            product_abx(mod, a, tp(alg, b, c, d), x),
            product_abx(mod, a, b, product_abx(mod, c, d, x)),
        )
    if name == "abc_x_d":
        return (
            product_axb(mod, tp(alg, a, b, c), x, d),
            product_axb(mod, a, product_abx(mod, b, c, x), d),
            product_abx(mod, a, b, product_axb(mod, c, x, d)),
        )
    if name == "xab_c_d":
        return (
            product_xab(mod, product_xab(mod, x, a, b), c, d),
            product_xab(mod, x, tp(alg, a, b, c), d),
            product_xab(mod, x, a, tp(alg, b, c, d)),
        )
    if name == "axb_c_d":
        return (
            product_xab(mod, product_axb(mod, a, x, b), c, d),
            product_axb(mod, a, product_xab(mod, x, b, c), d),
            product_axb(mod, a, x, tp(alg, b, c, d)),
        )
    if name == "abx_c_d":
        return (
            product_xab(mod, product_abx(mod, a, b, x), c, d),
            product_axb(mod, a, product_axb(mod, b, x, c), d),
            product_abx(mod, a, b, product_xab(mod, x, c, d)),
        )
    raise KeyError(name)
