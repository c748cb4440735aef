"""The direct-method stability engine.

Given a map ``f`` whose derivation defect is bounded by a summable control
function, the exact derivation is the limit of the doubling iteration
``f(2**n x) / 2**n``.  ``hyers_limit`` runs that iteration for one point;
``direct_method_stabilize`` runs it over a basis for the four maps
``(f, g, h, k)``, assembles the recovered linear maps, and verifies the
distance bounds and the derivation identity.  ``check_hypothesis`` samples
the defect inequalities themselves and reports violations as findings
rather than failures.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field

import numpy as np

from .algebra import COMPLEX, l2_norm, ternary_product
from .control import ControlFunction, cauchy_tail_bound, summed_majorant
from .errors import DimensionMismatch, NonConvergenceError
from .maps import LinearMap, SignConvention, LIE_SIGNS, lie_derivation_residual
from .module import TernaryModule, product_abx, product_xab

#: hard iteration cap: 2**n stays inside double range with headroom
ITERATION_CAP = 1000


@dataclass(frozen=True, eq=False)
class EvaluableMap:
    """A deterministic pointwise-evaluable map between coordinate spaces."""

    in_dim: int
    out_dim: int
    fn: object
    kind: str = "custom"

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.shape != (self.in_dim,):
            raise DimensionMismatch(
                f"input shape {x.shape} for map with in_dim {self.in_dim}"
            )
        out = np.asarray(self.fn(x))
        if out.shape != (self.out_dim,):
            raise DimensionMismatch(
                f"evaluator returned shape {out.shape}, expected ({self.out_dim},)"
            )
        return out

    @staticmethod
    def from_linear(lm: LinearMap) -> "EvaluableMap":
        return EvaluableMap(lm.in_dim, lm.out_dim, lm.apply, kind="exact-linear")

    @staticmethod
    def tabulated(points, in_dim: int, out_dim: int, dtype=np.float64) -> "EvaluableMap":
        """Lookup-table map: ``points`` is an iterable of ``(x, value)`` pairs."""
        table = {
            np.ascontiguousarray(np.asarray(x, dtype=dtype)).tobytes(): np.asarray(
                v, dtype=dtype
            )
            for x, v in points
        }

        def lookup(x):
            key = np.ascontiguousarray(np.asarray(x, dtype=dtype)).tobytes()
            try:
                return table[key]
            except KeyError:
                raise ValueError("point not tabulated") from None

        return EvaluableMap(in_dim, out_dim, lookup, kind="tabulated")


def hyers_limit(
    f: EvaluableMap,
    control: ControlFunction,
    x,
    tol: float,
    max_iter: int = ITERATION_CAP,
    out_norm=None,
    trace=None,
) -> tuple:
    """Limit of ``f(2**n x) / 2**n`` with a certified stopping rule.

    For power controls the iteration stops at the first ``n`` whose Cauchy
    tail bound is at most ``tol`` (an a-priori rule; for ``theta = 0`` that
    is ``n = 0``).  Custom controls fall back to the empirical criterion
    ``|f(2**(n+1) x) / 2**(n+1) - f(2**n x) / 2**n| <= tol``.  Returns the
    scaled iterate and the stopping ``n``.  ``trace``, if a list, receives a
    row ``(n, successive_difference, tail_bound)`` per iteration.

    Raises :class:`NonConvergenceError` past ``min(max_iter, 1000)``; the
    hard cap keeps ``2**n`` inside double-precision range.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    norm = l2_norm if out_norm is None else out_norm
    x = np.asarray(x)
    limit = min(int(max_iter), ITERATION_CAP)
    a_priori = control.kind == "power"

    current = f(x)
    if not np.all(np.isfinite(current)):
        raise NonConvergenceError("f(x) is not finite", iterations=0)
    if not np.any(x):
        return current, 0

    xn = np.array(x, dtype=np.result_type(x.dtype, np.float64))
    n = 0
    while True:
        if a_priori and cauchy_tail_bound(control, x, n) <= tol:
            return current, n
        if n >= limit:
            reason = (
                f"hard iteration cap {ITERATION_CAP} reached"
                if limit == ITERATION_CAP
                else f"max_iter {limit} exceeded"
            )
            raise NonConvergenceError(
                f"doubling iteration did not converge: {reason}", iterations=n
            )
        np.multiply(xn, 2.0, out=xn)
        nxt = f(xn) * 2.0 ** -(n + 1)
        if not np.all(np.isfinite(nxt)):
            raise NonConvergenceError(
                f"iterate at n={n + 1} overflowed", iterations=n + 1
            )
        diff = float(norm(nxt - current))
        if trace is not None:
            tail = cauchy_tail_bound(control, x, n + 1) if a_priori else float("nan")
            trace.append((n + 1, diff, tail))
        current = nxt
        n += 1
        if not a_priori and diff <= tol:
            return current, n


@dataclass
class HypothesisReport:
    """Sampled slack of the defect inequalities: findings, not failures."""

    mode: str
    tuples_checked: int
    lambda_count: int
    max_residual: float
    min_slack: float
    violations: int
    worst: dict | None

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "tuples_checked": self.tuples_checked,
            "lambda_count": self.lambda_count,
            "max_residual": self.max_residual,
            "min_slack": self.min_slack,
            "violations": self.violations,
            "worst": self.worst,
        }


def _lambda_grid(field_tag: str, count: int):
    if count < 2:
        raise ValueError("lambda grid needs at least 2 points")
    if field_tag == COMPLEX:
        angles = 2.0 * np.pi * np.arange(count) / count
        return np.exp(1j * angles)
    return np.array([1.0, -1.0])


def _draw_vec(rng, dim, field_tag, scale=1.0):
    v = rng.standard_normal(dim)
    if field_tag == COMPLEX:
        v = v + 1j * rng.standard_normal(dim)
    return scale * v


def check_hypothesis(
    f: EvaluableMap,
    g: EvaluableMap,
    h: EvaluableMap,
    k: EvaluableMap,
    control: ControlFunction,
    mod: TernaryModule,
    signs: SignConvention = LIE_SIGNS,
    lambda_grid: int = 16,
    samples: int = 50,
    seed: int = 0,
    mode: str = "lie",
) -> HypothesisReport:
    """Sample the defect inequalities of the four maps.

    The main inequality compares ``f(lam x + lam y + [uvw])`` against the
    additive part and the three twisted brackets, with ``g, h, k``
    substituted pointwise for the twist maps inside the bracket; its defect
    must stay below ``phi(x, y, u, v, w)``.  The three companion
    inequalities bound the additivity defect of ``g, h, k`` by
    ``phi(x, y, 0, ...)``.  In ``jordan`` mode the bracket arguments
    collapse to a single ``u`` and the control has arity 3.  A sample is
    counted as a violation when its defect exceeds the bound by more than a
    rounding allowance of ``1e-12 * (1 + phi)``; the raw worst slack is
    reported either way.
    """
    if mode not in ("lie", "jordan"):
        raise ValueError("mode must be 'lie' or 'jordan'")
    alg = mod.algebra
    lams = _lambda_grid(alg.field, lambda_grid)
    rng = np.random.default_rng([seed, 0x48])
    zeros_a = np.zeros(alg.dim, dtype=alg.dtype)

    def bracket(first, b_raw, c_raw):
        # pointwise twisted bracket with the raw maps in the twist slots
        return product_xab(mod, first, h(b_raw), k(c_raw)) - product_abx(
            mod, g(c_raw), h(b_raw), first
        )

    max_residual = 0.0
    min_slack = float("inf")
    violations = 0
    worst = None

    for index in range(samples):
        scale = float(np.exp(rng.uniform(np.log(0.25), np.log(4.0))))
        x = _draw_vec(rng, alg.dim, alg.field, scale)
        y = _draw_vec(rng, alg.dim, alg.field, scale)
        u = _draw_vec(rng, alg.dim, alg.field, scale)
        if mode == "lie":
            v = _draw_vec(rng, alg.dim, alg.field, scale)
            w = _draw_vec(rng, alg.dim, alg.field, scale)
            phi_main = control.evaluate(x, y, u, v, w)
            phi_add = control.evaluate(x, y, zeros_a, zeros_a, zeros_a)
        else:
            v = w = u
            phi_main = control.evaluate(x, y, u)
            phi_add = control.evaluate(x, y, zeros_a)
        triple = ternary_product(alg, u, v, w)
        fx, fy = f(x), f(y)
        fu, fv, fw = f(u), f(v), f(w)
        bracket_sum = (
            signs.s1 * bracket(fu, v, w)
            + signs.s2 * bracket(fv, u, w)
            + signs.s3 * bracket(fw, v, u)
        )
        for lam in lams:
            arg = lam * x + lam * y + triple
            res_main = mod.norm_of(f(arg) - lam * fx - lam * fy - bracket_sum)
            checks = [("main", res_main, phi_main)]
            for name, m in (("g", g), ("h", h), ("k", k)):
                res = alg.norm_of(m(lam * x + lam * y) - lam * m(x) - lam * m(y))
                checks.append((name, float(res), phi_add))
            for name, res, phi in checks:
                slack = phi - res
                max_residual = max(max_residual, res)
                if slack < min_slack:
                    min_slack = slack
                    worst = {
                        "inequality": name,
                        "sample": index,
                        "lambda": [float(np.real(lam)), float(np.imag(lam))],
                        "residual": res,
                        "phi": phi,
                        "slack": slack,
                    }
                if slack < -1e-12 * (1.0 + phi):
                    violations += 1

    return HypothesisReport(
        mode=mode,
        tuples_checked=samples,
        lambda_count=len(lams),
        max_residual=float(max_residual),
        min_slack=float(min_slack),
        violations=violations,
        worst=worst,
    )


@dataclass
class StabilizationReport:
    """Everything a stabilization run measured."""

    derivation: LinearMap
    sigma: LinearMap
    tau: LinearMap
    xi: LinearMap
    mode: str
    tol: float
    identity_tol: float
    iterations: dict
    traces: dict
    convergence_rates: dict
    phi_tilde_values: list
    max_bound_violation: float
    bound_points: int
    max_identity_residual: float
    identity_triples: int
    linearity_max: float
    linearity_points: int
    failures: list = field(default_factory=list)
    hypothesis: HypothesisReport | None = None

    @property
    def bounds_ok(self) -> bool:
        return self.max_bound_violation <= 0.0

    @property
    def identity_ok(self) -> bool:
        return self.max_identity_residual <= self.identity_tol

    @property
    def linearity_ok(self) -> bool:
        return self.linearity_max <= 10.0 * self.tol

    @property
    def converged(self) -> bool:
        return not self.failures

    @property
    def all_passed(self) -> bool:
        return self.bounds_ok and self.identity_ok and self.linearity_ok and self.converged


def _recover_matrix(evaluable, control, alg, tol, max_iter, out_dim, out_norm, name,
                    traces, iterations, failures):
    columns = []
    iters = []
    rows = []
    for i in range(alg.dim):
        basis_vec = np.zeros(alg.dim, dtype=alg.dtype)
        basis_vec[i] = 1.0
        local: list = []
        try:
            col, n = hyers_limit(
                evaluable, control, basis_vec, tol, max_iter, out_norm, trace=local
            )
        except NonConvergenceError as exc:
            failures.append(
                {"map": name, "basis_index": i, "code": exc.code, "message": str(exc)}
            )
            col = np.zeros(out_dim, dtype=alg.dtype)
            n = exc.iterations if exc.iterations is not None else 0
        columns.append(col)
        iters.append(n)
        rows.extend((i, *row) for row in local)
    iterations[name] = iters
    traces[name] = rows
    return LinearMap(np.column_stack(columns))


def _rate_estimate(rows) -> float | None:
    """Median successive-error ratio over iterations 3..10 of a trace."""
    by_basis: dict = {}
    for basis_index, n, err, _tail in rows:
        by_basis.setdefault(basis_index, {})[n] = err
    ratios = []
    for errs in by_basis.values():
        for n in range(3, 10):
            if n in errs and (n + 1) in errs and errs[n] > 0:
                ratios.append(errs[n + 1] / errs[n])
    return statistics.median(ratios) if ratios else None


def direct_method_stabilize(
    f: EvaluableMap,
    g: EvaluableMap,
    h: EvaluableMap,
    k: EvaluableMap,
    control: ControlFunction,
    mod: TernaryModule,
    signs: SignConvention = LIE_SIGNS,
    tol: float = 1e-10,
    mode: str = "lie",
    max_iter: int = ITERATION_CAP,
    seed: int = 0,
    bound_points: int = 100,
    identity_triples: int = 100,
    linearity_points: int = 5,
    identity_tol: float = 1e-8,
) -> StabilizationReport:
    """Recover ``(D, sigma, tau, xi)`` from ``(f, g, h, k)`` and verify them.

    Applies :func:`hyers_limit` to every basis vector of the algebra for each
    of the four maps and assembles the limits into matrices.  Then:

    * linearity: at seeded non-basis points the recovered matrix must agree
      with a fresh limit to ``10 * tol``;
    * distance bounds: each original map must stay within the summed
      majorant of its recovered limit at seeded points;
    * derivation identity: the recovered maps must satisfy the twisted
      derivation identity (diagonal only in ``jordan`` mode) with residual
      at most ``identity_tol * (1 + |a||b||c|)``.

    Per-basis convergence failures are recorded and mark the report as
    partial instead of aborting the remaining work.
    """
    if mode not in ("lie", "jordan"):
        raise ValueError("mode must be 'lie' or 'jordan'")
    alg = mod.algebra
    for name, m in (("f", f), ("g", g), ("h", h), ("k", k)):
        origin = m(np.zeros(m.in_dim, dtype=alg.dtype))
        if l2_norm(origin) > 1e-12:
            raise ValueError(f"{name}(0) != 0; the direct method requires it")

    traces: dict = {}
    iterations: dict = {}
    failures: list = []
    recovered = {}
    for name, evaluable, out_dim, out_norm in (
        ("f", f, mod.dim, mod.norm_of),
        ("g", g, alg.dim, alg.norm_of),
        ("h", h, alg.dim, alg.norm_of),
        ("k", k, alg.dim, alg.norm_of),
    ):
        recovered[name] = _recover_matrix(
            evaluable, control, alg, tol, max_iter, out_dim, out_norm, name,
            traces, iterations, failures,
        )
    deriv, sigma, tau, xi = (recovered[n] for n in "fghk")

    rng = np.random.default_rng([seed, 0x51])
    linearity_max = 0.0
    if not failures:
        for _ in range(linearity_points):
            x = _draw_vec(rng, alg.dim, alg.field)
            for name, evaluable, out_norm in (
                ("f", f, mod.norm_of),
                ("g", g, alg.norm_of),
                ("h", h, alg.norm_of),
                ("k", k, alg.norm_of),
            ):
                fresh, _ = hyers_limit(evaluable, control, x, tol, max_iter, out_norm)
                linearity_max = max(
                    linearity_max, float(out_norm(recovered[name](x) - fresh))
                )

    rng = np.random.default_rng([seed, 0x52])
    zeros_needed = control.arity - 2
    zero_vec = np.zeros(alg.dim, dtype=alg.dtype)
    phi_values = []
    max_violation = -float("inf")
    for _ in range(bound_points):
        x = _draw_vec(rng, alg.dim, alg.field)
        bound = summed_majorant(control, (x, x) + (zero_vec,) * zeros_needed)
        phi_values.append(float(bound))
        for name, evaluable, out_norm in (
            ("f", f, mod.norm_of),
            ("g", g, alg.norm_of),
            ("h", h, alg.norm_of),
            ("k", k, alg.norm_of),
        ):
            gap = float(out_norm(evaluable(x) - recovered[name](x)))
            max_violation = max(max_violation, gap - bound)

    rng = np.random.default_rng([seed, 0x53])
    max_identity = 0.0
    for _ in range(identity_triples):
        a = _draw_vec(rng, alg.dim, alg.field)
        if mode == "jordan":
            b = c = a
        else:
            b = _draw_vec(rng, alg.dim, alg.field)
            c = _draw_vec(rng, alg.dim, alg.field)
        res = mod.norm_of(
            lie_derivation_residual(mod, deriv, a, b, c, sigma, tau, xi, signs)
        )
        scale = 1.0 + alg.norm_of(a) * alg.norm_of(b) * alg.norm_of(c)
        max_identity = max(max_identity, res / scale)

    if max_violation == -float("inf"):
        max_violation = 0.0
    rates = {name: _rate_estimate(rows) for name, rows in traces.items()}
    return StabilizationReport(
        derivation=deriv,
        sigma=sigma,
        tau=tau,
        xi=xi,
        mode=mode,
        tol=float(tol),
        identity_tol=float(identity_tol),
        iterations=iterations,
        traces=traces,
        convergence_rates=rates,
        phi_tilde_values=phi_values,
        max_bound_violation=float(max_violation),
        bound_points=bound_points,
        max_identity_residual=float(max_identity),
        identity_triples=identity_triples,
        linearity_max=float(linearity_max),
        linearity_points=linearity_points,
        failures=failures,
    )
