"""Cosymplectic structures: validation, Reeb field, flat/sharp, Hamiltonian
fields, the induced Poisson bivector and the product construction."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import symengine as se

from .forms import (
    Chart,
    ChartMismatchError,
    DifferentialForm,
    VectorField,
    _require_same,
    contract,
    differential,
    exterior_derivative,
    field_is_zero,
    form_is_zero,
    interior_product,
    lie_derivative,
    product_chart,
    transplant,
    wedge,
    wedge_power,
)
from .linalg import SingularSystemError, inverse, solve_vector
from .report import Check, Report, Status, exact_check, verdict_check
from .symbolic import (
    DEFAULT_POLICY,
    ONE,
    ZERO,
    Expr,
    expand,
    SamplePolicy,
    as_expr,
    is_constant,
    is_continuous_everywhere,
    is_exactly_zero,
    is_zero,
    random_polynomial,
    sample_values,
    to_text,
    weakest,
)


class StructureError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CosymplecticStructure:
    chart: Chart
    eta: DifferentialForm
    omega: DifferentialForm
    attest_nonvanishing: bool = False
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        _require_same(self.eta.chart, self.chart, "eta")
        _require_same(self.omega.chart, self.chart, "omega")
        if self.eta.degree != 1 or self.omega.degree != 2:
            raise StructureError("eta must be a 1-form and omega a 2-form")
        if self.chart.dim % 2 == 0:
            raise StructureError(f"chart {self.chart.name!r} has even dimension {self.chart.dim}")

    @property
    def n(self) -> int:
        return (self.chart.dim - 1) // 2

    def reeb(self, policy: SamplePolicy = DEFAULT_POLICY) -> VectorField:
        key = ("reeb", policy)
        if key not in self._cache:
            self._cache[key] = reeb_field(self, policy)
        return self._cache[key]

    def flat_matrix(self) -> list[list[Expr]]:
        """F with flat(X) = F X: F[j][i] = omega(d_i, d_j) + eta_i eta_j."""
        if "flat" not in self._cache:
            dim = self.chart.dim
            eta = [self.eta.terms.get((i,), ZERO) for i in range(dim)]
            F = [[ZERO] * dim for _ in range(dim)]
            for j in range(dim):
                for i in range(dim):
                    F[j][i] = _omega_entry(self.omega, i, j) + eta[i] * eta[j]
            self._cache["flat"] = F
        return self._cache["flat"]

    def sharp_matrix(self, policy: SamplePolicy = DEFAULT_POLICY) -> list[list[Expr]]:
        key = ("sharp", policy)
        if key not in self._cache:
            try:
                self._cache[key] = inverse(self.flat_matrix(), policy)
            except SingularSystemError as exc:
                raise StructureError(f"flat map of {self.name or self.chart.name} is singular: {exc}") from exc
        return self._cache[key]

    def to_json(self) -> dict:
        out = {"chart": self.chart.name, "eta": self.eta.to_json(), "omega": self.omega.to_json()}
        if self.attest_nonvanishing:
            out["attest_nonvanishing"] = True
        return out


def _omega_entry(omega: DifferentialForm, i: int, j: int) -> Expr:
    if i == j:
        return ZERO
    if i < j:
        return omega.terms.get((i, j), ZERO)
    return -omega.terms.get((j, i), ZERO)


def volume_coefficient(eta: DifferentialForm, omega: DifferentialForm) -> Expr:
    """Coefficient of eta ^ omega^n on the coordinate volume element."""
    dim = eta.chart.dim
    top = wedge(eta, wedge_power(omega, (dim - 1) // 2))
    return expand(top.terms.get(tuple(range(dim)), ZERO))


def check_cosymplectic(eta: DifferentialForm, omega: DifferentialForm,
                       policy: SamplePolicy = DEFAULT_POLICY, attest_nonvanishing: bool = False,
                       require_closed: bool = True) -> Report:
    """Nondegeneracy of eta ^ omega^n and closedness of both forms.

    With ``require_closed`` false only the almost-cosymplectic condition gates
    the outcome; closedness is still reported as INFO.
    """
    chart = eta.chart
    _require_same(omega.chart, chart, "check_cosymplectic")
    if eta.degree != 1 or omega.degree != 2:
        raise StructureError(f"degree mismatch: eta has degree {eta.degree}, omega {omega.degree}")
    if chart.dim % 2 == 0:
        raise StructureError(f"chart {chart.name!r} has even dimension {chart.dim}")
    n = (chart.dim - 1) // 2
    report = Report()
    report.add(_nonvanishing_check("volume", f"eta ^ omega^{n} != 0", volume_coefficient(eta, omega),
                                   list(chart.coords), policy, attest_nonvanishing))
    for label, anchor, form in (("closed_eta", "d eta = 0", eta), ("closed_omega", "d omega = 0", omega)):
        c = verdict_check(label, anchor, form_is_zero(exterior_derivative(form), policy))
        if not require_closed:
            c = Check(c.id, c.anchor, Status.INFO, {"outcome": c.status.value, **c.detail})
        report.add(c)
    return report


def _nonvanishing_check(id: str, anchor: str, vol: Expr, names: list[str],
                        policy: SamplePolicy, attested: bool) -> Check:
    """Top coefficient must be non-zero: exact for constants, sampled otherwise.

    A continuous coefficient that takes both signs at sample points vanishes
    somewhere in between, which is reported as a definite failure.
    """
    detail: dict = {"volume_coefficient": to_text(vol)}
    if is_exactly_zero(vol):
        return Check(id, anchor, Status.FAILED, {**detail, "verdict": "EXACT_ZERO",
                                                       "message": "top form vanishes identically"})
    points, values = sample_values([vol], names, policy)
    mags = np.abs(values[:, 0])
    worst = int(np.argmin(mags))
    if mags[worst] <= policy.tol:
        return Check(id, anchor, Status.FAILED, {
            **detail, "message": "top form vanishes at a sample point",
            "witness": dict(zip(names, map(float, points[worst]))), "value": float(values[worst, 0])})
    if is_constant(vol):
        return Check(id, anchor, Status.PROVED, {**detail, "value": float(values[0, 0])})
    if is_continuous_everywhere(vol):
        pos, neg = np.flatnonzero(values[:, 0] > 0), np.flatnonzero(values[:, 0] < 0)
        if len(pos) and len(neg):
            a, b = int(pos[0]), int(neg[0])
            return Check(id, anchor, Status.FAILED, {
                **detail, "message": "top form changes sign, so it vanishes between the witnesses",
                "witness": dict(zip(names, map(float, points[a]))), "value": float(values[a, 0]),
                "witness_opposite": dict(zip(names, map(float, points[b]))),
                "value_opposite": float(values[b, 0])})
    att = (f"{anchor.split(' !=')[0]} nowhere zero on the chart",) if attested else ()
    status = Status.ATTESTED if attested else Status.NUMERIC
    return Check(id, anchor, status, {**detail, "min_abs": float(mags[worst])}, att)


def check_symplectic(omega: DifferentialForm, policy: SamplePolicy = DEFAULT_POLICY,
                     attest_nonvanishing: bool = False) -> Report:
    """omega^k != 0 on a 2k-dimensional chart and d omega = 0."""
    chart = omega.chart
    if omega.degree != 2:
        raise StructureError("symplectic form must have degree 2")
    if chart.dim % 2:
        raise StructureError(f"chart {chart.name!r} has odd dimension {chart.dim}")
    k = chart.dim // 2
    top = expand(wedge_power(omega, k).terms.get(tuple(range(chart.dim)), ZERO)) if k else ONE
    report = Report()
    report.add(_nonvanishing_check("nondegenerate", f"omega^{k} != 0", top, list(chart.coords),
                                   policy, attest_nonvanishing))
    report.add(verdict_check("closed_omega", "d omega = 0", form_is_zero(exterior_derivative(omega), policy)))
    return report


def validate(C: CosymplecticStructure, policy: SamplePolicy = DEFAULT_POLICY,
             require_closed: bool = True) -> Report:
    return check_cosymplectic(C.eta, C.omega, policy, C.attest_nonvanishing, require_closed)


def reeb_field(C: CosymplecticStructure, policy: SamplePolicy = DEFAULT_POLICY) -> VectorField:
    """Solve flat(R) = eta exactly and confirm i_R omega = 0, eta(R) = 1."""
    eta = [C.eta.terms.get((i,), ZERO) for i in range(C.chart.dim)]
    try:
        comps = solve_vector(C.flat_matrix(), eta, policy)
    except SingularSystemError as exc:
        raise StructureError(f"Reeb system singular on {C.name or C.chart.name}: {exc}") from exc
    R = VectorField(C.chart, comps)
    v1 = form_is_zero(interior_product(R, C.omega), policy)
    v2 = is_zero(contract(C.eta, R) - 1, policy)
    if not (v1.is_zero and v2.is_zero):
        raise StructureError(f"Reeb post-check failed: i_R omega {v1.kind.name}, eta(R)-1 {v2.kind.name}")
    return R


def flat(C: CosymplecticStructure, X: VectorField) -> DifferentialForm:
    _require_same(X.chart, C.chart, "flat")
    return interior_product(X, C.omega) + C.eta.scale(contract(C.eta, X))


def sharp(C: CosymplecticStructure, alpha: DifferentialForm,
          policy: SamplePolicy = DEFAULT_POLICY) -> VectorField:
    _require_same(alpha.chart, C.chart, "sharp")
    if alpha.degree != 1:
        raise StructureError("sharp expects a 1-form")
    S = C.sharp_matrix(policy)
    a = [alpha.terms.get((j,), ZERO) for j in range(C.chart.dim)]
    comps = [expand(sum((S[i][j] * a[j] for j in range(len(a)) if a[j] != 0), ZERO))
             for i in range(C.chart.dim)]
    return VectorField(C.chart, comps)


def hamiltonian_form(C: CosymplecticStructure, f, policy: SamplePolicy = DEFAULT_POLICY) -> DifferentialForm:
    f = as_expr(f)
    R = C.reeb(policy)
    return differential(C.chart, f) - C.eta.scale(R(f))


def hamiltonian_field(C: CosymplecticStructure, f, policy: SamplePolicy = DEFAULT_POLICY) -> VectorField:
    """X_f = sharp(df - R(f) eta), confirmed against omega(X_f, -) = df - R(f) eta, eta(X_f) = 0."""
    target = hamiltonian_form(C, f, policy)
    X = sharp(C, target, policy)
    v1 = form_is_zero(interior_product(X, C.omega) - target, policy)
    v2 = is_zero(contract(C.eta, X), policy)
    if not (v1.is_zero and v2.is_zero):
        raise StructureError("Hamiltonian characterisation failed")
    return X


class PoissonBivector:
    """pi stored over increasing coordinate pairs."""

    def __init__(self, chart: Chart, terms: dict):
        self.chart = chart
        self.terms = {k: v for k, v in terms.items() if v != 0}

    def entry(self, i: int, j: int) -> Expr:
        if i == j:
            return ZERO
        return self.terms.get((i, j), ZERO) if i < j else -self.terms.get((j, i), ZERO)

    def matrix(self) -> list[list[Expr]]:
        n = self.chart.dim
        return [[self.entry(i, j) for j in range(n)] for i in range(n)]

    def __call__(self, alpha: DifferentialForm, beta: DifferentialForm) -> Expr:
        n = self.chart.dim
        a = [alpha.terms.get((i,), ZERO) for i in range(n)]
        b = [beta.terms.get((i,), ZERO) for i in range(n)]
        return sum((a[i] * b[j] * self.entry(i, j) for i in range(n) for j in range(n)
                    if a[i] != 0 and b[j] != 0 and i != j), ZERO)

    def sharp(self, alpha: DifferentialForm) -> VectorField:
        """beta(pi_sharp(alpha)) = pi(alpha, beta)."""
        n = self.chart.dim
        a = [alpha.terms.get((i,), ZERO) for i in range(n)]
        return VectorField(self.chart, [sum((a[i] * self.entry(i, j) for i in range(n) if a[i] != 0), ZERO)
                                        for j in range(n)])

    def numeric_rank(self, policy: SamplePolicy) -> tuple[int, int]:
        flat = [e for row in self.matrix() for e in row]
        _, vals = sample_values(flat, list(self.chart.coords), policy)
        n = self.chart.dim
        ranks = [int(np.linalg.matrix_rank(v.reshape(n, n), tol=1e-8 * max(1.0, np.abs(v).max())))
                 for v in vals]
        return min(ranks), max(ranks)

    def to_json(self) -> list[dict]:
        return [{"index": [self.chart.coords[i], self.chart.coords[j]], "coeff": to_text(v)}
                for (i, j), v in sorted(self.terms.items())]


def poisson_bivector(C: CosymplecticStructure, policy: SamplePolicy = DEFAULT_POLICY) -> PoissonBivector:
    """pi(alpha, beta) = omega(sharp beta, sharp alpha), evaluated on coordinate differentials."""
    key = ("pi", policy)
    if key in C._cache:
        return C._cache[key]
    S = C.sharp_matrix(policy)
    n = C.chart.dim
    cols = [[S[a][k] for a in range(n)] for k in range(n)]
    omega = [[_omega_entry(C.omega, a, b) for b in range(n)] for a in range(n)]
    terms = {}
    for i in range(n):
        for j in range(i + 1, n):
            u, v = cols[j], cols[i]
            val = sum((u[a] * v[b] * omega[a][b] for a in range(n) for b in range(n)
                       if u[a] != 0 and v[b] != 0 and omega[a][b] != 0), ZERO)
            terms[(i, j)] = expand(val)
    pi = PoissonBivector(C.chart, terms)
    C._cache[key] = pi
    return pi


def poisson_bracket(C: CosymplecticStructure, f, g, policy: SamplePolicy = DEFAULT_POLICY) -> Expr:
    pi = poisson_bivector(C, policy)
    return expand(pi(differential(C.chart, as_expr(f)), differential(C.chart, as_expr(g))))


def _fresh(name: str, taken: set) -> str:
    candidate = name
    k = 1
    while candidate in taken:
        candidate = f"{name}{k}"
        k += 1
    return candidate


def product_structure(C1: CosymplecticStructure, C2: CosymplecticStructure,
                      t_name: str = "t") -> CosymplecticStructure:
    """(eta1 + eta2, omega1 + omega2 + eta1 ^ dt) on M1 x M2 x R."""
    collide = set(C1.chart.coords) & set(C2.chart.coords)
    p1, p2 = ("m1.", "m2.") if collide else ("", "")
    taken = {p1 + c for c in C1.chart.coords} | {p2 + c for c in C2.chart.coords}
    t = _fresh(t_name, taken)
    line = Chart("R", (t,))
    chart = product_chart([C1.chart, C2.chart, line], [p1, p2, ""],
                          name=f"{C1.chart.name} x {C2.chart.name} x R")
    eta1 = transplant(C1.eta, chart, p1)
    eta2 = transplant(C2.eta, chart, p2)
    dt = DifferentialForm.basis(chart, t)
    omega = transplant(C1.omega, chart, p1) + transplant(C2.omega, chart, p2) + wedge(eta1, dt)
    return CosymplecticStructure(chart, eta1 + eta2, omega,
                                 C1.attest_nonvanishing and C2.attest_nonvanishing,
                                 name=f"{C1.name or C1.chart.name} x {C2.name or C2.chart.name} x R")


def product_volume_comparison(C1: CosymplecticStructure, C2: CosymplecticStructure) -> dict:
    """Scalar c with eta ^ omega^(n+m+1) = c omega1^n ^ omega2^m ^ eta2 ^ eta1 ^ dt on the product."""
    P = product_structure(C1, C2)
    n, m = C1.n, C2.n
    chart = P.chart
    collide = set(C1.chart.coords) & set(C2.chart.coords)
    p1, p2 = ("m1.", "m2.") if collide else ("", "")
    t = chart.coords[-1]
    eta1, eta2 = transplant(C1.eta, chart, p1), transplant(C2.eta, chart, p2)
    w1, w2 = transplant(C1.omega, chart, p1), transplant(C2.omega, chart, p2)
    reference = wedge(wedge(wedge(wedge(wedge_power(w1, n), wedge_power(w2, m)), eta2), eta1),
                      DifferentialForm.basis(chart, t))
    full = tuple(range(chart.dim))
    ref = expand(reference.terms.get(full, ZERO))
    lhs = volume_coefficient(P.eta, P.omega)
    if is_exactly_zero(ref):
        raise StructureError("reference top form vanishes; factors are not cosymplectic")
    ratio = expand(lhs / ref) if is_constant(ref) else lhs / ref
    return {
        "n": n, "m": m,
        "computed_scalar": to_text(ratio),
        "stated_coefficient": n + m + 1,
        "multinomial_coefficient": math.factorial(n + m + 1) // (math.factorial(n) * math.factorial(m)),
        "nonvanishing": not is_exactly_zero(lhs),
    }


def structure_suite(C: CosymplecticStructure, policy: SamplePolicy = DEFAULT_POLICY,
                    count: int = 20, seed: int = 0) -> Report:
    """Reeb, flat/sharp, Hamiltonian, Poisson and Jacobi checks on random polynomial data."""
    report = validate(C, policy)
    rng = np.random.default_rng(seed)
    names = list(C.chart.coords)
    try:
        R = C.reeb(policy)
    except StructureError as exc:
        report.error("reeb", "omega(R, -) = 0, eta(R) = 1", exc)
        return report
    report.artifacts["reeb"] = R.to_json()
    report.add(verdict_check("reeb.i_R_omega", "omega(R, -) = 0", form_is_zero(interior_product(R, C.omega), policy)))
    report.add(verdict_check("reeb.eta_R", "eta(R) = 1", is_zero(contract(C.eta, R) - 1, policy)))
    report.add(verdict_check("reeb.L_R_eta", "L_R eta = 0", form_is_zero(lie_derivative(R, C.eta), policy)))
    report.add(verdict_check("reeb.L_R_omega", "L_R omega = 0", form_is_zero(lie_derivative(R, C.omega), policy)))

    roundtrip = []
    for _ in range(count):
        X = VectorField(C.chart, [random_polynomial(names, rng, 2, 2) for _ in names])
        roundtrip.append(field_is_zero(sharp(C, flat(C, X), policy) - X, policy))
    report.add(verdict_check("sharp_flat", "sharp(flat(X)) = X", weakest(roundtrip), samples=count))

    pi = poisson_bivector(C, policy)
    report.artifacts["poisson"] = pi.to_json()
    ham, tangency, conserved, via_pi = [], [], [], []
    for _ in range(count):
        f = random_polynomial(names, rng, 3, 3)
        target = hamiltonian_form(C, f, policy)
        X = sharp(C, target, policy)
        ham.append(form_is_zero(interior_product(X, C.omega) - target, policy))
        tangency.append(is_zero(contract(C.eta, X), policy))
        conserved.append(is_zero(X(f), policy))
        via_pi.append(field_is_zero(X - pi.sharp(differential(C.chart, f)), policy))
    report.add(verdict_check("hamiltonian.omega", "omega(X_f, -) = df - R(f) eta", weakest(ham), samples=count))
    report.add(verdict_check("hamiltonian.eta", "eta(X_f) = 0", weakest(tangency), samples=count))
    report.add(verdict_check("hamiltonian.conserved", "df(X_f) = 0", weakest(conserved), samples=count))
    report.add(verdict_check("hamiltonian.pi_sharp", "X_f = pi_sharp(df)", weakest(via_pi), samples=count))

    jacobi = []
    for _ in range(count):
        f, g, h = (random_polynomial(names, rng, 3, 3) for _ in range(3))
        total = (poisson_bracket(C, poisson_bracket(C, f, g, policy), h, policy)
                 + poisson_bracket(C, poisson_bracket(C, g, h, policy), f, policy)
                 + poisson_bracket(C, poisson_bracket(C, h, f, policy), g, policy))
        jacobi.append(is_zero(total, policy))
    report.add(verdict_check("poisson.jacobi", "{{f,g},h} + cyclic = 0", weakest(jacobi), samples=count))
    lo, hi = pi.numeric_rank(policy)
    report.add(Check("poisson.corank", f"rank pi = {2 * C.n}",
                     Status.NUMERIC if lo == hi == 2 * C.n else Status.FAILED,
                     {"min_rank": lo, "max_rank": hi}))
    return report
