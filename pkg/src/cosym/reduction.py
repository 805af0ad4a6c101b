"""Certified cosymplectic reduction at a regular value.

The quotient is never constructed. The caller supplies a level chart L with
its embedding, the isotropy action on L, a quotient chart Q with a submersion
p: L -> Q and a section sigma, and the checks below certify that
sigma*(iota*eta), sigma*(iota*omega) is the reduced structure.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import symengine as se

from .actions import (
    ActionPresentation,
    EmbeddingSpec,
    LeafSpec,
    MomentumMapSpec,
    ReebFlowActionSpec,
    check_albert_momentum,
    check_cosymplectic_action,
    check_leaf,
    check_reeb_flow,
    reeb_flow_extension,
)
from .forms import (
    Chart,
    DifferentialForm,
    SmoothMap,
    VectorField,
    compose,
    contract,
    drop_directions,
    field_is_zero,
    form_is_zero,
    interior_product,
    lie_derivative,
    pair_maps,
    product_chart,
    pullback,
)
from .groupoids import map_check, submersion_check
from .linalg import InconsistentSystemError, SingularSystemError, solve
from .report import PASSING, Check, Report, Status, exact_check, verdict_check
from .structures import CosymplecticStructure, check_cosymplectic, check_symplectic
from .symbolic import (
    DEFAULT_POLICY,
    ONE,
    ZERO,
    SamplePolicy,
    as_expr,
    is_zero,
    sample_values,
    simplify,
    weakest,
)


class ReductionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class IsotropyAction:
    """The isotropy group at xi acting on the level chart."""
    group: Chart
    action: SmoothMap              # group x level -> level (disjoint coordinates)
    generators: tuple = ()         # vertical fields on the level chart
    arrow: SmoothMap | None = None     # group -> arrows, the isotropy arrows
    element: SmoothMap | None = None   # group -> Lie group chart, for group actions

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))


@dataclass(frozen=True, eq=False)
class ReductionGeometry:
    xi: tuple
    level: EmbeddingSpec
    isotropy: IsotropyAction
    quotient: Chart
    p: SmoothMap
    sigma: SmoothMap
    attest_regular: bool = False

    def __post_init__(self):
        object.__setattr__(self, "xi", tuple(as_expr(v) for v in self.xi))
        L, Q = self.level.source, self.quotient
        if not (self.p.source.same_as(L) and self.p.target.same_as(Q)):
            raise ReductionError("p must map the level chart to the quotient chart")
        if not (self.sigma.source.same_as(Q) and self.sigma.target.same_as(L)):
            raise ReductionError("sigma must map the quotient chart to the level chart")
        if not self.isotropy.action.target.same_as(L):
            raise ReductionError("isotropy action must land in the level chart")
        for V in self.isotropy.generators:
            if not V.chart.same_as(L):
                raise ReductionError("isotropy generators must live on the level chart")

    @property
    def level_chart(self) -> Chart:
        return self.level.source


@dataclass(frozen=True, eq=False)
class ReductionManifest:
    action: ActionPresentation
    C_M: CosymplecticStructure
    geometry: ReductionGeometry
    name: str = ""


@dataclass(frozen=True, eq=False)
class ReducedStructure:
    chart: Chart
    eta: DifferentialForm
    omega: DifferentialForm
    reeb: VectorField | None
    provenance: dict = field(default_factory=dict)

    def as_structure(self) -> CosymplecticStructure:
        return CosymplecticStructure(self.chart, self.eta, self.omega, name=f"reduced {self.chart.name}")

    def to_json(self) -> dict:
        out = {"chart": self.chart.name, "coords": list(self.chart.coords),
               "eta": self.eta.to_json(), "omega": self.omega.to_json()}
        if self.reeb is not None:
            out["reeb"] = self.reeb.to_json()
        out["provenance"] = dict(self.provenance)
        return out


def _tidy(a: DifferentialForm) -> DifferentialForm:
    return a.map_coefficients(simplify)


def _zero_components(id: str, anchor: str, exprs, policy: SamplePolicy) -> Check:
    verdicts = []
    for k, e in enumerate(exprs):
        v = is_zero(e, policy)
        if not v.is_zero:
            return verdict_check(id, anchor, v, component=k)
        verdicts.append(v)
    from .symbolic import EXACT
    return verdict_check(id, anchor, weakest(verdicts) if verdicts else EXACT)


def _rank_of_fields(id: str, anchor: str, fields, chart: Chart, required: int, policy: SamplePolicy) -> Check:
    if required == 0:
        return exact_check(id, anchor, True, rank=0, required=0)
    flat = [c for V in fields for c in V.components]
    pts, vals = sample_values(flat, list(chart.coords), policy)
    mats = vals.reshape(len(pts), len(fields), chart.dim)
    ranks = [int(np.linalg.matrix_rank(m, tol=1e-8 * max(1.0, np.abs(m).max()))) for m in mats]
    ok = min(ranks) == required
    return Check(id, anchor, Status.NUMERIC if ok else Status.FAILED,
                 {"rank_min": min(ranks), "rank_max": max(ranks), "required": required})


def _regularity_check(rho: SmoothMap, geom: ReductionGeometry, policy: SamplePolicy) -> Check:
    """Rank of d rho at points of the level set, plus the regular-value attestation."""
    target = rho.target.dim
    att = ("xi is a regular value of the anchor",) if geom.attest_regular else ()
    if target == 0:
        return Check("pre.regular", "rank d rho = dim G0 on the level set", Status.PROVED,
                     {"rank_min": 0, "required": 0}, att)
    iota = geom.level.iota
    flat = [iota.apply(e) for row in rho.jacobian() for e in row]
    L = geom.level_chart
    pts, vals = sample_values(flat, list(L.coords), policy)
    mats = vals.reshape(len(pts), target, rho.source.dim)
    ranks = [int(np.linalg.matrix_rank(m, tol=1e-8 * max(1.0, np.abs(m).max()))) for m in mats]
    ok = min(ranks) == target
    return Check("pre.regular", "rank d rho = dim G0 on the level set", Status.NUMERIC if ok else Status.FAILED,
                 {"rank_min": min(ranks), "rank_max": max(ranks), "required": target}, att if ok else ())


def descend_reeb(geom: ReductionGeometry, R: VectorField, policy: SamplePolicy = DEFAULT_POLICY) -> VectorField:
    """Solve d iota(R_L) = R o iota, then push R_L to the quotient along sigma.

    Raises InconsistentSystemError when R is not tangent to the level set.
    """
    iota, p, sigma = geom.level.iota, geom.p, geom.sigma
    if not R.chart.same_as(iota.target):
        raise ReductionError("Reeb field must live on the ambient chart of the level embedding")
    rhs = [[iota.apply(c)] for c in R.components]
    try:
        sol = solve(iota.jacobian(), rhs, policy)
    except SingularSystemError as exc:
        raise ReductionError(f"level embedding is not an immersion: {exc}") from exc
    RL = VectorField(geom.level_chart, [row[0] for row in sol])
    pushed = p.pushforward(RL)
    return VectorField(geom.quotient, [simplify(sigma.apply(c)) for c in pushed])


def check_descent(geom: ReductionGeometry, eta_L: DifferentialForm | None, omega_L: DifferentialForm,
                  eta_q: DifferentialForm | None, omega_q: DifferentialForm,
                  policy: SamplePolicy = DEFAULT_POLICY) -> Report:
    """p*eta_Q = eta_L and p*omega_Q = omega_L."""
    r = Report()
    if eta_q is not None:
        r.add(verdict_check("descent.eta", "p*eta^xi = iota*eta",
                            form_is_zero(pullback(geom.p, eta_q) - eta_L, policy)))
    r.add(verdict_check("descent.omega", "p*omega^xi = iota*omega",
                        form_is_zero(pullback(geom.p, omega_q) - omega_L, policy)))
    return r


def roundtrip_identity(geom: ReductionGeometry, alpha: DifferentialForm,
                       policy: SamplePolicy = DEFAULT_POLICY):
    """Zero verdict for sigma*p*alpha - alpha, the injectivity witness of p*."""
    return form_is_zero(pullback(geom.sigma, pullback(geom.p, alpha)) - alpha, policy)


Compat = Callable[[ReductionGeometry, SamplePolicy], list]


def _stage_failed(report: Report, prefix: str) -> bool:
    return any(not c.ok for c in report.checks if c.id.startswith(prefix))


def run_stages(C_M: CosymplecticStructure, rho: SmoothMap, geom: ReductionGeometry,
               policy: SamplePolicy = DEFAULT_POLICY, compat: Compat | None = None,
               hypotheses: tuple[str, ...] = ()) -> tuple[ReducedStructure | None, Report]:
    """Preconditions, then restrict, basic-ness, construction, descent, quotient check and Reeb descent."""
    L, Q = geom.level_chart, geom.quotient
    iota, p, sigma = geom.level.iota, geom.p, geom.sigma
    iso = geom.isotropy
    k = len(iso.generators)
    r = Report()

    if hypotheses:
        r.add(Check("pre.free_proper", "the action is free and proper", Status.ATTESTED, {}, hypotheses))
    else:
        r.add(Check("pre.free_proper", "the action is free and proper", Status.FAILED,
                    {"message": "freeness and properness are not attested"}))
    xi_map = SmoothMap.constant(L, rho.target, geom.xi)
    r.add(map_check("pre.level", "rho o iota = xi", compose(rho, iota), xi_map, policy))
    r.add(geom.level.rank_check(policy, "pre.level_rank"))
    r.add(_regularity_check(rho, geom, policy))
    r.add(map_check("pre.section", "p o sigma = id", compose(p, sigma), SmoothMap.identity(Q), policy))
    r.add(submersion_check("pre.submersion", "rank dp = dim Q", p, policy))
    r.add(exact_check("pre.dimension", "dim L - dim Q = k", L.dim - Q.dim == k,
                      level=L.dim, quotient=Q.dim, generators=k))
    for i, V in enumerate(iso.generators):
        r.add(_zero_components(f"pre.vertical.{i}", "dp(V) = 0", p.pushforward(V), policy))
    r.add(_rank_of_fields("pre.generator_rank", "span V = Ker dp", iso.generators, L, k, policy))
    if compat is not None:
        for c in compat(geom, policy):
            r.add(c)

    def gate(stage: str, *blocking: str) -> bool:
        failed = [b for b in blocking if _stage_failed(r, b)]
        if failed:
            r.skip(stage, "depends on earlier stages", f"skipped: stage {failed[0].rstrip('.')} failed")
            return False
        return True

    if not gate("restrict", "pre."):
        for s in ("basic", "construct", "descent", "quotient", "reeb"):
            r.skip(s, "depends on earlier stages", "skipped: stage pre failed")
        return None, r
    eta_L, omega_L = pullback(iota, C_M.eta), pullback(iota, C_M.omega)

    for i, V in enumerate(iso.generators):
        r.add(verdict_check(f"basic.i_V_eta.{i}", "i_V iota*eta = 0",
                            form_is_zero(interior_product(V, eta_L), policy)))
        r.add(verdict_check(f"basic.i_V_omega.{i}", "i_V iota*omega = 0",
                            form_is_zero(interior_product(V, omega_L), policy)))
    keep = {c: c for c in L.coords}
    for label, form in (("eta", eta_L), ("omega", omega_L)):
        moved = drop_directions(pullback(iso.action, form), L, keep)
        r.add(verdict_check(f"basic.invariant_{label}", f"a_k*{label}_L = {label}_L",
                            form_is_zero(moved - form, policy)))
    if not gate("construct", "basic."):
        for s in ("descent", "quotient", "reeb"):
            r.skip(s, "depends on earlier stages", "skipped: stage basic failed")
        return None, r

    eta_q = _tidy(pullback(sigma, eta_L))
    omega_q = _tidy(pullback(sigma, omega_L))
    r.extend(check_descent(geom, eta_L, omega_L, eta_q, omega_q, policy))
    r.extend(check_cosymplectic(eta_q, omega_q, policy), "quotient.")
    r.add(exact_check("quotient.dimension", "dim Q odd and = dim L - k", Q.dim % 2 == 1 and Q.dim == L.dim - k,
                      quotient=Q.dim))

    reeb = None
    try:
        reeb = descend_reeb(geom, C_M.reeb(policy), policy)
    except InconsistentSystemError as exc:
        v = exc.verdict
        r.add(Check("reeb.tangent", "R tangent to the level set", Status.FAILED,
                    {"message": str(exc), **(v.to_json() if v else {})}))
    if reeb is not None:
        r.add(Check("reeb.tangent", "R tangent to the level set", Status.PROVED, {"reeb": reeb.to_json()}))
        r.add(verdict_check("reeb.eta", "eta^xi(R^xi) = 1", is_zero(contract(eta_q, reeb) - ONE, policy)))
        r.add(verdict_check("reeb.omega", "i_R omega^xi = 0", form_is_zero(interior_product(reeb, omega_q), policy)))
        r.add(verdict_check("reeb.lie_eta", "L_R eta^xi = 0", form_is_zero(lie_derivative(reeb, eta_q), policy)))
        r.add(verdict_check("reeb.lie_omega", "L_R omega^xi = 0",
                            form_is_zero(lie_derivative(reeb, omega_q), policy)))
    if not r.passed:
        return None, r
    provenance = {c.id: c.status.value for c in r.checks if c.id.startswith(("descent.", "quotient.", "reeb."))}
    reduced = ReducedStructure(Q, eta_q, omega_q, reeb, provenance)
    r.artifacts["reduced"] = reduced.to_json()
    return reduced, r


def _groupoid_compat(A: ActionPresentation) -> Compat:
    def compat(geom: ReductionGeometry, policy: SamplePolicy) -> list:
        iso = geom.isotropy
        if iso.arrow is None:
            return [Check("pre.isotropy", "isotropy acts through the groupoid", Status.SKIPPED,
                          {"reason": "no isotropy arrow map supplied"}, ("isotropy action is induced by the groupoid",))]
        G = A.groupoid
        K, L = iso.group, geom.level_chart
        xi_K = SmoothMap.constant(K, G.objects, geom.xi)
        out = [map_check("pre.isotropy.source", "s(k) = xi", compose(G.s, iso.arrow), xi_K, policy),
               map_check("pre.isotropy.target", "t(k) = xi", compose(G.t, iso.arrow), xi_K, policy)]
        if G.eta is not None:
            out.append(verdict_check("pre.isotropy.in_leaf", "k*eta_G = 0",
                                     form_is_zero(pullback(iso.arrow, G.eta), policy)))
        src = iso.action.source
        k_map = compose(iso.arrow, SmoothMap.projection(src, K))
        l_map = compose(geom.level.iota, SmoothMap.projection(src, L))
        out.append(map_check("pre.isotropy.compatible", "iota(k l) = k iota(l)",
                             compose(geom.level.iota, iso.action), A.act(k_map, l_map), policy))
        return out
    return compat


def verify_reduction(m: ReductionManifest, policy: SamplePolicy = DEFAULT_POLICY,
                     gate: bool = True) -> tuple[ReducedStructure | None, Report]:
    """Gate on the cosymplectic action, then run the certified reduction stages."""
    A = m.action
    r = Report()
    if gate:
        r.extend(check_cosymplectic_action(A, m.C_M, policy), "action.")
        if not r.passed:
            r.skip("stages", "depends on the action check", "skipped: action check failed")
            return None, r
    reduced, stages = run_stages(m.C_M, A.rho, m.geometry, policy, _groupoid_compat(A), A.attestations()
                                 if A.free and A.proper else ())
    r.extend(stages)
    return reduced, r


def _group_compat(spec: MomentumMapSpec) -> Compat:
    def compat(geom: ReductionGeometry, policy: SamplePolicy) -> list:
        iso = geom.isotropy
        if iso.element is None:
            return [Check("pre.isotropy", "isotropy acts through the group", Status.SKIPPED,
                          {"reason": "no isotropy element map supplied"}, ("isotropy action is induced by the group",))]
        K, L = iso.group, geom.level_chart
        coad_in = SmoothMap(K, spec.coadjoint.source, list(iso.element.components) + list(geom.xi))
        out = [map_check("pre.isotropy.fixes_xi", "Ad*_k xi = xi", compose(spec.coadjoint, coad_in),
                         SmoothMap.constant(K, spec.dual, geom.xi), policy)]
        src = iso.action.source
        moved = compose(spec.action, SmoothMap(src, spec.action.source,
                                               list(compose(iso.element, SmoothMap.projection(src, K)).components)
                                               + list(compose(geom.level.iota, SmoothMap.projection(src, L)).components)))
        out.append(map_check("pre.isotropy.compatible", "iota(k l) = k iota(l)",
                             compose(geom.level.iota, iso.action), moved, policy))
        return out
    return compat


def _arrow_from_element(spec: ReebFlowActionSpec, A: ActionPresentation, geom: ReductionGeometry) -> ReductionGeometry:
    iso = geom.isotropy
    if iso.arrow is not None or iso.element is None:
        return geom
    arrow = SmoothMap(iso.group, A.groupoid.arrows, list(iso.element.components) + list(geom.xi) + [ZERO])
    return replace(geom, isotropy=replace(iso, arrow=arrow))


def verify_albert_reduction(spec: ReebFlowActionSpec, C_M: CosymplecticStructure, geom: ReductionGeometry,
                            policy: SamplePolicy = DEFAULT_POLICY) -> tuple[ReducedStructure | None, Report]:
    """Reduce along the group route and the extension-groupoid route and compare the answers."""
    base = spec.base
    r = Report()
    r.extend(check_albert_momentum(base, C_M, policy), "albert.")
    r.extend(check_reeb_flow(spec, C_M, policy), "albert.")
    if not r.passed:
        r.skip("group_route", "depends on the momentum map", "skipped: momentum map check failed")
        r.skip("groupoid_route", "depends on the momentum map", "skipped: momentum map check failed")
        return None, r
    hyp = tuple(a for a, ok in (("action is free", base.free), ("action is proper", base.proper)) if ok)
    red_g, rep_g = run_stages(C_M, base.mu, geom, policy, _group_compat(base), hyp if len(hyp) == 2 else ())
    r.extend(rep_g, "group_route.")
    A = reeb_flow_extension(spec, C_M, policy, check=False)
    red_o, rep_o = verify_reduction(ReductionManifest(A, C_M, _arrow_from_element(spec, A, geom)), policy)
    r.extend(rep_o, "groupoid_route.")
    if red_g is None or red_o is None:
        r.skip("routes_agree", "both routes give the same structure", "skipped: a route failed")
        return None, r
    r.add(verdict_check("routes_agree.eta", "eta^xi (group) = eta^xi (groupoid)",
                        form_is_zero(red_g.eta - red_o.eta, policy)))
    r.add(verdict_check("routes_agree.omega", "omega^xi (group) = omega^xi (groupoid)",
                        form_is_zero(red_g.omega - red_o.omega, policy)))
    if red_g.reeb is not None and red_o.reeb is not None:
        r.add(verdict_check("routes_agree.reeb", "R^xi (group) = R^xi (groupoid)",
                            field_is_zero(red_g.reeb - red_o.reeb, policy)))
    r.artifacts["reduced"] = red_g.to_json()
    return (red_g if r.passed else None), r


# ---------------------------------------------------------------------------
# leaves of the level set

@dataclass(frozen=True, eq=False)
class LeafReductionSpec:
    leaf: LeafSpec                 # S -> M
    level: EmbeddingSpec           # L_S -> S
    level_in_level: SmoothMap      # L_S -> L
    quotient: Chart
    p: SmoothMap                   # L_S -> Q_S
    sigma: SmoothMap               # Q_S -> L_S
    quotient_in_quotient: SmoothMap  # Q_S -> Q
    generators: tuple = ()

    def scaled(self, factor) -> "LeafReductionSpec":
        return replace(self, leaf=self.leaf.scaled(factor))


def verify_leaf_reduction(m: ReductionManifest, spec: LeafReductionSpec, policy: SamplePolicy = DEFAULT_POLICY,
                          reduced: ReducedStructure | None = None) -> Report:
    """Symplectic reduction of a leaf, compared with the cosymplectic reduction restricted to it."""
    r = Report()
    if reduced is None:
        reduced, base = verify_reduction(m, policy)
        if reduced is None:
            r.extend(Report(c for c in base.checks if not c.ok), "reduction.")
            r.skip("leaf", "depends on the reduction", "skipped: reduction failed")
            return r
    geom = m.geometry
    C = m.C_M
    LS, QS = spec.level.source, spec.quotient
    r.extend(check_leaf(spec.leaf, C.eta, C.omega, policy), "leaf.")
    iS = spec.leaf.embedding.iota
    r.add(map_check("pre.commute_level", "iota_S o iota_LS = iota o j",
                    compose(iS, spec.level.iota), compose(geom.level.iota, spec.level_in_level), policy))
    r.add(map_check("pre.commute_quotient", "p o j = k o p_S",
                    compose(geom.p, spec.level_in_level), compose(spec.quotient_in_quotient, spec.p), policy))
    rho = m.action.rho
    r.add(map_check("pre.level", "rho o iota_S o iota_LS = xi", compose(rho, compose(iS, spec.level.iota)),
                    SmoothMap.constant(LS, rho.target, geom.xi), policy))
    r.add(map_check("pre.section", "p_S o sigma_S = id", compose(spec.p, spec.sigma),
                    SmoothMap.identity(QS), policy))
    r.add(submersion_check("pre.submersion", "rank dp_S = dim Q_S", spec.p, policy))
    k = len(spec.generators)
    r.add(exact_check("pre.dimension", "dim L_S - dim Q_S = k", LS.dim - QS.dim == k))
    for i, V in enumerate(spec.generators):
        r.add(_zero_components(f"pre.vertical.{i}", "dp_S(V) = 0", spec.p.pushforward(V), policy))
    if any(not c.ok for c in r.checks if c.id.startswith("pre.")):
        r.skip("stages", "depends on the leaf preconditions", "skipped: a precondition failed")
        return r
    omega_L = pullback(spec.level.iota, spec.leaf.omega_leaf)
    for i, V in enumerate(spec.generators):
        r.add(verdict_check(f"basic.i_V_omega.{i}", "i_V omega_S = 0",
                            form_is_zero(interior_product(V, omega_L), policy)))
    omega_red = _tidy(pullback(spec.sigma, omega_L))
    r.add(verdict_check("descent.omega", "p_S*omega_red = omega_S on the level",
                        form_is_zero(pullback(spec.p, omega_red) - omega_L, policy)))
    r.extend(check_symplectic(omega_red, policy), "quotient.")
    r.add(verdict_check("match", "omega_red = omega^xi on the quotient leaf",
                        form_is_zero(omega_red - pullback(spec.quotient_in_quotient, reduced.omega), policy)))
    r.artifacts["leaf_reduced_omega"] = omega_red.to_json()
    return r
