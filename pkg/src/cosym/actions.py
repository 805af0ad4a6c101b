"""Groupoid actions, Lagrangian-Legendrian graphs, leaves and momentum maps."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import symengine as se

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
    jacobian_rank,
    pair_maps,
    product_chart,
    pullback,
    transplant,
    wedge,
)
from .groupoids import (
    GroupLaw,
    GroupoidError,
    GroupoidPresentation,
    MissingParameterizerError,
    _disjoint_product,
    action_groupoid,
    check_group_action,
    check_multiplicative,
    map_check,
    opposite,
    pair_chart_of,
    prefix_rename,
    reexpress,
    submersion_check,
    trivial_central_extension,
)
from .report import Check, Report, Status, exact_check, verdict_check
from .structures import (
    CosymplecticStructure,
    _fresh,
    check_cosymplectic,
    check_symplectic,
    hamiltonian_field,
)
from .symbolic import DEFAULT_POLICY, ZERO, Expr, SamplePolicy, as_expr, is_zero, to_text


class ActionError(ValueError):
    pass


class FlowError(ActionError):
    pass


# ---------------------------------------------------------------------------
# embeddings and LL submanifolds

@dataclass(frozen=True, eq=False)
class EmbeddingSpec:
    source: Chart
    ambient: Chart
    iota: SmoothMap
    attested_injective: bool = False

    def __post_init__(self):
        if not self.iota.source.same_as(self.source) or not self.iota.target.same_as(self.ambient):
            raise ActionError("embedding map does not match its charts")

    def rank_check(self, policy: SamplePolicy, id: str = "embedding.rank") -> Check:
        lo, hi = jacobian_rank(self.iota, policy)
        ok = lo == self.source.dim
        att = ("embedding is an injective immersion",) if self.attested_injective and ok else ()
        return Check(id, "rank d iota = dim N", Status.NUMERIC if ok else Status.FAILED,
                     {"rank_min": lo, "rank_max": hi, "required": self.source.dim}, att)

    def to_json(self) -> dict:
        out = {"source": self.source.name, "ambient": self.ambient.name, "iota": self.iota.to_json()}
        if self.attested_injective:
            out["attested_injective"] = True
        return out


def check_ll_submanifold(E: EmbeddingSpec, C: CosymplecticStructure,
                         policy: SamplePolicy = DEFAULT_POLICY) -> Report:
    """iota*eta = 0, iota*omega = 0 and dim M = 2 dim N + 1."""
    if not E.ambient.same_as(C.chart):
        from .forms import ChartMismatchError
        raise ChartMismatchError(f"embedding lands in {E.ambient.name!r}, structure lives on {C.chart.name!r}")
    r = Report()
    r.add(verdict_check("eta", "iota*eta = 0", form_is_zero(pullback(E.iota, C.eta), policy)))
    r.add(verdict_check("omega", "iota*omega = 0", form_is_zero(pullback(E.iota, C.omega), policy)))
    r.add(exact_check("dimension", "dim M = 2 dim N + 1", E.ambient.dim == 2 * E.source.dim + 1,
                      ambient=E.ambient.dim, source=E.source.dim))
    r.add(E.rank_check(policy))
    return r


# ---------------------------------------------------------------------------
# actions

@dataclass(frozen=True, eq=False)
class ActionPairs:
    """Chart A of pairs (g, x) with s(g) = rho(x)."""
    chart: Chart
    pr_g: SmoothMap
    pr_m: SmoothMap
    phi: SmoothMap
    # arrows x module (prefixes "l.", "r.") -> A
    pairing: SmoothMap | None = None


@dataclass(frozen=True, eq=False)
class ActionTriples:
    """Chart of (g, h, x) with g, h composable and h acting on x."""
    chart: Chart
    g: SmoothMap
    h: SmoothMap
    x: SmoothMap


@dataclass(frozen=True, eq=False)
class ActionPresentation:
    groupoid: GroupoidPresentation
    module: Chart
    rho: SmoothMap
    pairs: ActionPairs
    triples: ActionTriples | None = None
    free: bool = False
    proper: bool = False
    name: str = ""

    def __post_init__(self):
        G1, M, A = self.groupoid.arrows, self.module, self.pairs.chart
        checks = [("rho", self.rho, M, self.groupoid.objects), ("pr_g", self.pairs.pr_g, A, G1),
                  ("pr_m", self.pairs.pr_m, A, M), ("phi", self.pairs.phi, A, M)]
        if self.pairs.pairing is not None:
            checks.append(("pairing", self.pairs.pairing, self.pair_source, A))
        if self.triples is not None:
            T = self.triples.chart
            checks += [("triples.g", self.triples.g, T, G1), ("triples.h", self.triples.h, T, G1),
                       ("triples.x", self.triples.x, T, M)]
        for label, F, src, tgt in checks:
            if not F.source.same_as(src) or not F.target.same_as(tgt):
                raise ActionError(f"{self.name or 'action'}: {label} has the wrong source or target chart")

    @property
    def pair_source(self) -> Chart:
        return product_chart([self.groupoid.arrows, self.module], ["l.", "r."])

    def compose_through(self, g: SmoothMap, x: SmoothMap) -> SmoothMap:
        if self.pairs.pairing is None:
            raise MissingParameterizerError(f"{self.name or 'action'}: no pairing map arrows x module -> pairs")
        return compose(self.pairs.pairing, pair_maps(self.pair_source, [g, x]))

    def act(self, g: SmoothMap, x: SmoothMap) -> SmoothMap:
        return compose(self.pairs.phi, self.compose_through(g, x))

    def attestations(self) -> tuple[str, ...]:
        out = []
        if self.free:
            out.append("action is free")
        if self.proper:
            out.append("action is proper")
        return tuple(out)

    def to_json(self) -> dict:
        out = {"groupoid": self.groupoid.name, "module": self.module.name, "rho": self.rho.to_json(),
               "pairs": {"chart": self.pairs.chart.name, "prG": self.pairs.pr_g.to_json(),
                         "prM": self.pairs.pr_m.to_json(), "phi": self.pairs.phi.to_json()},
               "free": self.free, "proper": self.proper}
        if self.pairs.pairing is not None:
            out["pairs"]["pairing"] = self.pairs.pairing.to_json()
        return out


def check_action_axioms(A: ActionPresentation, policy: SamplePolicy = DEFAULT_POLICY) -> Report:
    G = A.groupoid
    P = A.pairs
    M = A.module
    idM = SmoothMap.identity(M)
    r = Report()
    r.add(map_check("fibered", "s o pr_G = rho o pr_M", compose(G.s, P.pr_g), compose(A.rho, P.pr_m), policy))
    r.add(map_check("anchor", "rho(g x) = t(g)", compose(A.rho, P.phi), compose(G.t, P.pr_g), policy))
    unit_arrow = compose(G.u, A.rho)
    a = A.compose_through(unit_arrow, idM)
    r.add(map_check("unit.pairing", "pr_G, pr_M recover the pair",
                    pair_maps(A.pair_source, [compose(P.pr_g, a), compose(P.pr_m, a)]),
                    pair_maps(A.pair_source, [unit_arrow, idM]), policy))
    r.add(map_check("unit", "1_rho(x) x = x", compose(P.phi, a), idM, policy))
    if A.triples is None:
        r.skip("associativity", "g(hx) = (gh)x", "no action triple parameterizer supplied",
               ("action is associative",))
    else:
        T = A.triples
        r.add(map_check("triples.composable", "s(g) = t(h)", compose(G.s, T.g), compose(G.t, T.h), policy))
        r.add(map_check("triples.fibered", "s(h) = rho(x)", compose(G.s, T.h), compose(A.rho, T.x), policy))
        lhs = A.act(T.g, A.act(T.h, T.x))
        rhs = A.act(G.multiply(T.g, T.h), T.x)
        r.add(map_check("associativity", "g(hx) = (gh)x", lhs, rhs, policy))
    for att in A.attestations():
        r.add(Check(att.split()[-1], "manifest hypothesis", Status.ATTESTED, {}, (att,)))
    return r


# ---------------------------------------------------------------------------
# twisted graph structures

def _dt(chart: Chart, name: str) -> DifferentialForm:
    return DifferentialForm.basis(chart, name)


def iso_graph(C1: CosymplecticStructure, C2: CosymplecticStructure, f: SmoothMap,
              pin=1) -> tuple[CosymplecticStructure, EmbeddingSpec]:
    """(eta1 - eta2, omega1 - omega2 + eta1 ^ dt) on M1 x M2 x R with graph (x, f(x), pin)."""
    if not f.source.same_as(C1.chart) or not f.target.same_as(C2.chart):
        raise ActionError("graph map must go from the first structure to the second")
    amb = product_chart([C1.chart, C2.chart, Chart("R", ("t",))], ["a.", "b.", ""],
                        name=f"{C1.chart.name} x {C2.chart.name} x R")
    e1, e2 = transplant(C1.eta, amb, "a."), transplant(C2.eta, amb, "b.")
    w1, w2 = transplant(C1.omega, amb, "a."), transplant(C2.omega, amb, "b.")
    ambient = CosymplecticStructure(amb, e1 - e2, w1 - w2 + wedge(e1, _dt(amb, "t")),
                                    C1.attest_nonvanishing and C2.attest_nonvanishing, name="iso-graph ambient")
    iota = SmoothMap(C1.chart, amb, list(C1.chart.symbols) + list(f.components) + [as_expr(pin)])
    return ambient, EmbeddingSpec(C1.chart, amb, iota)


def _groupoid_forms(G: GroupoidPresentation) -> tuple[DifferentialForm, DifferentialForm]:
    if G.eta is None or G.omega is None:
        raise GroupoidError(f"{G.name or 'groupoid'} carries no cosymplectic pair")
    return G.eta, G.omega


def multiplication_graph(G: GroupoidPresentation, pin=1) -> tuple[CosymplecticStructure, EmbeddingSpec]:
    """Twisted pair on G1 x G1 x R x G1 x R and the graph (g, h, pin, gh, pin)."""
    eta, omega = _groupoid_forms(G)
    G1 = G.arrows
    line1, line2 = Chart("R", ("t1",)), Chart("R", ("t2",))
    amb = product_chart([G1, G1, line1, G1, line2], ["g1.", "g2.", "", "g3.", ""],
                        name=f"{G1.name}^3 x R^2")
    e = [transplant(eta, amb, p) for p in ("g1.", "g2.", "g3.")]
    w = [transplant(omega, amb, p) for p in ("g1.", "g2.", "g3.")]
    eta_t = e[0] + e[1] - e[2]
    omega_t = (w[0] + w[1] + wedge(e[0], _dt(amb, "t1"))) - w[2] + wedge(e[0] + e[1], _dt(amb, "t2"))
    ambient = CosymplecticStructure(amb, eta_t, omega_t, G.attest_nonvanishing, name="multiplication-graph ambient")
    P = G.pairs
    pin = as_expr(pin)
    iota = SmoothMap(P.chart, amb, list(P.pr1.components) + list(P.pr2.components) + [pin]
                     + list(P.m.components) + [pin])
    return ambient, EmbeddingSpec(P.chart, amb, iota)


def action_graph(A: ActionPresentation, C_M: CosymplecticStructure,
                 pin=1) -> tuple[CosymplecticStructure, EmbeddingSpec]:
    """Twisted pair on G1 x M x R x M x R and the graph (g, x, pin, gx, pin)."""
    eta_g, omega_g = _groupoid_forms(A.groupoid)
    if not C_M.chart.same_as(A.module):
        raise ActionError("module structure lives on a different chart")
    G1, M = A.groupoid.arrows, A.module
    amb = product_chart([G1, M, Chart("R", ("t1",)), M, Chart("R", ("t2",))], ["g.", "x1.", "", "x2.", ""],
                        name=f"{G1.name} x {M.name} x R x {M.name} x R")
    eg, wg = transplant(eta_g, amb, "g."), transplant(omega_g, amb, "g.")
    e1, w1 = transplant(C_M.eta, amb, "x1."), transplant(C_M.omega, amb, "x1.")
    e2, w2 = transplant(C_M.eta, amb, "x2."), transplant(C_M.omega, amb, "x2.")
    eta_t = eg + e1 - e2
    omega_t = (wg + w1 + wedge(eg, _dt(amb, "t1"))) - w2 + wedge(eg + e1, _dt(amb, "t2"))
    ambient = CosymplecticStructure(amb, eta_t, omega_t,
                                    A.groupoid.attest_nonvanishing and C_M.attest_nonvanishing,
                                    name="action-graph ambient")
    P = A.pairs
    pin = as_expr(pin)
    iota = SmoothMap(P.chart, amb, list(P.pr_g.components) + list(P.pr_m.components) + [pin]
                     + list(P.phi.components) + [pin])
    return ambient, EmbeddingSpec(P.chart, amb, iota)


def graph_structure(kind: str, *data, pin=1) -> tuple[CosymplecticStructure, EmbeddingSpec]:
    builders = {"iso": iso_graph, "multiplication": multiplication_graph, "action": action_graph}
    if kind not in builders:
        raise ValueError(f"unknown graph kind {kind!r}; expected one of {sorted(builders)}")
    return builders[kind](*data, pin=pin)


def check_graph(ambient: CosymplecticStructure, E: EmbeddingSpec,
                policy: SamplePolicy = DEFAULT_POLICY) -> Report:
    """Almost-cosymplectic ambient plus the LL criterion for the graph."""
    r = Report()
    r.extend(check_cosymplectic(ambient.eta, ambient.omega, policy, ambient.attest_nonvanishing,
                                require_closed=False), "ambient.")
    r.extend(check_ll_submanifold(E, ambient, policy), "ll.")
    return r


def check_multiplication_graph(G: GroupoidPresentation, policy: SamplePolicy = DEFAULT_POLICY,
                               pin=1) -> Report:
    r = check_graph(*multiplication_graph(G, pin), policy)
    r.add(exact_check("dimension_identity", "2 dim Gamma + 1 = 3 dim G1 + 2",
                      2 * G.pairs.chart.dim + 1 == 3 * G.arrows.dim + 2,
                      graph=G.pairs.chart.dim, arrows=G.arrows.dim))
    return r


def check_cosymplectic_action(A: ActionPresentation, C_M: CosymplecticStructure,
                              policy: SamplePolicy = DEFAULT_POLICY, pin=1,
                              preconditions: bool = True) -> Report:
    """d rho(R) = 0 and the action graph is LL, with axioms and multiplicativity as preconditions."""
    r = Report()
    if preconditions:
        r.extend(check_action_axioms(A, policy), "axioms.")
        r.extend(check_multiplicative(A.groupoid, policy), "groupoid.")
        r.extend(check_cosymplectic(C_M.eta, C_M.omega, policy, C_M.attest_nonvanishing), "module.")
    R = C_M.reeb(policy)
    for name, comp in zip(A.rho.target.coords, A.rho.components):
        r.add(verdict_check(f"reeb_vertical.{name}", "d rho(R) = 0", is_zero(R(comp), policy)))
    r.extend(check_graph(*action_graph(A, C_M, pin), policy), "graph.")
    return r


# ---------------------------------------------------------------------------
# leaves

@dataclass(frozen=True, eq=False)
class LeafSpec:
    embedding: EmbeddingSpec
    omega_leaf: DifferentialForm
    # objects -> leaf chart with iota o unit = u, for leaves of arrow spaces
    unit: SmoothMap | None = None
    attest_nonvanishing: bool = False
    name: str = ""

    @property
    def chart(self) -> Chart:
        return self.embedding.source

    def scaled(self, factor) -> "LeafSpec":
        return LeafSpec(self.embedding, self.omega_leaf.scale(as_expr(factor)), self.unit,
                        self.attest_nonvanishing, self.name)


def check_leaf(L: LeafSpec, eta: DifferentialForm, omega: DifferentialForm,
               policy: SamplePolicy = DEFAULT_POLICY) -> Report:
    E = L.embedding
    r = Report()
    r.add(verdict_check("eta", "iota*eta = 0", form_is_zero(pullback(E.iota, eta), policy)))
    r.add(verdict_check("omega", "iota*omega = omega_S",
                        form_is_zero(pullback(E.iota, omega) - L.omega_leaf, policy)))
    r.extend(check_symplectic(L.omega_leaf, policy, L.attest_nonvanishing), "symplectic.")
    r.add(E.rank_check(policy, "rank"))
    return r


@dataclass(frozen=True, eq=False)
class RestrictedAction:
    """The action restricted to leaves: A_S -> S_G1, A_S -> S (twice) and A_S -> A."""
    chart: Chart
    pr_g: SmoothMap
    pr_m: SmoothMap
    phi: SmoothMap
    embed: SmoothMap


def check_leaf_restriction(A: ActionPresentation, C_M: CosymplecticStructure, leaf_m: LeafSpec,
                           leaf_g: LeafSpec, R: RestrictedAction,
                           policy: SamplePolicy = DEFAULT_POLICY) -> Report:
    """The restricted action graph is Lagrangian in S_G1 x S x S with omega_G + omega_1 - omega_2."""
    eta_g, omega_g = _groupoid_forms(A.groupoid)
    r = Report()
    r.extend(check_leaf(leaf_m, C_M.eta, C_M.omega, policy), "leaf_m.")
    r.extend(check_leaf(leaf_g, eta_g, omega_g, policy), "leaf_g.")
    if leaf_g.unit is not None:
        r.add(map_check("leaf_g.unit", "iota o u_S = u", compose(leaf_g.embedding.iota, leaf_g.unit),
                        A.groupoid.u, policy))
    iG, iM = leaf_g.embedding.iota, leaf_m.embedding.iota
    r.add(map_check("commute.pr_g", "iota_G o pr_G|S = pr_G o iota_A",
                    compose(iG, R.pr_g), compose(A.pairs.pr_g, R.embed), policy))
    r.add(map_check("commute.pr_m", "iota_S o pr_M|S = pr_M o iota_A",
                    compose(iM, R.pr_m), compose(A.pairs.pr_m, R.embed), policy))
    r.add(map_check("commute.phi", "iota_S o Phi|S = Phi o iota_A",
                    compose(iM, R.phi), compose(A.pairs.phi, R.embed), policy))
    SG, S = leaf_g.chart, leaf_m.chart
    amb = product_chart([SG, S, S], ["g.", "x1.", "x2."])
    form = (transplant(leaf_g.omega_leaf, amb, "g.") + transplant(leaf_m.omega_leaf, amb, "x1.")
            - transplant(leaf_m.omega_leaf, amb, "x2."))
    graph = SmoothMap(R.chart, amb, list(R.pr_g.components) + list(R.pr_m.components) + list(R.phi.components))
    r.add(verdict_check("lagrangian", "graph*(omega_G + omega_1 - omega_2) = 0",
                        form_is_zero(pullback(graph, form), policy)))
    r.add(exact_check("lagrangian.dimension", "2 dim graph = dim S_G + 2 dim S",
                      2 * R.chart.dim == SG.dim + 2 * S.dim, graph=R.chart.dim, ambient=amb.dim))
    return r


def legendrian_residual(A: ActionPresentation, C_M: CosymplecticStructure) -> DifferentialForm:
    """Phi*eta - pr_G*eta_G - pr_M*eta on the pair chart; zero for cosymplectic actions."""
    eta_g, _ = _groupoid_forms(A.groupoid)
    P = A.pairs
    return pullback(P.phi, C_M.eta) - pullback(P.pr_g, eta_g) - pullback(P.pr_m, C_M.eta)


# ---------------------------------------------------------------------------
# constructors from groupoids

def self_action(G: GroupoidPresentation, name: str = "", free: bool = False,
                proper: bool = False) -> ActionPresentation:
    """G acting on its arrows by left multiplication, anchored by t."""
    P = G.pairs
    triples = None
    if G.triples is not None:
        triples = ActionTriples(G.triples.chart, G.triples.q1, G.triples.q2, G.triples.q3)
    return ActionPresentation(G, G.arrows, G.t, ActionPairs(P.chart, P.pr1, P.pr2, P.m, P.pairing),
                              triples, free, proper, name=name or f"{G.name} on itself")


def right_self_action(G: GroupoidPresentation, name: str = "", free: bool = False,
                      proper: bool = False) -> ActionPresentation:
    """Right multiplication x h, written as a left action of the opposite groupoid anchored by s."""
    op = opposite(G)
    P = G.pairs
    triples = None
    if G.triples is not None:
        triples = ActionTriples(G.triples.chart, G.triples.q3, G.triples.q2, G.triples.q1)
    return ActionPresentation(op, G.arrows, G.s, ActionPairs(P.chart, P.pr2, P.pr1, P.m, op.pairs.pairing),
                              triples, free, proper, name=name or f"{G.name} on itself (right)")


def self_structure(G: GroupoidPresentation) -> CosymplecticStructure:
    eta, omega = _groupoid_forms(G)
    return CosymplecticStructure(G.arrows, eta, omega, G.attest_nonvanishing, name=G.name)


# ---------------------------------------------------------------------------
# Hamiltonian group actions with an equivariant momentum map

@dataclass(frozen=True, eq=False)
class MomentumMapSpec:
    law: GroupLaw
    module: Chart
    action: SmoothMap          # group x module -> module
    basis: tuple               # Lie algebra vectors in group coordinates
    generators: tuple          # induced fields A* on the module
    dual: Chart                # coordinates on g*, paired with the basis in order
    mu: SmoothMap              # module -> dual
    coadjoint: SmoothMap       # group x dual -> dual
    free: bool = False
    proper: bool = False
    omega_group: DifferentialForm | None = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple(tuple(as_expr(c) for c in v) for v in self.basis))
        object.__setattr__(self, "generators", tuple(self.generators))
        k = self.law.chart.dim
        if self.dual.dim != k or len(self.basis) != k or len(self.generators) != k:
            raise ActionError("basis, generators and dual chart must all match the group dimension")
        for v in self.basis:
            if len(v) != k:
                raise ActionError("basis vectors must have one entry per group coordinate")

    def component(self, k: int) -> Expr:
        """mu^A for the k-th basis element."""
        return self.mu.components[k]

    def derived_generator(self, k: int) -> VectorField:
        """d/ds a(exp(s A), x) at s = 0, from the action's group derivative at the unit."""
        unit = dict(zip(self.law.chart.symbols, self.law.unit))
        comps = []
        for a in self.action.components:
            val = sum((self.basis[k][j] * se.diff(a, g) for j, g in enumerate(self.law.chart.symbols)), ZERO)
            comps.append(val.subs(unit) if unit else val)
        return VectorField(self.module, comps)


def check_albert_momentum(spec: MomentumMapSpec, C_M: CosymplecticStructure,
                          policy: SamplePolicy = DEFAULT_POLICY) -> Report:
    """Invariance, generator consistency, equivariance, the Hamiltonian condition and d mu^A(R) = 0."""
    M, Gc = spec.module, spec.law.chart
    r = Report()
    r.extend(check_group_action(spec.law, M, spec.action, policy), "")
    coad = check_group_action(spec.law, spec.dual, spec.coadjoint, policy)
    r.extend(Report(c for c in coad.checks if c.id.startswith("action.")), "coadjoint.")
    keep = {c: c for c in M.coords}
    for label, form in (("eta", C_M.eta), ("omega", C_M.omega)):
        moved = drop_directions(pullback(spec.action, form), M, keep)
        r.add(verdict_check(f"invariance.{label}", f"L_g*{label} = {label}", form_is_zero(moved - form, policy)))
    src = spec.action.source
    mu_moved = compose(spec.mu, spec.action)
    mu_then = compose(spec.coadjoint, SmoothMap(src, spec.coadjoint.source,
                                                list(Gc.symbols) + list(reexpress(spec.mu, src).components)))
    r.add(map_check("equivariance", "mu(g x) = Ad*_g mu(x)", mu_moved, mu_then, policy))
    R = C_M.reeb(policy)
    for k in range(Gc.dim):
        tag = spec.dual.coords[k]
        gen = spec.generators[k]
        r.add(verdict_check(f"generator.{tag}", "A* generates the action",
                            field_is_zero(gen - spec.derived_generator(k), policy)))
        X = hamiltonian_field(C_M, spec.component(k), policy)
        r.add(verdict_check(f"hamiltonian.{tag}", "A* = X_mu^A", field_is_zero(gen - X, policy)))
        opp = field_is_zero(gen + X, policy)
        r.add(Check(f"hamiltonian_opposite.{tag}", "A* = -X_mu^A", Status.INFO,
                    {"outcome": "zero" if opp.is_zero else "nonzero", **opp.to_json()}))
        r.add(verdict_check(f"reeb_flat.{tag}", "d mu^A(R) = 0", is_zero(R(spec.component(k)), policy)))
    return r


@dataclass(frozen=True, eq=False)
class ReebFlowActionSpec:
    base: MomentumMapSpec
    flow: SmoothMap            # (tau, module coords) -> module
    tau: str = "tau"
    epsilon: str = ""

    def __post_init__(self):
        M = self.base.module
        if self.flow.source.coords != (self.tau,) + M.coords or not self.flow.target.same_as(M):
            raise FlowError(f"flow must map ({self.tau}, {', '.join(M.coords)}) -> {M.name}")


def check_reeb_flow(spec: ReebFlowActionSpec, C_M: CosymplecticStructure,
                    policy: SamplePolicy = DEFAULT_POLICY) -> Report:
    M, F = spec.base.module, spec.flow
    r = Report()
    start = compose(F, SmoothMap(M, F.source, [ZERO] + list(M.symbols)))
    r.add(map_check("flow.initial", "phi_0 = id", start, SmoothMap.identity(M), policy))
    R = C_M.reeb(policy)
    tau = se.Symbol(spec.tau)
    vel = SmoothMap(F.source, M, [se.diff(c, tau) for c in F.components])
    along = SmoothMap(F.source, M, [F.apply(c) for c in R.components])
    r.add(map_check("flow.equation", "d phi/d tau = R o phi", vel, along, policy))
    return r


def canonical_group_form(chart: Chart, group: Chart, dual: Chart) -> DifferentialForm:
    """sum dg_i ^ dxi_i on a chart containing both coordinate sets."""
    out = DifferentialForm(chart, 2)
    for g, xi in zip(group.coords, dual.coords):
        out = out + DifferentialForm.basis(chart, g, xi)
    return out


def hamiltonian_groupoid(spec: MomentumMapSpec, policy: SamplePolicy = DEFAULT_POLICY) -> GroupoidPresentation:
    """G x g* => g* (coadjoint action groupoid) with its symplectic form."""
    S = action_groupoid(spec.law, spec.dual, spec.coadjoint, name=f"{spec.law.chart.name} x g*", policy=policy)
    omega = spec.omega_group
    if omega is None:
        omega = canonical_group_form(S.arrows, spec.law.chart, spec.dual)
    from dataclasses import replace
    return replace(S, omega=DifferentialForm(S.arrows, 2, dict(omega.terms)))


def reeb_flow_extension(spec: ReebFlowActionSpec, C_M: CosymplecticStructure,
                        policy: SamplePolicy = DEFAULT_POLICY, check: bool = True,
                        t_name: str = "t") -> ActionPresentation:
    """(g, xi, t) x = phi_t(g x) for the extension of G x g* by R, anchored by mu."""
    base = spec.base
    if check:
        flow = check_reeb_flow(spec, C_M, policy)
        if not flow.passed:
            raise FlowError(f"Reeb flow fails: {', '.join(c.id for c in flow.failures())}")
        mom = check_albert_momentum(base, C_M, policy)
        if not mom.passed:
            raise ActionError(f"momentum map fails: {', '.join(c.id for c in mom.failures())}")
    G = trivial_central_extension(hamiltonian_groupoid(base, policy), t_name=t_name,
                                  name=f"{base.law.chart.name} x g* x R", policy=policy, check=check)
    Gc, M, dual = base.law.chart, base.module, base.dual
    t = G.arrows.coords[-1]
    clash = (set(Gc.coords) | {t}) & set(M.coords)
    if clash:
        raise ActionError(f"module coordinates clash with group coordinates: {sorted(clash)}")
    A = Chart(f"{Gc.name} x R x {M.name}", Gc.coords + (t,) + M.coords,
              Gc.periodic | M.periodic)
    T_ = se.Symbol(t)

    def act_on(chart: Chart, g_prefix: str, t_sym, x_map: SmoothMap) -> SmoothMap:
        gx = compose(base.action, SmoothMap(chart, base.action.source,
                                            [se.Symbol(g_prefix + c) for c in Gc.coords] + list(x_map.components)))
        return compose(spec.flow, SmoothMap(chart, spec.flow.source, [t_sym] + list(gx.components)))

    x_A = SmoothMap.projection(A, M)
    mu_A = compose(base.mu, x_A)
    pr_g = SmoothMap(A, G.arrows, list(Gc.symbols) + list(mu_A.components) + [T_])
    phi = act_on(A, "", T_, x_A)
    src = product_chart([G.arrows, M], ["l.", "r."])
    pairing = SmoothMap(src, A, [se.Symbol("l." + c) for c in Gc.coords] + [se.Symbol("l." + t)]
                        + [se.Symbol("r." + c) for c in M.coords])
    T = Chart(f"triples({A.name})", tuple("a." + c for c in Gc.coords) + ("a." + t,)
              + tuple("b." + c for c in Gc.coords) + ("b." + t,) + M.coords, M.periodic)
    x_T = SmoothMap.projection(T, M)
    hx = act_on(T, "b.", se.Symbol("b." + t), x_T)
    h = SmoothMap(T, G.arrows, [se.Symbol("b." + c) for c in Gc.coords]
                  + list(compose(base.mu, x_T).components) + [se.Symbol("b." + t)])
    g = SmoothMap(T, G.arrows, [se.Symbol("a." + c) for c in Gc.coords]
                  + list(compose(base.mu, hx).components) + [se.Symbol("a." + t)])
    return ActionPresentation(G, M, base.mu, ActionPairs(A, pr_g, x_A, phi, pairing),
                              ActionTriples(T, g, h, x_T), free=base.free, proper=base.proper,
                              name=f"Reeb-flow extension of {base.name or Gc.name}")
