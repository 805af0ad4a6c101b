"""Lie groupoids in coordinates: presentations, axiom checks, action
groupoids, trivial central extensions and multiplicativity of forms."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import symengine as se

from .forms import (
    Chart,
    DifferentialForm,
    SmoothMap,
    compose,
    jacobian_rank,
    map_difference_is_zero,
    pair_maps,
    product_chart,
    pullback,
    form_is_zero,
)
from .report import Check, Report, Status, exact_check, verdict_check
from .structures import check_cosymplectic, check_symplectic, _fresh
from .symbolic import DEFAULT_POLICY, ONE, ZERO, SamplePolicy, as_expr


class GroupoidError(ValueError):
    pass


class MissingParameterizerError(GroupoidError):
    pass


def reexpress(F: SmoothMap, source: Chart, rename: Mapping[str, str] | None = None) -> SmoothMap:
    """F with its source coordinates renamed into ``source`` (unlisted names are kept)."""
    rename = rename or {}
    subs = {se.Symbol(old): se.Symbol(new) for old, new in rename.items() if old != new}
    return SmoothMap(source, F.target, [c.subs(subs) if subs else c for c in F.components])


def prefix_rename(chart: Chart, prefix: str) -> dict[str, str]:
    return {c: prefix + c for c in chart.coords}


@dataclass(frozen=True, eq=False)
class PairChart:
    """Composable pairs: pr1(p) and pr2(p) compose to m(p)."""
    chart: Chart
    pr1: SmoothMap
    pr2: SmoothMap
    m: SmoothMap
    # arrows x arrows (prefixes "l.", "r.") -> chart, defined on composable pairs
    pairing: SmoothMap | None = None


@dataclass(frozen=True, eq=False)
class TripleChart:
    chart: Chart
    q1: SmoothMap
    q2: SmoothMap
    q3: SmoothMap


@dataclass(frozen=True, eq=False)
class GroupoidPresentation:
    objects: Chart
    arrows: Chart
    s: SmoothMap
    t: SmoothMap
    u: SmoothMap
    inv: SmoothMap
    pairs: PairChart
    triples: TripleChart | None = None
    eta: DifferentialForm | None = None
    omega: DifferentialForm | None = None
    name: str = ""
    attest_nonvanishing: bool = False

    def __post_init__(self):
        G0, G1, P = self.objects, self.arrows, self.pairs.chart
        expect = {"s": (self.s, G1, G0), "t": (self.t, G1, G0), "u": (self.u, G0, G1),
                  "inv": (self.inv, G1, G1), "pr1": (self.pairs.pr1, P, G1),
                  "pr2": (self.pairs.pr2, P, G1), "m": (self.pairs.m, P, G1)}
        if self.pairs.pairing is not None:
            expect["pairing"] = (self.pairs.pairing, None, P)
            pair_src = pair_chart_of(G1)
            if not self.pairs.pairing.source.same_as(pair_src):
                raise GroupoidError(f"{self.name}: pairing must be defined on {pair_src.coords}")
        if self.triples is not None:
            T = self.triples.chart
            for k in ("q1", "q2", "q3"):
                expect[k] = (getattr(self.triples, k), T, G1)
        for label, (F, src, tgt) in expect.items():
            if (src is not None and not F.source.same_as(src)) or not F.target.same_as(tgt):
                raise GroupoidError(f"{self.name or 'groupoid'}: {label} has the wrong source or target chart")
        for label, form, deg in (("eta", self.eta, 1), ("omega", self.omega, 2)):
            if form is not None and (not form.chart.same_as(G1) or form.degree != deg):
                raise GroupoidError(f"{self.name}: {label} must be a {deg}-form on the arrow chart")

    @property
    def pairing(self) -> SmoothMap:
        if self.pairs.pairing is None:
            raise MissingParameterizerError(
                f"{self.name or 'groupoid'}: unit and inverse laws need a pairing map arrows x arrows -> pairs")
        return self.pairs.pairing

    def compose_through(self, left: SmoothMap, right: SmoothMap) -> SmoothMap:
        """X -> P sending x to the pair (left(x), right(x))."""
        pairing = self.pairing
        return compose(pairing, pair_maps(pairing.source, [left, right]))

    def multiply(self, left: SmoothMap, right: SmoothMap) -> SmoothMap:
        return compose(self.pairs.m, self.compose_through(left, right))

    def to_json(self) -> dict:
        out: dict = {
            "objects": self.objects.name, "arrows": self.arrows.name,
            "s": self.s.to_json(), "t": self.t.to_json(), "u": self.u.to_json(), "inv": self.inv.to_json(),
            "pairs": {"chart": self.pairs.chart.name, "pr1": self.pairs.pr1.to_json(),
                      "pr2": self.pairs.pr2.to_json(), "m": self.pairs.m.to_json()},
        }
        if self.pairs.pairing is not None:
            out["pairs"]["pairing"] = self.pairs.pairing.to_json()
        if self.triples is not None:
            out["triples"] = {"chart": self.triples.chart.name, "q1": self.triples.q1.to_json(),
                              "q2": self.triples.q2.to_json(), "q3": self.triples.q3.to_json()}
        if self.eta is not None:
            out["eta"] = self.eta.to_json()
        if self.omega is not None:
            out["omega"] = self.omega.to_json()
        return out


def pair_chart_of(arrows: Chart) -> Chart:
    return product_chart([arrows, arrows], ["l.", "r."], name=f"{arrows.name} x {arrows.name}")


def map_check(id: str, anchor: str, F: SmoothMap, G: SmoothMap, policy: SamplePolicy) -> Check:
    return verdict_check(id, anchor, map_difference_is_zero(F, G, policy))


def submersion_check(id: str, anchor: str, F: SmoothMap, policy: SamplePolicy) -> Check:
    lo, hi = jacobian_rank(F, policy)
    ok = lo == F.target.dim
    return Check(id, anchor, Status.NUMERIC if ok else Status.FAILED,
                 {"rank_min": lo, "rank_max": hi, "required": F.target.dim})


def check_groupoid_axioms(G: GroupoidPresentation, policy: SamplePolicy = DEFAULT_POLICY) -> Report:
    """Structure-map identities, unit and inverse laws, associativity when parameterized.

    Raises MissingParameterizerError when no pairing map is supplied.
    """
    G0, G1 = G.objects, G.arrows
    P = G.pairs
    id0, id1 = SmoothMap.identity(G0), SmoothMap.identity(G1)
    r = Report()
    r.add(map_check("pairs.composable", "s o pr1 = t o pr2", compose(G.s, P.pr1), compose(G.t, P.pr2), policy))
    r.add(map_check("unit.source", "s o u = id", compose(G.s, G.u), id0, policy))
    r.add(map_check("unit.target", "t o u = id", compose(G.t, G.u), id0, policy))
    r.add(map_check("mult.source", "s o m = s o pr2", compose(G.s, P.m), compose(G.s, P.pr2), policy))
    r.add(map_check("mult.target", "t o m = t o pr1", compose(G.t, P.m), compose(G.t, P.pr1), policy))
    r.add(map_check("inv.source", "s o inv = t", compose(G.s, G.inv), G.t, policy))
    r.add(map_check("inv.target", "t o inv = s", compose(G.t, G.inv), G.s, policy))
    r.add(map_check("inv.involution", "inv o inv = id", compose(G.inv, G.inv), id1, policy))
    r.add(submersion_check("source.submersion", "rank ds = dim G0", G.s, policy))
    r.add(submersion_check("target.submersion", "rank dt = dim G0", G.t, policy))

    left_unit = compose(G.u, G.t)
    right_unit = compose(G.u, G.s)
    laws = [
        ("unit.left", "m(u(t(g)), g) = g", left_unit, id1, id1),
        ("unit.right", "m(g, u(s(g))) = g", id1, right_unit, id1),
        ("inverse.right", "m(g, inv(g)) = u(t(g))", id1, G.inv, left_unit),
        ("inverse.left", "m(inv(g), g) = u(s(g))", G.inv, id1, right_unit),
    ]
    for id, anchor, a, b, expected in laws:
        p = G.compose_through(a, b)
        r.add(map_check(f"{id}.pairing", "pr1, pr2 recover the pair",
                        pair_maps(pair_chart_of(G1), [compose(P.pr1, p), compose(P.pr2, p)]),
                        pair_maps(pair_chart_of(G1), [a, b]), policy))
        r.add(map_check(id, anchor, compose(P.m, p), expected, policy))

    if G.triples is None:
        r.skip("associativity", "(gh)k = g(hk)", "no triple parameterizer supplied",
               ("multiplication is associative",))
    else:
        T = G.triples
        r.add(map_check("triples.composable_12", "s o q1 = t o q2", compose(G.s, T.q1), compose(G.t, T.q2), policy))
        r.add(map_check("triples.composable_23", "s o q2 = t o q3", compose(G.s, T.q2), compose(G.t, T.q3), policy))
        lhs = G.multiply(G.multiply(T.q1, T.q2), T.q3)
        rhs = G.multiply(T.q1, G.multiply(T.q2, T.q3))
        r.add(map_check("associativity", "(gh)k = g(hk)", lhs, rhs, policy))
    return r


def check_multiplicative(G: GroupoidPresentation, policy: SamplePolicy = DEFAULT_POLICY) -> Report:
    """Multiplicativity of omega (and eta when present) through the pair chart."""
    if G.omega is None:
        raise GroupoidError(f"{G.name or 'groupoid'}: no omega to test for multiplicativity")
    P = G.pairs
    r = Report()
    if G.eta is not None:
        r.extend(check_cosymplectic(G.eta, G.omega, policy, G.attest_nonvanishing), "structure.")
    else:
        r.extend(check_symplectic(G.omega, policy, G.attest_nonvanishing), "structure.")
    forms = [("eta", G.eta), ("omega", G.omega)] if G.eta is not None else [("omega", G.omega)]
    for label, form in forms:
        residual = pullback(P.m, form) - pullback(P.pr1, form) - pullback(P.pr2, form)
        r.add(verdict_check(f"mult.{label}", f"m*{label} = pr1*{label} + pr2*{label}",
                            form_is_zero(residual, policy)))
    if G.eta is not None:
        d0, d1 = G.objects.dim, G.arrows.dim
        r.add(exact_check("dimension", "dim G1 = 2 dim G0 + 1", d1 == 2 * d0 + 1, arrows=d1, objects=d0))
    # exploratory: behaviour under inversion never gates the outcome
    for label, form in forms:
        v = form_is_zero(pullback(G.inv, form) + form, policy)
        r.add(Check(f"inv.{label}", f"inv*{label} = -{label}", Status.INFO,
                    {"outcome": "zero" if v.is_zero else "nonzero", **v.to_json()}))
    return r


# ---------------------------------------------------------------------------
# constructors

@dataclass(frozen=True, eq=False)
class GroupLaw:
    """A Lie group in one chart: mult is defined on chart x chart with prefixes "l.", "r."."""
    chart: Chart
    mult: SmoothMap
    unit: tuple
    inverse: SmoothMap

    def __post_init__(self):
        object.__setattr__(self, "unit", tuple(as_expr(v) for v in self.unit))
        if len(self.unit) != self.chart.dim:
            raise GroupoidError("unit point has the wrong dimension")
        if not self.mult.source.same_as(pair_chart_of(self.chart)):
            raise GroupoidError("group multiplication must be defined on the l./r. product chart")

    def check(self, policy: SamplePolicy = DEFAULT_POLICY) -> Report:
        Gc = self.chart
        ident = SmoothMap.identity(Gc)
        e = SmoothMap.constant(Gc, Gc, self.unit)
        pc = pair_chart_of(Gc)

        def mul(a: SmoothMap, b: SmoothMap) -> SmoothMap:
            return compose(self.mult, pair_maps(pc, [a, b]))

        r = Report()
        r.add(map_check("group.unit", "e g = g = g e", pair_maps(pc, [mul(e, ident), mul(ident, e)]),
                        pair_maps(pc, [ident, ident]), policy))
        r.add(map_check("group.inverse", "g g^-1 = e", mul(ident, self.inverse), e, policy))
        T = product_chart([Gc, Gc, Gc], ["a.", "b.", "c."])
        qa, qb, qc = (SmoothMap.projection(T, Gc, p) for p in ("a.", "b.", "c."))
        r.add(map_check("group.associativity", "(gh)k = g(hk)", mul(mul(qa, qb), qc), mul(qa, mul(qb, qc)), policy))
        return r


def abelian_group(chart: Chart) -> GroupLaw:
    pc = pair_chart_of(chart)
    mult = SmoothMap(pc, chart, [se.Symbol("l." + c) + se.Symbol("r." + c) for c in chart.coords])
    return GroupLaw(chart, mult, tuple(ZERO for _ in chart.coords),
                    SmoothMap(chart, chart, [-s for s in chart.symbols]))


def _disjoint_product(G: Chart, O: Chart, name: str) -> Chart:
    clash = set(G.coords) & set(O.coords)
    if clash:
        raise GroupoidError(f"group and object coordinates overlap: {sorted(clash)}")
    return product_chart([G, O], ["", ""], name=name)


def check_group_action(law: GroupLaw, objects: Chart, action: SmoothMap,
                       policy: SamplePolicy = DEFAULT_POLICY) -> Report:
    Gc, O = law.chart, objects
    src = _disjoint_product(Gc, O, "")
    if not action.source.same_as(src) or not action.target.same_as(O):
        raise GroupoidError("action must map group x objects -> objects")
    r = law.check(policy)
    unit_in = SmoothMap(O, src, list(law.unit) + list(O.symbols))
    r.add(map_check("action.unit", "a(e, x) = x", compose(action, unit_in), SmoothMap.identity(O), policy))
    T = product_chart([Gc, Gc, O], ["l.", "r.", ""])
    inner = reexpress(action, T, prefix_rename(Gc, "r."))
    outer = compose(action, SmoothMap(T, src, [se.Symbol("l." + c) for c in Gc.coords] + list(inner.components)))
    gh = reexpress(law.mult, T)
    direct = compose(action, SmoothMap(T, src, list(gh.components) + list(O.symbols)))
    r.add(map_check("action.compose", "a(g, a(h, x)) = a(gh, x)", outer, direct, policy))
    return r


def action_groupoid(law: GroupLaw, objects: Chart, action: SmoothMap, name: str = "",
                    policy: SamplePolicy = DEFAULT_POLICY, check: bool = True) -> GroupoidPresentation:
    """G x G0 => G0 with s(g, x) = x, t(g, x) = a(g, x)."""
    Gc, O = law.chart, objects
    if check:
        rep = check_group_action(law, O, action, policy)
        if not rep.passed:
            bad = ", ".join(c.id for c in rep.failures())
            raise GroupoidError(f"action axioms fail: {bad}")
    G1 = _disjoint_product(Gc, O, name=f"{Gc.name} x {O.name}")
    s = SmoothMap(G1, O, O.symbols)
    t = reexpress(action, G1)
    u = SmoothMap(O, G1, list(law.unit) + list(O.symbols))
    inv_g = reexpress(law.inverse, G1)
    inv = SmoothMap(G1, G1, list(inv_g.components) + list(t.components))

    P = product_chart([Gc, Gc, O], ["l.", "r.", ""], name=f"pairs({G1.name})")
    h_x = reexpress(action, P, prefix_rename(Gc, "r."))
    pr1 = SmoothMap(P, G1, [se.Symbol("l." + c) for c in Gc.coords] + list(h_x.components))
    pr2 = SmoothMap(P, G1, [se.Symbol("r." + c) for c in Gc.coords] + list(O.symbols))
    m = SmoothMap(P, G1, list(reexpress(law.mult, P).components) + list(O.symbols))
    pc = pair_chart_of(G1)
    pairing = SmoothMap(pc, P, [se.Symbol("l." + c) for c in Gc.coords]
                        + [se.Symbol("r." + c) for c in Gc.coords]
                        + [se.Symbol("r." + c) for c in O.coords])

    T = product_chart([Gc, Gc, Gc, O], ["a.", "b.", "c.", ""], name=f"triples({G1.name})")
    c_x = reexpress(action, T, prefix_rename(Gc, "c."))
    src = _disjoint_product(Gc, O, "")
    b_c_x = compose(action, SmoothMap(T, src, [se.Symbol("b." + c) for c in Gc.coords] + list(c_x.components)))
    q3 = SmoothMap(T, G1, [se.Symbol("c." + c) for c in Gc.coords] + list(O.symbols))
    q2 = SmoothMap(T, G1, [se.Symbol("b." + c) for c in Gc.coords] + list(c_x.components))
    q1 = SmoothMap(T, G1, [se.Symbol("a." + c) for c in Gc.coords] + list(b_c_x.components))
    return GroupoidPresentation(O, G1, s, t, u, inv, PairChart(P, pr1, pr2, m, pairing),
                                TripleChart(T, q1, q2, q3), name=name or f"{Gc.name} x {O.name}")


def _extend_map(F: SmoothMap, source: Chart, target: Chart, extra: Sequence) -> SmoothMap:
    return SmoothMap(source, target, list(reexpress(F, source).components) + list(extra))


def trivial_central_extension(S: GroupoidPresentation, t_name: str = "t", name: str = "",
                              policy: SamplePolicy = DEFAULT_POLICY, check: bool = True) -> GroupoidPresentation:
    """(G1 x R => G0, dt, omega) from a symplectic groupoid; m adds the R-coordinates."""
    if S.omega is None:
        raise GroupoidError("central extension needs a symplectic form on the arrows")
    if check:
        rep = check_groupoid_axioms(S, policy).extend(check_multiplicative(S, policy))
        if not rep.passed:
            raise GroupoidError(f"{S.name}: base groupoid fails {', '.join(c.id for c in rep.failures())}")
    t = _fresh(t_name, set(S.arrows.coords))
    G1 = Chart(f"{S.arrows.name} x R", S.arrows.coords + (t,), S.arrows.periodic)
    P0, T0 = S.pairs.chart, S.triples.chart if S.triples else None
    lt = _fresh("l." + t, set(P0.coords))
    rt = _fresh("r." + t, set(P0.coords) | {lt})
    P = Chart(f"pairs({G1.name})", P0.coords + (lt, rt), P0.periodic)
    T_ = se.Symbol(t)
    LT, RT = se.Symbol(lt), se.Symbol(rt)
    s = reexpress(S.s, G1)
    tt = reexpress(S.t, G1)
    u = _extend_map(S.u, S.objects, G1, [ZERO])
    inv = _extend_map(S.inv, G1, G1, [-T_])
    pr1 = _extend_map(S.pairs.pr1, P, G1, [LT])
    pr2 = _extend_map(S.pairs.pr2, P, G1, [RT])
    m = _extend_map(S.pairs.m, P, G1, [LT + RT])
    pairing = None
    if S.pairs.pairing is not None:
        pc = pair_chart_of(G1)
        pairing = SmoothMap(pc, P, list(reexpress(S.pairs.pairing, pc).components)
                            + [se.Symbol("l." + t), se.Symbol("r." + t)])
    triples = None
    if T0 is not None:
        names = []
        taken = set(T0.coords)
        for p in ("a.", "b.", "c."):
            names.append(_fresh(p + t, taken))
            taken.add(names[-1])
        T = Chart(f"triples({G1.name})", T0.coords + tuple(names), T0.periodic)
        q = [_extend_map(getattr(S.triples, k), T, G1, [se.Symbol(n)]) for k, n in zip(("q1", "q2", "q3"), names)]
        triples = TripleChart(T, *q)
    eta = DifferentialForm.basis(G1, t)
    omega = DifferentialForm(G1, 2, dict(S.omega.terms))
    return GroupoidPresentation(S.objects, G1, s, tt, u, inv, PairChart(P, pr1, pr2, m, pairing), triples,
                                eta, omega, name=name or f"{S.name} x R", attest_nonvanishing=S.attest_nonvanishing)


def opposite(G: GroupoidPresentation) -> GroupoidPresentation:
    """Source and target swapped; m'(a, b) = m(b, a). Right actions are left actions of this."""
    P = G.pairs
    pairing = None
    if P.pairing is not None:
        pc = P.pairing.source
        swap = {("l." + c): ("r." + c) for c in G.arrows.coords}
        swap.update({v: k for k, v in swap.items()})
        pairing = reexpress(P.pairing, pc, swap)
    triples = None
    if G.triples is not None:
        triples = TripleChart(G.triples.chart, G.triples.q3, G.triples.q2, G.triples.q1)
    return replace(G, s=G.t, t=G.s, pairs=PairChart(P.chart, P.pr2, P.pr1, P.m, pairing),
                   triples=triples, name=f"{G.name}^op")
