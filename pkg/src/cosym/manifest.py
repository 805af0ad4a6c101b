"""JSON manifests: loading, export and check dispatch.

Expressions are strings in the parser's grammar. Charts may be referenced by
name or written inline as ``{"coords": [...], "periodic": [...]}``; inline
charts are registered as ``<entity>.<role>`` so later entries can refer to
them. Groupoids and actions are either explicit presentations or built by a
named constructor.
"""
from __future__ import annotations

import copy
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable

import numpy as np

from .actions import (
    ActionPairs,
    ActionPresentation,
    ActionTriples,
    EmbeddingSpec,
    LeafSpec,
    MomentumMapSpec,
    ReebFlowActionSpec,
    RestrictedAction,
    check_albert_momentum,
    check_cosymplectic_action,
    check_leaf_restriction,
    check_multiplication_graph,
    check_reeb_flow,
    reeb_flow_extension,
    right_self_action,
    self_action,
    self_structure,
)
from .forms import Chart, DifferentialForm, SmoothMap, VectorField, all_indices
from .groupoids import (
    GroupLaw,
    GroupoidPresentation,
    PairChart,
    TripleChart,
    abelian_group,
    action_groupoid,
    check_groupoid_axioms,
    check_multiplicative,
    pair_chart_of,
    trivial_central_extension,
)
from .morita import Biaction, InverseWitness, LeafBimoduleSpec, MoritaManifest, check_leaf_bimodule, \
    check_morita_conditions
from .reduction import (
    IsotropyAction,
    LeafReductionSpec,
    ReductionGeometry,
    ReductionManifest,
    roundtrip_identity,
    verify_albert_reduction,
    verify_leaf_reduction,
    verify_reduction,
)
from .report import Check, Report, Status, exact_check, verdict_check
from .structures import CosymplecticStructure, product_structure, product_volume_comparison, structure_suite
from .symbolic import DEFAULT_POLICY, ExpressionError, SamplePolicy, random_polynomial, weakest

MANIFEST_VERSION = 1
SECTIONS = ("structure", "groupoid", "action", "reduction", "morita")


class ManifestError(ValueError):
    def __init__(self, message: str, entity: str | None = None, line: int | None = None,
                 column: int | None = None):
        where = ""
        if entity:
            where = f"{entity}: "
        if line is not None:
            where = f"line {line}, column {column}: " + where
        super().__init__(where + message)
        self.entity = entity
        self.line = line
        self.column = column


@dataclass
class Manifest:
    document: dict
    policy: SamplePolicy
    charts: dict = field(default_factory=dict)
    structures: dict = field(default_factory=dict)
    products: dict = field(default_factory=dict)
    groups: dict = field(default_factory=dict)
    groupoids: dict = field(default_factory=dict)
    momenta: dict = field(default_factory=dict)
    flows: dict = field(default_factory=dict)
    actions: dict = field(default_factory=dict)
    action_structures: dict = field(default_factory=dict)
    action_gates: dict = field(default_factory=dict)
    action_structure_names: dict = field(default_factory=dict)
    leaves: dict = field(default_factory=dict)
    leaf_actions: dict = field(default_factory=dict)
    reductions: dict = field(default_factory=dict)
    morita: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# loading

def policy_from_json(spec: dict | None, base: SamplePolicy = DEFAULT_POLICY) -> SamplePolicy:
    spec = spec or {}
    unknown = set(spec) - {"samples", "tol", "seed", "box"}
    if unknown:
        raise ManifestError(f"unknown policy keys {sorted(unknown)}", "policy")
    box = tuple(spec.get("box", base.box))
    try:
        return SamplePolicy(int(spec.get("samples", base.samples)), float(spec.get("tol", base.tol)),
                            int(spec.get("seed", base.seed)), (float(box[0]), float(box[1])))
    except (ValueError, TypeError, IndexError) as exc:
        raise ManifestError(str(exc), "policy") from exc


class _Loader:
    def __init__(self, doc: dict):
        self.doc = doc
        self.m = Manifest(doc, policy_from_json(doc.get("policy")))
        self._building: set = set()

    # primitives ----------------------------------------------------------
    def section(self, key: str) -> dict:
        sec = self.doc.get(key, {})
        if not isinstance(sec, dict):
            raise ManifestError("section must be an object", key)
        return sec

    def need(self, spec: dict, key: str, where: str):
        if not isinstance(spec, dict) or key not in spec:
            raise ManifestError(f"missing field {key!r}", where)
        return spec[key]

    def chart(self, ref, where: str, default_name: str | None = None) -> Chart:
        if isinstance(ref, dict):
            name = default_name or where
            try:
                chart = Chart(name, tuple(ref.get("coords", ())), frozenset(ref.get("periodic", ())))
            except ValueError as exc:
                raise ManifestError(str(exc), where) from exc
            self.m.charts[name] = chart
            return chart
        if not isinstance(ref, str):
            raise ManifestError("chart reference must be a name or an inline chart", where)
        if ref in self.m.charts:
            return self.m.charts[ref]
        raise ManifestError(f"unresolved chart reference {ref!r}", where)

    def smooth_map(self, spec, source: Chart, target: Chart, where: str) -> SmoothMap:
        if not isinstance(spec, dict):
            raise ManifestError("map must be an object of target coordinate -> expression", where)
        try:
            return SmoothMap.from_named(source, target, spec)
        except (ExpressionError, KeyError, ValueError) as exc:
            raise ManifestError(_msg(exc), where) from exc

    def form(self, spec, chart: Chart, degree: int, where: str) -> DifferentialForm:
        if not isinstance(spec, list):
            raise ManifestError("form must be a list of {index, coeff} terms", where)
        try:
            terms = [(t["index"], t["coeff"]) for t in spec]
        except (KeyError, TypeError) as exc:
            raise ManifestError("form terms need 'index' and 'coeff'", where) from exc
        try:
            return DifferentialForm.from_named(chart, degree, terms)
        except (ExpressionError, KeyError, ValueError) as exc:
            raise ManifestError(_msg(exc), where) from exc

    def vector_field(self, spec, chart: Chart, where: str) -> VectorField:
        try:
            return VectorField.from_named(chart, spec)
        except (ExpressionError, KeyError, ValueError) as exc:
            raise ManifestError(_msg(exc), where) from exc

    def ref(self, table: dict, name, kind: str, where: str, getter: Callable | None = None):
        if getter is not None:
            return getter(name, where)
        if name not in table:
            raise ManifestError(f"unresolved {kind} reference {name!r}", where)
        return table[name]

    # sections -------------------------------------------------------------
    def load(self) -> Manifest:
        version = self.doc.get("version")
        if version != MANIFEST_VERSION:
            raise ManifestError(f"unsupported manifest version {version!r}", "version")
        known = {"version", "policy", "charts", "structures", "groups", "groupoids", "momentum", "actions",
                 "leaves", "leaf_actions", "reductions", "morita", "description"}
        unknown = set(self.doc) - known
        if unknown:
            raise ManifestError(f"unknown sections {sorted(unknown)}", "manifest")
        for name, spec in self.section("charts").items():
            self.chart(spec, f"charts.{name}", name)
        for name, spec in self.section("structures").items():
            self.structure(name, spec)
        for name, spec in self.section("groups").items():
            self.group(name, spec)
        for name in self.section("groupoids"):
            self.groupoid(name, f"groupoids.{name}")
        for name, spec in self.section("momentum").items():
            self.momentum(name, spec)
        for name in self.section("actions"):
            self.action(name, f"actions.{name}")
        for name, spec in self.section("leaves").items():
            self.m.leaves[name] = self.leaf(spec, f"leaves.{name}")
        for name, spec in self.section("leaf_actions").items():
            self.leaf_action(name, spec)
        for name, spec in self.section("reductions").items():
            self.reduction(name, spec)
        for name, spec in self.section("morita").items():
            self.morita(name, spec)
        return self.m

    def structure(self, name: str, spec: dict):
        where = f"structures.{name}"
        if "product" in spec:
            parts = spec["product"]
            if not isinstance(parts, list) or len(parts) != 2:
                raise ManifestError("product needs exactly two structure names", where)
            a, b = (self.ref(self.m.structures, p, "structure", where) for p in parts)
            C = product_structure(a, b, spec.get("t", "t"))
            self.m.charts[f"{name}.chart"] = C.chart
            self.m.structures[name] = CosymplecticStructure(C.chart, C.eta, C.omega, C.attest_nonvanishing, name)
            self.m.products[name] = (a, b)
            return
        self.m.structures[name] = self._inline_structure(spec, where, name)

    def _inline_structure(self, spec: dict, where: str, name: str) -> CosymplecticStructure:
        chart = self.chart(self.need(spec, "chart", where), where, f"{name}.chart")
        eta = self.form(self.need(spec, "eta", where), chart, 1, f"{where}.eta")
        omega = self.form(self.need(spec, "omega", where), chart, 2, f"{where}.omega")
        try:
            return CosymplecticStructure(chart, eta, omega, bool(spec.get("attest_nonvanishing", False)), name)
        except ValueError as exc:
            raise ManifestError(str(exc), where) from exc

    def group(self, name: str, spec: dict):
        where = f"groups.{name}"
        chart = self.chart(self.need(spec, "chart", where), where, f"{name}.chart")
        if spec.get("abelian"):
            self.m.groups[name] = abelian_group(chart)
            return
        mult = self.smooth_map(self.need(spec, "mult", where), pair_chart_of(chart), chart, f"{where}.mult")
        inverse = self.smooth_map(self.need(spec, "inverse", where), chart, chart, f"{where}.inverse")
        unit = [chart.parse(v) if isinstance(v, str) else v for v in self.need(spec, "unit", where)]
        try:
            self.m.groups[name] = GroupLaw(chart, mult, tuple(unit), inverse)
        except ValueError as exc:
            raise ManifestError(str(exc), where) from exc

    def groupoid(self, name: str, where: str) -> GroupoidPresentation:
        if name in self.m.groupoids:
            return self.m.groupoids[name]
        specs = self.section("groupoids")
        if name not in specs:
            raise ManifestError(f"unresolved groupoid reference {name!r}", where)
        if name in self._building:
            raise ManifestError("cyclic groupoid reference", f"groupoids.{name}")
        self._building.add(name)
        spec = specs[name]
        here = f"groupoids.{name}"
        try:
            if "action_groupoid" in spec:
                G = self._action_groupoid(name, spec, here)
            elif "extension" in spec:
                base = self.groupoid(spec["extension"], here)
                G = trivial_central_extension(base, spec.get("t", "t"), name=name, check=False)
            else:
                G = self._explicit_groupoid(name, spec, here)
        except ManifestError:
            raise
        except ValueError as exc:
            raise ManifestError(_msg(exc), here) from exc
        finally:
            self._building.discard(name)
        G = self._forms(G, spec, here)
        for role, chart in (("objects", G.objects), ("arrows", G.arrows), ("pairs", G.pairs.chart)):
            self.m.charts.setdefault(f"{name}.{role}", chart)
        if G.triples is not None:
            self.m.charts.setdefault(f"{name}.triples", G.triples.chart)
        self.m.groupoids[name] = G
        return G

    def _forms(self, G: GroupoidPresentation, spec: dict, where: str) -> GroupoidPresentation:
        from dataclasses import replace
        changes: dict[str, Any] = {"name": G.name or where.split(".", 1)[1]}
        if "eta" in spec:
            changes["eta"] = self.form(spec["eta"], G.arrows, 1, f"{where}.eta")
        if "omega" in spec:
            changes["omega"] = self.form(spec["omega"], G.arrows, 2, f"{where}.omega")
        if "attest_nonvanishing" in spec:
            changes["attest_nonvanishing"] = bool(spec["attest_nonvanishing"])
        return replace(G, **changes)

    def _action_groupoid(self, name: str, spec: dict, where: str) -> GroupoidPresentation:
        ag = spec["action_groupoid"]
        law = self.ref(self.m.groups, self.need(ag, "group", where), "group", where)
        objects = self.chart(self.need(ag, "objects", where), where, f"{name}.objects")
        src = Chart("", law.chart.coords + objects.coords)
        action = self.smooth_map(self.need(ag, "action", where), src, objects, f"{where}.action")
        return action_groupoid(law, objects, action, name=name, check=False)

    def _explicit_groupoid(self, name: str, spec: dict, where: str) -> GroupoidPresentation:
        G0 = self.chart(self.need(spec, "objects", where), where, f"{name}.objects")
        G1 = self.chart(self.need(spec, "arrows", where), where, f"{name}.arrows")
        mp = lambda key, s, t: self.smooth_map(self.need(spec, key, where), s, t, f"{where}.{key}")
        s, t, u, inv = mp("s", G1, G0), mp("t", G1, G0), mp("u", G0, G1), mp("inv", G1, G1)
        ps = self.need(spec, "pairs", where)
        P = self.chart(self.need(ps, "chart", f"{where}.pairs"), f"{where}.pairs", f"{name}.pairs")
        pm = lambda key, s_, t_: self.smooth_map(self.need(ps, key, f"{where}.pairs"), s_, t_, f"{where}.pairs.{key}")
        pairing = pm("pairing", pair_chart_of(G1), P) if "pairing" in ps else None
        pairs = PairChart(P, pm("pr1", P, G1), pm("pr2", P, G1), pm("m", P, G1), pairing)
        triples = None
        if "triples" in spec:
            ts = spec["triples"]
            T = self.chart(self.need(ts, "chart", f"{where}.triples"), f"{where}.triples", f"{name}.triples")
            q = [self.smooth_map(self.need(ts, k, f"{where}.triples"), T, G1, f"{where}.triples.{k}")
                 for k in ("q1", "q2", "q3")]
            triples = TripleChart(T, *q)
        return GroupoidPresentation(G0, G1, s, t, u, inv, pairs, triples, name=name)

    def momentum(self, name: str, spec: dict):
        where = f"momentum.{name}"
        law = self.ref(self.m.groups, self.need(spec, "group", where), "group", where)
        C = self.ref(self.m.structures, self.need(spec, "structure", where), "structure", where)
        M = C.chart
        dual = self.chart(self.need(spec, "dual", where), where, f"{name}.dual")
        action = self.smooth_map(self.need(spec, "action", where), Chart("", law.chart.coords + M.coords), M,
                                 f"{where}.action")
        coad = self.smooth_map(self.need(spec, "coadjoint", where), Chart("", law.chart.coords + dual.coords),
                               dual, f"{where}.coadjoint")
        mu = self.smooth_map(self.need(spec, "mu", where), M, dual, f"{where}.mu")
        gens = [self.vector_field(g, M, f"{where}.generators.{i}")
                for i, g in enumerate(self.need(spec, "generators", where))]
        basis = [[law.chart.parse(v) if isinstance(v, str) else v for v in vec]
                 for vec in self.need(spec, "basis", where)]
        omega_group = None
        try:
            spec_obj = MomentumMapSpec(law, M, action, tuple(basis), tuple(gens), dual, mu, coad,
                                       bool(spec.get("free")), bool(spec.get("proper")), omega_group, name)
        except ValueError as exc:
            raise ManifestError(str(exc), where) from exc
        self.m.momenta[name] = (spec_obj, C)
        if "flow" in spec:
            fs = spec["flow"]
            tau = fs.get("tau", "tau")
            src = Chart(f"{name}.flow", (tau,) + M.coords)
            flow = self.smooth_map(self.need(fs, "map", f"{where}.flow"), src, M, f"{where}.flow.map")
            try:
                self.m.flows[name] = ReebFlowActionSpec(spec_obj, flow, tau, str(fs.get("epsilon", "")))
            except ValueError as exc:
                raise ManifestError(str(exc), f"{where}.flow") from exc

    def action(self, name: str, where: str) -> ActionPresentation:
        if name in self.m.actions:
            return self.m.actions[name]
        specs = self.section("actions")
        if name not in specs:
            raise ManifestError(f"unresolved action reference {name!r}", where)
        spec = specs[name]
        here = f"actions.{name}"
        free, proper = bool(spec.get("free")), bool(spec.get("proper"))
        try:
            if "self_action" in spec or "right_self_action" in spec:
                key = "self_action" if "self_action" in spec else "right_self_action"
                target = spec[key]
                if target not in self.section("groupoids") and target in self.section("actions"):
                    G = self.action(target, here).groupoid
                else:
                    G = self.groupoid(target, here)
                build = self_action if key == "self_action" else right_self_action
                A = build(G, name=name, free=free, proper=proper)
                C = self_structure(G)
            elif "reeb_flow_extension" in spec:
                mname = spec["reeb_flow_extension"]
                if mname not in self.m.flows:
                    raise ManifestError(f"momentum entry {mname!r} with a flow is required", here)
                C = self.m.momenta[mname][1]
                A = reeb_flow_extension(self.m.flows[mname], C, self.m.policy, check=False)
                self.m.action_gates[name] = mname
                self.m.action_structure_names[name] = self.section("momentum")[mname]["structure"]
            else:
                A, C = self._explicit_action(name, spec, here, free, proper)
                if isinstance(spec["structure"], str):
                    self.m.action_structure_names[name] = spec["structure"]
        except ManifestError:
            raise
        except ValueError as exc:
            raise ManifestError(_msg(exc), here) from exc
        self.m.actions[name] = A
        self.m.action_structures[name] = C
        for role, chart in (("objects", A.groupoid.objects), ("arrows", A.groupoid.arrows),
                            ("pairs", A.pairs.chart)):
            self.m.charts.setdefault(f"{name}.{role}", chart)
        if A.groupoid.triples is not None:
            self.m.charts.setdefault(f"{name}.groupoid_triples", A.groupoid.triples.chart)
        if A.triples is not None:
            self.m.charts.setdefault(f"{name}.triples", A.triples.chart)
        return A

    def _explicit_action(self, name, spec, where, free, proper):
        gref, sref = self.need(spec, "groupoid", where), self.need(spec, "structure", where)
        if isinstance(gref, dict):
            # inline presentation, checked only through this action
            G = self._forms(self._explicit_groupoid(f"{name}.groupoid", gref, f"{where}.groupoid"), gref,
                            f"{where}.groupoid")
        else:
            G = self.groupoid(gref, where)
        if isinstance(sref, dict):
            C = self._inline_structure(sref, f"{where}.structure", f"{name}.structure")
        else:
            C = self.ref(self.m.structures, sref, "structure", where)
        M = C.chart
        rho = self.smooth_map(self.need(spec, "rho", where), M, G.objects, f"{where}.rho")
        ps = self.need(spec, "pairs", where)
        A = self.chart(self.need(ps, "chart", f"{where}.pairs"), f"{where}.pairs", f"{name}.pairs")
        pm = lambda key, s_, t_: self.smooth_map(self.need(ps, key, f"{where}.pairs"), s_, t_,
                                                 f"{where}.pairs.{key}")
        from .forms import product_chart
        src = product_chart([G.arrows, M], ["l.", "r."])
        pairing = pm("pairing", src, A) if "pairing" in ps else None
        pairs = ActionPairs(A, pm("prG", A, G.arrows), pm("prM", A, M), pm("phi", A, M), pairing)
        triples = None
        if "triples" in spec:
            ts = spec["triples"]
            T = self.chart(self.need(ts, "chart", f"{where}.triples"), f"{where}.triples", f"{name}.triples")
            tm = lambda key, tgt: self.smooth_map(self.need(ts, key, f"{where}.triples"), T, tgt,
                                                  f"{where}.triples.{key}")
            triples = ActionTriples(T, tm("g", G.arrows), tm("h", G.arrows), tm("x", M))
        return ActionPresentation(G, M, rho, pairs, triples, free, proper, name), C

    def embedding(self, spec: dict, where: str, default: str) -> EmbeddingSpec:
        src = self.chart(self.need(spec, "source", where), where, f"{default}.source")
        amb = self.chart(self.need(spec, "ambient", where), where)
        iota = self.smooth_map(self.need(spec, "iota", where), src, amb, f"{where}.iota")
        return EmbeddingSpec(src, amb, iota, bool(spec.get("attested_injective", False)))

    def leaf(self, spec: dict, where: str) -> LeafSpec:
        E = self.embedding(self.need(spec, "embed", where), f"{where}.embed", where.split(".", 1)[1])
        omega = self.form(self.need(spec, "omega_leaf", where), E.source, 2, f"{where}.omega_leaf")
        unit = None
        if "unit" in spec:
            objects = self.chart(self.need(spec, "objects", where), where)
            unit = self.smooth_map(spec["unit"], objects, E.source, f"{where}.unit")
        return LeafSpec(E, omega, unit, bool(spec.get("attest_nonvanishing", False)), where)

    def leaf_action(self, name: str, spec: dict):
        where = f"leaf_actions.{name}"
        aname = self.need(spec, "action", where)
        A = self.action(aname, where)
        leaf_m = self.ref(self.m.leaves, self.need(spec, "leaf_m", where), "leaf", where)
        leaf_g = self.ref(self.m.leaves, self.need(spec, "leaf_g", where), "leaf", where)
        self.m.leaf_actions[name] = (aname, leaf_m, leaf_g, self.restricted(spec, A, leaf_m, leaf_g, where, name))

    def restricted(self, spec, A: ActionPresentation, leaf_m, leaf_g, where, name) -> RestrictedAction:
        chart = self.chart(self.need(spec, "chart", where), where, f"{name}.chart")
        mp = lambda key, tgt: self.smooth_map(self.need(spec, key, where), chart, tgt, f"{where}.{key}")
        return RestrictedAction(chart, mp("prG", leaf_g.chart), mp("prM", leaf_m.chart), mp("phi", leaf_m.chart),
                                mp("embed", A.pairs.chart))

    def geometry(self, spec: dict, C: CosymplecticStructure, where: str, name: str,
                 group_chart: Chart | None, arrows: Chart | None) -> ReductionGeometry:
        lv = self.need(spec, "level", where)
        L = self.chart(self.need(lv, "chart", f"{where}.level"), f"{where}.level", f"{name}.level")
        iota = self.smooth_map(self.need(lv, "iota", f"{where}.level"), L, C.chart, f"{where}.level.iota")
        iso = self.need(spec, "isotropy", where)
        K = self.chart(self.need(iso, "group", f"{where}.isotropy"), f"{where}.isotropy", f"{name}.isotropy")
        act = self.smooth_map(self.need(iso, "action", f"{where}.isotropy"), Chart("", K.coords + L.coords), L,
                              f"{where}.isotropy.action")
        gens = [self.vector_field(g, L, f"{where}.isotropy.generators.{i}")
                for i, g in enumerate(iso.get("generators", []))]
        arrow = element = None
        if "arrow" in iso:
            if arrows is None:
                raise ManifestError("isotropy arrows need a groupoid action", where)
            arrow = self.smooth_map(iso["arrow"], K, arrows, f"{where}.isotropy.arrow")
        if "element" in iso:
            if group_chart is None:
                raise ManifestError("isotropy elements need a group", where)
            element = self.smooth_map(iso["element"], K, group_chart, f"{where}.isotropy.element")
        qs = self.need(spec, "quotient", where)
        Q = self.chart(self.need(qs, "chart", f"{where}.quotient"), f"{where}.quotient", f"{name}.quotient")
        p = self.smooth_map(self.need(qs, "p", f"{where}.quotient"), L, Q, f"{where}.quotient.p")
        sigma = self.smooth_map(self.need(qs, "sigma", f"{where}.quotient"), Q, L, f"{where}.quotient.sigma")
        xi = [C.chart.parse(v) if isinstance(v, str) else v for v in self.need(spec, "xi", where)]
        try:
            return ReductionGeometry(tuple(xi), EmbeddingSpec(L, C.chart, iota), IsotropyAction(
                K, act, tuple(gens), arrow, element), Q, p, sigma, bool(spec.get("attest_regular", False)))
        except ValueError as exc:
            raise ManifestError(str(exc), where) from exc

    def reduction(self, name: str, spec: dict):
        where = f"reductions.{name}"
        route = spec.get("route", "groupoid")
        if route == "groupoid":
            aname = self.need(spec, "action", where)
            A = self.action(aname, where)
            C = self.m.action_structures[aname]
            geom = self.geometry(spec, C, where, name, None, A.groupoid.arrows)
            entry = {"route": route, "manifest": ReductionManifest(A, C, geom, name), "action": aname}
        elif route == "albert":
            mname = self.need(spec, "momentum", where)
            if mname not in self.m.flows:
                raise ManifestError(f"momentum entry {mname!r} with a flow is required", where)
            flow = self.m.flows[mname]
            C = self.m.momenta[mname][1]
            geom = self.geometry(spec, C, where, name, flow.base.law.chart, None)
            A = reeb_flow_extension(flow, C, self.m.policy, check=False)
            entry = {"route": route, "flow": flow, "C": C, "geometry": geom,
                     "manifest": ReductionManifest(A, C, geom, name)}
        else:
            raise ManifestError(f"unknown route {route!r}", where)
        entry["leaves"] = [self.leaf_reduction(ls, entry["manifest"], f"{where}.leaves.{i}", f"{name}.leaf{i}")
                           for i, ls in enumerate(spec.get("leaves", []))]
        self.m.reductions[name] = entry

    def leaf_reduction(self, spec, rm: ReductionManifest, where, name) -> LeafReductionSpec:
        leaf = self.ref(self.m.leaves, self.need(spec, "leaf", where), "leaf", where)
        lv = self.need(spec, "level", where)
        LS = self.chart(self.need(lv, "chart", f"{where}.level"), f"{where}.level", f"{name}.level")
        iota = self.smooth_map(self.need(lv, "iota", f"{where}.level"), LS, leaf.chart, f"{where}.level.iota")
        j = self.smooth_map(self.need(spec, "j", where), LS, rm.geometry.level_chart, f"{where}.j")
        qs = self.need(spec, "quotient", where)
        QS = self.chart(self.need(qs, "chart", f"{where}.quotient"), f"{where}.quotient", f"{name}.quotient")
        p = self.smooth_map(self.need(qs, "p", f"{where}.quotient"), LS, QS, f"{where}.quotient.p")
        sigma = self.smooth_map(self.need(qs, "sigma", f"{where}.quotient"), QS, LS, f"{where}.quotient.sigma")
        k = self.smooth_map(self.need(spec, "k", where), QS, rm.geometry.quotient, f"{where}.k")
        gens = [self.vector_field(g, LS, f"{where}.generators.{i}") for i, g in enumerate(spec.get("generators", []))]
        return LeafReductionSpec(leaf, EmbeddingSpec(LS, leaf.chart, iota), j, QS, p, sigma, k, tuple(gens))

    def biaction(self, spec, left: ActionPresentation, right: ActionPresentation, where, name,
                 leaves: tuple | None = None, full: Biaction | None = None) -> Biaction:
        B = self.chart(self.need(spec, "chart", where), where, f"{name}.biaction")
        if leaves is None:
            tg, tm, th = left.groupoid.arrows, left.module, right.groupoid.arrows
        else:
            tg, tm, th = (l.chart for l in leaves)
        mp = lambda key, tgt: self.smooth_map(self.need(spec, key, where), B, tgt, f"{where}.{key}")
        embed = mp("embed", full.chart) if full is not None else None
        return Biaction(B, mp("g", tg), mp("x", tm), mp("h", th), embed)

    def morita(self, name: str, spec: dict):
        where = f"morita.{name}"
        left = self.action(self.need(spec, "left", where), where)
        right = self.action(self.need(spec, "right", where), where)
        C = self.ref(self.m.structures, spec["structure"], "structure", where) if "structure" in spec \
            else self.m.action_structures[spec["left"]]
        B = None
        if spec.get("biaction") == "triples":
            # the groupoid's own composable triples, for the self-bimodule
            T = left.groupoid.triples
            if T is None:
                raise ManifestError("left groupoid has no triples chart", where)
            B = Biaction(T.chart, T.q1, T.q2, T.q3)
        elif "biaction" in spec:
            B = self.biaction(spec["biaction"], left, right, f"{where}.biaction", name)
        wit = {}
        for side, anchor_action, other in (("rho", left, right), ("sigma", right, left)):
            ws = spec.get("witnesses", {}).get(side)
            if ws is not None:
                w_where = f"{where}.witnesses.{side}"
                sec = self.smooth_map(self.need(ws, "section", w_where), anchor_action.groupoid.objects,
                                      anchor_action.module, f"{w_where}.section")
                con = self.smooth_map(self.need(ws, "connector", w_where), anchor_action.module,
                                      other.groupoid.arrows, f"{w_where}.connector")
                wit[side] = InverseWitness(sec, con)
        mm = MoritaManifest(left, right, C, B, wit.get("rho"), wit.get("sigma"), bool(spec.get("surjective")), name)
        leaf_spec = None
        if "leaf" in spec:
            ls = spec["leaf"]
            lw = f"{where}.leaf"
            lm, lg, lh = (self.ref(self.m.leaves, self.need(ls, k, lw), "leaf", lw) for k in ("leaf_m", "leaf_g", "leaf_h"))
            rl = self.restricted(self.need(ls, "left", lw), left, lm, lg, f"{lw}.left", f"{name}.leaf_left")
            rr = self.restricted(self.need(ls, "right", lw), right, lm, lh, f"{lw}.right", f"{name}.leaf_right")
            lb = None
            if "biaction" in ls and B is not None:
                lb = self.biaction(ls["biaction"], left, right, f"{lw}.biaction", f"{name}.leaf", (lg, lm, lh), B)
            leaf_spec = LeafBimoduleSpec(lm, lg, lh, rl, rr, lb, bool(ls.get("surjective")),
                                         bool(ls.get("orbit_closure")), bool(ls.get("induced")))
        self.m.morita[name] = (mm, leaf_spec)


def _msg(exc: BaseException) -> str:
    if isinstance(exc, KeyError) and exc.args:
        return str(exc.args[0])
    return str(exc)


def parse_manifest(doc: dict) -> Manifest:
    if not isinstance(doc, dict):
        raise ManifestError("manifest must be a JSON object")
    return _Loader(doc).load()


def load_manifest(path) -> Manifest:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(exc.msg, str(path), exc.lineno, exc.colno) from exc
    return parse_manifest(doc)


# ---------------------------------------------------------------------------
# export

def chart_json(chart: Chart) -> dict:
    return chart.to_json()


def groupoid_json(G: GroupoidPresentation) -> dict:
    P = G.pairs
    out: dict = {
        "objects": chart_json(G.objects), "arrows": chart_json(G.arrows),
        "s": G.s.to_json(), "t": G.t.to_json(), "u": G.u.to_json(), "inv": G.inv.to_json(),
        "pairs": {"chart": chart_json(P.chart), "pr1": P.pr1.to_json(), "pr2": P.pr2.to_json(), "m": P.m.to_json()},
    }
    if P.pairing is not None:
        out["pairs"]["pairing"] = P.pairing.to_json()
    if G.triples is not None:
        T = G.triples
        out["triples"] = {"chart": chart_json(T.chart), "q1": T.q1.to_json(), "q2": T.q2.to_json(),
                          "q3": T.q3.to_json()}
    if G.eta is not None:
        out["eta"] = G.eta.to_json()
    if G.omega is not None:
        out["omega"] = G.omega.to_json()
    if G.attest_nonvanishing:
        out["attest_nonvanishing"] = True
    return out


def action_json(A: ActionPresentation, groupoid: str | dict, structure: str | dict) -> dict:
    P = A.pairs
    out: dict = {"groupoid": groupoid, "structure": structure, "rho": A.rho.to_json(),
                 "pairs": {"chart": chart_json(P.chart), "prG": P.pr_g.to_json(), "prM": P.pr_m.to_json(),
                           "phi": P.phi.to_json()}}
    if P.pairing is not None:
        out["pairs"]["pairing"] = P.pairing.to_json()
    if A.triples is not None:
        T = A.triples
        out["triples"] = {"chart": chart_json(T.chart), "g": T.g.to_json(), "h": T.h.to_json(), "x": T.x.to_json()}
    if A.free:
        out["free"] = True
    if A.proper:
        out["proper"] = True
    return out


def structure_json(C: CosymplecticStructure) -> dict:
    out = {"chart": chart_json(C.chart), "eta": C.eta.to_json(), "omega": C.omega.to_json()}
    if C.attest_nonvanishing:
        out["attest_nonvanishing"] = True
    return out


def export_manifest(m: Manifest) -> dict:
    """Rewrite constructed groupoids and actions as explicit presentations; everything else is copied."""
    doc = copy.deepcopy(m.document)
    for name, G in m.groupoids.items():
        spec = doc["groupoids"][name]
        if "action_groupoid" in spec or "extension" in spec:
            doc["groupoids"][name] = groupoid_json(G)
    explicit = lambda spec: "groupoid" in spec
    for name, A in m.actions.items():
        spec = doc["actions"][name]
        if explicit(spec):
            continue
        sname = m.action_structure_names.get(name) or structure_json(m.action_structures[name])
        doc["actions"][name] = action_json(A, groupoid_json(A.groupoid), sname)
    return doc


# ---------------------------------------------------------------------------
# dispatch

def _selection(selection) -> list[str]:
    if selection is None or selection == "all":
        return list(SECTIONS)
    if isinstance(selection, str):
        selection = [selection]
    out = []
    for s in selection:
        if s == "all":
            return list(SECTIONS)
        if s not in SECTIONS:
            raise ValueError(f"unknown selection {s!r}; expected one of {SECTIONS + ('all',)}")
        out.append(s)
    return out


def _guarded(report: Report, prefix: str, fn: Callable[[], Report]) -> Report | None:
    start = time.perf_counter()
    try:
        sub = fn()
    except (ValueError, KeyError, ArithmeticError, TypeError, RuntimeError) as exc:
        report.error(prefix + "error", "construction", exc)
        sub = None
    else:
        report.extend(sub, prefix)
    report.timings[prefix.rstrip(".")] = time.perf_counter() - start
    return sub


def _structure_section(m: Manifest, r: Report, policy: SamplePolicy):
    for name, C in m.structures.items():
        prefix = f"structure.{name}."
        _guarded(r, prefix, lambda C=C: structure_suite(C, policy, seed=policy.seed))
        if name in m.products:
            a, b = m.products[name]
            info = product_volume_comparison(a, b)
            r.add(Check(prefix + "product_volume", "eta ^ omega^(n+m+1) = c omega1^n ^ omega2^m ^ eta2 ^ eta1 ^ dt",
                        Status.INFO, info))


def _groupoid_section(m: Manifest, r: Report, policy: SamplePolicy):
    for name, G in m.groupoids.items():
        prefix = f"groupoid.{name}."
        _guarded(r, prefix + "axioms.", lambda G=G: check_groupoid_axioms(G, policy))
        if G.omega is None:
            continue
        mult = _guarded(r, prefix, lambda G=G: check_multiplicative(G, policy))
        if G.eta is None:
            continue
        graph = _guarded(r, prefix + "graph.", lambda G=G: check_multiplication_graph(G, policy))
        if mult is not None and graph is not None:
            mult_ok = all(c.ok for c in mult.checks if c.id.startswith("mult.") or c.id == "dimension")
            r.add(exact_check(prefix + "equivalence", "multiplicative <=> multiplication graph is LL",
                              mult_ok == graph.passed, multiplicative=mult_ok, graph=graph.passed))


def _momentum_report(m: Manifest, name: str, policy: SamplePolicy) -> Report:
    spec, C = m.momenta[name]
    sub = Report()
    _guarded(sub, "", lambda: check_albert_momentum(spec, C, policy))
    if name in m.flows:
        _guarded(sub, "", lambda: check_reeb_flow(m.flows[name], C, policy))
    return sub


def _action_section(m: Manifest, r: Report, policy: SamplePolicy) -> dict[str, bool]:
    gate_ok: dict[str, bool] = {}
    for name in m.momenta:
        sub = _momentum_report(m, name, policy)
        r.extend(sub, f"momentum.{name}.")
        gate_ok[name] = sub.passed
    for name, A in m.actions.items():
        prefix = f"action.{name}."
        gate = m.action_gates.get(name)
        if gate is not None and not gate_ok.get(gate, False):
            r.skip(prefix + "checks", "depends on the momentum map", f"skipped: momentum entry {gate!r} failed")
            continue
        C = m.action_structures[name]
        _guarded(r, prefix, lambda A=A, C=C: check_cosymplectic_action(A, C, policy))
    for name, (aname, leaf_m, leaf_g, R) in m.leaf_actions.items():
        gate = m.action_gates.get(aname)
        if gate is not None and not gate_ok.get(gate, False):
            r.skip(f"leaf_action.{name}.checks", "depends on the momentum map",
                   f"skipped: momentum entry {gate!r} failed")
            continue
        A, C = m.actions[aname], m.action_structures[aname]
        _guarded(r, f"leaf_action.{name}.",
                 lambda A=A, C=C, leaf_m=leaf_m, leaf_g=leaf_g, R=R: check_leaf_restriction(A, C, leaf_m, leaf_g, R,
                                                                                            policy))
    return gate_ok


def uniqueness_report(geom: ReductionGeometry, policy: SamplePolicy, count: int = 20) -> Report:
    """sigma*p*alpha = alpha for random polynomial forms on the quotient."""
    rng = np.random.default_rng([policy.seed, 7])
    Q = geom.quotient
    names = list(Q.coords)
    verdicts = []
    for i in range(count):
        degree = 1 + i % 2 if Q.dim >= 2 else min(1, Q.dim)
        terms = {idx: random_polynomial(names, rng, 2, 2) for idx in all_indices(Q, degree)}
        verdicts.append(roundtrip_identity(geom, DifferentialForm(Q, degree, terms), policy))
    r = Report()
    from .symbolic import EXACT
    r.add(verdict_check("roundtrip", "sigma*p*alpha = alpha", weakest(verdicts) if verdicts else EXACT,
                        samples=count))
    return r


def _reduction_section(m: Manifest, r: Report, policy: SamplePolicy):
    gates: dict[str, bool] = {}
    for name, entry in m.reductions.items():
        prefix = f"reduction.{name}."
        holder: dict = {}
        gate = m.action_gates.get(entry.get("action", ""))
        if gate is not None:
            if gate not in gates:
                gates[gate] = _momentum_report(m, gate, policy).passed
            if not gates[gate]:
                r.skip(prefix + "checks", "depends on the momentum map", f"skipped: momentum entry {gate!r} failed")
                continue

        def run(entry=entry, holder=holder) -> Report:
            if entry["route"] == "albert":
                red, rep = verify_albert_reduction(entry["flow"], entry["C"], entry["geometry"], policy)
            else:
                red, rep = verify_reduction(entry["manifest"], policy)
            holder["reduced"] = red
            return rep

        _guarded(r, prefix, run)
        geom = entry["manifest"].geometry
        _guarded(r, prefix + "uniqueness.", lambda geom=geom: uniqueness_report(geom, policy))
        for i, ls in enumerate(entry["leaves"]):
            lp = f"{prefix}leaf{i}."
            if holder.get("reduced") is None:
                r.skip(lp + "checks", "depends on the reduction", "skipped: reduction failed")
                continue
            _guarded(r, lp, lambda ls=ls, entry=entry: verify_leaf_reduction(entry["manifest"], ls, policy,
                                                                              holder["reduced"]))


def _morita_section(m: Manifest, r: Report, policy: SamplePolicy):
    for name, (mm, leaf) in m.morita.items():
        prefix = f"morita.{name}."
        base = _guarded(r, prefix, lambda mm=mm: check_morita_conditions(mm, policy))
        if leaf is None:
            continue
        if base is None or not base.passed:
            r.skip(prefix + "leaf.checks", "depends on the bimodule conditions", "skipped: bimodule check failed")
            continue
        _guarded(r, prefix + "leaf.", lambda mm=mm, leaf=leaf: check_leaf_bimodule(mm, leaf, policy))


_RUNNERS = {"structure": _structure_section, "groupoid": _groupoid_section, "action": _action_section,
            "reduction": _reduction_section, "morita": _morita_section}


def run_checks(m: Manifest, selection=None, policy: SamplePolicy | None = None) -> Report:
    """Run the selected sections in dependency order. An empty selection gives a VACUOUS report."""
    policy = policy or m.policy
    sections = _selection(selection) if selection != [] and selection != () else []
    r = Report()
    for s in SECTIONS:
        if s in sections:
            _RUNNERS[s](m, r, policy)
    return r
