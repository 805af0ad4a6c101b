"""Built-in fixtures, their expected fingerprints, and the mutation harness."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Any, Callable

from .manifest import Manifest, ManifestError, export_manifest, parse_manifest, run_checks
from .report import Check, Report, Status
from .symbolic import SamplePolicy


class MutationError(ValueError):
    pass


def _form(*terms) -> list[dict]:
    return [{"index": list(idx), "coeff": str(c)} for idx, c in terms]


def _chart(*coords, periodic=()) -> dict:
    out: dict = {"coords": list(coords)}
    if periodic:
        out["periodic"] = list(periodic)
    return out


def _ident(*coords) -> dict:
    return {c: c for c in coords}


STD3 = {"chart": _chart("x", "y", "z"), "eta": _form((["z"], 1)), "omega": _form((["x", "y"], 1))}
STD5 = {"chart": _chart("x1", "y1", "x2", "y2", "z"), "eta": _form((["z"], 1)),
        "omega": _form((["x1", "y1"], 1), (["x2", "y2"], 1))}
SKEW3 = {"chart": _chart("x", "y", "z"), "eta": _form((["z"], 1)),
         "omega": _form((["x", "y"], 1), (["x", "z"], 1))}


def _doc(**sections) -> dict:
    return {"version": 1, **sections}


# ---------------------------------------------------------------------------
# fixtures

def std3() -> dict:
    return _doc(structures={"std3": copy.deepcopy(STD3)})


def std5() -> dict:
    return _doc(structures={"std5": copy.deepcopy(STD5)})


def skew3() -> dict:
    return _doc(structures={"skew3": copy.deepcopy(SKEW3)})


def product() -> dict:
    return _doc(structures={"a": copy.deepcopy(STD3), "b": copy.deepcopy(STD3), "prod": {"product": ["a", "b"]}})


def tstar_groupoids(n: int) -> dict:
    g = [f"g{i}" for i in range(1, n + 1)]
    xi = [f"xi{i}" for i in range(1, n + 1)]
    omega = _form(*(([x, y], 1) for x, y in zip(xi, g)))
    return {
        "groups": {f"R{n}": {"chart": _chart(*g), "abelian": True}},
        "groupoids": {
            f"tstar{n}": {"action_groupoid": {"group": f"R{n}", "objects": _chart(*xi), "action": _ident(*xi)},
                          "omega": omega},
            f"ext{n}": {"extension": f"tstar{n}", "t": "t"},
        },
    }


def tstar_ext(n: int) -> dict:
    return _doc(**tstar_groupoids(n))


def translation() -> dict:
    """R acting on R by translation: a groupoid without forms, for the axiom checks."""
    return _doc(groups={"R": {"chart": _chart("g"), "abelian": True}},
                groupoids={"tr": {"action_groupoid": {"group": "R", "objects": _chart("x"),
                                                      "action": {"x": "x + g"}}}})


def self_actions() -> dict:
    doc = tstar_ext(1)
    two = tstar_groupoids(2)
    doc["groups"].update(two["groups"])
    doc["groupoids"].update(two["groupoids"])
    doc["actions"] = {
        "left1": {"self_action": "ext1", "free": True, "proper": True},
        "right1": {"right_self_action": "ext1", "free": True, "proper": True},
        "left2": {"self_action": "ext2", "free": True, "proper": True},
    }
    return doc


ROT_M = ("x1", "y1", "x2", "y2", "z")


def rotation() -> dict:
    """S^1 rotating the (x1, y1) plane of STD5, with the Reeb flow along z."""
    doc = _doc(
        structures={"std5": copy.deepcopy(STD5)},
        groups={"S1": {"chart": _chart("phi", periodic=["phi"]), "abelian": True}},
        momentum={"rotation": {
            "group": "S1", "structure": "std5", "dual": _chart("xi"),
            "action": {"x1": "x1*cos(phi) + y1*sin(phi)", "y1": "-x1*sin(phi) + y1*cos(phi)",
                       "x2": "x2", "y2": "y2", "z": "z"},
            "coadjoint": {"xi": "xi"},
            "mu": {"xi": "(x1^2 + y1^2)/2"},
            "generators": [{"x1": "y1", "y1": "-x1"}],
            "basis": [[1]],
            "free": True, "proper": True,
            "flow": {"tau": "tau", "map": {"x1": "x1", "y1": "y1", "x2": "x2", "y2": "y2", "z": "z + tau"}},
        }},
        actions={"rot": {"reeb_flow_extension": "rotation", "free": True, "proper": True}},
    )
    geometry = {
        "xi": ["1/2"],
        "level": {"chart": _chart("theta", "x2", "y2", "z", periodic=["theta"]),
                  "iota": {"x1": "cos(theta)", "y1": "sin(theta)", "x2": "x2", "y2": "y2", "z": "z"}},
        "isotropy": {"group": _chart("psi", periodic=["psi"]),
                     "action": {"theta": "theta - psi", "x2": "x2", "y2": "y2", "z": "z"},
                     "generators": [{"theta": "-1"}]},
        "quotient": {"chart": _chart("x2", "y2", "z"), "p": _ident("x2", "y2", "z"),
                     "sigma": {"theta": "0", "x2": "x2", "y2": "y2", "z": "z"}},
        "attest_regular": True,
    }
    leaf_reduction = {
        "leaf": "z0",
        "level": {"chart": _chart("theta", "x2", "y2", periodic=["theta"]),
                  "iota": {"x1": "cos(theta)", "y1": "sin(theta)", "x2": "x2", "y2": "y2"}},
        "j": {"theta": "theta", "x2": "x2", "y2": "y2", "z": "0"},
        "quotient": {"chart": _chart("x2", "y2"), "p": _ident("x2", "y2"),
                     "sigma": {"theta": "0", "x2": "x2", "y2": "y2"}},
        "k": {"x2": "x2", "y2": "y2", "z": "0"},
        "generators": [{"theta": "-1"}],
    }
    group_geometry = copy.deepcopy(geometry)
    group_geometry["isotropy"]["element"] = {"phi": "psi"}
    grp_geometry = copy.deepcopy(geometry)
    grp_geometry["isotropy"]["arrow"] = {"phi": "psi", "xi": "1/2", "t": "0"}
    doc["leaves"] = {
        "z0": {"embed": {"source": _chart(*ROT_M[:4]), "ambient": "std5.chart",
                         "iota": {**_ident(*ROT_M[:4]), "z": "0"}},
               "omega_leaf": _form((["x1", "y1"], 1), (["x2", "y2"], 1))},
        "t0": {"embed": {"source": _chart("phi", "xi", periodic=["phi"]), "ambient": "rot.arrows",
                         "iota": {"phi": "phi", "xi": "xi", "t": "0"}},
               "omega_leaf": _form((["phi", "xi"], 1)), "objects": "rot.objects",
               "unit": {"phi": "0", "xi": "xi"}},
    }
    mu = "(x1^2 + y1^2)/2"
    rotated = {"x1": "x1*cos(phi) + y1*sin(phi)", "y1": "-x1*sin(phi) + y1*cos(phi)", "x2": "x2", "y2": "y2"}
    doc["leaf_actions"] = {"rot_z0": {
        "action": "rot", "leaf_m": "z0", "leaf_g": "t0",
        "chart": _chart("phi", *ROT_M[:4], periodic=["phi"]),
        "prG": {"phi": "phi", "xi": mu}, "prM": _ident(*ROT_M[:4]), "phi": rotated,
        "embed": {"phi": "phi", "t": "0", **_ident(*ROT_M[:4]), "z": "0"},
    }}
    doc["reductions"] = {
        "groupoid_route": {"route": "groupoid", "action": "rot", **grp_geometry, "leaves": [leaf_reduction]},
        "albert_route": {"route": "albert", "momentum": "rotation", **group_geometry},
    }
    return doc


def reeb_flow_trivial() -> dict:
    """The trivial group acting on STD3: the extension is the Reeb flow alone."""
    return _doc(
        structures={"std3": copy.deepcopy(STD3)},
        groups={"e": {"chart": _chart(), "abelian": True}},
        momentum={"trivial": {
            "group": "e", "structure": "std3", "dual": _chart(),
            "action": _ident("x", "y", "z"), "coadjoint": {}, "mu": {}, "generators": [], "basis": [],
            "free": True, "proper": True,
            "flow": {"map": {"x": "x", "y": "y", "z": "z + tau"}},
        }},
        actions={"flow": {"reeb_flow_extension": "trivial", "free": True, "proper": True}},
        leaves={"z0": {"embed": {"source": _chart("x", "y"), "ambient": "std3.chart",
                                 "iota": {"x": "x", "y": "y", "z": "0"}},
                       "omega_leaf": _form((["x", "y"], 1))}},
        reductions={
            "identity": {"route": "groupoid", "action": "flow", **_identity_geometry({"arrow": {"t": "0"}}),
                         "leaves": [{"leaf": "z0",
                                     "level": {"chart": _chart("x", "y"), "iota": _ident("x", "y")},
                                     "j": {"x": "x", "y": "y", "z": "0"},
                                     "quotient": {"chart": _chart("x", "y"), "p": _ident("x", "y"),
                                                  "sigma": _ident("x", "y")},
                                     "k": {"x": "x", "y": "y", "z": "0"}}]},
            "identity_albert": {"route": "albert", "momentum": "trivial", **_identity_geometry({"element": {}})},
        },
    )


def _identity_geometry(extra: dict) -> dict:
    xyz = _ident("x", "y", "z")
    return {"xi": [], "level": {"chart": _chart("x", "y", "z"), "iota": xyz},
            "isotropy": {"group": _chart(), "action": xyz, "generators": [], **extra},
            "quotient": {"chart": _chart("x", "y", "z"), "p": xyz, "sigma": xyz}, "attest_regular": True}


def self_bimodule() -> dict:
    doc = tstar_ext(1)
    doc["actions"] = {"left": {"self_action": "ext1", "free": True, "proper": True},
                      "right": {"right_self_action": "ext1", "free": True, "proper": True}}
    witness = {"section": {"g1": "0", "xi1": "xi1", "t": "0"}, "connector": {"g1": "-g1", "xi1": "xi1", "t": "-t"}}
    fix = lambda c: {"g1": c, "xi1": "xi1"}
    doc["leaves"] = {"t0": {
        "embed": {"source": _chart("g1", "xi1"), "ambient": "ext1.arrows", "iota": {"g1": "g1", "xi1": "xi1", "t": "0"}},
        "omega_leaf": _form((["xi1", "g1"], 1)), "objects": "ext1.objects", "unit": {"g1": "0", "xi1": "xi1"}}}
    pairs_embed = {"l.g1": "l.g1", "r.g1": "r.g1", "xi1": "xi1", "l.t": "0", "r.t": "0"}
    doc["morita"] = {"self": {
        "left": "left", "right": "right", "biaction": "triples", "surjective": True,
        "witnesses": {"rho": copy.deepcopy(witness), "sigma": copy.deepcopy(witness)},
        "leaf": {
            "leaf_m": "t0", "leaf_g": "t0", "leaf_h": "t0",
            "left": {"chart": _chart("l.g1", "r.g1", "xi1"), "prG": fix("l.g1"), "prM": fix("r.g1"),
                     "phi": fix("l.g1 + r.g1"), "embed": pairs_embed},
            "right": {"chart": _chart("l.g1", "r.g1", "xi1"), "prG": fix("r.g1"), "prM": fix("l.g1"),
                      "phi": fix("l.g1 + r.g1"), "embed": pairs_embed},
            "biaction": {"chart": _chart("a.g1", "b.g1", "c.g1", "xi1"), "g": fix("a.g1"), "x": fix("b.g1"),
                         "h": fix("c.g1"),
                         "embed": {"a.g1": "a.g1", "b.g1": "b.g1", "c.g1": "c.g1", "xi1": "xi1",
                                   "a.t": "0", "b.t": "0", "c.t": "0"}},
            "surjective": True, "orbit_closure": True, "induced": True,
        },
    }}
    return doc


# ---------------------------------------------------------------------------
# entries

@dataclass(frozen=True)
class GalleryEntry:
    name: str
    description: str
    build: Callable[[], dict]
    selection: tuple = ("all",)
    expect_status: str = "PASS"
    # check id -> expected status; a subset of the full fingerprint
    expect: dict = field(default_factory=dict)

    def manifest(self) -> Manifest:
        return parse_manifest(self.build())

    def run(self, policy: SamplePolicy | None = None) -> Report:
        return run_checks(self.manifest(), list(self.selection), policy)

    def verify(self, report: Report) -> list[str]:
        """Differences between a report and the expected fingerprint."""
        problems = []
        if report.status != self.expect_status:
            problems.append(f"status {report.status} != {self.expect_status}")
        got = report.fingerprint()
        for cid, status in self.expect.items():
            if got.get(cid) != status:
                problems.append(f"{cid}: {got.get(cid, 'missing')} != {status}")
        return problems


@dataclass(frozen=True)
class Mutation:
    """A named sensitivity test: JSON-pointer edits on a fixture and the check they must break."""
    name: str
    entry: str
    edits: tuple                # ((pointer, replacement), ...)
    expect_failed: tuple        # check ids that must be FAILED with a verdict or witness
    expect_skipped: tuple = ()
    description: str = ""


P, N = "PROVED", "NUMERIC"

ENTRIES: dict[str, GalleryEntry] = {e.name: e for e in [
    GalleryEntry("std3", "standard structure dz, dx^dy on R^3", std3, expect={
        "structure.std3.volume": P, "structure.std3.reeb.i_R_omega": P, "structure.std3.poisson.jacobi": P}),
    GalleryEntry("std5", "standard structure on R^5", std5, expect={"structure.std5.volume": P}),
    GalleryEntry("skew3", "eta = dz, omega = dx^dy + dx^dz", skew3, expect={
        "structure.skew3.reeb.i_R_omega": P, "structure.skew3.reeb.eta_R": P}),
    GalleryEntry("product", "product of two copies of STD3 with the extra line", product, expect={
        "structure.prod.volume": P, "structure.prod.product_volume": "INFO"}),
    GalleryEntry("tstar1_ext", "trivial central extension of T*R", lambda: tstar_ext(1), expect={
        "groupoid.ext1.mult.eta": P, "groupoid.ext1.mult.omega": P, "groupoid.ext1.graph.dimension_identity": P,
        "groupoid.ext1.equivalence": P}),
    GalleryEntry("tstar2_ext", "trivial central extension of T*R^2", lambda: tstar_ext(2), expect={
        "groupoid.ext2.mult.eta": P, "groupoid.ext2.mult.omega": P, "groupoid.ext2.equivalence": P}),
    GalleryEntry("translation", "R acting on R by translation, as an action groupoid", translation, expect={
        "groupoid.tr.axioms.associativity": P}),
    GalleryEntry("self_action", "groupoids acting on themselves by left and right multiplication",
                 self_actions, expect={"action.left1.graph.ll.omega": P, "action.right1.graph.ll.omega": P,
                                       "action.left2.graph.ll.omega": P}),
    GalleryEntry("rotation", "S^1 rotating the (x1, y1) plane of STD5; reduction at xi = 1/2", rotation, expect={
        "momentum.rotation.hamiltonian.xi": P, "momentum.rotation.flow.equation": P,
        "action.rot.graph.ll.omega": N, "reduction.groupoid_route.descent.eta": P,
        "reduction.albert_route.routes_agree.omega": P, "reduction.groupoid_route.leaf0.match": P}),
    GalleryEntry("reeb_flow_trivial", "trivial group on STD3: the Reeb flow as a groupoid action",
                 reeb_flow_trivial, expect={"momentum.trivial.flow.equation": P, "action.flow.graph.ll.omega": P,
                                            "reduction.identity.descent.omega": P,
                                            "reduction.identity_albert.routes_agree.eta": P}),
    GalleryEntry("self_bimodule", "a cosymplectic groupoid as a bimodule over itself", self_bimodule, expect={
        "morita.self.commute": P, "morita.self.leaf.commute": P, "morita.self.leaf.reeb.rho.xi1": P}),
]}


def _mut(name, entry, edits, failed, skipped=(), description=""):
    return Mutation(name, entry, tuple(edits), tuple(failed), tuple(skipped), description)


MUTATIONS: dict[str, Mutation] = {m.name: m for m in [
    _mut("volume_sign", "std3", [("/structures/std3/omega/0/coeff", "x")], ["structure.std3.volume"],
         description="omega = x dx^dy vanishes along x = 0"),
    _mut("swap_source_target", "translation", [("/groupoids/tr/s/x", "x + g"), ("/groupoids/tr/t/x", "x")],
         ["groupoid.tr.axioms.pairs.composable"]),
    _mut("ext_omega_extra", "tstar1_ext",
         [("/groupoids/ext1/omega", [{"index": ["xi1", "g1"], "coeff": "1"}, {"index": ["g1", "t"], "coeff": "1"}])],
         ["groupoid.ext1.mult.omega", "groupoid.ext1.graph.ll.omega"], description="omega + dg^dt"),
    _mut("ext_omega_weight", "tstar1_ext", [("/groupoids/ext1/omega/0/coeff", "1 + g1^2")],
         ["groupoid.ext1.mult.omega", "groupoid.ext1.graph.ll.omega"], description="(1 + g^2) dxi^dg"),
    _mut("ext_eta_extra", "tstar1_ext",
         [("/groupoids/ext1/eta", [{"index": ["t"], "coeff": "1"}, {"index": ["xi1"], "coeff": "1"}])],
         ["groupoid.ext1.mult.eta", "groupoid.ext1.graph.ll.eta"], description="eta + dxi"),
    _mut("ext_mult_t", "tstar1_ext", [("/groupoids/ext1/pairs/m/t", "l.t + 2*r.t")],
         ["groupoid.ext1.mult.eta", "groupoid.ext1.graph.ll.eta"], description="m_t = t1 + 2 t2"),
    _mut("ext_mult_g", "tstar1_ext", [("/groupoids/ext1/pairs/m/g1", "l.g1 + 2*r.g1")],
         ["groupoid.ext1.mult.omega", "groupoid.ext1.graph.ll.omega"],
         description="m_g = g1 + 2 g2, so omega picks up a factor 2 on one leg"),
    _mut("rho_plus_z", "rotation", [("/actions/rot/rho/xi", "(x1^2 + y1^2)/2 + z")],
         ["action.rot.reeb_vertical.xi"]),
    _mut("action_unit_shift", "rotation", [("/actions/rot/pairs/phi/z", "t + z + 1")], ["action.rot.axioms.unit"]),
    _mut("section_shift", "rotation", [("/reductions/groupoid_route/quotient/sigma/z", "z + 1")],
         ["reduction.groupoid_route.pre.section"]),
    _mut("leaf_form_scaled", "rotation", [("/leaves/z0/omega_leaf/0/coeff", "2"),
                                          ("/leaves/z0/omega_leaf/1/coeff", "2")],
         ["reduction.groupoid_route.leaf0.match", "leaf_action.rot_z0.leaf_m.omega"]),
    _mut("mu_sign", "rotation", [("/momentum/rotation/mu/xi", "-(x1^2 + y1^2)/2")],
         ["momentum.rotation.hamiltonian.xi"], ["action.rot.checks"]),
    _mut("flow_speed", "rotation", [("/momentum/rotation/flow/map/z", "z + 2*tau")],
         ["momentum.rotation.flow.equation"], ["action.rot.checks"]),
    _mut("morita_sigma", "self_bimodule", [("/actions/right/rho/xi1", "xi1 + g1")], ["morita.self.orbit.sigma"]),
]}


# ---------------------------------------------------------------------------
# mutation harness

def _split(pointer: str) -> list[str]:
    if not pointer.startswith("/"):
        raise MutationError(f"target must start with '/': {pointer!r}")
    return [p.replace("~1", "/").replace("~0", "~") for p in pointer[1:].split("/")]


def _locate(doc, pointer: str):
    parts = _split(pointer)
    node = doc
    for p in parts[:-1]:
        node = _child(node, p, pointer)
    last = parts[-1]
    _child(node, last, pointer)
    return node, (int(last) if isinstance(node, list) else last)


def _child(node, key: str, pointer: str):
    try:
        if isinstance(node, list):
            return node[int(key)]
        if isinstance(node, dict):
            return node[key]
    except (KeyError, IndexError, ValueError):
        pass
    raise MutationError(f"mutation target {pointer!r} does not exist")


def apply_edit(doc: dict, pointer: str, replacement: Any) -> dict:
    node, key = _locate(doc, pointer)
    old = node[key]
    if not isinstance(old, str) and isinstance(replacement, str):
        try:
            replacement = json.loads(replacement)
        except json.JSONDecodeError as exc:
            raise MutationError(f"{pointer!r} holds structured data; the replacement must be JSON") from exc
    if old == replacement:
        raise MutationError(f"mutation of {pointer!r} leaves it unchanged")
    node[key] = replacement
    return doc


def _has(doc, pointer: str) -> bool:
    try:
        _locate(doc, pointer)
    except MutationError:
        return False
    return True


def mutated_document(entry: GalleryEntry, edits) -> dict:
    """Apply edits to the constructor document, or to its explicit export when a target only exists there."""
    doc = entry.build()
    if not all(_has(doc, p) for p, _ in edits):
        doc = export_manifest(parse_manifest(doc))
    for pointer, replacement in edits:
        apply_edit(doc, pointer, replacement)
    return doc


def mutate_and_expect_failure(entry: GalleryEntry, edits, expect_failed=(), expect_skipped=(),
                              policy: SamplePolicy | None = None) -> tuple[Report, Report]:
    """Run the mutant and judge it.

    Returns the mutant's report and a harness report. The harness passes only
    when the mutant fails, every expected check is FAILED with a verdict or witness,
    and every expected skip is SKIPPED.
    """
    if not edits:
        raise MutationError("no edits given")
    doc = mutated_document(entry, edits)
    try:
        m = parse_manifest(doc)
    except ManifestError as exc:
        raise MutationError(f"mutant does not load: {exc}") from exc
    report = run_checks(m, list(entry.selection), policy)
    harness = Report()
    harness.add(Check("detected", "mutant report does not pass",
                      Status.PROVED if report.status == "FAIL" else Status.FAILED, {"mutant_status": report.status}))
    got = {c.id: c for c in report.checks}
    for cid in expect_failed:
        c = got.get(cid)
        ok = c is not None and c.status == Status.FAILED and ("verdict" in c.detail or "witness" in c.detail)
        harness.add(Check(f"expect.{cid}", "FAILED with a verdict or witness", Status.PROVED if ok else Status.FAILED,
                          {"observed": c.status.value if c else "missing"}))
    for cid in expect_skipped:
        c = got.get(cid)
        ok = c is not None and c.status == Status.SKIPPED
        harness.add(Check(f"expect.{cid}", "SKIPPED", Status.PROVED if ok else Status.FAILED,
                          {"observed": c.status.value if c else "missing"}))
    return report, harness


def run_mutation(name: str, policy: SamplePolicy | None = None) -> tuple[Report, Report]:
    mt = MUTATIONS[name]
    return mutate_and_expect_failure(ENTRIES[mt.entry], mt.edits, mt.expect_failed, mt.expect_skipped, policy)
