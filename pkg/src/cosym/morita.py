"""Equivalence bimodules between cosymplectic groupoids."""
from __future__ import annotations

from dataclasses import dataclass

from .actions import (
    ActionPresentation,
    LeafSpec,
    RestrictedAction,
    check_cosymplectic_action,
    check_leaf_restriction,
)
from .forms import Chart, SmoothMap, compose
from .groupoids import MissingParameterizerError, map_check, submersion_check
from .report import Check, Report, Status, verdict_check
from .structures import CosymplecticStructure
from .symbolic import DEFAULT_POLICY, SamplePolicy, is_zero


@dataclass(frozen=True, eq=False)
class Biaction:
    """Chart of triples (g, x, h) with g acting on x from the left and h from the right."""
    chart: Chart
    g: SmoothMap
    x: SmoothMap
    h: SmoothMap
    embed: SmoothMap | None = None   # into the full biaction chart, for leaves


@dataclass(frozen=True, eq=False)
class InverseWitness:
    """Evidence that an anchor induces a bijection on the orbit space of the other action.

    ``section`` is a right inverse of the anchor and ``connector`` picks, for
    each x, the arrow moving x to section(anchor(x)) under the other action.
    """
    section: SmoothMap
    connector: SmoothMap


@dataclass(frozen=True, eq=False)
class MoritaManifest:
    left: ActionPresentation           # G acting on M, anchored by rho
    right: ActionPresentation          # H^op acting on M, anchored by sigma
    C_M: CosymplecticStructure
    biaction: Biaction | None = None
    rho_witness: InverseWitness | None = None
    sigma_witness: InverseWitness | None = None
    surjective: bool = False
    name: str = ""


@dataclass(frozen=True, eq=False)
class LeafBimoduleSpec:
    leaf_m: LeafSpec
    leaf_g: LeafSpec
    leaf_h: LeafSpec
    left: RestrictedAction
    right: RestrictedAction
    biaction: Biaction | None = None
    surjective: bool = False
    orbit_closure: bool = False
    induced: bool = False


def _attested(id: str, anchor: str, flag: bool, text: str) -> Check:
    if flag:
        return Check(id, anchor, Status.ATTESTED, {}, (text,))
    return Check(id, anchor, Status.FAILED, {"message": f"not attested: {text}"})


def _commutation(m: MoritaManifest, B: Biaction, policy: SamplePolicy, id: str = "commute") -> list[Check]:
    L, R = m.left, m.right
    out = [map_check(f"{id}.left_fibered", "s(g) = rho(x)", compose(L.groupoid.s, B.g), compose(L.rho, B.x), policy),
           map_check(f"{id}.right_fibered", "t(h) = sigma(x)", compose(R.groupoid.s, B.h), compose(R.rho, B.x), policy)]
    lhs = L.act(B.g, R.act(B.h, B.x))
    rhs = R.act(B.h, L.act(B.g, B.x))
    out.append(map_check(id, "g(xh) = (gx)h", lhs, rhs, policy))
    return out


def _witness_checks(id: str, anchor_action: ActionPresentation, other: ActionPresentation,
                    w: InverseWitness, policy: SamplePolicy) -> list[Check]:
    anchor = anchor_action.rho
    M = anchor_action.module
    idM = SmoothMap.identity(M)
    out = [map_check(f"{id}.section", "anchor o section = id", compose(anchor, w.section),
                     SmoothMap.identity(anchor.target), policy),
           map_check(f"{id}.connector_fibered", "connector(x) acts on x",
                     compose(other.groupoid.s, w.connector), other.rho, policy),
           map_check(f"{id}.orbit", "connector(x) x = section(anchor(x))", other.act(w.connector, idM),
                     compose(w.section, anchor), policy)]
    return out


def check_morita_conditions(m: MoritaManifest, policy: SamplePolicy = DEFAULT_POLICY) -> Report:
    L, R = m.left, m.right
    r = Report()
    r.extend(check_cosymplectic_action(L, m.C_M, policy), "left.")
    r.extend(check_cosymplectic_action(R, m.C_M, policy), "right.")
    r.add(submersion_check("rho.submersion", "rho is a submersion", L.rho, policy))
    r.add(submersion_check("sigma.submersion", "sigma is a submersion", R.rho, policy))
    r.add(_attested("surjective", "rho, sigma surjective", m.surjective, "rho and sigma are surjective"))
    if m.biaction is None:
        raise MissingParameterizerError(f"{m.name or 'bimodule'}: commutation needs a biaction parameterizer")
    for c in _commutation(m, m.biaction, policy):
        r.add(c)
    r.add(map_check("orbit.rho", "rho(xh) = rho(x)", compose(L.rho, R.pairs.phi), compose(L.rho, R.pairs.pr_m),
                    policy))
    r.add(map_check("orbit.sigma", "sigma(gx) = sigma(x)", compose(R.rho, L.pairs.phi),
                    compose(R.rho, L.pairs.pr_m), policy))
    r.add(_attested("free_proper.left", "left action free and proper", L.free and L.proper,
                    "left action is free and proper"))
    r.add(_attested("free_proper.right", "right action free and proper", R.free and R.proper,
                    "right action is free and proper"))
    for id, anchor_action, other, w in (("induced.rho", L, R, m.rho_witness),
                                        ("induced.sigma", R, L, m.sigma_witness)):
        if w is None:
            r.skip(id, "induced map on orbits is a diffeomorphism", "no inverse witness supplied",
                   ("induced map on orbits is a diffeomorphism",))
        else:
            for c in _witness_checks(id, anchor_action, other, w, policy):
                r.add(c)
    return r


def check_leaf_bimodule(m: MoritaManifest, spec: LeafBimoduleSpec, policy: SamplePolicy = DEFAULT_POLICY) -> Report:
    L, R = m.left, m.right
    r = Report()
    Reeb = m.C_M.reeb(policy)
    for label, anchor in (("rho", L.rho), ("sigma", R.rho)):
        for name, comp in zip(anchor.target.coords, anchor.components):
            r.add(verdict_check(f"reeb.{label}.{name}", f"d {label}(R) = 0", is_zero(Reeb(comp), policy)))
    r.extend(check_leaf_restriction(L, m.C_M, spec.leaf_m, spec.leaf_g, spec.left, policy), "left.")
    r.extend(check_leaf_restriction(R, m.C_M, spec.leaf_m, spec.leaf_h, spec.right, policy), "right.")
    iS = spec.leaf_m.embedding.iota
    r.add(submersion_check("rho_S.submersion", "rho|S is a submersion", compose(L.rho, iS), policy))
    r.add(submersion_check("sigma_S.submersion", "sigma|S is a submersion", compose(R.rho, iS), policy))
    B = spec.biaction
    if B is None or B.embed is None or m.biaction is None:
        r.skip("commute", "g(xh) = (gx)h on the leaf", "no leaf biaction supplied",
               ("actions commute on the leaf",))
    else:
        full = m.biaction
        r.add(map_check("commute.embed_g", "iota_G o g_S = g o embed", compose(spec.leaf_g.embedding.iota, B.g),
                        compose(full.g, B.embed), policy))
        r.add(map_check("commute.embed_x", "iota_S o x_S = x o embed", compose(iS, B.x),
                        compose(full.x, B.embed), policy))
        r.add(map_check("commute.embed_h", "iota_H o h_S = h o embed", compose(spec.leaf_h.embedding.iota, B.h),
                        compose(full.h, B.embed), policy))
        lhs = L.act(full.g, R.act(full.h, full.x))
        rhs = R.act(full.h, L.act(full.g, full.x))
        r.add(map_check("commute", "g(xh) = (gx)h on the leaf", compose(lhs, B.embed), compose(rhs, B.embed), policy))
    r.add(map_check("orbit.rho", "rho(xh) = rho(x) on the leaf", compose(L.rho, compose(R.pairs.phi, spec.right.embed)),
                    compose(L.rho, compose(R.pairs.pr_m, spec.right.embed)), policy))
    r.add(map_check("orbit.sigma", "sigma(gx) = sigma(x) on the leaf",
                    compose(R.rho, compose(L.pairs.phi, spec.left.embed)),
                    compose(R.rho, compose(L.pairs.pr_m, spec.left.embed)), policy))
    r.add(_attested("surjective", "rho|S, sigma|S surjective", spec.surjective, "restricted anchors are surjective"))
    r.add(_attested("orbit_closure", "gx in S implies g in S_G", spec.orbit_closure,
                    "orbits through the leaf stay in the leaf groupoids"))
    r.add(_attested("induced", "induced maps on leaf orbits are diffeomorphisms", spec.induced,
                    "induced maps on leaf orbit spaces are diffeomorphisms"))
    return r
