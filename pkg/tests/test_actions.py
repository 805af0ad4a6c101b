from __future__ import annotations

from dataclasses import replace

import pytest

from cosym.actions import (
    ActionPairs,
    ActionPresentation,
    ActionTriples,
    EmbeddingSpec,
    check_action_axioms,
    check_cosymplectic_action,
    check_graph,
    check_leaf_restriction,
    check_ll_submanifold,
    check_multiplication_graph,
    check_reeb_flow,
    graph_structure,
    legendrian_residual,
    reeb_flow_extension,
    right_self_action,
    self_action,
    self_structure,
)
from cosym.forms import Chart, DifferentialForm, SmoothMap, form_is_zero
from cosym.gallery import ENTRIES
from cosym.groupoids import abelian_group, action_groupoid, check_multiplicative, trivial_central_extension
from cosym.report import Status
from cosym.symbolic import VerdictKind

from test_groupoids import tstar, translation


def test_ll_x_axis(std3):
    U = Chart("U", ("u",))
    E = EmbeddingSpec(U, std3.chart, SmoothMap.from_named(U, std3.chart, {"x": "u", "y": "0", "z": "0"}))
    assert check_ll_submanifold(E, std3).passed


def test_ll_z_axis_not_legendrian(std3):
    U = Chart("U", ("u",))
    E = EmbeddingSpec(U, std3.chart, SmoothMap.from_named(U, std3.chart, {"x": "0", "y": "0", "z": "u"}))
    r = check_ll_submanifold(E, std3)
    assert r.get("eta").status == Status.FAILED
    assert r.get("omega").ok


def test_ll_point_fails_dimension(std3):
    pt = Chart("pt", ())
    E = EmbeddingSpec(pt, std3.chart, SmoothMap.constant(pt, std3.chart, [0, 0, 0]))
    r = check_ll_submanifold(E, std3)
    assert r.get("dimension").status == Status.FAILED
    assert r.get("eta").ok and r.get("omega").ok


def translation_on_r3():
    """R acting on R^3 by x -> x + g, anchored by the x coordinate."""
    G = translation()                       # arrows (g, x), s = x, t = x + g
    M = Chart("R3", ("x", "y", "z"))
    rho = SmoothMap.from_named(M, G.objects, {"x": "x"})
    A = Chart("A", ("g", "x", "y", "z"))
    pr_g = SmoothMap.from_named(A, G.arrows, {"g": "g", "x": "x"})
    phi = SmoothMap.from_named(A, M, {"x": "x + g", "y": "y", "z": "z"})
    src = Chart("GxM", ("l.g", "l.x", "r.x", "r.y", "r.z"))
    pairing = SmoothMap.from_named(src, A, {"g": "l.g", "x": "r.x", "y": "r.y", "z": "r.z"})
    T = Chart("T", ("a.g", "b.g", "x", "y", "z"))
    triples = ActionTriples(T, SmoothMap.from_named(T, G.arrows, {"g": "a.g", "x": "x + b.g"}),
                            SmoothMap.from_named(T, G.arrows, {"g": "b.g", "x": "x"}),
                            SmoothMap.identity(M) @ SmoothMap.from_named(T, M, {"x": "x", "y": "y", "z": "z"}))
    pairs = ActionPairs(A, pr_g, SmoothMap.from_named(A, M, {"x": "x", "y": "y", "z": "z"}), phi, pairing)
    return ActionPresentation(G, M, rho, pairs, triples, name="translation")


def test_translation_action_axioms():
    r = check_action_axioms(translation_on_r3())
    assert r.passed, [c.id for c in r.failures()]
    assert r.get("associativity").status == Status.PROVED


def test_action_shift_mutant():
    A = translation_on_r3()
    phi = A.pairs.phi
    shifted = SmoothMap(phi.source, phi.target, [phi.components[0] + 1] + list(phi.components[1:]))
    bad = replace(A, pairs=replace(A.pairs, phi=shifted))
    r = check_action_axioms(bad)
    assert r.get("unit").status == Status.FAILED
    assert r.get("unit").detail["verdict"] == "NONZERO"


ISOS = [{"x": "x", "y": "y", "z": "z"},
        {"x": "y", "y": "-x", "z": "z"},
        {"x": "x", "y": "y + x^2", "z": "z + 1"}]
NON_ISOS = [{"x": "2*x", "y": "y", "z": "z"},
            {"x": "x", "y": "y", "z": "2*z"},
            {"x": "y", "y": "x", "z": "z"}]


@pytest.mark.parametrize("table", ISOS)
def test_iso_graphs_are_ll(std3, table):
    f = SmoothMap.from_named(std3.chart, std3.chart, table)
    assert check_graph(*graph_structure("iso", std3, std3, f)).passed


@pytest.mark.parametrize("table", NON_ISOS)
def test_non_iso_graphs_fail(std3, table):
    f = SmoothMap.from_named(std3.chart, std3.chart, table)
    r = check_graph(*graph_structure("iso", std3, std3, f))
    assert not r.passed
    assert any(c.id.startswith("ll.") and c.status == Status.FAILED for c in r.checks)


def test_unknown_graph_kind(std3):
    with pytest.raises(ValueError):
        graph_structure("fibre", std3)


@pytest.mark.parametrize("n", [1, 2])
def test_multiplication_graph_agrees_with_multiplicativity(n):
    E = trivial_central_extension(tstar(n))
    r = check_multiplication_graph(E)
    assert r.passed and check_multiplicative(E).passed
    assert r.get("dimension_identity").status == Status.PROVED


@pytest.mark.parametrize("n", [1, 2])
def test_self_actions(n):
    E = trivial_central_extension(tstar(n))
    C = self_structure(E)
    for A in (self_action(E), right_self_action(E)):
        r = check_cosymplectic_action(A, C)
        assert r.passed, [c.id for c in r.failures()]
        assert form_is_zero(legendrian_residual(A, C)).kind == VerdictKind.EXACT_ZERO


def test_self_action_one_object_group():
    # R over a point: the extension of the trivial group, eta = dt, omega = 0
    e, pt = Chart("e", ()), Chart("pt", ())
    S = action_groupoid(abelian_group(e), pt, SmoothMap(Chart("", ()), pt, []))
    E = trivial_central_extension(replace(S, omega=DifferentialForm.zero(S.arrows, 2)))
    assert E.arrows.dim == 1
    r = check_cosymplectic_action(self_action(E), self_structure(E))
    assert r.passed, [c.id for c in r.failures()]


def test_self_action_non_multiplicative_mutant():
    E = trivial_central_extension(tstar(1))
    bad = replace(E, omega=E.omega + DifferentialForm.basis(E.arrows, "g1", "t"))
    r = check_cosymplectic_action(self_action(bad), self_structure(bad), preconditions=False)
    assert any(c.id.startswith("graph.ll") and c.status == Status.FAILED for c in r.checks)


def _rotation():
    m = ENTRIES["rotation"].manifest()
    spec = m.flows["rotation"]
    C = m.momenta["rotation"][1]
    return m, spec, C


def test_rotation_action_and_flow():
    m, spec, C = _rotation()
    assert check_reeb_flow(spec, C).passed
    A = reeb_flow_extension(spec, C)
    r = check_cosymplectic_action(A, C)
    assert r.passed
    ambient, E = graph_structure("action", A, C)
    assert ambient.chart.dim == 15 == 2 * E.source.dim + 1


def test_rotation_rho_plus_z_mutant():
    m, spec, C = _rotation()
    A = reeb_flow_extension(spec, C)
    rho = SmoothMap(A.rho.source, A.rho.target, [A.rho.components[0] + A.module.symbols[-1]])
    r = check_cosymplectic_action(replace(A, rho=rho), C, preconditions=False)
    c = r.get("reeb_vertical.xi")
    assert c.status == Status.FAILED and c.detail["value"] == pytest.approx(1.0)


def test_flow_speed_mutant():
    m, spec, C = _rotation()
    F = spec.flow
    fast = SmoothMap(F.source, F.target, list(F.components[:-1]) + [F.components[-1] + F.source.symbols[0]])
    r = check_reeb_flow(replace(spec, flow=fast), C)
    assert r.get("flow.initial").ok
    assert r.get("flow.equation").status == Status.FAILED


def test_rotation_leaf_restriction_and_scaled_mutant():
    m, _, C = _rotation()
    aname, leaf_m, leaf_g, R = m.leaf_actions["rot_z0"]
    A = m.actions[aname]
    assert check_leaf_restriction(A, C, leaf_m, leaf_g, R).passed
    bad = check_leaf_restriction(A, C, leaf_m.scaled(2), leaf_g, R)
    assert bad.get("lagrangian").status == Status.FAILED


def test_trivial_leaf_of_trivial_action(std3):
    m = ENTRIES["reeb_flow_trivial"].manifest()
    A = m.actions["flow"]
    C = m.action_structures["flow"]
    assert check_cosymplectic_action(A, C).passed
