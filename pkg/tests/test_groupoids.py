from __future__ import annotations

from dataclasses import replace

import pytest
import symengine as se

from cosym.forms import Chart, DifferentialForm, SmoothMap, product_chart
from cosym.groupoids import (
    GroupLaw,
    MissingParameterizerError,
    PairChart,
    abelian_group,
    action_groupoid,
    check_group_action,
    check_groupoid_axioms,
    check_multiplicative,
    opposite,
    pair_chart_of,
    trivial_central_extension,
)
from cosym.report import Status


def tstar(n: int):
    G = Chart(f"R{n}", tuple(f"g{i}" for i in range(1, n + 1)))
    O = Chart("dual", tuple(f"xi{i}" for i in range(1, n + 1)))
    S = action_groupoid(abelian_group(G), O, SmoothMap(product_chart([G, O], ["", ""]), O, O.symbols))
    omega = DifferentialForm.basis(S.arrows, "xi1", "g1")
    for i in range(2, n + 1):
        omega = omega + DifferentialForm.basis(S.arrows, f"xi{i}", f"g{i}")
    return replace(S, omega=omega)


def translation():
    G, O = Chart("R", ("g",)), Chart("line", ("x",))
    act = SmoothMap.from_named(product_chart([G, O], ["", ""]), O, {"x": "x + g"})
    return action_groupoid(abelian_group(G), O, act)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_abelian_action_groupoid_laws_exact(n):
    r = check_groupoid_axioms(tstar(n))
    assert r.passed
    assert all(c.status in (Status.PROVED, Status.NUMERIC) for c in r.checks)
    assert r.get("associativity").status == Status.PROVED


def test_translation_multiplication_formula():
    G = translation()
    assert check_groupoid_axioms(G).passed
    # (g, h + xi)(h, xi) = (g + h, xi) in (group, source) coordinates
    point = {se.Symbol("l.g"): se.Symbol("a"), se.Symbol("r.g"): se.Symbol("b"), se.Symbol("x"): se.Symbol("c")}
    pr1 = [c.subs(point) for c in G.pairs.pr1.components]
    pr2 = [c.subs(point) for c in G.pairs.pr2.components]
    prod = [c.subs(point) for c in G.pairs.m.components]
    a, b, c = se.symbols("a b c")
    assert se.expand(pr1[1] - (b + c)) == 0 and pr1[0] == a
    assert pr2 == [b, c]
    assert se.expand(prod[0] - (a + b)) == 0 and prod[1] == c


def test_trivial_action_has_equal_source_and_target():
    S = tstar(2)
    assert S.s.components == S.t.components


def test_group_over_a_point():
    G = Chart("R", ("g",))
    point = Chart("pt", ())
    act = SmoothMap(product_chart([G, point], ["", ""]), point, [])
    Gd = action_groupoid(abelian_group(G), point, act)
    assert Gd.objects.dim == 0
    assert check_groupoid_axioms(Gd).passed


def test_nonabelian_group_law():
    # affine group (a, b) . (c, d) = (a c, a d + b) on a > 0
    A = Chart("Aff", ("a", "b"))
    pc = pair_chart_of(A)
    mult = SmoothMap.from_named(pc, A, {"a": "l.a*r.a", "b": "l.a*r.b + l.b"})
    inv = SmoothMap.from_named(A, A, {"a": "1/a", "b": "-b/a"})
    law = GroupLaw(A, mult, (1, 0), inv)
    r = law.check()
    assert r.passed


def test_swapped_source_target_fails():
    G = translation()
    bad = replace(G, s=G.t, t=G.s)
    r = check_groupoid_axioms(bad)
    c = r.get("pairs.composable")
    assert c.status == Status.FAILED and c.detail["verdict"] == "NONZERO"


@pytest.mark.parametrize("n", [1, 2])
def test_extension_is_cosymplectic_groupoid(n):
    E = trivial_central_extension(tstar(n))
    assert E.arrows.dim == 2 * n + 1 == 2 * E.objects.dim + 1
    assert check_groupoid_axioms(E).passed
    r = check_multiplicative(E)
    assert r.passed
    assert r.get("mult.eta").status == Status.PROVED
    assert r.get("mult.omega").status == Status.PROVED


def test_extension_omega_mutant():
    E = trivial_central_extension(tstar(1))
    bad = replace(E, omega=E.omega + DifferentialForm.basis(E.arrows, "g1", "t"))
    c = check_multiplicative(bad).get("mult.omega")
    assert c.status == Status.FAILED and c.detail["verdict"] == "NONZERO" and "witness" in c.detail


def test_non_additive_extension_coordinate():
    E = trivial_central_extension(tstar(1))
    m = E.pairs.m
    comps = list(m.components)
    comps[-1] = se.Symbol("l.t") + 2 * se.Symbol("r.t")
    bad = replace(E, pairs=replace(E.pairs, m=SmoothMap(m.source, m.target, comps)))
    assert check_multiplicative(bad).get("mult.eta").status == Status.FAILED


def test_opposite_groupoid():
    E = trivial_central_extension(tstar(2))
    assert check_groupoid_axioms(opposite(E)).passed
    assert check_multiplicative(opposite(E)).passed


def test_missing_pairing_raises():
    S = tstar(1)
    bare = replace(S, pairs=PairChart(S.pairs.chart, S.pairs.pr1, S.pairs.pr2, S.pairs.m))
    with pytest.raises(MissingParameterizerError):
        check_groupoid_axioms(bare)


def test_missing_triples_skips_associativity_with_attestation():
    S = replace(tstar(1), triples=None)
    c = check_groupoid_axioms(S).get("associativity")
    assert c.status == Status.SKIPPED and c.attestations


def test_group_action_laws():
    G, O = Chart("R", ("g",)), Chart("line", ("x",))
    src = product_chart([G, O], ["", ""])
    good = SmoothMap.from_named(src, O, {"x": "x + g"})
    bad = SmoothMap.from_named(src, O, {"x": "x + 2*g + g^2"})
    assert check_group_action(abelian_group(G), O, good).passed
    assert check_group_action(abelian_group(G), O, bad).get("action.compose").status == Status.FAILED
