from __future__ import annotations

import time
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cosym.forms import Chart, DifferentialForm, SmoothMap, VectorField, all_indices, field_is_zero, form_is_zero, pullback
from cosym.gallery import ENTRIES
from cosym.linalg import InconsistentSystemError
from cosym.reduction import (
    check_descent,
    descend_reeb,
    roundtrip_identity,
    verify_albert_reduction,
    verify_leaf_reduction,
    verify_reduction,
)
from cosym.report import Status
from cosym.structures import check_cosymplectic
from cosym.symbolic import VerdictKind, random_polynomial


@pytest.fixture(scope="module")
def rotation():
    return ENTRIES["rotation"].manifest()


def _exact(a) -> bool:
    return form_is_zero(a).kind == VerdictKind.EXACT_ZERO


def test_flagship_reduction(rotation):
    rm = rotation.reductions["groupoid_route"]["manifest"]
    start = time.perf_counter()
    reduced, report = verify_reduction(rm)
    assert time.perf_counter() - start < 10
    assert report.passed, [c.id for c in report.failures()]
    Q = reduced.chart
    assert Q.coords == ("x2", "y2", "z")
    assert _exact(reduced.eta - DifferentialForm.basis(Q, "z"))
    assert _exact(reduced.omega - DifferentialForm.basis(Q, "x2", "y2"))
    assert field_is_zero(reduced.reeb - VectorField.coordinate(Q, "z")).kind == VerdictKind.EXACT_ZERO
    assert report.get("descent.eta").ok and report.get("descent.omega").ok
    assert check_cosymplectic(reduced.eta, reduced.omega).passed


def test_albert_route_agrees(rotation):
    entry = rotation.reductions["albert_route"]
    reduced, report = verify_albert_reduction(entry["flow"], entry["C"], entry["geometry"])
    assert report.passed
    for key in ("routes_agree.eta", "routes_agree.omega", "routes_agree.reeb"):
        assert report.get(key).status == Status.PROVED
    assert _exact(reduced.omega - DifferentialForm.basis(reduced.chart, "x2", "y2"))


def test_sign_mutant_momentum_gates_reduction(rotation):
    entry = rotation.reductions["albert_route"]
    spec = entry["flow"]
    base = spec.base
    neg = SmoothMap(base.mu.source, base.mu.target, [-c for c in base.mu.components])
    bad = replace(spec, base=replace(base, mu=neg))
    reduced, report = verify_albert_reduction(bad, entry["C"], entry["geometry"])
    assert reduced is None
    assert report.get("albert.hamiltonian.xi").status == Status.FAILED
    assert report.get("group_route").status == Status.SKIPPED


def test_section_mutant(rotation):
    rm = rotation.reductions["groupoid_route"]["manifest"]
    g = rm.geometry
    s = g.sigma
    bad_sigma = SmoothMap(s.source, s.target, list(s.components[:-1]) + [s.components[-1] + 1])
    reduced, report = verify_reduction(replace(rm, geometry=replace(g, sigma=bad_sigma)))
    assert reduced is None
    c = report.get("pre.section")
    assert c.status == Status.FAILED and c.detail["verdict"] == "NONZERO"
    assert report.get("restrict").status == Status.SKIPPED


def test_transverse_field_does_not_descend(rotation):
    rm = rotation.reductions["groupoid_route"]["manifest"]
    C = rm.C_M
    bad = C.reeb() + VectorField.coordinate(C.chart, "x1")
    with pytest.raises(InconsistentSystemError):
        descend_reeb(rm.geometry, bad)


def test_identity_reduction():
    m = ENTRIES["reeb_flow_trivial"].manifest()
    rm = m.reductions["identity"]["manifest"]
    reduced, report = verify_reduction(rm)
    assert report.passed
    C = rm.C_M
    Q = reduced.chart
    assert _exact(reduced.eta - DifferentialForm.basis(Q, "z"))
    assert _exact(reduced.omega - DifferentialForm.basis(Q, "x", "y"))
    assert field_is_zero(descend_reeb(rm.geometry, C.reeb()) - VectorField.coordinate(Q, "z")).is_zero


def test_identity_albert_route():
    m = ENTRIES["reeb_flow_trivial"].manifest()
    e = m.reductions["identity_albert"]
    reduced, report = verify_albert_reduction(e["flow"], e["C"], e["geometry"])
    assert report.passed and reduced.chart.dim == 3


def test_leaf_reduction_and_scaled_mutant(rotation):
    entry = rotation.reductions["groupoid_route"]
    rm = entry["manifest"]
    ls = entry["leaves"][0]
    report = verify_leaf_reduction(rm, ls)
    assert report.passed
    assert report.get("match").ok
    bad = verify_leaf_reduction(rm, ls.scaled(2))
    assert bad.get("match").status == Status.FAILED


def test_identity_leaf_reduction():
    m = ENTRIES["reeb_flow_trivial"].manifest()
    entry = m.reductions["identity"]
    assert verify_leaf_reduction(entry["manifest"], entry["leaves"][0]).passed


PERTURBATIONS = [("eta", ["x2"], "1"), ("eta", ["z"], "x2"), ("eta", ["y2"], "z^2"),
                 ("omega", ["x2", "z"], "1"), ("omega", ["x2", "y2"], "y2")]


@pytest.mark.parametrize("which,index,coeff", PERTURBATIONS)
def test_uniqueness_perturbation_detected(rotation, which, index, coeff):
    rm = rotation.reductions["groupoid_route"]["manifest"]
    reduced, _ = verify_reduction(rm, gate=False)
    g = rm.geometry
    eta_L, omega_L = pullback(g.level.iota, rm.C_M.eta), pullback(g.level.iota, rm.C_M.omega)
    delta = DifferentialForm.from_named(reduced.chart, len(index), [(index, coeff)])
    eta_q = reduced.eta + delta if which == "eta" else reduced.eta
    omega_q = reduced.omega + delta if which == "omega" else reduced.omega
    r = check_descent(g, eta_L, omega_L, eta_q, omega_q)
    c = r.get(f"descent.{which}")
    assert c.status == Status.FAILED and c.detail["verdict"] == "NONZERO" and "witness" in c.detail


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 3))
def test_sigma_roundtrip_injectivity(seed, degree):
    m = ENTRIES["rotation"].manifest()
    g = m.reductions["groupoid_route"]["manifest"].geometry
    rng = np.random.default_rng(seed)
    Q = g.quotient
    terms = {idx: random_polynomial(list(Q.coords), rng, 2, 3) for idx in all_indices(Q, degree)}
    assert roundtrip_identity(g, DifferentialForm(Q, degree, terms)).is_zero
