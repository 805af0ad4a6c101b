"""Acceptance suite. Each test prints one PASS/FAIL line for its criterion."""
from __future__ import annotations

import time

import numpy as np
import pytest

from cosym.actions import (
    check_cosymplectic_action,
    check_multiplication_graph,
    check_reeb_flow,
    reeb_flow_extension,
    self_action,
    self_structure,
)
from cosym.forms import (
    Chart,
    DifferentialForm,
    SmoothMap,
    VectorField,
    all_indices,
    compose,
    d,
    field_is_zero,
    form_is_zero,
    pullback,
    wedge,
)
from cosym.gallery import ENTRIES, run_mutation
from cosym.groupoids import check_multiplicative
from cosym.manifest import run_checks
from cosym.morita import check_leaf_bimodule, check_morita_conditions
from cosym.reduction import check_descent, roundtrip_identity, verify_albert_reduction, verify_reduction
from cosym.report import Status
from cosym.structures import check_cosymplectic, product_volume_comparison, structure_suite
from cosym.symbolic import VerdictKind, random_polynomial

EXACT = VerdictKind.EXACT_ZERO


def verdict(capsys, number: int, title: str, results: dict[str, bool], note: str = "") -> None:
    ok = all(results.values())
    bad = [k for k, v in results.items() if not v]
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}"
    if note:
        line += f"  ({note})"
    if bad:
        line += f"  failing: {', '.join(bad)}"
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


def _chart(n: int, tag: str) -> Chart:
    return Chart(f"{tag}{n}", tuple(f"{tag}{i}" for i in range(n)))


def _form(C: Chart, k: int, rng) -> DifferentialForm:
    return DifferentialForm(C, k, {i: random_polynomial(list(C.coords), rng, 2, 2) for i in all_indices(C, k)})


def _map(A: Chart, B: Chart, rng) -> SmoothMap:
    return SmoothMap(A, B, [random_polynomial(list(A.coords), rng, 2, 2) for _ in B.coords])


def _dim(rng) -> int:
    return int(rng.integers(1, 6))


def _deg(rng, n: int) -> int:
    return int(rng.integers(0, min(2, n) + 1))


def test_criterion_1_exterior_calculus_laws(capsys):
    rng = np.random.default_rng(2024)
    counts = dict.fromkeys(("d_squared", "graded_commutativity", "functoriality", "naturality"), 0)
    start = time.perf_counter()
    for _ in range(1000):
        C = _chart(_dim(rng), "u")
        counts["d_squared"] += form_is_zero(d(d(_form(C, _deg(rng, C.dim), rng)))).kind == EXACT
    for _ in range(1000):
        C = _chart(_dim(rng), "u")
        a, b = _form(C, _deg(rng, C.dim), rng), _form(C, _deg(rng, C.dim), rng)
        sign = -1 if (a.degree * b.degree) % 2 else 1
        counts["graded_commutativity"] += form_is_zero(wedge(a, b) - wedge(b, a).scale(sign)).kind == EXACT
    for _ in range(1000):
        A, B, C = _chart(_dim(rng), "a"), _chart(_dim(rng), "b"), _chart(_dim(rng), "c")
        G, F = _map(A, B, rng), _map(B, C, rng)
        a = _form(C, _deg(rng, C.dim), rng)
        counts["functoriality"] += form_is_zero(pullback(compose(F, G), a) - pullback(G, pullback(F, a))).kind == EXACT
    for _ in range(1000):
        A, B = _chart(_dim(rng), "a"), _chart(_dim(rng), "b")
        F, a = _map(A, B, rng), _form(B, _deg(rng, B.dim), rng)
        counts["naturality"] += form_is_zero(pullback(F, d(a)) - d(pullback(F, a))).kind == EXACT
    elapsed = time.perf_counter() - start
    results = {f"{k} 1000/1000 exact": v == 1000 for k, v in counts.items()}
    results["runtime < 30 s"] = elapsed < 30
    verdict(capsys, 1, "exterior-calculus laws", results, f"{elapsed:.1f} s")


def test_criterion_2_calculus_suite(capsys):
    results = {}
    for entry, name in (("std3", "std3"), ("std5", "std5"), ("skew3", "skew3"), ("product", "prod")):
        C = ENTRIES[entry].manifest().structures[name]
        r = structure_suite(C, count=20)
        results[f"{entry} suite"] = r.passed and all(
            r.get(k).status in (Status.PROVED, Status.NUMERIC)
            for k in ("reeb.i_R_omega", "reeb.eta_R", "sharp_flat", "hamiltonian.omega", "hamiltonian.eta",
                      "hamiltonian.pi_sharp", "poisson.jacobi"))
    C = ENTRIES["skew3"].manifest().structures["skew3"]
    expected = VectorField.from_named(C.chart, {"y": "-1", "z": "1"})
    results["skew3 Reeb = -dy + dz exactly"] = field_is_zero(C.reeb() - expected).kind == EXACT
    verdict(capsys, 2, "calculus suite on STD3, STD5, SKEW3, product", results)


def test_criterion_3_product_volume(capsys):
    m = ENTRIES["product"].manifest()
    a, b = m.products["prod"]
    info = product_volume_comparison(a, b)
    r = run_checks(m, ["structure"])
    results = {
        "nonvanishing": bool(info["nonvanishing"]) and r.get("structure.prod.volume").status == Status.PROVED,
        "coefficient reported as INFO": r.get("structure.prod.product_volume").status == Status.INFO,
    }
    note = (f"computed {info['computed_scalar']}, stated {info['stated_coefficient']}, "
            f"multinomial {info['multinomial_coefficient']}")
    verdict(capsys, 3, "product volume", results, note)


def test_criterion_4_multiplicativity_and_graph(capsys):
    results = {}
    for n in (1, 2):
        G = ENTRIES[f"tstar{n}_ext"].manifest().groupoids[f"ext{n}"]
        graph = check_multiplication_graph(G)
        results[f"n={n} multiplicative"] = check_multiplicative(G).passed
        results[f"n={n} graph LL"] = graph.passed
        dim_check = graph.get("dimension_identity")
        results[f"n={n} dimension identity"] = dim_check.status == Status.PROVED
    for name in ("ext_omega_extra", "ext_omega_weight", "ext_eta_extra", "ext_mult_t", "ext_mult_g"):
        report, harness = run_mutation(name)
        failed = [c for c in report.checks if c.status == Status.FAILED]
        mult = any(".mult." in c.id and c.detail.get("verdict") == "NONZERO" for c in failed)
        graph = any(".graph.ll." in c.id and c.detail.get("verdict") == "NONZERO" for c in failed)
        results[f"{name} fails both"] = harness.passed and mult and graph
    verdict(capsys, 4, "multiplicativity <=> multiplication graph", results)


def test_criterion_5_flagship_reduction(capsys):
    m = ENTRIES["rotation"].manifest()
    start = time.perf_counter()
    rm = m.reductions["groupoid_route"]["manifest"]
    reduced, report = verify_reduction(rm)
    al = m.reductions["albert_route"]
    reduced_a, report_a = verify_albert_reduction(al["flow"], al["C"], al["geometry"])
    elapsed = time.perf_counter() - start
    Q = reduced.chart
    exact = lambda a: form_is_zero(a).kind == EXACT
    results = {
        "groupoid route passes": report.passed,
        "eta = dz": exact(reduced.eta - DifferentialForm.basis(Q, "z")),
        "omega = dx2^dy2": exact(reduced.omega - DifferentialForm.basis(Q, "x2", "y2")),
        "descent zero-class": report.get("descent.eta").ok and report.get("descent.omega").ok,
        "R = d/dz": field_is_zero(reduced.reeb - VectorField.coordinate(Q, "z")).kind == EXACT,
        "quotient cosymplectic": check_cosymplectic(reduced.eta, reduced.omega).passed,
        "albert route passes": report_a.passed,
        "routes agree": exact(reduced_a.eta - reduced.eta) and exact(reduced_a.omega - reduced.omega),
        "runtime < 10 s": elapsed < 10,
    }
    verdict(capsys, 5, "rotation reduction", results, f"{elapsed:.2f} s")


def test_criterion_6_uniqueness(capsys):
    m = ENTRIES["rotation"].manifest()
    rm = m.reductions["groupoid_route"]["manifest"]
    reduced, _ = verify_reduction(rm)
    g = rm.geometry
    Q = reduced.chart
    eta_L, omega_L = pullback(g.level.iota, rm.C_M.eta), pullback(g.level.iota, rm.C_M.omega)
    perturbations = [DifferentialForm.from_named(Q, 1, [(["x2"], "1")]),
                     DifferentialForm.from_named(Q, 1, [(["z"], "x2")]),
                     DifferentialForm.from_named(Q, 1, [(["y2"], "z^2")]),
                     DifferentialForm.from_named(Q, 1, [(["x2"], "y2"), (["z"], "1")])]
    results = {}
    for i, delta in enumerate(perturbations):
        c = check_descent(g, eta_L, omega_L, reduced.eta + delta, reduced.omega).get("descent.eta")
        results[f"perturbation {i} caught"] = c.status == Status.FAILED and "witness" in c.detail
    rng = np.random.default_rng(6)
    ok = 0
    for i in range(20):
        k = i % 4
        alpha = DifferentialForm(Q, k, {idx: random_polynomial(list(Q.coords), rng, 2, 3) for idx in all_indices(Q, k)})
        ok += roundtrip_identity(g, alpha).is_zero
    results["sigma round trip 20/20"] = ok == 20
    verdict(capsys, 6, "uniqueness of the reduced structure", results)


def test_criterion_7_self_action_and_flow(capsys):
    results = {}
    for name, entry in ENTRIES.items():
        for gname, G in entry.manifest().groupoids.items():
            if G.eta is None or G.omega is None:
                continue
            r = check_cosymplectic_action(self_action(G), self_structure(G))
            results[f"self_action {name}.{gname}"] = r.passed
    m = ENTRIES["rotation"].manifest()
    flow = m.flows["rotation"]
    C = m.momenta["rotation"][1]
    results["flow equation"] = check_reeb_flow(flow, C).get("flow.equation").status == Status.PROVED
    A = reeb_flow_extension(flow, C)
    results["reeb_flow_extension action"] = check_cosymplectic_action(A, C).passed
    report, harness = run_mutation("flow_speed")
    failed = {c.id for c in report.checks if c.status == Status.FAILED}
    results["doubled flow fails exactly at flow.equation"] = harness.passed and failed and all(
        cid.endswith(".flow.equation") for cid in failed)
    verdict(capsys, 7, "self-actions and Reeb-flow extension", results, f"{len(results) - 3} groupoids")


def test_criterion_8_morita_reflexivity(capsys):
    mm, leaf = ENTRIES["self_bimodule"].manifest().morita["self"]
    base = check_morita_conditions(mm)
    proved_class = [c for c in base.checks if c.status not in (Status.ATTESTED, Status.SKIPPED, Status.INFO)]
    lr = check_leaf_bimodule(mm, leaf)
    results = {
        "bimodule conditions": base.passed and all(c.ok for c in proved_class),
        "leaf bimodule": lr.passed,
        "d rho(R) zero-class": all(c.ok for c in lr.checks if c.id.startswith("reeb.rho.")),
        "d sigma(R) zero-class": all(c.ok for c in lr.checks if c.id.startswith("reeb.sigma.")),
    }
    verdict(capsys, 8, "Morita reflexivity", results)


def test_criterion_9_determinism_and_ledger(capsys):
    start = time.perf_counter()
    reports = {name: e.run() for name, e in ENTRIES.items()}
    elapsed = time.perf_counter() - start
    results = {"gallery matches expectations": all(not ENTRIES[n].verify(r) for n, r in reports.items())}
    results["byte-identical JSON"] = all(ENTRIES[n].run().dumps() == r.dumps() for n, r in reports.items())
    honest = True
    for r in reports.values():
        listed = {(row["check"], row["attestation"]) for row in r.ledger()}
        for c in r.checks:
            if c.status == Status.ATTESTED and not c.attestations:
                honest = False
            if c.ok and any((c.id, a) not in listed for a in c.attestations):
                honest = False
    results["attestations in ledger"] = honest
    results["gallery < 60 s"] = elapsed < 60
    verdict(capsys, 9, "determinism and honesty", results, f"gallery {elapsed:.1f} s")
