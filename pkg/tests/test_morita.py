from __future__ import annotations

from dataclasses import replace

import pytest

from cosym.forms import SmoothMap
from cosym.gallery import ENTRIES, run_mutation
from cosym.groupoids import MissingParameterizerError
from cosym.morita import check_leaf_bimodule, check_morita_conditions
from cosym.report import Status


@pytest.fixture(scope="module")
def self_bimodule():
    return ENTRIES["self_bimodule"].manifest().morita["self"]


def test_self_bimodule_conditions(self_bimodule):
    mm, _ = self_bimodule
    r = check_morita_conditions(mm)
    assert r.passed, [c.id for c in r.failures()]
    for key in ("commute", "orbit.rho", "orbit.sigma", "induced.rho.orbit", "induced.sigma.orbit"):
        assert r.get(key).status == Status.PROVED
    assert r.get("surjective").status == Status.ATTESTED


def test_leaf_bimodule(self_bimodule):
    mm, leaf = self_bimodule
    r = check_leaf_bimodule(mm, leaf)
    assert r.passed
    assert r.get("reeb.rho.xi1").status == Status.PROVED
    assert r.get("reeb.sigma.xi1").status == Status.PROVED
    assert r.get("commute").status == Status.PROVED


def test_leaf_without_biaction_is_skipped(self_bimodule):
    mm, leaf = self_bimodule
    r = check_leaf_bimodule(mm, replace(leaf, biaction=None))
    assert r.get("commute").status == Status.SKIPPED


def test_missing_biaction_raises(self_bimodule):
    mm, _ = self_bimodule
    with pytest.raises(MissingParameterizerError):
        check_morita_conditions(replace(mm, biaction=None))


def test_missing_witness_is_skipped(self_bimodule):
    mm, _ = self_bimodule
    r = check_morita_conditions(replace(mm, sigma_witness=None))
    assert r.get("induced.sigma").status == Status.SKIPPED
    assert r.get("induced.rho.orbit").status == Status.PROVED


def test_missing_surjectivity_attestation_fails(self_bimodule):
    mm, _ = self_bimodule
    r = check_morita_conditions(replace(mm, surjective=False))
    assert r.get("surjective").status == Status.FAILED


def test_bad_section_witness(self_bimodule):
    mm, _ = self_bimodule
    w = mm.rho_witness
    s = w.section
    shifted = SmoothMap(s.source, s.target, [s.components[0], s.components[1] + 1, s.components[2]])
    r = check_morita_conditions(replace(mm, rho_witness=replace(w, section=shifted)))
    assert r.get("induced.rho.section").status == Status.FAILED


def test_sigma_mutant_detected():
    report, harness = run_mutation("morita_sigma")
    assert harness.passed
    assert report.get("morita.self.orbit.sigma").status == Status.FAILED
