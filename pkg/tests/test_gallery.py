from __future__ import annotations

import pytest

from cosym.gallery import ENTRIES, MUTATIONS, MutationError, apply_edit, mutate_and_expect_failure, run_mutation
from cosym.report import Status


@pytest.mark.parametrize("name", sorted(ENTRIES))
def test_entry_matches_expectations(name):
    entry = ENTRIES[name]
    report = entry.run()
    assert entry.verify(report) == []
    assert report.status == entry.expect_status


@pytest.mark.parametrize("name", sorted(MUTATIONS))
def test_mutant_detected(name):
    report, harness = run_mutation(name)
    assert report.status == "FAIL"
    assert harness.passed, harness.to_text()


def test_identity_edit_rejected():
    entry = ENTRIES["std3"]
    with pytest.raises(MutationError, match="unchanged"):
        mutate_and_expect_failure(entry, [("/structures/std3/eta/0/coeff", "1")])


def test_missing_target_rejected():
    with pytest.raises(MutationError, match="does not exist"):
        mutate_and_expect_failure(ENTRIES["std3"], [("/structures/nope/eta", "1")])


def test_empty_edit_list_rejected():
    with pytest.raises(MutationError):
        mutate_and_expect_failure(ENTRIES["std3"], [])


def test_structured_target_needs_json():
    doc = ENTRIES["std3"].build()
    with pytest.raises(MutationError, match="JSON"):
        apply_edit(doc, "/structures/std3/eta", "not json")
    apply_edit(doc, "/structures/std3/eta", '[{"index": ["x"], "coeff": "1"}]')
    assert doc["structures"]["std3"]["eta"][0]["index"] == ["x"]


def test_undetected_mutant_fails_harness():
    # rescaling eta by a nonzero constant keeps a valid structure
    _, harness = mutate_and_expect_failure(ENTRIES["std3"], [("/structures/std3/eta/0/coeff", "2")],
                                           ["structure.std3.volume"])
    assert not harness.passed
    assert harness.get("detected").status == Status.FAILED


def test_doubled_flow_fails_only_at_flow_equation():
    report, harness = run_mutation("flow_speed")
    assert harness.passed
    failed = [c.id for c in report.failures() if c.status == Status.FAILED]
    assert failed and all(cid.endswith("flow.equation") or ".flow.equation." in cid for cid in failed)


def test_gallery_is_deterministic():
    a = ENTRIES["rotation"].run().dumps()
    b = ENTRIES["rotation"].run().dumps()
    assert a == b
