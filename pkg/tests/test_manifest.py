from __future__ import annotations

import copy
import json

import pytest

from cosym import ManifestError, load_manifest, run_checks
from cosym.gallery import ENTRIES
from cosym.manifest import export_manifest, parse_manifest
from cosym.report import Status


def _std3() -> dict:
    return ENTRIES["std3"].build()


def test_minimal_manifest_passes():
    r = run_checks(parse_manifest(_std3()))
    assert r.status == "PASS"
    assert r.get("structure.std3.volume").status == Status.PROVED


def test_unknown_coordinate_is_named():
    doc = _std3()
    doc["structures"]["std3"]["eta"][0]["index"] = ["w"]
    with pytest.raises(ManifestError, match="w"):
        parse_manifest(doc)


def test_unknown_symbol_in_coefficient():
    doc = _std3()
    doc["structures"]["std3"]["omega"][0]["coeff"] = "q"
    with pytest.raises(ManifestError, match="q"):
        parse_manifest(doc)


def test_bad_version():
    doc = _std3()
    doc["version"] = 7
    with pytest.raises(ManifestError, match="version"):
        parse_manifest(doc)


def test_unknown_section_rejected():
    doc = _std3()
    doc["servers"] = {}
    with pytest.raises(ManifestError):
        parse_manifest(doc)


def test_dangling_groupoid_reference():
    doc = ENTRIES["self_action"].build()
    actions = doc["actions"]
    name = next(iter(actions))
    spec = actions[name]
    key = next(k for k in ("self_action", "right_self_action", "groupoid") if k in spec)
    spec[key] = "nowhere"
    with pytest.raises(ManifestError, match="nowhere"):
        parse_manifest(doc)


def test_json_error_reports_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "version": 1,\n  "structures": {,}\n}\n')
    with pytest.raises(ManifestError) as info:
        load_manifest(p)
    assert info.value.line == 3
    assert info.value.column is not None


def test_empty_selection_is_vacuous():
    r = run_checks(parse_manifest(_std3()), [])
    assert r.status == "VACUOUS"
    assert r.checks == []


def test_selection_filters_sections():
    m = ENTRIES["rotation"].manifest()
    r = run_checks(m, ["structure"])
    assert r.checks and all(c.id.startswith("structure.") for c in r.checks)


def test_failed_check_fails_report():
    doc = _std3()
    doc["structures"]["std3"]["omega"][0]["index"] = ["x", "z"]
    r = run_checks(parse_manifest(doc))
    assert r.status == "FAIL"
    c = r.get("structure.std3.volume")
    assert c.status == Status.FAILED and c.detail["volume_coefficient"] == "0"


@pytest.mark.parametrize("name", ["rotation", "self_bimodule", "tstar2_ext", "reeb_flow_trivial"])
def test_export_round_trip(name, tmp_path):
    entry = ENTRIES[name]
    m = entry.manifest()
    exported = export_manifest(m)
    p = tmp_path / "m.json"
    p.write_text(json.dumps(exported))
    again = load_manifest(p)
    a = run_checks(m, list(entry.selection))
    b = run_checks(again, list(entry.selection))
    assert b.status == a.status == "PASS"
    assert [(c.id, c.status) for c in a.checks] == [(c.id, c.status) for c in b.checks]


def test_export_is_explicit():
    exported = export_manifest(ENTRIES["tstar1_ext"].manifest())
    for spec in exported["groupoids"].values():
        assert "extension" not in spec and "action_groupoid" not in spec


def test_report_json_deterministic():
    m = ENTRIES["rotation"].manifest()
    assert run_checks(m).dumps() == run_checks(copy.deepcopy(ENTRIES["rotation"].manifest())).dumps()


def test_exception_becomes_error_entry():
    doc = ENTRIES["self_bimodule"].build()
    spec = doc["morita"]["self"]
    spec.pop("biaction", None)
    r = run_checks(parse_manifest(doc), ["morita"])
    assert any(c.status == Status.ERROR for c in r.checks)
    assert r.status == "FAIL"
