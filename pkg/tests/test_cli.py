from __future__ import annotations

import json

import pytest

from cosym.cli import main
from cosym.gallery import ENTRIES


def test_gallery_list(capsys):
    assert main(["gallery", "list"]) == 0
    out = capsys.readouterr().out
    for name in ENTRIES:
        assert name in out
    assert "flow_speed" in out


def test_gallery_run_json(capsys):
    assert main(["gallery", "run", "std3", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["status"] == "PASS"


def test_export_then_check(tmp_path, capsys):
    assert main(["gallery", "export", "rotation"]) == 0
    path = tmp_path / "rotation.json"
    path.write_text(capsys.readouterr().out)
    assert main(["check", str(path), "--select", "reduction", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["status"] == "PASS"
    assert all(c["id"].startswith("reduction.") for c in doc["checks"])


def test_check_json_byte_identical(tmp_path, capsys):
    main(["gallery", "export", "tstar1_ext"])
    path = tmp_path / "m.json"
    path.write_text(capsys.readouterr().out)
    main(["check", str(path), "--format", "json", "--seed", "3"])
    first = capsys.readouterr().out
    main(["check", str(path), "--format", "json", "--seed", "3"])
    assert capsys.readouterr().out == first
    assert "elapsed" not in first and "timing" not in first


def test_check_failing_manifest_exit_code(tmp_path, capsys):
    doc = ENTRIES["std3"].build()
    doc["structures"]["std3"]["omega"][0]["index"] = ["x", "z"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert main(["check", str(path)]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_check_load_errors(tmp_path, capsys):
    assert main(["check", str(tmp_path / "missing.json")]) == 2
    path = tmp_path / "broken.json"
    path.write_text("{\n  nope\n}")
    assert main(["check", str(path)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_named_mutant(capsys):
    assert main(["mutate", "volume_sign"]) == 0
    assert "harness" in capsys.readouterr().err


def test_adhoc_mutant(capsys):
    assert main(["mutate", "std3", "--target", "/structures/std3/omega/0/index", "--replace", '["x", "z"]',
                 "--expect", "structure.std3.volume"]) == 0
    assert main(["mutate", "std3", "--target", "/structures/std3/eta/0/coeff", "--replace", "2",
                 "--expect", "structure.std3.volume"]) == 1
    assert main(["mutate", "rotation", "--target", "/momentum/rotation/flow/map/z", "--replace", "z + 2*tau",
                 "--expect", "momentum.rotation.flow.equation"]) == 0


def test_identity_mutation_is_harness_error(capsys):
    assert main(["mutate", "std3", "--target", "/structures/std3/eta/0/coeff", "--replace", "1"]) == 2
    assert "unchanged" in capsys.readouterr().err


def test_unknown_names(capsys):
    assert main(["gallery", "run", "nope"]) == 2
    assert main(["mutate", "nope"]) == 2


def test_bad_arguments_exit():
    with pytest.raises(SystemExit):
        main(["check"])
