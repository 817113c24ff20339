import json

import pytest

from branchgroups.cli import (EXIT_FAIL, EXIT_PASS, EXIT_USAGE, SpecError,
                              instance_from_dict, run)


def test_info_preset(capsys):
    assert run(["info", "--preset", "gs3"]) == EXIT_PASS
    payload = json.loads(capsys.readouterr().out)
    assert payload["torsion"] is True
    assert payload["branch_type"] == "OverDerived"
    assert payload["congruence_subgroup_property"] is True


def test_quotient_depth_one(capsys):
    assert run(["quotient", "--preset", "fg3", "--depth", "1"]) == EXIT_PASS
    payload = json.loads(capsys.readouterr().out)
    assert payload["order_exponent"] == 1


def test_stab_dims_csv(tmp_path, capsys):
    out = tmp_path / "dims.csv"
    assert run(["stab-dims", "--preset", "fg3", "--depth", "3",
                "--csv", str(out)]) == EXIT_PASS
    assert out.read_text().splitlines() == ["m,t(m)", "0,1", "1,3", "2,6"]


def test_chain_command(capsys):
    assert run(["chain", "--preset", "fg3", "--level", "2",
                "--depth", "4"]) == EXIT_PASS
    payload = json.loads(capsys.readouterr().out)
    assert payload["t"] == 6
    assert payload["j_max"] == [2, 3]
    assert payload["uniserial"] is True


def test_verify_single_check(tmp_path, capsys):
    out = tmp_path / "report.json"
    code = run(["verify", "chain", "--preset", "fg3", "--depth", "4",
                "--json", str(out)])
    assert code == EXIT_PASS
    payload = json.loads(out.read_text())
    assert payload["checks"][0]["status"] == "pass"
    assert payload["checks"][0]["millis"] == 0  # deterministic by default


def test_verify_exit_code_on_fail():
    # the literal derived-series clause is refuted, so fg-lemma fails
    assert run(["verify", "fg-lemma", "--preset", "fg3",
                "--depth", "4"]) == EXIT_FAIL


def test_report_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        run(["verify", "width-rank", "--preset", "fg3", "--depth", "3",
             "--seed", "11", "--json", str(path)])
    assert a.read_bytes() == b.read_bytes()


def test_oracle_bfs(capsys):
    assert run(["oracle", "bfs", "--preset", "fg3", "--depth", "2"]) == EXIT_PASS
    payload = json.loads(capsys.readouterr().out)
    assert payload["agree"] is True and payload["bfs_count"] == 81


def test_oracle_twisted(capsys):
    assert run(["oracle", "twisted", "--preset", "gs3", "--level", "2"]) == EXIT_PASS


def test_oracle_replay_confirms_witness(tmp_path, capsys):
    report = tmp_path / "r.json"
    run(["verify", "fg-lemma", "--preset", "fg3", "--depth", "3",
         "--json", str(report)])
    capsys.readouterr()
    assert run(["oracle", "replay", "--report", str(report),
                "--cap", "11"]) == EXIT_PASS
    out = capsys.readouterr().out
    assert "CONFIRMED" in out


def test_spec_file_loading(tmp_path):
    spec = {"type": "multi_egs", "p": 5,
            "families": [{"j": 1, "vectors": [[1, 0, 0, 0]]},
                         {"j": 5, "vectors": [[1, 1, 0, 0]]}]}
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec))
    assert run(["info", "--spec", str(path)]) == EXIT_PASS


def test_spec_validation_errors():
    with pytest.raises(SpecError, match="/type"):
        instance_from_dict({"type": "nope", "p": 3})
    with pytest.raises(SpecError, match="/p"):
        instance_from_dict({"type": "ggs", "p": "three"})
    with pytest.raises(SpecError, match="/families/0/j"):
        instance_from_dict({"type": "multi_egs", "p": 3,
                            "families": [{"vectors": [[1, 0]]}]})


def test_bad_spec_exit_code(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"type": "ggs", "p": 3, "vector": [0, 0]}))
    assert run(["info", "--spec", str(path)]) == EXIT_USAGE


def test_entries_reduced_mod_p():
    inst = instance_from_dict({"type": "ggs", "p": 3, "vector": [4, -1]})
    assert inst.families[0][0] == (1, 2)


def test_usage_error_exit():
    assert run(["quotient", "--depth", "2"]) == EXIT_USAGE  # no spec/preset
