import json
import subprocess
import sys
from pathlib import Path

import pytest

from treelint.cli import run

from conftest import FIXTURES

DEMO_RULES = Path("src/treelint/data/rules/demo.grv").resolve()

CLEAN = """# sent_id = c1
1\tdani\tdani\tPROPN\t_\t_\t2\tnsubj\t_\t_
2\thalax\thalax\tVERB\t_\t_\t0\troot\t_\t_

"""

BAD = """# sent_id = b1
1\tdani\tdani\tPROPN\t_\t_\t2\tnsubj\t_\t_
2\traa\traa\tVERB\t_\t_\t0\troot\t_\t_
3\tve\tve\tCCONJ\t_\t_\t4\tcc\t_\t_
4\tdina\tdina\tPROPN\t_\t_\t2\tobj\t_\t_

"""

WARN_ONLY = """# sent_id = w1
1\thalax\thalax\tVERB\t_\t_\t0\troot\t_\t_

"""


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, text in (("clean", CLEAN), ("bad", BAD), ("warn", WARN_ONLY)):
        p = tmp_path / f"{name}.conllu"
        p.write_text(text, encoding="utf-8")
        paths[name] = str(p)
    paths["rules"] = str(DEMO_RULES)
    paths["tmp"] = tmp_path
    return paths


def test_validate_clean_exits_zero(files, capsys):
    code = run(["validate", "--rules", files["rules"], files["clean"]])
    assert code == 0
    assert "0 error(s)" in capsys.readouterr().out


def test_validate_error_exits_one(files, capsys):
    code = run(["validate", "--rules", files["rules"], files["bad"]])
    assert code == 1
    out = capsys.readouterr().out
    assert "cc-child-conj" in out and "Token 4" in out


def test_validate_warnings_exit_zero_without_strict(files):
    assert run(["validate", "--rules", files["rules"], files["warn"]]) == 0
    assert run(["validate", "--rules", files["rules"], "--strict-warnings", files["warn"]]) == 1


def test_validate_json_format(files, capsys):
    run(["validate", "--rules", files["rules"], "--format", "json", files["bad"]])
    lines = capsys.readouterr().out.splitlines()
    records = [json.loads(line) for line in lines]
    assert {r["rule"] for r in records} == {"cc-child-conj"}
    assert all(set(r) == {"rule", "level", "sent_id", "bindings", "message", "dismissed"} for r in records)


def test_validate_dismissals_flow(files, capsys):
    dismissals = files["tmp"] / "d.tsv"
    dismissals.write_text("w1\tverb-no-subject\tV=1\timperative\n", encoding="utf-8")
    code = run(["validate", "--rules", files["rules"], "--dismissals", str(dismissals),
                "--strict-warnings", files["warn"]])
    assert code == 0


def test_validate_record_pass_and_stale(files, capsys):
    state = files["tmp"] / "passes.tsv"
    assert run(["validate", "--rules", files["rules"], "--record-pass",
                "--pass-state", str(state), files["clean"]]) == 0
    assert "c1\t" in state.read_text(encoding="utf-8")
    capsys.readouterr()
    assert run(["validate", "--rules", files["rules"], "--stale",
                "--pass-state", str(state), files["clean"]]) == 0
    assert capsys.readouterr().out == ""


def test_validate_missing_ruleset_usage_error(files, monkeypatch, capsys):
    monkeypatch.delenv("TREELINT_RULES", raising=False)
    assert run(["validate", files["clean"]]) == 2


def test_env_var_supplies_default_ruleset(files, monkeypatch):
    monkeypatch.setenv("TREELINT_RULES", files["rules"])
    assert run(["validate", files["bad"]]) == 1


def test_unreadable_file_exits_two(files, capsys):
    assert run(["validate", "--rules", files["rules"], "/nonexistent.conllu"]) == 2


def test_selftest_demo_rules(files, capsys):
    assert run(["selftest", "--rules", files["rules"]]) == 0
    out = capsys.readouterr().out
    assert "PASS  cc-child-conj" in out
    assert "3/3 rules pass self-test" in out


def test_query_counts(files, capsys):
    code = run(["query", "--pattern", "pattern { V[upos=VERB] }", files["bad"]])
    assert code == 0
    out = capsys.readouterr().out
    assert "b1\t1" in out and "total\t1" in out


def test_score_identity_table(files, capsys):
    assert run(["score", files["clean"], files["clean"]]) == 0
    out = capsys.readouterr().out
    assert out.count("100.00") >= 42  # 14 metrics x P/R/F1
    assert out.splitlines()[2].startswith("Tokens")


def test_score_text_mismatch_exits_one(files, capsys):
    assert run(["score", files["clean"], files["bad"]]) == 1


def test_convert_round_trip_via_cli(files, capsys):
    old_path = str(FIXTURES / "roundtrip" / "mwt_old_01.conllu")
    assert run(["convert", "--direction", "old-to-new", old_path]) == 0
    new_text = capsys.readouterr().out
    new_path = files["tmp"] / "new.conllu"
    new_path.write_text(new_text, encoding="utf-8")
    assert run(["convert", "--direction", "new-to-old", str(new_path)]) == 0
    back = capsys.readouterr().out
    assert back == Path(old_path).read_text(encoding="utf-8")


def test_iaa_identity_output(files, capsys):
    assert run(["iaa", files["clean"], files["clean"]]) == 0
    out = capsys.readouterr().out
    assert "100.0%" in out and "Words" in out


def test_iaa_with_rules_audit(files, capsys):
    assert run(["iaa", files["clean"], files["clean"], "--rules", files["rules"]]) == 0
    assert "flagged\t0/0" in capsys.readouterr().out


def test_stats_output(files, capsys):
    assert run(["stats", files["clean"], "--compare", files["bad"]]) == 0
    out = capsys.readouterr().out
    assert "sentence length M\t2.00" in out
    assert "PROPN\t1" in out
    assert "vocabulary (form)" in out


def test_stdin_dash(files, capsys, monkeypatch):
    import io

    monkeypatch.setattr(sys, "stdin", type("S", (), {"buffer": io.BytesIO(CLEAN.encode())})())
    assert run(["validate", "--rules", files["rules"], "-"]) == 0


def test_byte_identical_reruns(files, capsys):
    run(["validate", "--rules", files["rules"], "--format", "json", files["bad"]])
    first = capsys.readouterr().out
    run(["validate", "--rules", files["rules"], "--format", "json", files["bad"]])
    assert capsys.readouterr().out == first


def test_jobs_flag_preserves_order(files, capsys):
    big = files["tmp"] / "big.conllu"
    chunks = []
    for i in range(1, 21):
        chunks.append(f"# sent_id = s{i}\n1\thalax\thalax\tVERB\t_\t_\t0\troot\t_\t_\n")
    big.write_text("\n".join(chunks) + "\n", encoding="utf-8")
    run(["validate", "--rules", files["rules"], "--format", "json", str(big)])
    sequential = capsys.readouterr().out
    run(["validate", "--rules", files["rules"], "--format", "json", "--jobs", "4", str(big)])
    assert capsys.readouterr().out == sequential


def test_console_script_entry_point(files):
    proc = subprocess.run(
        [sys.executable, "-m", "treelint.cli", "score", files["clean"], files["clean"]],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "Metric" in proc.stdout
