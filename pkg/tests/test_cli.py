import json

import pytest

from probranch.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


INTRO_S0 = ("a.(D(tau.(D(b.D(0)) +[1/2] D(c.D(0)))) +[3/4] "
            "D(tau.(D(b.D(0)) +[1/2] D(c.D(0)))))")
INTRO_T0 = "a.(D(b.D(0)) +[1/2] D(c.D(0)))"


def test_check_equivalent_exit_zero(capsys):
    code, out, _ = run(capsys, "check", "--rel", "rooted-branching",
                       "--left", INTRO_S0, "--right", INTRO_T0)
    assert code == 0
    assert "equivalent" in out


def test_check_not_equivalent_exit_one(capsys):
    code, out, _ = run(capsys, "check", "--rel", "strong",
                       "--left", "a.D(0)", "--right", "b.D(0)")
    assert code == 1
    assert "not equivalent" in out


def test_check_json_schema(capsys):
    code, out, _ = run(capsys, "check", "--rel", "branching", "--json",
                       "--left", "tau.D(a.D(0))", "--right", "a.D(0)")
    assert code == 0
    payload = json.loads(out)
    assert payload["schema"] == "probranch/1"
    assert payload["equivalent"] is True


def test_check_parse_error_exit_two(capsys):
    code, _, err = run(capsys, "check", "--rel", "strong",
                       "--left", "a.D(0) + +", "--right", "0")
    assert code == 2
    assert "parse error" in err


def test_usage_error_exit_two(capsys):
    code, _, _ = run(capsys, "check", "--rel", "bogus",
                     "--left", "0", "--right", "0")
    assert code == 2


def test_at_file_terms(tmp_path, capsys):
    f = tmp_path / "left.term"
    f.write_text("a.D(0)", encoding="utf-8")
    code, _, _ = run(capsys, "check", "--rel", "strong",
                     "--left", f"@{f}", "--right", "a.D(0)")
    assert code == 0


def test_missing_file_exit_two(capsys):
    code, _, err = run(capsys, "check", "--rel", "strong",
                       "--left", "@/nonexistent/term", "--right", "0")
    assert code == 2


def test_prove_outputs_jsonl(capsys):
    code, out, _ = run(capsys, "prove", "--left", "b.D(0) + a.D(0)",
                       "--right", "a.D(0) + b.D(0)")
    assert code == 0
    lines = [json.loads(line) for line in out.strip().splitlines()]
    assert lines
    assert all({"index", "rule", "direction", "position", "before",
                "after"} <= set(line) for line in lines)


def test_prove_refutation_exit_one(capsys):
    code, out, _ = run(capsys, "prove", "--left", "a.D(0)",
                       "--right", "b.D(0)")
    assert code == 1


def test_prove_budget_exit_three(capsys):
    code, _, err = run(capsys, "prove", "--left", INTRO_S0,
                       "--right", INTRO_T0, "--budget", "2")
    assert code == 3
    assert "resource" in err


def test_normalize_p(capsys):
    code, out, _ = run(capsys, "normalize", "--form", "p",
                       "--term", "D(a.D(0)) +[1/2] D(a.D(0))")
    assert code == 0
    assert out.strip() == "D(a.D(0))"


def test_normalize_nd(capsys):
    code, out, _ = run(capsys, "normalize", "--form", "nd",
                       "--term", "b.D(0) + 0 + a.D(0)")
    assert code == 0
    assert out.strip() == "a.D(0) + b.D(0)"


def test_normalize_concrete(capsys):
    code, out, _ = run(capsys, "normalize", "--form", "concrete",
                       "--term", "D(tau.D(a.D(0)))")
    assert code == 0
    assert out.strip() == "D(a.D(0))"


def test_concretize_with_trace(capsys):
    code, out, _ = run(capsys, "concretize", "--trace",
                       "--term", "D(tau.D(a.D(0)))")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "D(a.D(0))"
    assert json.loads(lines[1])["rule"]


def test_lts_dot(capsys):
    code, out, _ = run(capsys, "lts", "--dot",
                       "--term", "a.(D(b.D(0)) +[1/2] D(0))")
    assert code == 0
    assert out.startswith("digraph")
    assert "1/2" in out


def test_fuzz_report(capsys):
    code, out, _ = run(capsys, "fuzz", "--suite", "inclusion_chain",
                       "--trials", "5", "--seed", "3",
                       "--max-complexity", "4")
    assert code == 0
    payload = json.loads(out)
    assert payload["suite"] == "inclusion_chain"
    assert payload["trials"] == 5
    assert payload["failures"] == []


def test_roundtrip_of_printed_terms(capsys):
    code, out, _ = run(capsys, "normalize", "--form", "p", "--term",
                       "(D(b.D(0)) +[1/3] D(a.D(0))) +[1/2] D(b.D(0))")
    assert code == 0
    code2, out2, _ = run(capsys, "normalize", "--form", "p",
                         "--term", out.strip())
    assert code2 == 0
    assert out2 == out
