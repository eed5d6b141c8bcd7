import json

import pytest

from aliasgraph.cli import main

from util import DEUTSCH_SRC, FLOW_SRC

CLEAN_SRC = """class C feature n: C end
main
local
    a: C
    b: C
do
    create a
    b := a
end
"""

VOID_CALL_SRC = """class C feature
    n: C
    poke (o: C)
    do
        n := o
    end
end
main
local
    a: C
do
    a.poke (a)
end
"""

BAD_SYNTAX_SRC = "main do a := := b end\n"

BAD_NAME_SRC = """main
local
    a: C
do
    a := b
end
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_clean_program_exits_zero(tmp_path, capsys):
    rc = main(["analyze", write(tmp_path, "ok.oo", CLEAN_SRC)])
    out = capsys.readouterr().out
    assert rc == 0
    assert "a ~ b" in out


def test_parse_error_exits_two_with_location(tmp_path, capsys):
    path = write(tmp_path, "bad.oo", BAD_SYNTAX_SRC)
    rc = main(["analyze", path])
    err = capsys.readouterr().err
    assert rc == 2
    assert "bad.oo:1:" in err


def test_static_error_exits_two(tmp_path, capsys):
    rc = main(["analyze", write(tmp_path, "undef.oo", BAD_NAME_SRC)])
    err = capsys.readouterr().err
    assert rc == 2
    assert "b" in err


def test_missing_file_exits_two(tmp_path, capsys):
    rc = main(["analyze", str(tmp_path / "ghost.oo")])
    assert rc == 2
    assert "ghost.oo" in capsys.readouterr().err


def test_unknown_entry_exits_two(tmp_path, capsys):
    rc = main(["analyze", write(tmp_path, "ok.oo", CLEAN_SRC), "--entry", "nope"])
    assert rc == 2
    assert "nope" in capsys.readouterr().err


def test_void_call_exits_one(tmp_path, capsys):
    rc = main(["analyze", write(tmp_path, "voidcall.oo", VOID_CALL_SRC)])
    err = capsys.readouterr().err
    assert rc == 1
    assert "void" in err


def test_warning_only_still_exits_zero(tmp_path, capsys):
    src = """class C feature n: C end
main
local
    a: C
    b: C
do
    b := a.n
end
"""
    rc = main(["analyze", write(tmp_path, "warn.oo", src)])
    err = capsys.readouterr().err
    assert rc == 0
    assert "void" in err


def test_bad_cap_rejected(tmp_path, capsys):
    rc = main(["analyze", write(tmp_path, "ok.oo", CLEAN_SRC), "--cap", "0"])
    assert rc == 2


def test_json_output_is_deterministic(tmp_path, capsys):
    src_path = write(tmp_path, "flow.oo", FLOW_SRC)
    out1 = tmp_path / "r1.json"
    out2 = tmp_path / "r2.json"
    assert main(["analyze", src_path, "--json", str(out1)]) == 0
    assert main(["analyze", src_path, "--json", str(out2)]) == 0
    capsys.readouterr()
    assert out1.read_bytes() == out2.read_bytes()
    doc = json.loads(out1.read_text())
    assert set(doc) == {"program", "entry", "points", "final", "diagnostics"}


def test_json_to_stdout_is_pipe_clean(tmp_path, capsys):
    rc = main(["analyze", write(tmp_path, "ok.oo", CLEAN_SRC), "--json", "-"])
    captured = capsys.readouterr()
    assert rc == 0
    # the whole stream must parse: the human summary moves to stderr
    doc = json.loads(captured.out)
    assert set(doc) == {"program", "entry", "points", "final", "diagnostics"}
    assert "alias pairs" in captured.err


def test_dot_output(tmp_path, capsys):
    src_path = write(tmp_path, "ok.oo", CLEAN_SRC)
    out = tmp_path / "g.dot"
    assert main(["analyze", src_path, "--dot", str(out)]) == 0
    capsys.readouterr()
    text = out.read_text()
    assert text.startswith("digraph")
    assert "peripheries=2" in text


def test_dot_at_point_differs_from_final(tmp_path, capsys):
    src_path = write(tmp_path, "deutsch.oo", DEUTSCH_SRC)
    final = tmp_path / "final.dot"
    at_l2 = tmp_path / "l2.dot"
    assert main(["analyze", src_path, "--dot", str(final)]) == 0
    assert main(["analyze", src_path, "--points", "--at", "L2", "--dot", str(at_l2)]) == 0
    capsys.readouterr()
    assert final.read_bytes() != at_l2.read_bytes()


def test_at_unknown_point_exits_one(tmp_path, capsys):
    rc = main(["analyze", write(tmp_path, "ok.oo", CLEAN_SRC), "--at", "L9"])
    assert rc == 1
    assert "L9" in capsys.readouterr().err


def test_query_prints_alias_set(tmp_path, capsys):
    rc = main(["analyze", write(tmp_path, "ok.oo", CLEAN_SRC), "--query", "a"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "alias(a) = {b}" in out


def test_deutsch_flag_prints_and_embeds_properties(tmp_path, capsys):
    src_path = write(tmp_path, "deutsch.oo", DEUTSCH_SRC)
    out = tmp_path / "r.json"
    rc = main(["analyze", src_path, "--deutsch", "--json", str(out)])
    text = capsys.readouterr().out
    assert rc == 0
    for name in ("P1", "P2", "P3", "P4", "P5"):
        assert "%s: yes" % name in text
    assert "no-share root component: yes" in text
    doc = json.loads(out.read_text())
    assert any("P5" in d for d in doc["diagnostics"])


def test_color_env_controls_ansi(tmp_path, capsys, monkeypatch):
    path = write(tmp_path, "bad.oo", BAD_SYNTAX_SRC)
    monkeypatch.setenv("ALIASGRAPH_COLOR", "1")
    main(["analyze", path])
    assert "\x1b[31m" in capsys.readouterr().err
    monkeypatch.setenv("ALIASGRAPH_COLOR", "0")
    main(["analyze", path])
    assert "\x1b[" not in capsys.readouterr().err


def _freeze_expectation(tmp_path, name, src, monkeypatch):
    """Write src and its expectation produced by the tool itself."""
    src_path = write(tmp_path, name, src)
    out = tmp_path / (name[:-3] + ".expected.json")
    monkeypatch.setenv("ALIASGRAPH_COLOR", "0")
    assert main(["analyze", src_path, "--points", "--json", str(out)]) == 0
    return src_path


class TestCorpus:
    def test_all_pass(self, tmp_path, capsys, monkeypatch):
        _freeze_expectation(tmp_path, "a_flow.oo", FLOW_SRC, monkeypatch)
        _freeze_expectation(tmp_path, "b_clean.oo", CLEAN_SRC, monkeypatch)
        capsys.readouterr()
        rc = main(["corpus", str(tmp_path)])
        out = capsys.readouterr().out
        assert rc == 0
        assert out.index("PASS a_flow.oo") < out.index("PASS b_clean.oo")
        assert "2 passed, 0 failed, 0 skipped" in out

    def test_missing_expectation_skips(self, tmp_path, capsys, monkeypatch):
        _freeze_expectation(tmp_path, "a_flow.oo", FLOW_SRC, monkeypatch)
        write(tmp_path, "b_orphan.oo", CLEAN_SRC)
        capsys.readouterr()
        rc = main(["corpus", str(tmp_path)])
        out = capsys.readouterr().out
        assert rc == 0
        assert "SKIP b_orphan.oo" in out
        assert "1 passed, 0 failed, 1 skipped" in out

    def test_wrong_expectation_fails_with_diff(self, tmp_path, capsys, monkeypatch):
        _freeze_expectation(tmp_path, "a_clean.oo", CLEAN_SRC, monkeypatch)
        want_path = tmp_path / "a_clean.expected.json"
        doc = json.loads(want_path.read_text())
        doc["final"]["pairs"] = [["a", "x"]]
        want_path.write_text(json.dumps(doc))
        capsys.readouterr()
        rc = main(["corpus", str(tmp_path)])
        out = capsys.readouterr().out
        assert rc == 1
        assert "FAIL a_clean.oo" in out
        assert "final: missing a ~ x" in out
        assert "final: unexpected a ~ b" in out

    def test_broken_program_fails(self, tmp_path, capsys):
        write(tmp_path, "bad.oo", BAD_SYNTAX_SRC)
        (tmp_path / "bad.expected.json").write_text('{"final": {"pairs": []}}')
        rc = main(["corpus", str(tmp_path)])
        out = capsys.readouterr().out
        assert rc == 1
        assert "FAIL bad.oo (did not analyze)" in out

    def test_empty_dir_passes(self, tmp_path, capsys):
        rc = main(["corpus", str(tmp_path)])
        out = capsys.readouterr().out
        assert rc == 0
        assert "0 passed, 0 failed, 0 skipped" in out

    def test_not_a_directory(self, tmp_path, capsys):
        rc = main(["corpus", str(tmp_path / "nowhere")])
        assert rc == 2


def test_console_entry_point(tmp_path):
    import subprocess
    src_path = write(tmp_path, "ok.oo", CLEAN_SRC)
    proc = subprocess.run(
        ["aliasgraph", "analyze", src_path, "--query", "b"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "alias(b) = {a}" in proc.stdout
