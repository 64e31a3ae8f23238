import json
import re
import subprocess
import sys

import pytest

from tabs import bundled_path, checks
from tabs.cli import RunReport, main
from tabs.dsl import parse

EX1, EX2, EMPTY = (bundled_path(n) for n in ("ex1.ta", "ex2.ta", "empty.ta"))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestCipm:
    def test_json_invariants(self, capsys, tmp_path):
        out = tmp_path / "out.json"
        code, stdout, _ = run(capsys, "cipm", EX1, "--json", str(out))
        assert code == 0
        report = json.loads(out.read_text(encoding="utf-8"))
        assert report["invariants"] == {"l0": "y <= 1", "l1": "x <= y", "l2": "y < x"}
        assert report["removed"][0]["reason"] == "PostViolatesTargetInvariant"
        # the pruned model goes to stdout and parses again
        assert len(parse(stdout).components[0].transitions) == 3
        # every invariant is already as strong as the computed one
        assert "strengthened" not in stdout

    def test_strengthened_comments(self, capsys):
        code, stdout, _ = run(capsys, "cipm", EX2)
        assert code == 0
        assert "location l1;  // strengthened: n == 1" in stdout

    def test_out_and_dot(self, capsys, tmp_path):
        code, stdout, _ = run(capsys, "cipm", EX2, "--out", str(tmp_path / "p.ta"), "--dot", str(tmp_path / "p.dot"))
        assert code == 0 and stdout == ""
        assert len(parse((tmp_path / "p.ta").read_text()).components) == 2
        assert (tmp_path / "p.dot").read_text().startswith("digraph")

    def test_json_to_stdout(self, capsys):
        code, stdout, _ = run(capsys, "cipm", EX1, "--json", "-")
        assert code == 0
        assert json.loads(stdout)["converged"] is True

    def test_unreadable_path(self, capsys, tmp_path):
        missing = str(tmp_path / "nope.ta")
        code, _, err = run(capsys, "cipm", missing)
        assert code == 2 and missing in err

    def test_syntax_error(self, capsys, tmp_path):
        bad = tmp_path / "bad.ta"
        bad.write_text("automaton A {\n  clock x;\n  init l0 location l0;\n}\n")
        code, _, err = run(capsys, "cipm", str(bad))
        assert code == 1
        assert re.search(r"bad\.ta:3:\d+: error:", err), err


class TestAbstract:
    def test_compare_naive(self, capsys, tmp_path):
        s = tmp_path / "s.json"
        code, stdout, _ = run(capsys, "abstract", EX1, "--compare-naive", "--json", str(s))
        assert code == 0
        report = json.loads(s.read_text())
        assert {k: report[k] for k in ("abstract_states", "reachable", "naive_paired", "naive_unfiltered")} == {
            "abstract_states": 6, "reachable": 4, "naive_paired": 12, "naive_unfiltered": 24}
        assert "naive unfiltered: 24" in stdout

    def test_single_location(self, capsys):
        code, stdout, _ = run(capsys, "abstract", EMPTY)
        assert code == 0 and "abstract states:  1" in stdout

    def test_ex2_dashed_nodes(self, capsys, tmp_path):
        g = tmp_path / "g.dot"
        assert run(capsys, "abstract", EX2, "--dot", str(g))[0] == 0
        nodes = re.findall(r'^  s\d+ \[label="\(\((\w+),(\w+)\),[^"]*"(.*)\];$', g.read_text(), re.M)
        assert nodes
        for a, b, rest in nodes:
            if a == "l4" or b == "s1":
                assert "style=dashed" in rest, (a, b)
        locs = {(a, b) for a, b, _ in nodes}
        assert {(f"l{i}", "s1") for i in range(5)} <= locs
        assert {("l4", f"s{j}") for j in range(3)} <= locs


class TestValidate:
    @pytest.mark.parametrize("path", [EX1, EX2, EMPTY])
    def test_fixtures_pass(self, capsys, path):
        code, stdout, _ = run(capsys, "validate", path)
        assert code == 0, stdout
        assert stdout.count("PASS") == 5

    def test_forced_truncation(self, capsys):
        code, stdout, err = run(capsys, "validate", EX2, "--steps", "10")
        assert code == 3
        assert "INCONCLUSIVE" in stdout and "inconclusive" in err

    def test_failed_check_exits_1(self, capsys, monkeypatch):
        monkeypatch.setattr(checks, "check_invariance",
                            lambda r, o: checks.CheckResult("invariance", checks.FAIL, "injected"))
        assert run(capsys, "validate", EX1)[0] == 1

    def test_bad_granularity(self, capsys):
        code, _, err = run(capsys, "validate", EX1, "--granularity", "2/3")
        assert code == 2 and "granularity" in err

    def test_json(self, capsys, tmp_path):
        out = tmp_path / "v.json"
        run(capsys, "validate", EX1, "--json", str(out))
        assert {v["status"] for v in json.loads(out.read_text()).values()} == {"PASS"}


def test_stats(capsys):
    code, stdout, _ = run(capsys, "stats", EX2, "--json", "-")
    assert code == 0
    report = json.loads(stdout[stdout.index("{"):])
    assert report["components"] == 2 and report["locations"] == 15
    assert report["pruned_transitions"] == 1


@pytest.mark.parametrize("argv", [
    ["cipm", EX1], ["cipm", EX2], ["abstract", EX1, "--compare-naive"], ["abstract", EX2], ["stats", EX2],
    ["validate", EX1],
])
def test_json_is_byte_identical(capsys, tmp_path, argv):
    outs = []
    for i in range(2):
        path = tmp_path / f"{i}.json"
        run(capsys, *argv, "--json", str(path))
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_timings_mark_skipped_phases(capsys):
    _, _, err = run(capsys, "cipm", EX1, "--timings")
    phases = re.findall(r"^  (\w+)\s+(done|skipped)", err, re.M)
    assert phases == [("parse", "done"), ("cipm", "done"), ("oracle", "skipped"), ("abstraction", "skipped")]


def test_run_report_order():
    rep = RunReport("m.ta")
    rep.run("cipm", lambda: None)
    rep.run("parse", lambda: None)
    rep.complete()
    assert [p[0] for p in rep.phases] == ["cipm", "parse", "oracle", "abstraction"]


@pytest.mark.parametrize("mode, colored", [("always", True), ("never", False)])
def test_color_env(capsys, tmp_path, monkeypatch, mode, colored):
    monkeypatch.setenv("TABS_COLOR", mode)
    bad = tmp_path / "bad.ta"
    bad.write_text("automaton")
    code, _, err = run(capsys, "cipm", str(bad))
    assert code == 1
    assert ("\033[" in err) is colored


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "tabs", "stats", EX1], capture_output=True, text=True)
    assert proc.returncode == 0
    assert re.search(r"^reachable\s+4$", proc.stdout, re.M)
