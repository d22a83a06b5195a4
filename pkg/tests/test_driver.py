import hashlib
import json
import subprocess
import sys

import pytest

from helpers import NEGATE_OLD, edit_file
from selertion.driver import commands
from selertion.driver.cli import EXIT_ERROR, EXIT_FAILURES, EXIT_OK, main
from selertion.driver.store import STORE_ENV, StoreState, store_lock
from selertion.errors import StoreError, StoreLockedError
from selertion.frontend.project import Project
from selertion.selection import SelectionResult, apply_rewrite, rewrite_tests


def _tests_hash(root) -> str:
    h = hashlib.sha256()
    for p in sorted((root / "tests").rglob("*")):
        if p.is_file():
            h.update(p.name.encode() + p.read_bytes())
    return h.hexdigest()


def _break_negate(root, body="return new Complex(re, -im);"):
    edit_file(root, "src/Complex.mj", NEGATE_OLD, body)


def test_init_runs_everything(project_copy):
    root = project_copy("complexmath")
    res = commands.cmd_init(root)
    assert res.report.tests_run == 2 and res.report.exit_code == 0
    assert res.selection.gamma_c == {"ComplexTest"}
    assert (root / ".selertion" / "state.tsv").is_file()
    with pytest.raises(StoreError, match="--force"):
        commands.cmd_init(root)
    commands.cmd_init(root, force=True)


def test_unchanged_run_executes_nothing(project_copy):
    root = project_copy("complexmath")
    commands.cmd_init(root)
    res = commands.cmd_analyze_and_run(root)
    assert res.selection.is_empty()
    assert res.report.tests_run == 0 and res.report.exit_code == 0
    assert res.changes.is_empty()


def test_run_after_edit_executes_the_selected_slices(project_copy):
    root = project_copy("complexmath")
    commands.cmd_init(root)
    before = _tests_hash(root)
    _break_negate(root)
    res = commands.cmd_analyze_and_run(root)
    assert set(res.selection.gamma_a) == {"S=ComplexTest#testExp()@5", "S=ComplexTest#testNegate()@2",
                                          "S=ComplexTest#testNegate()@3"}
    assert res.report.entities_run == 3
    assert res.report.failures == 2 and res.report.exit_code == 1
    assert res.reinstrumented == ("src/Complex.mj",)
    assert _tests_hash(root) == before
    assert commands.cmd_analyze_and_run(root).report.tests_run == 0


def test_uncollected_changes_are_remembered(project_copy):
    root = project_copy("complexmath")
    commands.cmd_init(root)
    _break_negate(root)
    first = commands.cmd_analyze_and_run(root)
    assert not first.state.collection_current
    edit_file(root, "src/Complex.mj", "return new Complex(re, -im);", "return new Complex(-re, -im);")
    second = commands.cmd_analyze_and_run(root, collect=True)
    assert set(second.selection.gamma_a) == set(first.selection.gamma_a)
    assert second.state.collection_current
    assert second.report.exit_code == 0


def test_collect_requires_an_analyzed_tree(project_copy):
    root = project_copy("complexmath")
    commands.cmd_init(root)
    _break_negate(root)
    with pytest.raises(StoreError, match="run first"):
        commands.cmd_collect(root)
    commands.cmd_analyze_and_run(root)
    assert commands.cmd_collect(root).collection_current


def test_interrupted_run_is_restored_on_the_next_run(project_copy):
    root = project_copy("complexmath")
    res = commands.cmd_init(root)
    before = _tests_hash(root)
    project = Project.load(root)
    rewritten = rewrite_tests(SelectionResult(gamma_m={"M=ComplexTest#testExp()"}), project)
    apply_rewrite(root, root / ".selertion", rewritten, res.revision)  # a run that died mid-way
    assert _tests_hash(root) != before
    commands.cmd_analyze_and_run(root)
    assert _tests_hash(root) == before


def test_lock_blocks_a_second_writer(project_copy):
    root = project_copy("complexmath")
    commands.cmd_init(root)
    with store_lock(root / ".selertion"):
        with pytest.raises(StoreLockedError):
            commands.cmd_analyze_and_run(root)
        assert main(["run", str(root)]) == EXIT_ERROR


def test_layout_version_mismatch_is_rejected(project_copy):
    root = project_copy("complexmath")
    commands.cmd_init(root)
    state = root / ".selertion" / "state.tsv"
    state.write_text(state.read_text().replace("layoutVersion\t1", "layoutVersion\t7"))
    with pytest.raises(StoreError, match="version"):
        StoreState.load(root / ".selertion")
    assert main(["run", str(root)]) == EXIT_ERROR


def test_store_location_from_environment(project_copy, tmp_path, monkeypatch):
    root = project_copy("complexmath")
    monkeypatch.setenv(STORE_ENV, str(tmp_path / "elsewhere"))
    commands.cmd_init(root)
    assert (tmp_path / "elsewhere" / "state.tsv").is_file()
    assert not (root / ".selertion").exists()
    explicit = tmp_path / "explicit"
    commands.cmd_init(root, store=str(explicit))
    assert (explicit / "state.tsv").is_file()


def test_method_level_store_needs_reinit(project_copy):
    root = project_copy("complexmath")
    commands.cmd_init(root, method_level=True)
    _break_negate(root)
    res = commands.cmd_analyze_and_run(root)
    assert res.selection.gamma_a == {}
    assert res.selection.gamma_m == {"M=ComplexTest#testExp()", "M=ComplexTest#testNegate()"}
    commands.cmd_init(root, force=True)
    with pytest.raises(StoreError, match="granularity"):
        commands.cmd_analyze_and_run(root, method_level=True)


def test_cli_exit_codes(project_copy, capsys):
    root = project_copy("complexmath")
    assert main(["init", str(root)]) == EXIT_OK
    assert main(["run", str(root)]) == EXIT_OK
    _break_negate(root)
    assert main(["run", str(root), "--json"]) == EXIT_FAILURES
    out = capsys.readouterr().out
    payload = json.loads(out[out.index("{"):])
    assert payload["metrics"]["selectedAssertions"] == 3
    assert main(["run", str(root / "missing")]) == EXIT_ERROR
    assert main(["retestall", str(root)]) == EXIT_FAILURES


def test_parse_error_is_a_tool_error(project_copy):
    root = project_copy("complexmath")
    assert main(["init", str(root)]) == EXIT_OK
    edit_file(root, "src/Complex.mj", NEGATE_OLD, "return new Complex(re, ;")
    assert main(["run", str(root)]) == EXIT_ERROR


def test_report_shows_the_last_revision(project_copy, capsys):
    root = project_copy("complexmath")
    commands.cmd_init(root)
    _break_negate(root)
    rev = commands.cmd_analyze_and_run(root).revision
    files = commands.cmd_report(root)
    assert files["revision"] == rev
    assert "S=ComplexTest#testExp()@5" in files["selection"]
    with pytest.raises(StoreError):
        commands.cmd_report(root, revision="nope")
    assert main(["report", str(root)]) == EXIT_OK


def test_mutate_and_oracle_commands(project_copy, tmp_path, capsys):
    root = project_copy("complexmath")
    assert main(["mutate", str(root), "--seed", "3", "--out", str(tmp_path / "m")]) == EXIT_OK
    assert (tmp_path / "m" / "src" / "Complex.mj").is_file()
    assert main(["mutate", str(root), "--seed", "3", "--out", str(tmp_path / "m")]) == EXIT_ERROR
    capsys.readouterr()
    assert main(["oracle", str(root), str(root), "--json"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["affected"] == []


def test_module_entry_point(project_copy):
    root = project_copy("complexmath")
    done = subprocess.run([sys.executable, "-m", "selertion", "retestall", str(root)],
                          capture_output=True, text=True)
    assert done.returncode == 0, done.stderr
    assert "tests=2" in done.stdout
