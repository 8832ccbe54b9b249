import json

import httpx
import pytest
from click.testing import CliRunner

from conftest import RESEARCHER_TOKEN
from emistudy import demo
from emistudy.cli import main
from test_workbook import write_workbook


@pytest.fixture
def runner():
    return CliRunner()


def test_compile_demo_workbook(runner, tmp_path, demo_workbook):
    out = tmp_path / "out"
    result = runner.invoke(main, ["compile", str(demo_workbook), "-o", str(out)])
    assert result.exit_code == 0, result.output
    assert (out / "manifest.json").is_file()
    assert (out / "versions.json").is_file()
    manifest = json.loads((out / "manifest.json").read_text())
    for unit in manifest["units"]:
        assert (out / unit["path"]).is_file()


def test_compile_invalid_workbook_exits_1(runner, tmp_path):
    root = write_workbook(tmp_path / "wb", {
        "questions": [["q1", "9", "slider", "yes", "0", "1", "1", "A", "B"]]})
    result = runner.invoke(main, ["compile", str(root), "-o", str(tmp_path / "out")])
    assert result.exit_code == 1
    assert "dangling_reference" in result.output


def test_compile_missing_dir_exits_2(runner, tmp_path):
    result = runner.invoke(main, ["compile", str(tmp_path / "nope"), "-o", str(tmp_path / "out")])
    assert result.exit_code == 2


def test_compile_version_conflict_exits_1(runner, tmp_path, demo_workbook):
    out = tmp_path / "out"
    assert runner.invoke(main, ["compile", str(demo_workbook), "-o", str(out)]).exit_code == 0
    # recompiling unchanged content at the same version is fine
    assert runner.invoke(main, ["compile", str(demo_workbook), "-o", str(out)]).exit_code == 0
    # changed content at the same version is refused
    edited = write_workbook(tmp_path / "wb")
    result = runner.invoke(main, ["compile", str(edited), "-o", str(out)])
    assert result.exit_code == 1
    assert "version_conflict" in result.output


def test_validate_artifact(runner, tmp_path, demo_workbook):
    out = tmp_path / "out"
    runner.invoke(main, ["compile", str(demo_workbook), "-o", str(out)])
    good = out / "questionnaire-diary.json"
    assert runner.invoke(main, ["validate", str(good)]).exit_code == 0
    doc = json.loads(good.read_text())
    doc["digest"] = "0" * 64
    bad = tmp_path / "tampered.json"
    bad.write_text(json.dumps(doc))
    result = runner.invoke(main, ["validate", str(bad)])
    assert result.exit_code == 1
    assert "digest" in result.output
    assert runner.invoke(main, ["validate", str(tmp_path / "ghost.json")]).exit_code == 2


def test_seed_against_live_server(runner, tmp_path, demo_workbook, live_server):
    out = tmp_path / "out"
    runner.invoke(main, ["compile", str(demo_workbook), "-o", str(out)])
    result = runner.invoke(main, ["seed", str(out / "manifest.json"),
                                  "--server", live_server.base_url,
                                  "--token", RESEARCHER_TOKEN])
    assert result.exit_code == 0, result.output
    # demo fixture was already seeded by the fixture, so everything is skipped
    assert "skipped: questionnaire diary" in result.output


def test_seed_bad_token_exits_1(runner, tmp_path, demo_workbook, live_server):
    out = tmp_path / "out"
    runner.invoke(main, ["compile", str(demo_workbook), "-o", str(out)])
    result = runner.invoke(main, ["seed", str(out / "manifest.json"),
                                  "--server", live_server.base_url, "--token", "wrong"])
    assert result.exit_code == 1


def test_seed_unreachable_server_exits_2(runner, tmp_path, demo_workbook):
    out = tmp_path / "out"
    runner.invoke(main, ["compile", str(demo_workbook), "-o", str(out)])
    result = runner.invoke(main, ["seed", str(out / "manifest.json"),
                                  "--server", "http://127.0.0.1:9",
                                  "--token", RESEARCHER_TOKEN])
    assert result.exit_code == 2


def test_publish_directory(runner, tmp_path, live_server):
    chapter = tmp_path / "chapter"
    chapter.mkdir()
    (chapter / "index.html").write_text("<p>hello</p>")
    result = runner.invoke(main, ["publish", str(chapter), "--kind", "tinedu_chapter",
                                  "--server", live_server.base_url,
                                  "--token", RESEARCHER_TOKEN])
    assert result.exit_code == 0, result.output
    assert "published tinedu_chapter-" in result.output


def test_demo_command_is_idempotent(runner, live_server):
    result = runner.invoke(main, ["demo", "--server", live_server.base_url,
                                  "--token", RESEARCHER_TOKEN])
    assert result.exit_code == 0, result.output
    assert "skipped" in result.output


def test_export_command(runner, tmp_path, live_server):
    httpx.post(f"{live_server.base_url}/v1/users/anonymous",
               json={"center_id": "C1"}).raise_for_status()
    result = runner.invoke(main, ["export", "--data-dir", str(tmp_path / "data"),
                                  "--entity", "users"])
    assert result.exit_code == 0
    rows = [json.loads(line) for line in result.output.splitlines()]
    assert len(rows) == 1 and rows[0]["center_id"] == "C1"
