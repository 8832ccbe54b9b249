import hashlib
import json
import random

import pytest

import genwb
from emistudy.compiler import (
    check_registry,
    compile_workbook,
    load_registry,
    update_registry,
    write_artifacts,
)
from emistudy.findings import DIGEST_MISMATCH, DUPLICATE_ID, EMPTY_QUESTIONNAIRE, VERSION_CONFLICT
from emistudy.questionnaire import (
    canonical_roundtrip,
    compute_digest,
    dumps,
    loads,
    localize,
    validate_artifact,
    verify_digest,
    with_digest,
)
from emistudy.workbook import WorkbookSource, parse_workbook
from test_workbook import MINIMAL, write_workbook


def compile_dir(path):
    src = parse_workbook(path)
    assert isinstance(src, WorkbookSource), getattr(src, "findings", None)
    return compile_workbook(src)


def test_recompiling_unchanged_source_reproduces_digest(tmp_path, demo_workbook):
    first = compile_dir(demo_workbook)
    second = compile_dir(demo_workbook)
    assert dumps(first.questionnaire) == dumps(second.questionnaire)
    assert first.manifest == second.manifest
    for a, b in zip(first.artifacts(), second.artifacts()):
        assert dumps(a) == dumps(b)


def test_label_edit_changes_digest(tmp_path):
    root = write_workbook(tmp_path / "a")
    original = compile_dir(root).questionnaire
    edited_rows = [row[:] for row in MINIMAL["questions"]]
    edited_rows[0][7] = "Loudness!"  # flip one character of one label
    edited_root = write_workbook(tmp_path / "b", {"questions": edited_rows})
    edited = compile_dir(edited_root).questionnaire
    assert original["digest"] != edited["digest"]


def test_digest_matches_independent_hash(tmp_path):
    doc = compile_dir(write_workbook(tmp_path / "wb")).questionnaire
    body = {k: v for k, v in doc.items() if k != "digest"}
    expected = hashlib.sha256(
        (json.dumps(body, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n").encode()
    ).hexdigest()
    assert doc["digest"] == expected


def test_empty_workbook_compiles_with_warning(tmp_path):
    root = write_workbook(tmp_path / "wb", {"pages": [], "questions": []})
    compiled = compile_dir(root)
    assert compiled.questionnaire["pages"] == []
    assert [f.code for f in compiled.warnings.findings] == [EMPTY_QUESTIONNAIRE]


def test_manifest_covers_every_artifact_exactly_once(demo_workbook):
    compiled = compile_dir(demo_workbook)
    manifest_keys = [(u["kind"], u["id"]) for u in compiled.manifest["units"]]
    artifact_keys = [(a["kind"], a["schema_id"]) for a in compiled.artifacts()]
    assert manifest_keys == artifact_keys
    assert len(set(manifest_keys)) == len(manifest_keys)
    for unit, artifact in zip(compiled.manifest["units"], compiled.artifacts()):
        assert unit["digest"] == artifact["digest"] == compute_digest(artifact)


def test_write_artifacts_and_reload(tmp_path, demo_workbook):
    compiled = compile_dir(demo_workbook)
    out = tmp_path / "out"
    report = write_artifacts(compiled, out)
    assert report.verdict
    manifest = json.loads((out / "manifest.json").read_text())
    for unit in manifest["units"]:
        doc = loads((out / unit["path"]).read_bytes())
        assert verify_digest(doc)
        assert doc["digest"] == unit["digest"]


def test_registry_refuses_same_version_new_content(tmp_path, demo_workbook):
    compiled = compile_dir(demo_workbook)
    out = tmp_path / "out"
    assert write_artifacts(compiled, out).verdict
    # same version, different content
    registry = load_registry(out / "versions.json")
    tampered = json.loads(json.dumps(compiled.manifest))
    tampered["units"][0]["digest"] = "0" * 64
    report = check_registry(registry, tampered)
    assert [f.code for f in report.errors] == [VERSION_CONFLICT]
    # unchanged recompile stays accepted
    assert write_artifacts(compiled, out).verdict


def test_registry_update_is_idempotent(demo_workbook):
    compiled = compile_dir(demo_workbook)
    once = update_registry({}, compiled.manifest)
    twice = update_registry(once, compiled.manifest)
    assert once == twice


def test_roundtrip_demo(demo_workbook):
    for artifact in compile_dir(demo_workbook).artifacts():
        again = canonical_roundtrip(artifact)
        assert again == artifact
        assert again["digest"] == artifact["digest"]


def test_roundtrip_generated_workbooks(tmp_path):
    rng = random.Random(20260810)
    for i in range(25):
        tables = genwb.generate_workbook(rng)
        root = tmp_path / f"wb{i}"
        genwb.write_workbook_dir(tables, root)
        compiled = compile_dir(root)
        for artifact in compiled.artifacts():
            assert canonical_roundtrip(artifact) == artifact


def test_roundtrip_fifty_questions_three_languages(tmp_path):
    questions = [[f"q{i}", "1", "text", "no", "", "", "", f"Q {i}", f"F {i}", f"D {i}"]
                 for i in range(50)]
    overrides = {
        "languages": [["en"], ["de"], ["fr"]],
        "pages": [["1", "P", "S", "P"]],
        "questions": questions,
        "options": [],
    }
    root = tmp_path / "wb"
    root.mkdir()
    headers = {
        "meta": ["key", "value"],
        "languages": ["code"],
        "pages": ["page", "title:en", "title:de", "title:fr"],
        "questions": ["question_id", "page", "widget", "required", "min", "max", "step",
                      "label:en", "label:de", "label:fr"],
        "options": ["question_id", "option_id", "label:en", "label:de", "label:fr"],
        "quizzes": ["quiz_id", "chapter_id", "question_id", "correct_option",
                    "label:en", "label:de", "label:fr"],
        "feedback_rules": ["rule_id", "metric", "comparator", "threshold", "priority",
                           "message:en", "message:de", "message:fr"],
    }
    tables = {"meta": MINIMAL["meta"], **{k: [] for k in ("quizzes", "feedback_rules")}, **overrides}
    for name in headers:
        rows = [headers[name]] + tables.get(name, [])
        (root / f"{name}.tsv").write_text("\n".join("\t".join(r) for r in rows) + "\n", "utf-8")
    compiled = compile_dir(root)
    doc = compiled.questionnaire
    assert len(doc["questions"]) == 50
    assert canonical_roundtrip(doc) == doc


# -- validate (artifact re-check) -------------------------------------------


def test_validate_compiled_artifact_is_clean(demo_workbook):
    for artifact in compile_dir(demo_workbook).artifacts():
        report = validate_artifact(artifact)
        assert report.verdict, [f.to_dict() for f in report.findings]


def test_validate_detects_duplicate_question_placement(demo_workbook):
    doc = json.loads(json.dumps(compile_dir(demo_workbook).questionnaire))
    doc["pages"][1]["questions"].append(doc["pages"][0]["questions"][1])
    doc = with_digest(doc)
    report = validate_artifact(doc)
    assert DUPLICATE_ID in {f.code for f in report.errors}


def test_validate_detects_digest_mismatch(demo_workbook):
    doc = json.loads(json.dumps(compile_dir(demo_workbook).questionnaire))
    doc["digest"] = "f" * 64
    report = validate_artifact(doc)
    codes = {f.code for f in report.errors}
    assert DIGEST_MISMATCH in codes
    # independent recomputation confirms the stored digest is wrong
    assert compute_digest(doc) != doc["digest"]


def test_validate_rejects_unknown_widget(demo_workbook):
    doc = json.loads(json.dumps(compile_dir(demo_workbook).questionnaire))
    doc["questions"]["q_loudness"]["widget"] = "dial"
    report = validate_artifact(with_digest(doc))
    assert not report.verdict


# -- localization ------------------------------------------------------------


def test_localize_structure_identical_across_languages(demo_workbook):
    doc = compile_dir(demo_workbook).questionnaire

    def shape(localized):
        return [
            (page["index"], list(page["questions"]))
            for page in localized["pages"]
        ], {qid: (q["widget"], [o["id"] for o in q.get("options", [])])
            for qid, q in localized["questions"].items()}

    en = localize(doc, ["en"])
    de = localize(doc, ["de"])
    assert shape(en) == shape(de)
    assert en["language"] == "en" and de["language"] == "de"
    assert en["questions"]["q_loudness"]["label"] != de["questions"]["q_loudness"]["label"]


def test_localize_falls_back_for_undeclared_language(demo_workbook):
    doc = compile_dir(demo_workbook).questionnaire
    localized = localize(doc, ["xx", "de", "en"])
    assert localized["language"] == "de"


@pytest.mark.parametrize("chain,expected", [
    (["de"], "de"), (["xx"], "en"), ([], "en"),
])
def test_localize_chain(demo_workbook, chain, expected):
    doc = compile_dir(demo_workbook).questionnaire
    assert localize(doc, chain)["language"] == expected
