"""Compile parsed workbooks into seedable artifacts.

``compile_workbook`` is total on valid input and a pure function of the
workbook content: identical workbooks produce byte-identical artifacts. The
emitted seed manifest lists every artifact exactly once, in load order, with
its content digest. A version registry protects against re-using a version
number for different content.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .findings import EMPTY_QUESTIONNAIRE, VERSION_CONFLICT, ValidationReport
from .questionnaire import compute_digest, dumps, with_digest
from .workbook import OptionDef, WorkbookSource

MANIFEST_FILENAME = "manifest.json"
REGISTRY_FILENAME = "versions.json"


@dataclass
class CompiledStudy:
    questionnaire: dict
    quizzes: list[dict]
    feedback_rules: dict
    manifest: dict
    warnings: ValidationReport = field(default_factory=ValidationReport)

    def artifacts(self) -> list[dict]:
        return [self.questionnaire, *self.quizzes, self.feedback_rules]


def _num(value: float) -> int | float:
    """Normalize numeric cells so canonical JSON is stable (42.0 -> 42)."""
    return int(value) if float(value).is_integer() else float(value)


def _options_payload(options: list[OptionDef]) -> list[dict]:
    return [{"id": o.option_id, "label": dict(o.labels)} for o in options]


def compile_workbook(src: WorkbookSource) -> CompiledStudy:
    """Transform a parsed workbook into questionnaire/quiz/feedback artifacts."""
    meta = src.meta
    warnings = ValidationReport()

    questions: dict[str, dict] = {}
    for q in src.questions:
        payload: dict = {"widget": q.widget, "required": q.required, "label": dict(q.labels)}
        if q.options:
            payload["options"] = _options_payload(q.options)
        if q.minimum is not None:
            payload["min"] = _num(q.minimum)
        if q.maximum is not None:
            payload["max"] = _num(q.maximum)
        if q.step is not None:
            payload["step"] = _num(q.step)
        questions[q.question_id] = payload

    pages = [
        {
            "index": page.index,
            "title": dict(page.titles),
            "questions": [q.question_id for q in src.questions if q.page == page.index],
        }
        for page in src.pages
    ]
    questionnaire = with_digest({
        "kind": "questionnaire",
        "schema_id": meta.schema_id,
        "study_id": meta.study_id,
        "version": meta.schema_version,
        "module": "diary",
        "languages": list(src.languages),
        "pages": pages,
        "questions": questions,
    })
    if not src.questions:
        warnings.warn(EMPTY_QUESTIONNAIRE, "questions", 0, "",
                      "empty questionnaire: workbook declares no questions")

    quizzes = []
    for quiz_id in src.quiz_ids:
        members = [qq for qq in src.quiz_questions if qq.quiz_id == quiz_id]
        quiz_questions = {
            qq.question_id: {
                "widget": "radio",
                "required": True,
                "label": dict(qq.labels),
                "options": _options_payload(qq.options),
                "correct_option": qq.correct_option,
            }
            for qq in members
        }
        quizzes.append(with_digest({
            "kind": "quiz",
            "schema_id": quiz_id,
            "study_id": meta.study_id,
            "version": meta.schema_version,
            "module": "tinedu",
            "chapter_id": members[0].chapter_id,
            "languages": list(src.languages),
            "pages": [{"index": 1, "questions": [qq.question_id for qq in members]}],
            "questions": quiz_questions,
        }))

    feedback_rules = with_digest({
        "kind": "feedback_rules",
        "schema_id": "feedback",
        "study_id": meta.study_id,
        "version": meta.schema_version,
        "languages": list(src.languages),
        "rules": [
            {
                "rule_id": r.rule_id,
                "metric": r.metric,
                "comparator": r.comparator,
                "threshold": _num(r.threshold),
                "priority": r.priority,
                "message": dict(r.messages),
            }
            for r in src.feedback_rules
        ],
    })

    units = []
    for artifact in [questionnaire, *quizzes, feedback_rules]:
        units.append({
            "kind": artifact["kind"],
            "id": artifact["schema_id"],
            "version": artifact["version"],
            "digest": artifact["digest"],
            "path": f"{artifact['kind']}-{artifact['schema_id']}.json",
        })
    manifest = {"study_id": meta.study_id, "version": meta.schema_version, "units": units}
    return CompiledStudy(questionnaire, quizzes, feedback_rules, manifest, warnings)


# ---------------------------------------------------------------------------
# Version registry: a version number, once bound to a digest, stays bound
# ---------------------------------------------------------------------------

def load_registry(path: Path) -> dict:
    if path.is_file():
        return json.loads(path.read_text("utf-8"))
    return {}


def check_registry(registry: dict, manifest: dict) -> ValidationReport:
    """Fail when a manifest unit re-uses a registered version for new content."""
    report = ValidationReport()
    for unit in manifest["units"]:
        key = f"{unit['kind']}:{unit['id']}"
        recorded = registry.get(key, {}).get(str(unit["version"]))
        if recorded is not None and recorded != unit["digest"]:
            report.error(
                VERSION_CONFLICT, unit["kind"], 0, "version",
                f"{key} version {unit['version']} is already bound to digest {recorded[:12]}…; "
                f"bump schema_version before seeding changed content",
            )
    return report


def update_registry(registry: dict, manifest: dict) -> dict:
    updated = {k: dict(v) for k, v in registry.items()}
    for unit in manifest["units"]:
        key = f"{unit['kind']}:{unit['id']}"
        updated.setdefault(key, {})[str(unit["version"])] = unit["digest"]
    return updated


def write_artifacts(compiled: CompiledStudy, out_dir: Path) -> ValidationReport:
    """Write artifacts, manifest and registry; refuses on version conflicts."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    registry_path = out_dir / REGISTRY_FILENAME
    registry = load_registry(registry_path)
    report = check_registry(registry, compiled.manifest)
    if not report.verdict:
        return report

    by_path = {u["path"]: a for u, a in zip(compiled.manifest["units"], compiled.artifacts())}
    for rel_path, artifact in by_path.items():
        (out_dir / rel_path).write_bytes(dumps(artifact))
    manifest_bytes = (json.dumps(compiled.manifest, indent=2, sort_keys=True) + "\n").encode("utf-8")
    (out_dir / MANIFEST_FILENAME).write_bytes(manifest_bytes)
    registry_path.write_text(json.dumps(update_registry(registry, compiled.manifest), indent=2, sort_keys=True) + "\n",
                             "utf-8")
    return report


__all__ = [
    "CompiledStudy",
    "compile_workbook",
    "write_artifacts",
    "load_registry",
    "check_registry",
    "update_registry",
    "compute_digest",
    "MANIFEST_FILENAME",
    "REGISTRY_FILENAME",
]
