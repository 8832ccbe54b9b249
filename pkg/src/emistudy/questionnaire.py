"""Compiled questionnaire/quiz/feedback artifacts and their canonical form.

Artifacts are plain JSON documents. The canonical serialization is key-sorted,
compact JSON with a trailing newline; the content digest is SHA-256 over the
canonical bytes of the document with its ``digest`` field removed. Identical
input always yields identical bytes, which is what schema versioning and
idempotent seeding rely on.
"""

from __future__ import annotations

import hashlib
import json
from datetime import date
from typing import Any, Iterable, Mapping

from .feedback import COMPARATORS, METRICS
from .findings import (
    DANGLING_REFERENCE,
    DIGEST_MISMATCH,
    DUPLICATE_ID,
    INVALID_VALUE,
    MISSING_TRANSLATION,
    ValidationReport,
)

ARTIFACT_KINDS = ("questionnaire", "quiz", "feedback_rules")

# Widget vocabulary; mirrors the workbook table but artifacts can be hand-edited,
# so it is re-checked here.
WIDGETS = ("slider", "checkbox", "radio", "multiselect", "text", "number", "date", "info")
CHOICE_WIDGETS = ("radio", "multiselect")


def canonical_bytes(document: Mapping) -> bytes:
    """Key-sorted, whitespace-normalized JSON bytes of a document."""
    return (json.dumps(document, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n").encode("utf-8")


def compute_digest(document: Mapping) -> str:
    """SHA-256 hex digest over the canonical bytes, ``digest`` field excluded."""
    body = {k: v for k, v in document.items() if k != "digest"}
    return hashlib.sha256(canonical_bytes(body)).hexdigest()


def with_digest(document: Mapping) -> dict:
    doc = dict(document)
    doc["digest"] = compute_digest(doc)
    return doc


def dumps(document: Mapping) -> bytes:
    """Canonical bytes of a document including its digest field."""
    return canonical_bytes(with_digest(document))


def loads(data: bytes | str) -> dict:
    doc = json.loads(data)
    if not isinstance(doc, dict):
        raise ValueError("artifact document must be a JSON object")
    return doc


def verify_digest(document: Mapping) -> bool:
    return document.get("digest") == compute_digest(document)


def canonical_roundtrip(document: Mapping) -> dict:
    """Serialize and reload; the result is structurally equal and digest-stable."""
    return loads(dumps(document))


# ---------------------------------------------------------------------------
# Artifact validation (defense for hand-edited documents)
# ---------------------------------------------------------------------------

def validate_artifact(document: Mapping) -> ValidationReport:
    """Re-check all schema invariants on an already-compiled artifact."""
    report = ValidationReport()
    kind = document.get("kind")
    table = str(kind or "artifact")
    if kind not in ARTIFACT_KINDS:
        report.error(INVALID_VALUE, table, 0, "kind",
                     f"unknown artifact kind {kind!r}, expected one of {', '.join(ARTIFACT_KINDS)}")
        return report

    if "digest" not in document:
        report.error(DIGEST_MISMATCH, table, 0, "digest", "artifact has no digest field")
    elif not verify_digest(document):
        report.error(DIGEST_MISMATCH, table, 0, "digest",
                     f"digest mismatch: stored {document['digest']!r}, recomputed {compute_digest(document)!r}")

    if not isinstance(document.get("schema_id"), str) or not document["schema_id"]:
        report.error(INVALID_VALUE, table, 0, "schema_id", "schema_id must be a non-empty string")
    version = document.get("version")
    if not isinstance(version, int) or version < 1:
        report.error(INVALID_VALUE, table, 0, "version", f"version must be a positive integer, got {version!r}")

    languages = document.get("languages")
    if not isinstance(languages, list) or not languages or not all(isinstance(c, str) for c in languages):
        report.error(INVALID_VALUE, table, 0, "languages", "languages must be a non-empty list of codes")
        return report

    if kind == "feedback_rules":
        _validate_rules(document, languages, report)
    else:
        _validate_questionnaire(document, kind, languages, report)
    return report


def _check_label_map(value: Any, languages: list[str], where: str, table: str,
                     report: ValidationReport) -> None:
    if not isinstance(value, Mapping):
        report.error(INVALID_VALUE, table, 0, where, f"{where} must map language codes to text")
        return
    for code in languages:
        if not value.get(code):
            report.error(MISSING_TRANSLATION, table, 0, where, f"{where} is missing the {code!r} translation")


def _validate_questionnaire(document: Mapping, kind: str, languages: list[str],
                            report: ValidationReport) -> None:
    table = kind
    pages = document.get("pages")
    questions = document.get("questions")
    if not isinstance(pages, list) or not isinstance(questions, Mapping):
        report.error(INVALID_VALUE, table, 0, "pages", "artifact needs a pages list and a questions map")
        return

    placements: dict[str, int] = {}
    for i, page in enumerate(pages):
        if not isinstance(page, Mapping) or page.get("index") != i + 1:
            report.error(INVALID_VALUE, table, i + 1, "index",
                         f"page {i + 1} must carry consecutive 1-based index, got {page.get('index')!r}")
            continue
        if "title" in page:
            _check_label_map(page["title"], languages, f"page {i + 1} title", table, report)
        for qid in page.get("questions", []):
            placements[qid] = placements.get(qid, 0) + 1
            if qid not in questions:
                report.error(DANGLING_REFERENCE, table, i + 1, "questions",
                             f"page {i + 1} references unknown question {qid!r}")

    for qid, count in placements.items():
        if count > 1:
            report.error(DUPLICATE_ID, table, 0, "questions", f"question {qid!r} appears on {count} pages")
    for qid in questions:
        if qid not in placements:
            report.error(DANGLING_REFERENCE, table, 0, "questions", f"question {qid!r} appears on no page")

    for qid, q in questions.items():
        if not isinstance(q, Mapping):
            report.error(INVALID_VALUE, table, 0, qid, f"question {qid!r} must be an object")
            continue
        widget = q.get("widget")
        if widget not in WIDGETS:
            report.error(INVALID_VALUE, table, 0, qid, f"question {qid!r} has unknown widget {widget!r}")
            continue
        if widget == "info" and q.get("required"):
            report.error(INVALID_VALUE, table, 0, qid, f"info question {qid!r} must not be required")
        _check_label_map(q.get("label"), languages, f"question {qid!r} label", table, report)
        options = q.get("options", [])
        if widget in CHOICE_WIDGETS or kind == "quiz":
            if not isinstance(options, list) or len(options) < 2:
                report.error(INVALID_VALUE, table, 0, qid,
                             f"question {qid!r} needs at least 2 options")
                options = []
            option_ids = set()
            for option in options:
                oid = option.get("id") if isinstance(option, Mapping) else None
                if not oid:
                    report.error(INVALID_VALUE, table, 0, qid, f"option of {qid!r} lacks an id")
                    continue
                if oid in option_ids:
                    report.error(DUPLICATE_ID, table, 0, qid, f"duplicate option {oid!r} in {qid!r}")
                option_ids.add(oid)
                _check_label_map(option.get("label"), languages, f"option {qid}/{oid} label", table, report)
            if kind == "quiz" and q.get("correct_option") not in option_ids:
                report.error(DANGLING_REFERENCE, table, 0, qid,
                             f"question {qid!r} marks unknown option {q.get('correct_option')!r} as correct")
        elif options:
            report.error(INVALID_VALUE, table, 0, qid, f"{widget} question {qid!r} must not carry options")
        if widget == "slider":
            minimum, maximum, step = q.get("min"), q.get("max"), q.get("step")
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in (minimum, maximum, step)):
                report.error(INVALID_VALUE, table, 0, qid, f"slider {qid!r} needs numeric min/max/step")
            elif not (minimum < maximum and step > 0):
                report.error(INVALID_VALUE, table, 0, qid,
                             f"slider {qid!r} needs min < max and step > 0, got {minimum}/{maximum}/{step}")


def _validate_rules(document: Mapping, languages: list[str], report: ValidationReport) -> None:
    table = "feedback_rules"
    rules = document.get("rules")
    if not isinstance(rules, list):
        report.error(INVALID_VALUE, table, 0, "rules", "feedback artifact needs a rules list")
        return
    seen_ids: set[str] = set()
    seen_priorities: set[int] = set()
    for i, rule in enumerate(rules):
        if not isinstance(rule, Mapping):
            report.error(INVALID_VALUE, table, i + 1, "", "rule must be an object")
            continue
        rule_id = rule.get("rule_id")
        if not rule_id:
            report.error(INVALID_VALUE, table, i + 1, "rule_id", "rule_id missing")
        elif rule_id in seen_ids:
            report.error(DUPLICATE_ID, table, i + 1, "rule_id", f"duplicate rule id {rule_id!r}")
        else:
            seen_ids.add(rule_id)
        if rule.get("metric") not in METRICS:
            report.error(INVALID_VALUE, table, i + 1, "metric", f"unknown metric {rule.get('metric')!r}")
        if rule.get("comparator") not in COMPARATORS:
            report.error(INVALID_VALUE, table, i + 1, "comparator", f"unknown comparator {rule.get('comparator')!r}")
        if not isinstance(rule.get("threshold"), (int, float)) or isinstance(rule.get("threshold"), bool):
            report.error(INVALID_VALUE, table, i + 1, "threshold", "threshold must be a number")
        priority = rule.get("priority")
        if not isinstance(priority, int) or isinstance(priority, bool):
            report.error(INVALID_VALUE, table, i + 1, "priority", "priority must be an integer")
        elif priority in seen_priorities:
            report.error(DUPLICATE_ID, table, i + 1, "priority", f"priority {priority} used twice")
        else:
            seen_priorities.add(priority)
        _check_label_map(rule.get("message"), languages, f"rule {rule_id!r} message", table, report)


# ---------------------------------------------------------------------------
# Localization
# ---------------------------------------------------------------------------

def resolve_language(document: Mapping, chain: Iterable[str]) -> str:
    """First chain entry declared by the artifact, falling back to en, then first."""
    declared = document.get("languages", [])
    for code in chain:
        if code in declared:
            return code
    if "en" in declared:
        return "en"
    return declared[0] if declared else "en"


def localize(document: Mapping, chain: Iterable[str]) -> dict:
    """Resolve all label maps to one language; structure is language-independent."""
    code = resolve_language(document, chain)
    doc = dict(document)
    doc["language"] = code
    if document.get("kind") == "feedback_rules":
        doc["rules"] = [{**r, "message": r["message"].get(code, "")} for r in document["rules"]]
        return doc
    doc["pages"] = [
        {**page, **({"title": page["title"].get(code, "")} if "title" in page else {})}
        for page in document["pages"]
    ]
    questions = {}
    for qid, q in document["questions"].items():
        loc = {**q, "label": q["label"].get(code, "")}
        if q.get("options"):
            loc["options"] = [{**o, "label": o["label"].get(code, "")} for o in q["options"]]
        questions[qid] = loc
    doc["questions"] = questions
    return doc


# ---------------------------------------------------------------------------
# Answer validation against a pinned schema version
# ---------------------------------------------------------------------------

def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _answered(widget: str, value: Any) -> bool:
    if value is None:
        return False
    if widget == "text":
        return isinstance(value, str) and value.strip() != ""
    if widget == "multiselect":
        return isinstance(value, list) and len(value) > 0
    return True


def check_answers(document: Mapping, answers: Mapping[str, Any]) -> list[dict]:
    """Validate an answers map against a questionnaire schema.

    Returns per-question findings; empty when the envelope is acceptable.
    """
    findings: list[dict] = []

    def fail(qid: str, code: str, message: str) -> None:
        findings.append({"question_id": qid, "code": code, "message": message})

    questions: Mapping[str, Mapping] = document.get("questions", {})
    for qid in answers:
        if qid not in questions:
            fail(qid, "unknown_question", f"schema {document.get('schema_id')!r} has no question {qid!r}")

    for qid, q in questions.items():
        widget = q["widget"]
        value = answers.get(qid)
        if widget == "info":
            if qid in answers:
                fail(qid, "not_answerable", f"info question {qid!r} cannot be answered")
            continue
        if not _answered(widget, value):
            if q.get("required"):
                fail(qid, "required", f"question {qid!r} is required")
            elif qid in answers and value is not None and widget not in ("text", "multiselect"):
                fail(qid, "wrong_type", f"question {qid!r} carries an empty answer")
            continue

        if widget in ("slider", "number"):
            if not _is_number(value):
                fail(qid, "wrong_type", f"question {qid!r} expects a number, got {type(value).__name__}")
                continue
            minimum, maximum = q.get("min"), q.get("max")
            if minimum is not None and maximum is not None and not minimum <= value <= maximum:
                fail(qid, "out_of_bounds",
                     f"question {qid!r} expects a value in [{minimum}, {maximum}], got {value}")
        elif widget == "checkbox":
            if not isinstance(value, bool):
                fail(qid, "wrong_type", f"question {qid!r} expects a boolean, got {type(value).__name__}")
        elif widget == "radio":
            option_ids = {o["id"] for o in q.get("options", [])}
            if not isinstance(value, str) or value not in option_ids:
                fail(qid, "unknown_option", f"question {qid!r} got unknown option {value!r}")
        elif widget == "multiselect":
            option_ids = {o["id"] for o in q.get("options", [])}
            if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                fail(qid, "wrong_type", f"question {qid!r} expects a list of option ids")
            elif len(set(value)) != len(value):
                fail(qid, "duplicate_option", f"question {qid!r} got duplicate options")
            elif not set(value) <= option_ids:
                unknown = sorted(set(value) - option_ids)
                fail(qid, "unknown_option", f"question {qid!r} got unknown options {unknown}")
        elif widget == "text":
            if not isinstance(value, str):
                fail(qid, "wrong_type", f"question {qid!r} expects text, got {type(value).__name__}")
        elif widget == "date":
            try:
                date.fromisoformat(value) if isinstance(value, str) else None
            except ValueError:
                fail(qid, "wrong_type", f"question {qid!r} expects an ISO date, got {value!r}")
            else:
                if not isinstance(value, str):
                    fail(qid, "wrong_type", f"question {qid!r} expects an ISO date string")
    return findings
