"""Tabular study-definition workbooks.

A workbook is a directory of UTF-8 tab-delimited tables with fixed headers:

    meta.tsv            key/value metadata (study_id, schema_id, schema_version,
                        optional chapter_ids as a comma list)
    languages.tsv       declared language codes, one per row
    pages.tsv           questionnaire pages, 1-based consecutive indices
    questions.tsv       diary questions with widget kind, page, bounds, labels
    options.tsv         choice options for radio/multiselect and quiz questions
    quizzes.tsv         quiz questions attached to education chapters
    feedback_rules.tsv  threshold feedback rules

Translatable columns are suffixed per language (``label:en``, ``title:de``,
``message:en``); every declared language must have a column and every cell an
entry. ``parse_workbook`` never raises on bad input: it returns either a fully
resolved ``WorkbookSource`` or a ``ValidationReport`` with at least one error.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .feedback import COMPARATORS, METRICS
from .findings import (
    DANGLING_REFERENCE,
    DUPLICATE_ID,
    INVALID_VALUE,
    MALFORMED_HEADER,
    MALFORMED_ROW,
    MISSING_METADATA,
    MISSING_TABLE,
    MISSING_TRANSLATION,
    ValidationReport,
)

WIDGETS = ("slider", "checkbox", "radio", "multiselect", "text", "number", "date", "info")
CHOICE_WIDGETS = ("radio", "multiselect")

TABLES = ("meta", "languages", "pages", "questions", "options", "quizzes", "feedback_rules")

# Fixed (non-translatable) header prefix per table, in order.
BASE_COLUMNS = {
    "meta": ["key", "value"],
    "languages": ["code"],
    "pages": ["page"],
    "questions": ["question_id", "page", "widget", "required", "min", "max", "step"],
    "options": ["question_id", "option_id"],
    "quizzes": ["quiz_id", "chapter_id", "question_id", "correct_option"],
    "feedback_rules": ["rule_id", "metric", "comparator", "threshold", "priority"],
}

# Name of the translatable column family, or None for untranslated tables.
TRANSLATABLE_COLUMN = {
    "meta": None,
    "languages": None,
    "pages": "title",
    "questions": "label",
    "options": "label",
    "quizzes": "label",
    "feedback_rules": "message",
}

REQUIRED_META_KEYS = ("study_id", "schema_id", "schema_version")

_LANG_RE = re.compile(r"^[a-z]{2}(-[a-z0-9]{2,8})?$")
_TRUE = ("yes", "true", "1")
_FALSE = ("no", "false", "0")


@dataclass
class OptionDef:
    option_id: str
    labels: dict[str, str]


@dataclass
class QuestionDef:
    question_id: str
    widget: str
    page: int
    required: bool
    labels: dict[str, str]
    options: list[OptionDef] = field(default_factory=list)
    minimum: float | None = None
    maximum: float | None = None
    step: float | None = None


@dataclass
class PageDef:
    index: int
    titles: dict[str, str]


@dataclass
class QuizQuestionDef:
    quiz_id: str
    chapter_id: str
    question_id: str
    correct_option: str
    labels: dict[str, str]
    options: list[OptionDef] = field(default_factory=list)


@dataclass
class FeedbackRuleDef:
    rule_id: str
    metric: str
    comparator: str
    threshold: float
    priority: int
    messages: dict[str, str]


@dataclass
class WorkbookMeta:
    study_id: str
    schema_id: str
    schema_version: int
    chapter_ids: list[str] = field(default_factory=list)


@dataclass
class WorkbookSource:
    """Fully resolved in-memory model of a parsed workbook."""

    root: Path
    meta: WorkbookMeta
    languages: list[str]
    pages: list[PageDef]
    questions: list[QuestionDef]
    quiz_questions: list[QuizQuestionDef]
    feedback_rules: list[FeedbackRuleDef]

    @property
    def quiz_ids(self) -> list[str]:
        seen: list[str] = []
        for qq in self.quiz_questions:
            if qq.quiz_id not in seen:
                seen.append(qq.quiz_id)
        return seen


@dataclass
class _Table:
    name: str
    columns: list[str]
    # (line_number, cells) pairs; cells align with columns
    rows: list[tuple[int, list[str]]]


def _read_table(root: Path, name: str, languages: list[str] | None, report: ValidationReport) -> _Table | None:
    """Read and structurally validate one table file.

    ``languages`` drives the translatable-column check; pass None while the
    language table itself is being bootstrapped.
    """
    path = root / f"{name}.tsv"
    if not path.is_file():
        report.error(MISSING_TABLE, name, 0, "", f"missing table: {name}")
        return None
    try:
        raw = path.read_bytes()
    except OSError as exc:
        report.error(MISSING_TABLE, name, 0, "", f"unreadable table {name}: {exc}")
        return None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        report.error(MALFORMED_HEADER, name, 0, "", f"{name}.tsv is not valid UTF-8: {exc}")
        return None

    lines = text.split("\n")
    numbered = [(i + 1, line.rstrip("\r")) for i, line in enumerate(lines)]
    numbered = [(n, line) for n, line in numbered if line.strip() != ""]
    if not numbered:
        report.error(MALFORMED_HEADER, name, 0, "", f"{name}.tsv is empty, expected a header row")
        return None

    header_line_no, header_line = numbered[0]
    columns = [c.strip() for c in header_line.split("\t")]
    if len(set(columns)) != len(columns):
        report.error(MALFORMED_HEADER, name, header_line_no, "", f"duplicate column names in {name}.tsv header")
        return None

    base = BASE_COLUMNS[name]
    if columns[: len(base)] != base:
        report.error(
            MALFORMED_HEADER, name, header_line_no, "",
            f"{name}.tsv header must start with {chr(9).join(base)!r}, got {chr(9).join(columns)!r}",
        )
        return None
    extra = columns[len(base):]
    family = TRANSLATABLE_COLUMN[name]
    if family is None:
        if extra:
            report.error(MALFORMED_HEADER, name, header_line_no, "", f"unexpected columns in {name}.tsv: {extra}")
            return None
    elif languages is not None:
        expected = {f"{family}:{code}" for code in languages}
        if set(extra) != expected:
            missing = sorted(expected - set(extra))
            surplus = sorted(set(extra) - expected)
            detail = []
            if missing:
                detail.append(f"missing {missing}")
            if surplus:
                detail.append(f"unexpected {surplus}")
            report.error(
                MALFORMED_HEADER, name, header_line_no, "",
                f"{name}.tsv translatable columns do not match declared languages: {'; '.join(detail)}",
            )
            return None

    rows: list[tuple[int, list[str]]] = []
    ok = True
    for line_no, line in numbered[1:]:
        cells = [c.strip() for c in line.split("\t")]
        if len(cells) != len(columns):
            report.error(
                MALFORMED_ROW, name, line_no, "",
                f"row has {len(cells)} fields, header declares {len(columns)}",
            )
            ok = False
            continue
        rows.append((line_no, cells))
    if not ok:
        return None
    return _Table(name, columns, rows)


def _cell(table: _Table, row: list[str], column: str) -> str:
    return row[table.columns.index(column)]


def _labels(table: _Table, row: list[str], family: str, languages: list[str],
            ident: str, line_no: int, report: ValidationReport) -> dict[str, str]:
    labels: dict[str, str] = {}
    for code in languages:
        col = f"{family}:{code}"
        value = _cell(table, row, col)
        if value == "":
            report.error(
                MISSING_TRANSLATION, table.name, line_no, col,
                f"missing {code} translation for {ident!r}",
            )
        else:
            labels[code] = value
    return labels


def _parse_number(value: str, table: str, line_no: int, column: str,
                  report: ValidationReport) -> float | None:
    try:
        num = float(value)
    except ValueError:
        report.error(INVALID_VALUE, table, line_no, column, f"not a number: {value!r}")
        return None
    if num != num or num in (float("inf"), float("-inf")):
        report.error(INVALID_VALUE, table, line_no, column, f"non-finite number: {value!r}")
        return None
    return num


def _parse_meta(table: _Table, report: ValidationReport) -> WorkbookMeta | None:
    values: dict[str, str] = {}
    for line_no, row in table.rows:
        key = _cell(table, row, "key")
        if key in values:
            report.error(DUPLICATE_ID, "meta", line_no, "key", f"duplicate metadata key {key!r}")
            continue
        values[key] = _cell(table, row, "value")
    ok = True
    for key in REQUIRED_META_KEYS:
        if not values.get(key):
            report.error(MISSING_METADATA, "meta", 0, "key", f"metadata key {key!r} is required")
            ok = False
    if not ok:
        return None
    try:
        version = int(values["schema_version"])
    except ValueError:
        report.error(INVALID_VALUE, "meta", 0, "value", f"schema_version must be an integer, got {values['schema_version']!r}")
        return None
    if version < 1:
        report.error(INVALID_VALUE, "meta", 0, "value", f"schema_version must be >= 1, got {version}")
        return None
    chapters_raw = values.get("chapter_ids", "")
    chapter_ids = [c.strip() for c in chapters_raw.split(",") if c.strip()] if chapters_raw else []
    if len(set(chapter_ids)) != len(chapter_ids):
        report.error(DUPLICATE_ID, "meta", 0, "value", "chapter_ids contains duplicates")
        return None
    return WorkbookMeta(values["study_id"], values["schema_id"], version, chapter_ids)


def _parse_languages(table: _Table, report: ValidationReport) -> list[str] | None:
    codes: list[str] = []
    for line_no, row in table.rows:
        code = _cell(table, row, "code")
        if not _LANG_RE.match(code):
            report.error(INVALID_VALUE, "languages", line_no, "code", f"invalid language code {code!r}")
            continue
        if code in codes:
            report.error(DUPLICATE_ID, "languages", line_no, "code", f"duplicate language {code!r}")
            continue
        codes.append(code)
    if not codes:
        report.error(INVALID_VALUE, "languages", 0, "code", "at least one language must be declared")
        return None
    return codes


def parse_workbook(root: str | Path) -> WorkbookSource | ValidationReport:
    """Parse a workbook directory into a resolved model or a report of errors."""
    root = Path(root)
    report = ValidationReport()
    if not root.is_dir():
        report.error(MISSING_TABLE, "", 0, "", f"workbook directory not found: {root}")
        return report

    meta_table = _read_table(root, "meta", None, report)
    lang_table = _read_table(root, "languages", None, report)
    meta = _parse_meta(meta_table, report) if meta_table else None
    languages = _parse_languages(lang_table, report) if lang_table else None

    tables: dict[str, _Table | None] = {}
    for name in ("pages", "questions", "options", "quizzes", "feedback_rules"):
        tables[name] = _read_table(root, name, languages, report)

    if meta is None or languages is None or any(tables[name] is None for name in tables):
        return report

    pages = _parse_pages(tables["pages"], languages, report)
    questions = _parse_questions(tables["questions"], languages, len(pages), report)
    quiz_questions = _parse_quizzes(tables["quizzes"], languages, meta, questions, report)
    _attach_options(tables["options"], languages, questions, quiz_questions, report)
    _check_choice_arity(tables["questions"], questions, report)
    _check_quiz_answers(tables["quizzes"], quiz_questions, report)
    rules = _parse_feedback_rules(tables["feedback_rules"], languages, report)

    if not report.verdict:
        return report
    return WorkbookSource(root, meta, languages, pages, questions, quiz_questions, rules)


def _parse_pages(table: _Table, languages: list[str], report: ValidationReport) -> list[PageDef]:
    pages: list[PageDef] = []
    seen: set[int] = set()
    for line_no, row in table.rows:
        raw = _cell(table, row, "page")
        try:
            index = int(raw)
        except ValueError:
            report.error(INVALID_VALUE, "pages", line_no, "page", f"page index must be an integer, got {raw!r}")
            continue
        if index in seen:
            report.error(DUPLICATE_ID, "pages", line_no, "page", f"duplicate page index {index}")
            continue
        seen.add(index)
        titles = _labels(table, row, "title", languages, f"page {index}", line_no, report)
        pages.append(PageDef(index, titles))
    pages.sort(key=lambda p: p.index)
    if pages and [p.index for p in pages] != list(range(1, len(pages) + 1)):
        report.error(
            INVALID_VALUE, "pages", 0, "page",
            f"page indices must be consecutive starting at 1, got {[p.index for p in pages]}",
        )
    return pages


def _parse_questions(table: _Table, languages: list[str], page_count: int,
                     report: ValidationReport) -> list[QuestionDef]:
    questions: list[QuestionDef] = []
    seen: set[str] = set()
    for line_no, row in table.rows:
        qid = _cell(table, row, "question_id")
        if not qid:
            report.error(INVALID_VALUE, "questions", line_no, "question_id", "question_id must not be empty")
            continue
        if qid in seen:
            report.error(DUPLICATE_ID, "questions", line_no, "question_id", f"duplicate question id {qid!r}")
            continue
        seen.add(qid)

        widget = _cell(table, row, "widget")
        if widget not in WIDGETS:
            report.error(INVALID_VALUE, "questions", line_no, "widget",
                         f"unknown widget {widget!r}, expected one of {', '.join(WIDGETS)}")
            continue

        page_raw = _cell(table, row, "page")
        try:
            page = int(page_raw)
        except ValueError:
            report.error(INVALID_VALUE, "questions", line_no, "page", f"page must be an integer, got {page_raw!r}")
            continue
        if not 1 <= page <= page_count:
            report.error(DANGLING_REFERENCE, "questions", line_no, "page",
                         f"question {qid!r} references page {page}, workbook has {page_count} page(s)")
            continue

        req_raw = _cell(table, row, "required").lower()
        if req_raw in _TRUE:
            required = True
        elif req_raw in _FALSE:
            required = False
        else:
            report.error(INVALID_VALUE, "questions", line_no, "required",
                         f"required must be yes/no, got {req_raw!r}")
            continue
        if widget == "info" and required:
            report.error(INVALID_VALUE, "questions", line_no, "required",
                         f"info question {qid!r} must not be required")
            continue

        minimum = maximum = step = None
        raw_min, raw_max, raw_step = (_cell(table, row, c) for c in ("min", "max", "step"))
        if widget in ("slider", "number"):
            if widget == "slider" and ("" in (raw_min, raw_max, raw_step)):
                report.error(INVALID_VALUE, "questions", line_no, "min",
                             f"slider {qid!r} requires min, max and step")
                continue
            bad = False
            if raw_min:
                minimum = _parse_number(raw_min, "questions", line_no, "min", report)
                bad = bad or minimum is None
            if raw_max:
                maximum = _parse_number(raw_max, "questions", line_no, "max", report)
                bad = bad or maximum is None
            if raw_step:
                step = _parse_number(raw_step, "questions", line_no, "step", report)
                bad = bad or step is None
            if bad:
                continue
            if (minimum is None) != (maximum is None):
                report.error(INVALID_VALUE, "questions", line_no, "min",
                             f"question {qid!r} must declare both min and max or neither")
                continue
            if minimum is not None and not minimum < maximum:
                report.error(INVALID_VALUE, "questions", line_no, "min",
                             f"question {qid!r} needs min < max, got {minimum} >= {maximum}")
                continue
            if step is not None and not step > 0:
                report.error(INVALID_VALUE, "questions", line_no, "step",
                             f"question {qid!r} needs step > 0, got {step}")
                continue
        elif any((raw_min, raw_max, raw_step)):
            report.error(INVALID_VALUE, "questions", line_no, "min",
                         f"{widget} question {qid!r} must leave min/max/step empty")
            continue

        labels = _labels(table, row, "label", languages, qid, line_no, report)
        questions.append(QuestionDef(qid, widget, page, required, labels,
                                     minimum=minimum, maximum=maximum, step=step))
    return questions


def _parse_quizzes(table: _Table, languages: list[str], meta: WorkbookMeta,
                   questions: list[QuestionDef], report: ValidationReport) -> list[QuizQuestionDef]:
    quiz_questions: list[QuizQuestionDef] = []
    question_ids = {q.question_id for q in questions}
    quiz_chapter: dict[str, str] = {}
    for line_no, row in table.rows:
        quiz_id = _cell(table, row, "quiz_id")
        chapter_id = _cell(table, row, "chapter_id")
        qid = _cell(table, row, "question_id")
        correct = _cell(table, row, "correct_option")
        if not quiz_id or not qid:
            report.error(INVALID_VALUE, "quizzes", line_no, "quiz_id", "quiz_id and question_id must not be empty")
            continue
        if qid in question_ids or any(qq.question_id == qid for qq in quiz_questions):
            report.error(DUPLICATE_ID, "quizzes", line_no, "question_id",
                         f"duplicate question id {qid!r} (ids are shared with the questions table)")
            continue
        if chapter_id not in meta.chapter_ids:
            report.error(DANGLING_REFERENCE, "quizzes", line_no, "chapter_id",
                         f"quiz {quiz_id!r} references undeclared chapter {chapter_id!r}")
            continue
        if quiz_id in quiz_chapter and quiz_chapter[quiz_id] != chapter_id:
            report.error(INVALID_VALUE, "quizzes", line_no, "chapter_id",
                         f"quiz {quiz_id!r} is attached to two chapters")
            continue
        quiz_chapter[quiz_id] = chapter_id
        if not correct:
            report.error(INVALID_VALUE, "quizzes", line_no, "correct_option",
                         f"quiz question {qid!r} must name its correct option")
            continue
        labels = _labels(table, row, "label", languages, qid, line_no, report)
        quiz_questions.append(QuizQuestionDef(quiz_id, chapter_id, qid, correct, labels))
    return quiz_questions


def _attach_options(table: _Table, languages: list[str], questions: list[QuestionDef],
                    quiz_questions: list[QuizQuestionDef], report: ValidationReport) -> None:
    by_id: dict[str, QuestionDef | QuizQuestionDef] = {q.question_id: q for q in questions}
    by_id.update({qq.question_id: qq for qq in quiz_questions})
    seen: set[tuple[str, str]] = set()
    for line_no, row in table.rows:
        qid = _cell(table, row, "question_id")
        oid = _cell(table, row, "option_id")
        target = by_id.get(qid)
        if target is None:
            report.error(DANGLING_REFERENCE, "options", line_no, "question_id",
                         f"option {oid!r} references unknown question {qid!r}")
            continue
        if isinstance(target, QuestionDef) and target.widget not in CHOICE_WIDGETS:
            report.error(INVALID_VALUE, "options", line_no, "question_id",
                         f"question {qid!r} is a {target.widget}, options are only valid for "
                         f"{'/'.join(CHOICE_WIDGETS)} and quiz questions")
            continue
        if not oid:
            report.error(INVALID_VALUE, "options", line_no, "option_id", "option_id must not be empty")
            continue
        if (qid, oid) in seen:
            report.error(DUPLICATE_ID, "options", line_no, "option_id",
                         f"duplicate option {oid!r} for question {qid!r}")
            continue
        seen.add((qid, oid))
        labels = _labels(table, row, "label", languages, f"{qid}/{oid}", line_no, report)
        target.options.append(OptionDef(oid, labels))


def _check_choice_arity(table: _Table, questions: list[QuestionDef], report: ValidationReport) -> None:
    lines = {_cell(table, row, "question_id"): line_no for line_no, row in table.rows}
    for q in questions:
        if q.widget in CHOICE_WIDGETS and len(q.options) < 2:
            report.error(INVALID_VALUE, "questions", lines.get(q.question_id, 0), "widget",
                         f"{q.widget} question {q.question_id!r} needs at least 2 options, has {len(q.options)}")


def _check_quiz_answers(table: _Table, quiz_questions: list[QuizQuestionDef],
                        report: ValidationReport) -> None:
    lines = {_cell(table, row, "question_id"): line_no for line_no, row in table.rows}
    for qq in quiz_questions:
        line_no = lines.get(qq.question_id, 0)
        if len(qq.options) < 2:
            report.error(INVALID_VALUE, "quizzes", line_no, "question_id",
                         f"quiz question {qq.question_id!r} needs at least 2 options, has {len(qq.options)}")
            continue
        if qq.correct_option not in {o.option_id for o in qq.options}:
            report.error(DANGLING_REFERENCE, "quizzes", line_no, "correct_option",
                         f"quiz question {qq.question_id!r} marks unknown option {qq.correct_option!r} as correct")


def _parse_feedback_rules(table: _Table, languages: list[str],
                          report: ValidationReport) -> list[FeedbackRuleDef]:
    rules: list[FeedbackRuleDef] = []
    seen_ids: set[str] = set()
    seen_priorities: dict[int, str] = {}
    for line_no, row in table.rows:
        rule_id = _cell(table, row, "rule_id")
        if not rule_id:
            report.error(INVALID_VALUE, "feedback_rules", line_no, "rule_id", "rule_id must not be empty")
            continue
        if rule_id in seen_ids:
            report.error(DUPLICATE_ID, "feedback_rules", line_no, "rule_id", f"duplicate rule id {rule_id!r}")
            continue
        seen_ids.add(rule_id)
        metric = _cell(table, row, "metric")
        if metric not in METRICS:
            report.error(INVALID_VALUE, "feedback_rules", line_no, "metric",
                         f"unknown metric {metric!r}, expected one of {', '.join(METRICS)}")
            continue
        comparator = _cell(table, row, "comparator")
        if comparator not in COMPARATORS:
            report.error(INVALID_VALUE, "feedback_rules", line_no, "comparator",
                         f"unknown comparator {comparator!r}, expected one of {', '.join(COMPARATORS)}")
            continue
        threshold = _parse_number(_cell(table, row, "threshold"), "feedback_rules", line_no, "threshold", report)
        if threshold is None:
            continue
        try:
            priority = int(_cell(table, row, "priority"))
        except ValueError:
            report.error(INVALID_VALUE, "feedback_rules", line_no, "priority",
                         f"priority must be an integer, got {_cell(table, row, 'priority')!r}")
            continue
        if priority in seen_priorities:
            report.error(DUPLICATE_ID, "feedback_rules", line_no, "priority",
                         f"priority {priority} already used by rule {seen_priorities[priority]!r}")
            continue
        seen_priorities[priority] = rule_id
        messages = _labels(table, row, "message", languages, rule_id, line_no, report)
        rules.append(FeedbackRuleDef(rule_id, metric, comparator, threshold, priority, messages))
    return rules
