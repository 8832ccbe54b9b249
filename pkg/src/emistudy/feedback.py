"""Threshold feedback rules evaluated over a user's logged activity.

The rule language is deliberately small: one metric, one comparator, one
threshold, one localized message, one priority. Rules fire independently and
the fired set is returned ordered by priority, highest first.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone
from typing import Iterable, Mapping

METRICS = (
    "quiz_score_latest",
    "quiz_score_mean",
    "chapters_completed",
    "diary_streak_days",
    "sound_sessions_count",
)

COMPARATORS = {
    "<": operator.lt,
    "<=": operator.le,
    "=": operator.eq,
    ">=": operator.ge,
    ">": operator.gt,
}


@dataclass(frozen=True)
class FeedbackRule:
    rule_id: str
    metric: str
    comparator: str
    threshold: float
    priority: int
    messages: Mapping[str, str]


@dataclass(frozen=True)
class UserMetrics:
    quiz_score_latest: float = 0.0
    quiz_score_mean: float = 0.0
    chapters_completed: int = 0
    diary_streak_days: int = 0
    sound_sessions_count: int = 0

    def value(self, metric: str) -> float:
        return getattr(self, metric)


@dataclass(frozen=True)
class FiredFeedback:
    rule_id: str
    metric: str
    value: float
    comparator: str
    threshold: float
    priority: int
    language: str
    message: str

    def to_dict(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "metric": self.metric,
            "value": self.value,
            "comparator": self.comparator,
            "threshold": self.threshold,
            "priority": self.priority,
            "language": self.language,
            "message": self.message,
        }


def parse_instant(value: str | datetime) -> datetime:
    """Parse an ISO-8601 instant; naive values are taken as UTC.

    Accepts the Z suffix (datetime.fromisoformat only learned it in 3.11,
    but every JavaScript client emits it).
    """
    if isinstance(value, str):
        if value.endswith(("Z", "z")):
            value = value[:-1] + "+00:00"
        value = datetime.fromisoformat(value)
    if value.tzinfo is None:
        return value.replace(tzinfo=timezone.utc)
    return value.astimezone(timezone.utc)


def local_day(client_ts: str | datetime, utc_offset_min: int) -> date:
    """The client-local calendar day of an instant, per its captured offset."""
    return (parse_instant(client_ts) + timedelta(minutes=utc_offset_min)).date()


def diary_streak(days: set[date], today: date) -> int:
    """Consecutive days with at least one submission, counting back from today."""
    streak = 0
    cursor = today
    while cursor in days:
        streak += 1
        cursor -= timedelta(days=1)
    return streak


def compute_metrics(
    submissions: Iterable[Mapping],
    actions: Iterable[Mapping],
    today: date,
    chapter_graph=None,
) -> UserMetrics:
    """Aggregate one user's stored submissions and actions into metric values.

    ``submissions`` and ``actions`` are store rows (dicts with ``client_ts``,
    ``utc_offset_min`` and, for actions, ``kind`` and ``payload``). When a
    chapter graph is supplied, chapter completion uses its section/quiz rule;
    otherwise a chapter counts as completed once any quiz for it was completed.
    """
    diary_days = {local_day(s["client_ts"], s["utc_offset_min"]) for s in submissions}

    quiz_scores: list[tuple[datetime, int, float]] = []
    covered: dict[str, set[int]] = {}
    quizzes_done: set[str] = set()
    sound_sessions = 0
    for pos, action in enumerate(actions):
        kind = action["kind"]
        payload = action.get("payload") or {}
        if kind == "quiz_completed":
            quiz_scores.append((parse_instant(action["client_ts"]), pos, float(payload.get("score", 0.0))))
            if payload.get("chapter_id"):
                quizzes_done.add(payload["chapter_id"])
        elif kind == "education_step_completed":
            chapter = payload.get("chapter_id")
            if chapter:
                covered.setdefault(chapter, set()).add(int(payload.get("section_index", 0)))
        elif kind == "sound_session":
            sound_sessions += 1

    if chapter_graph is not None:
        from .content import CHAPTER_COMPLETED, chapter_states

        states = chapter_states(chapter_graph, covered, quizzes_done)
        chapters_completed = sum(1 for s in states.values() if s == CHAPTER_COMPLETED)
    else:
        chapters_completed = len(quizzes_done)

    latest = max(quiz_scores, key=lambda item: (item[0], item[1]))[2] if quiz_scores else 0.0
    mean = sum(s for _, _, s in quiz_scores) / len(quiz_scores) if quiz_scores else 0.0
    return UserMetrics(
        quiz_score_latest=latest,
        quiz_score_mean=mean,
        chapters_completed=chapters_completed,
        diary_streak_days=diary_streak(diary_days, today),
        sound_sessions_count=sound_sessions,
    )


def pick_language(messages: Mapping[str, str], chain: Iterable[str]) -> tuple[str, str]:
    """Resolve a message through the fallback chain, then "en", then any."""
    for code in chain:
        if code in messages:
            return code, messages[code]
    if "en" in messages:
        return "en", messages["en"]
    code = min(messages)
    return code, messages[code]


def evaluate(rules: Iterable[FeedbackRule], metrics: UserMetrics,
             language_chain: Iterable[str]) -> list[FiredFeedback]:
    """Fire every rule whose comparison holds, ordered by priority descending."""
    chain = list(language_chain)
    fired: list[FiredFeedback] = []
    for rule in rules:
        value = metrics.value(rule.metric)
        if COMPARATORS[rule.comparator](value, rule.threshold):
            language, message = pick_language(rule.messages, chain)
            fired.append(FiredFeedback(rule.rule_id, rule.metric, value, rule.comparator,
                                       rule.threshold, rule.priority, language, message))
    fired.sort(key=lambda f: f.priority, reverse=True)
    return fired


def rules_from_artifact(document: Mapping) -> list[FeedbackRule]:
    """Load rules from a compiled feedback-rules artifact document."""
    return [
        FeedbackRule(
            rule_id=r["rule_id"],
            metric=r["metric"],
            comparator=r["comparator"],
            threshold=r["threshold"],
            priority=r["priority"],
            messages=dict(r["message"]),
        )
        for r in document.get("rules", [])
    ]
