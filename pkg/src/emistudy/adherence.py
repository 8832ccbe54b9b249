"""Adherence aggregation over intervention-action logs.

``summarize`` streams over an action cursor once and keeps only per-user and
per-module counters, so exports of any desk-scale study fit in memory. Days
are bucketed by the client-local calendar captured with each action.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import date
from typing import Iterable, Mapping

from .feedback import local_day


@dataclass
class AdherenceSummary:
    total: int = 0
    distinct_users: int = 0
    max_per_user: int = 0
    per_user: dict[str, int] = field(default_factory=dict)
    per_module: dict[str, int] = field(default_factory=dict)
    date_range: tuple[str, str] | None = None

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "distinct_users": self.distinct_users,
            "max_per_user": self.max_per_user,
            "per_user": dict(self.per_user),
            "per_module": dict(self.per_module),
            "date_range": list(self.date_range) if self.date_range else None,
        }


def _parse_filter_date(value: str | date | None, name: str) -> date | None:
    if value is None or isinstance(value, date):
        return value
    try:
        return date.fromisoformat(value)
    except ValueError:
        raise ValueError(f"{name} must be an ISO date, got {value!r}") from None


def summarize(actions: Iterable[Mapping], module: str | None = None,
              center: str | None = None, date_from: str | date | None = None,
              date_to: str | date | None = None) -> AdherenceSummary:
    """Aggregate an action log; filters combine as a logical AND.

    Each action row needs ``user_id``, ``module``, ``center_id``,
    ``client_ts`` and ``utc_offset_min``.
    """
    start = _parse_filter_date(date_from, "date_from")
    stop = _parse_filter_date(date_to, "date_to")
    if start and stop and start > stop:
        raise ValueError(f"inverted date range: {start} > {stop}")

    summary = AdherenceSummary()
    first_day: date | None = None
    last_day: date | None = None
    for action in actions:
        if module is not None and action["module"] != module:
            continue
        if center is not None and action.get("center_id") != center:
            continue
        day = local_day(action["client_ts"], action["utc_offset_min"])
        if start and day < start:
            continue
        if stop and day > stop:
            continue
        user = action["user_id"]
        summary.total += 1
        summary.per_user[user] = summary.per_user.get(user, 0) + 1
        summary.per_module[action["module"]] = summary.per_module.get(action["module"], 0) + 1
        first_day = day if first_day is None or day < first_day else first_day
        last_day = day if last_day is None or day > last_day else last_day

    summary.distinct_users = len(summary.per_user)
    summary.max_per_user = max(summary.per_user.values(), default=0)
    if first_day is not None:
        summary.date_range = (first_day.isoformat(), last_day.isoformat())
    return summary


def daily_series(actions: Iterable[Mapping], user_id: str) -> list[tuple[str, int]]:
    """Per-client-local-day action counts for one user, in day order."""
    counts: dict[date, int] = {}
    for action in actions:
        if action["user_id"] != user_id:
            continue
        day = local_day(action["client_ts"], action["utc_offset_min"])
        counts[day] = counts.get(day, 0) + 1
    return [(day.isoformat(), counts[day]) for day in sorted(counts)]


def summary_csv(summary: AdherenceSummary) -> str:
    """Flat CSV export of a summary for offline analysis."""
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["metric", "key", "value"])
    writer.writerow(["total", "", summary.total])
    writer.writerow(["distinct_users", "", summary.distinct_users])
    writer.writerow(["max_per_user", "", summary.max_per_user])
    if summary.date_range:
        writer.writerow(["date_from", "", summary.date_range[0]])
        writer.writerow(["date_to", "", summary.date_range[1]])
    for module_name in sorted(summary.per_module):
        writer.writerow(["module_count", module_name, summary.per_module[module_name]])
    for user in sorted(summary.per_user):
        writer.writerow(["user_count", user, summary.per_user[user]])
    return out.getvalue()
