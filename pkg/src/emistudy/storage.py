"""SQLite-backed store for users, assignments, artifacts, submissions, actions.

All writes run in short serialized transactions behind one lock, which
linearizes enrollment and per-user writes (a stronger guarantee than the
per-center minimum the assignment path needs). Bulk export yields plain dicts
suitable for newline-delimited JSON.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator

from .errors import ConflictError

_SCHEMA = """
CREATE TABLE IF NOT EXISTS users (
    user_id TEXT PRIMARY KEY,
    auth_mode TEXT NOT NULL,
    center_id TEXT NOT NULL,
    language TEXT NOT NULL,
    enrolled_at TEXT NOT NULL,
    login TEXT UNIQUE,
    password_hash TEXT
);

CREATE TABLE IF NOT EXISTS tokens (
    token_hash TEXT PRIMARY KEY,
    user_id TEXT NOT NULL REFERENCES users(user_id),
    issued_at TEXT NOT NULL,
    expires_at TEXT NOT NULL
);

CREATE TABLE IF NOT EXISTS assignments (
    user_id TEXT PRIMARY KEY REFERENCES users(user_id),
    arm TEXT NOT NULL,
    center_id TEXT NOT NULL,
    block_id TEXT NOT NULL,
    position INTEGER NOT NULL,
    assigned_at TEXT NOT NULL
);

CREATE TABLE IF NOT EXISTS artifacts (
    kind TEXT NOT NULL,
    id TEXT NOT NULL,
    version INTEGER NOT NULL,
    digest TEXT NOT NULL,
    document TEXT NOT NULL,
    seeded_at TEXT NOT NULL,
    PRIMARY KEY (kind, id, version)
);

CREATE TABLE IF NOT EXISTS submissions (
    user_id TEXT NOT NULL REFERENCES users(user_id),
    client_id TEXT NOT NULL,
    schema_id TEXT NOT NULL,
    schema_version INTEGER NOT NULL,
    answers TEXT NOT NULL,
    client_ts TEXT NOT NULL,
    utc_offset_min INTEGER NOT NULL,
    language TEXT NOT NULL,
    received_at TEXT NOT NULL,
    PRIMARY KEY (user_id, client_id)
);

CREATE TABLE IF NOT EXISTS actions (
    action_id INTEGER PRIMARY KEY AUTOINCREMENT,
    user_id TEXT NOT NULL REFERENCES users(user_id),
    dedup_id TEXT NOT NULL,
    module TEXT NOT NULL,
    kind TEXT NOT NULL,
    payload TEXT NOT NULL,
    client_ts TEXT NOT NULL,
    utc_offset_min INTEGER NOT NULL,
    center_id TEXT NOT NULL,
    received_at TEXT NOT NULL,
    UNIQUE (user_id, dedup_id)
);

CREATE TABLE IF NOT EXISTS meta (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
"""


class Store:
    """Single-file embedded store; safe for concurrent handler threads."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._conn = sqlite3.connect(self.path, check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        self._conn.execute("PRAGMA journal_mode=WAL")
        self._conn.execute("PRAGMA foreign_keys=ON")
        self._lock = threading.RLock()
        with self._tx():
            self._conn.executescript(_SCHEMA)

    def close(self) -> None:
        self._conn.close()

    @contextmanager
    def _tx(self):
        with self._lock:
            try:
                yield self._conn
                self._conn.commit()
            except Exception:
                self._conn.rollback()
                raise

    # -- meta ----------------------------------------------------------------

    def get_meta(self, key: str) -> str | None:
        with self._lock:
            row = self._conn.execute("SELECT value FROM meta WHERE key = ?", (key,)).fetchone()
        return row["value"] if row else None

    def set_meta(self, key: str, value: str) -> None:
        with self._tx() as conn:
            conn.execute("INSERT INTO meta (key, value) VALUES (?, ?) "
                         "ON CONFLICT(key) DO UPDATE SET value = excluded.value", (key, value))

    # -- enrollment ----------------------------------------------------------

    def login_taken(self, login: str) -> bool:
        with self._lock:
            row = self._conn.execute("SELECT 1 FROM users WHERE login = ?", (login,)).fetchone()
        return row is not None

    def create_enrollment(self, user: dict, assignment: dict, token: dict,
                          randomizer_state: dict) -> None:
        """Atomically persist user + assignment + token + randomizer state."""
        with self._tx() as conn:
            if user.get("login"):
                taken = conn.execute("SELECT 1 FROM users WHERE login = ?", (user["login"],)).fetchone()
                if taken:
                    raise ConflictError(f"login {user['login']!r} is already in use")
            conn.execute(
                "INSERT INTO users (user_id, auth_mode, center_id, language, enrolled_at, login, password_hash) "
                "VALUES (:user_id, :auth_mode, :center_id, :language, :enrolled_at, :login, :password_hash)",
                {**user, "login": user.get("login"), "password_hash": user.get("password_hash")},
            )
            conn.execute(
                "INSERT INTO assignments (user_id, arm, center_id, block_id, position, assigned_at) "
                "VALUES (:user_id, :arm, :center_id, :block_id, :position, :assigned_at)",
                assignment,
            )
            conn.execute(
                "INSERT INTO tokens (token_hash, user_id, issued_at, expires_at) "
                "VALUES (:token_hash, :user_id, :issued_at, :expires_at)",
                token,
            )
            conn.execute("INSERT INTO meta (key, value) VALUES ('randomizer_state', ?) "
                         "ON CONFLICT(key) DO UPDATE SET value = excluded.value",
                         (json.dumps(randomizer_state),))

    def randomizer_state(self) -> dict | None:
        raw = self.get_meta("randomizer_state")
        return json.loads(raw) if raw else None

    def enrollment_lock(self) -> threading.RLock:
        """Lock to hold across draw-and-persist so assignment is linearized."""
        return self._lock

    def get_user(self, user_id: str) -> dict | None:
        with self._lock:
            row = self._conn.execute("SELECT * FROM users WHERE user_id = ?", (user_id,)).fetchone()
        return dict(row) if row else None

    def get_assignment(self, user_id: str) -> dict | None:
        with self._lock:
            row = self._conn.execute("SELECT * FROM assignments WHERE user_id = ?", (user_id,)).fetchone()
        return dict(row) if row else None

    def lookup_token(self, token_hash: str) -> dict | None:
        with self._lock:
            row = self._conn.execute("SELECT * FROM tokens WHERE token_hash = ?", (token_hash,)).fetchone()
        return dict(row) if row else None

    def count(self, table: str) -> int:
        if table not in ("users", "assignments", "submissions", "actions", "artifacts", "tokens"):
            raise ValueError(f"unknown table {table!r}")
        with self._lock:
            return self._conn.execute(f"SELECT COUNT(*) AS n FROM {table}").fetchone()["n"]

    # -- artifacts -----------------------------------------------------------

    def seed_artifact(self, kind: str, artifact_id: str, version: int, digest: str,
                      document: dict, seeded_at: str) -> str:
        """Idempotent artifact load; returns 'inserted' or 'skipped'.

        Raises ConflictError when the same (kind, id, version) is already
        bound to different content.
        """
        with self._tx() as conn:
            row = conn.execute(
                "SELECT digest FROM artifacts WHERE kind = ? AND id = ? AND version = ?",
                (kind, artifact_id, version),
            ).fetchone()
            if row is not None:
                if row["digest"] != digest:
                    raise ConflictError(
                        f"{kind}:{artifact_id} v{version} already seeded with digest "
                        f"{row['digest'][:12]}…, refusing {digest[:12]}…")
                return "skipped"
            conn.execute(
                "INSERT INTO artifacts (kind, id, version, digest, document, seeded_at) "
                "VALUES (?, ?, ?, ?, ?, ?)",
                (kind, artifact_id, version, digest, json.dumps(document, sort_keys=True), seeded_at),
            )
            return "inserted"

    def get_artifact(self, kind: str, artifact_id: str, version: int | None = None) -> dict | None:
        query = "SELECT * FROM artifacts WHERE kind = ? AND id = ?"
        params: tuple = (kind, artifact_id)
        if version is None:
            query += " ORDER BY version DESC LIMIT 1"
        else:
            query += " AND version = ?"
            params = (kind, artifact_id, version)
        with self._lock:
            row = self._conn.execute(query, params).fetchone()
        if row is None:
            return None
        record = dict(row)
        record["document"] = json.loads(record["document"])
        return record

    def list_artifacts(self, kind: str | None = None) -> list[dict]:
        query = "SELECT kind, id, version, digest, seeded_at FROM artifacts"
        params: tuple = ()
        if kind is not None:
            query += " WHERE kind = ?"
            params = (kind,)
        query += " ORDER BY kind, id, version"
        with self._lock:
            rows = self._conn.execute(query, params).fetchall()
        return [dict(r) for r in rows]

    def latest_versions(self, kind: str) -> dict[str, int]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT id, MAX(version) AS version FROM artifacts WHERE kind = ? GROUP BY id",
                (kind,),
            ).fetchall()
        return {r["id"]: r["version"] for r in rows}

    # -- submissions ---------------------------------------------------------

    def insert_submission(self, row: dict) -> bool:
        """Store a submission unless its client id was seen; True when stored.

        The duplicate check and the insert share one serialized transaction,
        so retransmissions can never store twice; genuine constraint
        violations still raise instead of being muffled.
        """
        with self._tx() as conn:
            seen = conn.execute(
                "SELECT 1 FROM submissions WHERE user_id = ? AND client_id = ?",
                (row["user_id"], row["client_id"]),
            ).fetchone()
            if seen:
                return False
            conn.execute(
                "INSERT INTO submissions "
                "(user_id, client_id, schema_id, schema_version, answers, client_ts, "
                " utc_offset_min, language, received_at) "
                "VALUES (:user_id, :client_id, :schema_id, :schema_version, :answers, "
                "        :client_ts, :utc_offset_min, :language, :received_at)",
                {**row, "answers": json.dumps(row["answers"], sort_keys=True)},
            )
            return True

    def iter_submissions(self, user_id: str | None = None) -> Iterator[dict]:
        query = "SELECT * FROM submissions"
        params: tuple = ()
        if user_id is not None:
            query += " WHERE user_id = ?"
            params = (user_id,)
        query += " ORDER BY received_at, client_id"
        with self._lock:
            rows = self._conn.execute(query, params).fetchall()
        for row in rows:
            record = dict(row)
            record["answers"] = json.loads(record["answers"])
            yield record

    # -- actions --------------------------------------------------------------

    def insert_action(self, row: dict) -> tuple[int, bool]:
        """Store an action unless its dedup id was seen; returns (action_id, stored)."""
        with self._tx() as conn:
            existing = conn.execute(
                "SELECT action_id FROM actions WHERE user_id = ? AND dedup_id = ?",
                (row["user_id"], row["dedup_id"]),
            ).fetchone()
            if existing:
                return existing["action_id"], False
            cursor = conn.execute(
                "INSERT INTO actions "
                "(user_id, dedup_id, module, kind, payload, client_ts, utc_offset_min, "
                " center_id, received_at) "
                "VALUES (:user_id, :dedup_id, :module, :kind, :payload, :client_ts, "
                "        :utc_offset_min, :center_id, :received_at)",
                {**row, "payload": json.dumps(row["payload"], sort_keys=True)},
            )
            return cursor.lastrowid, True

    def iter_actions(self, user_id: str | None = None) -> Iterator[dict]:
        query = "SELECT * FROM actions"
        params: tuple = ()
        if user_id is not None:
            query += " WHERE user_id = ?"
            params = (user_id,)
        query += " ORDER BY action_id"
        with self._lock:
            rows = self._conn.execute(query, params).fetchall()
        for row in rows:
            record = dict(row)
            record["payload"] = json.loads(record["payload"])
            yield record

    # -- export ---------------------------------------------------------------

    def export(self, entity: str) -> Iterator[dict]:
        """Bulk export of one entity as dict rows for newline-delimited JSON."""
        if entity == "submissions":
            yield from self.iter_submissions()
        elif entity == "actions":
            yield from self.iter_actions()
        elif entity in ("users", "assignments"):
            with self._lock:
                rows = self._conn.execute(f"SELECT * FROM {entity}").fetchall()
            for row in rows:
                record = dict(row)
                record.pop("password_hash", None)
                yield record
        else:
            raise ValueError(f"unknown export entity {entity!r}")
