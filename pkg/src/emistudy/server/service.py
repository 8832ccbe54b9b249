"""Application service behind the HTTP layer.

Owns enrollment, gating, idempotent writes and read models. Raises domain
errors from ``emistudy.errors``; the route layer maps them to HTTP statuses.
A clock callable is injected so window boundaries are testable.
"""

from __future__ import annotations

import hashlib
import secrets
import threading
import uuid
from datetime import datetime, timedelta
from typing import Callable, Mapping

from ..adherence import AdherenceSummary, daily_series, summarize
from ..content import (
    ContentStore,
    arm_manifest,
    chapter_states,
    validate_chapter_graph,
    validate_sound_catalog,
)
from ..errors import (
    ConflictError,
    ForbiddenError,
    NotFoundError,
    UnauthorizedError,
    UnprocessableError,
)
from ..feedback import compute_metrics, evaluate, local_day, parse_instant, rules_from_artifact
from ..questionnaire import check_answers, compute_digest, localize, validate_artifact
from ..storage import Store
from ..study import (
    ArmRandomizer,
    Module,
    StudyArm,
    StudyConfig,
    enrollment_window,
    modules_for,
    now_utc,
)

TOKEN_TTL_DAYS = 400  # outlives the 12-week participation window

ACTION_MODULE_FOR_KIND = {
    "education_step_completed": Module.TINEDU,
    "quiz_completed": Module.TINEDU,
    "sound_session": Module.SHADES_OF_NOISE,
    "sound_rating": Module.SHADES_OF_NOISE,
    "feedback_viewed": Module.FEEDBACK,
}

SEEDABLE_KINDS = ("questionnaire", "quiz", "feedback_rules", "chapter_graph", "sound_catalog")

_DEFAULT_ABOUT = {
    "version": "builtin-1",
    "title": "About this study",
    "html": "<h1>About this study</h1>"
            "<p>This app accompanies a multi-center mobile intervention study. "
            "It collects daily diary entries and delivers education and sound "
            "modules depending on your study group.</p>",
}


def hash_token(token: str) -> str:
    return hashlib.sha256(token.encode("utf-8")).hexdigest()


def hash_password(password: str, salt: str | None = None) -> str:
    salt = salt or secrets.token_hex(8)
    digest = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), bytes.fromhex(salt), 100_000)
    return f"pbkdf2:{salt}:{digest.hex()}"


def _normalize_client_id(value: str) -> str:
    """Client-minted 128-bit ids: 32 hex digits, dashes tolerated."""
    cleaned = value.replace("-", "").lower()
    if len(cleaned) != 32 or any(c not in "0123456789abcdef" for c in cleaned):
        raise UnprocessableError(f"client id must be a 128-bit hex value, got {value!r}")
    return cleaned


def _client_instant(value: str) -> datetime:
    try:
        return parse_instant(value)
    except ValueError:
        raise UnprocessableError(f"client_ts is not an ISO-8601 instant: {value!r}") from None


class Principal:
    """Authenticated caller: a participant row plus assignment, or a researcher."""

    def __init__(self, user: dict | None, assignment: dict | None, researcher: bool = False):
        self.user = user
        self.assignment = assignment
        self.researcher = researcher

    @property
    def arm(self) -> StudyArm:
        return StudyArm(self.assignment["arm"])

    @property
    def modules(self) -> frozenset[Module]:
        return modules_for(self.arm)


class StudyService:
    def __init__(self, store: Store, content: ContentStore, config: StudyConfig,
                 clock: Callable[[], datetime] = now_utc,
                 researcher_token: str | None = None):
        self.store = store
        self.content = content
        self.config = config
        self.clock = clock
        self.researcher_token = researcher_token
        self._enroll_lock = threading.Lock()
        self._seed = self._resolve_seed()
        self.randomizer = ArmRandomizer(self._seed, config.block_size,
                                        state=store.randomizer_state())

    def _resolve_seed(self) -> str:
        persisted = self.store.get_meta("randomizer_seed")
        if persisted:
            return persisted
        if self.config.seed_policy == "entropy":
            seed = secrets.token_hex(16)
            self.store.set_meta("seed_audit",
                                f"{self.clock().isoformat()} entropy seed {seed}")
        else:
            seed = self.config.seed or "0"
        self.store.set_meta("randomizer_seed", seed)
        return seed

    # -- auth -----------------------------------------------------------------

    def authenticate(self, bearer: str | None) -> Principal:
        if not bearer:
            raise UnauthorizedError("missing bearer token")
        if self.researcher_token and secrets.compare_digest(bearer, self.researcher_token):
            return Principal(None, None, researcher=True)
        record = self.store.lookup_token(hash_token(bearer))
        if record is None:
            raise UnauthorizedError("unknown token")
        if self.clock() >= parse_instant(record["expires_at"]):
            raise UnauthorizedError("token expired")
        user = self.store.get_user(record["user_id"])
        assignment = self.store.get_assignment(record["user_id"])
        if user is None or assignment is None:
            raise UnauthorizedError("token user no longer exists")
        return Principal(user, assignment)

    def require_researcher(self, bearer: str | None) -> Principal:
        principal = self.authenticate(bearer)
        if not principal.researcher:
            raise ForbiddenError("researcher role required")
        return principal

    # -- enrollment -----------------------------------------------------------

    def register(self, center_id: str, language: str | None = None,
                 login: str | None = None, password: str | None = None) -> dict:
        """Create user + assignment + token atomically; anonymous when no login."""
        center = self.config.center(center_id)
        language = language or center.language
        now = self.clock()
        with self._enroll_lock:
            if login and self.store.login_taken(login):
                raise ConflictError(f"login {login!r} is already in use")
            arm, block_id, position = self.randomizer.draw(center_id)
            user_id = uuid.uuid4().hex
            token = secrets.token_urlsafe(32)
            user = {
                "user_id": user_id,
                "auth_mode": "registered" if login else "anonymous",
                "center_id": center_id,
                "language": language,
                "enrolled_at": now.isoformat(),
                "login": login,
                "password_hash": hash_password(password) if password else None,
            }
            assignment = {
                "user_id": user_id,
                "arm": arm.value,
                "center_id": center_id,
                "block_id": block_id,
                "position": position,
                "assigned_at": now.isoformat(),
            }
            token_row = {
                "token_hash": hash_token(token),
                "user_id": user_id,
                "issued_at": now.isoformat(),
                "expires_at": (now + timedelta(days=TOKEN_TTL_DAYS)).isoformat(),
            }
            try:
                self.store.create_enrollment(user, assignment, token_row, self.randomizer.state())
            except Exception:
                # roll the in-memory randomizer back to the persisted state
                self.randomizer = ArmRandomizer(self._seed, self.config.block_size,
                                                state=self.store.randomizer_state())
                raise
        return {"user": user, "assignment": assignment, "token": token}

    def window_status(self, principal: Principal) -> dict:
        enrolled_at = parse_instant(principal.user["enrolled_at"])
        return enrollment_window(enrolled_at, self.clock(), self.config.window_days)

    # -- config & schemas -------------------------------------------------------

    def get_config(self, principal: Principal) -> dict:
        modules = sorted(m.value for m in principal.modules)
        schemas = {}
        for kind in ("questionnaire", "quiz"):
            for schema_id, version in self.store.latest_versions(kind).items():
                record = self.store.get_artifact(kind, schema_id, version)
                if record["document"].get("module") in modules:
                    schemas[schema_id] = {
                        "kind": kind,
                        "module": record["document"]["module"],
                        "version": version,
                        "digest": record["digest"],
                    }
        return {
            "user_id": principal.user["user_id"],
            "center_id": principal.user["center_id"],
            "language": principal.user["language"],
            "arm": principal.arm.value,
            "modules": modules,
            "schemas": schemas,
            "window": self.window_status(principal),
            "content_manifest": "/v1/content/manifest",
        }

    def _language_chain(self, principal: Principal, requested: str | None) -> list[str]:
        center = self.config.center(principal.user["center_id"])
        chain = [requested or principal.user["language"], center.language, "en"]
        return [c for i, c in enumerate(chain) if c and c not in chain[:i]]

    def get_questionnaire(self, principal: Principal, schema_id: str,
                          lang: str | None = None, version: int | None = None) -> dict:
        record = self.store.get_artifact("questionnaire", schema_id, version)
        if record is None:
            record = self.store.get_artifact("quiz", schema_id, version)
        if record is None:
            raise NotFoundError(f"unknown schema {schema_id!r}")
        module = Module(record["document"]["module"])
        if module not in principal.modules:
            raise ForbiddenError(f"module {module.value!r} is not part of arm {principal.arm.value!r}")
        return localize(record["document"], self._language_chain(principal, lang))

    # -- submissions ------------------------------------------------------------

    def submit(self, principal: Principal, envelope: Mapping) -> dict:
        if principal.user["user_id"] != envelope.get("user_id", principal.user["user_id"]):
            raise ForbiddenError("envelope user does not match token user")
        if not self.window_status(principal)["active"]:
            raise ForbiddenError("participation window has ended; submissions are closed")
        client_id = _normalize_client_id(envelope["submission_id"])

        record = self.store.get_artifact("questionnaire", envelope["schema_id"],
                                         envelope["schema_version"])
        if record is None:
            raise ConflictError(
                f"schema {envelope['schema_id']!r} version {envelope['schema_version']} "
                "is not seeded; refresh configuration")
        document = record["document"]
        if Module(document["module"]) not in principal.modules:
            raise ForbiddenError(f"module {document['module']!r} is not part of this arm")

        findings = check_answers(document, envelope["answers"])
        if findings:
            raise UnprocessableError("answers failed validation", findings)

        client_ts = _client_instant(envelope["client_ts"])
        stored = self.store.insert_submission({
            "user_id": principal.user["user_id"],
            "client_id": client_id,
            "schema_id": envelope["schema_id"],
            "schema_version": envelope["schema_version"],
            "answers": dict(envelope["answers"]),
            "client_ts": client_ts.isoformat(),
            "utc_offset_min": int(envelope.get("utc_offset_min") or 0),
            "language": envelope.get("language") or principal.user["language"],
            "received_at": self.clock().isoformat(),
        })
        return {"accepted": True, "submission_id": client_id, "duplicate": not stored}

    # -- intervention actions ----------------------------------------------------

    def log_action(self, principal: Principal, draft: Mapping) -> dict:
        if not self.window_status(principal)["active"]:
            raise ForbiddenError("participation window has ended; actions are closed")
        dedup_id = _normalize_client_id(draft["dedup_id"])
        kind = draft["kind"]
        if kind not in ACTION_MODULE_FOR_KIND:
            raise UnprocessableError(f"unknown action kind {kind!r}")
        try:
            module = Module(draft["module"])
        except ValueError:
            raise UnprocessableError(f"unknown module {draft['module']!r}") from None
        if ACTION_MODULE_FOR_KIND[kind] is not module:
            raise UnprocessableError(
                f"action kind {kind!r} belongs to module {ACTION_MODULE_FOR_KIND[kind].value!r}, "
                f"not {module.value!r}")
        if module not in principal.modules:
            raise ForbiddenError(f"module {module.value!r} is not part of arm {principal.arm.value!r}")

        payload = dict(draft.get("payload") or {})
        self._check_action_payload(kind, payload)

        client_ts = _client_instant(draft["client_ts"])
        action_id, stored = self.store.insert_action({
            "user_id": principal.user["user_id"],
            "dedup_id": dedup_id,
            "module": module.value,
            "kind": kind,
            "payload": payload,
            "client_ts": client_ts.isoformat(),
            "utc_offset_min": int(draft.get("utc_offset_min", 0)),
            "center_id": principal.user["center_id"],
            "received_at": self.clock().isoformat(),
        })
        return {"action_id": action_id, "duplicate": not stored}

    @staticmethod
    def _check_action_payload(kind: str, payload: dict) -> None:
        def need(field: str, check, message: str) -> None:
            value = payload.get(field)
            if not check(value):
                raise UnprocessableError(f"{kind} payload: {message}, got {value!r}")

        is_num = lambda v: isinstance(v, (int, float)) and not isinstance(v, bool)
        if kind == "education_step_completed":
            need("chapter_id", lambda v: isinstance(v, str) and v, "chapter_id required")
            need("section_index", lambda v: isinstance(v, int) and not isinstance(v, bool) and v >= 0,
                 "section_index must be a non-negative integer")
        elif kind == "quiz_completed":
            need("chapter_id", lambda v: isinstance(v, str) and v, "chapter_id required")
            need("quiz_id", lambda v: isinstance(v, str) and v, "quiz_id required")
            need("score", lambda v: is_num(v) and 0 <= v <= 1, "score must be within [0, 1]")
        elif kind == "sound_session":
            need("sound_id", lambda v: isinstance(v, str) and v, "sound_id required")
            need("duration_seconds", lambda v: is_num(v) and v >= 0,
                 "duration_seconds must be >= 0")
        elif kind == "sound_rating":
            need("sound_id", lambda v: isinstance(v, str) and v, "sound_id required")
            need("rating", lambda v: isinstance(v, int) and not isinstance(v, bool) and 1 <= v <= 5,
                 "rating must be an integer in [1, 5]")

    # -- feedback -----------------------------------------------------------------

    def get_feedback(self, principal: Principal, lang: str | None = None,
                     tz_offset_min: int | None = None) -> list[dict]:
        user_id = principal.user["user_id"]
        submissions = list(self.store.iter_submissions(user_id))
        actions = list(self.store.iter_actions(user_id))

        if tz_offset_min is None:
            tz_offset_min = submissions[-1]["utc_offset_min"] if submissions else 0
        today = local_day(self.clock(), tz_offset_min)

        graph = self.store.get_artifact("chapter_graph", "chapters")
        metrics = compute_metrics(submissions, actions, today,
                                  chapter_graph=graph["document"] if graph else None)

        rules = []
        for rules_id, version in sorted(self.store.latest_versions("feedback_rules").items()):
            record = self.store.get_artifact("feedback_rules", rules_id, version)
            rules.extend(rules_from_artifact(record["document"]))
        fired = evaluate(rules, metrics, self._language_chain(principal, lang))
        return [f.to_dict() for f in fired]

    # -- about ---------------------------------------------------------------------

    def about(self) -> dict:
        bundles = self.content.list_bundles(["about_page"])
        if not bundles:
            return dict(_DEFAULT_ABOUT)
        bundle = bundles[-1]  # newest publish wins
        html_entries = [e for e in bundle.entries if e.path.lower().endswith(".html")]
        if not html_entries:
            return dict(_DEFAULT_ABOUT)
        primary = next((e for e in html_entries if e.path == "index.html"), html_entries[0])
        return {
            "version": bundle.digest,
            "title": "About this study",
            "html": self.content.read_asset(primary.digest).decode("utf-8"),
        }

    # -- content ----------------------------------------------------------------------

    def content_manifest(self, principal: Principal) -> list[dict]:
        bundles = self.content.list_bundles()
        if principal.researcher:
            return [b.to_dict() for b in bundles]
        return [b.to_dict() for b in arm_manifest(bundles, principal.arm)]

    def chapters(self, principal: Principal) -> dict:
        if not principal.researcher and Module.TINEDU not in principal.modules:
            raise ForbiddenError("education module is not part of this arm")
        graph = self.store.get_artifact("chapter_graph", "chapters")
        if graph is None:
            raise NotFoundError("no chapter graph seeded")
        states = {}
        if not principal.researcher:
            covered: dict[str, set[int]] = {}
            quizzes_done: set[str] = set()
            for action in self.store.iter_actions(principal.user["user_id"]):
                payload = action["payload"]
                if action["kind"] == "education_step_completed" and payload.get("chapter_id"):
                    covered.setdefault(payload["chapter_id"], set()).add(int(payload.get("section_index", 0)))
                elif action["kind"] == "quiz_completed" and payload.get("chapter_id"):
                    quizzes_done.add(payload["chapter_id"])
            states = chapter_states(graph["document"], covered, quizzes_done)
        return {"chapters": graph["document"]["chapters"], "states": states}

    def sounds(self, principal: Principal) -> dict:
        if not principal.researcher and Module.SHADES_OF_NOISE not in principal.modules:
            raise ForbiddenError("sound module is not part of this arm")
        catalog = self.store.get_artifact("sound_catalog", "sounds")
        if catalog is None:
            raise NotFoundError("no sound catalog seeded")
        return catalog["document"]

    # -- researcher -----------------------------------------------------------------

    def adherence(self, module: str | None = None, center: str | None = None,
                  date_from: str | None = None, date_to: str | None = None) -> AdherenceSummary:
        try:
            return summarize(self.store.iter_actions(), module=module, center=center,
                             date_from=date_from, date_to=date_to)
        except ValueError as exc:
            raise UnprocessableError(str(exc)) from None

    def user_daily_series(self, user_id: str) -> list[tuple[str, int]]:
        return daily_series(self.store.iter_actions(user_id), user_id)

    # -- seeding ---------------------------------------------------------------------

    def seed_units(self, units: list[Mapping]) -> list[dict]:
        """Apply seed units in order; idempotent per (kind, id, version, digest)."""
        results = []
        for unit in units:
            kind = unit.get("kind")
            if kind not in SEEDABLE_KINDS:
                raise UnprocessableError(f"unknown seed unit kind {kind!r}")
            document = unit["document"]
            digest = compute_digest(document)
            if unit.get("digest") and unit["digest"] != digest:
                raise UnprocessableError(
                    f"seed unit {kind}:{unit.get('id')} digest mismatch: manifest says "
                    f"{unit['digest'][:12]}…, document hashes to {digest[:12]}…")
            self._validate_seed_document(kind, document)
            status = self.store.seed_artifact(
                kind, unit["id"], int(unit["version"]), digest, document,
                self.clock().isoformat())
            results.append({"kind": kind, "id": unit["id"], "version": int(unit["version"]),
                            "digest": digest, "status": status})
        return results

    def _validate_seed_document(self, kind: str, document: Mapping) -> None:
        if kind in ("questionnaire", "quiz", "feedback_rules"):
            report = validate_artifact(document)
            if not report.verdict:
                raise UnprocessableError(f"invalid {kind} artifact",
                                         [f.to_dict() for f in report.errors])
        elif kind == "chapter_graph":
            quiz_ids = set(self.store.latest_versions("quiz"))
            bundle_ids = {b.bundle_id for b in self.content.list_bundles()}
            report = validate_chapter_graph(document, quiz_ids, bundle_ids)
            if not report.verdict:
                raise UnprocessableError("invalid chapter graph",
                                         [f.to_dict() for f in report.errors])
        elif kind == "sound_catalog":
            report = validate_sound_catalog(document, self.content)
            if not report.verdict:
                raise UnprocessableError("invalid sound catalog",
                                         [f.to_dict() for f in report.errors])

    def publish_bundle(self, files: Mapping[str, bytes], kind: str,
                       version: str | None = None) -> dict:
        try:
            return self.content.publish(files, kind, version).to_dict()
        except ValueError as exc:
            raise UnprocessableError(str(exc)) from None
