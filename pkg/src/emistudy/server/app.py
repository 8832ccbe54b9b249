"""FastAPI application wiring the study service to HTTP/JSON routes."""

from __future__ import annotations

import base64
import binascii
import json
import os
import re
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable, Iterator

from fastapi import Depends, FastAPI, Header, Query, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse

from ..adherence import summary_csv
from ..content import ContentStore
from ..errors import (
    ConflictError,
    ContentCorruptedError,
    ForbiddenError,
    NotFoundError,
    PreconditionError,
    UnauthorizedError,
    UnprocessableError,
)
from ..storage import Store
from ..study import StudyConfig, load_config, now_utc
from . import models
from .service import Principal, StudyService

_RANGE_RE = re.compile(r"^bytes=(\d*)-(\d*)$")


@dataclass
class ServerSettings:
    data_dir: Path
    config_path: Path
    researcher_token: str | None = None
    clock: Callable[[], datetime] = field(default=now_utc)
    static_dir: Path | None = None

    @staticmethod
    def from_env() -> "ServerSettings":
        data_dir = Path(os.environ.get("EMISTUDY_DATA_DIR", "./data"))
        config_path = Path(os.environ.get("EMISTUDY_CONFIG", "./study.json"))
        static = os.environ.get("EMISTUDY_STATIC")
        return ServerSettings(
            data_dir=data_dir,
            config_path=config_path,
            researcher_token=os.environ.get("EMISTUDY_RESEARCHER_TOKEN"),
            static_dir=Path(static) if static else None,
        )


def build_service(settings: ServerSettings) -> StudyService:
    config = load_config(settings.config_path)
    if os.environ.get("EMISTUDY_SEED_POLICY"):
        config.seed_policy = os.environ["EMISTUDY_SEED_POLICY"]
    settings.data_dir.mkdir(parents=True, exist_ok=True)
    store = Store(settings.data_dir / "study.db")
    content = ContentStore(settings.data_dir / "content")
    researcher = settings.researcher_token
    if researcher is None:
        raw = json.loads(settings.config_path.read_text("utf-8"))
        researcher = raw.get("researcher_token")
    return StudyService(store, content, config, clock=settings.clock,
                        researcher_token=researcher)


def create_app(service: StudyService, static_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="emistudy", version="0.1.0")
    app.state.service = service

    def svc() -> StudyService:
        return app.state.service

    def bearer(authorization: str | None = Header(default=None)) -> str | None:
        if authorization and authorization.lower().startswith("bearer "):
            return authorization[7:].strip()
        return None

    def participant(token: str | None = Depends(bearer)) -> Principal:
        principal = svc().authenticate(token)
        if principal.researcher:
            raise ForbiddenError("participant token required")
        return principal

    def researcher(token: str | None = Depends(bearer)) -> Principal:
        return svc().require_researcher(token)

    # -- error mapping -------------------------------------------------------

    status_for = [
        (UnauthorizedError, 401),
        (ForbiddenError, 403),
        (NotFoundError, 404),
        (ConflictError, 409),
        (PreconditionError, 409),
        (UnprocessableError, 422),
        (ContentCorruptedError, 500),
    ]

    for exc_type, status in status_for:
        def handler(request: Request, exc: Exception, status: int = status) -> JSONResponse:
            body: dict = {"detail": str(exc)}
            if isinstance(exc, UnprocessableError) and exc.findings:
                body["findings"] = exc.findings
            headers = {"WWW-Authenticate": "Bearer"} if status == 401 else None
            return JSONResponse(body, status_code=status, headers=headers)

        app.add_exception_handler(exc_type, handler)

    # -- enrollment ----------------------------------------------------------

    def _enrollment_response(session: dict) -> models.EnrollmentResponse:
        principal = Principal(session["user"], session["assignment"])
        return models.EnrollmentResponse(
            user_id=session["user"]["user_id"],
            auth_mode=session["user"]["auth_mode"],
            center_id=session["user"]["center_id"],
            language=session["user"]["language"],
            enrolled_at=session["user"]["enrolled_at"],
            token=session["token"],
            arm=session["assignment"]["arm"],
            modules=sorted(m.value for m in principal.modules),
            window=models.WindowStatus(**svc().window_status(principal)),
        )

    @app.post("/v1/users", response_model=models.EnrollmentResponse, status_code=201)
    def register(body: models.RegisterRequest) -> models.EnrollmentResponse:
        session = svc().register(body.center_id, body.language,
                                 login=body.login, password=body.password)
        return _enrollment_response(session)

    @app.post("/v1/users/anonymous", response_model=models.EnrollmentResponse, status_code=201)
    def register_anonymous(body: models.AnonymousRequest) -> models.EnrollmentResponse:
        session = svc().register(body.center_id, body.language)
        return _enrollment_response(session)

    # -- participant reads -----------------------------------------------------

    @app.get("/v1/config", response_model=models.ConfigResponse)
    def get_config(principal: Principal = Depends(participant)) -> dict:
        return svc().get_config(principal)

    @app.get("/v1/questionnaires/{schema_id}")
    def get_questionnaire(schema_id: str, lang: str | None = Query(default=None),
                          version: int | None = Query(default=None),
                          principal: Principal = Depends(participant)) -> dict:
        return svc().get_questionnaire(principal, schema_id, lang, version)

    @app.get("/v1/feedback", response_model=models.FeedbackResponse)
    def get_feedback(lang: str | None = Query(default=None),
                     tz_offset_min: int | None = Query(default=None),
                     principal: Principal = Depends(participant)) -> dict:
        return {"messages": svc().get_feedback(principal, lang, tz_offset_min)}

    @app.get("/v1/about", response_model=models.AboutResponse)
    def get_about() -> dict:
        return svc().about()

    @app.get("/v1/chapters")
    def get_chapters(principal: Principal = Depends(participant)) -> dict:
        return svc().chapters(principal)

    @app.get("/v1/sounds")
    def get_sounds(principal: Principal = Depends(participant)) -> dict:
        return svc().sounds(principal)

    # -- participant writes ------------------------------------------------------

    @app.post("/v1/submissions", response_model=models.SubmissionResponse)
    def submit(body: models.SubmissionRequest,
               principal: Principal = Depends(participant)) -> dict:
        return svc().submit(principal, body.model_dump())

    @app.post("/v1/actions", response_model=models.ActionResponse)
    def log_action(body: models.ActionRequest,
                   principal: Principal = Depends(participant)) -> dict:
        return svc().log_action(principal, body.model_dump())

    # -- content -------------------------------------------------------------------

    @app.get("/v1/content/manifest", response_model=models.ManifestResponse)
    def content_manifest(token: str | None = Depends(bearer)) -> dict:
        principal = svc().authenticate(token)
        return {"bundles": svc().content_manifest(principal)}

    @app.get("/v1/content/{digest}")
    def fetch_asset(digest: str, request: Request,
                    token: str | None = Depends(bearer)) -> Response:
        svc().authenticate(token)
        store = svc().content
        total = store.asset_size(digest)
        range_header = request.headers.get("range")
        if range_header is None:
            data = store.read_asset(digest)
            return Response(data, media_type="application/octet-stream",
                            headers={"Accept-Ranges": "bytes"})
        match = _RANGE_RE.match(range_header.strip())
        if not match or (match.group(1) == "" and match.group(2) == ""):
            return Response(status_code=416, headers={"Content-Range": f"bytes */{total}"})
        if match.group(1) == "":  # suffix range: last N bytes
            length = int(match.group(2))
            start, end = max(total - length, 0), total - 1
        else:
            start = int(match.group(1))
            end = int(match.group(2)) if match.group(2) else total - 1
        if start >= total or end < start:
            return Response(status_code=416, headers={"Content-Range": f"bytes */{total}"})
        end = min(end, total - 1)
        data = store.read_asset(digest, start, end)
        return Response(
            data, status_code=206, media_type="application/octet-stream",
            headers={
                "Accept-Ranges": "bytes",
                "Content-Range": f"bytes {start}-{end}/{total}",
            },
        )

    # -- researcher ------------------------------------------------------------------

    @app.get("/v1/stats/adherence")
    def adherence(module: str | None = Query(default=None),
                  center: str | None = Query(default=None),
                  date_from: str | None = Query(default=None, alias="from"),
                  date_to: str | None = Query(default=None, alias="to"),
                  format: str = Query(default="json"),
                  _: Principal = Depends(researcher)) -> Response:
        summary = svc().adherence(module, center, date_from, date_to)
        if format == "csv":
            return PlainTextResponse(summary_csv(summary), media_type="text/csv")
        return JSONResponse(models.AdherenceResponse(**summary.to_dict()).model_dump())

    @app.get("/v1/stats/series")
    def stats_series(user: str = Query(...), _: Principal = Depends(researcher)) -> dict:
        return {"user_id": user,
                "series": [{"day": day, "count": count}
                           for day, count in svc().user_daily_series(user)]}

    @app.get("/v1/export")
    def export(entity: str = Query(...), _: Principal = Depends(researcher)) -> StreamingResponse:
        try:
            rows = list(svc().store.export(entity))
        except ValueError as exc:
            raise UnprocessableError(str(exc)) from None

        def lines() -> Iterator[bytes]:
            for row in rows:
                yield (json.dumps(row, sort_keys=True) + "\n").encode("utf-8")

        return StreamingResponse(lines(), media_type="application/x-ndjson")

    @app.post("/v1/admin/seed", response_model=models.SeedResponse)
    def seed(body: models.SeedRequest, _: Principal = Depends(researcher)) -> dict:
        results = svc().seed_units([u.model_dump() for u in body.units])
        return {"results": results}

    @app.post("/v1/admin/bundles", response_model=models.BundleModel, status_code=201)
    def publish_bundle(body: models.PublishRequest, _: Principal = Depends(researcher)) -> dict:
        try:
            files = {f.path: base64.b64decode(f.content_b64, validate=True) for f in body.files}
        except (binascii.Error, ValueError) as exc:
            raise UnprocessableError(f"invalid base64 content: {exc}") from None
        return svc().publish_bundle(files, body.kind, body.version)

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok"}

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/app", StaticFiles(directory=static_dir, html=True), name="app")

    return app


def create_app_from_settings(settings: ServerSettings) -> FastAPI:
    return create_app(build_service(settings), settings.static_dir)
