"""Pydantic request/response bodies for the HTTP API.

Unknown fields are ignored on input (pydantic default) and response models
only ever emit the fields declared here.
"""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel, Field


class WindowStatus(BaseModel):
    active: bool
    expired: bool
    days_remaining: int


class RegisterRequest(BaseModel):
    center_id: str
    login: str = Field(min_length=3, max_length=64)
    password: str = Field(min_length=8, max_length=256)
    language: str | None = None


class AnonymousRequest(BaseModel):
    center_id: str
    language: str | None = None


class EnrollmentResponse(BaseModel):
    user_id: str
    auth_mode: str
    center_id: str
    language: str
    enrolled_at: str
    token: str
    arm: str
    modules: list[str]
    window: WindowStatus


class SchemaInfo(BaseModel):
    kind: str
    module: str
    version: int
    digest: str


class ConfigResponse(BaseModel):
    user_id: str
    center_id: str
    language: str
    arm: str
    modules: list[str]
    schemas: dict[str, SchemaInfo]
    window: WindowStatus
    content_manifest: str


class SubmissionRequest(BaseModel):
    submission_id: str
    schema_id: str
    schema_version: int
    answers: dict[str, Any]
    client_ts: str
    utc_offset_min: int = 0
    language: str | None = None


class SubmissionResponse(BaseModel):
    accepted: bool
    submission_id: str
    duplicate: bool


class ActionRequest(BaseModel):
    dedup_id: str
    module: str
    kind: str
    payload: dict[str, Any] = Field(default_factory=dict)
    client_ts: str
    utc_offset_min: int = 0


class ActionResponse(BaseModel):
    action_id: int
    duplicate: bool


class FeedbackMessage(BaseModel):
    rule_id: str
    metric: str
    value: float
    comparator: str
    threshold: float
    priority: int
    language: str
    message: str


class FeedbackResponse(BaseModel):
    messages: list[FeedbackMessage]


class AboutResponse(BaseModel):
    version: str
    title: str
    html: str


class FileEntryModel(BaseModel):
    path: str
    size: int
    digest: str


class BundleModel(BaseModel):
    bundle_id: str
    kind: str
    entries: list[FileEntryModel]
    digest: str
    version: str
    published_at: str


class ManifestResponse(BaseModel):
    bundles: list[BundleModel]


class AdherenceResponse(BaseModel):
    total: int
    distinct_users: int
    max_per_user: int
    per_user: dict[str, int]
    per_module: dict[str, int]
    date_range: list[str] | None


class SeedUnit(BaseModel):
    kind: str
    id: str
    version: int
    digest: str | None = None
    document: dict[str, Any]


class SeedRequest(BaseModel):
    units: list[SeedUnit]


class SeedResult(BaseModel):
    kind: str
    id: str
    version: int
    digest: str
    status: str


class SeedResponse(BaseModel):
    results: list[SeedResult]


class PublishFile(BaseModel):
    path: str
    content_b64: str


class PublishRequest(BaseModel):
    kind: str
    version: str | None = None
    files: list[PublishFile]
