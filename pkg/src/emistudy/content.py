"""Hash-addressed static content: bundles, manifests, chapters, sounds.

Static media (education chapter HTML, sound files, the about page) travels as
immutable content-addressed bundles, while interactive artifacts stay on the
API path. A bundle is a set of relative file entries, each stored by its
SHA-256 digest; the bundle digest is the SHA-256 over the newline-joined,
sorted list of file digests, so identical files always republish to the same
bundle.
"""

from __future__ import annotations

import hashlib
import json
import posixpath
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ContentCorruptedError, NotFoundError
from .findings import DANGLING_REFERENCE, DUPLICATE_ID, INVALID_VALUE, ValidationReport
from .study import Module, StudyArm, modules_for

BUNDLE_KINDS = ("tinedu_chapter", "sound_asset", "about_page")

AUDIO_SUFFIXES = (".wav", ".mp3", ".ogg", ".m4a", ".flac")

# Which bundle kinds a module unlocks. About pages are visible to everyone.
KIND_FOR_MODULE = {
    Module.TINEDU: "tinedu_chapter",
    Module.SHADES_OF_NOISE: "sound_asset",
}

CHAPTER_LOCKED = "locked"
CHAPTER_AVAILABLE = "available"
CHAPTER_COMPLETED = "completed"


@dataclass(frozen=True)
class FileEntry:
    path: str
    size: int
    digest: str

    def to_dict(self) -> dict:
        return {"path": self.path, "size": self.size, "digest": self.digest}


@dataclass(frozen=True)
class ContentBundle:
    bundle_id: str
    kind: str
    entries: tuple[FileEntry, ...]
    digest: str
    version: str
    published_at: str

    def to_dict(self) -> dict:
        return {
            "bundle_id": self.bundle_id,
            "kind": self.kind,
            "entries": [e.to_dict() for e in self.entries],
            "digest": self.digest,
            "version": self.version,
            "published_at": self.published_at,
        }

    @staticmethod
    def from_dict(raw: Mapping) -> "ContentBundle":
        return ContentBundle(
            bundle_id=raw["bundle_id"],
            kind=raw["kind"],
            entries=tuple(FileEntry(e["path"], e["size"], e["digest"]) for e in raw["entries"]),
            digest=raw["digest"],
            version=raw["version"],
            published_at=raw["published_at"],
        )


def file_digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def bundle_digest(entry_digests: Iterable[str]) -> str:
    """Digest over the sorted per-file digests; order of entries is irrelevant."""
    joined = "\n".join(sorted(entry_digests)).encode("ascii")
    return hashlib.sha256(joined).hexdigest()


def safe_relative_path(path: str) -> bool:
    """Reject absolute paths, traversal segments and empty paths."""
    if not path or path.startswith("/") or "\\" in path:
        return False
    parts = posixpath.normpath(path).split("/")
    return all(part not in ("", ".", "..") for part in parts) and posixpath.normpath(path) == path


class ContentStore:
    """Filesystem bundle store: ``objects/`` blobs plus one JSON per bundle.

    Bundles are immutable once published; publishing is serialized, reads are
    freely concurrent.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.objects_dir = self.root / "objects"
        self.bundles_dir = self.root / "bundles"
        self.objects_dir.mkdir(parents=True, exist_ok=True)
        self.bundles_dir.mkdir(parents=True, exist_ok=True)
        self._publish_lock = threading.Lock()

    # -- publishing ---------------------------------------------------------

    def publish(self, files: Mapping[str, bytes], kind: str, version: str | None = None) -> ContentBundle:
        """Publish a bundle from relative-path -> bytes; idempotent on content."""
        if kind not in BUNDLE_KINDS:
            raise ValueError(f"unknown bundle kind {kind!r}, expected one of {BUNDLE_KINDS}")
        if not files:
            raise ValueError("refusing to publish an empty bundle")
        for path in files:
            if not safe_relative_path(path):
                raise ValueError(f"unsafe entry path {path!r}: must be relative without traversal")
        if kind == "sound_asset":
            audio = [p for p in files if p.lower().endswith(AUDIO_SUFFIXES)]
            if len(audio) != 1:
                raise ValueError(f"sound_asset bundles need exactly one audio payload, found {len(audio)}")

        with self._publish_lock:
            entries = []
            for path in sorted(files):
                data = files[path]
                digest = file_digest(data)
                self._write_object(digest, data)
                entries.append(FileEntry(path, len(data), digest))
            digest = bundle_digest(e.digest for e in entries)
            bundle_id = f"{kind}-{digest[:12]}"
            existing = self._load_bundle(bundle_id)
            if existing is not None:
                return existing
            bundle = ContentBundle(
                bundle_id=bundle_id,
                kind=kind,
                entries=tuple(entries),
                digest=digest,
                version=version or digest[:12],
                published_at=datetime.now(timezone.utc).isoformat(),
            )
            self._store_bundle(bundle)
            return bundle

    def publish_dir(self, directory: str | Path, kind: str, version: str | None = None) -> ContentBundle:
        directory = Path(directory)
        files = {
            p.relative_to(directory).as_posix(): p.read_bytes()
            for p in sorted(directory.rglob("*")) if p.is_file()
        }
        return self.publish(files, kind, version)

    def _write_object(self, digest: str, data: bytes) -> None:
        target = self.objects_dir / digest
        if target.exists():
            return
        tmp = target.with_suffix(".tmp")
        tmp.write_bytes(data)
        tmp.replace(target)

    def _store_bundle(self, bundle: ContentBundle) -> None:
        target = self.bundles_dir / f"{bundle.bundle_id}.json"
        tmp = target.with_suffix(".tmp")
        tmp.write_text(json.dumps(bundle.to_dict(), indent=2, sort_keys=True) + "\n", "utf-8")
        tmp.replace(target)

    # -- reading ------------------------------------------------------------

    def _load_bundle(self, bundle_id: str) -> ContentBundle | None:
        path = self.bundles_dir / f"{bundle_id}.json"
        if not path.is_file():
            return None
        return ContentBundle.from_dict(json.loads(path.read_text("utf-8")))

    def get_bundle(self, bundle_id: str) -> ContentBundle:
        bundle = self._load_bundle(bundle_id)
        if bundle is None:
            raise NotFoundError(f"unknown bundle {bundle_id!r}")
        return bundle

    def list_bundles(self, kinds: Iterable[str] | None = None) -> list[ContentBundle]:
        wanted = set(kinds) if kinds is not None else None
        bundles = []
        for path in sorted(self.bundles_dir.glob("*.json")):
            bundle = ContentBundle.from_dict(json.loads(path.read_text("utf-8")))
            if wanted is None or bundle.kind in wanted:
                bundles.append(bundle)
        bundles.sort(key=lambda b: (b.published_at, b.bundle_id))
        return bundles

    def asset_size(self, digest: str) -> int:
        path = self.objects_dir / digest
        if not path.is_file():
            raise NotFoundError(f"unknown content hash {digest!r}")
        return path.stat().st_size

    def read_asset(self, digest: str, start: int | None = None, end: int | None = None) -> bytes:
        """Read (a range of) an object; the full stored file is re-hashed first.

        Raises ContentCorruptedError when the stored bytes no longer match the
        requested digest, so corruption can never be served silently.
        """
        path = self.objects_dir / digest
        if not path.is_file():
            raise NotFoundError(f"unknown content hash {digest!r}")
        data = path.read_bytes()
        if file_digest(data) != digest:
            raise ContentCorruptedError(f"stored bytes for {digest!r} fail verification")
        if start is None:
            return data
        stop = len(data) if end is None else min(end + 1, len(data))
        return data[start:stop]


# ---------------------------------------------------------------------------
# Arm-gated manifests
# ---------------------------------------------------------------------------

def visible_kinds(arm: StudyArm) -> set[str]:
    kinds = {"about_page"}
    for module in modules_for(arm):
        if module in KIND_FOR_MODULE:
            kinds.add(KIND_FOR_MODULE[module])
    return kinds


def arm_manifest(bundles: Iterable[ContentBundle], arm: StudyArm) -> list[ContentBundle]:
    """The subset of published bundles a user of this arm may download."""
    kinds = visible_kinds(arm)
    return [b for b in bundles if b.kind in kinds]


# ---------------------------------------------------------------------------
# Education chapter graph
# ---------------------------------------------------------------------------

def validate_chapter_graph(document: Mapping, quiz_ids: set[str],
                           bundle_ids: set[str]) -> ValidationReport:
    """Seed-time validation: shape, references and acyclic prerequisites."""
    report = ValidationReport()
    table = "chapter_graph"
    chapters = document.get("chapters")
    if not isinstance(chapters, list) or not chapters:
        report.error(INVALID_VALUE, table, 0, "chapters", "chapter graph needs a non-empty chapters list")
        return report

    ids: set[str] = set()
    for i, chapter in enumerate(chapters):
        cid = chapter.get("id")
        if not cid:
            report.error(INVALID_VALUE, table, i + 1, "id", "chapter lacks an id")
            continue
        if cid in ids:
            report.error(DUPLICATE_ID, table, i + 1, "id", f"duplicate chapter id {cid!r}")
            continue
        ids.add(cid)

    for i, chapter in enumerate(chapters):
        cid = chapter.get("id", f"#{i + 1}")
        sections = chapter.get("sections")
        if not isinstance(sections, list) or not sections:
            report.error(INVALID_VALUE, table, i + 1, "sections", f"chapter {cid!r} needs at least one section")
            sections = []
        for j, section in enumerate(sections):
            bundle_id = section.get("bundle_id") if isinstance(section, Mapping) else None
            if bundle_id not in bundle_ids:
                report.error(DANGLING_REFERENCE, table, i + 1, "sections",
                             f"chapter {cid!r} section {j} references unknown bundle {bundle_id!r}")
        quiz_id = chapter.get("quiz_id")
        if quiz_id not in quiz_ids:
            report.error(DANGLING_REFERENCE, table, i + 1, "quiz_id",
                         f"chapter {cid!r} references unseeded quiz {quiz_id!r}")
        recap = chapter.get("recap_bundle_id")
        if recap is not None and recap not in bundle_ids:
            report.error(DANGLING_REFERENCE, table, i + 1, "recap_bundle_id",
                         f"chapter {cid!r} references unknown recap bundle {recap!r}")
        for prereq in chapter.get("prerequisites", []):
            if prereq not in ids:
                report.error(DANGLING_REFERENCE, table, i + 1, "prerequisites",
                             f"chapter {cid!r} requires unknown chapter {prereq!r}")

    if _has_cycle({c.get("id"): list(c.get("prerequisites", [])) for c in chapters if c.get("id")}):
        report.error(INVALID_VALUE, table, 0, "prerequisites", "prerequisite graph contains a cycle")
    return report


def _has_cycle(graph: Mapping[str, list[str]]) -> bool:
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {node: WHITE for node in graph}

    def visit(node: str) -> bool:
        color[node] = GRAY
        for dep in graph.get(node, []):
            if dep not in color:
                continue
            if color[dep] == GRAY:
                return True
            if color[dep] == WHITE and visit(dep):
                return True
        color[node] = BLACK
        return False

    return any(color[node] == WHITE and visit(node) for node in graph)


def chapter_states(document: Mapping, covered_sections: Mapping[str, set[int]],
                   quizzes_done: set[str]) -> dict[str, str]:
    """Per-chapter unlock state from logged progress.

    A chapter is completed once education actions cover all its sections and
    its quiz was completed; it is available once all prerequisites are
    completed; otherwise it stays locked.
    """
    chapters = {c["id"]: c for c in document.get("chapters", [])}
    completed: set[str] = set()
    for cid, chapter in chapters.items():
        section_count = len(chapter.get("sections", []))
        covered = covered_sections.get(cid, set())
        if cid in quizzes_done and set(range(section_count)) <= covered:
            completed.add(cid)

    states: dict[str, str] = {}
    for cid, chapter in chapters.items():
        if cid in completed:
            states[cid] = CHAPTER_COMPLETED
        elif all(p in completed for p in chapter.get("prerequisites", [])):
            states[cid] = CHAPTER_AVAILABLE
        else:
            states[cid] = CHAPTER_LOCKED
    return states


# ---------------------------------------------------------------------------
# Sound catalog
# ---------------------------------------------------------------------------

def validate_sound_catalog(document: Mapping, store: ContentStore) -> ValidationReport:
    report = ValidationReport()
    table = "sound_catalog"
    sounds = document.get("sounds")
    if not isinstance(sounds, list):
        report.error(INVALID_VALUE, table, 0, "sounds", "sound catalog needs a sounds list")
        return report
    seen: set[str] = set()
    for i, sound in enumerate(sounds):
        sid = sound.get("sound_id")
        if not sid:
            report.error(INVALID_VALUE, table, i + 1, "sound_id", "sound lacks an id")
            continue
        if sid in seen:
            report.error(DUPLICATE_ID, table, i + 1, "sound_id", f"duplicate sound id {sid!r}")
            continue
        seen.add(sid)
        if not isinstance(sound.get("name"), Mapping) or not sound["name"]:
            report.error(INVALID_VALUE, table, i + 1, "name", f"sound {sid!r} needs per-language display names")
        duration = sound.get("duration_seconds")
        if not isinstance(duration, (int, float)) or isinstance(duration, bool) or duration <= 0:
            report.error(INVALID_VALUE, table, i + 1, "duration_seconds",
                         f"sound {sid!r} needs duration_seconds > 0")
        bundle_id = sound.get("bundle_id")
        try:
            bundle = store.get_bundle(bundle_id)
        except NotFoundError:
            report.error(DANGLING_REFERENCE, table, i + 1, "bundle_id",
                         f"sound {sid!r} references unknown bundle {bundle_id!r}")
            continue
        if bundle.kind != "sound_asset":
            report.error(INVALID_VALUE, table, i + 1, "bundle_id",
                         f"sound {sid!r} references a {bundle.kind} bundle, expected sound_asset")
    return report
