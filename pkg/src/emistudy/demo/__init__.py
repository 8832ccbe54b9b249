"""Bundled demo study: a small synthetic fixture that exercises every module.

Ships a two-page diary, two education chapters with quizzes, feedback rules
and two generated placeholder noise sounds. ``seed_via_api`` pushes the whole
study into a running server over its public interfaces, which is also how a
real deployment is provisioned.
"""

from __future__ import annotations

import base64
import io
import random
import struct
import wave
from pathlib import Path

import httpx

from ..compiler import compile_workbook
from ..questionnaire import compute_digest
from ..workbook import parse_workbook

DEMO_CONFIG = {
    "languages": ["en", "de"],
    "block_size": 4,
    "seed_policy": "fixed",
    "seed": "demo-seed",
    "window_days": 84,
    "centers": [
        {"id": "C1", "name": "Center One", "language": "en"},
        {"id": "C2", "name": "Center Two", "language": "de"},
        {"id": "C3", "name": "Center Three", "language": "en"},
        {"id": "C4", "name": "Center Four", "language": "en"},
        {"id": "C5", "name": "Center Five", "language": "de"},
    ],
}


def workbook_dir() -> Path:
    return Path(__file__).parent / "workbook"


def content_dir() -> Path:
    return Path(__file__).parent / "content"


def noise_wav(seed: int, seconds: float = 2.0, rate: int = 8000) -> bytes:
    """Short generated noise as a placeholder for clinical stimuli."""
    rng = random.Random(seed)
    frames = int(seconds * rate)
    buffer = io.BytesIO()
    with wave.open(buffer, "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(rate)
        samples = b"".join(struct.pack("<h", rng.randint(-12000, 12000)) for _ in range(frames))
        wav.writeframes(samples)
    return buffer.getvalue()


def chapter_bundles() -> dict[str, dict[str, bytes]]:
    """Per-bundle file maps for the education chapters, keyed by a label."""
    chapters = content_dir() / "chapters"
    read = lambda name: (chapters / name).read_bytes()
    return {
        "basics-s0": {"section.html": read("basics-what-is-tinnitus.html")},
        "basics-s1": {"section.html": read("basics-how-common.html")},
        "basics-recap": {"recap.html": read("basics-recap.html")},
        "coping-s0": {"section.html": read("coping-strategies.html")},
        "coping-recap": {"recap.html": read("coping-recap.html")},
    }


def sound_files() -> dict[str, dict[str, bytes]]:
    return {
        "white": {"white-noise.wav": noise_wav(1), "info.json": b'{"category": "broadband"}\n'},
        "pink": {"pink-noise.wav": noise_wav(2), "info.json": b'{"category": "broadband"}\n'},
    }


def chapter_graph_doc(bundle_ids: dict[str, str]) -> dict:
    """Chapter graph wired to published bundle ids (keyed by the labels above)."""
    return {
        "chapters": [
            {
                "id": "ch-basics",
                "title": {"en": "Tinnitus basics", "de": "Tinnitus-Grundlagen"},
                "sections": [
                    {"title": {"en": "What is tinnitus?", "de": "Was ist Tinnitus?"},
                     "bundle_id": bundle_ids["basics-s0"]},
                    {"title": {"en": "How common is it?", "de": "Wie häufig ist er?"},
                     "bundle_id": bundle_ids["basics-s1"]},
                ],
                "quiz_id": "quiz-basics",
                "recap_bundle_id": bundle_ids["basics-recap"],
                "prerequisites": [],
            },
            {
                "id": "ch-coping",
                "title": {"en": "Coping with tinnitus", "de": "Umgang mit Tinnitus"},
                "sections": [
                    {"title": {"en": "Strategies", "de": "Strategien"},
                     "bundle_id": bundle_ids["coping-s0"]},
                ],
                "quiz_id": "quiz-coping",
                "recap_bundle_id": bundle_ids["coping-recap"],
                "prerequisites": ["ch-basics"],
            },
        ],
    }


def sound_catalog_doc(bundle_ids: dict[str, str]) -> dict:
    return {
        "sounds": [
            {
                "sound_id": "snd-white",
                "name": {"en": "White noise", "de": "Weißes Rauschen"},
                "bundle_id": bundle_ids["white"],
                "duration_seconds": 2,
                "category": "broadband",
            },
            {
                "sound_id": "snd-pink",
                "name": {"en": "Pink noise", "de": "Rosa Rauschen"},
                "bundle_id": bundle_ids["pink"],
                "duration_seconds": 2,
                "category": "broadband",
            },
        ],
    }


def compile_demo():
    source = parse_workbook(workbook_dir())
    if not hasattr(source, "meta"):
        raise RuntimeError(f"bundled demo workbook failed to parse: {source.to_dict()}")
    return compile_workbook(source)


def seed_via_api(base_url: str, token: str, client: httpx.Client | None = None) -> dict:
    """Provision a running server with the demo study; idempotent end to end."""
    own_client = client is None
    client = client or httpx.Client(base_url=base_url, timeout=30.0)
    headers = {"Authorization": f"Bearer {token}"}
    try:
        compiled = compile_demo()

        def publish(files: dict[str, bytes], kind: str) -> str:
            body = {
                "kind": kind,
                "files": [{"path": path, "content_b64": base64.b64encode(data).decode("ascii")}
                          for path, data in sorted(files.items())],
            }
            response = client.post("/v1/admin/bundles", json=body, headers=headers)
            response.raise_for_status()
            return response.json()["bundle_id"]

        chapter_ids = {label: publish(files, "tinedu_chapter")
                       for label, files in chapter_bundles().items()}
        sound_ids = {label: publish(files, "sound_asset")
                     for label, files in sound_files().items()}
        publish({"index.html": (content_dir() / "about" / "index.html").read_bytes()}, "about_page")

        graph = chapter_graph_doc(chapter_ids)
        catalog = sound_catalog_doc(sound_ids)
        units = []
        for unit, artifact in zip(compiled.manifest["units"], compiled.artifacts()):
            units.append({**{k: unit[k] for k in ("kind", "id", "version", "digest")},
                          "document": artifact})
        units.append({"kind": "chapter_graph", "id": "chapters", "version": 1,
                      "digest": compute_digest(graph), "document": graph})
        units.append({"kind": "sound_catalog", "id": "sounds", "version": 1,
                      "digest": compute_digest(catalog), "document": catalog})
        response = client.post("/v1/admin/seed", json={"units": units}, headers=headers)
        response.raise_for_status()
        return response.json()
    finally:
        if own_client:
            client.close()
