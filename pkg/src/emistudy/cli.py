"""Command line interface.

Content commands (`compile`, `validate`) run locally; everything touching a
deployment (`seed`, `publish`, `demo`, `export`) is a thin client of the HTTP
API or of a local data directory. Exit codes: 0 verdict true, 1 validation
errors, 2 I/O or connection failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

from .compiler import MANIFEST_FILENAME, compile_workbook, write_artifacts
from .findings import ValidationReport
from .questionnaire import loads, validate_artifact
from .workbook import parse_workbook

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2


def _print_report(report: ValidationReport) -> None:
    for finding in report.findings:
        location = finding.table
        if finding.row:
            location += f":{finding.row}"
        if finding.column:
            location += f" [{finding.column}]"
        click.echo(f"{finding.severity}: {location}: {finding.message} ({finding.code})")


@click.group()
def main() -> None:
    """Study platform tools: compile content, validate artifacts, run the API."""


@main.command("compile")
@click.argument("workbook_dir", type=click.Path(path_type=Path))
@click.option("-o", "--out", "out_dir", required=True, type=click.Path(path_type=Path),
              help="Output directory for artifacts, manifest and version registry.")
def compile_cmd(workbook_dir: Path, out_dir: Path) -> None:
    """Compile a workbook directory into seedable JSON artifacts."""
    if not workbook_dir.exists():
        click.echo(f"error: workbook directory not found: {workbook_dir}", err=True)
        sys.exit(EXIT_IO)
    result = parse_workbook(workbook_dir)
    if isinstance(result, ValidationReport):
        _print_report(result)
        sys.exit(EXIT_INVALID)
    compiled = compile_workbook(result)
    _print_report(compiled.warnings)
    try:
        report = write_artifacts(compiled, out_dir)
    except OSError as exc:
        click.echo(f"error: cannot write artifacts: {exc}", err=True)
        sys.exit(EXIT_IO)
    if not report.verdict:
        _print_report(report)
        sys.exit(EXIT_INVALID)
    for unit in compiled.manifest["units"]:
        click.echo(f"wrote {unit['path']} ({unit['kind']} {unit['id']} "
                   f"v{unit['version']} {unit['digest'][:12]})")
    click.echo(f"wrote {MANIFEST_FILENAME}")


@main.command("validate")
@click.argument("schema_file", type=click.Path(path_type=Path))
def validate_cmd(schema_file: Path) -> None:
    """Re-check all invariants of a compiled artifact file."""
    try:
        document = loads(schema_file.read_bytes())
    except OSError as exc:
        click.echo(f"error: cannot read {schema_file}: {exc}", err=True)
        sys.exit(EXIT_IO)
    except ValueError as exc:
        click.echo(f"error: {schema_file} is not a JSON artifact: {exc}", err=True)
        sys.exit(EXIT_INVALID)
    report = validate_artifact(document)
    _print_report(report)
    if not report.verdict:
        sys.exit(EXIT_INVALID)
    click.echo(f"{schema_file}: valid ({document.get('kind')} {document.get('schema_id')} "
               f"v{document.get('version')})")


@main.command("seed")
@click.argument("manifest_file", type=click.Path(path_type=Path))
@click.option("--server", required=True, help="Base URL of the running API server.")
@click.option("--token", required=True, help="Researcher bearer token.")
def seed_cmd(manifest_file: Path, server: str, token: str) -> None:
    """Load a compiled manifest's artifacts into a running server."""
    try:
        manifest = json.loads(manifest_file.read_text("utf-8"))
        units = []
        for unit in manifest["units"]:
            document = loads((manifest_file.parent / unit["path"]).read_bytes())
            units.append({k: unit[k] for k in ("kind", "id", "version", "digest")} | {"document": document})
    except (OSError, KeyError, ValueError) as exc:
        click.echo(f"error: cannot read manifest: {exc}", err=True)
        sys.exit(EXIT_IO)
    try:
        response = httpx.post(f"{server.rstrip('/')}/v1/admin/seed", json={"units": units},
                              headers={"Authorization": f"Bearer {token}"}, timeout=30.0)
    except httpx.HTTPError as exc:
        click.echo(f"error: cannot reach server: {exc}", err=True)
        sys.exit(EXIT_IO)
    if response.status_code != 200:
        click.echo(f"error: server rejected seed ({response.status_code}): {response.text}", err=True)
        sys.exit(EXIT_INVALID)
    for result in response.json()["results"]:
        click.echo(f"{result['status']}: {result['kind']} {result['id']} v{result['version']}")


@main.command("publish")
@click.argument("directory", type=click.Path(path_type=Path))
@click.option("--kind", required=True,
              type=click.Choice(["tinedu_chapter", "sound_asset", "about_page"]))
@click.option("--server", required=True, help="Base URL of the running API server.")
@click.option("--token", required=True, help="Researcher bearer token.")
@click.option("--version", default=None, help="Optional bundle version label.")
def publish_cmd(directory: Path, kind: str, server: str, token: str, version: str | None) -> None:
    """Publish a directory of static files as a content bundle."""
    import base64

    if not directory.is_dir():
        click.echo(f"error: not a directory: {directory}", err=True)
        sys.exit(EXIT_IO)
    files = [
        {"path": p.relative_to(directory).as_posix(),
         "content_b64": base64.b64encode(p.read_bytes()).decode("ascii")}
        for p in sorted(directory.rglob("*")) if p.is_file()
    ]
    try:
        response = httpx.post(f"{server.rstrip('/')}/v1/admin/bundles",
                              json={"kind": kind, "version": version, "files": files},
                              headers={"Authorization": f"Bearer {token}"}, timeout=60.0)
    except httpx.HTTPError as exc:
        click.echo(f"error: cannot reach server: {exc}", err=True)
        sys.exit(EXIT_IO)
    if response.status_code != 201:
        click.echo(f"error: publish rejected ({response.status_code}): {response.text}", err=True)
        sys.exit(EXIT_INVALID)
    bundle = response.json()
    click.echo(f"published {bundle['bundle_id']} ({len(bundle['entries'])} files, "
               f"digest {bundle['digest'][:12]})")


@main.command("serve")
@click.option("--config", "config_path", required=True, type=click.Path(path_type=Path),
              help="Study configuration JSON (centers, block size, seed policy).")
@click.option("--data-dir", required=True, type=click.Path(path_type=Path))
@click.option("--bind", default="127.0.0.1:8000", show_default=True)
@click.option("--researcher-token", default=None,
              help="Static researcher credential; falls back to the config file.")
@click.option("--static", "static_dir", default=None, type=click.Path(path_type=Path),
              help="Optional built web client to serve under /app.")
def serve_cmd(config_path: Path, data_dir: Path, bind: str,
              researcher_token: str | None, static_dir: Path | None) -> None:
    """Run the study API server."""
    import uvicorn

    from .server import ServerSettings, create_app_from_settings

    settings = ServerSettings(data_dir=data_dir, config_path=config_path,
                              researcher_token=researcher_token, static_dir=static_dir)
    try:
        app = create_app_from_settings(settings)
    except (OSError, ValueError, KeyError) as exc:
        click.echo(f"error: cannot start server: {exc}", err=True)
        sys.exit(EXIT_IO)
    host, _, port = bind.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="info")


@main.command("export")
@click.option("--data-dir", required=True, type=click.Path(path_type=Path))
@click.option("--entity", required=True,
              type=click.Choice(["users", "assignments", "submissions", "actions"]))
def export_cmd(data_dir: Path, entity: str) -> None:
    """Dump one entity from a data directory as newline-delimited JSON."""
    from .storage import Store

    db = data_dir / "study.db"
    if not db.is_file():
        click.echo(f"error: no store at {db}", err=True)
        sys.exit(EXIT_IO)
    store = Store(db)
    try:
        for row in store.export(entity):
            click.echo(json.dumps(row, sort_keys=True))
    finally:
        store.close()


@main.command("demo")
@click.option("--server", required=True, help="Base URL of the running API server.")
@click.option("--token", required=True, help="Researcher bearer token.")
def demo_cmd(server: str, token: str) -> None:
    """Seed the bundled demo study (diary, chapters, sounds, feedback rules)."""
    from . import demo

    try:
        result = demo.seed_via_api(server, token)
    except httpx.HTTPError as exc:
        click.echo(f"error: seeding failed: {exc}", err=True)
        sys.exit(EXIT_IO)
    for unit in result["results"]:
        click.echo(f"{unit['status']}: {unit['kind']} {unit['id']} v{unit['version']}")


if __name__ == "__main__":
    main()
