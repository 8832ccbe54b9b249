import json
import threading
import time
from datetime import datetime, timedelta, timezone

import httpx
import pytest
import uvicorn
from fastapi.testclient import TestClient

from emistudy import demo
from emistudy.server import ServerSettings, build_service, create_app

RESEARCHER_TOKEN = "research-secret"
ENROLL_AT = datetime(2026, 4, 15, 9, 0, tzinfo=timezone.utc)


class FakeClock:
    """Deterministic, advanceable server clock."""

    def __init__(self, start: datetime = ENROLL_AT):
        self.now = start

    def __call__(self) -> datetime:
        return self.now

    def advance(self, **kwargs) -> None:
        self.now += timedelta(**kwargs)


@pytest.fixture
def demo_workbook():
    return demo.workbook_dir()


@pytest.fixture
def clock():
    return FakeClock()


def make_client(tmp_path, clock, seed_demo=True, config_overrides=None):
    config = {**demo.DEMO_CONFIG, "researcher_token": RESEARCHER_TOKEN,
              **(config_overrides or {})}
    config_path = tmp_path / "study.json"
    config_path.write_text(json.dumps(config))
    settings = ServerSettings(data_dir=tmp_path / "data", config_path=config_path, clock=clock)
    service = build_service(settings)
    app = create_app(service)
    client = TestClient(app, base_url="http://test")
    client.service = service
    if seed_demo:
        demo.seed_via_api("http://test", RESEARCHER_TOKEN, client=client)
    return client


@pytest.fixture
def client(tmp_path, clock):
    """API test client over a demo-seeded server with a fake clock."""
    c = make_client(tmp_path, clock)
    yield c
    c.service.store.close()


@pytest.fixture
def bare_client(tmp_path, clock):
    """API test client over an empty (unseeded) server."""
    c = make_client(tmp_path, clock, seed_demo=False)
    yield c
    c.service.store.close()


def researcher_headers():
    return {"Authorization": f"Bearer {RESEARCHER_TOKEN}"}


def enroll(client, center_id="C1", arm=None, login=None, password=None):
    """Register one user; with ``arm`` given, keeps registering until a user
    of that arm appears (a block of 4 covers all arms, so at most 4 tries)."""
    while True:
        if login:
            response = client.post("/v1/users", json={
                "center_id": center_id, "login": login, "password": password or "secret-pass-1"})
        else:
            response = client.post("/v1/users/anonymous", json={"center_id": center_id})
        assert response.status_code == 201, response.text
        session = response.json()
        if arm is None or session["arm"] == arm:
            return session


def auth(session):
    return {"Authorization": f"Bearer {session['token']}"}


class LiveServer:
    """uvicorn in a background thread on an ephemeral port."""

    def __init__(self, tmp_path, seed_demo=True):
        config = {**demo.DEMO_CONFIG, "researcher_token": RESEARCHER_TOKEN}
        config_path = tmp_path / "study.json"
        config_path.write_text(json.dumps(config))
        self.service = build_service(
            ServerSettings(data_dir=tmp_path / "data", config_path=config_path))
        app = create_app(self.service)
        self._server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=0,
                                                     log_level="warning"))
        self._thread = threading.Thread(target=self._server.run, daemon=True)
        self._thread.start()
        deadline = time.monotonic() + 15
        while not self._server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("server did not start")
            time.sleep(0.02)
        port = self._server.servers[0].sockets[0].getsockname()[1]
        self.base_url = f"http://127.0.0.1:{port}"
        if seed_demo:
            demo.seed_via_api(self.base_url, RESEARCHER_TOKEN)

    def stop(self):
        self._server.should_exit = True
        self._thread.join(timeout=10)
        self.service.store.close()


@pytest.fixture
def live_server(tmp_path):
    server = LiveServer(tmp_path)
    yield server
    server.stop()


def http_enroll(base_url, center_id="C1", arm=None):
    with httpx.Client(base_url=base_url, timeout=10.0) as client:
        while True:
            response = client.post("/v1/users/anonymous", json={"center_id": center_id})
            response.raise_for_status()
            session = response.json()
            if arm is None or session["arm"] == arm:
                return session
