"""End-to-end: the analysis pipeline consumes this service over HTTP.

Runs a real uvicorn server on a loopback port and drives the simulator's
CLI as a subprocess, exactly as a user would.
"""

import csv
import json
import socket
import subprocess
import sys
import threading
import time
from pathlib import Path

import pytest
import requests
import uvicorn

pytest.importorskip("forumsim")


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="module")
def service_url():
    port = _free_port()
    config = uvicorn.Config(
        "model_services.app:app", host="127.0.0.1", port=port, log_level="warning"
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    url = f"http://127.0.0.1:{port}"
    for _ in range(100):
        try:
            if requests.get(f"{url}/health", timeout=1).status_code == 200:
                break
        except requests.RequestException:
            pass
        time.sleep(0.1)
    else:
        pytest.fail("service did not become healthy")
    yield url
    server.should_exit = True
    thread.join(timeout=5)


def _three_turn_fixture(path: Path) -> None:
    lines = [
        {"seq": 1, "day": 0, "round": 0, "type": "join", "agent": 0},
        {"seq": 2, "day": 0, "round": 0, "type": "join", "agent": 1},
        {"seq": 3, "day": 0, "round": 0, "type": "post", "agent": 0, "post_id": 0,
         "title": "Battery tech for grid storage", "text": "The economics finally work.",
         "topics": ["Big Tech"]},
        {"seq": 4, "day": 0, "round": 1, "type": "comment", "agent": 1, "comment_id": 1,
         "parent_id": 0, "root_id": 0, "text": "The economics only work with subsidies."},
        {"seq": 5, "day": 0, "round": 2, "type": "comment", "agent": 0, "comment_id": 2,
         "parent_id": 1, "root_id": 0, "text": "Subsidies taper; the curve still wins."},
    ]
    path.write_text("\n".join(json.dumps(l) for l in lines) + "\n", encoding="utf-8")


def _run_cli(args, env=None):
    return subprocess.run(
        [sys.executable, "-m", "forumsim.cli", *args],
        capture_output=True,
        text=True,
        env=env,
    )


def test_entropy_pipeline_over_service_embeddings(tmp_path, service_url):
    events = tmp_path / "events.jsonl"
    _three_turn_fixture(events)
    out = tmp_path / "analysis"
    result = _run_cli(
        [
            "analyze",
            "--events", str(events),
            "--out", str(out),
            "--embed-endpoint", f"{service_url}/embed",
            "--tox-endpoint", f"{service_url}/toxicity",
        ]
    )
    assert result.returncode == 0, result.stderr

    with open(out / "entropy.csv", newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3  # pairs (0,1), (1,2), (0,2)
    pair_types = {r["pair_type"] for r in rows}
    assert pair_types == {"interpersonal", "intrapersonal"}
    for row in rows:
        float(row["H"])  # scored and finite
        assert int(row["lag"]) in (1, 2)

    with open(out / "nn_similarity.csv", newline="", encoding="utf-8") as fh:
        nn_rows = {r["layer"]: r for r in csv.DictReader(fh)}
    assert float(nn_rows["posts"]["mean"]) == pytest.approx(1.0, abs=1e-6)
    assert float(nn_rows["comments"]["mean"]) == pytest.approx(1.0, abs=1e-6)
    assert float(nn_rows["comments"]["share_above_080"]) == 1.0

    with open(out / "toxicity.csv", newline="", encoding="utf-8") as fh:
        tox_rows = {r["layer"]: r for r in csv.DictReader(fh)}
    assert set(tox_rows) == {"posts", "comments", "all"}
    assert int(tox_rows["all"]["n"]) == 3
    assert 0.0 <= float(tox_rows["all"]["mean"]) <= 1.0


def test_env_base_url_wires_both_endpoints(tmp_path, service_url):
    import os

    events = tmp_path / "events.jsonl"
    _three_turn_fixture(events)
    out = tmp_path / "analysis-env"
    env = dict(os.environ)
    env["MODEL_SERVICES_URL"] = service_url
    result = _run_cli(["analyze", "--events", str(events), "--out", str(out)], env=env)
    assert result.returncode == 0, result.stderr
    assert (out / "entropy.csv").exists()
    assert (out / "toxicity.csv").exists()
    assert (out / "nn_similarity.csv").exists()


def test_embed_contract_over_live_http(service_url):
    resp = requests.post(
        f"{service_url}/embed",
        json={"texts": ["alpha beta", "alpha beta"], "mode": "token"},
        timeout=10,
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["token_counts"] == [2, 2]
    assert body["embeddings"][0] == body["embeddings"][1]
    assert all(c <= 256 for c in body["token_counts"])
