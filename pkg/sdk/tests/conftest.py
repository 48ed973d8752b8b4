"""SDK tests drive the engine only through its external interfaces: the
`chorebench` CLI builds the corpus and `chorebench serve` exposes the wire
protocol the SDK talks to."""

import json
import re
import shutil
import subprocess
import sys
import time
from pathlib import Path

import pytest


def run_cli(*args, check=True):
    proc = subprocess.run(
        [sys.executable, "-m", "chorebench.cli", *args],
        capture_output=True,
        text=True,
    )
    if check and proc.returncode != 0:
        raise RuntimeError(f"chorebench {' '.join(args)} failed:\n{proc.stderr}")
    return proc


@pytest.fixture(scope="session")
def instance_dir(tmp_path_factory):
    """At least 50 EDH instances, produced with the engine CLI."""
    root = tmp_path_factory.mktemp("sdk_corpus")
    sessions = root / "sessions"
    run_cli("play", "--task", "Plate Of Toast", "--seeds", "0..4", "--out-dir", str(sessions))
    all_instances = root / "all_instances"
    run_cli("segment", "--sessions", str(sessions), "--out-dir", str(all_instances), "--kind", "edh")
    edh_files = sorted(all_instances.glob("*.edh*.json"))
    assert len(edh_files) >= 50, f"only {len(edh_files)} EDH instances generated"
    chosen = root / "instances"
    chosen.mkdir()
    for path in edh_files[:50]:
        shutil.copy(path, chosen / path.name)
    return chosen


class ServerProcess:
    def __init__(self, *args):
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "chorebench.cli", "serve", "--port", "0", *args],
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
        )
        line = self.proc.stdout.readline()
        match = re.search(r"on [\d.]+:(\d+)", line)
        if not match:
            self.stop()
            raise RuntimeError(f"server did not report a port: {line!r}")
        self.port = int(match.group(1))
        time.sleep(0.05)

    def stop(self):
        self.proc.terminate()
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self.proc.kill()


@pytest.fixture
def edh_server(instance_dir):
    server = ServerProcess("--mode", "edh", "--instances", str(instance_dir))
    yield server
    server.stop()
