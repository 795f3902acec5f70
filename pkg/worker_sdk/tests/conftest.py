import json
import subprocess
import sys
from pathlib import Path

import pytest

from tierkreis_worker import Worker, start_worker_server
from tierkreis_worker.workers.mock import nsp as mock_nsp
from tierkreis_worker.workers.optimizer import nsp as optimizer_nsp
from tierkreis_worker.workers.python_nodes import nsp as python_nodes_nsp

FIXTURES = Path(__file__).resolve().parents[2] / "fixtures" / "wire"


@pytest.fixture(scope="session")
def worker_server():
    server = start_worker_server(
        Worker([mock_nsp, optimizer_nsp, python_nodes_nsp]), "sdk_worker",
        block=False)
    yield server
    server.shutdown()


@pytest.fixture(scope="session")
def runtime(worker_server):
    """The runtime under test, reached purely over its external interfaces
    (spawned via its CLI; nothing from its codebase is imported)."""
    proc = subprocess.Popen(
        [sys.executable, "-m", "tierkreis.cli", "serve", "--bind", "127.0.0.1:0",
         "--worker", worker_server.url],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    url = json.loads(proc.stdout.readline())["serving"]
    yield url
    proc.terminate()
    proc.wait(5)
