import subprocess
import sys

import pytest

# the evaluator CLI, exercised via subprocess only
CLBENCH = [sys.executable, "-m", "clbench"]


def run_clbench(*args) -> subprocess.CompletedProcess:
    return subprocess.run(
        [*CLBENCH, *map(str, args)], capture_output=True, text=True, check=False
    )


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory) -> dict:
    """A 20-frame single-lane straight-road corpus at 256x128 with labels
    on a 16x32 grid, shared by the trainer tests."""
    root = tmp_path_factory.mktemp("corpus")
    corpus = root / "corpus"
    labels = root / "labels"
    r = run_clbench(
        "synth", "--out", corpus, "--seed", "11", "--layout", "straight",
        "--frames", "20", "--num-lanes", "1",
        "--image-width", "256", "--image-height", "128",
    )
    assert r.returncode == 0, r.stderr
    r = run_clbench(
        "label", "--map", corpus / "map.json", "--poses", corpus / "poses.ndjson",
        "--calib", corpus / "calibration.json", "--frames", corpus / "frames.ndjson",
        "--out", labels, "--h1", "16", "--w1", "32", "--s", "8",
    )
    assert r.returncode == 0, r.stderr
    return {
        "corpus": corpus,
        "labels": labels,
        "images": corpus / "images",
        "calib": corpus / "calibration.json",
    }
