import json
import subprocess
import sys

import numpy as np
import pytest

from mitodet.imagecore import RasterImage, save_image


@pytest.fixture
def run_cli():
    """Run `python -m mitodet ...`, returning the completed process."""

    def run(*args, env=None, expect=0):
        proc = subprocess.run(
            [sys.executable, "-m", "mitodet", *map(str, args)],
            capture_output=True,
            text=True,
            env=env,
        )
        if expect is not None:
            assert proc.returncode == expect, (
                f"exit {proc.returncode} (wanted {expect})\n"
                f"stdout: {proc.stdout}\nstderr: {proc.stderr}"
            )
        return proc

    return run


@pytest.fixture
def make_png(tmp_path):
    """Write an arbitrary uint8 array as a PNG and return its path."""

    counter = {"n": 0}

    def make(arr, name=None):
        counter["n"] += 1
        path = tmp_path / (name or f"img_{counter['n']}.png")
        save_image(RasterImage(np.asarray(arr, dtype=np.uint8)), path)
        return path

    return make


@pytest.fixture
def write_json(tmp_path):
    def write(data, name):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return path

    return write
