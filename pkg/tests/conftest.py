from __future__ import annotations

import io
import random
import sys
from pathlib import Path

import pytest
from PIL import Image, ImageDraw

ROOT = Path(__file__).resolve().parent.parent
STUDY = ROOT / "studies" / "ftc-mini" / "study.toml"
sys.path.insert(0, str(Path(__file__).resolve().parent))


def chart_png(seed: int = 0, size=(240, 160)) -> bytes:
    """A small synthetic chart with some structure, varied by seed."""
    rng = random.Random(seed)
    img = Image.new("RGB", size, (255, 255, 255))
    d = ImageDraw.Draw(img)
    w, h = size
    for _ in range(6):
        x0, y0 = rng.randrange(w), rng.randrange(h)
        x1, y1 = x0 + rng.randrange(10, w // 2), y0 + rng.randrange(10, h // 2)
        d.rectangle([x0, y0, x1, y1], fill=tuple(rng.randrange(256) for _ in range(3)))
    d.ellipse([w // 4, h // 4, w // 2, h - 10], fill=(200, 40, 40))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


@pytest.fixture
def png_file(tmp_path):
    path = tmp_path / "variant.png"
    path.write_bytes(chart_png())
    return path


@pytest.fixture(scope="session")
def study_out(tmp_path_factory):
    """One replay run of the shipped fixture study, shared by read-only tests."""
    from imagespread.cli import main

    out = tmp_path_factory.mktemp("study-out")
    cache = tmp_path_factory.mktemp("empty-cache")
    code = main(["run", "--config", str(STUDY), "--out", str(out), "--cache-dir", str(cache)])
    assert code == 0
    return out


def pytest_terminal_summary(terminalreporter):
    lines = [
        value
        for reports in terminalreporter.stats.values()
        for report in reports
        if getattr(report, "when", None) == "call"
        for name, value in getattr(report, "user_properties", ())
        if name == "acceptance"
    ]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
