from __future__ import annotations

import pytest
from hypothesis import settings

settings.register_profile("subframe", deadline=None, max_examples=40)
settings.load_profile("subframe")

_LINES: list[str] = []


@pytest.fixture
def record():
    """Collect one summary line per acceptance criterion."""

    def _rec(n: int, ok: bool, detail: str):
        _LINES.append(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return _rec


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES):
            terminalreporter.write_line(line)


_FRAMES: dict = {}


def built_frame(J: int):
    """Shared CC frame and its build time in seconds, built once per session."""
    if J not in _FRAMES:
        import time

        from subframe.frame import build_frame

        t0 = time.perf_counter()
        frame = build_frame(J, "cc")
        _FRAMES[J] = (frame, time.perf_counter() - t0)
    return _FRAMES[J]


@pytest.fixture(scope="session")
def frame_j1():
    return built_frame(1)


@pytest.fixture(scope="session")
def frame_j2():
    return built_frame(2)
