"""Access to the bundled tactic bases and theorem suites."""

from __future__ import annotations

from importlib.resources import files
from pathlib import Path

from .genome import EvoproofError

_BASE_FILES = {"toy": "toy_base.txt", "coq": "coq_base.txt"}
_SUITE_DIRS = {"toy": "toy_suite", "coq": "coq_suite"}


def _assets_root() -> Path:
    return Path(str(files("evoproof").joinpath("assets")))


def default_base_path(backend_id: str) -> Path:
    try:
        return _assets_root() / _BASE_FILES[backend_id]
    except KeyError:
        raise EvoproofError(f"no bundled tactic base for backend {backend_id!r}") from None


def default_suite_paths(backend_id: str) -> list[Path]:
    try:
        suite = _assets_root() / _SUITE_DIRS[backend_id]
    except KeyError:
        raise EvoproofError(f"no bundled theorem suite for backend {backend_id!r}") from None
    return sorted(suite.glob("*.thm"))
