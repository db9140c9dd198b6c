"""Shared fixtures: bundled assets, small hand-built bases, fake coqtop."""

import os
import shutil
import stat
from pathlib import Path

import pytest

from evoproof.assets import default_base_path, default_suite_paths
from evoproof.backends.coq import SessionConfig
from evoproof.genome import load_tactic_base, parse_tactic_base, parse_theorem

TESTS_DIR = Path(__file__).parent
FIXTURES_DIR = TESTS_DIR / "fixtures"

HAVE_COQTOP = shutil.which(os.environ.get("EVOPROOF_COQTOP", "coqtop")) is not None

# small base used wherever exact exhaustive reasoning is wanted: index 4
# excludes index 1, index 0 forbids immediate repetition
TINY_BASE_TEXT = (
    "intros\tnorepeat\n"
    "split\n"
    "assumption\n"
    "exact H0\n"
    "left\texcl=1\n"
)

# provable with the tiny base; admits several distinct complete proofs
TINY_THEOREM_TEXT = """\
[statement]
Theorem nested : A -> B -> A /\\ (B \\/ C).
"""


@pytest.fixture(scope="session")
def toy_base():
    return load_tactic_base(default_base_path("toy"))


@pytest.fixture(scope="session")
def toy_suite_paths():
    return {path.stem.split("_", 1)[1]: path for path in default_suite_paths("toy")}


@pytest.fixture(scope="session")
def tiny_base():
    return parse_tactic_base(TINY_BASE_TEXT, origin="<tiny>")


@pytest.fixture(scope="session")
def tiny_statement():
    return parse_theorem(TINY_THEOREM_TEXT, origin="<tiny>")


@pytest.fixture(scope="session")
def fake_coqtop():
    """Path to the scripted coqtop stand-in, made executable."""
    script = TESTS_DIR / "fake_coqtop.py"
    mode = script.stat().st_mode
    script.chmod(mode | stat.S_IXUSR | stat.S_IXGRP | stat.S_IXOTH)
    return str(script)


@pytest.fixture
def fake_session_config(fake_coqtop):
    """SessionConfig factory bound to the fake toplevel."""

    def build(**overrides) -> SessionConfig:
        settings = {"executable": fake_coqtop, "args": (), "step_timeout": 10.0}
        settings.update(overrides)
        return SessionConfig(**settings)

    return build


def needs_statement(theorem_id: str, subgoals: int, preamble: str = ""):
    """Theorem file understood by the fake toplevel: k subgoals to close."""
    preamble_section = f"[preamble]\n{preamble}\n" if preamble else ""
    return parse_theorem(
        f"{preamble_section}[statement]\nTheorem {theorem_id} : NEEDS {subgoals}.\n",
        origin="<needs>",
    )
