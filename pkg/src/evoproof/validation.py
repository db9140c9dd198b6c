"""Input coercion and validation shared by the estimator and the CLI.

These helpers accept the convenient spellings (paths, raw text, already
constructed objects) and always hand back the canonical types, raising
errors that name the offending parameter.
"""

from __future__ import annotations

import os
from pathlib import Path

from .assets import default_base_path
from .genome import (
    EvoproofError,
    TacticBase,
    TheoremStatement,
    load_tactic_base,
    load_theorem,
    parse_theorem,
)

_THEOREM_HEADS = (
    "Theorem ", "Lemma ", "Fact ", "Remark ", "Corollary ", "Proposition ", "Example ",
)


def check_statement(value: TheoremStatement | str | os.PathLike) -> TheoremStatement:
    """Coerce a statement argument: pass through statement objects, load
    paths, parse section-formatted text, or wrap a bare declaration line."""
    if isinstance(value, TheoremStatement):
        return value
    if isinstance(value, os.PathLike):
        return load_theorem(value)
    if isinstance(value, str):
        if "[statement]" in value:
            return parse_theorem(value)
        if value.lstrip().startswith(_THEOREM_HEADS):
            return parse_theorem("[statement]\n" + value)
        if Path(value).is_file():
            return load_theorem(value)
        raise EvoproofError(
            f"statement {value!r} is neither an existing file, a theorem "
            "document, nor a declaration"
        )
    raise EvoproofError(
        f"statement must be a TheoremStatement, text or path, not {type(value).__name__}"
    )


def check_tactic_base(
    value: TacticBase | str | os.PathLike | None, backend_id: str
) -> TacticBase:
    """Coerce a tactic-base argument; None selects the bundled base that
    matches the backend."""
    if value is None:
        return load_tactic_base(default_base_path(backend_id))
    if isinstance(value, TacticBase):
        return value
    if isinstance(value, (str, os.PathLike)):
        return load_tactic_base(value)
    raise EvoproofError(
        f"tactic_base must be a TacticBase, a path or None, not {type(value).__name__}"
    )


def check_int(name: str, value, minimum: int) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be at least {minimum}, got {value}")
    return value


def check_fraction(name: str, value) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise TypeError(f"{name} must be a number, got {type(value).__name__}")
    if not 0.0 <= float(value) <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return float(value)


def check_seed(random_state) -> int:
    """Map the estimator's random_state to an engine seed.  None picks the
    documented default seed 0 so repeated fits stay reproducible."""
    if random_state is None:
        return 0
    if isinstance(random_state, int) and not isinstance(random_state, bool):
        return random_state
    raise TypeError(
        f"random_state must be an int or None, got {type(random_state).__name__}"
    )
