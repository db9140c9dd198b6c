"""Proof-checking backends: the built-in propositional engine and the
coqtop subprocess driver."""

from __future__ import annotations

from ..evaluation import Backend
from ..genome import EvoproofError
from .toy import ToyBackend

BACKEND_IDS = ("toy", "coq")


def make_backend(
    backend_id: str,
    coq_path: str | None = None,
    step_timeout: float = 5.0,
    pool_size: int = 1,
    transcript_path: str | None = None,
) -> Backend:
    """Instantiate a backend by identifier.

    Options that a backend does not use are accepted and ignored so that
    callers can pass one uniform option set.
    """
    if backend_id == "toy":
        return ToyBackend()
    if backend_id == "coq":
        from .coq import CoqBackend, SessionConfig, resolve_executable

        session = SessionConfig(
            executable=resolve_executable(coq_path),
            step_timeout=step_timeout,
        )
        return CoqBackend(
            session,
            pool_size=pool_size,
            transcript_path=transcript_path,
        )
    raise EvoproofError(f"unknown backend id {backend_id!r}; expected one of {BACKEND_IDS}")
