"""Driver for a real Coq toplevel (coqtop) as a checking backend.

Each worker owns a long-lived coqtop child process and drives it one
sentence at a time, synchronizing on the toplevel prompt.  Responses are
classified with configurable pattern tables; the completion table is
consulted first because the canonical completion message is formatted like
an error.  Per-step timeouts kill and replace the child so one pathological
tactic cannot stall a run, and sessions are recycled after a fixed number
of individuals to keep memory bounded.
"""

from __future__ import annotations

import os
import re
import select
import subprocess
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from ..evaluation import Backend, BackendUnavailable, ScriptResult, StepResult, StepStatus
from ..genome import EvoproofError, TheoremStatement

ENV_EXECUTABLE = "EVOPROOF_COQTOP"

DEFAULT_PROMPT_PATTERN = r"(?:^|\n)[A-Za-z_][A-Za-z0-9_']* < \Z"
DEFAULT_COMPLETION_PATTERNS = ("No such unproven subgoal", "No such goal")
DEFAULT_ERROR_PATTERNS = ("Error:", "Error (", "Syntax error", "Anomaly", "Timeout!")


def resolve_executable(explicit: str | None = None) -> str:
    """Pick the coqtop binary: explicit argument, then the environment
    override, then whatever ``coqtop`` resolves to on PATH."""
    if explicit:
        return explicit
    env = os.environ.get(ENV_EXECUTABLE)
    if env:
        return env
    return "coqtop"


@dataclass(frozen=True, slots=True)
class SessionConfig:
    """Settings for one coqtop child process."""

    executable: str = "coqtop"
    args: tuple[str, ...] = ("-q",)
    step_timeout: float = 5.0
    completion_patterns: tuple[str, ...] = DEFAULT_COMPLETION_PATTERNS
    error_patterns: tuple[str, ...] = DEFAULT_ERROR_PATTERNS
    prompt_pattern: str = DEFAULT_PROMPT_PATTERN
    preamble: tuple[str, ...] = ()
    recycle_after: int = 200

    def __post_init__(self) -> None:
        if self.step_timeout <= 0:
            raise ValueError("step_timeout must be positive")
        if not self.completion_patterns or not self.error_patterns:
            raise ValueError("pattern tables must be non-empty")
        if self.recycle_after < 1:
            raise ValueError("recycle_after must be at least 1")


def probe_version(executable: str) -> str:
    """First line of ``<executable> --version``; the session recipe fails
    fast here when the binary is missing or broken."""
    try:
        result = subprocess.run(
            [executable, "--version"],
            capture_output=True,
            text=True,
            timeout=20,
        )
    except FileNotFoundError as exc:
        raise BackendUnavailable(f"coqtop executable not found: {executable!r}") from exc
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise BackendUnavailable(f"cannot probe {executable!r}: {exc}") from exc
    if result.returncode != 0:
        raise BackendUnavailable(
            f"{executable!r} --version exited with {result.returncode}: {result.stderr.strip()}"
        )
    first = (result.stdout or result.stderr).strip().splitlines()
    if not first:
        raise BackendUnavailable(f"{executable!r} --version produced no output")
    return first[0].strip()


class SessionDied(EvoproofError):
    """The child process exited or stopped responding mid-evaluation."""

    def __init__(self, message: str, timed_out: bool = False):
        super().__init__(message)
        self.timed_out = timed_out


class Classification:
    PASSED = "passed"
    FAILED = "failed"
    COMPLETION = "completion"


class CoqSession:
    """One live coqtop child, driven sentence by sentence."""

    def __init__(self, config: SessionConfig):
        self.config = config
        self._prompt_re = re.compile(config.prompt_pattern)
        self.uses = 0
        self.in_proof = False
        self.loaded_preambles: set[tuple[str, ...]] = set()
        self.dead = False
        try:
            self._proc = subprocess.Popen(
                [config.executable, *config.args],
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.STDOUT,
                bufsize=0,
            )
        except OSError as exc:
            raise BackendUnavailable(
                f"cannot start {config.executable!r}: {exc}"
            ) from exc
        # the banner can be slow on cold caches; allow extra startup time
        banner = self._read_until_prompt(max(10.0, config.step_timeout))
        if banner is None:
            self.kill()
            raise BackendUnavailable(
                f"{config.executable!r} did not print a prompt at startup"
            )
        for sentence in config.preamble:
            classification, response = self.submit(sentence)
            if classification is not Classification.PASSED:
                self.kill()
                raise BackendUnavailable(
                    f"session preamble sentence {sentence!r} rejected: {response.strip()}"
                )

    def _read_until_prompt(self, timeout: float) -> str | None:
        """Accumulate output until the toplevel prompt; None on timeout."""
        assert self._proc.stdout is not None
        fd = self._proc.stdout.fileno()
        deadline = time.monotonic() + timeout
        buffer = ""
        while True:
            match = self._prompt_re.search(buffer)
            if match is not None:
                return buffer[: match.start()]
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return None
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                return None
            chunk = os.read(fd, 65536)
            if not chunk:
                self.dead = True
                raise SessionDied(f"coqtop exited; trailing output: {buffer[-500:]!r}")
            buffer += chunk.decode("utf-8", errors="replace")

    def classify(self, response: str) -> str:
        """Completion patterns are matched before error patterns: the usual
        completion message is itself formatted as an error."""
        for pattern in self.config.completion_patterns:
            if pattern in response:
                return Classification.COMPLETION
        for pattern in self.config.error_patterns:
            if pattern in response:
                return Classification.FAILED
        return Classification.PASSED

    def submit(
        self, sentence: str, timeout: float | None = None
    ) -> tuple[str, str]:
        """Send one full sentence (terminating period included) and return
        (classification, raw response).  Raises SessionDied on timeout or
        child exit; the caller decides whether that faults the individual."""
        if self.dead:
            raise SessionDied("session is already dead")
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write((sentence + "\n").encode("utf-8"))
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            self.dead = True
            raise SessionDied(f"cannot write to coqtop: {exc}") from exc
        response = self._read_until_prompt(
            self.config.step_timeout if timeout is None else timeout
        )
        if response is None:
            self.kill()
            raise SessionDied(
                f"no response to {sentence!r} within the step timeout", timed_out=True
            )
        return self.classify(response), response

    def kill(self) -> None:
        self.dead = True
        if self._proc.poll() is None:
            self._proc.kill()
        try:
            self._proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            pass
        for stream in (self._proc.stdin, self._proc.stdout):
            if stream is not None:
                try:
                    stream.close()
                except OSError:
                    pass


def split_sentences(lines: Sequence[str]) -> list[str]:
    """Group preamble lines into prover sentences.

    A sentence ends at a line whose content ends with a period; multi-line
    definitions stay together as one submission.
    """
    sentences: list[str] = []
    pending: list[str] = []
    for line in lines:
        stripped = line.rstrip()
        if not stripped.strip():
            continue
        pending.append(stripped)
        if stripped.endswith("."):
            sentences.append("\n".join(pending))
            pending = []
    if pending:
        sentences.append("\n".join(pending))
    return sentences


class CoqBackend(Backend):
    """Backend that checks scripts against live coqtop sessions.

    A fixed pool of sessions serves the evaluation threads; every session is
    returned to a clean state after each individual (proofs aborted, proved
    theorems rolled back), so evaluations cannot observe each other.
    """

    def __init__(
        self,
        session_config: SessionConfig | None = None,
        pool_size: int = 1,
        transcript_path: str | Path | None = None,
    ):
        if pool_size < 1:
            raise ValueError("pool_size must be at least 1")
        self._config = session_config or SessionConfig()
        self._version = probe_version(self._config.executable)
        self._slots: list[CoqSession | None] = [None] * pool_size
        self._free = list(range(pool_size))
        self._cond = threading.Condition()
        self._transcript_lock = threading.Lock()
        self._transcript = (
            open(transcript_path, "a", encoding="utf-8") if transcript_path else None
        )

    @property
    def info(self) -> dict:
        return {
            "id": "coq",
            "version": self._version,
            "executable": self._config.executable,
            "step_granularity": True,
            "completion_patterns": list(self._config.completion_patterns),
        }

    def _log(self, session_slot: int, sentence: str, response: str, verdict: str) -> None:
        if self._transcript is None:
            return
        with self._transcript_lock:
            self._transcript.write(f"[slot {session_slot}] >>> {sentence}\n")
            text = response.strip("\n")
            if text:
                self._transcript.write(text + "\n")
            self._transcript.write(f"[slot {session_slot}] ==> {verdict}\n")
            self._transcript.flush()

    def _acquire(self) -> int:
        with self._cond:
            while not self._free:
                self._cond.wait()
            return self._free.pop()

    def _release(self, slot: int) -> None:
        with self._cond:
            self._free.append(slot)
            self._cond.notify()

    def _session_for(self, slot: int) -> CoqSession:
        session = self._slots[slot]
        if session is not None and (
            session.dead or session.uses >= self._config.recycle_after
        ):
            session.kill()
            session = None
        if session is None:
            session = CoqSession(self._config)
            self._slots[slot] = session
        return session

    def _submit(
        self, slot: int, session: CoqSession, sentence: str
    ) -> tuple[str, str]:
        verdict, response = session.submit(sentence)
        self._log(slot, sentence, response, verdict)
        return verdict, response

    def _load_statement_preamble(
        self, slot: int, session: CoqSession, statement: TheoremStatement
    ) -> None:
        if not statement.preamble or statement.preamble in session.loaded_preambles:
            return
        for sentence in split_sentences(statement.preamble):
            verdict, response = self._submit(slot, session, sentence)
            if verdict is not Classification.PASSED:
                session.kill()
                raise BackendUnavailable(
                    f"theorem preamble rejected at {sentence.splitlines()[0]!r}: "
                    f"{response.strip()}"
                )
        session.loaded_preambles.add(statement.preamble)

    def _reset_after_individual(
        self, slot: int, session: CoqSession, statement: TheoremStatement, proved: bool
    ) -> None:
        """Undo everything one evaluation did to the session."""
        if session.dead:
            return
        try:
            if proved:
                # rolls back the proved theorem only: the preamble was
                # loaded strictly earlier, so it survives the Reset
                verdict, _ = self._submit(slot, session, f"Reset {statement.theorem_id}.")
                if verdict is not Classification.PASSED:
                    session.kill()
            elif session.in_proof:
                verdict, _ = self._submit(slot, session, "Abort All.")
                if verdict is not Classification.PASSED:
                    session.kill()
        except SessionDied:
            pass
        session.in_proof = False

    def run_script(
        self, statement: TheoremStatement, tactics: Sequence[str]
    ) -> ScriptResult:
        slot = self._acquire()
        try:
            return self._run_on_slot(slot, statement, tactics)
        finally:
            self._release(slot)

    def _run_on_slot(
        self, slot: int, statement: TheoremStatement, tactics: Sequence[str]
    ) -> ScriptResult:
        try:
            session = self._session_for(slot)
            self._load_statement_preamble(slot, session, statement)
        except SessionDied as exc:
            return ScriptResult(steps=(), fault=str(exc))
        session.uses += 1
        steps: list[StepResult] = []
        proved = False
        try:
            verdict, response = self._submit(slot, session, statement.declaration_text)
            if verdict is not Classification.PASSED:
                session.kill()
                return ScriptResult(
                    steps=(), fault=f"declaration rejected: {response.strip()}"
                )
            session.in_proof = True
            verdict, response = self._submit(slot, session, "Proof.")
            if verdict is not Classification.PASSED:
                session.kill()
                return ScriptResult(
                    steps=(), fault=f"'Proof.' rejected: {response.strip()}"
                )
            for position, text in enumerate(tactics):
                try:
                    verdict, response = self._submit(slot, session, f"{text}.")
                except SessionDied as exc:
                    steps.append(
                        StepResult(
                            position, StepStatus.FAILED, str(exc), timed_out=exc.timed_out
                        )
                    )
                    return ScriptResult(steps=tuple(steps))
                if verdict is Classification.COMPLETION:
                    steps.append(
                        StepResult(
                            position, StepStatus.COMPLETION_SIGNAL, response.strip()
                        )
                    )
                    return ScriptResult(steps=tuple(steps))
                if verdict is Classification.FAILED:
                    steps.append(
                        StepResult(position, StepStatus.FAILED, response.strip())
                    )
                    return ScriptResult(steps=tuple(steps))
                steps.append(StepResult(position, StepStatus.PASSED))
            try:
                verdict, response = self._submit(slot, session, "Qed.")
            except SessionDied as exc:
                return ScriptResult(steps=tuple(steps), fault=f"'Qed.' stalled: {exc}")
            qed_accepted = verdict is Classification.PASSED
            proved = qed_accepted
            if qed_accepted:
                session.in_proof = False
            return ScriptResult(steps=tuple(steps), qed_accepted=qed_accepted)
        except SessionDied as exc:
            return ScriptResult(steps=tuple(steps), fault=str(exc))
        finally:
            self._reset_after_individual(slot, session, statement, proved)

    def close(self) -> None:
        with self._cond:
            for session in self._slots:
                if session is not None:
                    session.kill()
            self._slots = [None] * len(self._slots)
        if self._transcript is not None:
            self._transcript.close()
            self._transcript = None
