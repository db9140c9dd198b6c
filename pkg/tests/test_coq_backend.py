"""Session driver tests against the scripted coqtop stand-in.

No real Coq installation is required here; every behaviour of the driver
(classification, completion, timeouts, crashes, recycling, state reset) is
exercised through tests/fake_coqtop.py.
"""

import pytest

from conftest import needs_statement
from evoproof.backends.coq import (
    Classification,
    CoqBackend,
    CoqSession,
    SessionConfig,
    probe_version,
    resolve_executable,
    split_sentences,
)
from evoproof.evaluation import (
    BackendUnavailable,
    FailureKind,
    StepStatus,
    evaluate,
)
from evoproof.genome import Chromosome, parse_tactic_base


@pytest.fixture
def backend(fake_session_config):
    instance = CoqBackend(session_config=fake_session_config())
    yield instance
    instance.close()


class TestResolveExecutable:
    def test_explicit_wins(self, monkeypatch):
        monkeypatch.setenv("EVOPROOF_COQTOP", "/env/coqtop")
        assert resolve_executable("/explicit/coqtop") == "/explicit/coqtop"

    def test_environment_beats_default(self, monkeypatch):
        monkeypatch.setenv("EVOPROOF_COQTOP", "/env/coqtop")
        assert resolve_executable() == "/env/coqtop"
        monkeypatch.delenv("EVOPROOF_COQTOP")
        assert resolve_executable() == "coqtop"


class TestProbeVersion:
    def test_reports_version_line(self, fake_coqtop):
        assert "8.99.0" in probe_version(fake_coqtop)

    def test_missing_binary(self):
        with pytest.raises(BackendUnavailable):
            probe_version("/no/such/coqtop-anywhere")


class TestSplitSentences:
    def test_groups_multiline_definitions(self):
        lines = [
            "Require Import Arith.",
            "",
            "Inductive ev : nat -> Prop :=",
            "| ev_0 : ev 0",
            "| ev_SS : forall n, ev n -> ev (S n).",
            "Definition x := 1.",
        ]
        assert split_sentences(lines) == [
            "Require Import Arith.",
            "Inductive ev : nat -> Prop :=\n| ev_0 : ev 0\n| ev_SS : forall n, ev n -> ev (S n).",
            "Definition x := 1.",
        ]

    def test_trailing_unterminated_lines_kept(self):
        assert split_sentences(["Definition y :="]) == ["Definition y :="]


class TestCoqSession:
    def test_submit_and_classify(self, fake_session_config):
        session = CoqSession(fake_session_config())
        try:
            verdict, _ = session.submit("Theorem t : NEEDS 1.")
            assert verdict is Classification.PASSED
            verdict, _ = session.submit("Proof.")
            assert verdict is Classification.PASSED
            verdict, response = session.submit("fail.")
            assert verdict is Classification.FAILED
            assert "Tactic failure" in response
            verdict, _ = session.submit("succ.")
            assert verdict is Classification.PASSED
            verdict, response = session.submit("noop.")
            assert verdict is Classification.COMPLETION
            assert "No such unproven subgoal" in response
        finally:
            session.kill()

    def test_preamble_rejection_fails_startup(self, fake_session_config):
        with pytest.raises(BackendUnavailable):
            CoqSession(fake_session_config(preamble=("FailCmd.",)))


class TestRunScript:
    def test_accepted_qed(self, backend):
        result = backend.run_script(
            needs_statement("two_goals", 2), ["intros", "succ", "succ"]
        )
        assert [s.status for s in result.steps] == [StepStatus.PASSED] * 3
        assert result.qed_accepted is True
        assert result.fault is None

    def test_rejected_qed(self, backend):
        result = backend.run_script(needs_statement("still_open", 2), ["intros", "succ"])
        assert result.qed_accepted is False

    def test_completion_signal_mid_script(self, backend):
        result = backend.run_script(
            needs_statement("early_close", 1), ["intros", "succ", "noop", "noop"]
        )
        assert result.steps[-1].status is StepStatus.COMPLETION_SIGNAL
        assert result.steps[-1].position == 2
        assert len(result.steps) == 3

    def test_failed_tactic_stops_script(self, backend):
        result = backend.run_script(
            needs_statement("fails_fast", 2), ["intros", "fail", "succ"]
        )
        assert [s.status for s in result.steps] == [
            StepStatus.PASSED,
            StepStatus.FAILED,
        ]
        assert result.qed_accepted is None

    def test_same_theorem_reusable_after_qed(self, backend):
        statement = needs_statement("again", 1)
        first = backend.run_script(statement, ["intros", "succ"])
        second = backend.run_script(statement, ["intros", "succ"])
        assert first.qed_accepted is True
        # a second declaration would collide if the accepted proof had not
        # been rolled back between individuals
        assert second.qed_accepted is True
        assert second.fault is None

    def test_session_survives_rejected_qed(self, backend):
        statement = needs_statement("halfway", 2)
        backend.run_script(statement, ["intros", "succ"])
        result = backend.run_script(statement, ["intros", "succ", "succ"])
        assert result.qed_accepted is True

    def test_declaration_rejected_faults(self, backend):
        from evoproof.genome import parse_theorem

        statement = parse_theorem("[statement]\nTheorem broken : nonsense.\n")
        result = backend.run_script(statement, ["intros"])
        assert result.fault is not None
        assert "declaration rejected" in result.fault

    def test_statement_preamble_rejection_aborts(self, backend):
        statement = needs_statement("bad_env", 1, preamble="FailCmd.")
        with pytest.raises(BackendUnavailable):
            backend.run_script(statement, ["intros"])

    def test_statement_preamble_loaded_once(self, fake_session_config, tmp_path):
        transcript = tmp_path / "transcript.log"
        backend = CoqBackend(
            session_config=fake_session_config(), transcript_path=transcript
        )
        try:
            statement = needs_statement("with_env", 1, preamble="Require Import Fake.")
            backend.run_script(statement, ["intros", "succ"])
            backend.run_script(statement, ["intros", "succ"])
        finally:
            backend.close()
        text = transcript.read_text()
        assert text.count("Require Import Fake.") == 1
        assert ">>> Qed." in text

    def test_timeout_kills_and_recovers(self, fake_session_config):
        backend = CoqBackend(session_config=fake_session_config(step_timeout=0.4))
        try:
            statement = needs_statement("slowpoke", 1)
            result = backend.run_script(statement, ["intros", "sleep"])
            assert result.steps[-1].status is StepStatus.FAILED
            assert result.steps[-1].timed_out is True
            after = backend.run_script(statement, ["intros", "succ"])
            assert after.qed_accepted is True
        finally:
            backend.close()

    def test_crash_faults_step_without_timeout_flag(self, backend):
        statement = needs_statement("crasher", 1)
        result = backend.run_script(statement, ["intros", "die"])
        assert result.steps[-1].status is StepStatus.FAILED
        assert result.steps[-1].timed_out is False
        recovered = backend.run_script(statement, ["intros", "succ"])
        assert recovered.qed_accepted is True

    def test_sessions_recycled_after_quota(self, fake_session_config):
        backend = CoqBackend(session_config=fake_session_config(recycle_after=2))
        try:
            statement = needs_statement("quota", 1)
            backend.run_script(statement, ["intros", "succ"])
            first = backend._slots[0]
            backend.run_script(statement, ["intros", "succ"])
            assert backend._slots[0] is first
            backend.run_script(statement, ["intros", "succ"])
            assert backend._slots[0] is not first
        finally:
            backend.close()

    def test_info_shape(self, backend):
        info = backend.info
        assert info["id"] == "coq"
        assert "8.99.0" in info["version"]
        assert info["completion_patterns"]


class TestEvaluateAgainstDriver:
    BASE = parse_tactic_base(
        "succ\n" "noop\tnorepeat\n" "split2\n" "fail\n", origin="<fake>"
    )

    def test_complete_chromosome(self, backend):
        outcome = evaluate(
            Chromosome((0, 0)), self.BASE, needs_statement("pair", 2), backend
        )
        assert outcome.complete
        assert outcome.passed_count == 2

    def test_completion_signal_counts_prefix(self, backend):
        outcome = evaluate(
            Chromosome((0, 2, 0, 0, 0)), self.BASE, needs_statement("extra", 1), backend
        )
        # succ closes, split2 reopens two, three succs close them; the goal
        # count: 1 -> 0? no: succ closes the only goal, split2 then draws
        # the completion signal because nothing is left to split
        assert outcome.complete
        assert outcome.passed_count == 1

    def test_repeat_rule_enforced_before_submission(self, backend):
        outcome = evaluate(
            Chromosome((1, 1, 0)), self.BASE, needs_statement("norep", 1), backend
        )
        assert outcome.failure is FailureKind.REPEAT_VIOLATION
        assert outcome.passed_count == 1

    def test_timeout_maps_to_timeout_kind(self, fake_session_config):
        base = parse_tactic_base("succ\nsleep\n", origin="<fake>")
        backend = CoqBackend(session_config=fake_session_config(step_timeout=0.4))
        try:
            outcome = evaluate(
                Chromosome((1, 0)), base, needs_statement("slow_eval", 1), backend
            )
            assert outcome.failure is FailureKind.TIMEOUT
            assert outcome.passed_count == 0
        finally:
            backend.close()
