"""Built-in propositional prover used as the default checking backend.

The logic is deliberately small: atoms, a truth constant ``~top~``,
conjunction, disjunction and implication, checked against a goal stack by
eight primitive tactics.  It is fast enough to score hundreds of thousands
of scripts per minute, fully deterministic, and ships with an exhaustive
``brute_force_prove`` search that independent tests use as ground truth.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..genome import EvoproofError, TheoremStatement
from ..evaluation import Backend, ScriptResult, StepResult, StepStatus


class FormulaParseError(EvoproofError):
    """Statement text is not a well-formed formula.  Cites a column."""

    def __init__(self, message: str, column: int):
        super().__init__(f"column {column}: {message}")
        self.column = column


class ToyTacticError(EvoproofError):
    """A tactic does not apply to the current goal state."""


@dataclass(frozen=True, slots=True)
class Atom:
    name: str


@dataclass(frozen=True, slots=True)
class Truth:
    pass


@dataclass(frozen=True, slots=True)
class Conj:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Disj:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Impl:
    antecedent: "Formula"
    consequent: "Formula"


Formula = Atom | Truth | Conj | Disj | Impl

TRUTH_TOKEN = "~top~"

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<arrow>->)"
    r"|(?P<conj>/\\)"
    r"|(?P<disj>\\/)"
    r"|(?P<top>~top~)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<lparen>\()"
    r"|(?P<rparen>\))"
)


def _tokenize(text: str, offset: int) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise FormulaParseError(
                f"unexpected character {text[pos]!r}", column=offset + pos + 1
            )
        if match.lastgroup != "ws":
            tokens.append((match.lastgroup, match.group(), offset + pos + 1))
        pos = match.end()
    return tokens


class _Parser:
    """Recursive-descent parser.  Precedence: ``/\\`` binds tighter than
    ``\\/``, which binds tighter than the right-associative ``->``."""

    def __init__(self, tokens: list[tuple[str, str, int]], end_column: int):
        self._tokens = tokens
        self._index = 0
        self._end_column = end_column

    def _peek(self) -> tuple[str, str, int] | None:
        if self._index < len(self._tokens):
            return self._tokens[self._index]
        return None

    def _advance(self) -> tuple[str, str, int]:
        token = self._peek()
        if token is None:
            raise FormulaParseError("unexpected end of formula", column=self._end_column)
        self._index += 1
        return token

    def parse(self) -> Formula:
        formula = self._implication()
        trailing = self._peek()
        if trailing is not None:
            raise FormulaParseError(
                f"unexpected token {trailing[1]!r}", column=trailing[2]
            )
        return formula

    def _implication(self) -> Formula:
        left = self._disjunction()
        token = self._peek()
        if token is not None and token[0] == "arrow":
            self._advance()
            return Impl(left, self._implication())
        return left

    def _disjunction(self) -> Formula:
        left = self._conjunction()
        while True:
            token = self._peek()
            if token is None or token[0] != "disj":
                return left
            self._advance()
            left = Disj(left, self._conjunction())

    def _conjunction(self) -> Formula:
        left = self._primary()
        while True:
            token = self._peek()
            if token is None or token[0] != "conj":
                return left
            self._advance()
            left = Conj(left, self._primary())

    def _primary(self) -> Formula:
        kind, text, column = self._advance()
        if kind == "ident":
            return Atom(text)
        if kind == "top":
            return Truth()
        if kind == "lparen":
            inner = self._implication()
            closing = self._peek()
            if closing is None or closing[0] != "rparen":
                raise FormulaParseError(
                    "unbalanced parenthesis",
                    column=closing[2] if closing else self._end_column,
                )
            self._advance()
            return inner
        raise FormulaParseError(f"unexpected token {text!r}", column=column)


def parse_formula(text: str, offset: int = 0) -> Formula:
    """Parse a formula; reported columns are 1-based and shifted by
    ``offset`` so errors can cite positions in an enclosing line."""
    tokens = _tokenize(text, offset)
    if not tokens:
        raise FormulaParseError("empty formula", column=offset + 1)
    return _Parser(tokens, end_column=offset + len(text) + 1).parse()


def format_formula(formula: Formula, _parent: int = 0) -> str:
    """Render with minimal parentheses (3: atom level, 2: conj, 1: disj, 0: impl)."""
    if isinstance(formula, Atom):
        return formula.name
    if isinstance(formula, Truth):
        return TRUTH_TOKEN
    if isinstance(formula, Conj):
        text = f"{format_formula(formula.left, 3)} /\\ {format_formula(formula.right, 2)}"
        level = 2
    elif isinstance(formula, Disj):
        text = f"{format_formula(formula.left, 2)} \\/ {format_formula(formula.right, 1)}"
        level = 1
    else:
        text = f"{format_formula(formula.antecedent, 1)} -> {format_formula(formula.consequent, 0)}"
        level = 0
    if level < _parent:
        return f"({text})"
    return text


_DECLARATION_RE = re.compile(
    r"^\s*(?:Theorem|Lemma|Fact|Remark|Corollary|Proposition|Example)\s+"
    r"[A-Za-z_][A-Za-z0-9_']*\s*:\s*"
)


def parse_goal(declaration: str) -> Formula:
    """Extract and parse the goal formula of a theorem declaration."""
    match = _DECLARATION_RE.match(declaration)
    if match is None:
        raise FormulaParseError("declaration lacks a 'Theorem <name> :' header", column=1)
    body = declaration[match.end():].rstrip()
    if not body.endswith("."):
        raise FormulaParseError(
            "declaration does not end with a period", column=len(declaration)
        )
    return parse_formula(body[:-1], offset=match.end())


@dataclass(frozen=True, slots=True)
class Subgoal:
    """Named hypotheses plus the formula left to prove."""

    hypotheses: tuple[tuple[str, Formula], ...]
    target: Formula


@dataclass(frozen=True, slots=True)
class GoalState:
    """Stack of open subgoals; empty means the proof is finished."""

    subgoals: tuple[Subgoal, ...]

    @property
    def complete(self) -> bool:
        return not self.subgoals


def initial_state(goal: Formula) -> GoalState:
    return GoalState((Subgoal((), goal),))


@dataclass(frozen=True, slots=True)
class ToyTactic:
    """Parsed tactic: a kind plus an optional hypothesis-name argument."""

    kind: str
    argument: str | None = None


_NULLARY_TACTICS = frozenset(
    {"intros", "split", "left", "right", "assumption", "trivial"}
)
_UNARY_TACTICS = frozenset({"exact", "apply"})
_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_']*$")


def parse_tactic(text: str) -> ToyTactic:
    text = text.strip()
    if text in _NULLARY_TACTICS:
        return ToyTactic(text)
    head, _, tail = text.partition(" ")
    tail = tail.strip()
    if head in _UNARY_TACTICS and _NAME_RE.match(tail):
        return ToyTactic(head, tail)
    raise ToyTacticError(f"unrecognized tactic {text!r}")


def _fresh_names(used: set[str], count: int) -> list[str]:
    # mirrors the usual prover scheme: H, H0, H1, ...
    names = []
    candidates = ["H"]
    suffix = 0
    while len(names) < count:
        candidate = candidates.pop() if candidates else None
        if candidate is None:
            candidate = f"H{suffix}"
            suffix += 1
        if candidate not in used:
            names.append(candidate)
            used.add(candidate)
    return names


def apply_tactic(state: GoalState, tactic: ToyTactic) -> GoalState:
    """Apply one tactic to the first subgoal, raising ToyTacticError when it
    does not make progress.  All eight tactics act on the head subgoal only."""
    if state.complete:
        raise ToyTacticError("no open subgoal")
    head = state.subgoals[0]
    rest = state.subgoals[1:]
    kind = tactic.kind
    target = head.target
    if kind == "intros":
        # move every leading antecedent into the hypothesis list; zero moves
        # is still a success, matching the usual prover behaviour
        hypotheses = list(head.hypotheses)
        used = {name for name, _ in hypotheses}
        while isinstance(target, Impl):
            name = _fresh_names(used, 1)[0]
            hypotheses.append((name, target.antecedent))
            target = target.consequent
        return GoalState((Subgoal(tuple(hypotheses), target), *rest))
    if kind == "split":
        if not isinstance(target, Conj):
            raise ToyTacticError("split expects a conjunction target")
        return GoalState(
            (
                Subgoal(head.hypotheses, target.left),
                Subgoal(head.hypotheses, target.right),
                *rest,
            )
        )
    if kind == "left":
        if not isinstance(target, Disj):
            raise ToyTacticError("left expects a disjunction target")
        return GoalState((Subgoal(head.hypotheses, target.left), *rest))
    if kind == "right":
        if not isinstance(target, Disj):
            raise ToyTacticError("right expects a disjunction target")
        return GoalState((Subgoal(head.hypotheses, target.right), *rest))
    if kind == "assumption":
        for _, formula in head.hypotheses:
            if formula == target:
                return GoalState(rest)
        raise ToyTacticError("no hypothesis matches the target")
    if kind == "trivial":
        if isinstance(target, Truth):
            return GoalState(rest)
        raise ToyTacticError("trivial only closes the truth constant")
    if kind == "exact":
        for name, formula in head.hypotheses:
            if name == tactic.argument:
                if formula == target:
                    return GoalState(rest)
                raise ToyTacticError(
                    f"hypothesis {name} does not match the target"
                )
        raise ToyTacticError(f"no hypothesis named {tactic.argument}")
    if kind == "apply":
        for name, formula in head.hypotheses:
            if name == tactic.argument:
                if isinstance(formula, Impl) and formula.consequent == target:
                    return GoalState((Subgoal(head.hypotheses, formula.antecedent), *rest))
                raise ToyTacticError(
                    f"hypothesis {name} is not an implication into the target"
                )
        raise ToyTacticError(f"no hypothesis named {tactic.argument}")
    raise ToyTacticError(f"unrecognized tactic kind {kind!r}")


COMPLETION_MESSAGE = "No such unproven subgoal."


class ToyBackend(Backend):
    """Backend adapter around the goal-stack engine.

    Stateless across scripts; parsed statements and tactic texts are memoized
    because the search re-submits the same strings constantly.
    """

    def __init__(self) -> None:
        self._goal_cache: dict[str, Formula] = {}
        self._tactic_cache: dict[str, ToyTactic | None] = {}

    @property
    def info(self) -> dict:
        return {
            "id": "toy",
            "version": "1",
            "step_granularity": True,
            "completion_patterns": [COMPLETION_MESSAGE],
        }

    def _goal_for(self, statement: TheoremStatement) -> Formula:
        text = statement.declaration_text
        goal = self._goal_cache.get(text)
        if goal is None:
            goal = parse_goal(text)
            self._goal_cache[text] = goal
        return goal

    def _tactic_for(self, text: str) -> ToyTactic | None:
        if text not in self._tactic_cache:
            try:
                self._tactic_cache[text] = parse_tactic(text)
            except ToyTacticError:
                self._tactic_cache[text] = None
        return self._tactic_cache[text]

    def run_script(
        self, statement: TheoremStatement, tactics: Sequence[str]
    ) -> ScriptResult:
        try:
            goal = self._goal_for(statement)
        except FormulaParseError as exc:
            return ScriptResult(steps=(), fault=f"statement rejected: {exc}")
        state = initial_state(goal)
        steps: list[StepResult] = []
        for position, text in enumerate(tactics):
            if state.complete:
                steps.append(
                    StepResult(position, StepStatus.COMPLETION_SIGNAL, COMPLETION_MESSAGE)
                )
                return ScriptResult(steps=tuple(steps))
            tactic = self._tactic_for(text)
            if tactic is None:
                steps.append(
                    StepResult(
                        position, StepStatus.FAILED, f"unrecognized tactic {text!r}"
                    )
                )
                return ScriptResult(steps=tuple(steps))
            try:
                state = apply_tactic(state, tactic)
            except ToyTacticError as exc:
                steps.append(StepResult(position, StepStatus.FAILED, str(exc)))
                return ScriptResult(steps=tuple(steps))
            steps.append(StepResult(position, StepStatus.PASSED))
        return ScriptResult(steps=tuple(steps), qed_accepted=state.complete)


def brute_force_prove(
    goal: Formula, tactics: Iterable[str | ToyTactic], max_length: int
) -> tuple[str, ...] | None:
    """Exhaustive breadth-first search for a shortest closing tactic sequence.

    States already reached by a shorter or equal prefix are not revisited;
    continuations from equal states are identical, so pruning cannot miss a
    shorter proof.  Returns tactic texts, or None when nothing closes the
    goal within ``max_length`` steps.
    """
    alphabet: list[tuple[str, ToyTactic]] = []
    for item in tactics:
        if isinstance(item, ToyTactic):
            text = item.kind if item.argument is None else f"{item.kind} {item.argument}"
            alphabet.append((text, item))
        else:
            alphabet.append((item, parse_tactic(item)))
    start = initial_state(goal)
    if start.complete:
        return ()
    queue: deque[tuple[GoalState, tuple[str, ...]]] = deque([(start, ())])
    visited = {start}
    while queue:
        state, sequence = queue.popleft()
        if len(sequence) >= max_length:
            continue
        for text, tactic in alphabet:
            try:
                successor = apply_tactic(state, tactic)
            except ToyTacticError:
                continue
            if successor.complete:
                return sequence + (text,)
            if successor not in visited:
                visited.add(successor)
                queue.append((successor, sequence + (text,)))
    return None
