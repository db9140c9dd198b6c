#!/usr/bin/env python3
"""Stand-in coqtop for driver tests.

Speaks just enough of the coqtop toplevel protocol to exercise the session
driver: a prompt after every sentence, proof mode entered by declarations of
the form ``Theorem <id> : NEEDS <k>.`` (k subgoals to close), and a handful
of scripted tactics:

    succ.    closes one subgoal
    split2.  turns one subgoal into two
    noop.    changes nothing (intros. behaves the same)
    fail.    always errors
    sleep.   blocks long enough to trip any reasonable step timeout
    die.     exits the process immediately

Submitting any tactic with zero subgoals left yields the canonical
completion message.  ``Qed.`` is accepted only with zero subgoals left;
``Reset <id>.`` forgets a proved theorem; the literal sentence ``FailCmd.``
errors outside proof mode and every other non-proof sentence is accepted
silently.
"""

import os
import re
import sys
import time

VERSION_LINE = "The fake Coq Proof Assistant, version 8.99.0"
DECLARATION_RE = re.compile(
    r"^(?:Theorem|Lemma|Fact|Remark|Corollary|Proposition|Example)\s+"
    r"([A-Za-z_][A-Za-z0-9_']*)\s*:\s*NEEDS\s+(\d+)\s*\.$",
    re.DOTALL,
)
RESET_RE = re.compile(r"^Reset\s+([A-Za-z_][A-Za-z0-9_']*)\s*\.$")


class Toplevel:
    def __init__(self):
        self.proof_name = None
        self.remaining = 0
        self.defined = set()

    def prompt_name(self):
        return self.proof_name if self.proof_name else "Coq"

    def handle(self, sentence):
        """Return the response text for one full sentence."""
        if self.proof_name is None:
            return self._handle_vernacular(sentence)
        return self._handle_proof(sentence)

    def _handle_vernacular(self, sentence):
        match = DECLARATION_RE.match(sentence)
        if match:
            name, needs = match.group(1), int(match.group(2))
            if name in self.defined:
                return f"Error: {name} already exists."
            self.proof_name = name
            self.remaining = needs
            return f"{needs} subgoals"
        if sentence.split(None, 1)[0] in (
            "Theorem", "Lemma", "Fact", "Remark", "Corollary", "Proposition", "Example",
        ):
            return "Error: Syntax error in declaration."
        match = RESET_RE.match(sentence)
        if match:
            name = match.group(1)
            if name in self.defined:
                self.defined.discard(name)
                return ""
            return f"Error: Unable to locate Reset point {name}."
        if sentence in ("Abort All.", "Proof.", "Qed."):
            return "Error: No proof-editing in progress."
        if sentence == "FailCmd.":
            return "Error: Unknown command FailCmd."
        return ""

    def _handle_proof(self, sentence):
        if sentence == "Proof.":
            return ""
        if sentence == "Qed.":
            if self.remaining == 0:
                self.defined.add(self.proof_name)
                name = self.proof_name
                self.proof_name = None
                return f"{name} is defined"
            return "Error: Attempt to save an incomplete proof."
        if sentence == "Abort All.":
            self.proof_name = None
            self.remaining = 0
            return ""
        if sentence == "die.":
            os._exit(2)
        if sentence == "sleep.":
            time.sleep(30)
            return "ok"
        # a tactic with nothing left to prove is the completion signal
        if self.remaining == 0:
            return "Error: No such unproven subgoal."
        if sentence == "succ.":
            self.remaining -= 1
            return "No more subgoals." if self.remaining == 0 else f"{self.remaining} subgoals"
        if sentence == "split2.":
            self.remaining += 1
            return f"{self.remaining} subgoals"
        if sentence in ("noop.", "intros."):
            return "ok"
        if sentence == "fail.":
            return "Error: Tactic failure."
        return f"Error: The reference {sentence.rstrip('.')} was not found."


def main():
    if "--version" in sys.argv[1:]:
        print(VERSION_LINE)
        return 0
    top = Toplevel()
    out = sys.stdout
    out.write("Welcome to the fake Coq toplevel\n")
    out.write(f"\n{top.prompt_name()} < ")
    out.flush()
    pending = []
    for line in sys.stdin:
        stripped = line.rstrip("\n")
        if not stripped.strip():
            continue
        pending.append(stripped)
        if not stripped.rstrip().endswith("."):
            continue
        sentence = "\n".join(pending).strip()
        pending = []
        response = top.handle(sentence)
        if response:
            out.write(response + "\n")
        out.write(f"\n{top.prompt_name()} < ")
        out.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
