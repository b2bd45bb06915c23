"""Lean verification backend.

Two interchangeable paths: a real toolchain invoked as a child process, and
a recorded-transcript fixture backend keyed by the digest of the scaffolded
source. The transcript path makes every Lean-dependent test runnable on
machines without Lean installed.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import shlex
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from . import literals
from .corpus import Problem
from .errors import BackendMissingError, CorpusError

DEFAULT_TIMEOUT = 120.0
SOURCE_NAME = "Candidate.lean"


class VerifyStatus(Enum):
    VERIFIED = "Verified"
    COMPILE_FAILED = "CompileFailed"
    TIMEOUT = "Timeout"
    TOOL_MISSING = "ToolMissing"


class ErrorClass(Enum):
    SYNTAX = "Syntax"
    TYPE = "Type"
    TERMINATION = "Termination"
    UNKNOWN_IDENTIFIER = "UnknownIdentifier"
    SORRY_PRESENT = "SorryPresent"
    TIMEOUT = "Timeout"
    OTHER = "Other"


@dataclass(frozen=True)
class Diagnostic:
    file: str
    line: int
    column: int
    severity: str  # error, warning, or info
    message: str

    def to_obj(self) -> dict:
        return {
            "file": self.file,
            "line": self.line,
            "column": self.column,
            "severity": self.severity,
            "message": self.message,
        }


@dataclass(frozen=True)
class VerificationOutcome:
    status: VerifyStatus
    diagnostics: Tuple[Diagnostic, ...]
    error_classes: frozenset
    sorry_count: int
    elapsed: float

    def to_obj(self) -> dict:
        return {
            "type": "lean",
            "status": self.status.value,
            "diagnostics": [d.to_obj() for d in self.diagnostics],
            "error_classes": sorted(c.value for c in self.error_classes),
            "sorry_count": self.sorry_count,
            "elapsed": self.elapsed,
        }


@dataclass(frozen=True)
class LeanProject:
    root: Path
    source_path: Path
    source_text: str
    digest: str


_DIAG_LINE = re.compile(r"^([^:\n]+):(\d+):(\d+): (error|warning|info): (.*)$")
_SORRY_TOKEN = re.compile(r"\bsorry\b")

# Ordered classification rules: first matching pattern set wins per
# diagnostic; unmatched diagnostics fall through to Other.
_MESSAGE_RULES: List[Tuple[ErrorClass, Tuple[str, ...]]] = [
    (ErrorClass.SYNTAX, ("unexpected token", "unknown constant parse")),
    (ErrorClass.TYPE, ("type mismatch", "expected type")),
    (
        ErrorClass.TERMINATION,
        ("fail to show termination", "structural recursion cannot"),
    ),
    (ErrorClass.UNKNOWN_IDENTIFIER, ("unknown identifier",)),
    (ErrorClass.SORRY_PRESENT, ("declaration uses 'sorry'",)),
]


def parse_diagnostics(output: str) -> List[Diagnostic]:
    """Parse file:line:col: severity: message records from tool output.

    Lines that do not start a new record are treated as continuations of
    the current message; leading noise before the first record is dropped.
    """
    diags: List[Diagnostic] = []
    current: Optional[dict] = None
    for line in output.splitlines():
        match = _DIAG_LINE.match(line)
        if match:
            if current is not None:
                diags.append(Diagnostic(**current))
            current = {
                "file": match.group(1),
                "line": int(match.group(2)),
                "column": int(match.group(3)),
                "severity": match.group(4),
                "message": match.group(5),
            }
        elif current is not None:
            current["message"] = current["message"] + "\n" + line
    if current is not None:
        diags.append(Diagnostic(**current))
    return [
        Diagnostic(d.file, d.line, d.column, d.severity, d.message.rstrip("\n"))
        for d in diags
    ]


def count_sorries(source: str) -> int:
    """Occurrences of the standalone token sorry in the source."""
    return len(_SORRY_TOKEN.findall(source))


def classify(diagnostics: Sequence[Diagnostic], source: str) -> frozenset:
    """Total, pure mapping from diagnostics plus source to error classes.

    Every diagnostic contributes at least one class (Other as fallback);
    a source containing the standalone token sorry contributes
    SorryPresent regardless of diagnostics.
    """
    classes = set()
    for diag in diagnostics:
        matched = False
        for cls, patterns in _MESSAGE_RULES:
            if any(p in diag.message for p in patterns):
                classes.add(cls)
                matched = True
                break
        if not matched:
            classes.add(ErrorClass.OTHER)
    if _SORRY_TOKEN.search(source):
        classes.add(ErrorClass.SORRY_PRESENT)
    return frozenset(classes)


def build_source(
    artifact_body: str,
    problem: Optional[Problem],
    include_tests: bool = True,
    mathlib: bool = False,
) -> str:
    """Assemble the complete Lean file: imports, artifact body, #guard tests.

    Imports already present in the body are not duplicated. Guard lines
    encode each unit test; an unencodable literal raises CorpusError naming
    the test.
    """
    imports = ["import Std"]
    if mathlib:
        imports.append("import Mathlib")
    body_lines = {line.strip() for line in artifact_body.splitlines()}
    header = [imp for imp in imports if imp not in body_lines]
    parts = []
    if header:
        parts.append("\n".join(header))
    parts.append(artifact_body.rstrip("\n"))
    if include_tests and problem is not None:
        guards = []
        param_nodes = [literals.parse_type(t) for _, t in problem.params]
        return_node = literals.parse_type(problem.return_type)
        for index, test in enumerate(problem.tests):
            try:
                args = " ".join(
                    _guarded(literals.encode_lean(literals.parse_literal(text), node))
                    for text, node in zip(test.inputs, param_nodes)
                )
                expected = literals.encode_lean(
                    literals.parse_literal(test.expected), return_node
                )
            except CorpusError as exc:
                raise CorpusError(
                    f"problem {problem.id} test {index} is not Lean-encodable: {exc}"
                ) from None
            guards.append(
                f"#guard {problem.function_name} {args} == {expected} -- test {index}"
            )
        parts.append("\n".join(guards))
    return "\n\n".join(parts) + "\n"


def _guarded(expr: str) -> str:
    # Bare function arguments must be atomic; literals already parenthesize
    # negatives and bracket lists, so only multi-token survivors need wrapping.
    if expr.startswith(("(", "[", '"')) or " " not in expr:
        return expr
    return f"({expr})"


def source_digest(source_text: str) -> str:
    return hashlib.sha256(source_text.encode("utf-8")).hexdigest()


def _resolve_command(command: Optional[Sequence[str]]) -> List[str]:
    if command:
        return list(command)
    env = os.environ.get("BRIDGE_LEAN_CMD")
    if env:
        return shlex.split(env)
    return ["lean"]


class LeanVerifier:
    """Scaffolds candidate files and checks them with Lean or transcripts."""

    def __init__(
        self,
        *,
        command: Optional[Sequence[str]] = None,
        mathlib: bool = False,
        timeout: float = DEFAULT_TIMEOUT,
        transcripts: Union[None, str, Path, Mapping[str, Mapping]] = None,
        workdir_factory: Optional[Callable[[], Path]] = None,
        runner: Callable = subprocess.run,
    ) -> None:
        self.command = _resolve_command(command)
        self.mathlib = mathlib
        self.timeout = timeout
        self._workdir_factory = workdir_factory or (
            lambda: Path(tempfile.mkdtemp(prefix="bridge-lean-"))
        )
        self._runner = runner
        self._transcripts: Optional[Dict[str, Mapping]] = None
        if transcripts is not None:
            if isinstance(transcripts, (str, Path)):
                try:
                    self._transcripts = json.loads(
                        Path(transcripts).read_text(encoding="utf-8")
                    )
                except FileNotFoundError:
                    raise BackendMissingError(
                        f"transcript bank not found: {transcripts}"
                    ) from None
            else:
                self._transcripts = dict(transcripts)

    def toolchain_available(self) -> bool:
        return shutil.which(self.command[0]) is not None

    def scaffold(
        self,
        artifact_body: str,
        problem: Optional[Problem],
        include_tests: bool = True,
    ) -> LeanProject:
        """Write the candidate file into a fresh isolated directory."""
        source = build_source(artifact_body, problem, include_tests, self.mathlib)
        root = Path(self._workdir_factory())
        root.mkdir(parents=True, exist_ok=True)
        path = root / SOURCE_NAME
        path.write_text(source, encoding="utf-8")
        return LeanProject(
            root=root,
            source_path=path,
            source_text=source,
            digest=source_digest(source),
        )

    def check(
        self, project: LeanProject, timeout: Optional[float] = None
    ) -> VerificationOutcome:
        """Run the toolchain (or look up a transcript) and interpret output.

        Verified requires: tool exit success, zero error diagnostics, and
        zero sorries. Explicitly configured transcripts take precedence
        over a live toolchain so canned runs stay canned. A transcript
        miss or absent toolchain yields ToolMissing rather than an
        exception.
        """
        budget = timeout if timeout is not None else self.timeout
        if self._transcripts is not None:
            return self._check_transcript(project)
        if self.toolchain_available():
            return self._check_real(project, budget)
        return VerificationOutcome(
            status=VerifyStatus.TOOL_MISSING,
            diagnostics=(),
            error_classes=frozenset(),
            sorry_count=count_sorries(project.source_text),
            elapsed=0.0,
        )

    def _check_real(self, project: LeanProject, budget: float) -> VerificationOutcome:
        argv = self.command + [project.source_path.name]
        start = time.monotonic()
        try:
            proc = self._runner(
                argv,
                cwd=str(project.root),
                capture_output=True,
                text=True,
                timeout=budget,
            )
        except subprocess.TimeoutExpired as exc:
            elapsed = time.monotonic() - start
            output = _expired_output(exc)
            diags = tuple(parse_diagnostics(output))
            classes = classify(diags, project.source_text) | {ErrorClass.TIMEOUT}
            return VerificationOutcome(
                status=VerifyStatus.TIMEOUT,
                diagnostics=diags,
                error_classes=frozenset(classes),
                sorry_count=count_sorries(project.source_text),
                elapsed=elapsed,
            )
        elapsed = time.monotonic() - start
        return self._interpret(
            project, proc.returncode, (proc.stdout or "") + (proc.stderr or ""), elapsed
        )

    def _check_transcript(self, project: LeanProject) -> VerificationOutcome:
        entry = self._transcripts.get(project.digest)
        if entry is None:
            return VerificationOutcome(
                status=VerifyStatus.TOOL_MISSING,
                diagnostics=(),
                error_classes=frozenset(),
                sorry_count=count_sorries(project.source_text),
                elapsed=0.0,
            )
        return self._interpret(
            project,
            int(entry.get("returncode", 1)),
            entry.get("output", ""),
            float(entry.get("elapsed", 0.0)),
        )

    def _interpret(
        self, project: LeanProject, returncode: int, output: str, elapsed: float
    ) -> VerificationOutcome:
        diags = tuple(parse_diagnostics(output))
        sorries = count_sorries(project.source_text)
        classes = classify(diags, project.source_text)
        has_errors = any(d.severity == "error" for d in diags)
        if returncode == 0 and not has_errors and sorries == 0:
            status = VerifyStatus.VERIFIED
        else:
            status = VerifyStatus.COMPILE_FAILED
        return VerificationOutcome(
            status=status,
            diagnostics=diags,
            error_classes=classes,
            sorry_count=sorries,
            elapsed=elapsed,
        )


def _expired_output(exc: subprocess.TimeoutExpired) -> str:
    parts = []
    for chunk in (exc.stdout, exc.stderr):
        if not chunk:
            continue
        parts.append(chunk.decode("utf-8", "replace") if isinstance(chunk, bytes) else chunk)
    return "".join(parts)
