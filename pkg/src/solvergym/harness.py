"""Sandboxed execution of candidate programs against a solver backend.

Every execution is normalized into an Observation: an executed flag, a
status label recovered from the captured text, an objective value when one
was printed under a numeric status, and the full log.  Two backend kinds
exist: ``embedded-reference`` runs model text through the in-process
reference solver; ``subprocess`` spawns a configured command (for example a
Python interpreter driving a commercial solver) under wall-clock and memory
limits.
"""

from __future__ import annotations

import json
import math
import os
import re
import shutil
import signal
import subprocess
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import refsolver

ERROR_STATUS = "ERROR"
TIMEOUT_MARKER = "[harness] wall-clock timeout exceeded"
MEMORY_MARKER = "[harness] memory limit exceeded"

EMBEDDED_KIND = "embedded-reference"
SUBPROCESS_KIND = "subprocess"

DEFAULT_TIMEOUT_SECONDS = 10.0
DEFAULT_MEMORY_BYTES = 2 * 1024**3

_SOLUTION_LINE_RE = re.compile(r"Just print the best solution:\s*(.*)")
_NUMBER_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")

_MEMORY_HINTS = ("MemoryError", "bad_alloc", "Cannot allocate memory", "out of memory")


class ConfigurationError(ValueError):
    """A backend is misconfigured; distinct from any candidate failure."""


@dataclass(frozen=True)
class ResourceLimits:
    timeout_seconds: float = DEFAULT_TIMEOUT_SECONDS
    memory_bytes: int = DEFAULT_MEMORY_BYTES

    def __post_init__(self) -> None:
        if self.timeout_seconds <= 0:
            raise ConfigurationError("timeout_seconds must be positive")
        if self.memory_bytes <= 0:
            raise ConfigurationError("memory_bytes must be positive")


@dataclass(frozen=True)
class StatusRule:
    pattern: str  # regular expression, searched over the captured log
    status: str


@dataclass(frozen=True)
class BackendSpec:
    """One solver backend: how to run candidates and read their output."""

    solver_id: str
    kind: str
    statuses: frozenset[str]
    numeric_statuses: frozenset[str]
    status_rules: tuple[StatusRule, ...] = ()
    command: tuple[str, ...] | None = None
    fallback_status: str = ERROR_STATUS
    limits: ResourceLimits = field(default_factory=ResourceLimits)

    def __post_init__(self) -> None:
        if not self.solver_id:
            raise ConfigurationError("solver_id must be non-empty")
        if self.kind not in (EMBEDDED_KIND, SUBPROCESS_KIND):
            raise ConfigurationError(f"unknown backend kind {self.kind!r}")
        if not self.numeric_statuses <= self.statuses:
            raise ConfigurationError("numeric_statuses must be a subset of statuses")
        if "OPTIMAL" not in self.numeric_statuses:
            raise ConfigurationError("numeric_statuses must contain OPTIMAL")
        for rule in self.status_rules:
            if rule.status not in self.statuses:
                raise ConfigurationError(
                    f"status rule targets unknown status {rule.status!r}"
                )
        if self.fallback_status != ERROR_STATUS and self.fallback_status not in self.statuses:
            raise ConfigurationError(
                f"fallback status {self.fallback_status!r} not in statuses"
            )
        if self.kind == SUBPROCESS_KIND:
            if not self.command:
                raise ConfigurationError("subprocess backends require a command")
            if not any("{code_file}" in part for part in self.command):
                raise ConfigurationError("command must reference {code_file}")
        compiled = tuple((re.compile(rule.pattern), rule.status) for rule in self.status_rules)
        object.__setattr__(self, "_compiled_rules", compiled)


_BACKEND_FIELDS = {
    "solver_id",
    "kind",
    "command",
    "timeout_seconds",
    "memory_bytes",
    "statuses",
    "numeric_statuses",
    "status_rules",
    "fallback_status",
}


def backend_from_dict(config: dict) -> BackendSpec:
    """Build a BackendSpec from the JSON configuration schema."""
    unknown = set(config) - _BACKEND_FIELDS
    if unknown:
        raise ConfigurationError(f"unknown backend config fields: {sorted(unknown)}")
    try:
        rules = tuple(
            StatusRule(pattern=rule["pattern"], status=rule["status"])
            for rule in config.get("status_rules", [])
        )
    except (TypeError, KeyError) as exc:
        raise ConfigurationError("status_rules entries need 'pattern' and 'status'") from exc
    command = config.get("command")
    return BackendSpec(
        solver_id=config.get("solver_id", ""),
        kind=config.get("kind", ""),
        statuses=frozenset(config.get("statuses", [])),
        numeric_statuses=frozenset(config.get("numeric_statuses", [])),
        status_rules=rules,
        command=tuple(command) if command is not None else None,
        fallback_status=config.get("fallback_status", ERROR_STATUS),
        limits=ResourceLimits(
            timeout_seconds=config.get("timeout_seconds", DEFAULT_TIMEOUT_SECONDS),
            memory_bytes=config.get("memory_bytes", DEFAULT_MEMORY_BYTES),
        ),
    )


def load_backend_spec(path: str | os.PathLike) -> BackendSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"invalid backend config {path}: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigurationError(f"backend config {path} must be a JSON object")
    return backend_from_dict(config)


@dataclass(frozen=True)
class Observation:
    """Normalized execution result: (executed, status, objective, log)."""

    executed: bool
    status: str
    objective: float | None
    log: str


def extract_objective(log: str) -> float | None:
    """Objective printed in the standard convention, from the LAST such line.

    Absent when no line matches or the last payload is not a plain or
    scientific-notation decimal number.
    """
    payload = None
    for match in _SOLUTION_LINE_RE.finditer(log):
        payload = match.group(1).strip()
    if payload is None or not _NUMBER_RE.fullmatch(payload):
        return None
    return float(payload)


def infer_status(log: str, objective_present: bool, backend: BackendSpec) -> str:
    """First matching status rule wins; fall back on OPTIMAL or the backend default."""
    for pattern, status in backend._compiled_rules:  # noqa: SLF001 - own class
        if pattern.search(log):
            return status
    return "OPTIMAL" if objective_present else backend.fallback_status


def build_observation(executed: bool, log: str, backend: BackendSpec) -> Observation:
    """Apply objective extraction and status inference, keeping the invariants:
    no objective without execution, and no objective under a non-numeric status.
    """
    if not executed:
        return Observation(executed=False, status=ERROR_STATUS, objective=None, log=log)
    objective = extract_objective(log)
    if objective is not None and not math.isfinite(objective):
        objective = None
    status = infer_status(log, objective is not None, backend)
    if status not in backend.numeric_statuses:
        objective = None
    return Observation(executed=True, status=status, objective=objective, log=log)


def _run_embedded(code: str, backend: BackendSpec) -> tuple[bool, str]:
    deadline = time.monotonic() + backend.limits.timeout_seconds
    try:
        result = refsolver.milp_solve(refsolver.parse_model(code), deadline=deadline)
    except refsolver.TimeLimitExceeded:
        return False, TIMEOUT_MARKER
    except (refsolver.ParseError, refsolver.ModelError) as exc:
        return False, f"{type(exc).__name__}: {exc}"
    except (refsolver.NodeBudgetExceeded, refsolver.SolverNumericsError) as exc:
        return False, f"{type(exc).__name__}: {exc}"
    return True, refsolver.emit_result_text(result)


def _set_subprocess_limits(memory_bytes: int):
    def preexec() -> None:
        import resource

        try:
            resource.setrlimit(resource.RLIMIT_AS, (memory_bytes, memory_bytes))
        except (ValueError, OSError):
            pass  # cap unavailable on this host; timeout still bounds the run

    return preexec


def _run_subprocess(code_file: str, backend: BackendSpec, cwd: str) -> tuple[bool, str]:
    command = [part.replace("{code_file}", code_file) for part in backend.command]
    try:
        proc = subprocess.Popen(
            command,
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
            stdin=subprocess.DEVNULL,
            cwd=cwd,
            preexec_fn=_set_subprocess_limits(backend.limits.memory_bytes),
            start_new_session=True,
        )
    except FileNotFoundError as exc:
        raise ConfigurationError(f"backend command not found: {command[0]!r}") from exc
    try:
        out, _ = proc.communicate(timeout=backend.limits.timeout_seconds)
    except subprocess.TimeoutExpired:
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except (ProcessLookupError, PermissionError):
            proc.kill()
        out, _ = proc.communicate()
        log = out.decode("utf-8", errors="replace") if out else ""
        return False, log + ("\n" if log and not log.endswith("\n") else "") + TIMEOUT_MARKER
    log = out.decode("utf-8", errors="replace") if out else ""
    if proc.returncode != 0:
        if any(hint in log for hint in _MEMORY_HINTS) or proc.returncode == -signal.SIGKILL:
            log += ("\n" if log and not log.endswith("\n") else "") + MEMORY_MARKER
        return False, log
    return True, log


def execute_candidate(
    code: str,
    backend: BackendSpec,
    keep_artifacts: bool = False,
    scratch_root: str | None = None,
) -> Observation:
    """Run one candidate in a fresh scratch directory and observe the outcome.

    Candidate failures (crashes, limit breaches, parse errors) come back as
    observations with ``executed=False``; only backend misconfiguration
    raises.
    """
    scratch = tempfile.mkdtemp(prefix="solvergym-", dir=scratch_root)
    try:
        filename = "model.lp" if backend.kind == EMBEDDED_KIND else "candidate.py"
        code_file = os.path.join(scratch, filename)
        with open(code_file, "w", encoding="utf-8") as fh:
            fh.write(code)
        if backend.kind == EMBEDDED_KIND:
            executed, log = _run_embedded(code, backend)
        else:
            executed, log = _run_subprocess(code_file, backend, cwd=scratch)
        return build_observation(executed, log, backend)
    finally:
        if not keep_artifacts:
            shutil.rmtree(scratch, ignore_errors=True)


def run_group(
    context_id: str,
    candidates: list[str],
    backend: BackendSpec,
    worker_budget: int = 4,
    keep_artifacts: bool = False,
    scratch_root: str | None = None,
) -> list[Observation]:
    """Execute a group of candidates, positionally aligned with the input.

    Executions fan out over at most ``worker_budget`` workers; each candidate
    gets its own scratch directory, so results are independent of scheduling.
    """
    if not candidates:
        raise ValueError(f"run_group for context {context_id!r} needs candidates")
    if worker_budget < 1:
        raise ValueError("worker_budget must be a positive count")
    if worker_budget == 1 or len(candidates) == 1:
        return [
            execute_candidate(code, backend, keep_artifacts, scratch_root)
            for code in candidates
        ]
    with ThreadPoolExecutor(max_workers=worker_budget) as pool:
        return list(
            pool.map(
                lambda code: execute_candidate(code, backend, keep_artifacts, scratch_root),
                candidates,
            )
        )
