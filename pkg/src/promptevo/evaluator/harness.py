"""Harnesses that turn a generated test into a pass/fail outcome with coverage.

``SimulatedHarness`` is a deterministic double driven by a scenario file.
``ExternalHarness`` writes the test into a real project checkout, runs
templated compile/run commands and reads a JaCoCo-style XML report.
"""

from __future__ import annotations

import json
import logging
import queue
import re
import shlex
import subprocess
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping

from ..core import MethodStatus

log = logging.getLogger(__name__)

ASSERTION_MARKERS = ("AssertionError", "AssertionFailedError", "ComparisonFailure", "expected:<", "MultipleFailuresError")


class HarnessError(RuntimeError):
    """Misconfiguration or broken environment; aborts the run."""


class UnknownFocal(HarnessError):
    pass


@dataclass(frozen=True)
class HarnessOutcome:
    status: MethodStatus
    executed_lines: int = 0
    total_lines: int = 0
    executed_branches: int = 0
    total_branches: int = 0
    raw_error: str | None = None

    def __post_init__(self) -> None:
        if self.status is MethodStatus.PASSED and self.raw_error is not None:
            raise ValueError("passed outcome cannot carry an error")


class Harness:
    def self_check(self, focal_ids: Iterable[str] = ()) -> None:
        """Raise :class:`HarnessError` if the harness cannot run ``focal_ids``."""

    def run(self, test_source: str, focal_method_id: str) -> HarnessOutcome:
        raise NotImplementedError

    def method_totals(self, focal_method_id: str) -> tuple[int, int]:
        """(total lines, total branches) of a focal method when known, else zeros."""
        return 0, 0


# --- simulated ---------------------------------------------------------


def _outcome_from_entry(outcome: Mapping[str, Any]) -> HarnessOutcome:
    status = MethodStatus(outcome.get("status", "passed"))
    lines = outcome.get("lines", [0, 0])
    branches = outcome.get("branches", [0, 0])
    if status is MethodStatus.PASSED:
        return HarnessOutcome(status, int(lines[0]), int(lines[1]), int(branches[0]), int(branches[1]))
    return HarnessOutcome(status, 0, int(lines[1]), 0, int(branches[1]), outcome.get("error") or status.value)


class SimulatedHarness(Harness):
    """Maps (focal method, test fingerprint) to a scripted outcome.

    Scenario format::

        {focal_id: {"default": outcome,
                    "markers": [{"contains": [...], "absent": [...], "outcome": outcome}]}}

    The first marker entry whose ``contains`` substrings all occur in the
    test source and whose ``absent`` substrings all do not, decides the
    outcome; otherwise ``default`` applies.
    """

    def __init__(self, scenario: Mapping[str, Any]):
        self.scenario = {k: dict(v) for k, v in scenario.items()}
        for focal_id, entry in self.scenario.items():
            if "default" not in entry:
                raise HarnessError(f"scenario entry {focal_id!r} has no default outcome")

    @classmethod
    def from_file(cls, path: str | Path) -> SimulatedHarness:
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def self_check(self, focal_ids: Iterable[str] = ()) -> None:
        missing = [f for f in focal_ids if f not in self.scenario]
        if missing:
            raise UnknownFocal(f"scenario has no entry for {missing}")

    def _entry(self, focal_method_id: str) -> dict[str, Any]:
        try:
            return self.scenario[focal_method_id]
        except KeyError:
            raise UnknownFocal(f"scenario has no entry for {focal_method_id!r}") from None

    def run(self, test_source: str, focal_method_id: str) -> HarnessOutcome:
        entry = self._entry(focal_method_id)
        for marker in entry.get("markers", ()):
            if all(s in test_source for s in marker.get("contains", ())) and not any(
                s in test_source for s in marker.get("absent", ())
            ):
                return _outcome_from_entry(marker["outcome"])
        return _outcome_from_entry(entry["default"])

    def method_totals(self, focal_method_id: str) -> tuple[int, int]:
        entry = self._entry(focal_method_id)
        if "totals" in entry:
            return int(entry["totals"][0]), int(entry["totals"][1])
        for outcome in [entry["default"]] + [m["outcome"] for m in entry.get("markers", ())]:
            if "lines" in outcome:
                return int(outcome["lines"][1]), int(outcome.get("branches", [0, 0])[1])
        return 0, 0


# --- coverage report ---------------------------------------------------


class CoverageError(HarnessError):
    pass


def _counters(elem: ET.Element) -> dict[str, tuple[int, int]]:
    out = {}
    for c in elem.findall("counter"):
        covered, missed = int(c.get("covered", 0)), int(c.get("missed", 0))
        out[c.get("type", "")] = (covered, covered + missed)
    return out


def parse_coverage_xml(source: str | Path, class_name: str | None = None) -> tuple[int, int, int, int]:
    """Return (covered lines, total lines, covered branches, total branches).

    ``source`` is a path or the XML text itself. With ``class_name`` the
    counters of that class element are used (JaCoCo's ``a/b/Outer$Inner``
    naming is matched against dotted names); otherwise the report totals.
    """
    text = source if isinstance(source, str) and source.lstrip().startswith("<") else Path(source).read_text(encoding="utf-8")
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise CoverageError(f"unreadable coverage report: {exc}") from exc
    scope = root
    if class_name is not None:
        scope = None
        for elem in root.iter("class"):
            name = elem.get("name", "").replace("/", ".").replace("$", ".")
            if name == class_name:
                scope = elem
                break
        if scope is None:
            raise CoverageError(f"class {class_name} not present in coverage report")
    counters = _counters(scope)
    lines = counters.get("LINE", (0, 0))
    branches = counters.get("BRANCH", (0, 0))
    return lines[0], lines[1], branches[0], branches[1]


# --- external ----------------------------------------------------------


_PACKAGE = re.compile(r"^\s*package\s+([\w.]+)\s*;", re.MULTILINE)
_CLASS = re.compile(r"\b(?:class|interface|enum|record)\s+(\w+)")


def declared_test_class(test_source: str) -> tuple[str, str]:
    """(package, simple class name) declared by a generated test file."""
    pkg = _PACKAGE.search(test_source)
    cls = _CLASS.search(test_source)
    return (pkg.group(1) if pkg else ""), (cls.group(1) if cls else "GeneratedTest")


@dataclass
class ExternalConfig:
    compile_command: str
    run_command: str
    coverage_report: str
    test_dir: str
    workspaces: list[str]
    compile_timeout: float = 60.0
    run_timeout: float = 120.0
    totals: dict[str, tuple[int, int]] | None = None


class ExternalHarness(Harness):
    """Runs generated tests with real build tooling.

    Command strings may use ``{TEST_PATH}``, ``{FOCAL_ID}``, ``{WORKSPACE}``
    and ``{TEST_CLASS}``; values are shell-quoted on substitution. Each
    concurrent run borrows one workspace from the pool.
    """

    def __init__(self, config: ExternalConfig):
        self.config = config
        self._pool: queue.Queue[str] = queue.Queue()
        for ws in config.workspaces:
            self._pool.put(ws)

    def self_check(self, focal_ids: Iterable[str] = ()) -> None:
        cfg = self.config
        if not cfg.compile_command.strip() or not cfg.run_command.strip():
            raise HarnessError("compile and run commands must be non-empty")
        if not cfg.workspaces:
            raise HarnessError("at least one workspace is required")
        for ws in cfg.workspaces:
            if not Path(ws).is_dir():
                raise HarnessError(f"workspace {ws} does not exist")

    def method_totals(self, focal_method_id: str) -> tuple[int, int]:
        return tuple(self.config.totals.get(focal_method_id, (0, 0))) if self.config.totals else (0, 0)

    @staticmethod
    def _fill(template: str, values: Mapping[str, str], quote: bool) -> str:
        out = template
        for key, value in values.items():
            out = out.replace("{" + key + "}", shlex.quote(value) if quote else value)
        return out

    def _exec(self, command: str, cwd: str, timeout: float) -> subprocess.CompletedProcess | None:
        try:
            return subprocess.run(command, shell=True, cwd=cwd, capture_output=True, text=True, timeout=timeout)
        except subprocess.TimeoutExpired:
            return None

    def run(self, test_source: str, focal_method_id: str) -> HarnessOutcome:
        workspace = self._pool.get()
        try:
            return self._run_in(workspace, test_source, focal_method_id)
        finally:
            self._pool.put(workspace)

    def _run_in(self, workspace: str, test_source: str, focal_method_id: str) -> HarnessOutcome:
        cfg = self.config
        pkg, cls = declared_test_class(test_source)
        # relative locations are taken inside the workspace
        test_dir = Path(workspace) / self._fill(cfg.test_dir, {"WORKSPACE": workspace}, quote=False)
        test_path = test_dir.joinpath(*pkg.split("."), f"{cls}.java") if pkg else test_dir / f"{cls}.java"
        test_path.parent.mkdir(parents=True, exist_ok=True)
        test_path.write_text(test_source, encoding="utf-8")
        report = Path(workspace) / self._fill(cfg.coverage_report, {"WORKSPACE": workspace}, quote=False)
        if report.exists():
            report.unlink()
        values = {
            "TEST_PATH": str(test_path),
            "FOCAL_ID": focal_method_id,
            "WORKSPACE": workspace,
            "TEST_CLASS": f"{pkg}.{cls}" if pkg else cls,
        }
        total_lines, total_branches = self.method_totals(focal_method_id)

        def failed(status: MethodStatus, error: str) -> HarnessOutcome:
            return HarnessOutcome(status, 0, total_lines, 0, total_branches, error)

        proc = self._exec(self._fill(cfg.compile_command, values, quote=True), workspace, cfg.compile_timeout)
        if proc is None:
            return failed(MethodStatus.RUNTIME_ERROR, "TIMEOUT")
        if proc.returncode != 0:
            return failed(MethodStatus.COMPILE_ERROR, proc.stderr.strip() or proc.stdout.strip())
        proc = self._exec(self._fill(cfg.run_command, values, quote=True), workspace, cfg.run_timeout)
        if proc is None:
            return failed(MethodStatus.RUNTIME_ERROR, "TIMEOUT")
        if proc.returncode != 0:
            output = proc.stderr.strip() or proc.stdout.strip()
            combined = proc.stderr + proc.stdout
            status = (
                MethodStatus.ASSERTION_FAILURE
                if any(m in combined for m in ASSERTION_MARKERS)
                else MethodStatus.RUNTIME_ERROR
            )
            return failed(status, output)
        if not report.exists():
            raise HarnessError(f"run passed but no coverage report at {report}")
        class_name = focal_method_id.split("#", 1)[0]
        lc, lt, bc, bt = parse_coverage_xml(report, class_name)
        return HarnessOutcome(MethodStatus.PASSED, lc, lt, bc, bt)
