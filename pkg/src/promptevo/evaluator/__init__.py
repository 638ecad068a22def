"""Scoring prompts: test extraction, harnesses, error normalization."""

from .evaluate import ComposedPrompt, DevEntry, DevSet, Evaluator, evaluate_prompt
from .extract import ExtractionError, extract_test_code
from .harness import (
    CoverageError,
    ExternalConfig,
    ExternalHarness,
    Harness,
    HarnessError,
    HarnessOutcome,
    SimulatedHarness,
    UnknownFocal,
    parse_coverage_xml,
)
from .normalize import normalize_error

__all__ = [
    "ComposedPrompt",
    "CoverageError",
    "DevEntry",
    "DevSet",
    "Evaluator",
    "ExternalConfig",
    "ExternalHarness",
    "ExtractionError",
    "Harness",
    "HarnessError",
    "HarnessOutcome",
    "SimulatedHarness",
    "UnknownFocal",
    "evaluate_prompt",
    "extract_test_code",
    "normalize_error",
    "parse_coverage_xml",
]
