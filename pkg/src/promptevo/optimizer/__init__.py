"""Iteration loop, run journal and final-prompt rendering."""

from ..formatting import FinalPromptArtifact, format_final
from .journal import JournalContents, RunJournal, read_journal
from .loop import (
    CountingRandom,
    Optimizer,
    OptimizerConfig,
    ResumeError,
    RunResult,
    make_seeds,
    resume,
    run,
)

__all__ = [
    "CountingRandom",
    "FinalPromptArtifact",
    "JournalContents",
    "Optimizer",
    "OptimizerConfig",
    "ResumeError",
    "RunJournal",
    "RunResult",
    "format_final",
    "make_seeds",
    "read_journal",
    "resume",
    "run",
]
