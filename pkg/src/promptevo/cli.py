"""Command-line driver: optimize, evaluate, extract-context, replay-verify.

Exit status 0 on success, 1 on a runtime failure, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .config import (
    ConfigError,
    ExternalHarnessSection,
    HttpLLM,
    RecordLLM,
    ReplayLLM,
    RunConfig,
    load_config,
    read_dev_set,
    read_seeds,
)
from .context import FocalNotFound, ProjectIndex, UnknownClass, build_context_bundle, index_project
from .core import ScoreReport
from .evaluator import (
    ComposedPrompt,
    DevEntry,
    DevSet,
    Evaluator,
    ExternalConfig,
    ExternalHarness,
    Harness,
    SimulatedHarness,
)
from .formatting import FinalPromptArtifact, render_context
from .llm_client import LLM, ChatBackend, HttpBackend, RecordingBackend, ReplayBackend, Tag
from .optimizer import Optimizer, OptimizerConfig, RunResult
from .optimizer.loop import make_seeds

log = logging.getLogger("promptevo")

JOURNAL = "journal.jsonl"
FINAL_JSON = "final_prompt.json"
FINAL_SAMPLE = "final_prompt_sample.txt"
SUMMARY = "summary.txt"


@dataclass
class Runtime:
    config: RunConfig
    optimizer: OptimizerConfig
    llm: LLM
    harness: Harness
    index: ProjectIndex
    dev: DevSet

    def evaluator(self) -> Evaluator:
        return Evaluator(self.llm, self.harness, self.optimizer.parallelism)


def _temperatures(raw: dict[str, float]) -> dict[Tag, float]:
    try:
        return {Tag(k): v for k, v in raw.items()}
    except ValueError as exc:
        raise ConfigError(f"llm.temperatures: {exc}") from None


def make_backend(section: HttpLLM | RecordLLM | ReplayLLM, parallelism: int, fresh_recording: bool) -> ChatBackend:
    if isinstance(section, ReplayLLM):
        return ReplayBackend.from_file(section.cassette, section.match, parallelism)
    http = HttpBackend(
        section.base_url,
        section.model,
        path=section.path,
        auth_env=section.auth_env,
        max_retries=section.max_retries,
        backoff=section.backoff,
        timeout=section.timeout,
        parallelism=parallelism,
    )
    if isinstance(section, RecordLLM):
        cassette = Path(section.cassette)
        if fresh_recording and cassette.exists():
            cassette.unlink()
        return RecordingBackend(http, cassette, parallelism)
    return http


def make_harness(cfg: RunConfig) -> Harness:
    h = cfg.harness
    if isinstance(h, ExternalHarnessSection):
        totals = {k: (int(v[0]), int(v[1])) for k, v in h.totals.items()} if h.totals else None
        return ExternalHarness(
            ExternalConfig(
                h.compile_command, h.run_command, h.coverage_report, h.test_dir, list(h.workspaces),
                h.compile_timeout, h.run_timeout, totals,
            )
        )
    return SimulatedHarness.from_file(h.scenario)


def build_dev_set(cfg: RunConfig, opt: OptimizerConfig, index: ProjectIndex) -> DevSet:
    entries = []
    for focal_id in read_dev_set(cfg.project.dev_set):
        try:
            bundle = build_context_bundle(
                focal_id, index, max_subclasses=opt.max_subclasses, max_argument_types=opt.max_argument_types
            )
        except (FocalNotFound, UnknownClass) as exc:
            raise ConfigError(f"dev set entry {focal_id!r}: {exc}") from None
        entries.append(DevEntry(focal_id, bundle))
    return DevSet(tuple(entries))


def build_runtime(
    cfg: RunConfig,
    args: argparse.Namespace,
    *,
    llm_section: HttpLLM | RecordLLM | ReplayLLM | None = None,
    fresh_recording: bool = False,
) -> Runtime:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["rng_seed"] = args.seed
    if getattr(args, "parallelism", None) is not None:
        overrides["parallelism"] = args.parallelism
    try:
        opt = cfg.optimizer_config(**overrides)
    except ValueError as exc:
        raise ConfigError(f"optimizer: {exc}") from None
    section = llm_section or cfg.llm
    backend = make_backend(section, opt.parallelism, fresh_recording)
    llm = LLM(backend, _temperatures(section.temperatures), section.max_tokens)
    index = index_project(cfg.project.source_root, cfg.project.extensions, opt.parallelism)
    for warning in index.warnings:
        log.warning("%s", warning)
    dev = build_dev_set(cfg, opt, index)
    return Runtime(cfg, opt, llm, make_harness(cfg), index, dev)


def _seeds(cfg: RunConfig, opt: OptimizerConfig):
    texts = read_seeds(cfg.seeds)
    if len(texts) != opt.seed_count:
        raise ConfigError(f"{cfg.seeds}: {len(texts)} seed prompts but seed_count is {opt.seed_count}")
    if len(set(texts)) != len(texts):
        raise ConfigError(f"{cfg.seeds}: seed prompts must be distinct")
    return make_seeds(texts)


def summary_table(result: RunResult) -> str:
    rows = [f"{'pass':<14}{'best':>10}{'mean':>10}"]
    for label, best, mean in result.history:
        rows.append(f"{label:<14}{best:>10.4f}{mean:>10.4f}")
    rows.append("")
    rows.append(f"final prompt: {result.artifact.prompt_id}")
    rows.append(f"rules: {len(result.artifact.rules)}")
    for i, rule in enumerate(result.rules, 1):
        rows.append(f"  {i}. [{rule.id}, +{rule.score_delta:.4f}] {rule.text}")
    return "\n".join(rows) + "\n"


def write_outputs(out: Path, result: RunResult, dev: DevSet) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / FINAL_JSON).write_text(
        json.dumps(result.artifact.to_dict(), ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    first = dev.entries[0]
    sample = f"# focal method: {first.focal_method_id}\n\n" + result.artifact.render(first.bundle) + "\n"
    (out / FINAL_SAMPLE).write_text(sample, encoding="utf-8")
    (out / SUMMARY).write_text(summary_table(result), encoding="utf-8")


def run_optimize(cfg: RunConfig, args: argparse.Namespace, out: Path, resume: bool) -> RunResult:
    rt = build_runtime(cfg, args, fresh_recording=not resume)
    seeds = _seeds(cfg, rt.optimizer)
    opt = Optimizer(rt.optimizer, rt.dev, rt.llm, rt.evaluator())
    out.mkdir(parents=True, exist_ok=True)
    journal = out / JOURNAL
    result = opt.resume(seeds, journal) if resume else opt.run(seeds, journal)
    write_outputs(out, result, rt.dev)
    return result


# -- subcommands -----------------------------------------------------------


def cmd_optimize(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    out = Path(args.output or cfg.output_dir)
    result = run_optimize(cfg, args, out, args.resume)
    print(summary_table(result), end="")
    print(f"artifacts written to {out}")
    return 0


def _load_prompt_file(path: str) -> tuple[str, tuple[str, ...]]:
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith(".json"):
        art = FinalPromptArtifact.from_dict(json.loads(text))
        return art.instruction, art.rules
    return text.strip(), ()


def report_table(report: ScoreReport) -> str:
    rows = [f"LC {report.line_coverage:.2f}  BC {report.branch_coverage:.2f}  fitness {report.fitness:.2f}", ""]
    rows.append(f"{'focal method':<50} {'status':<24} {'lines':>9} {'branches':>9}")
    for m in report.per_method:
        rows.append(
            f"{m.focal_method_id:<50} {m.status.value:<24} "
            f"{m.executed_lines:>4}/{m.total_lines:<4} {m.executed_branches:>4}/{m.total_branches:<4}"
        )
    return "\n".join(rows)


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if not Path(args.prompt_file).is_file():
        raise ConfigError(f"prompt file not found: {args.prompt_file}")
    instruction, rules = _load_prompt_file(args.prompt_file)
    if not instruction:
        raise ConfigError(f"{args.prompt_file}: empty prompt")
    rt = build_runtime(cfg, args, fresh_recording=True)
    report = rt.evaluator()(ComposedPrompt("prompt", instruction, rules), rt.dev)
    print(report_table(report))
    print(json.dumps(report.to_dict(), ensure_ascii=False, indent=2))
    return 0


def cmd_extract_context(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, check_files=False)
    root = cfg.project.source_root
    if not Path(root).is_dir():
        raise ConfigError(f"source root not found: {root}")
    opt = cfg.optimizer_config()
    index = index_project(root, cfg.project.extensions, args.parallelism or opt.parallelism)
    try:
        bundle = build_context_bundle(
            args.focal_id, index, max_subclasses=opt.max_subclasses, max_argument_types=opt.max_argument_types
        )
    except (FocalNotFound, UnknownClass) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(bundle.to_dict(), ensure_ascii=False, indent=2))
    print()
    print(render_context(bundle))
    return 0


def _first_difference(a: bytes, b: bytes) -> str:
    la, lb = a.split(b"\n"), b.split(b"\n")
    for i, (x, y) in enumerate(zip(la, lb), 1):
        if x != y:
            return f"line {i} differs"
    return f"line counts differ ({len(la)} vs {len(lb)})"


def cmd_replay_verify(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, check_files=False)
    journal = Path(args.journal)
    if not journal.is_file():
        raise ConfigError(f"journal not found: {journal}")
    section = cfg.llm
    if isinstance(section, HttpLLM) and not isinstance(section, RecordLLM):
        raise ConfigError("replay-verify needs a config with a cassette (llm mode record or replay)")
    if not isinstance(section, ReplayLLM):
        section = ReplayLLM(
            mode="replay", cassette=section.cassette, max_tokens=section.max_tokens, temperatures=section.temperatures
        )
    if not Path(section.cassette).is_file():
        raise ConfigError(f"cassette not found: {section.cassette}")
    cfg = cfg.model_copy(update={"llm": section})
    with tempfile.TemporaryDirectory(prefix="promptevo-verify-") as tmp:
        out = Path(tmp)
        run_optimize(cfg, args, out, resume=False)
        ok = True
        expected = journal.read_bytes()
        actual = (out / JOURNAL).read_bytes()
        if expected != actual:
            print(f"journal mismatch: {_first_difference(expected, actual)}")
            ok = False
        final = journal.parent / FINAL_JSON
        if final.is_file():
            if final.read_bytes() != (out / FINAL_JSON).read_bytes():
                print("final artifact mismatch")
                ok = False
        else:
            print(f"note: no {FINAL_JSON} beside the journal; compared the journal only")
    print("replay identical" if ok else "replay differs")
    return 0 if ok else 1


# -- entry point -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="run configuration (JSON)")
    common.add_argument("--output", metavar="DIR", help="output directory (overrides output_dir)")
    common.add_argument("--resume", action="store_true", help="continue the run journaled in the output directory")
    common.add_argument("--seed", type=int, metavar="INT", help="override rng_seed")
    common.add_argument("--parallelism", type=int, metavar="INT", help="override parallelism")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="promptevo", description="Evolve prompts for unit-test generation.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("optimize", parents=[common], help="run the optimization loop")
    p.set_defaults(func=cmd_optimize)
    p = sub.add_parser("evaluate", parents=[common], help="score one prompt on the dev set")
    p.add_argument("prompt_file", help="plain-text instruction, or a final_prompt.json")
    p.set_defaults(func=cmd_evaluate)
    p = sub.add_parser("extract-context", parents=[common], help="print the context bundle for a focal method")
    p.add_argument("focal_id", help="e.g. com.acme.Shape#area()")
    p.set_defaults(func=cmd_extract_context)
    p = sub.add_parser("replay-verify", parents=[common], help="re-run from the cassette and diff against a journal")
    p.add_argument("journal", help="journal.jsonl of the recorded run")
    p.set_defaults(func=cmd_replay_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.parallelism is not None and args.parallelism < 1:
        print("error: --parallelism must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        print("interrupted; rerun with --resume to continue", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime failure
        log.debug("fatal", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
