"""Deterministic stand-ins for the model and the build: a content-driven chat
handler, simulated-harness scenarios and a fake chat-completions server.

The handler looks only at the request text, so the same request always gets
the same answer, whichever backend (scripted, HTTP, replay) delivers it.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from promptevo.context import build_context_bundle, index_project
from promptevo.evaluator import DevEntry, DevSet, Evaluator, SimulatedHarness
from promptevo.llm_client import LLM, ChatRequest, ScriptedBackend

FIXTURES = Path(__file__).parent / "fixtures"
JAVA_SRC = FIXTURES / "java_project" / "src"

RENDERER = "com.acme.render.AbstractItemRenderer#getLegendItemLabel(int)"
DISCOUNT = "com.acme.pricing.StandardCalculator#applyDiscount(Money,Currency)"
REGISTRY = "com.acme.util.Registry#register(K,Box<Money>)"
SUBTOTAL = "com.acme.orders.Order.Line#subtotal()"
DEV_IDS = [RENDERER, DISCOUNT, REGISTRY, SUBTOTAL]

SEEDS = [
    "Write JUnit tests for the focal method.",
    "Write unit tests that cover the edge cases of the focal method.",
    "Generate thorough JUnit 4 tests for the given Java method, covering each branch.",
    "You are a tester. Produce a test class for the method below.",
    "Create tests for the method and check the returned values carefully.",
]

DIVERSE_DIRECTIVES = [
    "Adopt the persona of a senior QA engineer who audits legacy code.",
    "Require explicit coverage of edge cases and boundary values.",
    "Demand that every branch of the method is executed at least once.",
    "Restructure the instruction as a numbered step by step procedure.",
]
CLONE_DIRECTIVES = [
    "Lightly rephrase the instruction, keeping nearly every word.",
    "Swap a single verb for a synonym and leave everything else unchanged.",
]

EXCEPTION_RULE = "Wrap calls that can throw in a try block and assert the expected exception type."
SUBCLASS_RULE = "Instantiate abstract classes through a concrete subclass named in the subclass information."
NEUTRAL_RULE = "Use descriptive names for test methods."

ABSTRACT_ERROR = "GenTest.java:9: error: AbstractItemRenderer is abstract; cannot be instantiated"
DISCOUNT_ERROR = (
    "java.lang.IllegalStateException: currency mismatch\n"
    "\tat com.acme.pricing.StandardCalculator.applyDiscount(StandardCalculator.java:24)"
)
REGISTRY_ERROR = (
    "java.lang.IllegalArgumentException: duplicate key: k1\n"
    "\tat com.acme.util.Registry.register(Registry.java:11)"
)


# -- scenario -----------------------------------------------------------------


def passed(lines: tuple[int, int], branches: tuple[int, int]) -> dict:
    return {"status": "passed", "lines": list(lines), "branches": list(branches)}


def failed(status: str, error: str, lines: int, branches: int) -> dict:
    return {"status": status, "error": error, "lines": [0, lines], "branches": [0, branches]}


def base_scenario() -> dict:
    """The hand-authored scenario; its coverage numbers are used by hand-derived oracles."""
    return {
        RENDERER: {
            "markers": [
                {"contains": ["new AbstractItemRenderer("], "outcome": failed("compile_error", ABSTRACT_ERROR, 10, 4)},
                {"contains": ["// edge"], "outcome": passed((10, 10), (4, 4))},
            ],
            "default": passed((7, 10), (2, 4)),
        },
        DISCOUNT: {
            "markers": [
                {"absent": ["try {"], "outcome": failed("runtime_error", DISCOUNT_ERROR, 8, 2)},
                {"contains": ["// branches"], "outcome": passed((8, 8), (2, 2))},
            ],
            "default": passed((6, 8), (1, 2)),
        },
        REGISTRY: {
            "markers": [
                {"absent": ["try {"], "outcome": failed("runtime_error", REGISTRY_ERROR, 6, 2)},
                {"contains": ["// edge"], "outcome": passed((6, 6), (2, 2))},
            ],
            "default": passed((4, 6), (1, 2)),
        },
        SUBTOTAL: {
            "markers": [
                {"contains": ["// edge", "// branches"], "outcome": passed((8, 8), (2, 2))},
            ],
            "default": passed((5, 8), (1, 2)),
        },
    }


def random_scenario(rng: random.Random) -> dict:
    """Same marker structure as the base scenario with random coverage counts."""

    def cov(total: int, low: float) -> tuple[int, int]:
        return rng.randint(int(total * low), total), total

    out = {}
    for focal, entry in base_scenario().items():
        lines = rng.randint(3, 30)
        branches = rng.randint(0, 8)
        markers = []
        for m in entry["markers"]:
            o = m["outcome"]
            if o["status"] == "passed":
                outcome = passed(cov(lines, 0.6), cov(branches, 0.6))
            else:
                outcome = failed(o["status"], o["error"], lines, branches)
            markers.append({**{k: v for k, v in m.items() if k != "outcome"}, "outcome": outcome})
        out[focal] = {"markers": markers, "default": passed(cov(lines, 0.0), cov(branches, 0.0))}
    return out


# -- chat handler --------------------------------------------------------------


def _pick(text: str, k: int, pool: list[str]) -> list[str]:
    h = int(hashlib.sha256(text.encode()).hexdigest(), 16)
    start = h % len(pool)
    return [pool[(start + i) % len(pool)] for i in range(min(k, len(pool)))]


def generate_test(prompt: str) -> str:
    head, _, context = prompt.partition("\n\nClass signature:\n")
    head = head.lower()
    focal = context.split("Focal method:\n", 1)[-1]
    body = []
    if "getLegendItemLabel" in focal:
        ctor = "new BarRenderer(2)" if "subclass" in head else "new AbstractItemRenderer(2)"
        body.append(f"Object target = {ctor};")
    elif "applyDiscount" in focal:
        body.append("StandardCalculator target = new StandardCalculator(10);")
    elif "register(" in focal:
        body.append("Registry<String> target = new Registry<>();")
    else:
        body.append("Order.Line target = new Order.Line(new Money(100L, Currency.EUR), 2);")
    call = "target.toString();"
    if "exception" in head:
        body.append("try {")
        body.append("    " + call)
        body.append("} catch (RuntimeException expected) {")
        body.append("}")
    else:
        body.append(call)
    if "edge" in head or "boundary" in head:
        body.append("// edge")
    if "branch" in head:
        body.append("// branches")
    lines = "\n".join("        " + b for b in body)
    return (
        "Here is the test:\n```java\npackage com.acme.gen;\n\nimport org.junit.Test;\n\n"
        "public class GenTest {\n    @Test\n    public void testFocal() {\n" + lines + "\n    }\n}\n```\n"
    )


def synthesize(request: str) -> str:
    best = re.search(r"^Instruction 1: (.*)$", request, re.MULTILINE).group(1).strip()
    directive = re.search(r"instructions\nabove:\n\n(.*?)\n\nThe new instruction", request, re.DOTALL).group(1)
    d = directive.lower()
    if "persona" in d:
        return f'"As a senior QA engineer auditing legacy code, {best[0].lower()}{best[1:]}"'
    if "edge" in d:
        return f"{best} Exercise edge cases and boundary values such as empty, null and extreme inputs."
    if "branch" in d:
        return f"{best} Make sure that every branch of the method is executed by at least one test."
    if "step" in d:
        return f"**Step 1: read the method signature. Step 2: {best} Step 3: review the assertions.**"
    if "rephrase" in d:
        return best.replace("Write", "Create", 1) if "Write" in best else best + " Thanks."
    if "synonym" in d:
        return best.replace("tests", "test cases", 1) if "tests" in best else best + "!"
    return f"{best} ({directive.strip()})"


def reflect(request: str) -> str:
    if "cannot be instantiated" in request:
        return (
            "Explanations:\nThe test instantiates an abstract class directly, which does not compile.\n"
            "Solutions:\nPick a concrete subclass from the subclass information and instantiate that instead."
        )
    if "Exception" in request:
        return (
            "Explanations:\nThe method throws for invalid input and the test does not expect it.\n"
            "Solutions:\nSurround throwing calls with try and catch and assert on the exception."
        )
    return "Explanations:\nUnknown failure.\nSolutions:\nRead the method more carefully."


def transform(request: str) -> str:
    solutions = request.split("Solutions:", 1)[-1]
    if "subclass" in solutions:
        rules = [NEUTRAL_RULE, SUBCLASS_RULE]
    elif "exception" in solutions:
        rules = [NEUTRAL_RULE, EXCEPTION_RULE]
    else:
        rules = [NEUTRAL_RULE]
    return "\n".join(f"{i}. {r}" for i, r in enumerate(rules, 1))


@dataclass
class ScriptedModel:
    """Answers each kind of request by looking at its text."""

    directives: list[str] = field(default_factory=lambda: list(DIVERSE_DIRECTIVES))

    def __call__(self, request: ChatRequest | str) -> str:
        text = request.user_text if isinstance(request, ChatRequest) else request
        if text.startswith("You are helping") and "Propose " in text:
            n = int(re.search(r"exactly (\d+) items", text).group(1))
            return "\n".join(f"{i}. {d}" for i, d in enumerate(_pick(text, n, self.directives), 1))
        if text.startswith("You are helping"):
            return synthesize(text)
        if "Explanations:\n<why" in text:
            return reflect(text)
        if text.startswith("The following explanations"):
            return transform(text)
        return generate_test(text)


# -- assembly ------------------------------------------------------------------


_INDEX = None


def fixture_index():
    global _INDEX
    if _INDEX is None:
        _INDEX = index_project(JAVA_SRC)
    return _INDEX


def dev_set(ids: list[str] = DEV_IDS) -> DevSet:
    idx = fixture_index()
    return DevSet(tuple(DevEntry(f, build_context_bundle(f, idx)) for f in ids))


def scripted_llm(model: ScriptedModel | None = None, parallelism: int = 1) -> LLM:
    return LLM(ScriptedBackend(model or ScriptedModel(), parallelism))


def evaluator_for(llm: LLM, scenario: dict | None = None, parallelism: int = 1) -> Evaluator:
    return Evaluator(llm, SimulatedHarness(scenario or base_scenario()), parallelism)


# -- fake chat-completions server ---------------------------------------------


class FakeChatServer:
    """OpenAI-style endpoint on localhost answering with :class:`ScriptedModel`."""

    def __init__(self, model: ScriptedModel | None = None):
        model = model or ScriptedModel()
        self.requests = 0

        server = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):  # noqa: N802
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length))
                server.requests += 1
                text = model(body["messages"][-1]["content"])
                payload = json.dumps(
                    {"choices": [{"message": {"role": "assistant", "content": text}, "finish_reason": "stop"}]}
                ).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self) -> FakeChatServer:
        self.thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()


def write_run_files(root: Path, llm: dict, iterations: int = 3, scenario: dict | None = None) -> Path:
    """Seeds, dev set, scenario and config for a CLI run; returns the config path."""
    root.mkdir(parents=True, exist_ok=True)
    (root / "seeds.txt").write_text("# seed prompts\n" + "\n".join(SEEDS) + "\n", encoding="utf-8")
    (root / "dev.json").write_text(json.dumps(DEV_IDS), encoding="utf-8")
    (root / "scenario.json").write_text(json.dumps(scenario or base_scenario(), indent=2), encoding="utf-8")
    config = {
        "optimizer": {"max_iterations": iterations, "rng_seed": 7},
        "llm": llm,
        "harness": {"mode": "simulated", "scenario": "scenario.json"},
        "project": {"source_root": str(JAVA_SRC), "dev_set": "dev.json"},
        "seeds": "seeds.txt",
        "output_dir": "out",
    }
    path = root / "config.json"
    path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    return path
