from __future__ import annotations

# criterion number -> (title, "PASS" | "FAIL", detail), filled by test_acceptance
ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, verdict, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{verdict} criterion {n:>2}: {title}" + (f" ({detail})" if detail else ""))
