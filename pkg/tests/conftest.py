import re

_CRITERIA = {
    1: "temporal oracle equivalence",
    2: "spatial oracle equivalence",
    3: "claim-1 scope resolution",
    4: "listing-2 adjacent-equal analog",
    5: "pattern analogs",
    6: "sampling fidelity",
    7: "merge algebra",
    8: "conservation suite",
    9: "plumbing and performance",
}

_PATTERN = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = {}
    for status, flag in (("passed", "PASS"), ("failed", "FAIL"),
                         ("error", "FAIL"), ("skipped", "SKIP")):
        for rep in terminalreporter.stats.get(status, ()):
            m = _PATTERN.search(getattr(rep, "nodeid", ""))
            if not m:
                continue
            num = int(m.group(1))
            if flag == "FAIL" or results.get(num) != "FAIL":
                results[num] = flag
    if not results:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for num in sorted(results):
        label = _CRITERIA.get(num, "?")
        terminalreporter.write_line(
            f"  criterion {num} ({label}): {results[num]}")
