"""Shared acceptance bookkeeping: one printed pass/fail line per criterion."""

_RESULTS = []


def record_criterion(idx: int, name: str, passed: bool, detail: str = ""):
    line = f"ACCEPTANCE {idx:02d} {name}: {'PASS' if passed else 'FAIL'}"
    if detail:
        line += f"  ({detail})"
    print(line, flush=True)
    _RESULTS.append((idx, name, passed, detail))
    return passed


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.write_sep("=", "acceptance criteria")
    for idx, name, passed, detail in sorted(_RESULTS):
        tr.write_line(f"  {idx:02d} {name:42s} {'PASS' if passed else 'FAIL'}"
                      + (f"  {detail}" if detail else ""))
