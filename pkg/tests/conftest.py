import pytest

# criterion id -> (passed, detail), filled in by the acceptance suite
ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    """``record_criterion(cid, passed, detail)`` prints and stores one verdict line."""

    def record(cid, passed, detail):
        ACCEPTANCE[cid] = (bool(passed), detail)
        print(f"{'PASS' if passed else 'FAIL'} criterion {cid}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: (int("".join(ch for ch in c if ch.isdigit())), c)):
        passed, detail = ACCEPTANCE[cid]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {cid}: {detail}")
