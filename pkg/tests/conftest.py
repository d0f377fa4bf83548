import pytest

# criterion number -> (passed, summary); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, msg = ACCEPTANCE[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k:2d}: {msg}")


@pytest.fixture
def record():
    def _record(k: int, ok: bool, msg: str):
        ACCEPTANCE[k] = (bool(ok), msg)
        print(f"{'PASS' if ok else 'FAIL'} criterion {k:2d}: {msg}")
        assert ok, msg

    return _record
