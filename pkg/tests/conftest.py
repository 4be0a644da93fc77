import pytest

_RESULTS: dict[str, list] = {}


class Recorder:
    """Collects per-criterion outcomes; several calls for one criterion are ANDed."""

    def __call__(self, key: str, ok: bool, detail: str = "") -> None:
        slot = _RESULTS.setdefault(key, [True, []])
        slot[0] = slot[0] and bool(ok)
        if detail:
            slot[1].append(detail)
        print(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def record():
    return Recorder()


def _order(key: str):
    head = key.split()[0]
    return (0, int(head)) if head.isdigit() else (1, key)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_RESULTS, key=_order):
        ok, details = _RESULTS[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  " + "; ".join(details))
