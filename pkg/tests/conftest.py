import os
import re
from contextlib import contextmanager

import pytest

_RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS] = {}


@pytest.fixture
def criterion(request):
    """Context manager recording one acceptance criterion as PASS or FAIL.

    The body may set ``note["detail"]`` to the measured values; an exception
    inside the block marks the criterion failed and propagates.
    """
    store = request.config.stash[_RESULTS]

    @contextmanager
    def run(label, title: str):
        note = {"detail": ""}
        try:
            yield note
        except BaseException as exc:
            msg = note["detail"] or (str(exc).splitlines() or [type(exc).__name__])[0]
            store[str(label)] = ("FAIL", title, msg)
            raise
        store[str(label)] = ("PASS", title, note["detail"])

    return run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_RESULTS, {})
    if not store:
        return
    mode = "fast" if os.environ.get("ORBTRACE_ACCEPTANCE_FAST") else "full"
    terminalreporter.section(f"acceptance criteria ({mode} resolution)")
    for label in sorted(store, key=lambda k: (int(re.match(r"\d+", k).group()), k)):
        status, title, detail = store[label]
        terminalreporter.write_line(f"{status} criterion {label}: {title} | {detail}")
