import pytest

_RESULTS = pytest.StashKey[dict]()

CRITERIA = {
    1: "spectral correctness",
    2: "posterior oracle equivalence",
    3: "aliasing identities and aliased power bound",
    4: "D2 asymptotics (1-D constant, 2-D log correction)",
    5: "remainder negligibility",
    6: "oracle inequality",
    7: "credible-ball coverage",
    8: "pointwise fraction coverage",
    9: "rate adaptation slopes",
    10: "hierarchical Bayes concentration",
    11: "prior draws are polished tail",
    12: "log-determinant asymptotics",
    13: "determinism of report.csv",
}


def pytest_configure(config):
    config.stash[_RESULTS] = {}


@pytest.fixture
def acceptance(request):
    """Record one part of an acceptance criterion: ``acceptance(k, ok, detail)``."""
    store = request.config.stash[_RESULTS]

    def record(k, ok, detail):
        store.setdefault(k, []).append((bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash[_RESULTS]
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for k, name in CRITERIA.items():
        parts = store.get(k)
        if parts is None:
            terminalreporter.write_line(f"criterion {k:2d}: NOT RUN  {name}")
            continue
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {name}  [{detail}]")
