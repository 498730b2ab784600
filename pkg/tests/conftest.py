from collections import OrderedDict

import numpy as np
import pytest

# criterion id -> (title, [(test name, passed, details)])
_CRITERIA = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, title): test checks the given acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    cid, title = marker.args
    details = [str(v) for k, v in item.user_properties if k == "detail"]
    _CRITERIA.setdefault(cid, (title, []))[1].append((item.name, rep.passed, details))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid, (title, results) in _CRITERIA.items():
        ok = all(passed for _, passed, _ in results)
        failed = [name for name, passed, _ in results if not passed]
        line = f"[{'PASS' if ok else 'FAIL'}] {cid}. {title}"
        if failed:
            line += f" (failing: {', '.join(failed)})"
        terminalreporter.write_line(line)
        for _, _, details in results:
            for d in details:
                terminalreporter.write_line(f"        {d}")


def random_primitive(rng, n, zero_fraction=0.3):
    """Nonnegative matrix that is primitive: a positive diagonal plus a Hamiltonian cycle."""
    A = rng.uniform(0.0, 1.0, (n, n))
    A[rng.uniform(size=(n, n)) < zero_fraction] = 0.0
    perm = rng.permutation(n)
    A[perm, np.roll(perm, 1)] += rng.uniform(0.1, 1.0, n)
    A[np.arange(n), np.arange(n)] += rng.uniform(0.1, 1.0, n)
    return A


def spectral_radius(A):
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def discrete_square_lambda(h):
    return 1.0 / ((8.0 / h**2) * np.sin(np.pi * h / 2.0) ** 2)
