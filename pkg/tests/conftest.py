import numpy as np
import pytest

from qiter.machine import Dense, Permutation, Query


# Dense reference simulator. Index = basis key with qubit 0 as the most
# significant bit, evolved by tensor contraction. Shares no code with the
# sparse simulator under test.

def dense_apply_gate(psi, m, targets, u):
    g = len(targets)
    tensor = psi.reshape([2] * m)
    gate = np.asarray(u).reshape([2] * (2 * g))
    out = np.tensordot(gate, tensor, axes=(list(range(g, 2 * g)), list(targets)))
    out = np.moveaxis(out, list(range(g)), list(targets))
    return out.reshape(-1)


def dense_query(psi, working, n, table):
    m = working + 2 * n
    out = np.zeros_like(psi)
    for idx in range(1 << m):
        bits = format(idx, f"0{m}b")
        a = int(bits[working:working + n], 2)
        b = int(bits[working + n:], 2)
        new = bits[:working + n] + format(table[a] ^ b, f"0{n}b")
        out[int(new, 2)] = psi[idx]
    return out


def dense_run(program, table, input_word):
    lay = program.layout
    m = lay.total
    psi = np.zeros(1 << m, dtype=complex)
    psi[input_word << lay.n] = 1.0
    for step in program.steps:
        if isinstance(step, Query):
            psi = dense_query(psi, lay.working, lay.n, table)
        elif isinstance(step, Dense):
            psi = dense_apply_gate(psi, m, step.targets, step.unitary.matrix)
        elif isinstance(step, Permutation):
            out = np.zeros_like(psi)
            for idx in range(1 << m):
                out[step.perm(idx)] = psi[idx]
            psi = out
    return psi


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and "test_acceptance" in item.nodeid:
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        _ACCEPTANCE.append(("PASS" if report.passed else "FAIL", doc))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for status, doc in _ACCEPTANCE:
        terminalreporter.write_line(f"{status}  {doc}")
