import datetime as dt
import io

import numpy as np
import pytest

from marketnet.depnet import DistanceMatrix, Edge, SpanningTree


def tree_from_edges(names, pairs):
    return SpanningTree(tuple(names), tuple(Edge(names[a], names[b], 1.0) for a, b in pairs))


@pytest.fixture
def path3():
    return tree_from_edges(["a", "b", "c"], [(0, 1), (1, 2)])


@pytest.fixture
def star4():
    # centre "c" with leaves x, y, z
    return tree_from_edges(["c", "x", "y", "z"], [(0, 1), (0, 2), (0, 3)])


def csv_text(rows, header="ticker,date,close"):
    return io.StringIO(header + "\n" + "\n".join(",".join(map(str, r)) for r in rows) + "\n")


def weekdays(start, count):
    out, d = [], start
    while len(out) < count:
        if d.weekday() < 5:
            out.append(d)
        d += dt.timedelta(days=1)
    return out


def random_distance(n, rng):
    d = rng.random((n, n))
    d = np.triu(d, 1)
    d = d + d.T
    return DistanceMatrix(tuple(f"t{i}" for i in range(n)), d)


ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
    line = f"[criterion {criterion}] {status}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
