"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest

# verdict lines registered by the acceptance battery, echoed at the end
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

from motifkit.graph import ColoredGraph, from_edges
from motifkit.rng import stream
from motifkit.treelets import ColoredTreelet, Shape, canonical_decompose


@pytest.fixture
def triangle() -> ColoredGraph:
    return from_edges([(0, 1), (1, 2), (2, 0)])


@pytest.fixture
def path3() -> ColoredGraph:
    return from_edges([(0, 1), (1, 2)])


@pytest.fixture
def c4() -> ColoredGraph:
    return from_edges([(0, 1), (1, 2), (2, 3), (3, 0)])


@pytest.fixture
def k4() -> ColoredGraph:
    return complete_graph(4)


@pytest.fixture
def star5() -> ColoredGraph:
    # one center of degree 5
    return from_edges([(0, i) for i in range(1, 6)])


def complete_graph(n: int) -> ColoredGraph:
    return from_edges([(i, j) for i in range(n) for j in range(i + 1, n)])


def lollipop(clique: int, tail: int) -> ColoredGraph:
    """A complete graph with a path glued to one of its nodes."""
    edges = [(i, j) for i in range(clique) for j in range(i + 1, clique)]
    prev = 0
    for t in range(tail):
        edges.append((prev, clique + t))
        prev = clique + t
    return from_edges(edges)


def random_graph(n: int, p: float, seed: int) -> ColoredGraph:
    """Erdos-Renyi draw plus a spanning path so every node appears."""
    rng = stream(seed, 90)
    edges = [(i, i + 1) for i in range(n - 1)]
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.shape[0]) < p
    edges.extend(zip(iu[keep].tolist(), ju[keep].tolist()))
    return from_edges(edges)


def rainbow(g: ColoredGraph, k: int) -> ColoredGraph:
    """Color node i with i; only sensible when g.n == k."""
    return g.with_colors(k, np.arange(g.n, dtype=np.int8) % k)


def edges_from_order(size: int, bits: int, nodes) -> list:
    """Rebuild the tree edges a sampler draw encodes in its node order.

    The order concatenates the remainder part (root first) with the
    first-child part (its root first), recursively, so the split points
    follow the shape alone.
    """
    assert len(nodes) == size
    if size == 1:
        return []
    t1, t2 = canonical_decompose(ColoredTreelet(Shape(size, bits), (1 << size) - 1))
    left, right = nodes[: t1.shape.size], nodes[t1.shape.size :]
    edges = [(nodes[0], right[0])]
    edges += edges_from_order(t1.shape.size, t1.shape.bits, left)
    edges += edges_from_order(t2.shape.size, t2.shape.bits, right)
    return edges


def copy_identity(size: int, bits: int, nodes) -> tuple:
    """Hashable (vertex set, tree edge set) pair naming one tree copy."""
    edges = edges_from_order(size, bits, nodes)
    return frozenset(nodes), frozenset(frozenset(e) for e in edges)


def colorful_tree_copies(g: ColoredGraph, k: int) -> list:
    """Oracle: every distinct-colored tree copy as (node set, edge set).

    tree_copies reports edges in subset-local indices; translate back.
    """
    from motifkit.bruteforce import tree_copies

    colors = g.colors
    out = []
    for subset, tree in tree_copies(g, k):
        if len({int(colors[u]) for u in subset}) != k:
            continue
        edges = frozenset(frozenset((subset[a], subset[b])) for a, b in tree)
        out.append((frozenset(subset), edges))
    return out


def oracle_rounds(g: ColoredGraph, k: int, *, zero_root):
    """Expected (v, treelet key) -> count for every stored round."""
    from motifkit.bruteforce import rooted_counts
    from motifkit.tables import round_sizes

    out = {}
    for h in round_sizes(k, False):
        final = h == k
        out[h] = rooted_counts(g, h, zero_root=zero_root and final)
    return out


def table_entries(tab, h):
    """Decode a round into {(v, treelet key): count}."""
    from motifkit.tables import _unpack_key

    rnd = tab.rounds[h]
    ite = tab.ite
    found = {}
    for v in range(tab.n):
        keys, cnt = rnd.record(v)
        for key, c in zip(keys, cnt):
            if int(c) == 0:
                continue
            if rnd.dense_keys:
                t = ite.from_code(int(key))
            else:
                t = ColoredTreelet(
                    Shape(*_unpack_key(int(key))[:2]), _unpack_key(int(key))[2]
                )
            found[(v, t.key)] = int(c)
    return found
