"""Small-graph canonical forms, enumeration, spanning-tree structure.

A graphlet on k <= 16 nodes is packed into one integer: bit p holds the
adjacency of the p-th node pair in row-major upper-triangle order, so
the whole graph fits in 120 bits and a class is named by the canonical
(minimal) packing over relabelings.  The search space is cut down first
by iterated degree refinement; only permutations within refinement
cells are tried.  Refinement assigns cell indices canonically, so any
isomorphism preserves cells and the minimum is a complete invariant.

The module also enumerates all connected k-node classes (k <= 8), counts
them independently through the cycle index of the pair permutation
group, counts spanning trees exactly, and splits a graphlet's spanning
trees by tree shape with the same dynamic program used on real graphs,
run on a rainbow-colored copy of the graphlet.
"""

import functools
import itertools
import math

import numpy as np

from .graph import from_edges
from .tables import build_tables
from .treelets import star_skeleton


def pair_index(i: int, j: int, k: int) -> int:
    """Position of pair (i, j), i < j, in row-major upper-triangle order."""
    return i * k - i * (i + 1) // 2 + (j - i - 1)


def pack_from_masks(masks) -> int:
    k = len(masks)
    sig = 0
    for i in range(k):
        for j in range(i + 1, k):
            if (masks[i] >> j) & 1:
                sig |= 1 << pair_index(i, j, k)
    return sig


def unpack_masks(sig: int, k: int) -> list[int]:
    masks = [0] * k
    for i in range(k):
        for j in range(i + 1, k):
            if (sig >> pair_index(i, j, k)) & 1:
                masks[i] |= 1 << j
                masks[j] |= 1 << i
    return masks


def edge_count(sig: int) -> int:
    return bin(sig).count("1")


def extract_induced(g, nodes) -> int:
    """Packed adjacency bits of the subgraph induced on the given nodes.

    Bit order follows the node list as given, so permuting the list
    permutes the bits; canonical_form removes that freedom.
    """
    k = len(nodes)
    if len(set(nodes)) != k:
        raise ValueError("induced extraction needs distinct nodes")
    sig = 0
    for i in range(k):
        for j in range(i + 1, k):
            if g.has_edge(int(nodes[i]), int(nodes[j])):
                sig |= 1 << pair_index(i, j, k)
    return sig


def classify(g, nodes) -> int:
    """Canonical signature of the subgraph induced on a sampled node set."""
    return canonical_form(extract_induced(g, nodes), len(nodes))


def is_connected(sig: int, k: int) -> bool:
    masks = unpack_masks(sig, k)
    seen = 1
    frontier = 1
    while frontier:
        nxt = 0
        v = 0
        f = frontier
        while f:
            if f & 1:
                nxt |= masks[v]
            f >>= 1
            v += 1
        frontier = nxt & ~seen
        seen |= nxt
    return seen == (1 << k) - 1


def _refine(masks, k):
    """Iterated neighborhood refinement; returns per-node cell indices.

    Cell indices are ranks of canonically ordered keys, so isomorphic
    graphs get identical cell structures in identical order.
    """
    colors = [bin(m).count("1") for m in masks]
    rank = {c: i for i, c in enumerate(sorted(set(colors)))}
    colors = [rank[c] for c in colors]
    while True:
        keys = []
        for v in range(k):
            nb = []
            m = masks[v]
            u = 0
            while m:
                if m & 1:
                    nb.append(colors[u])
                m >>= 1
                u += 1
            keys.append((colors[v], tuple(sorted(nb))))
        rank = {key: i for i, key in enumerate(sorted(set(keys)))}
        new = [rank[key] for key in keys]
        if new == colors:
            return colors
        colors = new


_CANON: dict[tuple[int, int], int] = {}


def canonical_form(sig: int, k: int) -> int:
    """Minimal packing over all relabelings compatible with refinement."""
    memo_key = (k, sig)
    got = _CANON.get(memo_key)
    if got is not None:
        return got
    masks = unpack_masks(sig, k)
    colors = _refine(masks, k)
    cells: dict[int, list[int]] = {}
    for v, c in enumerate(colors):
        cells.setdefault(c, []).append(v)
    ordered = [cells[c] for c in sorted(cells)]
    best = None
    for mix in itertools.product(*(itertools.permutations(cell) for cell in ordered)):
        perm = [v for cell in mix for v in cell]  # new position -> old node
        cand = 0
        for a in range(k):
            ma = masks[perm[a]]
            for b in range(a + 1, k):
                if (ma >> perm[b]) & 1:
                    cand |= 1 << pair_index(a, b, k)
        if best is None or cand < best:
            best = cand
    _CANON[memo_key] = best
    return best


def signature_hex(sig: int) -> str:
    return format(sig, "032x")


def signature_from_hex(text: str) -> int:
    return int(text, 16)


# ---------------------------------------------------------------------------
# enumeration


@functools.lru_cache(maxsize=None)
def all_graphs(n: int) -> tuple[int, ...]:
    """Canonical signatures of every n-node graph, connected or not."""
    if n < 1:
        raise ValueError("n must be positive")
    if n <= 5:
        out = {canonical_form(sig, n) for sig in range(1 << (n * (n - 1) // 2))}
        return tuple(sorted(out))
    out = set()
    for base in all_graphs(n - 1):
        masks = unpack_masks(base, n - 1)
        masks.append(0)
        for attach in range(1 << (n - 1)):
            grown = list(masks)
            grown[n - 1] = attach
            a = attach
            v = 0
            while a:
                if a & 1:
                    grown[v] = grown[v] | (1 << (n - 1))
                a >>= 1
                v += 1
            out.add(canonical_form(pack_from_masks(grown), n))
    return tuple(sorted(out))


@functools.lru_cache(maxsize=None)
def census(n: int) -> tuple[int, ...]:
    """Canonical signatures of every connected n-node graph, sorted."""
    if n < 1:
        raise ValueError("n must be positive")
    if n <= 6:
        out = {
            canonical_form(sig, n)
            for sig in range(1 << (n * (n - 1) // 2))
            if is_connected(sig, n)
        }
        return tuple(sorted(out))
    out = set()
    for base in all_graphs(n - 1):
        masks = unpack_masks(base, n - 1)
        masks.append(0)
        for attach in range(1, 1 << (n - 1)):
            grown = list(masks)
            grown[n - 1] = attach
            a = attach
            v = 0
            while a:
                if a & 1:
                    grown[v] = grown[v] | (1 << (n - 1))
                a >>= 1
                v += 1
            sig = pack_from_masks(grown)
            if is_connected(sig, n):
                out.add(canonical_form(sig, n))
    return tuple(sorted(out))


def _partitions(n: int):
    if n == 0:
        yield ()
        return
    for first in range(n, 0, -1):
        for rest in _partitions(n - first):
            if not rest or first >= rest[0]:
                yield (first, *rest)


def count_all_graphs(n: int) -> int:
    """Number of n-node graph classes, by the pair-group cycle index."""
    total = 0
    nfact = math.factorial(n)
    for lam in _partitions(n):
        mult: dict[int, int] = {}
        for l in lam:
            mult[l] = mult.get(l, 0) + 1
        z = 1
        for l, m in mult.items():
            z *= l**m * math.factorial(m)
        orbits = 0
        lengths = list(lam)
        for idx, l in enumerate(lengths):
            orbits += l // 2
            for l2 in lengths[idx + 1 :]:
                orbits += math.gcd(l, l2)
        total += (nfact // z) * (1 << orbits)
    assert total % nfact == 0
    return total // nfact


def count_connected_graphs(n: int) -> int:
    """Number of connected n-node graph classes, exactly.

    Inverts the disjoint-union structure of the class counts: with
    a_m = sum_{d | m} d * c_d, the totals satisfy
    m * g_m = sum_{j=1..m} a_j * g_{m-j}, and Moebius inversion on the
    divisor sum recovers c_n.
    """
    g = [1] + [count_all_graphs(m) for m in range(1, n + 1)]
    a = [0] * (n + 1)
    for m in range(1, n + 1):
        a[m] = m * g[m] - sum(a[j] * g[m - j] for j in range(1, m))
        assert a[m] > 0
    total = 0
    for d in range(1, n + 1):
        if n % d == 0:
            total += _moebius(n // d) * a[d]
    assert total % n == 0
    return total // n


def _moebius(n: int) -> int:
    out = 1
    d = 2
    while d * d <= n:
        if n % d == 0:
            n //= d
            if n % d == 0:
                return 0
            out = -out
        d += 1
    if n > 1:
        out = -out
    return out


# ---------------------------------------------------------------------------
# spanning trees


def spanning_tree_count(sig: int, k: int) -> int:
    """Exact spanning-tree count by fraction-free determinant of a
    Laplacian minor."""
    masks = unpack_masks(sig, k)
    n = k - 1
    if n == 0:
        return 1
    M = [[0] * n for _ in range(n)]
    for i in range(1, k):
        M[i - 1][i - 1] = bin(masks[i]).count("1")
        for j in range(i + 1, k):
            if (masks[i] >> j) & 1:
                M[i - 1][j - 1] = -1
                M[j - 1][i - 1] = -1
    sign = 1
    prev = 1
    for r in range(n - 1):
        if M[r][r] == 0:
            for rr in range(r + 1, n):
                if M[rr][r] != 0:
                    M[r], M[rr] = M[rr], M[r]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(r + 1, n):
            for j in range(r + 1, n):
                M[i][j] = (M[i][j] * M[r][r] - M[i][r] * M[r][j]) // prev
        prev = M[r][r]
    return sign * M[n - 1][n - 1]


def spanning_profile(sig: int, k: int, mode: str = "canonical") -> dict:
    """Spanning trees of a connected graphlet, split by tree shape.

    Runs the count-table rounds on a rainbow-colored copy of the
    graphlet, where every copy is colorful, so per-shape totals are
    exact spanning-tree counts.  mode picks the final-round regime;
    both give the same profile and tests hold them to that.
    """
    if mode not in ("canonical", "balanced"):
        raise ValueError("mode must be 'canonical' or 'balanced'")
    return dict(_profile_items(sig, k, mode))


@functools.lru_cache(maxsize=None)
def _profile_items(sig: int, k: int, mode: str) -> tuple:
    if not is_connected(sig, k):
        raise ValueError("graphlet must be connected")
    masks = unpack_masks(sig, k)
    edges = []
    for i in range(k):
        for j in range(i + 1, k):
            if (masks[i] >> j) & 1:
                edges.append((i, j))
    if k == 1:
        return (((1, 0), 1),)
    g = from_edges(edges)
    colors = np.arange(k, dtype=np.int8)
    gc = g.with_colors(k, colors)
    if mode == "canonical":
        tab = build_tables(gc, zero_root=True)
        profile = {sk: v for sk, v in tab.skeleton_totals.items() if v}
    else:
        tab = build_tables(gc, skip_round=True, zero_root=False)
        profile = {sk: v for sk, v in tab.skeleton_totals.items() if v}
        if tab.star_total:
            profile[star_skeleton(k)] = tab.star_total
    return tuple(sorted(profile.items()))
