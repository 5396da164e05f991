"""Exhaustive reference counts for small graphs.

Everything here is deliberately independent of the count-table rounds:
subsets come from neighborhood-extension enumeration, spanning trees
from edge-subset filtering, and rooted shapes from direct encoding.
The only shared vocabulary is the treelet encoding and the graphlet
signature, which is what the comparisons are about.  Intended for
fixtures up to a few tens of nodes; results are exact.
"""

import itertools

from .graph import ColoredGraph
from .graphlets import canonical_form, pack_from_masks
from .treelets import encode_rooted

_COPY_CACHE: dict = {}


def connected_subsets(g: ColoredGraph, h: int) -> list[tuple[int, ...]]:
    """All h-node connected induced subgraphs, each node set once.

    Grows a subset from its minimum node v, extending only with nodes
    greater than v that are new neighbors of the current subset, which
    yields every set exactly once.
    """
    if h < 1:
        raise ValueError("h must be positive")
    out: list[tuple[int, ...]] = []
    nbr = [set(int(u) for u in g.neighbors(v)) for v in range(g.n)]

    def extend(sub: list[int], ext: set[int], v: int):
        if len(sub) == h:
            out.append(tuple(sorted(sub)))
            return
        ext = set(ext)
        while ext:
            w = ext.pop()
            new_ext = ext | {
                u for u in nbr[w] if u > v and u not in sub and not any(u in nbr[s] for s in sub)
            }
            sub.append(w)
            extend(sub, new_ext, v)
            sub.pop()

    for v in range(g.n):
        if h == 1:
            out.append((v,))
            continue
        extend([v], {u for u in nbr[v] if u > v}, v)
    return out


def induced_masks(g: ColoredGraph, subset) -> list[int]:
    """Adjacency of the induced subgraph as local bitmasks."""
    pos = {u: i for i, u in enumerate(subset)}
    masks = [0] * len(subset)
    for i, u in enumerate(subset):
        for w in g.neighbors(u):
            j = pos.get(int(w))
            if j is not None:
                masks[i] |= 1 << j
    return masks


def spanning_trees(masks: list[int]) -> list[tuple[tuple[int, int], ...]]:
    """Every spanning tree of the local graph, as sorted edge tuples."""
    h = len(masks)
    edges = [
        (i, j) for i in range(h) for j in range(i + 1, h) if (masks[i] >> j) & 1
    ]
    if h == 1:
        return [()]
    out = []
    for combo in itertools.combinations(edges, h - 1):
        parent = list(range(h))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        ok = True
        for a, b in combo:
            ra, rb = find(a), find(b)
            if ra == rb:
                ok = False
                break
            parent[ra] = rb
        if ok:
            out.append(combo)
    return out


def tree_copies(g: ColoredGraph, h: int):
    """All (node subset, spanning tree) pairs on h nodes, cached per graph."""
    key = (g.content_hash(), h)
    got = _COPY_CACHE.get(key)
    if got is not None:
        return got
    copies = []
    for subset in connected_subsets(g, h):
        masks = induced_masks(g, subset)
        for tree in spanning_trees(masks):
            copies.append((subset, tree))
    _COPY_CACHE[key] = copies
    return copies


def _local_adj(h: int, tree) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(h)]
    for a, b in tree:
        adj[a].append(b)
        adj[b].append(a)
    return adj


def rooted_counts(
    g: ColoredGraph, h: int, *, zero_root: bool = False, shapes=None
) -> dict[tuple[int, tuple[int, int, int]], int]:
    """Per (root node, colored treelet key): distinct-colored tree copies
    rooted there.  shapes, when given, keeps only those rooted shapes;
    zero_root keeps only color-0 roots."""
    colors = g.colors
    out: dict[tuple[int, tuple[int, int, int]], int] = {}
    for subset, tree in tree_copies(g, h):
        mask = 0
        for u in subset:
            mask |= 1 << int(colors[u])
        if bin(mask).count("1") != h:
            continue
        adj = _local_adj(h, tree)
        for i, root in enumerate(subset):
            if zero_root and colors[root] != 0:
                continue
            enc = encode_rooted(adj, i)
            if shapes is not None and enc not in shapes:
                continue
            key = (int(root), (enc[0], enc[1], mask))
            out[key] = out.get(key, 0) + 1
    return out


def copy_totals(g: ColoredGraph, k: int) -> dict[tuple[int, int], int]:
    """Distinct-colored k-node tree copies, once per copy, by skeleton."""
    colors = g.colors
    out: dict[tuple[int, int], int] = {}
    for subset, tree in tree_copies(g, k):
        mask = 0
        for u in subset:
            mask |= 1 << int(colors[u])
        if bin(mask).count("1") != k:
            continue
        adj = _local_adj(k, tree)
        skel = min(encode_rooted(adj, r) for r in range(k))
        out[skel] = out.get(skel, 0) + 1
    return out


def induced_counts(g: ColoredGraph, k: int) -> dict[int, int]:
    """Connected induced k-subgraphs per canonical class, uncolored."""
    out: dict[int, int] = {}
    for subset in connected_subsets(g, k):
        sig = canonical_form(pack_from_masks(induced_masks(g, subset)), k)
        out[sig] = out.get(sig, 0) + 1
    return out


def colorful_induced_counts(g: ColoredGraph, k: int) -> dict[int, int]:
    """Same split, restricted to subsets whose k colors are all distinct."""
    colors = g.colors
    out: dict[int, int] = {}
    for subset in connected_subsets(g, k):
        mask = 0
        for u in subset:
            mask |= 1 << int(colors[u])
        if bin(mask).count("1") != k:
            continue
        sig = canonical_form(pack_from_masks(induced_masks(g, subset)), k)
        out[sig] = out.get(sig, 0) + 1
    return out
