"""Weighted word graph, Louvain clustering, and anchored-community selection.

Words become nodes; an edge joins two words when their cosine similarity
exceeds a threshold, weighted by 1/(1 - cosine). Louvain maximizes weighted
modularity; applied recursively it yields a three-level hierarchy whose
third-level communities (with enough members) are kept, and of those only
the ones containing an anchor token survive.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field

import numpy as np

from semno.embed import EmbeddingModel
from semno.errors import NoAnchoredCommunitiesError
from semno.infuse import is_anchor

COSINE_CAP = 1.0 - 1e-6   # keeps 1/(1-cos) finite for duplicate vectors

_MOVE_EPS = 1e-12
_BLOCK = 1024


@dataclass
class SemanticGraph:
    nodes: list[str]
    adj: list[dict[int, float]]       # neighbor index -> edge weight
    theta: float | None = None

    @classmethod
    def from_edges(
        cls,
        nodes: list[str],
        edges: list[tuple[int, int, float]],
        theta: float | None = None,
    ) -> "SemanticGraph":
        adj: list[dict[int, float]] = [dict() for _ in nodes]
        for a, b, w in edges:
            if a == b:
                raise ValueError("self-loops are not allowed")
            adj[a][b] = w
            adj[b][a] = w
        return cls(nodes=nodes, adj=adj, theta=theta)

    def __len__(self) -> int:
        return len(self.nodes)

    def edges(self):
        for a, nbrs in enumerate(self.adj):
            for b, w in nbrs.items():
                if a < b:
                    yield a, b, w

    @property
    def edge_count(self) -> int:
        return sum(len(nbrs) for nbrs in self.adj) // 2

    @property
    def total_weight(self) -> float:
        return sum(w for _, _, w in self.edges())

    def subgraph(self, node_ids: list[int]) -> "SemanticGraph":
        """Induced subgraph; node order follows `node_ids`."""
        remap = {g: i for i, g in enumerate(node_ids)}
        nodes = [self.nodes[g] for g in node_ids]
        adj: list[dict[int, float]] = [dict() for _ in node_ids]
        for g in node_ids:
            i = remap[g]
            for h, w in self.adj[g].items():
                j = remap.get(h)
                if j is not None:
                    adj[i][j] = w
        return SemanticGraph(nodes=nodes, adj=adj, theta=self.theta)


def edge_weight(cos: float) -> float:
    """1/(1 - cosine), with cosine capped just below 1."""
    return 1.0 / (1.0 - min(cos, COSINE_CAP))


def build_graph(model: EmbeddingModel, theta: float) -> SemanticGraph:
    """All-pairs thresholded similarity graph over the model vocabulary.

    The edge set is exactly {(a, b): cosine(a, b) > theta} (strict), computed
    blockwise so large vocabularies never materialize the full similarity
    matrix at once.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie strictly in (0, 1), got {theta}")
    if len(model.vocab) == 0:
        raise ValueError("embedding model has no vocabulary")
    vectors = model.vectors
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(norms == 0.0):
        bad = [model.vocab.words[i] for i in np.nonzero(norms == 0.0)[0][:5]]
        raise ValueError(f"zero-norm vectors make cosine undefined: {bad}")
    unit = vectors / norms[:, None]
    n = len(model.vocab)
    adj: list[dict[int, float]] = [dict() for _ in range(n)]
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        sims = unit[start:stop] @ unit.T
        rows, cols = np.nonzero(sims > theta)
        for r, b in zip(rows, cols):
            a = start + int(r)
            b = int(b)
            if a < b:
                w = edge_weight(float(sims[r, b]))
                adj[a][b] = w
                adj[b][a] = w
    return SemanticGraph(nodes=list(model.vocab.words), adj=adj, theta=theta)


def modularity(graph: SemanticGraph, partition) -> float:
    """Weighted Newman modularity of a node->community assignment.

    Q = (1/2m) * sum_ab [W_ab - k_a k_b / 2m] delta(c_a, c_b), including the
    diagonal a == b terms. Zero-weight graphs define Q = 0.
    """
    n = len(graph)
    if hasattr(partition, "__getitem__") and not isinstance(partition, dict):
        comms = list(partition)
    else:
        comms = [partition[i] for i in range(n)]
    if len(comms) != n:
        raise ValueError("partition must cover every node")
    m = graph.total_weight
    if m == 0.0:
        return 0.0
    intra: dict[int, float] = {}
    tot: dict[int, float] = {}
    for a, nbrs in enumerate(graph.adj):
        c = comms[a]
        tot[c] = tot.get(c, 0.0) + sum(nbrs.values())
    for a, b, w in graph.edges():
        if comms[a] == comms[b]:
            c = comms[a]
            intra[c] = intra.get(c, 0.0) + w
    q = 0.0
    for c, t in tot.items():
        q += intra.get(c, 0.0) / m - (t / (2.0 * m)) ** 2
    return q


class _LevelGraph:
    """Working graph during Louvain coarsening; allows self-loops."""

    def __init__(self, adj: list[dict[int, float]], loops: list[float]):
        self.adj = adj
        self.loops = loops
        self.n = len(adj)
        self.k = [sum(nbrs.values()) + 2.0 * loops[i] for i, nbrs in enumerate(adj)]
        self.m = sum(sum(nbrs.values()) for nbrs in adj) / 2.0 + sum(loops)

    @classmethod
    def from_graph(cls, graph: SemanticGraph) -> "_LevelGraph":
        adj = [dict(nbrs) for nbrs in graph.adj]
        return cls(adj, [0.0] * len(graph))

    def partition_q(self, comms: list[int]) -> float:
        if self.m == 0.0:
            return 0.0
        intra: dict[int, float] = {}
        tot: dict[int, float] = {}
        for a in range(self.n):
            c = comms[a]
            tot[c] = tot.get(c, 0.0) + self.k[a]
            intra[c] = intra.get(c, 0.0) + self.loops[a]
        for a, nbrs in enumerate(self.adj):
            for b, w in nbrs.items():
                if a < b and comms[a] == comms[b]:
                    intra[comms[a]] = intra.get(comms[a], 0.0) + w
        return sum(
            intra.get(c, 0.0) / self.m - (t / (2.0 * self.m)) ** 2
            for c, t in tot.items()
        )

    def aggregate(self, comms: list[int]) -> tuple["_LevelGraph", list[int]]:
        """Collapse communities into nodes; returns (coarse graph, relabeling)."""
        labels = sorted(set(comms))
        remap = {c: i for i, c in enumerate(labels)}
        dense = [remap[c] for c in comms]
        size = len(labels)
        adj: list[dict[int, float]] = [dict() for _ in range(size)]
        loops = [0.0] * size
        for a in range(self.n):
            loops[dense[a]] += self.loops[a]
        for a, nbrs in enumerate(self.adj):
            ca = dense[a]
            for b, w in nbrs.items():
                if a < b:
                    cb = dense[b]
                    if ca == cb:
                        loops[ca] += w
                    else:
                        adj[ca][cb] = adj[ca].get(cb, 0.0) + w
                        adj[cb][ca] = adj[cb].get(ca, 0.0) + w
        return _LevelGraph(adj, loops), dense


def _local_move(
    work: _LevelGraph, rng: random.Random, init: list[int] | None = None
) -> list[int]:
    """Greedy modularity-improving node moves until a full quiet pass.

    Starts from singletons, or from `init` (dense community labels) when
    refining an existing partition.
    """
    comms = list(init) if init is not None else list(range(work.n))
    tot = [0.0] * work.n
    for node, c in enumerate(comms):
        tot[c] += work.k[node]
    m = work.m
    moved = True
    while moved:
        moved = False
        order = list(range(work.n))
        rng.shuffle(order)
        for node in order:
            home = comms[node]
            weight_to: dict[int, float] = {}
            for nbr, w in work.adj[node].items():
                c = comms[nbr]
                weight_to[c] = weight_to.get(c, 0.0) + w
            tot[home] -= work.k[node]
            comms[node] = -1
            stay_gain = weight_to.get(home, 0.0) - tot[home] * work.k[node] / (2.0 * m)
            best_com, best_gain = home, stay_gain
            for c, w_c in weight_to.items():
                if c == home:
                    continue
                gain = w_c - tot[c] * work.k[node] / (2.0 * m)
                if gain > best_gain + _MOVE_EPS:
                    best_com, best_gain = c, gain
                elif abs(gain - best_gain) <= _MOVE_EPS and c < best_com:
                    best_com = c   # deterministic tie toward lower id
            comms[node] = best_com
            tot[best_com] += work.k[node]
            if best_com != home:
                moved = True
    return comms


@dataclass
class LouvainResult:
    membership: list[int]             # node -> community, dense ids
    q: float
    phase_q: list[float]              # Q after each local-move phase


def _dense_labels(labels: list[int]) -> list[int]:
    remap: dict[int, int] = {}
    out = []
    for c in labels:
        if c not in remap:
            remap[c] = len(remap)
        out.append(remap[c])
    return out


def _multilevel(
    base: _LevelGraph, rng: random.Random, init: list[int] | None = None
) -> tuple[list[int], list[float]]:
    """One full local-move + coarsen cycle, optionally warm-started."""
    membership = list(range(base.n))
    work = base
    phase_q: list[float] = []
    first_init = init
    while True:
        comms = _local_move(work, rng, init=first_init)
        first_init = None
        phase_q.append(work.partition_q(comms))
        coarse, dense = work.aggregate(comms)
        membership = [dense[c] for c in membership]
        if coarse.n == work.n:
            break
        work = coarse
    return membership, phase_q


def louvain(graph: SemanticGraph, seed: int = 0, restarts: int = 5) -> LouvainResult:
    """Louvain heuristic: local moving plus coarsening until Q stops rising.

    After the coarsening loop converges, refinement cycles restart the local
    moves at the finest level from the found partition, which escapes some
    early-aggregation lock-ins. Additional starts (derived sub-seeds, best Q
    kept) begin from random partitions to diversify the search basins.
    Deterministic for a given seed.
    """
    n = len(graph)
    if n == 0:
        raise ValueError("graph has no nodes")
    base = _LevelGraph.from_graph(graph)
    if base.m == 0.0:
        return LouvainResult(membership=list(range(n)), q=0.0, phase_q=[0.0])
    best: LouvainResult | None = None
    for start in range(max(1, restarts)):
        rng = random.Random(_subseed(seed, (start,)))
        init = None
        if start > 0:
            init = _dense_labels([rng.randrange(n) for _ in range(n)])
        membership, phase_q = _multilevel(base, rng, init=init)
        while True:
            refined, extra = _multilevel(base, rng, init=_dense_labels(membership))
            if extra[-1] > phase_q[-1] + _MOVE_EPS:
                membership = refined
                phase_q.extend(extra)
            else:
                break
        if best is None or phase_q[-1] > best.q + _MOVE_EPS:
            best = LouvainResult(
                membership=_dense_labels(membership), q=phase_q[-1], phase_q=phase_q
            )
    return best


def _group(membership: list[int]) -> dict[int, list[int]]:
    groups: dict[int, list[int]] = {}
    for node, c in enumerate(membership):
        groups.setdefault(c, []).append(node)
    return groups


@dataclass(frozen=True)
class Community:
    path: tuple[int, ...]             # 1-based position at each level
    members: frozenset[str]

    @property
    def level(self) -> int:
        return len(self.path)

    @property
    def path_str(self) -> str:
        return "-".join(str(p) for p in self.path)

    @property
    def anchors(self) -> frozenset[str]:
        return frozenset(w for w in self.members if is_anchor(w))


@dataclass
class CommunityHierarchy:
    levels: list[list[Community]]     # levels[0] is depth 1
    q_by_path: dict[tuple[int, ...], float]   # Q of the split attempted there
    seed: int
    max_depth: int
    min_members: int

    def retained(self) -> list[Community]:
        """Deepest-level communities with enough members, in path order."""
        deepest = self.levels[self.max_depth - 1]
        return sorted(
            (c for c in deepest if len(c.members) >= self.min_members),
            key=lambda c: c.path,
        )


def _subseed(seed: int, path: tuple[int, ...]) -> int:
    key = f"{seed}:{'-'.join(map(str, path))}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")


def _ordered_groups(
    graph: SemanticGraph, groups: dict[int, list[int]]
) -> list[list[int]]:
    """Deterministic child order: larger first, ties by smallest member word."""
    return sorted(
        groups.values(), key=lambda ids: (-len(ids), min(graph.nodes[g] for g in ids))
    )


def recursive_cluster(
    graph: SemanticGraph,
    seed: int = 0,
    max_depth: int = 3,
    min_members: int = 3,
    q_gain_floor: float = 1e-4,
) -> CommunityHierarchy:
    """Recursive Louvain: re-cluster each community's induced subgraph.

    A branch stops splitting when re-clustering returns a single community
    or improves Q by less than `q_gain_floor`; the community is then its own
    sole child down to the final level.
    """
    q_by_path: dict[tuple[int, ...], float] = {}
    result = louvain(graph, seed)
    q_by_path[()] = result.q
    ordered = _ordered_groups(graph, _group(result.membership))
    # (path, member node ids, frozen?) per community at the current level
    current = [
        ((i + 1,), ids, False) for i, ids in enumerate(ordered)
    ]
    levels = [_to_communities(graph, current)]
    for _ in range(2, max_depth + 1):
        nxt = []
        for path, ids, frozen in current:
            if frozen or len(ids) == 1:
                nxt.append((path + (1,), ids, True))
                continue
            sub = graph.subgraph(ids)
            res = louvain(sub, _subseed(seed, path))
            q_by_path[path] = res.q
            groups = _group(res.membership)
            if len(groups) <= 1 or res.q < q_gain_floor:
                nxt.append((path + (1,), ids, True))
                continue
            for j, local_ids in enumerate(_ordered_groups(sub, groups)):
                nxt.append((path + (j + 1,), [ids[l] for l in local_ids], False))
        current = nxt
        levels.append(_to_communities(graph, current))
    return CommunityHierarchy(
        levels=levels,
        q_by_path=q_by_path,
        seed=seed,
        max_depth=max_depth,
        min_members=min_members,
    )


def _to_communities(graph: SemanticGraph, entries) -> list[Community]:
    return [
        Community(path=path, members=frozenset(graph.nodes[g] for g in ids))
        for path, ids, _ in entries
    ]


@dataclass
class AnchoredCommunitySet:
    """Ordered anchored communities; index i is coordinate i of the
    community-encoded vector."""

    communities: list[Community]
    total_retained: int               # count of all retained communities (M)

    concept_sets: list[frozenset[str]] = field(init=False)

    def __post_init__(self) -> None:
        self.concept_sets = [
            frozenset(c.members - c.anchors) for c in self.communities
        ]

    def __len__(self) -> int:
        return len(self.communities)


def anchored_from_retained(retained: list[Community]) -> AnchoredCommunitySet:
    """Anchored subset of an already-retained community list, in path order."""
    if not retained:
        raise NoAnchoredCommunitiesError(
            "no communities were retained; check the similarity threshold "
            "and corpus size"
        )
    anchored = sorted((c for c in retained if c.anchors), key=lambda c: c.path)
    if not anchored:
        raise NoAnchoredCommunitiesError(
            f"none of the {len(retained)} retained communities contains an "
            "anchor; filtering would mark everything as noise. Check anchor "
            "infusion and the similarity threshold"
        )
    return AnchoredCommunitySet(communities=anchored, total_retained=len(retained))


def select_anchored(hierarchy: CommunityHierarchy) -> AnchoredCommunitySet:
    """Keep retained communities that contain at least one anchor token."""
    retained = hierarchy.retained()
    if not retained:
        raise NoAnchoredCommunitiesError(
            "no communities were retained at level "
            f"{hierarchy.max_depth} with >= {hierarchy.min_members} members; "
            "check the similarity threshold and corpus size"
        )
    return anchored_from_retained(retained)
