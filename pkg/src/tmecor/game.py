"""Extensive-form game representation for zero-sum team games.

Players are indexed ``0..n-1``; players ``0..n-2`` form the team and the last
player is the adversary.  Only the team payoff is stored; the adversary
receives its negation.

A :class:`GameTree` is immutable once built.  Nodes live in flat numpy arrays
(preorder ids), which keeps trees with a few hundred thousand leaves cheap to
build and to scan.  Hand-made games are described with the small nested
:class:`Decision` / :class:`Chance` / :class:`Terminal` records and turned into
a tree by :func:`build_game`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .exceptions import InvalidParams

DECISION, CHANCE, TERMINAL = 0, 1, 2
_KIND_NAMES = {DECISION: "decision", CHANCE: "chance", TERMINAL: "terminal"}

EMPTY_SEQUENCE_LABEL = "∅"
CHANCE_TOL = 1e-12


@dataclass(frozen=True)
class InfoSet:
    """Information set of one player.

    Child sequences of the infoset are the contiguous block
    ``first_sequence .. first_sequence + len(actions) - 1`` of the owner's
    sequence list.
    """

    index: int
    owner: int
    key: str
    actions: tuple[str, ...]
    parent_sequence: int
    first_sequence: int
    members: tuple[int, ...]

    @property
    def sequences(self) -> range:
        return range(self.first_sequence, self.first_sequence + len(self.actions))


@dataclass(frozen=True)
class Node:
    """Read-only view of one node, materialized on demand by :meth:`GameTree.node`."""

    id: int
    kind: str
    player: int | None
    infoset: int | None
    children: tuple[int, ...]
    actions: tuple[str, ...]
    probs: tuple[float, ...]
    team_payoff: float | None
    chance_reach: float


# -- nested descriptions for hand-built games ---------------------------------


@dataclass
class Terminal:
    """Leaf.  Give either the team payoff or a full per-player payoff vector."""

    payoff: float | None = None
    payoffs: Sequence[float] | None = None


@dataclass
class Chance:
    outcomes: Sequence[tuple[float, "GameNode"]]


@dataclass
class Decision:
    player: int
    infoset: str
    children: Sequence[tuple[str, "GameNode"]]


GameNode = Union[Decision, Chance, Terminal]


@dataclass
class _InfosetDraft:
    index: int
    owner: int
    key: str
    actions: tuple[str, ...]
    parent_sequence: int
    first_sequence: int
    members: list[int] = field(default_factory=list)


class TreeBuilder:
    """Incremental preorder builder used by the generators and by :func:`build_game`.

    Call :meth:`add_node` for a node (after its parent), then exactly one of
    :meth:`set_decision`, :meth:`set_chance`, :meth:`set_terminal`.
    """

    def __init__(self, n_players: int, name: str = "game", meta: dict | None = None):
        if n_players < 3:
            raise InvalidParams(f"team games need at least 3 players, got {n_players}")
        self.n_players = n_players
        self.name = name
        self.meta = dict(meta or {})
        self.parent: list[int] = []
        self.kind: list[int] = []
        self.player: list[int] = []
        self.infoset: list[int] = []
        self.edge_prob: list[float] = []
        self.node_seqs: list[tuple[int, ...]] = []
        self.node_chance: list[float] = []
        self.payoff: list[float] = []
        self.issues: list[tuple[str, str]] = []
        self._drafts: list[dict[str, _InfosetDraft]] = [{} for _ in range(n_players)]
        self._draft_list: list[list[_InfosetDraft]] = [[] for _ in range(n_players)]
        self._seq_labels: list[list[str]] = [[EMPTY_SEQUENCE_LABEL] for _ in range(n_players)]
        self._seq_infoset: list[list[int]] = [[-1] for _ in range(n_players)]
        self._seq_parent: list[list[int]] = [[-1] for _ in range(n_players)]

    def add_node(self, parent: int, seqs: tuple[int, ...], chance_reach: float,
                 edge_prob: float = 1.0) -> int:
        nid = len(self.kind)
        self.parent.append(parent)
        self.kind.append(-1)
        self.player.append(-1)
        self.infoset.append(-1)
        self.edge_prob.append(edge_prob)
        self.node_seqs.append(seqs)
        self.node_chance.append(chance_reach)
        self.payoff.append(math.nan)
        return nid

    def set_decision(self, nid: int, player: int, key: str, actions: Sequence[str]) -> list[tuple[int, ...]]:
        """Mark ``nid`` as a decision node; returns the sequence tuple of each child."""
        if not 0 <= player < self.n_players:
            raise InvalidParams(f"node {nid}: player {player} out of range")
        actions = tuple(actions)
        seqs = self.node_seqs[nid]
        drafts = self._drafts[player]
        draft = drafts.get(key)
        if draft is None:
            draft = _InfosetDraft(
                index=len(self._draft_list[player]),
                owner=player,
                key=key,
                actions=actions,
                parent_sequence=seqs[player],
                first_sequence=len(self._seq_labels[player]),
            )
            drafts[key] = draft
            self._draft_list[player].append(draft)
            for a in actions:
                self._seq_labels[player].append(key + a)
                self._seq_infoset[player].append(draft.index)
                self._seq_parent[player].append(seqs[player])
        elif draft.actions != actions:
            self.issues.append((
                "ActionSetMismatch",
                f"infoset {key!r} of player {player}: node {nid} has actions {actions}, "
                f"infoset has {draft.actions}",
            ))
        draft.members.append(nid)
        self.kind[nid] = DECISION
        self.player[nid] = player
        self.infoset[nid] = draft.index
        children = []
        for a in actions:
            child = list(seqs)
            if a in draft.actions:
                child[player] = draft.first_sequence + draft.actions.index(a)
            children.append(tuple(child))
        return children

    def set_chance(self, nid: int) -> None:
        self.kind[nid] = CHANCE

    def set_terminal(self, nid: int, team_payoff: float) -> None:
        self.kind[nid] = TERMINAL
        self.payoff[nid] = float(team_payoff)

    def build(self) -> "GameTree":
        if any(k < 0 for k in self.kind):
            raise InvalidParams("builder finished with untyped nodes")
        parent = np.asarray(self.parent, dtype=np.int64)
        n_nodes = len(parent)
        # preorder ids: stable sort by parent keeps sibling order
        has_parent = parent >= 0
        child_idx = np.flatnonzero(has_parent)
        order = np.argsort(parent[child_idx], kind="stable")
        child_idx = child_idx[order].astype(np.int64)
        counts = np.bincount(parent[has_parent], minlength=n_nodes)
        child_ptr = np.zeros(n_nodes + 1, dtype=np.int64)
        np.cumsum(counts, out=child_ptr[1:])

        infosets = []
        for p in range(self.n_players):
            infosets.append(tuple(
                InfoSet(d.index, d.owner, d.key, d.actions, d.parent_sequence,
                        d.first_sequence, tuple(d.members))
                for d in self._draft_list[p]
            ))
        return GameTree(
            n_players=self.n_players,
            name=self.name,
            meta=self.meta,
            kind=np.asarray(self.kind, dtype=np.int8),
            player=np.asarray(self.player, dtype=np.int16),
            node_infoset=np.asarray(self.infoset, dtype=np.int32),
            parent=parent,
            child_ptr=child_ptr,
            child_idx=child_idx,
            edge_prob=np.asarray(self.edge_prob, dtype=np.float64),
            node_seqs=np.asarray(self.node_seqs, dtype=np.int32).reshape(n_nodes, self.n_players),
            node_chance=np.asarray(self.node_chance, dtype=np.float64),
            payoff=np.asarray(self.payoff, dtype=np.float64),
            infosets=tuple(infosets),
            seq_labels=tuple(tuple(x) for x in self._seq_labels),
            seq_infoset=tuple(np.asarray(x, dtype=np.int32) for x in self._seq_infoset),
            seq_parent=tuple(np.asarray(x, dtype=np.int32) for x in self._seq_parent),
            issues=tuple(self.issues),
        )


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class GameTree:
    """Immutable zero-sum extensive-form game with a team and one adversary.

    Attributes of interest to the solvers:

    ``leaf_nodes``, ``leaf_payoff``, ``leaf_chance``
        Terminal node ids, team payoff ``u_T(l)`` and chance reach ``c(l)``.
    ``leaf_seqs``
        ``(|L|, n)`` array; entry ``[l, i]`` is ``seq_i(l)``.
    ``infosets[p]``
        Tuple of :class:`InfoSet` for player ``p`` in discovery order.
    ``seq_infoset[p]`` / ``seq_parent[p]``
        For each sequence of ``p``: the infoset it extends and that infoset's
        parent sequence (``-1`` for the empty sequence, index 0).
    """

    def __init__(self, *, n_players, name, meta, kind, player, node_infoset, parent,
                 child_ptr, child_idx, edge_prob, node_seqs, node_chance, payoff,
                 infosets, seq_labels, seq_infoset, seq_parent, issues=()):
        self.n_players = int(n_players)
        self.name = name
        self.meta = dict(meta)
        self.kind = _readonly(kind)
        self.player = _readonly(player)
        self.node_infoset = _readonly(node_infoset)
        self.parent = _readonly(parent)
        self.child_ptr = _readonly(child_ptr)
        self.child_idx = _readonly(child_idx)
        self.edge_prob = _readonly(edge_prob)
        self.node_seqs = _readonly(node_seqs)
        self.node_chance = _readonly(node_chance)
        self.payoff = _readonly(payoff)
        self.infosets = infosets
        self.seq_labels = seq_labels
        self.seq_infoset = tuple(_readonly(a) for a in seq_infoset)
        self.seq_parent = tuple(_readonly(a) for a in seq_parent)
        self.issues = tuple(issues)

        leaves = np.flatnonzero(kind == TERMINAL)
        self.leaf_nodes = _readonly(leaves)
        self.leaf_payoff = _readonly(payoff[leaves].copy())
        self.leaf_chance = _readonly(node_chance[leaves].copy())
        self.leaf_seqs = _readonly(node_seqs[leaves].copy())
        self._cache: dict = {}

    # -- sizes -----------------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.kind)

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_nodes)

    @property
    def team(self) -> range:
        return range(self.n_players - 1)

    @property
    def adversary(self) -> int:
        return self.n_players - 1

    def n_sequences(self, player: int) -> int:
        return len(self.seq_labels[player])

    def n_infosets(self, player: int) -> int:
        return len(self.infosets[player])

    @property
    def root(self) -> int:
        return 0

    @property
    def utility_range(self) -> float:
        """``max_l u_T(l) - min_l u_T(l)``."""
        return float(self.leaf_payoff.max() - self.leaf_payoff.min())

    # -- navigation ------------------------------------------------------------

    def children(self, nid: int) -> np.ndarray:
        return self.child_idx[self.child_ptr[nid]:self.child_ptr[nid + 1]]

    def node(self, nid: int) -> Node:
        kind = int(self.kind[nid])
        children = tuple(int(c) for c in self.children(nid))
        player = infoset = None
        actions: tuple[str, ...] = ()
        probs: tuple[float, ...] = ()
        payoff = None
        if kind == DECISION:
            player = int(self.player[nid])
            infoset = int(self.node_infoset[nid])
            actions = self.infosets[player][infoset].actions
        elif kind == CHANCE:
            probs = tuple(float(self.edge_prob[c]) for c in children)
        else:
            payoff = float(self.payoff[nid])
        return Node(nid, _KIND_NAMES[kind], player, infoset, children, actions, probs,
                    payoff, float(self.node_chance[nid]))

    @property
    def leaf_index(self) -> list[tuple[int, tuple[int, ...]]]:
        """``(terminal node id, per-player sequence tuple)`` for every leaf."""
        return [(int(n), tuple(int(s) for s in row))
                for n, row in zip(self.leaf_nodes, self.leaf_seqs)]

    def sequence_label(self, player: int, seq: int) -> str:
        return self.seq_labels[player][seq]

    def infoset_by_key(self, player: int, key: str) -> InfoSet:
        index = self._cache.get(("infoset_keys", player))
        if index is None:
            index = {I.key: I for I in self.infosets[player]}
            self._cache[("infoset_keys", player)] = index
        return index[key]

    def __repr__(self) -> str:
        seqs = [self.n_sequences(p) for p in range(self.n_players)]
        return f"GameTree({self.name!r}, players={self.n_players}, leaves={self.n_leaves}, sequences={seqs})"


# -- hand-built games ----------------------------------------------------------


def build_game(root: GameNode, n_players: int, name: str = "custom", meta: dict | None = None) -> GameTree:
    """Build a :class:`GameTree` from a nested :class:`Decision`/:class:`Chance`/:class:`Terminal` description.

    Structural problems (chance probabilities not summing to one, imperfect
    recall, inconsistent action sets) do not raise here; they are reported by
    :func:`validate_game`.
    """
    b = TreeBuilder(n_players, name=name, meta=meta or {"kind": "custom"})
    adversary = n_players - 1
    stack = [(root, -1, (0,) * n_players, 1.0, 1.0)]
    while stack:
        desc, parent, seqs, reach, prob = stack.pop()
        nid = b.add_node(parent, seqs, reach, prob)
        if isinstance(desc, Terminal):
            if desc.payoffs is not None:
                payoffs = [float(x) for x in desc.payoffs]
                if len(payoffs) != n_players:
                    raise InvalidParams(f"node {nid}: expected {n_players} payoffs, got {len(payoffs)}")
                if abs(sum(payoffs)) > 1e-9:
                    b.issues.append(("ZeroSumViolation",
                                     f"node {nid}: payoffs {payoffs} do not sum to zero"))
                b.set_terminal(nid, -payoffs[adversary])
            elif desc.payoff is not None:
                b.set_terminal(nid, desc.payoff)
            else:
                raise InvalidParams(f"node {nid}: terminal without payoff")
            continue
        if isinstance(desc, Chance):
            b.set_chance(nid)
            pending = [(child, nid, seqs, reach * p, p) for p, child in desc.outcomes]
        elif isinstance(desc, Decision):
            labels = [a for a, _ in desc.children]
            child_seqs = b.set_decision(nid, desc.player, desc.infoset, labels)
            pending = [(child, nid, s, reach, 1.0)
                       for (_, child), s in zip(desc.children, child_seqs)]
        else:
            raise InvalidParams(f"unknown node description {desc!r}")
        # reversed so children pop (and get ids) in declaration order
        stack.extend(reversed(pending))
    return b.build()


# -- validation ----------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"


class ValidationReport(list):
    """List of :class:`Violation`; empty iff the game is valid."""

    def kinds(self) -> set[str]:
        return {v.kind for v in self}

    @property
    def ok(self) -> bool:
        return not self


def _recompute_sequences(g: GameTree) -> np.ndarray:
    """Per-node sequence tuples recomputed by walking root-to-node paths."""
    out = np.zeros((g.n_nodes, g.n_players), dtype=np.int32)
    stack = [0]
    while stack:
        nid = stack.pop()
        kids = g.children(nid)
        if g.kind[nid] == DECISION:
            p = int(g.player[nid])
            I = g.infosets[p][g.node_infoset[nid]]
            for j, c in enumerate(kids):
                out[c] = out[nid]
                if j < len(I.actions):
                    out[c, p] = I.first_sequence + j
        else:
            for c in kids:
                out[c] = out[nid]
        stack.extend(int(c) for c in kids)
    return out


def validate_game(g: GameTree) -> ValidationReport:
    """Check structural assumptions; violations are returned, never raised."""
    report = ValidationReport()
    for kind, msg in g.issues:
        report.append(Violation(kind, msg))

    if g.n_players < 3:
        report.append(Violation("PlayerCountViolation", f"{g.n_players} players"))

    for p in range(g.n_players):
        for I in g.infosets[p]:
            owners = g.player[list(I.members)]
            if np.any(owners != p):
                report.append(Violation("OwnerMismatch", f"infoset {I.key!r} has members owned by other players"))
            own = g.node_seqs[list(I.members), p]
            if np.any(own != I.parent_sequence):
                report.append(Violation(
                    "PerfectRecallViolation",
                    f"player {p} infoset {I.key!r}: members reached by different own sequences "
                    f"{sorted(set(int(s) for s in own))}",
                ))
            for m in I.members:
                if len(g.children(m)) != len(I.actions):
                    report.append(Violation("ActionSetMismatch",
                                            f"infoset {I.key!r}: node {m} has wrong child count"))
        labels = g.seq_labels[p]
        if len(set(labels)) != len(labels):
            seen, dup = set(), set()
            for s in labels:
                (dup if s in seen else seen).add(s)
            report.append(Violation("ActionUniquenessViolation",
                                    f"player {p}: actions shared between infosets: {sorted(dup)}"))

    chance_nodes = np.flatnonzero(g.kind == CHANCE)
    for nid in chance_nodes:
        probs = g.edge_prob[g.children(nid)]
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > CHANCE_TOL:
            report.append(Violation("ChanceNormalizationViolation",
                                    f"chance node {nid}: probabilities sum to {probs.sum()!r}"))

    if not np.all(np.isfinite(g.leaf_payoff)):
        report.append(Violation("ZeroSumViolation", "non-finite team payoff"))

    # path products and path sequences, recomputed independently of the builder
    reach = np.ones(g.n_nodes)
    order = np.arange(1, g.n_nodes)
    reach[order] = g.edge_prob[order]
    for nid in order:
        reach[nid] *= reach[g.parent[nid]]
    bad = np.flatnonzero(np.abs(reach[g.leaf_nodes] - g.leaf_chance) > 1e-12)
    if len(bad):
        report.append(Violation("ChanceReachViolation",
                                f"{len(bad)} leaves with c(l) inconsistent with the path product"))
    seqs = _recompute_sequences(g)
    bad = np.flatnonzero(np.any(seqs[g.leaf_nodes] != g.leaf_seqs, axis=1))
    if len(bad):
        report.append(Violation("LeafIndexViolation",
                                f"{len(bad)} leaves whose recorded sequences differ from the path"))
    return report


# -- efg-v1 JSON ---------------------------------------------------------------

EFG_SCHEMA = "efg-v1"


def game_to_dict(g: GameTree) -> dict:
    """Serialize to the ``efg-v1`` document (flat node array with child indices)."""
    nodes = []
    for nid in range(g.n_nodes):
        kids = [int(c) for c in g.children(nid)]
        k = int(g.kind[nid])
        if k == DECISION:
            p = int(g.player[nid])
            nodes.append({"kind": "decision", "player": p,
                          "infoset": g.infosets[p][g.node_infoset[nid]].key, "children": kids})
        elif k == CHANCE:
            nodes.append({"kind": "chance", "children": kids,
                          "probs": [float(g.edge_prob[c]) for c in kids]})
        else:
            nodes.append({"kind": "terminal", "payoff": float(g.payoff[nid])})
    infosets = [
        {"player": p, "key": I.key, "actions": list(I.actions),
         "parent_sequence": I.parent_sequence, "members": list(I.members)}
        for p in range(g.n_players) for I in g.infosets[p]
    ]
    leaf_index = [
        {"node": int(n), "chance_reach": float(c), "sequences": [int(s) for s in row]}
        for n, c, row in zip(g.leaf_nodes, g.leaf_chance, g.leaf_seqs)
    ]
    return {"schema": EFG_SCHEMA, "name": g.name, "meta": g.meta, "n_players": g.n_players,
            "nodes": nodes, "infosets": infosets, "leaf_index": leaf_index}


def game_from_dict(doc: dict) -> GameTree:
    if doc.get("schema") != EFG_SCHEMA:
        raise InvalidParams(f"expected schema {EFG_SCHEMA!r}, got {doc.get('schema')!r}")
    n = int(doc["n_players"])
    nodes = doc["nodes"]
    actions = {(d["player"], d["key"]): d["actions"] for d in doc.get("infosets", [])}
    b = TreeBuilder(n, name=doc.get("name", "game"), meta=doc.get("meta", {}))
    # node ids in the file need not be preorder; rebuild by walking from node 0
    stack = [(0, -1, (0,) * n, 1.0, 1.0)]
    while stack:
        src, parent, seqs, reach, prob = stack.pop()
        d = nodes[src]
        nid = b.add_node(parent, seqs, reach, prob)
        kind = d["kind"]
        if kind == "terminal":
            b.set_terminal(nid, d["payoff"])
            continue
        kids = d["children"]
        if kind == "chance":
            b.set_chance(nid)
            pending = [(c, nid, seqs, reach * p, p) for c, p in zip(kids, d["probs"])]
        elif kind == "decision":
            p = int(d["player"])
            labels = actions.get((p, d["infoset"]), [str(j) for j in range(len(kids))])
            child_seqs = b.set_decision(nid, p, d["infoset"], labels)
            pending = [(c, nid, s, reach, 1.0) for c, s in zip(kids, child_seqs)]
        else:
            raise InvalidParams(f"node {src}: unknown kind {kind!r}")
        stack.extend(reversed(pending))
    g = b.build()
    recorded = doc.get("leaf_index")
    if recorded is not None and len(recorded) == g.n_leaves:
        chance = np.array([e["chance_reach"] for e in recorded])
        if np.any(np.abs(chance - g.leaf_chance) > 1e-12):
            g.issues = g.issues + (("ChanceReachViolation", "leaf_index chance_reach differs from the tree"),)
    return g
