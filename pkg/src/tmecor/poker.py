"""Multi-player Kuhn and Leduc poker generators.

Action labels follow the usual compact notation: ``c`` is check or call,
``r`` is bet, ``f`` is fold.  An information set key is the holder's private
rank, a colon, and the public action history, e.g. ``"J:/cccr:"``; the
sequence obtained by playing ``c`` there is ``"J:/cccr:c"``.  Leduc keys also
carry the community rank after the flop (``"JQ:/crc/c:"``).

Card deals are ordered assignments of distinct cards, dealt by one uniform
chance node at the root.  Leduc decks hold three suits per rank; nodes keep
suits apart while information sets only see ranks.
"""

from __future__ import annotations

from itertools import permutations
from math import perm

from .exceptions import InvalidParams
from .game import GameTree, TreeBuilder

_RANK_LABELS = "23456789TJQK"


def rank_labels(ranks: int) -> list[str]:
    if ranks <= len(_RANK_LABELS):
        return list(_RANK_LABELS[-ranks:])
    return [f"R{k}" for k in range(ranks)]


class _Round:
    """State of one betting round with at most a single bet."""

    __slots__ = ("to_act", "bettor")

    def __init__(self, to_act, bettor=None):
        self.to_act = to_act
        self.bettor = bettor


class _PokerBuilder:
    def __init__(self, n_players: int, ante: float, bets: list[float], name: str, meta: dict):
        self.n = n_players
        self.adv = n_players - 1
        self.ante = ante
        self.bets = bets
        self.b = TreeBuilder(n_players, name=name, meta=meta)

    # infoset key for `player` given the deal and the public state
    def key(self, player, deal, histories) -> str:
        raise NotImplementedError

    def showdown_payoff(self, deal, active, contrib) -> float:
        raise NotImplementedError

    def after_round(self, nid_parent, seqs, reach, deal, histories, active, contrib):
        """Called when a betting round closes with two or more players left."""
        raise NotImplementedError

    def fold_payoff(self, winner, contrib) -> float:
        pot = sum(contrib)
        adv_net = (pot if winner == self.adv else 0.0) - contrib[self.adv]
        return -adv_net

    def play_round(self, parent, seqs, reach, edge_prob, deal, histories, active, contrib, rnd):
        """Expand the betting round rooted at a new child of ``parent``."""
        b = self.b
        nid = b.add_node(parent, seqs, reach, edge_prob)
        if not rnd.to_act:
            live = [p for p in range(self.n) if active[p]]
            if len(live) == 1:
                b.set_terminal(nid, self.fold_payoff(live[0], contrib))
            else:
                self.after_round(nid, seqs, reach, deal, histories, active, contrib)
            return
        p = rnd.to_act[0]
        rest = rnd.to_act[1:]
        bet = self.bets[len(histories) - 1]
        if rnd.bettor is None:
            child_seqs = b.set_decision(nid, p, self.key(p, deal, histories), ("c", "r"))
            # check
            self.play_round(nid, child_seqs[0], reach, 1.0, deal, _append(histories, "c"),
                            active, contrib, _Round(rest))
            # bet: everyone else still in the hand answers, in seat order after p
            contrib2 = list(contrib)
            contrib2[p] += bet
            responders = tuple(q for q in _after(p, self.n) if active[q])
            self.play_round(nid, child_seqs[1], reach, 1.0, deal, _append(histories, "r"),
                            active, contrib2, _Round(responders, p))
        else:
            child_seqs = b.set_decision(nid, p, self.key(p, deal, histories), ("c", "f"))
            contrib2 = list(contrib)
            contrib2[p] += bet
            self.play_round(nid, child_seqs[0], reach, 1.0, deal, _append(histories, "c"),
                            active, contrib2, _Round(rest, rnd.bettor))
            active2 = list(active)
            active2[p] = False
            self.play_round(nid, child_seqs[1], reach, 1.0, deal, _append(histories, "f"),
                            active2, contrib, _Round(rest, rnd.bettor))


def _append(histories: tuple[str, ...], action: str) -> tuple[str, ...]:
    return histories[:-1] + (histories[-1] + action,)


def _after(p: int, n: int):
    return [(p + k) % n for k in range(1, n)]


class _Kuhn(_PokerBuilder):
    def __init__(self, n_players, ranks):
        super().__init__(n_players, 1.0, [1.0], f"{n_players}K{ranks}",
                         {"kind": "kuhn", "n_players": n_players, "ranks": ranks})
        self.labels = rank_labels(ranks)
        self.ranks = ranks

    def key(self, player, deal, histories):
        return f"{self.labels[deal[player]]}:/{histories[0]}:"

    def after_round(self, nid, seqs, reach, deal, histories, active, contrib):
        self.b.set_terminal(nid, self.showdown_payoff(deal, active, contrib))

    def showdown_payoff(self, deal, active, contrib):
        winner = max((p for p in range(self.n) if active[p]), key=lambda p: deal[p])
        return self.fold_payoff(winner, contrib)

    def build(self) -> GameTree:
        b = self.b
        n = self.n
        root = b.add_node(-1, (0,) * n, 1.0)
        b.set_chance(root)
        prob = 1.0 / perm(self.ranks, n)
        start = [self.ante] * n
        for deal in permutations(range(self.ranks), n):
            self.play_round(root, (0,) * n, prob, prob, deal, ("",), [True] * n, start,
                            _Round(tuple(range(n))))
        return b.build()


class _Leduc(_PokerBuilder):
    """Deal ``deal`` holds card indices; card ``k`` has rank ``k // 3``."""

    SUITS = 3

    def __init__(self, n_players, ranks):
        super().__init__(n_players, 1.0, [2.0, 4.0], f"{n_players}L{ranks}",
                         {"kind": "leduc", "n_players": n_players, "ranks": ranks})
        self.labels = rank_labels(ranks)
        self.ranks = ranks
        self.n_cards = self.SUITS * ranks

    def rank(self, card):
        return card // self.SUITS

    def key(self, player, deal, histories):
        own = self.labels[self.rank(deal[player])]
        if len(histories) == 1:
            return f"{own}:/{histories[0]}:"
        board = self.labels[self.rank(deal[self.n])]
        return f"{own}{board}:/{histories[0]}/{histories[1]}:"

    def after_round(self, nid, seqs, reach, deal, histories, active, contrib):
        b = self.b
        if len(histories) == 2:
            b.set_terminal(nid, self.showdown_payoff(deal, active, contrib))
            return
        b.set_chance(nid)
        left = [c for c in range(self.n_cards) if c not in deal]
        p = 1.0 / len(left)
        order = tuple(q for q in range(self.n) if active[q])
        for card in left:
            self.play_round(nid, seqs, reach * p, p, deal + (card,), histories + ("",),
                            active, contrib, _Round(order))

    def showdown_payoff(self, deal, active, contrib):
        board = self.rank(deal[self.n])

        def strength(p):
            r = self.rank(deal[p])
            return (r == board, r)

        live = [p for p in range(self.n) if active[p]]
        best = max(strength(p) for p in live)
        winners = [p for p in live if strength(p) == best]
        pot = sum(contrib)
        adv_net = (pot / len(winners) if self.adv in winners else 0.0) - contrib[self.adv]
        return -adv_net

    def build(self) -> GameTree:
        b = self.b
        n = self.n
        root = b.add_node(-1, (0,) * n, 1.0)
        b.set_chance(root)
        prob = 1.0 / perm(self.n_cards, n)
        start = [self.ante] * n
        for deal in permutations(range(self.n_cards), n):
            self.play_round(root, (0,) * n, prob, prob, deal, ("",), [True] * n, start,
                            _Round(tuple(range(n))))
        return b.build()


def build_kuhn(n_players: int, ranks: int) -> GameTree:
    """``n``-player Kuhn poker with ``ranks`` cards (``nKr``)."""
    if n_players < 3:
        raise InvalidParams(f"need at least 3 players, got {n_players}")
    if ranks < n_players:
        raise InvalidParams(f"{ranks} ranks cannot deal distinct cards to {n_players} players")
    return _Kuhn(n_players, ranks).build()


def build_leduc(n_players: int, ranks: int) -> GameTree:
    """``n``-player Leduc hold'em with ``ranks`` ranks of three suits (``nLr``)."""
    if n_players < 3:
        raise InvalidParams(f"need at least 3 players, got {n_players}")
    if ranks < 1 or 3 * ranks < n_players + 1:
        raise InvalidParams(f"a deck of {3 * ranks} cards cannot serve {n_players} players plus a board card")
    return _Leduc(n_players, ranks).build()
