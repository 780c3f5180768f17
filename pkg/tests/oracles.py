"""Independent reference implementations used as test oracles."""

from __future__ import annotations

from locallab.network import Network, canonical_encode, neighborhood


class BruteSafety:
    """Literal reading of the safety definition over explicitly enumerated hosts.

    Every network of the class with at most ``max_host`` nodes is built with all
    port numberings and inputs, and the id-free encoding of every view up to
    ``max_radius`` is indexed by host size.  A view is unsafe iff some indexed
    host of size ``n'`` shows it, fits its identifiers, and has ``t > T(n')``.
    """

    def __init__(self, cls, max_host: int, max_radius: int):
        self.cls = cls
        self.by_size: dict[int, set[bytes]] = {}
        for n in range(1, max_host + 1):
            seen = set()
            for net in cls.networks(n):
                for v in net.nodes():
                    for t in range(max_radius + 1):
                        seen.add(canonical_encode(neighborhood(net, v, t), ignore_ids=True))
            self.by_size[n] = seen

    def is_safe(self, x, T) -> bool:
        key = canonical_encode(x, ignore_ids=True)
        top = max(x.fragment.ids)
        return not any(key in views and top <= n ** self.cls.c and x.radius > T(n)
                       for n, views in self.by_size.items())

    def max_safe_radius(self, net: Network, v: int, T) -> int:
        t = 0
        while self.is_safe(neighborhood(net, v, t + 1), T):
            t += 1
        return t


def perfect_tree_like(g) -> bool:
    """Try every placement of the nodes on levels of a complete binary tree.

    Node ``(i, k)`` sits on level ``i`` at position ``k``; it is joined to
    ``(i, k+1)`` and to its two children ``(i+1, 2k)``, ``(i+1, 2k+1)``, and to
    nothing else.
    """
    import itertools

    n = g.number_of_nodes()
    levels = n.bit_length()
    if n != 2 ** levels - 1:
        return False
    slots = [(i, k) for i in range(levels) for k in range(2 ** i)]
    want = set()
    for i, k in slots:
        if k + 1 < 2 ** i:
            want.add(frozenset({(i, k), (i, k + 1)}))
        if i + 1 < levels:
            want.add(frozenset({(i, k), (i + 1, 2 * k)}))
            want.add(frozenset({(i, k), (i + 1, 2 * k + 1)}))
    nodes = list(g.nodes())
    have = {frozenset(e) for e in g.edges()}
    for perm in itertools.permutations(slots):
        place = dict(zip(nodes, perm))
        if {frozenset({place[u], place[v]}) for u, v in (tuple(e) for e in have)} == want:
            return True
    return False
