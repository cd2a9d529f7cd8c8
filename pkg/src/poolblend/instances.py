"""Hand-written networks used in tests and demos."""

from __future__ import annotations

from .network import Network, NodeLayer

__all__ = ["haverly", "adhya4_fragment"]


def haverly() -> Network:
    """The classic single-pool blending instance (global optimum -400).

    Two feeds with qualities 3 and 1 share a pool; a third input bypasses
    straight to both products.  The premium product pays 15 but tolerates
    quality at most 1.5, the other pays 9 with a 2.5 limit.
    """
    net = Network("h1")
    net.add_node(NodeLayer.INPUT, "i1", cost=6.0, attr={"quality": {"sulfur": 3.0}})
    net.add_node(NodeLayer.INPUT, "i2", cost=16.0, attr={"quality": {"sulfur": 1.0}})
    net.add_node(NodeLayer.INPUT, "i3", cost=10.0, attr={"quality": {"sulfur": 2.0}})
    net.add_node(NodeLayer.POOL, "l1")
    net.add_node(
        NodeLayer.OUTPUT, "j1", capacity_upper=100.0, cost=9.0,
        attr={"quality_upper": {"sulfur": 2.5}},
    )
    net.add_node(
        NodeLayer.OUTPUT, "j2", capacity_upper=200.0, cost=15.0,
        attr={"quality_upper": {"sulfur": 1.5}},
    )
    net.add_edge("i1", "l1")
    net.add_edge("i2", "l1")
    net.add_edge("l1", "j1")
    net.add_edge("l1", "j2")
    net.add_edge("i3", "j1")
    net.add_edge("i3", "j2")
    return net.freeze()


def adhya4_fragment() -> Network:
    """Three-node slice of a literature instance: one feed, one pool, one
    product, and only the feed->pool edge."""
    net = Network("adhya4_fragment")
    net.add_node(
        NodeLayer.INPUT, "c1", capacity_lower=0.0, capacity_upper=85.0, cost=15.0,
        attr={"quality": {"q1": 0.5, "q2": 1.9, "q3": 1.3, "q4": 1.0}},
    )
    net.add_node(NodeLayer.POOL, "o1", capacity_lower=0.0, capacity_upper=85.0, cost=0.0)
    net.add_node(
        NodeLayer.OUTPUT, "p1", capacity_lower=0.0, capacity_upper=15.0, cost=10.0,
        attr={"quality_upper": {"q1": 1.2, "q2": 1.7, "q3": 1.4, "q4": 1.7}},
    )
    net.add_edge("c1", "o1", capacity_upper=85.0, cost=0.0)
    return net.freeze()
