"""Small hand-built nets used across tests, demos and documentation.

They model the canonical two-follower situation: account A posts, accounts
B and C follow A.  The broadcast net lets B and C repost concurrently; the
sequential chain forces one order, which is what makes replayed waiting
times differ between the two readings of the same data.  The threshold net
adds repost probabilities with silent skip branches.
"""

from __future__ import annotations

from .petri import PetriNet
from .stochastic import EmpiricalDelay, StochasticPetriNet


def broadcast_net() -> PetriNet:
    """A posts once, then B and C repost concurrently."""
    return PetriNet(
        places=("p1", "p2", "p3"),
        transitions=("A", "B", "C"),
        arcs=(("p1", "A"), ("A", "p2"), ("A", "p3"), ("p2", "B"), ("p3", "C")),
        labels={"A": "A", "B": "B", "C": "C"},
        initial_marking={"p1": 1},
    )


def sequential_net() -> PetriNet:
    """The same three accounts forced into the chain A -> B -> C."""
    return PetriNet(
        places=("p1", "p2", "p3"),
        transitions=("A", "B", "C"),
        arcs=(("p1", "A"), ("A", "p2"), ("p2", "B"), ("B", "p3"), ("p3", "C")),
        labels={"A": "A", "B": "B", "C": "C"},
        initial_marking={"p1": 1},
    )


def threshold_fspn(p_b: float = 0.8, p_c: float = 0.7,
                   delays_b: tuple[float, ...] = (30.0, 60.0, 120.0),
                   delays_c: tuple[float, ...] = (45.0, 90.0, 180.0)) -> StochasticPetriNet:
    """Threshold-style stochastic net: B reposts with probability ``p_b`` and
    C with ``p_c``; silent branches model the skipped reposts."""
    net = PetriNet(
        places=("p1", "p2", "p3"),
        transitions=("A", "B", "skipB", "C", "skipC"),
        arcs=(("p1", "A"), ("A", "p2"), ("A", "p3"),
              ("p2", "B"), ("p2", "skipB"), ("p3", "C"), ("p3", "skipC")),
        labels={"A": "A", "B": "B", "skipB": None, "C": "C", "skipC": None},
        initial_marking={"p1": 1},
    )
    return StochasticPetriNet(
        net,
        arc_probabilities={
            ("p1", "A"): 1.0,
            ("p2", "B"): p_b, ("p2", "skipB"): 1.0 - p_b,
            ("p3", "C"): p_c, ("p3", "skipC"): 1.0 - p_c,
        },
        delay_distributions={
            "A": EmpiricalDelay((0.0,)),
            "B": EmpiricalDelay(delays_b),
            "C": EmpiricalDelay(delays_c),
        },
    )
