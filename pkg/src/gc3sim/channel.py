"""Binary erasure channel primitives.

A transmission delivers the input bit with probability 1 - epsilon and the
erasure marker otherwise; erasures never flip bits and are independent of
the transmitted value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bitlinalg import ERASED


@dataclass(frozen=True)
class ChannelParams:
    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("erasure probability must lie in [0, 1)")


def transmit(bit: int, ch: ChannelParams, rng: np.random.Generator) -> int:
    """One use of the channel: the bit, or ERASED with probability epsilon."""
    if bit not in (0, 1):
        raise ValueError("input must be a bit")
    return ERASED if rng.random() < ch.epsilon else bit


def transmit_repeated(bit: int, t: int, ch: ChannelParams, rng: np.random.Generator) -> int:
    """t independent repetitions; ERASED only if every one of them erases.

    The erasure probability of the combined symbol is epsilon**t.
    """
    if bit not in (0, 1):
        raise ValueError("input must be a bit")
    if t < 1:
        raise ValueError("need at least one round")
    erased = bool(np.all(rng.random(t) < ch.epsilon))
    return ERASED if erased else bit


def broadcast_round_set(bit, out_edges, t: int, ch: ChannelParams, rng: np.random.Generator) -> dict:
    """Deliver t repeated broadcasts of one bit over a set of out-edges.

    Each out-edge sees an independent transmit_repeated outcome.  Edges are
    processed in iteration order, so pass an ordered collection when
    reproducibility matters.  Energy accounting (t broadcasts regardless of
    out-degree) is the caller's job.
    """
    if t < 1:
        raise ValueError("need at least one round")
    return {edge: transmit_repeated(bit, t, ch, rng) for edge in out_edges}
