"""Exact ground truth on tiny instances by full realization enumeration.

Enumerates all 2^m realizations in binary counting order over edge indices,
weighting each by its probability, and runs the same deterministic maximum
matching used everywhere else.  Sums are Kahan-compensated; "exact" means
exact to double precision, since the input probabilities are decimals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InstanceTooLargeError
from .graph import StochasticGraph
from .matching import max_matching

__all__ = ["ExactStats", "CrucialSplit", "exact_stats", "exact_crucial_split"]

DEFAULT_EDGE_CAP = 20


@dataclass
class ExactStats:
    """Exact opt, per-edge q_e, and per-vertex matched probability."""

    graph: StochasticGraph
    opt: float
    q: np.ndarray
    matched_prob: np.ndarray


class _Kahan:
    __slots__ = ("total", "comp")

    def __init__(self, size=None):
        if size is None:
            self.total = 0.0
            self.comp = 0.0
        else:
            self.total = np.zeros(size)
            self.comp = np.zeros(size)

    def add(self, value, idx=None):
        if idx is None:
            y = value - self.comp
            t = self.total + y
            self.comp = (t - self.total) - y
            self.total = t
        else:
            y = value - self.comp[idx]
            t = self.total[idx] + y
            self.comp[idx] = (t - self.total[idx]) - y
            self.total[idx] = t


def exact_stats(g: StochasticGraph, cap: int = DEFAULT_EDGE_CAP) -> ExactStats:
    """Exact expected maximum matching size and per-edge matching probabilities.

    Raises InstanceTooLargeError when the graph has more than ``cap`` edges.
    """
    m = g.m
    if m > cap:
        raise InstanceTooLargeError(
            f"exact enumeration over 2^{m} realizations exceeds the cap of {cap} edges"
        )
    # Probability of every bitmask, built one edge at a time.
    probs = np.ones(1 << m)
    idx = np.arange(1 << m)
    for e in range(m):
        bit = (idx >> e) & 1 == 1
        probs[bit] *= g.ps[e]
        probs[~bit] *= 1.0 - g.ps[e]

    opt_acc = _Kahan()
    q_acc = _Kahan(m)
    for mask in range(1 << m):
        ids = [e for e in range(m) if mask >> e & 1]
        matched = max_matching(g, ids).edges
        p = float(probs[mask])
        opt_acc.add(p * len(matched))
        for e in matched:
            q_acc.add(p, e)
    q = np.asarray(q_acc.total)
    matched_prob = np.zeros(g.n)
    for e in range(m):
        u, v = g.endpoints(e)
        matched_prob[u] += q[e]
        matched_prob[v] += q[e]
    return ExactStats(graph=g, opt=float(opt_acc.total), q=q, matched_prob=matched_prob)


@dataclass
class CrucialSplit:
    """Edge sets and per-vertex crucial/non-crucial matched mass at exact q."""

    crucial: tuple[int, ...]
    noncrucial: tuple[int, ...]
    ignored: tuple[int, ...]
    c_v: np.ndarray
    n_v: np.ndarray


def exact_crucial_split(stats: ExactStats, tau_minus: float, tau_plus: float) -> CrucialSplit:
    """Split edges by thresholds: crucial q >= tau_plus, non-crucial q <= tau_minus."""
    if not (0.0 < tau_minus < tau_plus < 1.0):
        raise ValueError(
            f"thresholds must satisfy 0 < tau_minus < tau_plus < 1, got ({tau_minus}, {tau_plus})"
        )
    g = stats.graph
    crucial, noncrucial, ignored = [], [], []
    c_v = np.zeros(g.n)
    n_v = np.zeros(g.n)
    for e in range(g.m):
        u, v = g.endpoints(e)
        qe = stats.q[e]
        if qe >= tau_plus:
            crucial.append(e)
            c_v[u] += qe
            c_v[v] += qe
        elif qe <= tau_minus:
            noncrucial.append(e)
            n_v[u] += qe
            n_v[v] += qe
        else:
            ignored.append(e)
    return CrucialSplit(
        crucial=tuple(crucial),
        noncrucial=tuple(noncrucial),
        ignored=tuple(ignored),
        c_v=c_v,
        n_v=n_v,
    )
