"""Radiative deexcitation cascade on the decay graph of bound states.

Nodes are bound states (v, J, M) with both signs of M; edges carry the
spontaneous rates Gamma_(a,a') and point strictly downhill in energy, so the
graph is a DAG and populations propagate exactly in one sweep in order of
decreasing energy.  The whole v = 0 band is absorbing.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from polardimer.eigen import (ContractedSolver, EigenState, RadialChannels, default_field_path,
                              label_states)
from polardimer.model import CurvePair
from polardimer.radial import RadialGrid
from polardimer.transitions import RateEntry, rate_matrix
from polardimer.units import AU_TIME_S


class CascadeError(RuntimeError):
    """Inconsistent decay graph or an unreachable target."""


@dataclass
class RateTable:
    """Column storage of rates between indexed states (upper -> lower)."""

    labels: list[tuple]
    energies: np.ndarray
    upper: np.ndarray
    lower: np.ndarray
    gamma: np.ndarray

    @classmethod
    def from_entries(cls, states: Sequence[tuple[tuple, float]], entries: Iterable[RateEntry]) -> "RateTable":
        """Build from (label, energy) pairs and :class:`RateEntry` records."""
        labels = [tuple(l) for l, _ in states]
        index = {l: i for i, l in enumerate(labels)}
        rows = [(index[tuple(e.upper_label)], index[tuple(e.lower_label)], e.gamma) for e in entries]
        u, l, g = (np.array(x) for x in zip(*rows)) if rows else (np.zeros(0, int), np.zeros(0, int), np.zeros(0))
        return cls(labels, np.array([e for _, e in states], dtype=float), u.astype(int), l.astype(int), g.astype(float))

    def truncated(self, rel: float = 1e-12) -> "RateTable":
        """Drop channels below ``rel`` times the largest channel of their upper state."""
        if self.gamma.size == 0 or rel <= 0:
            return self
        top = np.zeros(len(self.labels))
        np.maximum.at(top, self.upper, self.gamma)
        keep = (self.gamma > 0) & (self.gamma >= rel * top[self.upper])
        return RateTable(self.labels, self.energies, self.upper[keep], self.lower[keep], self.gamma[keep])


@dataclass
class DecayGraph:
    labels: list[tuple]
    energies: np.ndarray
    rates: sp.csr_matrix  # rates[a, b] = Gamma_(a -> b)
    total: np.ndarray  # Gamma_a
    absorbing: np.ndarray  # bool
    F: float = 0.0
    index: dict = field(default_factory=dict)

    def __post_init__(self):
        self.index = {l: i for i, l in enumerate(self.labels)}

    @property
    def branching(self) -> sp.csr_matrix:
        inv = np.divide(1.0, self.total, out=np.zeros_like(self.total), where=self.total > 0)
        return sp.diags(inv) @ self.rates

    def lifetime_seconds(self, label) -> float:
        g = self.total[self.index[tuple(label)]]
        return math.inf if g == 0 else AU_TIME_S / g

    def order(self) -> np.ndarray:
        """Node indices by decreasing energy, ties by label."""
        return np.array(sorted(range(len(self.labels)), key=lambda i: (-self.energies[i], self.labels[i])),
                        dtype=int)

    def edges(self, node: int) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.rates.indptr[node], self.rates.indptr[node + 1]
        return self.rates.indices[a:b], self.rates.data[a:b]


def build_decay_graph(table: RateTable, F: float = 0.0, absorbing_v: int = 0) -> DecayGraph:
    """Decay graph with the v = ``absorbing_v`` band absorbing.

    Outgoing channels of absorbing nodes are discarded: the cascade stops on
    arrival in the band.
    """
    n = len(table.labels)
    absorbing = np.array([l[0] == absorbing_v for l in table.labels], dtype=bool)
    if table.gamma.size and np.any(table.energies[table.lower] >= table.energies[table.upper]):
        raise CascadeError("edge not strictly downhill in energy: the graph would not be acyclic")
    keep = ~absorbing[table.upper] & (table.gamma > 0)
    R = sp.csr_matrix((table.gamma[keep], (table.upper[keep], table.lower[keep])), shape=(n, n))
    R.sum_duplicates()
    R.sort_indices()
    total = np.asarray(R.sum(axis=1)).ravel()
    return DecayGraph(list(table.labels), np.asarray(table.energies, dtype=float), R, total, absorbing, F)


@dataclass
class FinalDistribution:
    initial: tuple
    F: float
    P: dict  # (J, M) -> probability in the absorbing band
    mean_time_s: float  # expected time to reach the band
    visits: np.ndarray = field(repr=False, default=None)

    @property
    def max_state(self) -> tuple:
        return max(sorted(self.P), key=lambda k: self.P[k])

    def total(self) -> float:
        return float(sum(self.P.values()))


def propagate(graph: DecayGraph, initial) -> FinalDistribution:
    """Exact arrival distribution in the absorbing band."""
    initial = tuple(initial)
    if initial not in graph.index:
        raise CascadeError(f"initial state {initial} not in the graph")
    i0 = graph.index[initial]
    if graph.absorbing[i0]:
        raise CascadeError("initial state already lies in the absorbing band")
    P = np.zeros(len(graph.labels))
    P[i0] = 1.0
    mean_time = 0.0
    stuck = 0.0
    for node in graph.order():
        p = P[node]
        if p == 0.0 or graph.absorbing[node]:
            continue
        if graph.total[node] == 0.0:
            stuck += p
            continue
        mean_time += p / graph.total[node]
        cols, g = graph.edges(node)
        P[cols] += p * g / graph.total[node]
    if stuck > 1e-12:
        raise CascadeError(f"probability {stuck:.3e} ends in non-absorbing states without open channels")
    dist = {(graph.labels[i][1], graph.labels[i][2]): float(P[i])
            for i in np.nonzero(graph.absorbing & (P > 0))[0]}
    return FinalDistribution(initial, graph.F, dist, mean_time * AU_TIME_S, P)


def cumulative_by_J(dist: FinalDistribution | dict) -> dict[int, float]:
    P = dist.P if isinstance(dist, FinalDistribution) else dist
    out: dict[int, float] = {}
    for (J, _), p in sorted(P.items()):
        out[J] = out.get(J, 0.0) + p
    return out


@dataclass
class PathReport:
    most_probable: list[tuple]
    most_probable_probability: float
    most_probable_time_s: float
    fastest: list[tuple]
    fastest_time_s: float
    fastest_probability: float


def _path_metrics(graph: DecayGraph, path: list[int]) -> tuple[float, float]:
    prob, time = 1.0, 0.0
    for a, b in zip(path, path[1:]):
        prob *= graph.rates[a, b] / graph.total[a]
        time += 1.0 / graph.total[a]
    return prob, time * AU_TIME_S


def _best_path(graph: DecayGraph, i0: int, target: int, weight) -> list[int] | None:
    """DP over the DAG minimizing the summed edge weight; ties go to the lexicographically smaller path."""
    n = len(graph.labels)
    cost = np.full(n, np.inf)
    pred = np.full(n, -1)
    cost[i0] = 0.0

    def path_to(i):
        out = []
        while i != -1:
            out.append(i)
            i = pred[i]
        return [graph.labels[j] for j in reversed(out)]

    for node in graph.order():
        if not np.isfinite(cost[node]) or graph.absorbing[node] or graph.total[node] == 0:
            continue
        cols, g = graph.edges(node)
        for c, gam in zip(cols, g):
            cand = cost[node] + weight(node, gam)
            if cand < cost[c] or (cand == cost[c] and pred[c] != -1
                                  and path_to(node) + [graph.labels[c]] < path_to(c)):
                cost[c] = cand
                pred[c] = node
    if not np.isfinite(cost[target]):
        return None
    out, i = [], target
    while i != -1:
        out.append(i)
        i = pred[i]
    return out[::-1]


def path_analytics(graph: DecayGraph, initial, final) -> PathReport:
    """Most probable path (max product of branching ratios) and fastest path
    (min summed lifetimes of the non-absorbing nodes on it)."""
    initial, final = tuple(initial), tuple(final)
    for l in (initial, final):
        if l not in graph.index:
            raise CascadeError(f"state {l} not in the graph")
    i0, i1 = graph.index[initial], graph.index[final]
    prob_path = _best_path(graph, i0, i1, lambda node, g: -math.log(g / graph.total[node]))
    if prob_path is None:
        raise CascadeError(f"{final} is not reachable from {initial}")
    fast_path = _best_path(graph, i0, i1, lambda node, g: 1.0 / graph.total[node])
    p1, t1 = _path_metrics(graph, prob_path)
    p2, t2 = _path_metrics(graph, fast_path)
    lab = lambda p: [graph.labels[i] for i in p]
    return PathReport(lab(prob_path), p1, t1, lab(fast_path), t2, p2)


# --- physical cascades -----------------------------------------------------

@dataclass(frozen=True)
class CascadeSettings:
    J_max: int = 30  # rotational truncation of every M block
    M_max: int = 30
    label_steps: int = 64
    truncation: float = 1e-12
    leak_warning: float = 1e-4


def mirror(state: EigenState) -> EigenState:
    """The degenerate -M partner of a state."""
    label = None if state.label is None else (state.label[0], state.label[1], -state.label[2])
    return EigenState(state.energy, -state.M, state.F, state.js, label, state.bound, state.reduced,
                      state._coefficients, state._expand)


def cascade_states(curve: CurvePair, grid: RadialGrid, F: float, ceiling: float,
                   settings: CascadeSettings = CascadeSettings()) -> dict[int, list[EigenState]]:
    """Labeled bound states at or below ``ceiling`` for M = 0 .. M_max."""
    channels = RadialChannels(grid, curve, settings.J_max, e_max=-0.0)
    channels = channels.restrict(-np.inf, -channels.margin)
    out = {}
    for M in range(0, min(settings.M_max, settings.J_max) + 1):
        solver = ContractedSolver(channels, M)
        if solver.dim == 0:
            break
        zero = [s for s in solver.solve(0.0) if s.label is not None]
        states = zero if F == 0 else label_states(solver.solve, default_field_path(F, settings.label_steps), zero)
        keep = [s for s in states if s.label is not None and s.energy <= ceiling * (1 - 1e-12)]
        if not keep and M > 0:
            break
        out[M] = keep
    return out


def cascade_rate_table(blocks: dict[int, list[EigenState]], grid: RadialGrid, curve: CurvePair,
                       truncation: float = 1e-12) -> RateTable:
    """Rates among all states of all M blocks and their mirrors (M -> M, M +- 1)."""
    dipole = np.asarray(curve.dipole(grid.points), dtype=float)
    states: list[EigenState] = []
    for M in sorted(blocks):
        states.extend(blocks[M])
        if M > 0:
            states.extend(mirror(s) for s in blocks[M])
    states.sort(key=lambda s: (-s.energy, s.label))
    index = {s.label: i for i, s in enumerate(states)}
    by_M: dict[int, list[EigenState]] = {}
    for s in states:
        by_M.setdefault(s.M, []).append(s)
    ups, lows, gams = [], [], []
    cache: dict[tuple[int, int], np.ndarray] = {}
    for Mu in sorted(by_M):
        for Ml in (Mu - 1, Mu, Mu + 1):
            if Ml not in by_M:
                continue
            # mirror symmetry: Gamma(Mu -> Ml) equals the block (|Mu|, |Ml|) of non-negative M
            key = (abs(Mu), abs(Ml))
            if key not in cache:
                cache[key] = rate_matrix(blocks[key[0]], blocks[key[1]], dipole)
            G = cache[key]
            src = [index[(s.label[0], s.label[1], Mu)] for s in blocks[key[0]]]
            dst = [index[(s.label[0], s.label[1], Ml)] for s in blocks[key[1]]]
            r, c = np.nonzero(G)
            ups.append(np.asarray(src)[r])
            lows.append(np.asarray(dst)[c])
            gams.append(G[r, c])
    table = RateTable([s.label for s in states], np.array([s.energy for s in states]),
                      np.concatenate(ups), np.concatenate(lows), np.concatenate(gams))
    return table.truncated(truncation)


def physical_graph(curve: CurvePair, grid: RadialGrid, F: float, initial: tuple,
                   settings: CascadeSettings = CascadeSettings()) -> DecayGraph:
    """Decay graph of all labeled bound states at or below the initial state."""
    initial = tuple(initial)
    if initial[2] < 0:
        initial = (initial[0], initial[1], -initial[2])
    blocks = cascade_states(curve, grid, F, 0.0, settings)
    start = [s for s in blocks.get(initial[2], []) if s.label == initial]
    if not start:
        raise CascadeError(f"initial state {initial} not found among the bound states at F={F:g}")
    ceiling = start[0].energy
    blocks = {M: [s for s in b if s.energy <= ceiling] for M, b in blocks.items()}
    blocks = {M: b for M, b in blocks.items() if b}
    return build_decay_graph(cascade_rate_table(blocks, grid, curve, settings.truncation), F)


def check_leak(dist: FinalDistribution, settings: CascadeSettings) -> float:
    """Population on the truncation edge (J = J_max or |M| = M_max); warns above the threshold."""
    edge = sum(p for (J, M), p in dist.P.items() if J >= settings.J_max or abs(M) >= settings.M_max)
    if edge > settings.leak_warning:
        warnings.warn(f"population {edge:.2e} reaches the J/M truncation edge; raise J_max/M_max", stacklevel=2)
    return edge


# --- exports ---------------------------------------------------------------

def write_distribution_csv(path: str | Path, dist: FinalDistribution) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["J", "M", "P"])
        for (J, M) in sorted(dist.P):
            w.writerow([J, M, repr(dist.P[(J, M)])])


def distribution_summary(dist: FinalDistribution) -> dict:
    cum = cumulative_by_J(dist)
    J_peak = max(sorted(cum), key=lambda J: cum[J])
    best = dist.max_state
    return {
        "initial": list(dist.initial),
        "F_au": dist.F,
        "max_population_state": {"J": best[0], "M": best[1], "P": dist.P[best]},
        "cumulative_by_J": [cum.get(J, 0.0) for J in range(max(cum) + 1)],
        "cumulative_peak_J": J_peak,
        "total_probability": dist.total(),
        "mean_time_to_band_s": dist.mean_time_s,
    }


def write_summary_json(path: str | Path, summary: dict) -> None:
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def path_json(graph: DecayGraph, report: PathReport) -> dict:
    def nodes(p):
        return [{"label": list(l), "tau_s": (None if graph.absorbing[graph.index[l]]
                                              else graph.lifetime_seconds(l))} for l in p]
    return {
        "most_probable": {"path": nodes(report.most_probable), "probability": report.most_probable_probability,
                          "time_s": report.most_probable_time_s},
        "fastest": {"path": nodes(report.fastest), "probability": report.fastest_probability,
                    "time_s": report.fastest_time_s},
    }
