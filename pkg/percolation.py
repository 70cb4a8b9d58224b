"""
Classical networks from simplified diagrams and their percolation statistics.

A network keeps one node per spider (boundary spiders included) and one
undirected link per wire; wire decorations are ignored. Percolation means
some input node reaches some output node.
"""

import logging
from collections import deque
from functools import partial
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import pandas as pd

from circuit import BrickworkCircuit, ModelParams, realization_params, sample_circuit
from zxgraph import ZxDiagram, clifford_simplify, diagram_from_circuit

logger = logging.getLogger(__name__)


class NetworkParseError(ValueError):
    pass


@dataclass
class ClassicalNetwork:
    n_nodes: int
    edges: List[Tuple[int, int]]
    input_nodes: FrozenSet[int] = frozenset()
    output_nodes: FrozenSet[int] = frozenset()

    def __post_init__(self):
        self.input_nodes = frozenset(self.input_nodes)
        self.output_nodes = frozenset(self.output_nodes)
        if self.input_nodes & self.output_nodes:
            raise NetworkParseError("input and output node sets overlap")
        for a, b in self.edges:
            if not (0 <= a < self.n_nodes and 0 <= b < self.n_nodes):
                raise NetworkParseError(f"edge ({a}, {b}) references a missing node")
        for v in self.input_nodes | self.output_nodes:
            if not 0 <= v < self.n_nodes:
                raise NetworkParseError(f"boundary node {v} out of range")

    def adjacency(self) -> List[List[int]]:
        out: List[List[int]] = [[] for _ in range(self.n_nodes)]
        for a, b in self.edges:
            if a != b:
                out[a].append(b)
                out[b].append(a)
        return out


@dataclass
class PercolationSample:
    p: float
    r: float
    N: int
    connected: bool
    largest_cluster: int
    second_largest_cluster: int
    seed: int
    n_nodes: int = 0
    min_cut: Optional[int] = None


@dataclass
class SlcPeak:
    r: float
    N: int
    p_peak: Optional[float]
    p_err: Optional[float]
    peak_value: float
    undefined: bool = False
    at_edge: bool = False


class UnionFind:
    """Disjoint sets over 0..n-1 with union by size and path compression."""

    def __init__(self, n: int):
        self._leader = list(range(n))
        self._size = [1] * n
        self.n_clusters = n

    def __repr__(self) -> str:
        return f"UnionFind: contains {self.n_clusters} clusters."

    def find(self, s: int) -> int:
        root = s
        while self._leader[root] != root:
            root = self._leader[root]
        while self._leader[s] != root:
            self._leader[s], s = root, self._leader[s]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self._size[ra] < self._size[rb]:
            ra, rb = rb, ra
        self._leader[rb] = ra
        self._size[ra] += self._size[rb]
        self.n_clusters -= 1

    def size(self, s: int) -> int:
        return self._size[self.find(s)]

    def cluster_sizes(self) -> List[int]:
        return sorted((self._size[v] for v in range(len(self._leader)) if self._leader[v] == v), reverse=True)


def network_from_diagram(d: Union[ZxDiagram, Mapping[str, Any]]) -> ClassicalNetwork:
    """One node per spider, one link per wire; accepts a diagram or its JSON dump."""
    if isinstance(d, ZxDiagram):
        ids = sorted(d.spiders)
        wires = [(a, b) for a, b, _ in d.wires()]
        inputs, outputs = d.inputs, d.outputs
    else:
        try:
            ids = sorted(int(s["id"]) for s in d["spiders"])
            wires = [(int(w[0]), int(w[1])) for w in d["wires"]]
            inputs, outputs = [int(v) for v in d["inputs"]], [int(v) for v in d["outputs"]]
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise NetworkParseError(f"malformed diagram dump: {e}") from e
    index = {v: i for i, v in enumerate(ids)}
    try:
        edges = [(index[a], index[b]) for a, b in wires]
        ins = [index[v] for v in inputs]
        outs = [index[v] for v in outputs]
    except KeyError as e:
        raise NetworkParseError(f"unknown spider id {e.args[0]}") from None
    return ClassicalNetwork(len(ids), edges, frozenset(ins), frozenset(outs))


def lattice_network(c: BrickworkCircuit) -> ClassicalNetwork:
    """Node per brick plus boundary nodes, linked along each qubit's worldline."""
    n = c.n_qubits
    last = list(range(n))
    edges = []
    node = 2 * n
    for brick in c.bricks:
        for q in brick.sites:
            edges.append((last[q], node))
            last[q] = node
        node += 1
    edges += [(last[q], n + q) for q in range(n)]
    return ClassicalNetwork(node, edges, frozenset(range(n)), frozenset(range(n, 2 * n)))


def is_percolating(net: ClassicalNetwork) -> bool:
    """Breadth-first search from all inputs; True once any output is reached."""
    if not net.input_nodes or not net.output_nodes:
        return False
    adj = net.adjacency()
    seen = set(net.input_nodes)
    queue = deque(sorted(net.input_nodes))
    while queue:
        v = queue.popleft()
        if v in net.output_nodes:
            return True
        for u in adj[v]:
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return False


def clusters(net: ClassicalNetwork) -> UnionFind:
    uf = UnionFind(net.n_nodes)
    for a, b in net.edges:
        uf.union(a, b)
    return uf


def cluster_sizes(net: ClassicalNetwork) -> List[int]:
    return clusters(net).cluster_sizes()


def minimal_temporal_cut(net: ClassicalNetwork) -> int:
    """Fewest nodes whose removal separates inputs from outputs (node-disjoint paths).

    Max-flow on the node-split graph; zero exactly when the network does not percolate.
    """
    if not net.input_nodes or not net.output_nodes:
        return 0
    g = nx.DiGraph()
    for v in range(net.n_nodes):
        g.add_edge(("in", v), ("out", v), capacity=1)
    for a, b in net.edges:
        if a != b:
            g.add_edge(("out", a), ("in", b))
            g.add_edge(("out", b), ("in", a))
    for v in net.input_nodes:
        g.add_edge("source", ("in", v))
    for v in net.output_nodes:
        g.add_edge(("out", v), "sink")
    return int(nx.maximum_flow_value(g, "source", "sink"))


def sample_realization(params: ModelParams, with_cut: bool = False) -> PercolationSample:
    """Full pipeline for one seed: sample, build the operator diagram, simplify, map, measure."""
    d = diagram_from_circuit(sample_circuit(params))
    clifford_simplify(d, telemetry=False)
    net = network_from_diagram(d)
    sizes = cluster_sizes(net)
    return PercolationSample(
        p=params.p, r=params.r, N=params.n_qubits,
        connected=is_percolating(net),
        largest_cluster=sizes[0] if sizes else 0,
        second_largest_cluster=sizes[1] if len(sizes) > 1 else 0,
        seed=params.seed,
        n_nodes=net.n_nodes,
        min_cut=minimal_temporal_cut(net) if with_cut else None,
    )


def run_samples(grid: Sequence[ModelParams], n_realizations: int, rng: np.random.Generator,
                runner: Callable = map, with_cut: bool = False) -> List[PercolationSample]:
    """All realizations of every grid point, seeds drawn point by point from ``rng``."""
    jobs = []
    for point in grid:
        jobs += realization_params(point, n_realizations, rng)
    task = partial(sample_realization, with_cut=True) if with_cut else sample_realization
    return list(runner(task, jobs))


def _group(samples: Iterable[PercolationSample]) -> Dict[Tuple[float, float, int], List[PercolationSample]]:
    groups: Dict[Tuple[float, float, int], List[PercolationSample]] = {}
    for s in samples:
        groups.setdefault((s.p, s.r, s.N), []).append(s)
    return groups


def p_path_table(samples: Iterable[PercolationSample]) -> pd.DataFrame:
    rows = []
    for (p, r, n), group in _group(samples).items():
        m = len(group)
        frac = sum(s.connected for s in group) / m
        cuts = [s.min_cut for s in group if s.min_cut is not None]
        rows.append({"p": p, "r": r, "N": n, "M": m, "P_path": frac, "stderr": float(np.sqrt(frac * (1 - frac) / m)),
                     "mean_min_cut": float(np.mean(cuts)) if cuts else np.nan})
    return pd.DataFrame(rows, columns=["p", "r", "N", "M", "P_path", "stderr", "mean_min_cut"])


def slc_table(samples: Iterable[PercolationSample]) -> pd.DataFrame:
    rows = []
    for (p, r, n), group in _group(samples).items():
        values = np.array([s.second_largest_cluster for s in group], dtype=float)
        err = float(values.std(ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
        rows.append({"p": p, "r": r, "N": n, "mean_SLC": float(values.mean()), "stderr": err})
    return pd.DataFrame(rows, columns=["p", "r", "N", "mean_SLC", "stderr"])


def estimate_p_path(grid: Sequence[ModelParams], n_realizations: int, rng: np.random.Generator,
                    runner: Callable = map, with_cut: bool = False) -> pd.DataFrame:
    """Fraction of percolating realizations per grid point, with binomial errors.

    With ``with_cut`` the mean minimal temporal cut is filled in as well.
    """
    if n_realizations < 100:
        logger.warning(f"P_path with {n_realizations} realizations per point has coarse errors")
    return p_path_table(run_samples(grid, n_realizations, rng, runner, with_cut))


def locate_peak(p: Sequence[float], y: Sequence[float]) -> Tuple[Optional[float], Optional[float], bool, bool]:
    """Peak position by a three-point quadratic around the discrete maximum.

    Returns (p_peak, half grid spacing, undefined, at_edge).
    """
    p = np.asarray(p, dtype=float)
    y = np.asarray(y, dtype=float)
    if p.size == 0 or np.allclose(y, y[0]):
        return None, None, True, False
    i = int(np.argmax(y))
    if i == 0 or i == p.size - 1:
        spacing = p[1] - p[0] if i == 0 else p[-1] - p[-2]
        return float(p[i]), float(spacing / 2), False, True
    x3, y3 = p[i - 1:i + 2], y[i - 1:i + 2]
    a, b, _ = np.polyfit(x3, y3, 2)
    peak = float(np.clip(-b / (2 * a), x3[0], x3[-1])) if a < 0 else float(p[i])
    return peak, float(min(x3[1] - x3[0], x3[2] - x3[1]) / 2), False, False


def slc_peaks(frame: pd.DataFrame) -> List[SlcPeak]:
    peaks = []
    for (r, n), group in frame.groupby(["r", "N"], sort=True):
        g = group.sort_values("p")
        p_peak, err, undefined, edge = locate_peak(g["p"].to_numpy(), g["mean_SLC"].to_numpy())
        peaks.append(SlcPeak(float(r), int(n), p_peak, err, float(g["mean_SLC"].max()), undefined, edge))
        if undefined:
            logger.info(f"SLC curve at r={r} N={n} is flat; peak undefined")
    return peaks


def second_largest_cluster_curve(grid: Sequence[ModelParams], n_realizations: int, rng: np.random.Generator,
                                 runner: Callable = map) -> Tuple[pd.DataFrame, List[SlcPeak]]:
    """Mean second-largest cluster per grid point and the peak location per (r, N)."""
    frame = slc_table(run_samples(grid, n_realizations, rng, runner))
    return frame, slc_peaks(frame)


def peaks_table(peaks: Sequence[SlcPeak]) -> pd.DataFrame:
    return pd.DataFrame([asdict(p) for p in peaks],
                        columns=["r", "N", "p_peak", "p_err", "peak_value", "undefined", "at_edge"])
