"""
Dense statevector oracle for small systems.

Qubit 0 is the most significant tensor factor everywhere in this module, the
same leg order :func:`zxgraph.evaluate_dense` uses. Only meant for N <= ~10;
the test-suite and the ``selftest`` command compare the fast simulators
against it.
"""

import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

PAULIS: Dict[str, np.ndarray] = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
BELL_PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


def pauli_matrix(label: str) -> np.ndarray:
    """Dense matrix of a signed Pauli label such as ``"-XZI"``."""
    sign = -1.0 if label.startswith("-") else 1.0
    body = label.lstrip("+-")
    out = np.array([[sign]], dtype=complex)
    for c in body:
        out = np.kron(out, PAULIS[c])
    return out


def product_state(n_qubits: int) -> np.ndarray:
    psi = np.zeros(2 ** n_qubits, dtype=complex)
    psi[0] = 1.0
    return psi


def bell_pairs_state(n_qubits: int) -> np.ndarray:
    psi = np.array([1.0], dtype=complex)
    for _ in range(n_qubits // 2):
        psi = np.kron(psi, BELL_PHI_PLUS)
    return psi


def apply_two_site(psi: np.ndarray, gate: np.ndarray, a: int, b: int) -> np.ndarray:
    """Apply a 4x4 gate with ``a`` as its first (most significant) qubit."""
    n = int(np.log2(psi.size))
    tensor = psi.reshape([2] * n)
    tensor = np.moveaxis(tensor, (a, b), (0, 1))
    shape = tensor.shape
    tensor = (gate @ tensor.reshape(4, -1)).reshape(shape)
    return np.moveaxis(tensor, (0, 1), (a, b)).reshape(-1)


def measure(psi: np.ndarray, observable: np.ndarray, rng: np.random.Generator,
            outcome: Optional[int] = None) -> Tuple[np.ndarray, int]:
    """Projective measurement of a Pauli observable with Born-rule sampling.

    Passing ``outcome`` post-selects on it instead of sampling.
    """
    projected = {s: 0.5 * (psi + s * (observable @ psi)) for s in (1, -1)}
    probs = {s: float(np.vdot(v, v).real) for s, v in projected.items()}
    if outcome is None:
        outcome = 1 if rng.random() < probs[1] else -1
    if probs[outcome] < 1e-12:
        raise ValueError(f"outcome {outcome} has zero probability")
    return projected[outcome] / np.sqrt(probs[outcome]), outcome


def entropy(psi: np.ndarray, region: Iterable[int]) -> float:
    """Von Neumann entropy in bits of the reduced state on ``region``."""
    n = int(np.log2(psi.size))
    sites = sorted(set(region))
    if not sites or len(sites) == n:
        return 0.0
    rest = [q for q in range(n) if q not in sites]
    tensor = psi.reshape([2] * n).transpose(sites + rest)
    mat = tensor.reshape(2 ** len(sites), -1)
    schmidt = np.linalg.svd(mat, compute_uv=False) ** 2
    schmidt = schmidt[schmidt > 1e-12]
    return float(-(schmidt * np.log2(schmidt)).sum())


def stabilizer_expectation(psi: np.ndarray, label: str) -> float:
    return float(np.vdot(psi, pauli_matrix(label) @ psi).real)


def run_circuit_dense(circuit, rng: np.random.Generator, initial_state: Optional[str] = None) -> np.ndarray:
    """Statevector evolution of a :class:`circuit.BrickworkCircuit`."""
    from circuit import GateKind, InitialState

    n = circuit.n_qubits
    kind = InitialState(initial_state or circuit.initial_state)
    psi = bell_pairs_state(n) if kind is InitialState.BELL_PAIRS else product_state(n)
    for brick in circuit.bricks:
        a, b = brick.sites
        if brick.kind is GateKind.CNOT:
            psi = apply_two_site(psi, CNOT, *brick.control_target)
        elif brick.kind is GateKind.SWAP:
            psi = apply_two_site(psi, SWAP, a, b)
        elif brick.kind is GateKind.BELL_MEASURE:
            for p in ("X", "Z"):
                label = ["I"] * n
                label[a] = label[b] = p
                psi, _ = measure(psi, pauli_matrix("".join(label)), rng)
    return psi


def bipartite_entropies(psi: np.ndarray) -> List[float]:
    """Entropy of the left block [0, k) for every cut k."""
    n = int(np.log2(psi.size))
    return [entropy(psi, range(k)) for k in range(n + 1)]


def all_region_entropies(psi: np.ndarray) -> Dict[Tuple[int, ...], float]:
    """Entropy of every nonempty proper subset of sites."""
    n = int(np.log2(psi.size))
    out = {}
    for mask in range(1, 2 ** n - 1):
        region = tuple(q for q in range(n) if mask >> q & 1)
        out[region] = entropy(psi, region)
    return out


def normalize_by_max(mat: np.ndarray) -> np.ndarray:
    """Divide by the largest-magnitude entry (the first one on ties)."""
    flat = mat.reshape(-1)
    idx = int(np.argmax(np.abs(flat)))
    if abs(flat[idx]) < 1e-12:
        return np.zeros_like(mat)
    return mat / flat[idx]


def proportional(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """True if ``a = c * b`` for a nonzero complex scalar c."""
    if a.shape != b.shape:
        return False
    fa, fb = a.reshape(-1), b.reshape(-1)
    # both sides normalized by the same entry
    idx = int(np.argmax(np.abs(fa)))
    if abs(fa[idx]) < 1e-12 or abs(fb[idx]) < 1e-12:
        return False
    return float(np.max(np.abs(fa / fa[idx] - fb / fb[idx]))) < tol


def bell_projector() -> np.ndarray:
    return np.outer(BELL_PHI_PLUS, BELL_PHI_PLUS.conj())


def random_circuits(n_cases: int, rng: np.random.Generator, sizes: Sequence[int] = (2, 4, 6),
                    max_depth: int = 3) -> List:
    """Random small circuits over the full gate set, for oracle sweeps."""
    from circuit import ModelParams, sample_circuit

    out = []
    for _ in range(n_cases):
        params = ModelParams(
            p=float(rng.random()),
            r=float(rng.random()),
            n_qubits=int(rng.choice(sizes)),
            depth_layers=int(rng.integers(1, max_depth + 1)),
            initial_state=str(rng.choice(["bell_pairs", "product"])),
            seed=int(rng.integers(2 ** 63)),
        )
        out.append(sample_circuit(params))
    return out


def stabilizer_suite(n_cases: int, rng: np.random.Generator) -> List[str]:
    """Compare tableau entropies with dense ones; returns failure descriptions."""
    from circuit import run_circuit
    from tableau import entanglement_entropy

    failures = []
    for c in random_circuits(n_cases, rng):
        tab = run_circuit(c)
        psi = run_circuit_dense(c, rng)
        dense = all_region_entropies(psi)
        for region, s in dense.items():
            if entanglement_entropy(tab, region) != int(round(s)):
                failures.append(f"seed={c.seed} region={region}")
                break
    return failures


def zx_suite(n_cases: int, rng: np.random.Generator) -> List[str]:
    """Check that raw, graph-like and simplified diagrams agree up to a scalar."""
    import zxgraph

    failures = []
    for c in random_circuits(n_cases, rng, sizes=(2, 4), max_depth=3):
        d = zxgraph.diagram_from_circuit(c)
        reference = zxgraph.evaluate_dense(d)
        if not normalize_by_max(reference).any():
            # forced Bell outcomes projected onto a zero-probability branch
            continue
        for stage in ("local", "simplified"):
            work = d.copy()
            if stage == "local":
                zxgraph.local_simplify(work)
            else:
                zxgraph.clifford_simplify(work)
            if not proportional(reference, zxgraph.evaluate_dense(work)):
                failures.append(f"seed={c.seed} stage={stage}")
    return failures
