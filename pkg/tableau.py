"""
Stabilizer-state representation and Clifford / measurement dynamics.

A state on N qubits is held as N commuting, independent Pauli generators
in packed binary symplectic form (x part, z part) plus one sign bit per row.
Gates and measurements mutate the tableau in place and return it, so calls
can be chained; use :meth:`StabilizerTableau.copy` to keep a snapshot.
"""

import logging
import os
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

import gf2

logger = logging.getLogger(__name__)

# Full commutation / rank checks after every operation (slow, for tests)
CHECK_INVARIANTS = os.environ.get("MPTZX_CHECK_INVARIANTS", "0") == "1"


class InvalidArgument(ValueError):
    """Raised when an operation receives out-of-range or malformed input."""


@dataclass
class PauliRow:
    """A Hermitian Pauli string with sign +1 or -1."""

    x_bits: np.ndarray
    z_bits: np.ndarray
    sign: int
    n_qubits: int

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise InvalidArgument(f"Pauli sign must be +1 or -1, got {self.sign}")
        words = gf2.n_words(self.n_qubits)
        for name in ("x_bits", "z_bits"):
            arr = np.asarray(getattr(self, name), dtype=np.uint64).reshape(-1)
            if arr.shape != (words,):
                raise InvalidArgument(f"{name} must hold {words} words for {self.n_qubits} qubits")
            setattr(self, name, arr)

    @classmethod
    def from_label(cls, label: str) -> "PauliRow":
        """Parse labels like ``"+XZI"`` or ``"-ZZ"`` (qubit 0 first)."""
        sign = 1
        body = label.strip()
        if body[:1] in "+-":
            sign = -1 if body[0] == "-" else 1
            body = body[1:]
        if not body or any(c not in "IXYZ" for c in body):
            raise InvalidArgument(f"Malformed Pauli label: {label!r}")
        xs = np.array([c in "XY" for c in body])
        zs = np.array([c in "ZY" for c in body])
        return cls(gf2.pack_bits(xs), gf2.pack_bits(zs), sign, len(body))

    @classmethod
    def on_sites(cls, n_qubits: int, paulis: dict, sign: int = 1) -> "PauliRow":
        """Build a Pauli string from a ``{site: "X"|"Y"|"Z"}`` mapping."""
        chars = ["I"] * n_qubits
        for site, p in paulis.items():
            if not 0 <= site < n_qubits:
                raise InvalidArgument(f"Site {site} out of range for {n_qubits} qubits")
            chars[site] = p
        return cls.from_label(("-" if sign < 0 else "+") + "".join(chars))

    def to_label(self) -> str:
        xs = gf2.unpack_bits(self.x_bits, self.n_qubits)
        zs = gf2.unpack_bits(self.z_bits, self.n_qubits)
        body = "".join("IXZY"[int(a) + 2 * int(b)] for a, b in zip(xs, zs))
        return ("+" if self.sign > 0 else "-") + body

    def __repr__(self) -> str:
        return f"PauliRow({self.to_label()})"


class StabilizerTableau:
    """N stabilizer generators on N qubits (pure stabilizer state)."""

    def __init__(self, x: np.ndarray, z: np.ndarray, signs: np.ndarray, n_qubits: int):
        self.n_qubits = n_qubits
        self.x = np.ascontiguousarray(x, dtype=np.uint64)
        self.z = np.ascontiguousarray(z, dtype=np.uint64)
        self.signs = np.asarray(signs, dtype=np.uint8)
        if self.x.shape != (n_qubits, gf2.n_words(n_qubits)) or self.z.shape != self.x.shape:
            raise InvalidArgument("tableau arrays do not match the qubit count")

    @classmethod
    def from_rows(cls, rows: Sequence[PauliRow]) -> "StabilizerTableau":
        if not rows:
            raise InvalidArgument("at least one stabilizer row is required")
        n = rows[0].n_qubits
        if len(rows) != n or any(r.n_qubits != n for r in rows):
            raise InvalidArgument(f"need exactly {n} rows on {n} qubits")
        x = np.stack([r.x_bits for r in rows])
        z = np.stack([r.z_bits for r in rows])
        signs = np.array([0 if r.sign > 0 else 1 for r in rows], dtype=np.uint8)
        return cls(x, z, signs, n)

    @classmethod
    def from_labels(cls, labels: Iterable[str]) -> "StabilizerTableau":
        return cls.from_rows([PauliRow.from_label(s) for s in labels])

    @property
    def rows(self) -> List[PauliRow]:
        return [PauliRow(self.x[i].copy(), self.z[i].copy(), -1 if self.signs[i] else 1, self.n_qubits)
                for i in range(self.n_qubits)]

    def labels(self) -> List[str]:
        return [r.to_label() for r in self.rows]

    def copy(self) -> "StabilizerTableau":
        return StabilizerTableau(self.x.copy(), self.z.copy(), self.signs.copy(), self.n_qubits)

    def same_state(self, other: "StabilizerTableau") -> bool:
        """True when both tableaus generate the same signed stabilizer group."""
        if other.n_qubits != self.n_qubits:
            return False
        for row in other.rows:
            if anticommuting_rows(self, row).size:
                return False
            if _resolve_sign(self, row) != row.sign:
                return False
        return True

    def validate(self) -> None:
        """Assert row count, pairwise commutation and full GF(2) rank."""
        n = self.n_qubits
        assert self.x.shape[0] == n, "row count drifted"
        dense_x = gf2.unpack_bits(self.x, n).astype(np.uint8)
        dense_z = gf2.unpack_bits(self.z, n).astype(np.uint8)
        comm = (dense_x @ dense_z.T + dense_z @ dense_x.T) % 2
        assert not comm.any(), "stabilizer rows do not commute"
        full = np.hstack([dense_x, dense_z])
        assert gf2.rank_dense(full) == n, "stabilizer rows are not independent"

    def _check(self) -> "StabilizerTableau":
        if CHECK_INVARIANTS:
            self.validate()
        return self

    def _site(self, site: int) -> int:
        if not isinstance(site, (int, np.integer)) or not 0 <= site < self.n_qubits:
            raise InvalidArgument(f"site {site} out of range for {self.n_qubits} qubits")
        return int(site)

    def __repr__(self) -> str:
        return f"StabilizerTableau(n_qubits={self.n_qubits})"


def init_bell_pairs(n_qubits: int) -> StabilizerTableau:
    """Bell pairs on bonds (0,1), (2,3), ...: rows X_{2k}X_{2k+1} and Z_{2k}Z_{2k+1}."""
    if not isinstance(n_qubits, (int, np.integer)) or n_qubits < 2 or n_qubits % 2:
        raise InvalidArgument(f"Bell-pair initialization needs an even n_qubits >= 2, got {n_qubits}")
    n = int(n_qubits)
    xs = np.zeros((n, n), dtype=bool)
    zs = np.zeros((n, n), dtype=bool)
    for k in range(n // 2):
        a, b = 2 * k, 2 * k + 1
        xs[a, [a, b]] = True
        zs[b, [a, b]] = True
    return StabilizerTableau(gf2.pack_bits(xs), gf2.pack_bits(zs), np.zeros(n, np.uint8), n)


def init_product_state(n_qubits: int) -> StabilizerTableau:
    """The all-zeros computational state: rows Z_i."""
    if not isinstance(n_qubits, (int, np.integer)) or n_qubits < 1:
        raise InvalidArgument(f"product-state initialization needs n_qubits >= 1, got {n_qubits}")
    n = int(n_qubits)
    zs = np.eye(n, dtype=bool)
    return StabilizerTableau(gf2.zeros(n, n), gf2.pack_bits(zs), np.zeros(n, np.uint8), n)


def _disjoint_pairs(t: StabilizerTableau, first: Sequence[int], second: Sequence[int],
                    gate: str) -> Tuple[np.ndarray, np.ndarray]:
    a = np.asarray(first, dtype=np.int64).reshape(-1)
    b = np.asarray(second, dtype=np.int64).reshape(-1)
    if a.shape != b.shape:
        raise InvalidArgument(f"{gate}: {a.size} first sites but {b.size} second sites")
    both = np.concatenate([a, b])
    if both.size and (both.min() < 0 or both.max() >= t.n_qubits):
        raise InvalidArgument(f"{gate}: site out of range for {t.n_qubits} qubits")
    if np.unique(both).size != both.size:
        raise InvalidArgument(f"{gate} sites must all differ")
    return a, b


def apply_cnots(t: StabilizerTableau, controls: Sequence[int], targets: Sequence[int]) -> StabilizerTableau:
    """CNOTs on disjoint (control, target) pairs, applied together."""
    c, g = _disjoint_pairs(t, controls, targets, "CNOT")
    if not c.size:
        return t
    xc, zc = gf2.get_columns(t.x, c), gf2.get_columns(t.z, c)
    xt, zt = gf2.get_columns(t.x, g), gf2.get_columns(t.z, g)
    flip = xc & zt & (xt ^ zc ^ np.uint64(1))
    t.signs ^= np.bitwise_xor.reduce(flip, axis=1).astype(np.uint8)
    gf2.set_columns(t.x, g, xt ^ xc)
    gf2.set_columns(t.z, c, zc ^ zt)
    return t._check()


def apply_swaps(t: StabilizerTableau, first: Sequence[int], second: Sequence[int]) -> StabilizerTableau:
    """SWAPs on disjoint site pairs, applied together."""
    a, b = _disjoint_pairs(t, first, second, "SWAP")
    if not a.size:
        return t
    for part in (t.x, t.z):
        ca, cb = gf2.get_columns(part, a), gf2.get_columns(part, b)
        gf2.set_columns(part, a, cb)
        gf2.set_columns(part, b, ca)
    return t._check()


def apply_cnot(t: StabilizerTableau, control: int, target: int) -> StabilizerTableau:
    return apply_cnots(t, [t._site(control)], [t._site(target)])


def apply_swap(t: StabilizerTableau, a: int, b: int) -> StabilizerTableau:
    return apply_swaps(t, [t._site(a)], [t._site(b)])


def anticommuting_rows(t: StabilizerTableau, op: PauliRow) -> np.ndarray:
    """Indices of stabilizer rows that anticommute with ``op``, ascending."""
    return np.flatnonzero(gf2.symplectic_products(t.x, t.z, op.x_bits, op.z_bits))


def _multiply_rows_into(t: StabilizerTableau, targets: np.ndarray, source: int) -> None:
    """rows[targets] <- rows[targets] * rows[source], with sign bookkeeping."""
    sx, sz = t.x[source][None, :], t.z[source][None, :]
    log_i = gf2.product_log_i(t.x[targets], t.z[targets], sx, sz)
    t.signs[targets] ^= ((log_i >> 1) & 1).astype(np.uint8) ^ t.signs[source]
    t.x[targets] ^= sx
    t.z[targets] ^= sz


def _resolve_sign(t: StabilizerTableau, op: PauliRow) -> int:
    """Sign s such that s * (bits of op) is in the stabilizer group.

    ``op`` must commute with every row. Gauss-Jordan elimination over the
    2N columns, multiplying out the pivot rows that cancel ``op``'s bits.
    """
    n = t.n_qubits
    work = t.copy()
    rem_x, rem_z = op.x_bits.copy()[None, :], op.z_bits.copy()[None, :]
    acc_x = np.zeros_like(rem_x)
    acc_z = np.zeros_like(rem_z)
    acc_sign = 0
    row = 0
    for col in range(2 * n):
        part = work.x if col < n else work.z
        bit = col if col < n else col - n
        if row < n:
            hits = np.flatnonzero(gf2.get_column(part[row:], bit))
        else:
            hits = np.array([], dtype=np.int64)
        if hits.size:
            pivot = row + int(hits[0])
            if pivot != row:
                for arr in (work.x, work.z, work.signs):
                    arr[[row, pivot]] = arr[[pivot, row]]
            others = np.flatnonzero(gf2.get_column(part, bit))
            others = others[others != row]
            if others.size:
                _multiply_rows_into(work, others, row)
            rem_part = rem_x if col < n else rem_z
            if gf2.get_column(rem_part, bit)[0]:
                log_i = int(gf2.product_log_i(acc_x, acc_z, work.x[row][None, :], work.z[row][None, :])[0])
                acc_sign ^= ((log_i >> 1) & 1) ^ int(work.signs[row])
                acc_x ^= work.x[row]
                acc_z ^= work.z[row]
                rem_x ^= work.x[row]
                rem_z ^= work.z[row]
            row += 1
    if rem_x.any() or rem_z.any():
        raise InvalidArgument("operator commutes with the state but is not in its stabilizer group")
    group_sign = -1 if acc_sign else 1
    return group_sign


def measure_pauli(t: StabilizerTableau, op: PauliRow, rng: np.random.Generator,
                  resolve_outcome: bool = True) -> Tuple[StabilizerTableau, int]:
    """Projective measurement of a Pauli observable.

    Returns the (mutated) tableau and the outcome +1/-1. With
    ``resolve_outcome=False`` a deterministic outcome is not computed and
    reported as 0; the post-measurement state is the same either way.
    """
    if not isinstance(op, PauliRow) or op.n_qubits != t.n_qubits:
        raise InvalidArgument("measured operator must be a PauliRow on the tableau's qubits")
    anti = anticommuting_rows(t, op)
    if anti.size:
        pivot = int(anti[0])
        rest = anti[1:]
        if rest.size:
            _multiply_rows_into(t, rest, pivot)
        outcome = 1 if rng.integers(2) == 0 else -1
        t.x[pivot] = op.x_bits
        t.z[pivot] = op.z_bits
        # stored row is outcome * op
        t.signs[pivot] = 0 if outcome * op.sign > 0 else 1
        return t._check(), outcome
    if not resolve_outcome:
        return t, 0
    return t, _resolve_sign(t, op) * op.sign


def measure_bell_pair(t: StabilizerTableau, a: int, b: int, rng: np.random.Generator) -> StabilizerTableau:
    """Bell-basis measurement on sites (a, b): measure X_aX_b then Z_aZ_b."""
    i, j = t._site(a), t._site(b)
    if i == j:
        raise InvalidArgument("Bell-pair measurement needs two distinct sites")
    n = t.n_qubits
    measure_pauli(t, PauliRow.on_sites(n, {i: "X", j: "X"}), rng, resolve_outcome=False)
    measure_pauli(t, PauliRow.on_sites(n, {i: "Z", j: "Z"}), rng, resolve_outcome=False)
    return t


def entanglement_entropy(t: StabilizerTableau, region: Iterable[int]) -> int:
    """Von Neumann entropy (bits) of ``region``: rank of the restricted rows minus |region|."""
    sites = sorted({t._site(s) for s in region})
    if not sites:
        return 0
    n = t.n_qubits
    dense_x = gf2.unpack_bits(t.x, n)[:, sites]
    dense_z = gf2.unpack_bits(t.z, n)[:, sites]
    return gf2.rank_dense(np.hstack([dense_x, dense_z])) - len(sites)


def entropy_profile(t: StabilizerTableau) -> List[int]:
    """S of the left block [0, k) for every cut k = 0..N."""
    return [entanglement_entropy(t, range(k)) for k in range(t.n_qubits + 1)]


def thirds(n_qubits: int) -> Tuple[range, range, range]:
    if n_qubits % 3:
        raise InvalidArgument(f"N={n_qubits} is not divisible by 3")
    k = n_qubits // 3
    return range(0, k), range(k, 2 * k), range(2 * k, n_qubits)


def mutual_information_I2(t: StabilizerTableau) -> int:
    """I2 = S_A + S_C - S_B for the contiguous thirds A, B, C of the chain."""
    a, b, c = thirds(t.n_qubits)
    return entanglement_entropy(t, a) + entanglement_entropy(t, c) - entanglement_entropy(t, b)


def measurement_outcome(t: StabilizerTableau, op: PauliRow) -> Optional[int]:
    """The deterministic outcome of measuring ``op``, or None if it is random."""
    if anticommuting_rows(t, op).size:
        return None
    return _resolve_sign(t, op) * op.sign
