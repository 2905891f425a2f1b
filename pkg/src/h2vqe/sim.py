"""Statevector simulation, shot sampling, and stochastic noise injection.

Basis index ``i`` encodes qubit ``k`` in bit ``k`` (qubit 0 least
significant). Noise is simulated per shot: depolarizing gate errors insert
a uniformly random Pauli after the faulty gate, readout errors flip each
measured bit independently. Shots whose trajectory carries no insertion are
sampled together from the ideal distribution; shots sharing an insertion
pattern share one replayed trajectory, which is distribution-identical to
replaying every shot separately.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ansatz import Circuit, Gate
from .pauli import MeasurementGroup

DEFAULT_P1 = 0.001
DEFAULT_P2 = 0.005
DEFAULT_READOUT = (0.02, 0.02)

BIT_ORDER_TAGS = ("q0_rightmost", "q0_leftmost")

_H_MATRIX = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
_PAULI_MATRICES = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def _ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(theta: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex
    )


@lru_cache(maxsize=256)
def _lower_indices(n: int, q: int) -> np.ndarray:
    """Basis indices with bit q clear; treat as read-only."""
    i = np.arange(2**n)
    return i[(i >> q) & 1 == 0]


@lru_cache(maxsize=256)
def _cx_permutation(n: int, control: int, target: int) -> np.ndarray:
    """Read-only permutation: flip the target bit where control is set."""
    i = np.arange(2**n)
    flip = (i >> control) & 1 == 1
    perm = i.copy()
    perm[flip] ^= 1 << target
    return perm


def _apply_single(state: np.ndarray, m: np.ndarray, q: int, n: int) -> np.ndarray:
    i0 = _lower_indices(n, q)
    i1 = i0 + (1 << q)
    s0, s1 = state[i0], state[i1]
    out = np.empty_like(state)
    out[i0] = m[0, 0] * s0 + m[0, 1] * s1
    out[i1] = m[1, 0] * s0 + m[1, 1] * s1
    return out


def _gate_matrix(gate: Gate) -> np.ndarray:
    if gate.name == "ry":
        return _ry(gate.angle)
    if gate.name == "rz":
        return _rz(gate.angle)
    return _H_MATRIX


def apply_gate(state: np.ndarray, gate: Gate, n_qubits: int) -> np.ndarray:
    if any(not 0 <= q < n_qubits for q in gate.qubits):
        raise ValueError(f"gate {gate.name} on {gate.qubits} out of range")
    if gate.name == "cx":
        return state[_cx_permutation(n_qubits, *gate.qubits)]
    return _apply_single(state, _gate_matrix(gate), gate.qubits[0], n_qubits)


def zero_state(n_qubits: int) -> np.ndarray:
    state = np.zeros(2**n_qubits, dtype=complex)
    state[0] = 1.0
    return state


def apply_circuit(state: np.ndarray, circuit: Circuit) -> np.ndarray:
    if len(state) != 2**circuit.n_qubits:
        raise ValueError("state dimension does not match circuit qubit count")
    for gate in circuit.gates:
        state = apply_gate(state, gate, circuit.n_qubits)
    return state


def statevector(circuit: Circuit) -> np.ndarray:
    """Final state of the circuit started from |0...0>."""
    return apply_circuit(zero_state(circuit.n_qubits), circuit)


def probabilities(circuit: Circuit) -> np.ndarray:
    amps = statevector(circuit)
    p = np.abs(amps) ** 2
    return p / p.sum()


def post_rotations(group: MeasurementGroup) -> Circuit:
    """Basis-change circuit for one measurement group: H on X-basis qubits."""
    gates = []
    for q, basis in enumerate(group.basis):
        if basis == "X":
            gates.append(Gate("h", (q,)))
        elif basis != "Z":
            raise ValueError(f"unsupported measurement basis {basis!r} on qubit {q}")
    return Circuit(len(group.basis), tuple(gates))


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing gate errors plus classical readout bit-flips.

    ``readout`` is one (p_flip_0to1, p_flip_1to0) pair applied to every
    qubit, or a tuple of such pairs, one per qubit.
    """

    gate_enabled: bool = False
    readout_enabled: bool = False
    p1: float = DEFAULT_P1
    p2: float = DEFAULT_P2
    readout: tuple = DEFAULT_READOUT

    def __post_init__(self) -> None:
        for p in (self.p1, self.p2):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"gate-error probability {p} outside [0, 1]")
        for p01, p10 in self._readout_pairs():
            if not (0.0 <= p01 <= 1.0 and 0.0 <= p10 <= 1.0):
                raise ValueError(f"readout probability ({p01}, {p10}) outside [0, 1]")

    def _readout_pairs(self) -> tuple[tuple[float, float], ...]:
        if self.readout and isinstance(self.readout[0], (tuple, list)):
            return tuple((float(a), float(b)) for a, b in self.readout)
        a, b = self.readout
        return ((float(a), float(b)),)

    def readout_probs(self, n_qubits: int) -> tuple[np.ndarray, np.ndarray]:
        """(p_flip_0to1, p_flip_1to0) arrays, one entry per qubit."""
        pairs = self._readout_pairs()
        if len(pairs) == 1:
            pairs = pairs * n_qubits
        if len(pairs) != n_qubits:
            raise ValueError(
                f"{len(pairs)} readout pairs for {n_qubits} qubits"
            )
        arr = np.array(pairs, dtype=float)
        return arr[:, 0], arr[:, 1]

    @classmethod
    def ideal(cls) -> "NoiseModel":
        return cls()

    @classmethod
    def from_dict(cls, doc: dict) -> "NoiseModel":
        gate = doc.get("gate_errors", False)
        readout = doc.get("readout_errors", False)
        kwargs: dict = {
            "gate_enabled": bool(gate),
            "readout_enabled": bool(readout),
        }
        if isinstance(gate, dict):
            kwargs["p1"] = float(gate.get("p1", DEFAULT_P1))
            kwargs["p2"] = float(gate.get("p2", DEFAULT_P2))
        if isinstance(readout, dict):
            if "per_qubit" in readout:
                kwargs["readout"] = tuple(
                    (float(a), float(b)) for a, b in readout["per_qubit"]
                )
            else:
                kwargs["readout"] = (
                    float(readout.get("p01", DEFAULT_READOUT[0])),
                    float(readout.get("p10", DEFAULT_READOUT[1])),
                )
        return cls(**kwargs)

    def to_dict(self) -> dict:
        doc: dict = {}
        doc["gate_errors"] = (
            {"p1": self.p1, "p2": self.p2} if self.gate_enabled else False
        )
        pairs = self._readout_pairs()
        if self.readout_enabled:
            if len(pairs) == 1:
                doc["readout_errors"] = {"p01": pairs[0][0], "p10": pairs[0][1]}
            else:
                doc["readout_errors"] = {"per_qubit": [list(p) for p in pairs]}
        else:
            doc["readout_errors"] = False
        return doc

    def describe(self) -> str:
        parts = []
        if self.gate_enabled:
            parts.append(f"gate(p1={self.p1:g},p2={self.p2:g})")
        if self.readout_enabled:
            pairs = self._readout_pairs()
            if len(pairs) == 1:
                parts.append(f"readout(p01={pairs[0][0]:g},p10={pairs[0][1]:g})")
            else:
                parts.append("readout(per-qubit)")
        return "+".join(parts) if parts else "ideal"


@dataclass(frozen=True)
class CountsVector:
    """Histogram over the 2^n basis states from ``shots`` measurements."""

    counts: tuple[int, ...]
    shots: int

    def __post_init__(self) -> None:
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        dim = len(self.counts)
        if dim < 2 or dim & (dim - 1):
            raise ValueError("counts length must be a power of two")
        if any(c < 0 for c in self.counts):
            raise ValueError("negative count")
        if sum(self.counts) != self.shots:
            raise ValueError("counts do not sum to shots")

    @property
    def n_qubits(self) -> int:
        return len(self.counts).bit_length() - 1

    def probabilities(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.shots


def merge_counts(a: CountsVector, b: CountsVector) -> CountsVector:
    if len(a.counts) != len(b.counts):
        raise ValueError("cannot merge counts of different dimension")
    return CountsVector(
        tuple(x + y for x, y in zip(a.counts, b.counts)), a.shots + b.shots
    )


def bit_reversal_permutation(n_qubits: int) -> np.ndarray:
    """perm[i] = i with its n-bit pattern reversed."""
    perm = np.zeros(2**n_qubits, dtype=np.int64)
    for i in range(2**n_qubits):
        r = 0
        for b in range(n_qubits):
            r |= ((i >> b) & 1) << (n_qubits - 1 - b)
        perm[i] = r
    return perm


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _apply_readout_flips(
    outcomes: np.ndarray, rng: np.random.Generator, noise: NoiseModel, n: int
) -> np.ndarray:
    p01, p10 = noise.readout_probs(n)
    for q in range(n):
        bits = (outcomes >> q) & 1
        p_flip = np.where(bits == 0, p01[q], p10[q])
        flips = rng.random(outcomes.shape[0]) < p_flip
        outcomes = outcomes ^ (flips.astype(np.int64) << q)
    return outcomes


def _sample(
    probs: np.ndarray,
    shots: int,
    rng: np.random.Generator,
    noise: NoiseModel | None,
    n: int,
) -> CountsVector:
    counts = rng.multinomial(shots, probs / probs.sum())
    if noise is not None and noise.readout_enabled:
        outcomes = np.repeat(np.arange(len(probs), dtype=np.int64), counts)
        outcomes = _apply_readout_flips(outcomes, rng, noise, n)
        counts = np.bincount(outcomes, minlength=len(probs))
    return CountsVector(tuple(int(c) for c in counts), shots)


def sample_counts(
    state: np.ndarray, shots: int, seed, noise: NoiseModel | None = None
) -> CountsVector:
    """Multinomial shot sampling from |amplitude|^2, plus readout flips.

    Deterministic for a fixed (state, shots, seed, noise). Draw order:
    one multinomial over outcomes, then per qubit (ascending) one uniform
    array over all shots deciding the readout flips.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    n = len(state).bit_length() - 1
    probs = np.abs(np.asarray(state)) ** 2
    return _sample(probs, shots, _as_rng(seed), noise, n)


def _error_slots(circuit: Circuit, noise: NoiseModel) -> list[tuple[int, int, float]]:
    """(gate index, qubit, insertion probability) per depolarizing chance."""
    slots = []
    for i, g in enumerate(circuit.gates):
        if g.name == "cx":
            slots.append((i, g.qubits[0], noise.p2))
            slots.append((i, g.qubits[1], noise.p2))
        else:
            slots.append((i, g.qubits[0], noise.p1))
    return slots


def _replay_with_insertions(
    prefix_states: list[np.ndarray],
    circuit: Circuit,
    insertions: list[tuple[int, int, int]],
) -> np.ndarray:
    """Final probabilities of one trajectory.

    ``insertions`` is [(gate index, qubit, pauli index)] sorted by gate
    index; the Pauli acts right after its gate. Replay resumes from the
    cached state just after the first faulty gate.
    """
    first = insertions[0][0]
    state = prefix_states[first + 1]
    n = circuit.n_qubits
    pos = 0
    while pos < len(insertions) and insertions[pos][0] == first:
        _, q, p = insertions[pos]
        state = _apply_single(state, _PAULI_MATRICES[p], q, n)
        pos += 1
    for gi in range(first + 1, len(circuit.gates)):
        state = apply_gate(state, circuit.gates[gi], n)
        while pos < len(insertions) and insertions[pos][0] == gi:
            _, q, p = insertions[pos]
            state = _apply_single(state, _PAULI_MATRICES[p], q, n)
            pos += 1
    probs = np.abs(state) ** 2
    return probs / probs.sum()


def run_noisy(
    circuit: Circuit, shots: int, seed, noise: NoiseModel
) -> CountsVector:
    """Shot-sampled circuit execution under the given noise model.

    With gate errors inert (channel disabled or both probabilities zero)
    this consumes randomness exactly like
    ``sample_counts(apply_circuit(zero_state(n), circuit), ...)`` and so
    returns identical counts for the same seed. Otherwise the draw order
    is: the per-shot/per-slot insertion coin matrix, then Pauli choices per
    faulty shot (ascending shot, then slot), one multinomial for the
    fault-free shots, one multinomial per distinct insertion pattern in
    first-appearance order, and finally the readout-flip uniforms per qubit.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    n = circuit.n_qubits
    rng = _as_rng(seed)
    gate_active = (
        noise.gate_enabled
        and (noise.p1 > 0 or noise.p2 > 0)
        and len(circuit.gates) > 0
    )
    if not gate_active:
        state = apply_circuit(zero_state(n), circuit)
        return _sample(np.abs(state) ** 2, shots, rng, noise, n)

    slots = _error_slots(circuit, noise)
    slot_probs = np.array([p for _, _, p in slots])
    fire = rng.random((shots, len(slots))) < slot_probs
    faulty = np.nonzero(fire.any(axis=1))[0]

    patterns: dict[tuple, list[int]] = {}
    for si in faulty:
        fired = np.nonzero(fire[si])[0]
        paulis = rng.integers(0, 3, size=fired.size)
        key = tuple(zip(fired.tolist(), paulis.tolist()))
        patterns.setdefault(key, []).append(int(si))

    prefix_states = [zero_state(n)]
    for gate in circuit.gates:
        prefix_states.append(apply_gate(prefix_states[-1], gate, n))
    ideal_probs = np.abs(prefix_states[-1]) ** 2
    ideal_probs /= ideal_probs.sum()

    dim = 2**n
    n_idle = shots - len(faulty)
    pieces = [
        np.repeat(
            np.arange(dim, dtype=np.int64), rng.multinomial(n_idle, ideal_probs)
        )
        if n_idle
        else np.empty(0, dtype=np.int64)
    ]
    for key, members in patterns.items():
        insertions = [(slots[sl][0], slots[sl][1], p) for sl, p in key]
        probs = _replay_with_insertions(prefix_states, circuit, insertions)
        pieces.append(
            np.repeat(
                np.arange(dim, dtype=np.int64),
                rng.multinomial(len(members), probs),
            )
        )
    outcomes = np.concatenate(pieces)
    if noise.readout_enabled:
        outcomes = _apply_readout_flips(outcomes, rng, noise, n)
    counts = np.bincount(outcomes, minlength=dim)
    return CountsVector(tuple(int(c) for c in counts), shots)


def counts_to_dict(
    cv: CountsVector,
    basis,
    bit_order: str = "q0_leftmost",
    **extra,
) -> dict:
    """Counts-file document.

    ``basis`` is one label per qubit, indexed by qubit number. ``bit_order``
    fixes the index convention of the serialized ``counts`` and the
    character order of the ``group_basis`` string; the in-memory
    CountsVector always uses q0_rightmost (qubit k in bit k).
    """
    if bit_order not in BIT_ORDER_TAGS:
        raise ValueError(f"bit_order must be one of {BIT_ORDER_TAGS}")
    counts = list(cv.counts)
    if bit_order == "q0_leftmost":
        perm = bit_reversal_permutation(cv.n_qubits)
        counts = [cv.counts[perm[i]] for i in range(len(cv.counts))]
        basis_str = "".join(basis)
    else:
        basis_str = "".join(reversed(basis))
    doc = {
        "n_qubits": cv.n_qubits,
        "shots": cv.shots,
        "group_basis": basis_str,
        "bit_order": bit_order,
        "counts": counts,
    }
    doc.update(extra)
    return doc


def counts_from_dict(doc: dict) -> tuple[CountsVector, str, dict]:
    """Parse a counts-file document.

    Returns the counts in the internal (q0_rightmost) order, the group
    basis as per-qubit labels with index = qubit (q0 first), and the
    leftover metadata fields.
    """
    bit_order = doc.get("bit_order", "q0_leftmost")
    if bit_order not in BIT_ORDER_TAGS:
        raise ValueError(f"unknown bit_order {bit_order!r}")
    n = int(doc["n_qubits"])
    raw = [int(c) for c in doc["counts"]]
    if len(raw) != 2**n:
        raise ValueError(f"expected {2**n} counts, got {len(raw)}")
    basis = str(doc["group_basis"]).upper()
    if len(basis) != n:
        raise ValueError("group_basis length does not match n_qubits")
    if bit_order == "q0_leftmost":
        # basis char i already names qubit i in this orientation
        perm = bit_reversal_permutation(n)
        raw = [raw[perm[i]] for i in range(len(raw))]
    else:
        basis = basis[::-1]
    cv = CountsVector(tuple(raw), int(doc["shots"]))
    meta = {
        k: v
        for k, v in doc.items()
        if k not in ("n_qubits", "shots", "group_basis", "bit_order", "counts")
    }
    return cv, basis, meta


def save_counts(path: str, doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_counts(path: str) -> tuple[CountsVector, str, dict]:
    with open(path) as fh:
        return counts_from_dict(json.load(fh))
