"""Statevector execution of segment circuits on composite registers.

A register is a list of named wires (fudge qubit, gadget ancilla, oracle
index, system).  Circuits are lists of operations on wires; each operation
declares how many oracle queries it costs, and the meter counts those
declarations rather than matrix multiplications.  The gadget ancilla can be
held either qubit by qubit or in the composition basis of weight <= k
strings.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .fracquery import (EncodedAncilla, GadgetParams, SegmentSpec, encoded_ancilla,
                        tail_probability)
from .hamiltonian import QueryMeter
from .linalg import DENSE_LIMIT, TOL_STRUCT, ValidationError


class RegisterLayout:
    """Ordered named wires.  The standard layout is (fudge, ancilla, index, system)."""

    def __init__(self, fudge_dim: int = 2, ancilla_dim: int = 1, index_dim: int = 1,
                 system_dim: int = 1, wires: Optional[Sequence[tuple[str, int]]] = None) -> None:
        if wires is None:
            wires = [("fudge", fudge_dim), ("ancilla", ancilla_dim), ("index", index_dim),
                     ("system", system_dim)]
        self.wires = [(str(n), int(d)) for n, d in wires]
        names = [n for n, _ in self.wires]
        if len(set(names)) != len(names):
            raise ValidationError("wire names must be unique")
        if any(d < 1 for _, d in self.wires):
            raise ValidationError("every wire needs dimension >= 1")
        self._pos = {n: i for i, n in enumerate(names)}

    @classmethod
    def qubits(cls, m: int, system_dim: int, index_dim: int = 1) -> "RegisterLayout":
        """Fudge qubit, m gadget-control qubits c1..cm, index, system."""
        wires = [("fudge", 2)] + [(f"c{i + 1}", 2) for i in range(m)]
        wires += [("index", index_dim), ("system", system_dim)]
        return cls(wires=wires)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.wires]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.wires)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def axis(self, name: str) -> int:
        try:
            return self._pos[name]
        except KeyError:
            raise ValidationError(f"unknown wire {name!r}") from None

    def dim(self, name: str) -> int:
        return self.wires[self.axis(name)][1]

    def label_dim(self, label_wires: Sequence[str]) -> int:
        return int(np.prod([self.dim(w) for w in label_wires]))

    def label_first(self, label_wires: Sequence[str]) -> list[str]:
        return list(label_wires) + [n for n in self.names if n not in label_wires]


@dataclass
class StateVector:
    amplitudes: np.ndarray
    deficit: float = 0.0

    @property
    def dim(self) -> int:
        return len(self.amplitudes)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _apply_on(tensor: np.ndarray, axes: Sequence[int], mat: np.ndarray) -> np.ndarray:
    axes = list(axes)
    front = list(range(len(axes)))
    moved = np.moveaxis(tensor, axes, front)
    shape = moved.shape
    flat = moved.reshape(int(np.prod(shape[:len(axes)])), -1)
    out = (mat @ flat).reshape(shape)
    return np.moveaxis(out, front, axes)


class Op:
    queries = 0

    def apply(self, t: np.ndarray, layout: RegisterLayout) -> np.ndarray:
        raise NotImplementedError

    def inverse(self) -> "Op":
        raise NotImplementedError


class Gate(Op):
    """Dense unitary on one or more wires (jointly, in listed order)."""

    def __init__(self, wires, matrix, queries: int = 0, label: str = "") -> None:
        self.wires = (wires,) if isinstance(wires, str) else tuple(wires)
        self.matrix = np.asarray(matrix, dtype=complex)
        self.queries = queries
        self.label = label

    def apply(self, t, layout):
        return _apply_on(t, [layout.axis(w) for w in self.wires], self.matrix)

    def inverse(self):
        return Gate(self.wires, self.matrix.conj().T, self.queries, self.label + "^-1")


class Phase(Op):
    """Global scalar phase."""

    def __init__(self, value: complex) -> None:
        self.value = complex(value)

    def apply(self, t, layout):
        return self.value * t

    def inverse(self):
        return Phase(np.conj(self.value))


class Controlled(Op):
    """Apply ``matrix`` to ``wires`` on the branch where ``control`` holds ``value``."""

    def __init__(self, control: str, wires, matrix, value: int = 1, queries: int = 1) -> None:
        self.control = control
        self.wires = (wires,) if isinstance(wires, str) else tuple(wires)
        self.matrix = np.asarray(matrix, dtype=complex)
        self.value = value
        self.queries = queries

    def apply(self, t, layout):
        ax = layout.axis(self.control)
        out = t.copy()
        idx = [slice(None)] * t.ndim
        idx[ax] = self.value
        branch = t[tuple(idx)]
        # axes of the remaining wires shift down by one past the control axis
        axes = [layout.axis(w) - (layout.axis(w) > ax) for w in self.wires]
        out[tuple(idx)] = _apply_on(branch, axes, self.matrix)
        return out

    def inverse(self):
        return Controlled(self.control, self.wires, self.matrix.conj().T, self.value, self.queries)


class Diagonal(Op):
    def __init__(self, wire: str, diag) -> None:
        self.wire = wire
        self.diag = np.asarray(diag, dtype=complex)

    def apply(self, t, layout):
        ax = layout.axis(self.wire)
        shape = [1] * t.ndim
        shape[ax] = len(self.diag)
        return t * self.diag.reshape(shape)

    def inverse(self):
        return Diagonal(self.wire, self.diag.conj())


class Householder(Op):
    """Real reflection exchanging basis state 0 and the unit vector ``v`` on one wire."""

    def __init__(self, wire: str, v) -> None:
        v = np.asarray(v, dtype=float)
        self.wire = wire
        u = -v.copy()
        u[0] += 1.0
        nrm = float(u @ u)
        self.u = u / math.sqrt(nrm) if nrm > 1e-30 else None

    def apply(self, t, layout):
        if self.u is None:
            return t
        ax = layout.axis(self.wire)
        moved = np.moveaxis(t, ax, 0)
        proj = np.tensordot(self.u, moved, axes=(0, 0))
        out = moved - 2.0 * np.multiply.outer(self.u, proj)
        return np.moveaxis(out, 0, ax)

    def inverse(self):
        return self

    def dense(self) -> np.ndarray:
        n = len(self.u) if self.u is not None else 1
        return np.eye(n) if self.u is None else np.eye(n) - 2.0 * np.outer(self.u, self.u)


class ZeroReflection(Op):
    """2|0><0| - I on the listed label wires (identity on the rest)."""

    def __init__(self, wires) -> None:
        self.wires = tuple(wires)

    def apply(self, t, layout):
        out = -t
        idx = [slice(None)] * t.ndim
        for w in self.wires:
            idx[layout.axis(w)] = 0
        out[tuple(idx)] = t[tuple(idx)]
        return out

    def inverse(self):
        return self


class StateReflection(Op):
    """2|v><v| - I on the listed wires jointly."""

    def __init__(self, wires, v) -> None:
        self.wires = tuple(wires)
        self.v = np.asarray(v, dtype=complex)

    def apply(self, t, layout):
        axes = [layout.axis(w) for w in self.wires]
        front = list(range(len(axes)))
        moved = np.moveaxis(t, axes, front)
        shape = moved.shape
        flat = moved.reshape(len(self.v), -1)
        out = 2.0 * np.outer(self.v, self.v.conj() @ flat) - flat
        return np.moveaxis(out.reshape(shape), front, axes)

    def inverse(self):
        return self


class CompositionSelect(Op):
    """Controlled query chain indexed by the composition-basis ancilla.

    For ancilla basis state x (a weight <= k string) applies
    D_m Q_m^{x_m} ... D_1 Q_1^{x_1} D_0 to the target wires, which contains
    at most k oracle gates; it is charged k queries.
    """

    def __init__(self, anc: str, targets, bits: np.ndarray, drives, oracles, queries: int,
                 inverted: bool = False) -> None:
        self.anc = anc
        self.targets = (targets,) if isinstance(targets, str) else tuple(targets)
        self.bits = np.asarray(bits, dtype=bool)
        self.drives = [np.asarray(d, dtype=complex) for d in drives]
        self.oracles = [np.asarray(q, dtype=complex) for q in oracles]
        self.queries = queries
        self.inverted = inverted

    def apply(self, t, layout):
        a_ax = layout.axis(self.anc)
        t_axes = [layout.axis(w) for w in self.targets]
        front = [a_ax] + t_axes
        moved = np.moveaxis(t, front, list(range(len(front))))
        shape = moved.shape
        nanc = shape[0]
        tdim = int(np.prod(shape[1:1 + len(t_axes)]))
        work = moved.reshape(nanc, tdim, -1)
        m = len(self.oracles)

        def drive(mat):
            return np.einsum("ij,ajb->aib", mat, work)

        def query(i, mat):
            sel = self.bits[:, i]
            if sel.any():
                work[sel] = np.einsum("ij,ajb->aib", mat, work[sel])

        if not self.inverted:
            work = drive(self.drives[0])
            for i in range(m):
                query(i, self.oracles[i])
                work = drive(self.drives[i + 1])
        else:
            for i in range(m, 0, -1):
                work = drive(self.drives[i].conj().T)
                query(i - 1, self.oracles[i - 1].conj().T)
            work = drive(self.drives[0].conj().T)
        out = work.reshape(shape)
        return np.moveaxis(out, list(range(len(front))), front)

    def inverse(self):
        return CompositionSelect(self.anc, self.targets, self.bits, self.drives, self.oracles,
                                 self.queries, not self.inverted)


class Circuit:
    def __init__(self, layout: RegisterLayout, ops: Optional[list[Op]] = None) -> None:
        self.layout = layout
        self.ops = list(ops or [])

    @property
    def queries(self) -> int:
        return sum(op.queries for op in self.ops)

    def then(self, other: "Circuit") -> "Circuit":
        """This circuit followed by ``other``."""
        if other.layout.wires != self.layout.wires:
            raise ValidationError("cannot compose circuits on different layouts")
        return Circuit(self.layout, self.ops + other.ops)

    def inverse(self) -> "Circuit":
        return Circuit(self.layout, [op.inverse() for op in reversed(self.ops)])

    def run(self, cols: np.ndarray) -> np.ndarray:
        """Apply to a (total_dim,) vector or a (total_dim, batch) block of columns."""
        dims = self.layout.dims
        vec = cols.ndim == 1
        batch = 1 if vec else cols.shape[1]
        t = np.asarray(cols, dtype=complex).reshape(dims + (batch,))
        for op in self.ops:
            t = op.apply(t, self.layout)
        out = t.reshape(self.layout.total_dim, batch)
        return out[:, 0] if vec else out


def apply(circuit: Circuit, state, meter: Optional[QueryMeter] = None) -> StateVector:
    amps = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    if amps.shape != (circuit.layout.total_dim,):
        raise ValidationError(f"state has shape {amps.shape}, layout needs ({circuit.layout.total_dim},)")
    out = circuit.run(amps)
    if meter is not None:
        meter.charge(circuit.queries)
    deficit = state.deficit if isinstance(state, StateVector) else 0.0
    return StateVector(out, deficit)


def materialize(circuit: Circuit, limit: int = DENSE_LIMIT) -> np.ndarray:
    dim = circuit.layout.total_dim
    if dim > limit:
        raise ValidationError(f"total dimension {dim} exceeds dense limit {limit}")
    return circuit.run(np.eye(dim, dtype=complex))


def basis_state(layout: RegisterLayout, system_state, **labels) -> np.ndarray:
    """|labels...>|system_state> with unnamed non-system wires at 0."""
    t = np.zeros(layout.dims, dtype=complex)
    idx = []
    for name, dim in layout.wires:
        if name == "system":
            idx.append(slice(None))
        else:
            idx.append(labels.get(name, 0))
    t[tuple(idx)] = np.asarray(system_state, dtype=complex)
    return t.reshape(-1)


def zero_label_block(op: np.ndarray, layout: RegisterLayout, label_wires: Sequence[str]) -> np.ndarray:
    """<0_labels| op |0_labels> acting on the remaining wires."""
    dims = layout.dims
    t = op.reshape(dims + dims)
    idx = []
    for side in (0, 1):
        for name, _ in layout.wires:
            idx.append(0 if name in label_wires else slice(None))
    block = t[tuple(idx)]
    rest = int(np.prod([d for n, d in layout.wires if n not in label_wires]))
    return block.reshape(rest, rest)


# ----------------------------------------------------------------------------
# segment circuits

def _spec_operators(spec: SegmentSpec):
    prog = spec.program
    oracles = [prog.oracle(int(i)) for i in prog.indices]
    return spec.drives, oracles


def qubit_segment_circuit(spec: SegmentSpec, literal_phase: bool = False,
                          preparation: Optional[np.ndarray] = None) -> Circuit:
    """Gadget-by-gadget segment on fudge (x) m control qubits (x) system.

    ``preparation`` replaces the opening layer of control rotations by a
    joint unitary on all control qubits (used for truncated-state analysis).
    """
    m = spec.m
    drives, oracles = _spec_operators(spec)
    layout = RegisterLayout.qubits(m, spec.program.system_dim)
    ctrl = [f"c{i + 1}" for i in range(m)]
    gadgets = spec.gadgets()
    ops: list[Op] = []
    if preparation is None:
        ops += [Gate(c, g.rotation()) for c, g in zip(ctrl, gadgets)]
    elif m:
        ops.append(Gate(ctrl, preparation))
    ops.append(Gate("system", drives[0]))
    for i in range(m):
        ops.append(Controlled(ctrl[i], "system", oracles[i]))
        ops.append(Gate("system", drives[i + 1]))
    for c, g in zip(ctrl, gadgets):
        ops.append(Gate(c, g.phase_gate(literal_phase)))
        ops.append(Gate(c, g.rotation()))
    ops.append(Gate("fudge", spec.fudge()))
    return Circuit(layout, ops)


def qubit_label_wires(m: int) -> list[str]:
    return ["fudge"] + [f"c{i + 1}" for i in range(m)]


ENCODED_LABELS = ("fudge", "ancilla")
MAX_QUBIT_CONTROLS = 14


def encoded_prepare(spec: SegmentSpec, k: int) -> StateVector:
    """Normalised truncated ancilla state over the composition basis; deficit = dropped weight."""
    anc = encoded_ancilla(spec.alphas, k)
    return StateVector(anc.amplitudes.astype(complex), anc.deficit)


def encoded_reflect(spec: SegmentSpec, k: int) -> Circuit:
    """2|0, zeta~><0, zeta~| - I on fudge (x) ancilla, identity on the system."""
    anc = encoded_ancilla(spec.alphas, k)
    layout = RegisterLayout(2, len(anc.basis), 1, spec.program.system_dim)
    v = np.zeros(2 * len(anc.basis), dtype=complex)
    v[:len(anc.basis)] = anc.amplitudes
    return Circuit(layout, [StateReflection(("fudge", "ancilla"), v)])


def encoded_segment_circuit(spec: SegmentSpec, k: int) -> tuple[Circuit, EncodedAncilla]:
    """Truncated segment with the ancilla held in the composition basis.

    Prepare |zeta~> from |0> by a reflection, run the query chain selected by
    the composition (at most k queries), apply the gadget phases, un-prepare
    with the same reflection, then rotate the fudge qubit.
    """
    anc = encoded_ancilla(spec.alphas, k)
    drives, oracles = _spec_operators(spec)
    layout = RegisterLayout(2, len(anc.basis), 1, spec.program.system_dim)
    bits = np.array([anc.bitstring(j) for j in range(len(anc.basis))]).reshape(len(anc.basis), spec.m)
    phase = np.exp(-1j * math.pi * float(np.sum(spec.alphas))) * (1j ** anc.weights)
    prep = Householder("ancilla", anc.amplitudes)
    ops = [
        prep,
        CompositionSelect("ancilla", "system", bits, drives, oracles, queries=k),
        Diagonal("ancilla", phase),
        prep,
        Gate("fudge", spec.fudge()),
    ]
    return Circuit(layout, ops), anc


def oaa_circuit(u: Circuit, label_wires: Sequence[str]) -> Circuit:
    """S U with S = -U R U^dag R and R the zero-label reflection."""
    r = ZeroReflection(label_wires)
    ops = list(u.ops) + [r] + u.inverse().ops + [r] + list(u.ops) + [Phase(-1.0)]
    return Circuit(u.layout, ops)


# ----------------------------------------------------------------------------
# truncation yardstick on the qubit layout

def control_product_state(spec: SegmentSpec) -> np.ndarray:
    """R_{alpha_1}|0> (x) ... (x) R_{alpha_m}|0> over the m control qubits, c1 most significant."""
    zeta = np.ones(1)
    for g in spec.gadgets():
        zeta = np.kron(zeta, g.rotation()[:, 0])
    return zeta


def truncated_preparation(spec: SegmentSpec, k: int) -> np.ndarray:
    """E . R^{(x)m}: prepares the renormalised weight <= k state from |0^m>.

    E is the rotation in the plane of the product state and its truncation
    that carries one onto the other, and the identity elsewhere, so the
    distance between the two preparations is exactly ||E - I||.
    """
    m = spec.m
    if m > MAX_QUBIT_CONTROLS:
        raise ValidationError(f"{m} control qubits exceed the qubit-layout limit {MAX_QUBIT_CONTROLS}")
    zeta = control_product_state(spec)
    weights = np.array([bin(x).count("1") for x in range(1 << m)])
    trunc = np.where(weights <= k, zeta, 0.0)
    norm = np.linalg.norm(trunc)
    if norm == 0:
        raise ValidationError("truncation removes the whole state")
    trunc /= norm
    cos_phi = float(np.clip(zeta @ trunc, -1.0, 1.0))
    perp = trunc - cos_phi * zeta
    sin_phi = float(np.linalg.norm(perp))
    rot = np.eye(1 << m)
    if sin_phi > 0:
        w = perp / sin_phi
        rot += (cos_phi - 1.0) * (np.outer(zeta, zeta) + np.outer(w, w))
        rot += sin_phi * (np.outer(w, zeta) - np.outer(zeta, w))
    full = np.ones((1, 1))
    for g in spec.gadgets():
        full = np.kron(full, g.rotation())
    return rot @ full


def truncation_distance(spec: SegmentSpec, k: int) -> float:
    """||U~ - U|| between the exact qubit segment and the one opened by ``truncated_preparation``.

    Both circuits are applied column block by column block (never stored
    densely); the norm is the top singular value of their difference.
    """
    from scipy.sparse.linalg import LinearOperator, svds

    exact = qubit_segment_circuit(spec)
    approx = qubit_segment_circuit(spec, preparation=truncated_preparation(spec, k))
    exact_inv, approx_inv = exact.inverse(), approx.inverse()
    dim = exact.layout.total_dim

    def matmat(v):
        v = np.asarray(v, dtype=complex).reshape(dim, -1)
        return approx.run(v) - exact.run(v)

    def rmatmat(v):
        v = np.asarray(v, dtype=complex).reshape(dim, -1)
        return approx_inv.run(v) - exact_inv.run(v)

    if dim <= 64:
        return float(np.linalg.norm(matmat(np.eye(dim)), 2))
    op = LinearOperator((dim, dim), matvec=matmat, rmatvec=rmatmat, matmat=matmat, rmatmat=rmatmat,
                        dtype=complex)
    return float(svds(op, k=1, return_singular_vectors=False, random_state=0)[0])


# ----------------------------------------------------------------------------
# zero-label blocks without building the ancilla register

def gadget_weights(alpha: float) -> tuple[complex, complex]:
    g = GadgetParams(alpha)
    return g.c / (g.c + g.s), 1j * g.s / (g.c + g.s)


def truncated_chain_dense(drives, oracles, alphas, k: int) -> np.ndarray:
    """sum over weight <= k strings x of prod_i w(x_i) W(x), by a weight-indexed recursion.

    Generic dense version: arbitrary drives and oracle matrices.
    """
    dim = drives[0].shape[0]
    m = len(oracles)
    coeffs = np.zeros((k + 1, dim, dim), dtype=complex)
    coeffs[0] = drives[0]
    for i in range(m):
        w0, w1 = gadget_weights(float(alphas[i]))
        top = min(i + 1, k)
        for h in range(top, 0, -1):
            coeffs[h] = w0 * coeffs[h] + w1 * (oracles[i] @ coeffs[h - 1])
        coeffs[0] = w0 * coeffs[0]
        coeffs = np.einsum("ij,hjk->hik", drives[i + 1], coeffs)
    return coeffs.sum(axis=0)


def encoded_block(spec: SegmentSpec, k: int) -> np.ndarray:
    """Zero-label block of ``encoded_segment_circuit`` computed without the ancilla register."""
    drives, oracles = _spec_operators(spec)
    delta2 = tail_probability(spec.alphas, k)
    chain = truncated_chain_dense(drives, oracles, spec.alphas, k)
    scale = np.exp(-1j * math.pi * float(np.sum(spec.alphas))) / (2.0 * math.sqrt(spec.p) * (1.0 - delta2))
    return scale * chain


def amplified_block(a: np.ndarray) -> np.ndarray:
    """Zero-label block of S U for any unitary U whose zero-label block is ``a``: 3A - 4 A A^dag A."""
    return 3.0 * a - 4.0 * a @ a.conj().T @ a


def trotter_chain_block(terms, tables: dict, start: int, nsteps: int, alpha: float, k: int,
                        kernel=None) -> np.ndarray:
    """Weight-truncated gadget chain over steps start..start+nsteps-1 of a product formula.

    Step s applies Q = -G_{s mod eta}.  Returns sum_h M_h, the unscaled chain.
    """
    chain = kernel or kernels.chain_accumulate
    dim = terms.dim
    coeffs = np.zeros((k + 1, dim, dim), dtype=complex)
    coeffs[0] = np.eye(dim)
    if nsteps:
        cls, lvl, sign = terms.locate(start % len(terms))
        w0, w1 = gadget_weights(alpha)
        chain(coeffs, tables["perm"], tables["level"], tables["phase"], tables["fill"],
              tables["levels"], cls, lvl, sign, nsteps, complex(w0), complex(w1), -1.0 + 0j, 0)
    return coeffs.sum(axis=0)


@dataclass
class SimReport:
    discrete_queries: int
    predicted_queries: int
    spectral_error: float
    global_phase: complex
    wall_time: float
    isometry_error: float = 0.0
    plus_sector_error: float = 0.0
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.discrete_queries < 0:
            raise ValidationError("negative query count")
        if abs(abs(self.global_phase) - 1.0) > TOL_STRUCT:
            raise ValidationError("global phase must have unit modulus")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["global_phase"] = [self.global_phase.real, self.global_phase.imag]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)
