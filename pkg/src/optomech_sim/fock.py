"""Truncated Fock-space linear algebra.

Every mode is represented by its lowest ``dim`` number states. Composite
systems are ordered Kronecker products; by convention the cavity occupies the
first slot and the mechanical mode the second, and all index arithmetic
(partial traces, vectorisation) derives from that order.

Operators and states are dense, immutable ``complex128`` arrays tagged with the
space they act on. Truncation artefacts such as the ``-(dim - 1)`` corner of
``[a, a†]`` are left visible on purpose; state constructors instead report the
probability mass lost to truncation and refuse to build states that lose more
than :data:`LEAKAGE_TOL`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence, Union

import numpy as np
import scipy.linalg

from .errors import (
    IndexOutOfRange,
    InvalidState,
    NonFinite,
    SpaceMismatch,
    TruncationTooSmall,
    UnknownSlot,
)

LEAKAGE_TOL = 1e-6


@dataclass(frozen=True)
class TruncatedSpace:
    """A single bosonic mode kept up to ``dim - 1`` quanta."""

    dim: int
    label: str = "cavity"

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"dim must be an integer >= 2, got {self.dim!r}")


@dataclass(frozen=True)
class CompositeSpace:
    """Ordered tensor product of truncated modes."""

    slots: tuple[TruncatedSpace, ...]

    def __post_init__(self):
        slots = tuple(self.slots)
        object.__setattr__(self, "slots", slots)
        if not slots:
            raise ValueError("a composite space needs at least one slot")
        labels = [s.label for s in slots]
        if len(set(labels)) != len(labels):
            raise ValueError(f"slot labels must be unique, got {labels}")

    @classmethod
    def of(cls, *slots: TruncatedSpace) -> "CompositeSpace":
        return cls(tuple(slots))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.slots)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.slots)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownSlot(f"no slot labelled {label!r} in {self.labels}") from None

    def slot(self, label: str) -> TruncatedSpace:
        return self.slots[self.index(label)]


SpaceLike = Union[TruncatedSpace, CompositeSpace]


def as_composite(space: SpaceLike) -> CompositeSpace:
    if isinstance(space, CompositeSpace):
        return space
    if isinstance(space, TruncatedSpace):
        return CompositeSpace((space,))
    raise TypeError(f"expected a space, got {type(space).__name__}")


def _frozen(data: np.ndarray) -> np.ndarray:
    data.setflags(write=False)
    return data


class Operator:
    """Square complex matrix acting on a (composite) truncated space."""

    __slots__ = ("space", "data")
    __array_priority__ = 1000

    def __init__(self, space: SpaceLike, data, *, check: bool = True):
        space = as_composite(space)
        data = np.array(data, dtype=np.complex128)
        if data.shape != (space.dim, space.dim):
            raise SpaceMismatch(
                f"matrix of shape {data.shape} does not fit space of dim {space.dim}"
            )
        if check and not np.all(np.isfinite(data)):
            raise NonFinite("operator entries must be finite")
        self.space = space
        self.data = _frozen(data)

    def __repr__(self):
        return f"Operator(dims={self.space.dims}, labels={self.space.labels})"

    def _same_space(self, other: "Operator"):
        if not isinstance(other, Operator):
            return NotImplemented
        if other.space != self.space:
            raise SpaceMismatch(f"{self.space.labels}{self.space.dims} vs "
                                f"{other.space.labels}{other.space.dims}")
        return None

    def __add__(self, other):
        if self._same_space(other) is NotImplemented:
            return NotImplemented
        return Operator(self.space, self.data + other.data, check=False)

    def __sub__(self, other):
        if self._same_space(other) is NotImplemented:
            return NotImplemented
        return Operator(self.space, self.data - other.data, check=False)

    def __neg__(self):
        return Operator(self.space, -self.data, check=False)

    def __mul__(self, scalar):
        if isinstance(scalar, Operator):
            return self @ scalar
        if not np.isscalar(scalar):
            return NotImplemented
        return Operator(self.space, complex(scalar) * self.data)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __matmul__(self, other):
        if isinstance(other, PureState):
            if other.space != self.space:
                raise SpaceMismatch("operator and state live on different spaces")
            return self.data @ other.amplitudes
        if self._same_space(other) is NotImplemented:
            return NotImplemented
        return Operator(self.space, self.data @ other.data, check=False)

    def dag(self) -> "Operator":
        return Operator(self.space, self.data.conj().T, check=False)

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def norm(self, ord=1) -> float:
        return float(np.linalg.norm(self.data, ord))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.data - self.data.conj().T)))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return self.hermiticity_error() <= tol


def commutator(x: Operator, y: Operator) -> Operator:
    return x @ y - y @ x


def identity(space: SpaceLike) -> Operator:
    space = as_composite(space)
    return Operator(space, np.eye(space.dim), check=False)


def zero(space: SpaceLike) -> Operator:
    space = as_composite(space)
    return Operator(space, np.zeros((space.dim, space.dim)), check=False)


def destroy(space: TruncatedSpace) -> Operator:
    """Annihilation operator with ``<n-1|a|n> = sqrt(n)``."""
    return Operator(space, np.diag(np.sqrt(np.arange(1, space.dim)), k=1), check=False)


def create(space: TruncatedSpace) -> Operator:
    return destroy(space).dag()


def number(space: TruncatedSpace) -> Operator:
    return Operator(space, np.diag(np.arange(space.dim, dtype=float)), check=False)


def parity(space: TruncatedSpace) -> Operator:
    return Operator(space, np.diag((-1.0) ** np.arange(space.dim)), check=False)


def matrix_exponential(x: Operator) -> Operator:
    """``exp(X)`` by Padé scaling and squaring."""
    if not np.all(np.isfinite(x.data)):
        raise NonFinite("cannot exponentiate a matrix with NaN/Inf entries")
    return Operator(x.space, scipy.linalg.expm(x.data))


def displace(space: TruncatedSpace, alpha: complex) -> Operator:
    a = destroy(space)
    return matrix_exponential(alpha * a.dag() - np.conj(alpha) * a)



class Displacer:
    """Displacement operators ``D(z)`` evaluated in a ``pad``-level Fock space.

    A complex displacement factors as ``D(z) = R D(|z|) R†`` with the phase
    rotation ``R = exp(i arg(z) n)``, so one Hermitian eigendecomposition serves
    every ``z``. Callers slice the leading block they need; ``pad`` must exceed
    the block size by enough levels to hold the displaced states.
    """

    def __init__(self, pad: int):
        a = np.diag(np.sqrt(np.arange(1, pad)), 1)
        # r (a† - a) = i r G with G = -i (a† - a) Hermitian
        self.lam, self.V = np.linalg.eigh(-1j * (a.T - a))
        self.pad = pad

    def rows(self, n_rows: int, radii: np.ndarray) -> np.ndarray:
        """``D(r)[:n_rows, :]`` for every real radius, shape ``(len(radii), n_rows, pad)``."""
        ph = np.exp(1j * np.outer(radii, self.lam))
        return (self.V[None, :n_rows, :] * ph[:, None, :]) @ self.V.conj().T

    def block(self, z: complex, size: int) -> np.ndarray:
        """Leading ``size x size`` block of ``D(z)``."""
        r, phi = abs(z), np.angle(z)
        d = self.rows(size, np.array([r]))[0][:, :size]
        rot = np.exp(1j * phi * np.arange(size))
        return rot[:, None] * d * rot.conj()[None, :]

    def boundary_weight(self, n_rows: int, r: float) -> float:
        """Largest weight any of the first ``n_rows`` columns puts on the top two levels."""
        rows = self.rows(n_rows, np.array([r]))[0]
        return float(np.max(np.sum(np.abs(rows[:, -2:]) ** 2, axis=1)))


# --------------------------------------------------------------------------- #
#                                   States                                    #
# --------------------------------------------------------------------------- #


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalised state vector. ``leakage`` is the mass cut by truncation."""

    space: CompositeSpace
    amplitudes: np.ndarray
    leakage: float = 0.0

    def __post_init__(self):
        space = as_composite(self.space)
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != space.dim:
            raise SpaceMismatch(f"{amps.size} amplitudes for a space of dim {space.dim}")
        norm = np.linalg.norm(amps)
        if not np.isfinite(norm) or norm == 0:
            raise InvalidState("state vector has zero or non-finite norm")
        amps = amps / norm
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "amplitudes", _frozen(amps))

    def dm(self) -> "DensityMatrix":
        a = self.amplitudes
        return DensityMatrix(self.space, np.outer(a, a.conj()), check=False)

    def overlap(self, other: "PureState") -> complex:
        if other.space != self.space:
            raise SpaceMismatch("states live on different spaces")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


class DensityMatrix:
    """Trace-one, Hermitian, positive matrix on a composite space."""

    __slots__ = ("space", "data")

    def __init__(self, space: SpaceLike, data, *, check: bool = True,
                 herm_tol: float = 1e-10, trace_tol: float = 1e-8, pos_tol: float = 1e-8):
        space = as_composite(space)
        data = np.array(data, dtype=np.complex128)
        if data.shape != (space.dim, space.dim):
            raise SpaceMismatch(
                f"matrix of shape {data.shape} does not fit space of dim {space.dim}"
            )
        self.space = space
        self.data = _frozen(data)
        if check:
            self.validate(herm_tol, trace_tol, pos_tol)

    def __repr__(self):
        return f"DensityMatrix(dims={self.space.dims}, labels={self.space.labels})"

    def validate(self, herm_tol=1e-10, trace_tol=1e-8, pos_tol=1e-8) -> "DensityMatrix":
        d = self.data
        if not np.all(np.isfinite(d)):
            raise InvalidState("density matrix has non-finite entries")
        herm = float(np.max(np.abs(d - d.conj().T)))
        if herm > herm_tol:
            raise InvalidState(f"not Hermitian: max|rho - rho^H| = {herm:.3e}")
        tr = np.trace(d)
        if abs(tr - 1) > trace_tol:
            raise InvalidState(f"trace {tr:.12g} differs from 1")
        min_eig = float(np.linalg.eigvalsh(0.5 * (d + d.conj().T))[0])
        if min_eig < -pos_tol:
            raise InvalidState(f"negative eigenvalue {min_eig:.3e}")
        return self

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def purity(self) -> float:
        return float(np.real(np.vdot(self.data, self.data)))

    def dag(self) -> "DensityMatrix":
        return DensityMatrix(self.space, self.data.conj().T, check=False)


StateLike = Union[PureState, DensityMatrix]


def as_density(state: StateLike) -> DensityMatrix:
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, PureState):
        return state.dm()
    raise TypeError(f"expected a state, got {type(state).__name__}")


def _guard_leakage(leakage: float, what: str, tol: float = LEAKAGE_TOL):
    if leakage > tol:
        raise TruncationTooSmall(
            f"{what}: truncation discards probability {leakage:.3e} (> {tol:g}); "
            "increase the Fock dimension"
        )


def coherent_amplitudes(dim: int, alpha: complex) -> np.ndarray:
    """Unnormalised Poisson amplitudes ``exp(-|a|^2/2) a^n / sqrt(n!)``."""
    c = np.empty(dim, dtype=np.complex128)
    c[0] = np.exp(-abs(alpha) ** 2 / 2)
    for n in range(1, dim):
        c[n] = c[n - 1] * alpha / np.sqrt(n)
    return c


def coherent_state(space: TruncatedSpace, alpha: complex,
                   leakage_tol: float = LEAKAGE_TOL) -> PureState:
    c = coherent_amplitudes(space.dim, alpha)
    leakage = max(0.0, 1.0 - float(np.sum(np.abs(c) ** 2)))
    _guard_leakage(leakage, f"coherent state alpha={alpha}", leakage_tol)
    return PureState(as_composite(space), c, leakage=leakage)


def fock_state(space: TruncatedSpace, n: int) -> PureState:
    if not 0 <= n < space.dim:
        raise IndexOutOfRange(f"Fock level {n} outside 0..{space.dim - 1}")
    c = np.zeros(space.dim, dtype=np.complex128)
    c[n] = 1.0
    return PureState(as_composite(space), c)


def thermal_state(space: TruncatedSpace, nbar: float,
                  leakage_tol: float = LEAKAGE_TOL) -> DensityMatrix:
    if nbar < 0:
        raise ValueError(f"mean occupation must be >= 0, got {nbar}")
    if nbar == 0:
        return fock_state(space, 0).dm()
    q = nbar / (1.0 + nbar)
    p = (1 - q) * q ** np.arange(space.dim)
    _guard_leakage(q ** space.dim, f"thermal state nbar={nbar}", leakage_tol)
    return DensityMatrix(space, np.diag(p / p.sum()), check=False)


# --------------------------------------------------------------------------- #
#                          Tensor products and traces                         #
# --------------------------------------------------------------------------- #


def _join(spaces: Iterable[CompositeSpace]) -> CompositeSpace:
    return CompositeSpace(tuple(s for sp in spaces for s in sp.slots))


def tensor(*items):
    """Kronecker product in slot order of operators or of states."""
    if len(items) == 1 and isinstance(items[0], (list, tuple)):
        items = tuple(items[0])
    if not items:
        raise ValueError("tensor() needs at least one factor")
    space = _join(as_composite(x.space) for x in items)
    if all(isinstance(x, Operator) for x in items):
        return Operator(space, reduce(np.kron, [x.data for x in items]), check=False)
    if all(isinstance(x, PureState) for x in items):
        return PureState(space, reduce(np.kron, [x.amplitudes for x in items]),
                         leakage=1 - np.prod([1 - x.leakage for x in items]))
    if all(isinstance(x, (PureState, DensityMatrix)) for x in items):
        return DensityMatrix(space, reduce(np.kron, [as_density(x).data for x in items]),
                             check=False)
    raise TypeError("tensor() factors must all be operators or all be states")


def embed(op: Operator, label: str, comp: CompositeSpace) -> Operator:
    """Lift a single-mode operator into ``comp`` with identities elsewhere."""
    if len(op.space.slots) != 1:
        raise SpaceMismatch("embed() expects a single-mode operator")
    idx = comp.index(label)
    if comp.slots[idx] != op.space.slots[0]:
        raise SpaceMismatch(f"operator space {op.space.slots[0]} != slot {comp.slots[idx]}")
    mats = [np.eye(s.dim) for s in comp.slots]
    mats[idx] = op.data
    return Operator(comp, reduce(np.kron, mats), check=False)


def partial_trace(rho: StateLike, keep: Union[str, Sequence[str]]) -> DensityMatrix:
    """Reduced state on the slot(s) named in ``keep``."""
    rho = as_density(rho)
    comp = rho.space
    keep = [keep] if isinstance(keep, str) else list(keep)
    keep_idx = sorted(comp.index(k) for k in keep)
    dims = comp.dims
    n = len(dims)
    t = rho.data.reshape(dims + dims)
    # einsum subscripts: traced slots share the same letter on ket and bra
    letters = "abcdefghijklmnopqrstuvwxyz"
    ket = [letters[i] for i in range(n)]
    bra = [letters[i] if i not in keep_idx else letters[n + i] for i in range(n)]
    out = [ket[i] for i in keep_idx] + [bra[i] for i in keep_idx]
    red = np.einsum(f"{''.join(ket)}{''.join(bra)}->{''.join(out)}", t)
    kept = CompositeSpace(tuple(comp.slots[i] for i in keep_idx))
    return DensityMatrix(kept, red.reshape(kept.dim, kept.dim), check=False)


def expectation(rho: StateLike, x: Operator) -> complex:
    """``Tr(rho X)``."""
    if isinstance(rho, PureState):
        if rho.space != x.space:
            raise SpaceMismatch("state and operator live on different spaces")
        return complex(np.vdot(rho.amplitudes, x.data @ rho.amplitudes))
    rho = as_density(rho)
    if rho.space != x.space:
        raise SpaceMismatch("state and operator live on different spaces")
    return complex(np.sum(rho.data * x.data.T))


def level_populations(rho: StateLike, label: str) -> np.ndarray:
    """Fock-level occupation probabilities of one slot."""
    red = partial_trace(rho, label)
    return np.real(np.diag(red.data))


@dataclass(frozen=True)
class ModeOps:
    """Ladder operators of the (cavity, mechanics) pair embedded in the product space."""

    space: CompositeSpace
    a: Operator
    b: Operator
    n_a: Operator = field(repr=False)
    n_b: Operator = field(repr=False)

    @classmethod
    def build(cls, cavity_dim: int, mech_dim: int) -> "ModeOps":
        cav = TruncatedSpace(cavity_dim, "cavity")
        mech = TruncatedSpace(mech_dim, "mech")
        comp = CompositeSpace.of(cav, mech)
        a = embed(destroy(cav), "cavity", comp)
        b = embed(destroy(mech), "mech", comp)
        return cls(comp, a, b, embed(number(cav), "cavity", comp),
                   embed(number(mech), "mech", comp))

    @property
    def cavity(self) -> TruncatedSpace:
        return self.space.slot("cavity")

    @property
    def mech(self) -> TruncatedSpace:
        return self.space.slot("mech")
