"""Dense complex linear algebra on small tensor-product Hilbert spaces.

Everything here works on plain ``numpy`` arrays of ``complex128``.  Subsystem
ordering is big-endian: particle 0 is the slowest-varying index, so the joint
basis state ``|abc>`` has index ``a*d1*d2 + b*d2 + c`` for dims ``[d0,d1,d2]``.
Matrices stay dense; the largest space in this package is 12-dimensional.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class SpaceShape:
    """Tensor-product structure of the joint Hilbert space."""

    dims: tuple[int, ...]

    def __init__(self, dims: Sequence[int]):
        dims = tuple(int(d) for d in dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"dims must be positive integers, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n_particles(self) -> int:
        return len(self.dims)

    def index_of(self, config: Sequence[int]) -> int:
        """Joint basis index of a level configuration, big-endian."""
        if len(config) != len(self.dims):
            raise ValueError(f"config {config} does not match dims {self.dims}")
        idx = 0
        for c, d in zip(config, self.dims):
            if not 0 <= c < d:
                raise ValueError(f"level {c} out of range for dimension {d}")
            idx = idx * d + c
        return idx

    def config_of(self, index: int) -> tuple[int, ...]:
        """Inverse of :meth:`index_of`."""
        if not 0 <= index < self.total_dim:
            raise ValueError(f"index {index} out of range")
        levels = []
        for d in reversed(self.dims):
            levels.append(index % d)
            index //= d
        return tuple(reversed(levels))


def as_complex(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(float))):
        raise ValueError("matrix contains non-finite entries")
    return m


def kron(a, b) -> np.ndarray:
    """Kronecker product of two matrices."""
    return np.kron(as_complex(a), as_complex(b))


def embed(op, particle_index: int, shape: SpaceShape) -> np.ndarray:
    """Lift a single-particle operator to the joint space.

    Acts as the identity on every other tensor factor.
    """
    op = as_complex(op)
    dims = shape.dims
    if not 0 <= particle_index < len(dims):
        raise ValueError(f"particle index {particle_index} out of range for {dims}")
    d = dims[particle_index]
    if op.shape != (d, d):
        raise ValueError(
            f"operator shape {op.shape} does not match dimension {d} "
            f"of particle {particle_index}"
        )
    left = int(np.prod(dims[:particle_index], initial=1))
    right = int(np.prod(dims[particle_index + 1:], initial=1))
    return np.kron(np.kron(np.eye(left), op), np.eye(right)).astype(complex)


def partial_trace(rho, traced_particle: int, shape: SpaceShape) -> np.ndarray:
    """Trace out one particle; the result lives on the remaining factors."""
    rho = as_complex(rho)
    dims = shape.dims
    n = shape.total_dim
    if rho.shape != (n, n):
        raise ValueError(f"state shape {rho.shape} does not match total dim {n}")
    if not 0 <= traced_particle < len(dims):
        raise ValueError(f"particle index {traced_particle} out of range for {dims}")
    k = len(dims)
    t = rho.reshape(dims + dims)
    t = np.trace(t, axis1=traced_particle, axis2=k + traced_particle)
    rem = n // dims[traced_particle]
    return t.reshape(rem, rem)


def insert_factor(factor, reduced, particle_index: int, shape: SpaceShape) -> np.ndarray:
    """Tensor a single-particle operator back into its slot.

    ``reduced`` is an operator on the complement of particle ``particle_index``
    (as produced by :func:`partial_trace`); the result lives on the full space.
    """
    factor = as_complex(factor)
    reduced = as_complex(reduced)
    dims = shape.dims
    d = dims[particle_index]
    if factor.shape != (d, d):
        raise ValueError(f"factor shape {factor.shape} does not match dimension {d}")
    left = int(np.prod(dims[:particle_index], initial=1))
    right = int(np.prod(dims[particle_index + 1:], initial=1))
    if reduced.shape != (left * right, left * right):
        raise ValueError(f"reduced shape {reduced.shape} does not match complement")
    r = reduced.reshape(left, right, left, right)
    out = np.einsum("xy,lrms->lxrmys", factor, r)
    return out.reshape(shape.total_dim, shape.total_dim)


class DensityDiagnostics(NamedTuple):
    hermiticity_defect: float
    trace_defect: float
    min_eigenvalue: float


def check_density(rho, tol: float = DEFAULT_TOL) -> DensityDiagnostics:
    """Hermiticity, trace, and positivity defects of a candidate state.

    Returns the three numbers; callers decide pass/fail against ``tol``.
    """
    rho = as_complex(rho)
    if rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    tr = float(abs(np.trace(rho) - 1.0))
    sym = (rho + rho.conj().T) / 2.0
    min_eig = float(np.linalg.eigvalsh(sym)[0])
    return DensityDiagnostics(herm, tr, min_eig)


def is_density(diag: DensityDiagnostics, tol: float = DEFAULT_TOL) -> bool:
    return diag.hermiticity_defect <= tol and diag.trace_defect <= tol and diag.min_eigenvalue >= -tol
