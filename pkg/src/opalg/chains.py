"""Semilattice chains of idempotents on a truncated sequence space.

A chain is built from an ascending ladder of subspace dimensions and a
coupling block per even index.  Odd entries are orthogonal projections,
even entries add an off-diagonal coupling, and every pair multiplies by
the min rule: the product of the m-th and n-th idempotents is the
min(m, n)-th one, exactly.
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .matrices import (
    DEFAULT_TOL,
    CertificationError,
    Matrix,
    Tolerance,
    is_idempotent,
    op_norm,
)

__all__ = [
    "TruncationError",
    "ChainSpec",
    "Chain",
    "build_chain",
    "verify_semilattice",
    "SemilatticeReport",
    "norm_profile",
    "NormEntry",
    "chain_to_json",
    "chain_from_json",
]


class TruncationError(ValueError):
    """The supplied dimension ladder is too short for the requested chain."""


def required_ladder_length(m_max: int) -> int:
    """Smallest odd index >= m_max + 1; the ladder must reach this far."""
    n = m_max + 1
    return n if n % 2 == 1 else n + 1


def _rectangular_identity_times(scalar, rows, cols):
    grid = [[0] * cols for _ in range(rows)]
    for i in range(min(rows, cols)):
        grid[i][i] = 1
    m = Matrix.exact(grid)
    if isinstance(scalar, float):
        return m.to_float() * scalar
    return m * scalar


def _as_coupling(raw, rows, cols, index):
    """Normalize a coupling to a rows x cols Matrix block."""
    if isinstance(raw, Matrix):
        block = raw
    elif isinstance(raw, (list, tuple)) and raw and isinstance(raw[0], (list, tuple)):
        block = Matrix.exact(raw)
    elif isinstance(raw, (int, Fraction)) or isinstance(raw, numbers.Integral):
        block = _rectangular_identity_times(raw, rows, cols)
    elif isinstance(raw, float):
        block = _rectangular_identity_times(raw, rows, cols)
    else:
        raise TypeError(f"coupling b_{2 * index} must be a scalar or a matrix, got {type(raw).__name__}")
    if block.shape != (rows, cols):
        raise ValueError(
            f"coupling b_{2 * index} must map the gap above H_{2 * index} into the gap "
            f"below it: expected shape {(rows, cols)}, got {block.shape}"
        )
    return block


@dataclass(frozen=True)
class ChainSpec:
    """Ladder of subspace dimensions plus one coupling per even index.

    ``dims[k-1]`` is the dimension of the k-th subspace; couplings are
    stored as rectangular blocks (scalars are promoted to scalar times a
    rectangular identity).
    """

    m_max: int
    dims: tuple[int, ...]
    couplings: tuple[Matrix, ...]

    def __post_init__(self):
        if self.m_max < 1:
            raise ValueError("m_max must be at least 1")
        dims = tuple(int(d) for d in self.dims)
        if not dims or dims[0] < 1 or any(b <= a for a, b in zip(dims, dims[1:])):
            raise ValueError("dims must be strictly increasing positive integers")
        need = required_ladder_length(self.m_max)
        if len(dims) < need:
            raise TruncationError(
                f"building e_1..e_{self.m_max} requires the ladder up to H_{need} "
                f"(ambient dimension dims[{need - 1}]); got only {len(dims)} entries"
            )
        n_couplings = self.m_max // 2
        couplings = tuple(
            _as_coupling(raw, dims[2 * k - 1] - dims[2 * k - 2], dims[2 * k] - dims[2 * k - 1], k)
            for k, raw in enumerate(self.couplings, start=1)
        )
        if len(couplings) != n_couplings:
            raise ValueError(f"need exactly {n_couplings} couplings for m_max={self.m_max}, got {len(couplings)}")
        norms = [op_norm(b) if b.rows and b.cols else 0.0 for b in couplings]
        if any(b < a - 1e-12 for a, b in zip(norms, norms[1:])):
            raise ValueError("coupling norms must be nondecreasing")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "couplings", couplings)

    @classmethod
    def default(cls, m_max: int, couplings=None, dims=None) -> "ChainSpec":
        """Unit dimension gaps; couplings default to b_{2k} = k."""
        need = required_ladder_length(m_max)
        if dims is None:
            dims = tuple(range(1, need + 1))
        if couplings is None:
            couplings = tuple(range(1, m_max // 2 + 1))
        return cls(m_max=m_max, dims=tuple(dims), couplings=tuple(couplings))

    @property
    def backend(self) -> str:
        return "exact" if all(b.is_exact for b in self.couplings) else "float"

    @property
    def truncation_dim(self) -> int:
        return self.dims[required_ladder_length(self.m_max) - 1]


@dataclass(frozen=True)
class Chain:
    """A realized chain: the spec plus the idempotent matrices e_1..e_m."""

    spec: ChainSpec
    idempotents: tuple[Matrix, ...]
    truncation_dim: int

    @property
    def m_max(self) -> int:
        return self.spec.m_max

    @property
    def backend(self) -> str:
        return self.spec.backend

    def e(self, n: int) -> Matrix:
        """The n-th idempotent, 1-based."""
        if not 1 <= n <= self.m_max:
            raise IndexError(f"chain index {n} out of range 1..{self.m_max}")
        return self.idempotents[n - 1]


def _build_idempotent(spec: ChainSpec, n: int) -> Matrix:
    dim = spec.truncation_dim
    exact = spec.backend == "exact"
    if n % 2 == 1:
        rank = spec.dims[n - 1]
        values = [1] * rank + [0] * (dim - rank)
        return Matrix.diag(values, backend="exact" if exact else "float")
    k = n // 2
    block = spec.couplings[k - 1]
    rank = spec.dims[n - 1]
    row_lo, row_hi = spec.dims[n - 2], spec.dims[n - 1]
    col_lo = spec.dims[n - 1]
    if exact:
        grid = [[(0, 0)] * dim for _ in range(dim)]
        for i in range(rank):
            grid[i][i] = (1, 0)
        for i in range(row_hi - row_lo):
            for j in range(block.cols):
                grid[row_lo + i][col_lo + j] = block.entry(i, j)
        return Matrix.exact(grid)
    arr = block.numpy()
    full = np.zeros((dim, dim), dtype=complex)
    for i in range(rank):
        full[i, i] = 1.0
    full[row_lo:row_hi, col_lo : col_lo + block.cols] = arr
    return Matrix.from_float(full)


def build_chain(spec: ChainSpec) -> Chain:
    """Realize the chain on its truncation and check idempotency."""
    mats = tuple(_build_idempotent(spec, n) for n in range(1, spec.m_max + 1))
    exact = spec.backend == "exact"
    for n, m in enumerate(mats, start=1):
        ok = is_idempotent(m, Tolerance.exact() if exact else DEFAULT_TOL)
        if not ok:
            raise CertificationError(f"constructed e_{n} failed its idempotency check")
    return Chain(spec=spec, idempotents=mats, truncation_dim=spec.truncation_dim)


@dataclass(frozen=True)
class SemilatticeReport:
    pairs_checked: int
    all_exact: bool
    mode: str
    max_abs_deviation: float
    passed: bool


def verify_semilattice(chain: Chain, tol: Tolerance = DEFAULT_TOL) -> SemilatticeReport:
    """Check e_m @ e_n == e_min(m, n) over every ordered pair.

    Exact chains are checked entrywise with zero tolerance; float chains
    fall back to the tolerance and are flagged as approximate.
    """
    mats = chain.idempotents
    m = chain.m_max
    exact = chain.backend == "exact"
    all_exact = exact
    max_dev = 0.0
    for i in range(m):
        for j in range(m):
            prod = mats[i] @ mats[j]
            target = mats[min(i, j)]
            if exact:
                if not prod.equals(target):
                    all_exact = False
                    max_dev = max(max_dev, prod.max_abs_diff(target))
            else:
                max_dev = max(max_dev, prod.max_abs_diff(target))
    passed = all_exact if exact else max_dev <= tol.abs_tol
    return SemilatticeReport(
        pairs_checked=m * m,
        all_exact=all_exact,
        mode="exact" if exact else "approx",
        max_abs_deviation=max_dev,
        passed=passed,
    )


@dataclass(frozen=True)
class NormEntry:
    index: int
    norm: float
    lower: float
    predicted: float
    ok: bool


def norm_profile(chain: Chain, tol: Tolerance = DEFAULT_TOL) -> tuple[NormEntry, ...]:
    """Operator norm of each idempotent.

    Odd entries must have norm 1 (within tol); even entries are bounded
    below by the coupling norm and, in block form, equal
    sqrt(1 + |b|^2), reported as ``predicted``.
    """
    out = []
    for n, m in enumerate(chain.idempotents, start=1):
        norm = op_norm(m)
        if n % 2 == 1:
            lower, predicted = 1.0, 1.0
            ok = abs(norm - 1.0) <= tol.abs_tol
        else:
            bnorm = op_norm(chain.spec.couplings[n // 2 - 1])
            lower, predicted = bnorm, math.sqrt(1.0 + bnorm * bnorm)
            ok = norm >= bnorm - tol.abs_tol
        out.append(NormEntry(index=n, norm=norm, lower=lower, predicted=predicted, ok=ok))
    return tuple(out)


def chain_to_json(chain: Chain) -> dict:
    """JSON document with dense entries as rational strings."""
    return {
        "schema": "opalg.chain/1",
        "m_max": chain.m_max,
        "dims": list(chain.spec.dims),
        "backend": chain.backend,
        "truncation_dim": chain.truncation_dim,
        "couplings": [b.to_rational_strings() for b in chain.spec.couplings],
        "idempotents": [m.to_rational_strings() for m in chain.idempotents],
    }


def chain_from_json(doc: dict) -> Chain:
    """Rebuild a chain from :func:`chain_to_json` output and re-verify it."""
    if doc.get("schema") != "opalg.chain/1":
        raise ValueError(f"unrecognized chain document schema {doc.get('schema')!r}")
    backend = doc["backend"]
    couplings = tuple(Matrix.from_rational_strings(b, backend=backend) for b in doc["couplings"])
    spec = ChainSpec(m_max=doc["m_max"], dims=tuple(doc["dims"]), couplings=couplings)
    chain = build_chain(spec)
    stored = [Matrix.from_rational_strings(m, backend=backend) for m in doc["idempotents"]]
    for built, loaded in zip(chain.idempotents, stored):
        if not built.equals(loaded):
            raise CertificationError("stored idempotents disagree with the rebuilt chain")
    return chain
