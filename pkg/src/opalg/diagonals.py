"""Tensor elements over a matrix algebra and their diagonal calculus.

A tensor element is a finite formal sum of matrix pairs u (x) v.  The
module builds the telescoping diagonals of a chain, their unitized
companions, certifies the multiplier-bounded approximate-diagonal
conditions, and realizes the expectation x -> sum u_i x v_i induced by a
finite exact diagonal.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .chains import Chain
from .matrices import (
    DEFAULT_TOL,
    CertificationError,
    DimensionError,
    Matrix,
    Tolerance,
    op_norm,
)

__all__ = [
    "TensorElem",
    "build_delta",
    "pi_map",
    "flatten",
    "bimodule_commutator",
    "tensor_norm_bounds",
    "tensor_norm_upper",
    "unitize_diagonal",
    "FiniteDiagonal",
    "expectation_from_diagonal",
    "certify_expectation",
    "ExpectationReport",
    "certify_mbad",
    "MbadElementRecord",
    "MbadReport",
    "full_matrix_diagonal",
    "skew_idempotent_diagonal",
    "expectation_norm_demo",
    "ExpectationDemo",
]


@dataclass(frozen=True)
class TensorElem:
    """Finite formal sum of pairs (u, v), all square of one dimension."""

    terms: tuple[tuple[Matrix, Matrix], ...]
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((u, v) for u, v in self.terms))
        if self.dim < 1:
            raise DimensionError("tensor dimension must be positive")
        for u, v in self.terms:
            if u.shape != (self.dim, self.dim) or v.shape != (self.dim, self.dim):
                raise DimensionError(
                    f"all legs must be {self.dim}x{self.dim}; got {u.shape} and {v.shape}"
                )

    @classmethod
    def of(cls, pairs: Sequence[tuple[Matrix, Matrix]], dim: int | None = None) -> "TensorElem":
        pairs = tuple(pairs)
        if dim is None:
            if not pairs:
                raise DimensionError("cannot infer dimension of an empty tensor element")
            dim = pairs[0][0].rows
        return cls(terms=pairs, dim=dim)

    @classmethod
    def zero(cls, dim: int) -> "TensorElem":
        return cls(terms=(), dim=dim)

    @property
    def backend(self) -> str:
        return "exact" if all(u.is_exact and v.is_exact for u, v in self.terms) else "float"

    def left(self, a: Matrix) -> "TensorElem":
        """Left module action: a . (u (x) v) = (a u) (x) v."""
        self._check_actor(a)
        return TensorElem(terms=tuple((a @ u, v) for u, v in self.terms), dim=self.dim)

    def right(self, a: Matrix) -> "TensorElem":
        """Right module action: (u (x) v) . a = u (x) (v a)."""
        self._check_actor(a)
        return TensorElem(terms=tuple((u, v @ a) for u, v in self.terms), dim=self.dim)

    def _check_actor(self, a: Matrix):
        if a.shape != (self.dim, self.dim):
            raise DimensionError(f"actor must be {self.dim}x{self.dim}, got {a.shape}")

    def scale(self, scalar) -> "TensorElem":
        return TensorElem(terms=tuple((u * scalar, v) for u, v in self.terms), dim=self.dim)

    def __add__(self, other: "TensorElem") -> "TensorElem":
        if self.dim != other.dim:
            raise DimensionError("tensor dimensions differ")
        return TensorElem(terms=self.terms + other.terms, dim=self.dim)

    def __neg__(self) -> "TensorElem":
        return self.scale(-1)

    def __sub__(self, other: "TensorElem") -> "TensorElem":
        return self + (-other)

    def same_element(self, other: "TensorElem") -> bool:
        """Value equality: two sums represent the same element exactly
        when their flattenings agree (exact on exact backends)."""
        if self.dim != other.dim:
            return False
        diff = (self - other).flatten()
        if diff.is_exact:
            return diff.is_zero()
        scale = max(1.0, self.flatten().max_abs(), other.flatten().max_abs())
        return diff.max_abs() <= 1e-12 * scale

    def pi(self) -> Matrix:
        """Linearized multiplication: sum of u @ v."""
        if not self.terms:
            return Matrix.zeros(self.dim, backend="exact")
        acc = self.terms[0][0] @ self.terms[0][1]
        for u, v in self.terms[1:]:
            acc = acc + u @ v
        return acc

    def flatten(self) -> Matrix:
        """Faithful matrix picture: sum of Kronecker products of the legs."""
        if not self.terms:
            return Matrix.zeros(self.dim * self.dim, backend="exact")
        acc = self.terms[0][0].kron(self.terms[0][1])
        for u, v in self.terms[1:]:
            acc = acc + u.kron(v)
        return acc


def pi_map(t: TensorElem) -> Matrix:
    """sum u_i @ v_i for the element sum u_i (x) v_i."""
    return t.pi()


def flatten(t: TensorElem) -> Matrix:
    """Kronecker-sum representation; zero exactly when the element is zero."""
    return t.flatten()


def bimodule_commutator(a: Matrix, t: TensorElem) -> TensorElem:
    """a . t - t . a, as a tensor element with twice the terms of t."""
    left = t.left(a)
    right_neg = TensorElem(terms=tuple((u, -(v @ a)) for u, v in t.terms), dim=t.dim)
    return left + right_neg


def build_delta(chain: Chain, n: int) -> TensorElem:
    """Telescoping diagonal over the chain:
    e_1 (x) e_1 + sum_{j=2..n} (e_j - e_{j-1}) (x) (e_j - e_{j-1})."""
    if not 1 <= n <= chain.m_max:
        raise ValueError(f"diagonal index {n} out of range 1..{chain.m_max}")
    e = chain.idempotents
    terms = [(e[0], e[0])]
    for j in range(2, n + 1):
        diff = e[j - 1] - e[j - 2]
        terms.append((diff, diff))
    return TensorElem.of(terms, dim=chain.truncation_dim)


def _pair_div(a, b):
    """Complex rational division a / b for (re, im) pairs."""
    p, q = a
    r, s = b
    den = Fraction(r * r + s * s)
    if den == 0:
        raise ZeroDivisionError("division by a zero entry")
    return (Fraction(p * r + q * s) / den, Fraction(q * r - p * s) / den)


def _proportionality(a: Matrix, b: Matrix):
    """Scalar c with a == c * b, or None.  Exact on exact backends,
    within roundoff otherwise."""
    if a.shape != b.shape:
        return None
    if a.is_exact and b.is_exact:
        ij = b.first_nonzero()
        if ij is None:
            return None
        c = _pair_div(a.entry(*ij), b.entry(*ij))
        return c if (b * c).equals(a) else None
    af, bf = a.numpy(), b.numpy()
    mags = np.abs(bf)
    if mags.size == 0 or mags.max() == 0:
        return None
    idx = np.unravel_index(np.argmax(mags), bf.shape)
    c = af[idx] / bf[idx]
    scale = max(float(np.abs(af).max()), float(np.abs(c * bf).max()), 1.0)
    if float(np.abs(af - c * bf).max()) <= 1e-12 * scale:
        return complex(c)
    return None


def _merge_left(terms):
    groups: list[list[Matrix]] = []
    for u, v in terms:
        for g in groups:
            c = _proportionality(u, g[0])
            if c is not None:
                g[1] = g[1] + v * c
                break
        else:
            groups.append([u, v])
    return [(u, v) for u, v in groups if not v.is_zero()]


def _merge_right(terms):
    groups: list[list[Matrix]] = []
    for u, v in terms:
        for g in groups:
            c = _proportionality(v, g[1])
            if c is not None:
                g[0] = g[0] + u * c
                break
        else:
            groups.append([u, v])
    return [(u, v) for u, v in groups if not u.is_zero()]


def tensor_norm_upper(t: TensorElem) -> float:
    """Projective-norm upper bound: sum of norm products after one greedy
    regrouping pass per leg (proportional legs are merged)."""
    terms = [(u, v) for u, v in t.terms if not u.is_zero() and not v.is_zero()]
    terms = _merge_left(terms)
    terms = _merge_right(terms)
    return float(sum(op_norm(u) * op_norm(v) for u, v in terms))


def tensor_norm_bounds(t: TensorElem) -> tuple[float, float]:
    """Certified (lower, upper) bracket for the projective tensor norm.

    The lower bound is the operator norm of the flattening, which is
    contractive for the projective norm; the upper bound comes from the
    representation after greedy regrouping.
    """
    lower = op_norm(t.flatten())
    return lower, tensor_norm_upper(t)


def unitize_diagonal(delta: TensorElem, u: Matrix, one: Matrix) -> TensorElem:
    """2*delta - u.delta + (1-u) (x) (1-u), with u the image of delta
    under the multiplication map; its own image is the identity, exactly."""
    pi_d = delta.pi()
    if pi_d.is_exact and u.is_exact:
        if not pi_d.equals(u):
            raise ValueError("u must equal pi_map(delta)")
    elif pi_d.max_abs_diff(u) > 1e-12 * max(1.0, u.max_abs()):
        raise ValueError("u must equal pi_map(delta)")
    terms = [(ui * 2, vi) for ui, vi in delta.terms]
    terms += [(-(u @ ui), vi) for ui, vi in delta.terms]
    rest = one - u
    terms.append((rest, rest))
    unitized = TensorElem.of(terms, dim=delta.dim)
    image = unitized.pi()
    if image.is_exact and one.is_exact:
        ok = image.equals(one)
    else:
        ok = image.max_abs_diff(one) <= 1e-9
    if not ok:
        raise CertificationError("unitized diagonal does not map to the identity")
    return unitized


@dataclass(frozen=True)
class FiniteDiagonal:
    """A tensor element acting as an exact diagonal for a finite algebra:
    its multiplication image is a unit for the span of ``algebra_basis``
    and it commutes with every basis element."""

    diag: TensorElem
    algebra_basis: tuple[Matrix, ...]

    def __post_init__(self):
        object.__setattr__(self, "algebra_basis", tuple(self.algebra_basis))
        self.validate()

    def validate(self, tol: Tolerance = DEFAULT_TOL):
        unit = self.diag.pi()
        exact = self.diag.backend == "exact" and all(a.is_exact for a in self.algebra_basis)
        for k, a in enumerate(self.algebra_basis):
            left, right = unit @ a, a @ unit
            if exact:
                if not (left.equals(a) and right.equals(a)):
                    raise ValueError(f"pi(diag) does not act as identity on basis element {k}")
            elif max(left.max_abs_diff(a), right.max_abs_diff(a)) > tol.abs_tol:
                raise ValueError(f"pi(diag) does not act as identity on basis element {k}")
            comm = bimodule_commutator(a, self.diag).flatten()
            if exact:
                if not comm.is_zero():
                    raise ValueError(f"diag does not commute with basis element {k}")
            elif comm.max_abs() > tol.abs_tol:
                raise ValueError(f"diag does not commute with basis element {k}")


def expectation_from_diagonal(d: FiniteDiagonal, x: Matrix) -> Matrix:
    """E(x) = sum u_i @ x @ v_i over the diagonal's terms."""
    dim = d.diag.dim
    if x.shape != (dim, dim):
        raise DimensionError(f"argument must be {dim}x{dim}, got {x.shape}")
    acc = Matrix.zeros(dim, backend="exact")
    for u, v in d.diag.terms:
        acc = acc + u @ x @ v
    return acc


@dataclass(frozen=True)
class ExpectationReport:
    commutes_with_algebra_dev: float
    fixes_commutant_dev: float
    bimodule_dev: float
    exact: bool
    passed: bool


def certify_expectation(
    d: FiniteDiagonal,
    xs: Sequence[Matrix],
    commutant_sample: Sequence[Matrix],
    tol: Tolerance = DEFAULT_TOL,
) -> ExpectationReport:
    """Check the three expectation properties on concrete samples:
    values land in the commutant, commutant elements are fixed, and
    E(u x v) = u E(x) v for commutant u, v."""
    xs = list(xs)
    comm = list(commutant_sample)
    all_exact = (
        d.diag.backend == "exact"
        and all(m.is_exact for m in xs)
        and all(m.is_exact for m in comm)
    )
    dev_i = 0.0
    for x in xs:
        ex = expectation_from_diagonal(d, x)
        for a in d.algebra_basis:
            dev_i = max(dev_i, (ex @ a - a @ ex).max_abs())
    dev_ii = 0.0
    for u in comm:
        dev_ii = max(dev_ii, expectation_from_diagonal(d, u).max_abs_diff(u))
    dev_iii = 0.0
    for u in comm:
        for v in comm:
            for x in xs:
                lhs = expectation_from_diagonal(d, u @ x @ v)
                rhs = u @ expectation_from_diagonal(d, x) @ v
                dev_iii = max(dev_iii, lhs.max_abs_diff(rhs))
    worst = max(dev_i, dev_ii, dev_iii)
    passed = worst == 0.0 if all_exact else worst <= tol.abs_tol
    return ExpectationReport(
        commutes_with_algebra_dev=dev_i,
        fixes_commutant_dev=dev_ii,
        bimodule_dev=dev_iii,
        exact=all_exact and worst == 0.0,
        passed=passed,
    )


@dataclass(frozen=True)
class MbadElementRecord:
    label: str
    in_span: bool
    identity_coeff: complex
    top_index: int
    final_identity_gap: float
    identity_ok: bool
    commutator_upper: float
    commutator_lower: float
    commutator_ok: bool
    element_constant: float
    unitized_upper: float
    unitized_ok: bool

    def to_json_dict(self, global_k: float) -> dict:
        return {
            "a_label": self.label,
            "in_span": self.in_span,
            "commutator_upper": self.commutator_upper,
            "commutator_lower": self.commutator_lower,
            "C": self.element_constant,
            "K": global_k,
            "pass": self.identity_ok and self.commutator_ok and self.unitized_ok,
        }


@dataclass(frozen=True)
class MbadReport:
    records: tuple[MbadElementRecord, ...]
    multiplier_constant: float
    projection_sup: float
    unitized_constant: float
    verdict: bool

    def to_json_dict(self) -> dict:
        return {
            "schema": "opalg.mbad/1",
            "C": self.multiplier_constant,
            "K": self.projection_sup,
            "unitized_constant": self.unitized_constant,
            "verdict": self.verdict,
            "elements": [r.to_json_dict(self.projection_sup) for r in self.records],
        }


def certify_mbad(
    deltas: Sequence[TensorElem],
    chain: Chain,
    sample: Sequence[Matrix],
    tol: Tolerance = DEFAULT_TOL,
    labels: Sequence[str] | None = None,
) -> MbadReport:
    """Certify the approximate-diagonal conditions on a sample.

    ``deltas`` is read as the increasing diagonal sequence of the chain.
    Per element: the multiplication images eventually act as the
    identity (exactly, once the index passes the element's top chain
    index), commutators with every diagonal vanish, and the unitized
    diagonals obey the multiplier estimate
    (2 + K) C + 2 (1 + K)^2 over the adjoined-unit norm.
    Elements outside span(chain + identity) are flagged, not fatal.
    """
    deltas = list(deltas)
    if not deltas:
        raise ValueError("no diagonals supplied")
    sample = list(sample)
    labels = list(labels) if labels is not None else [f"a{i}" for i in range(len(sample))]
    if len(labels) != len(sample):
        raise ValueError("labels and sample lengths differ")
    dim = chain.truncation_dim
    ident = Matrix.identity(dim, backend=chain.backend)
    pis = [d.pi() for d in deltas]
    k_const = max(op_norm(p) for p in pis)

    basis_cols = [b.numpy().ravel() for b in chain.idempotents] + [ident.numpy().ravel()]
    basis_stack = np.stack(basis_cols, axis=1)
    unitized = [unitize_diagonal(d, p, ident) for d, p in zip(deltas, pis)]

    prelim = []
    c_const = 0.0
    for a, label in zip(sample, labels):
        y = a.numpy().ravel()
        coef, *_ = np.linalg.lstsq(basis_stack, y, rcond=None)
        scale = max(1.0, float(np.abs(y).max()))
        resid = float(np.abs(basis_stack @ coef - y).max())
        in_span = resid <= max(tol.abs_tol, 1e-12) * scale
        top = 0
        for j, c in enumerate(coef[:-1]):
            if abs(c) > 1e-9 * scale:
                top = j + 1
        # every chain idempotent has zero diagonal beyond its ladder rank,
        # so the last diagonal entry reads off the identity coefficient
        corner = a.entry(dim - 1, dim - 1)
        if a.is_exact:
            has_id = corner != (0, 0)
            id_coeff = complex(float(corner[0]), float(corner[1]))
        else:
            has_id = corner != 0
            id_coeff = corner
        a_alg = a - ident * (corner if a.is_exact else id_coeff) if has_id else a
        exact_element = a.is_exact and chain.backend == "exact"

        final_diff = a @ pis[-1] - a
        final_gap = final_diff.max_abs()
        if in_span and not has_id and top <= len(deltas):
            if exact_element:
                identity_ok = final_diff.is_zero()
            else:
                identity_ok = final_gap <= max(tol.abs_tol, 1e-12 * scale)
        else:
            identity_ok = True

        delta_comms, uppers, lowers = [], [], []
        for d in deltas:
            comm = bimodule_commutator(a, d)
            delta_comms.append(comm)
            lo, up = tensor_norm_bounds(comm)
            lowers.append(lo)
            uppers.append(up)
        comm_upper, comm_lower = max(uppers), max(lowers)
        if in_span:
            commutator_ok = comm_upper == 0.0 if exact_element else comm_upper <= tol.abs_tol
        else:
            commutator_ok = True

        alg_norm = op_norm(a_alg) if not a_alg.is_zero() else 0.0
        element_constant = comm_upper / alg_norm if alg_norm > 1e-12 else 0.0
        if in_span:
            c_const = max(c_const, element_constant)

        # the unitized commutator rewrites (for a commuting with u) as
        # 2(a.D - D.a) - u.(a.D - D.a) + w (x) (1-u) - (1-u) (x) w
        # with w = a_alg - a_alg u; certify the rewriting by flattening,
        # then read the multiplier estimate off that representation
        unit_uppers = []
        refined_ok = True
        rewrite_ok = True
        for m_elem, d_comm, up_d, p in zip(unitized, delta_comms, uppers, pis):
            rest = ident - p
            w = a_alg - a_alg @ p
            regrouped = d_comm.scale(2) + (-d_comm.left(p))
            regrouped = regrouped + TensorElem.of([(w, rest), (-rest, w)], dim=dim)
            if in_span:
                direct = bimodule_commutator(a, m_elem).flatten()
                gap = regrouped.flatten() - direct
                if exact_element:
                    rewrite_ok = rewrite_ok and gap.is_zero()
                else:
                    rewrite_ok = rewrite_ok and gap.max_abs() <= max(tol.abs_tol, 1e-9 * scale)
            up_u = tensor_norm_upper(regrouped)
            unit_uppers.append(up_u)
            shrink = op_norm(w) if not w.is_zero() else 0.0
            refined = (2.0 + k_const) * up_d + 2.0 * (1.0 + k_const) * shrink
            if up_u > refined + max(tol.abs_tol, 1e-9 * max(1.0, refined)):
                refined_ok = False
        prelim.append(
            (
                label,
                in_span,
                id_coeff,
                top,
                final_gap,
                identity_ok,
                comm_upper,
                comm_lower,
                commutator_ok,
                element_constant,
                max(unit_uppers),
                refined_ok and rewrite_ok,
                alg_norm,
            )
        )

    unitized_constant = (2.0 + k_const) * c_const + 2.0 * (1.0 + k_const) ** 2
    records = []
    for (label, in_span, id_coeff, top, final_gap, identity_ok, comm_upper, comm_lower,
         commutator_ok, element_constant, unit_upper, refined_ok, alg_norm) in prelim:
        adjoined_norm = alg_norm + abs(id_coeff)
        global_ok = unit_upper <= unitized_constant * adjoined_norm + max(tol.abs_tol, 1e-9 * (1.0 + adjoined_norm))
        unitized_ok = (refined_ok and global_ok) if in_span else True
        records.append(
            MbadElementRecord(
                label=label,
                in_span=in_span,
                identity_coeff=id_coeff,
                top_index=top,
                final_identity_gap=final_gap,
                identity_ok=identity_ok,
                commutator_upper=comm_upper,
                commutator_lower=comm_lower,
                commutator_ok=commutator_ok,
                element_constant=element_constant,
                unitized_upper=unit_upper,
                unitized_ok=unitized_ok,
            )
        )
    verdict = all(r.identity_ok and r.commutator_ok and r.unitized_ok for r in records)
    return MbadReport(
        records=tuple(records),
        multiplier_constant=c_const,
        projection_sup=k_const,
        unitized_constant=unitized_constant,
        verdict=verdict,
    )


def full_matrix_diagonal(n: int) -> FiniteDiagonal:
    """The separating diagonal sum_j e_{j1} (x) e_{1j} of the full n x n
    matrix algebra; the induced expectation maps x to x_11 * identity."""
    units = {}
    for i in range(n):
        for j in range(n):
            grid = [[0] * n for _ in range(n)]
            grid[i][j] = 1
            units[(i, j)] = Matrix.exact(grid)
    terms = [(units[(j, 0)], units[(0, j)]) for j in range(n)]
    basis = tuple(units[(i, j)] for i in range(n) for j in range(n))
    return FiniteDiagonal(diag=TensorElem.of(terms, dim=n), algebra_basis=basis)


def skew_idempotent_diagonal(t) -> FiniteDiagonal:
    """Diagonal e (x) e + (1-e) (x) (1-e) for the skew idempotent
    e = [[1, t], [0, 0]] over the algebra spanned by the identity and e."""
    e = Matrix.exact([[1, t], [0, 0]])
    one = Matrix.identity(2)
    rest = one - e
    diag = TensorElem.of([(e, e), (rest, rest)])
    return FiniteDiagonal(diag=diag, algebra_basis=(one, e))


@dataclass(frozen=True)
class ExpectationDemo:
    skew: Matrix
    range_projection: Matrix
    expected: Matrix
    matches_exactly: bool
    skew_norm: float
    expectation_norm: float


def expectation_norm_demo(t) -> ExpectationDemo:
    """Apply the expectation of the skew-idempotent diagonal to the
    orthogonal projection onto the idempotent's range; the result is the
    idempotent itself, so the expectation's norm dominates its norm."""
    d = skew_idempotent_diagonal(t)
    e = d.algebra_basis[1]
    p = Matrix.diag([1, 0])
    ep = expectation_from_diagonal(d, p)
    return ExpectationDemo(
        skew=e,
        range_projection=p,
        expected=ep,
        matches_exactly=ep.equals(e),
        skew_norm=op_norm(e),
        expectation_norm=op_norm(ep),
    )
