"""Rank-one idempotents on l2({alpha, omega, 1, 2, ...}) and the induced
embedding of summable sequences into a product of matrix blocks.

For each n the vectors x_n = e_omega + e_alpha + e_n and
y_n = e_omega - e_alpha + e_n give a rank-one idempotent E_n = y_n x_n*
of norm 3, with E_j E_k = 0 for j != k.  A finitely supported sequence a
embeds as the family of blocks sum_{j in F} a_j E_j over finite index
sets F, and the block sup norm is pinned between ||a||_1 / pi and
3 ||a||_1; the lower bound rests on maximizing |sum_{j in F} a_j| over
subsets, solved exactly by a half-plane sweep.
"""
from __future__ import annotations

import cmath
import math
import numbers
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .matrices import (
    DEFAULT_TOL,
    CertificationError,
    Matrix,
    Tolerance,
    op_norm,
    schatten1_norm,
)

__all__ = [
    "RankOneFamily",
    "build_E",
    "certify_E_family",
    "EFamilyReport",
    "SubsetFamily",
    "EmbeddedElement",
    "phi",
    "phi_sup_norm",
    "best_subset_sum",
    "brute_force_best_subset",
    "unit_circle_sweep_ratios",
    "TraceWeights",
    "make_trace",
    "l1_trace_norm",
    "certify_embedding_bounds",
    "EmbeddingReport",
]

_ALPHA = 0
_OMEGA = 1


def _coordinate(j: int) -> int:
    """Ambient coordinate of sequence index j under the order
    (alpha, omega, 1, 2, ...)."""
    return j + 1


def _xy_components(n: int, dim: int):
    x = [0] * dim
    y = [0] * dim
    x[_ALPHA], x[_OMEGA], x[_coordinate(n)] = 1, 1, 1
    y[_ALPHA], y[_OMEGA], y[_coordinate(n)] = -1, 1, 1
    return x, y


def build_E(n: int, n_max: int) -> Matrix:
    """The rank-one idempotent y_n x_n* on the (n_max + 2)-dimensional
    ambient space, as an exact integer matrix."""
    if not 1 <= n <= n_max:
        raise IndexError(f"index {n} out of range 1..{n_max}")
    dim = n_max + 2
    x, y = _xy_components(n, dim)
    return Matrix.exact([[y[i] * x[j] for j in range(dim)] for i in range(dim)])


@dataclass(frozen=True)
class RankOneFamily:
    """The idempotents E_1..E_n_max on their shared ambient space."""

    n_max: int
    idempotents: tuple[Matrix, ...]

    @classmethod
    def build(cls, n_max: int) -> "RankOneFamily":
        if n_max < 1:
            raise ValueError("n_max must be at least 1")
        return cls(n_max=n_max, idempotents=tuple(build_E(n, n_max) for n in range(1, n_max + 1)))

    @property
    def ambient_dim(self) -> int:
        return self.n_max + 2

    def E(self, n: int) -> Matrix:
        if not 1 <= n <= self.n_max:
            raise IndexError(f"index {n} out of range 1..{self.n_max}")
        return self.idempotents[n - 1]


@dataclass(frozen=True)
class EFamilyReport:
    n_max: int
    max_norm_error: float
    norms_ok: bool
    idempotent: bool
    pairwise_zero: bool
    range_contained: bool
    witness_trials: int
    witness_exact: bool
    witness_dominated: bool
    passed: bool


def certify_E_family(
    fam: RankOneFamily,
    trials: int = 100,
    seed: int = 0,
    tol: Tolerance = DEFAULT_TOL,
) -> EFamilyReport:
    """Certify the family: each norm equals 3, squares and cross products
    are exact, ranges stay inside span(e_alpha, e_omega, e_n), and the
    omega diagonal entry of any combination equals the coefficient sum
    (exactly, via seeded trials), which the operator norm dominates."""
    mats = fam.idempotents
    dim = fam.ambient_dim
    max_norm_error = max(abs(op_norm(m) - 3.0) for m in mats)
    norms_ok = max_norm_error <= tol.abs_tol
    idem = all((m @ m).equals(m) for m in mats)
    pairwise = all(
        (mats[i] @ mats[j]).is_zero() for i in range(len(mats)) for j in range(len(mats)) if i != j
    )
    contained = True
    for n, m in enumerate(mats, start=1):
        allowed = {_ALPHA, _OMEGA, _coordinate(n)}
        for i in range(dim):
            for j in range(dim):
                re, im = m.entry(i, j)
                if (re != 0 or im != 0) and (i not in allowed or j not in allowed):
                    contained = False
    rng = np.random.default_rng(seed)
    witness_exact = True
    witness_dominated = True
    int_mats = [np.array([[int(m.entry(i, j)[0]) for j in range(dim)] for i in range(dim)], dtype=object)
                for m in mats]
    for _ in range(trials):
        re = rng.uniform(-1.0, 1.0, fam.n_max)
        im = rng.uniform(-1.0, 1.0, fam.n_max)
        coeffs = [(Fraction(float(p)), Fraction(float(q))) for p, q in zip(re, im)]
        # float denominators are powers of two; accumulate integer
        # numerators over the common one and divide once
        denom = 1
        for p, q in coeffs:
            denom = max(denom, p.denominator, q.denominator)
        acc_re = np.zeros((dim, dim), dtype=object)
        acc_im = np.zeros((dim, dim), dtype=object)
        for (p, q), mi in zip(coeffs, int_mats):
            acc_re = acc_re + mi * (p.numerator * (denom // p.denominator))
            acc_im = acc_im + mi * (q.numerator * (denom // q.denominator))
        acc = Matrix.exact(
            [[(Fraction(acc_re[i, j], denom), Fraction(acc_im[i, j], denom)) for j in range(dim)]
             for i in range(dim)]
        )
        total = (sum(c[0] for c in coeffs), sum(c[1] for c in coeffs))
        if acc.entry(_OMEGA, _OMEGA) != total:
            witness_exact = False
        magnitude = abs(complex(float(total[0]), float(total[1])))
        if magnitude > op_norm(acc) + tol.abs_tol:
            witness_dominated = False
    passed = norms_ok and idem and pairwise and contained and witness_exact and witness_dominated
    return EFamilyReport(
        n_max=fam.n_max,
        max_norm_error=max_norm_error,
        norms_ok=norms_ok,
        idempotent=idem,
        pairwise_zero=pairwise,
        range_contained=contained,
        witness_trials=trials,
        witness_exact=witness_exact,
        witness_dominated=witness_dominated,
        passed=passed,
    )


@dataclass(frozen=True)
class SubsetFamily:
    """Canonical enumeration of finite nonempty index sets, ordered by
    cardinality then lexicographically, capped in count and cardinality."""

    n_max: int
    s_max: int
    f_cap: int
    subsets: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        subsets = tuple(tuple(sorted(set(f))) for f in self.subsets)
        if len(set(subsets)) != len(subsets):
            raise ValueError("duplicate subsets")
        for f in subsets:
            if not f:
                raise ValueError("subsets must be nonempty")
            if f[0] < 1 or f[-1] > self.n_max:
                raise ValueError(f"subset {f} escapes 1..{self.n_max}")
        if not subsets:
            raise ValueError("family must contain at least one subset")
        object.__setattr__(self, "subsets", subsets)

    @classmethod
    def enumerate(cls, n_max: int, f_cap: int = 512, s_max: int = 8) -> "SubsetFamily":
        subsets = []
        for size in range(1, min(s_max, n_max) + 1):
            for combo in combinations(range(1, n_max + 1), size):
                subsets.append(combo)
                if len(subsets) >= f_cap:
                    return cls(n_max=n_max, s_max=s_max, f_cap=f_cap, subsets=tuple(subsets))
        return cls(n_max=n_max, s_max=s_max, f_cap=f_cap, subsets=tuple(subsets))

    def augmented(self, extras: Sequence[Sequence[int]]) -> "SubsetFamily":
        """Append any new subsets at the end, preserving order."""
        known = set(self.subsets)
        out = list(self.subsets)
        for f in extras:
            f = tuple(sorted(set(f)))
            if f and f not in known:
                out.append(f)
                known.add(f)
        return SubsetFamily(n_max=self.n_max, s_max=self.s_max, f_cap=self.f_cap, subsets=tuple(out))

    def __len__(self):
        return len(self.subsets)

    def __iter__(self):
        return iter(self.subsets)


def _coeff_string(v) -> str:
    if isinstance(v, (tuple, list)):
        re, im = Fraction(v[0]), Fraction(v[1])
    else:
        z = complex(v)
        re, im = Fraction(z.real), Fraction(z.imag)
    return str(re) if im == 0 else f"{re},{im}"


@dataclass(frozen=True)
class EmbeddedElement:
    """Coefficients plus one block per enumerated subset: the block for F
    is sum_{j in F} a_j E_j restricted to the coordinates F u {alpha, omega}."""

    coeffs: tuple
    family: SubsetFamily
    blocks: tuple[Matrix, ...]

    def block(self, subset: Sequence[int]) -> Matrix:
        key = tuple(sorted(set(subset)))
        return self.blocks[self.family.subsets.index(key)]

    def to_json_dict(self) -> dict:
        """JSON document; entries are exact rational strings on both
        backends (floats are binary rationals)."""
        return {
            "schema": "opalg.embedded/1",
            "n_max": self.family.n_max,
            "backend": self.blocks[0].backend if self.blocks else "exact",
            "subsets": [list(f) for f in self.family.subsets],
            "coeffs": [_coeff_string(v) for v in self.coeffs],
            "blocks": [b.to_rational_strings() for b in self.blocks],
        }


def _rational_like(v):
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    if isinstance(v, numbers.Integral):
        return Fraction(int(v))
    return None


def _exact_coeff_pairs(a):
    pairs = []
    for v in a:
        if isinstance(v, (tuple, list)) and len(v) == 2:
            re, im = _rational_like(v[0]), _rational_like(v[1])
        else:
            re, im = _rational_like(v), Fraction(0)
        if re is None or im is None:
            return None
        pairs.append((re, im))
    return pairs


def _check_support(a, n_max):
    for j, v in enumerate(a, start=1):
        nonzero = v != 0 if not isinstance(v, (tuple, list)) else (v[0] != 0 or v[1] != 0)
        if nonzero and j > n_max:
            raise ValueError(f"support index {j} outside 1..{n_max}")


def _exact_blocks(pairs, family):
    dim_full = family.n_max + 2
    xs, ys = [], []
    for n in range(1, family.n_max + 1):
        x, y = _xy_components(n, dim_full)
        xs.append(x)
        ys.append(y)
    denom = 1
    for re, im in pairs:
        denom = denom * re.denominator // math.gcd(denom, re.denominator)
        denom = denom * im.denominator // math.gcd(denom, im.denominator)
    scaled = [
        (int(re * denom), int(im * denom))
        for re, im in pairs
    ]
    blocks = []
    for subset in family.subsets:
        pos = [_ALPHA, _OMEGA] + [_coordinate(j) for j in subset]
        size = len(pos)
        g_re = [[0] * size for _ in range(size)]
        g_im = [[0] * size for _ in range(size)]
        for j in subset:
            if j > len(scaled):
                continue
            p, q = scaled[j - 1]
            if p == 0 and q == 0:
                continue
            y, x = ys[j - 1], xs[j - 1]
            for r, pr in enumerate(pos):
                yv = y[pr]
                if yv == 0:
                    continue
                for c, pc in enumerate(pos):
                    w = yv * x[pc]
                    if w:
                        g_re[r][c] += p * w
                        g_im[r][c] += q * w
        if denom == 1:
            grid = [[(g_re[r][c], g_im[r][c]) for c in range(size)] for r in range(size)]
        else:
            grid = [
                [(Fraction(g_re[r][c], denom), Fraction(g_im[r][c], denom)) for c in range(size)]
                for r in range(size)
            ]
        blocks.append(Matrix.exact(grid))
    return blocks


def _float_blocks(values, family):
    dim_full = family.n_max + 2
    n = family.n_max
    xmat = np.zeros((dim_full, n))
    ymat = np.zeros((dim_full, n))
    for k in range(1, n + 1):
        x, y = _xy_components(k, dim_full)
        xmat[:, k - 1] = x
        ymat[:, k - 1] = y
    a = np.zeros(n, dtype=complex)
    head = min(len(values), n)
    a[:head] = values[:head]
    blocks = []
    for subset in family.subsets:
        pos = [_ALPHA, _OMEGA] + [_coordinate(j) for j in subset]
        cols = [j - 1 for j in subset]
        yr = ymat[np.ix_(pos, cols)]
        xr = xmat[np.ix_(pos, cols)]
        blocks.append(Matrix.from_float((yr * a[cols]) @ xr.conj().T))
    return blocks


def phi(a: Sequence, subsets: SubsetFamily) -> EmbeddedElement:
    """Embed the sequence a as its per-subset blocks.  Rational inputs
    (ints, Fractions, (re, im) pairs) produce exact blocks; float or
    complex coefficients produce float blocks."""
    a = list(a)
    _check_support(a, subsets.n_max)
    pairs = _exact_coeff_pairs(a)
    if pairs is not None:
        blocks = _exact_blocks(pairs, subsets)
    else:
        blocks = _float_blocks([complex(v) for v in a], subsets)
    return EmbeddedElement(coeffs=tuple(a), family=subsets, blocks=tuple(blocks))


def phi_sup_norm(e: EmbeddedElement) -> float:
    """Largest operator norm over the enumerated blocks."""
    if not e.blocks:
        raise ValueError("embedded element has no blocks")
    return max(op_norm(b) for b in e.blocks)


def _support(a):
    out = []
    for j, v in enumerate(a, start=1):
        z = complex(float(v[0]), float(v[1])) if isinstance(v, (tuple, list)) else complex(v)
        if z != 0:
            out.append((j, z))
    return out


def best_subset_sum(a: Sequence, cross_check: bool | None = None) -> tuple[tuple[int, ...], float]:
    """Maximize |sum_{j in F} a_j| over nonempty index sets F.

    Candidates are the open half-plane sets {j : Re(a_j e^{-i t}) > 0}
    sampled between consecutive critical angles; the winner is optimal
    over all subsets.  For supports of at most 16 a full enumeration
    cross-checks optimality (on by default there, off above)."""
    support = _support(a)
    if not support:
        raise ValueError("sequence has empty support")
    two_pi = 2.0 * math.pi
    critical = set()
    for _, z in support:
        arg = cmath.phase(z)
        critical.add((arg + math.pi / 2.0) % two_pi)
        critical.add((arg - math.pi / 2.0) % two_pi)
    angles = sorted(critical)
    midpoints = []
    for lo, hi in zip(angles, angles[1:] + [angles[0] + two_pi]):
        midpoints.append(((lo + hi) / 2.0) % two_pi)
    best_set: tuple[int, ...] = ()
    best_val = -1.0
    for theta in midpoints:
        c, s = math.cos(theta), math.sin(theta)
        members = [(j, z) for j, z in support if z.real * c + z.imag * s > 0.0]
        if not members:
            continue
        val = abs(sum(z for _, z in members))
        if val > best_val:
            best_val = val
            best_set = tuple(j for j, _ in members)
    if cross_check is None:
        cross_check = len(support) <= 16
    if cross_check:
        _, brute_val = brute_force_best_subset(a)
        if best_val < brute_val - 1e-9 * max(1.0, brute_val):
            raise CertificationError(
                f"half-plane sweep is suboptimal: {best_val} < brute force {brute_val}"
            )
    return best_set, best_val


def brute_force_best_subset(a: Sequence) -> tuple[tuple[int, ...], float]:
    """Exhaustive maximizer of |sum_{j in F} a_j| over the support."""
    support = _support(a)
    if not support:
        raise ValueError("sequence has empty support")
    n = len(support)
    if n > 22:
        raise ValueError(f"support of size {n} is too large to enumerate")
    z = np.array([v for _, v in support])
    masks = np.arange(1, 1 << n, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
    values = np.abs(bits @ z)
    k = int(np.argmax(values))
    chosen = tuple(support[i][0] for i in range(n) if (int(masks[k]) >> i) & 1)
    return chosen, float(values[k])


def unit_circle_sweep_ratios(sizes: Sequence[int]) -> list[tuple[int, float, float]]:
    """For a = the n-th roots of unity, the sweep value and its ratio to
    ||a||_1 = n; the ratio decreases toward 1/pi."""
    out = []
    for n in sizes:
        a = [cmath.exp(2j * math.pi * j / n) for j in range(n)]
        _, val = best_subset_sum(a, cross_check=n <= 16)
        out.append((n, val, val / n))
    return out


@dataclass(frozen=True)
class TraceWeights:
    """Strictly positive weights over a subset family, summing to one."""

    family: SubsetFamily
    weights: tuple[float, ...]
    scheme: str

    def __post_init__(self):
        if len(self.weights) != len(self.family.subsets):
            raise ValueError("one weight per subset required")
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be strictly positive")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")


def make_trace(subsets: SubsetFamily, scheme: str = "geometric") -> TraceWeights:
    """Geometric weights 2^-k over the canonical order, or uniform ones;
    both exactly normalized before conversion to float."""
    count = len(subsets.subsets)
    if scheme == "geometric":
        total = 1 - Fraction(1, 2**count)
        weights = tuple(float(Fraction(1, 2**k) / total) for k in range(1, count + 1))
    elif scheme == "uniform":
        weights = tuple(float(Fraction(1, count)) for _ in range(count))
    else:
        raise ValueError(f"unknown trace scheme {scheme!r}")
    return TraceWeights(family=subsets, weights=weights, scheme=scheme)


def l1_trace_norm(e: EmbeddedElement, w: TraceWeights) -> float:
    """Trace-weighted norm: sum over F of weight / (|F| + 2) times the
    Schatten-1 norm of the block."""
    if w.family.subsets != e.family.subsets:
        raise ValueError("trace weights were built for a different subset family")
    total = 0.0
    for subset, weight, block in zip(e.family.subsets, w.weights, e.blocks):
        total += weight / (len(subset) + 2) * schatten1_norm(block)
    return total


@dataclass(frozen=True)
class EmbeddingReport:
    n_max: int
    f_cap: int
    s_max: int
    trials: int
    seed: int
    min_sup_ratio: float
    max_sup_ratio: float
    single_index_ratio: float
    roots_ratio: float
    max_trace_to_inf: float
    lower_ok: bool
    upper_ok: bool
    trace_ok: bool
    trace_le_sup_ok: bool
    mult_trials: int
    mult_exact: bool
    passed: bool
    rows: tuple[tuple, ...]

    def csv_rows(self) -> list[list]:
        out = [["trial", "l1_norm", "sup_norm", "ratio", "trace_norm"]]
        out += [list(r) for r in self.rows]
        return out


def _random_rational_pairs(rng, n, denom=16):
    nums_re = rng.integers(-2 * denom, 2 * denom + 1, n)
    nums_im = rng.integers(-2 * denom, 2 * denom + 1, n)
    return [(Fraction(int(p), denom), Fraction(int(q), denom)) for p, q in zip(nums_re, nums_im)]


def _pair_mul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def certify_embedding_bounds(
    n_max: int = 10,
    f_cap: int = 512,
    s_max: int = 8,
    trials: int = 100,
    seed: int = 0,
    tol: Tolerance = DEFAULT_TOL,
    mult_trials: int = 10,
    csv_scheme: str = "geometric",
) -> EmbeddingReport:
    """Randomized two-sided certification of the embedding norms.

    Per seeded trial: ||a||_1 / pi <= sup-block norm <= 3 ||a||_1, with
    the enumeration augmented by the sweep-optimal subset so the lower
    bound is witnessed inside the cap; the trace-weighted norm stays
    below 3 ||a||_inf for both weight schemes and below the sup norm.
    Deterministic side trials witness the tight upper ratio (a single
    unit coefficient) and a near-1/pi lower ratio (roots of unity), and
    rational trials check blockwise multiplicativity exactly.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    base = SubsetFamily.enumerate(n_max, f_cap=f_cap, s_max=s_max)
    rng = np.random.default_rng(seed)
    inv_pi = 1.0 / math.pi
    slack = 1e-12

    named = {
        "single-index": [1.0] + [0.0] * (n_max - 1),
        "unit-circle": [cmath.exp(2j * math.pi * j / n_max) for j in range(n_max)],
    }
    random_trials = [
        list(rng.uniform(-1.0, 1.0, n_max) + 1j * rng.uniform(-1.0, 1.0, n_max))
        for _ in range(trials)
    ]

    lower_ok = upper_ok = trace_ok = trace_le_sup_ok = True
    min_ratio, max_ratio = math.inf, -math.inf
    max_trace_to_inf = 0.0
    named_ratio = {}
    rows = []
    items = list(named.items()) + [(str(i), a) for i, a in enumerate(random_trials)]
    for label, a in items:
        l1 = sum(abs(complex(v)) for v in a)
        linf = max(abs(complex(v)) for v in a)
        f_star, sweep_val = best_subset_sum(a)
        fam = base.augmented([f_star])
        emb = phi(a, fam)
        sup = phi_sup_norm(emb)
        ratio = sup / l1
        if sweep_val < l1 * inv_pi * (1.0 - slack) or sup < sweep_val * (1.0 - slack):
            lower_ok = False
        if sup > 3.0 * l1 * (1.0 + slack):
            upper_ok = False
        min_ratio, max_ratio = min(min_ratio, ratio), max(max_ratio, ratio)
        trace_row = 0.0
        for scheme in ("geometric", "uniform"):
            tn = l1_trace_norm(emb, make_trace(fam, scheme))
            if scheme == csv_scheme:
                trace_row = tn
            max_trace_to_inf = max(max_trace_to_inf, tn / linf)
            if tn > 3.0 * linf + tol.abs_tol:
                trace_ok = False
            if tn > sup + tol.abs_tol:
                trace_le_sup_ok = False
        if label in named:
            named_ratio[label] = ratio
        else:
            rows.append((int(label), l1, sup, ratio, trace_row))

    mult_exact = True
    for _ in range(mult_trials):
        a = _random_rational_pairs(rng, n_max)
        b = _random_rational_pairs(rng, n_max)
        prod = [_pair_mul(x, y) for x, y in zip(a, b)]
        ea, eb, ep = phi(a, base), phi(b, base), phi(prod, base)
        for ba, bb, bp in zip(ea.blocks, eb.blocks, ep.blocks):
            if not (ba @ bb).equals(bp):
                mult_exact = False
    passed = lower_ok and upper_ok and trace_ok and trace_le_sup_ok and mult_exact
    return EmbeddingReport(
        n_max=n_max,
        f_cap=f_cap,
        s_max=s_max,
        trials=trials,
        seed=seed,
        min_sup_ratio=min_ratio,
        max_sup_ratio=max_ratio,
        single_index_ratio=named_ratio["single-index"],
        roots_ratio=named_ratio["unit-circle"],
        max_trace_to_inf=max_trace_to_inf,
        lower_ok=lower_ok,
        upper_ok=upper_ok,
        trace_ok=trace_ok,
        trace_le_sup_ok=trace_le_sup_ok,
        mult_trials=mult_trials,
        mult_exact=mult_exact,
        passed=passed,
        rows=tuple(rows),
    )
