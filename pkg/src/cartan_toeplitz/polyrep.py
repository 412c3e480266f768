"""Exact polynomial representation theory on n x n matrices.

Polynomials in the entries ``z_jk`` of ``Z`` carry the action
``p -> p(A^{-1} Z B)`` of ``GL(n) x GL(n)``. This module computes the
differentiated action, torus weights, joint highest-weight vectors and
the isotypic components ``P^mu`` of every homogeneous degree, all in
exact Gaussian-rational arithmetic.

Exponents are stored as row-major tuples of length n^2; the monomial
order is graded-lexicographic with ``z_11^d`` first.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, MultiplicityViolation, NotUnitary
from .exact import ONE, ZERO, RationalComplex, SparseEchelon, kernel, rational_str

MAX_N = 3
MAX_DEGREE = 5


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"


# ---------------------------------------------------------------------------
# exponents, weights


@dataclass(frozen=True)
class ExponentMatrix:
    n: int
    alpha: tuple

    def __post_init__(self):
        alpha = tuple(int(a) for a in np.asarray(self.alpha).ravel())
        if len(alpha) != self.n * self.n or min(alpha, default=0) < 0:
            raise ValueError("exponent matrix must have n^2 non-negative entries")
        object.__setattr__(self, "alpha", alpha)

    @property
    def degree(self) -> int:
        return sum(self.alpha)

    def entry(self, j: int, k: int) -> int:
        """Exponent of ``z_jk`` (0-based)."""
        return self.alpha[j * self.n + k]

    def as_array(self) -> np.ndarray:
        return np.array(self.alpha, dtype=int).reshape(self.n, self.n)


@dataclass(frozen=True)
class WeightPair:
    row: tuple
    col: tuple

    def __post_init__(self):
        if sum(self.row) != sum(self.col):
            raise ValueError("row and column weights must have equal size")

    @property
    def degree(self) -> int:
        return sum(self.col)


@dataclass(frozen=True, order=True)
class DominantWeight:
    m: tuple

    def __post_init__(self):
        m = tuple(int(v) for v in self.m)
        if any(v < 0 for v in m) or any(a < b for a, b in zip(m, m[1:])):
            raise ValueError(f"{m} is not a non-negative dominant weight")
        object.__setattr__(self, "m", m)

    @property
    def size(self) -> int:
        return sum(self.m)

    def padded(self, n: int) -> "DominantWeight":
        nz = tuple(v for v in self.m if v)
        if len(nz) > n:
            raise ValueError(f"{self} has more than {n} nonzero parts")
        return DominantWeight(nz + (0,) * (n - len(nz)))

    @classmethod
    def parse(cls, text: str, n: int | None = None) -> "DominantWeight":
        parts = [p for p in text.replace("(", "").replace(")", "").split(",") if p.strip()]
        mu = cls(tuple(int(p) for p in parts))
        return mu.padded(n) if n is not None else mu

    def __str__(self):
        return "(" + ",".join(map(str, self.m)) + ")"


def torus_weight(m: ExponentMatrix) -> WeightPair:
    a = m.as_array()
    return WeightPair(tuple(int(v) for v in a.sum(axis=1)), tuple(int(v) for v in a.sum(axis=0)))


def _key_weight(key: tuple, n: int) -> tuple:
    rows = tuple(sum(key[j * n:(j + 1) * n]) for j in range(n))
    cols = tuple(sum(key[k::n]) for k in range(n))
    return rows, cols


def partitions(d: int, n: int) -> list[DominantWeight]:
    """Partitions of ``d`` into at most ``n`` parts, padded, in reverse lex order."""
    out = []

    def rec(rest, maxpart, acc):
        if len(acc) == n:
            if rest == 0:
                out.append(DominantWeight(tuple(acc)))
            return
        for part in range(min(rest, maxpart), -1, -1):
            rec(rest - part, part, acc + [part])

    rec(d, d, [])
    return out


def weyl_dim(mu: DominantWeight, n: int) -> int:
    m = mu.padded(n).m
    num, den = 1, 1
    for j in range(n):
        for k in range(j + 1, n):
            num *= m[j] - m[k] + k - j
            den *= k - j
    q = Fraction(num, den)
    assert q.denominator == 1
    return int(q)


@lru_cache(maxsize=None)
def _monomial_keys(n: int, d: int) -> tuple:
    nv = n * n
    keys = []
    for combo in itertools.combinations_with_replacement(range(nv), d):
        a = [0] * nv
        for v in combo:
            a[v] += 1
        keys.append(tuple(a))
    return tuple(sorted(set(keys), reverse=True))


@lru_cache(maxsize=None)
def _weight_spaces(n: int, d: int) -> dict:
    spaces: dict = {}
    for key in _monomial_keys(n, d):
        spaces.setdefault(_key_weight(key, n), []).append(key)
    return spaces


# ---------------------------------------------------------------------------
# polynomials


def _rc(c) -> RationalComplex:
    return RationalComplex.coerce(c)


class Polynomial:
    """Exact polynomial on n x n matrices; ``terms`` maps exponent tuples to coefficients."""

    __slots__ = ("n", "terms", "_hash")

    def __init__(self, n: int, terms: dict | None = None):
        self.n = n
        clean = {}
        for k, c in (terms or {}).items():
            k = k.alpha if isinstance(k, ExponentMatrix) else tuple(k)
            if len(k) != n * n:
                raise ValueError("exponent length does not match n")
            c = _rc(c)
            if c:
                clean[k] = c
        self.terms = clean
        self._hash = None

    # constructors
    @classmethod
    def zero(cls, n):
        return cls(n)

    @classmethod
    def constant(cls, n, c=1):
        return cls(n, {(0,) * (n * n): c})

    @classmethod
    def variable(cls, n, j, k):
        """The coordinate ``z_jk`` (1-based indices)."""
        if not (1 <= j <= n and 1 <= k <= n):
            raise IndexError(f"variable index ({j},{k}) out of range")
        key = [0] * (n * n)
        key[(j - 1) * n + (k - 1)] = 1
        return cls(n, {tuple(key): 1})

    @classmethod
    def monomial(cls, n, alpha, c=1):
        return cls(n, {tuple(np.asarray(alpha).ravel()): c})

    @classmethod
    def det(cls, n):
        terms = {}
        for perm in itertools.permutations(range(n)):
            key = [0] * (n * n)
            for j, k in enumerate(perm):
                key[j * n + k] = 1
            inv = sum(1 for a, b in itertools.combinations(perm, 2) if a > b)
            terms[tuple(key)] = -1 if inv % 2 else 1
        return cls(n, terms)

    # arithmetic
    def _check(self, other):
        if self.n != other.n:
            raise ValueError("polynomials live on different matrix sizes")

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.n, other)
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, ZERO) + c
        return Polynomial(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.n, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            self._check(other)
            out: dict = {}
            for k1, c1 in self.terms.items():
                for k2, c2 in other.terms.items():
                    k = tuple(a + b for a, b in zip(k1, k2))
                    out[k] = out.get(k, ZERO) + c1 * c2
            return Polynomial(self.n, out)
        c = _rc(other)
        return Polynomial(self.n, {k: v * c for k, v in self.terms.items()})

    __rmul__ = __mul__

    def __pow__(self, e: int):
        out = Polynomial.constant(self.n)
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.n == other.n and self.terms == other.terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.n, frozenset(self.terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def conjugate_coefficients(self):
        return Polynomial(self.n, {k: c.conjugate() for k, c in self.terms.items()})

    # structure
    @property
    def degrees(self) -> set:
        return {sum(k) for k in self.terms}

    @property
    def is_homogeneous(self) -> bool:
        return len(self.degrees) <= 1

    @property
    def degree(self) -> int:
        """Homogeneous degree; raises for mixed-degree polynomials."""
        ds = self.degrees
        if len(ds) > 1:
            raise ValueError("polynomial is not homogeneous")
        return ds.pop() if ds else 0

    def leading_key(self):
        return max(self.terms, key=lambda k: (sum(k), k))

    def normalized(self) -> "Polynomial":
        """Scale so the leading graded-lex coefficient is 1."""
        if not self:
            return self
        return self * (ONE / self.terms[self.leading_key()])

    def weight(self) -> WeightPair | None:
        """Joint torus weight if all monomials share one, else None."""
        ws = {_key_weight(k, self.n) for k in self.terms}
        if len(ws) != 1:
            return None
        r, c = ws.pop()
        return WeightPair(r, c)

    def monomials(self):
        return [ExponentMatrix(self.n, k) for k in sorted(self.terms, key=lambda k: (sum(k), k), reverse=True)]

    # numerics
    def evaluate(self, Z) -> complex:
        Z = np.asarray(Z, dtype=complex)
        return complex(evaluate_many([self], Z[None])[0, 0])

    def evaluate_batch(self, Zs) -> np.ndarray:
        return evaluate_many([self], np.asarray(Zs, dtype=complex))[:, 0]

    __call__ = evaluate_batch

    def to_json(self) -> list:
        return [
            {"α": list(k), "re": rational_str(c.re), "im": rational_str(c.im)}
            for k, c in sorted(self.terms.items(), key=lambda kc: (sum(kc[0]), kc[0]), reverse=True)
        ]

    @classmethod
    def from_json(cls, n: int, data: list) -> "Polynomial":
        return cls(n, {tuple(t["α"]): RationalComplex(t["re"], t["im"]) for t in data})

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for k, c in sorted(self.terms.items(), key=lambda kc: (sum(kc[0]), kc[0]), reverse=True):
            mon = "*".join(
                f"z{v // self.n + 1}{v % self.n + 1}" + (f"^{e}" if e > 1 else "")
                for v, e in enumerate(k) if e
            )
            parts.append(f"{c}*{mon}" if mon else str(c))
        return " + ".join(parts)


def evaluate_many(polys: list[Polynomial], Zs: np.ndarray) -> np.ndarray:
    """Evaluate several polynomials on a stack of matrices; returns shape (N, len(polys))."""
    Zs = np.asarray(Zs, dtype=complex)
    N = Zs.shape[0]
    if not polys:
        return np.zeros((N, 0), complex)
    n = polys[0].n
    X = Zs.reshape(N, n * n)
    keys = sorted({k for p in polys for k in p.terms})
    maxdeg = max((max(k) for k in keys), default=0)
    powers = [np.ones((N, n * n), complex)]
    for _ in range(maxdeg):
        powers.append(powers[-1] * X)
    col = {k: i for i, k in enumerate(keys)}
    mon = np.ones((N, len(keys)), complex)
    for i, k in enumerate(keys):
        for v, e in enumerate(k):
            if e:
                mon[:, i] *= powers[e][:, v]
    C = np.zeros((len(keys), len(polys)), complex)
    for j, p in enumerate(polys):
        for k, c in p.terms.items():
            C[col[k], j] = complex(c)
    return mon @ C


def monomial_basis(n: int, d: int) -> list[Polynomial]:
    if n < 1 or d < 0:
        raise ValueError("need n >= 1 and d >= 0")
    return [Polynomial(n, {k: 1}) for k in _monomial_keys(n, d)]


# ---------------------------------------------------------------------------
# Lie algebra action


def lie_act(side: Side | str, j: int, k: int, p: Polynomial) -> Polynomial:
    """Differentiated action of the elementary matrix ``E_jk`` (1-based).

    Left:  ``-sum_m z_km d/dz_jm``;  Right: ``+sum_m z_mj d/dz_mk``.
    """
    side = Side(side)
    n = p.n
    if not (1 <= j <= n and 1 <= k <= n):
        raise IndexError(f"generator index ({j},{k}) out of range for n={n}")
    j, k = j - 1, k - 1
    out: dict = {}
    for key, c in p.terms.items():
        for m in range(n):
            if side is Side.LEFT:
                src, dst, sign = j * n + m, k * n + m, -1
            else:
                src, dst, sign = m * n + k, m * n + j, 1
            e = key[src]
            if not e:
                continue
            new = list(key)
            new[src] -= 1
            new[dst] += 1
            new = tuple(new)
            out[new] = out.get(new, ZERO) + c * (sign * e)
    return Polynomial(n, out)


def raising_operators(n: int):
    return [(s, j, k) for s in Side for j in range(1, n + 1) for k in range(j + 1, n + 1)]


def lowering_operators(n: int):
    return [(s, j, k) for s in Side for j in range(1, n + 1) for k in range(1, j)]


# ---------------------------------------------------------------------------
# highest weights and isotypic components


def _check_scope(n, d):
    if n < 1 or d < 0:
        raise ValueError("need n >= 1 and d >= 0")
    if n > MAX_N or d > MAX_DEGREE:
        raise ValueError(f"resource guard: n <= {MAX_N} and d <= {MAX_DEGREE} required")


def _joint_kernel(n: int, keys: list) -> list[Polynomial]:
    """Polynomials in span(keys) annihilated by every raising operator."""
    images = []
    for key in keys:
        mono = Polynomial(n, {key: 1})
        img: dict = {}
        for idx, (s, j, k) in enumerate(raising_operators(n)):
            for kk, c in lie_act(s, j, k, mono).terms.items():
                img[(idx, kk)] = c
        images.append(img)
    return [Polynomial(n, {keys[i]: c for i, c in combo.items()}) for combo in kernel(images)]


def highest_weight_vectors(n: int, d: int) -> list[tuple[DominantWeight, Polynomial]]:
    """One joint highest-weight vector per partition of ``d`` with at most ``n`` parts.

    The joint kernel of all raising operators is searched inside the
    weight space whose column weight is ``mu``; that space splits by row
    weight, so the kernel is assembled row-weight by row-weight.
    """
    _check_scope(n, d)
    spaces = _weight_spaces(n, d)
    out = []
    for mu in partitions(d, n):
        found = []
        for (rows, cols), keys in sorted(spaces.items(), reverse=True):
            if cols == mu.m:
                found.extend(_joint_kernel(n, keys))
        if len(found) != 1:
            raise MultiplicityViolation(
                f"joint highest-weight kernel for mu={mu} has dimension {len(found)}"
            )
        p = found[0].normalized()
        w = p.weight()
        if w is None or w.col != mu.m:
            raise MultiplicityViolation(f"highest-weight vector for {mu} is not a weight vector")
        out.append((mu, p))
    return out


def basis_fingerprint(polys) -> str:
    """Short stable hash identifying an ordered list of polynomials."""
    polys = list(polys)
    blob = json.dumps([p.to_json() for p in polys], sort_keys=True, ensure_ascii=True)
    return hashlib.sha1(f"{polys[0].n if polys else 0}:{blob}".encode()).hexdigest()[:16]


@dataclass(eq=False)
class IsotypicComponent:
    mu: DominantWeight
    n: int
    basis: list
    weyl_dim: int
    hwv: Polynomial | None = None
    meta: dict = field(default_factory=dict)

    @property
    def degree(self) -> int:
        return self.mu.size

    @property
    def expected_dim(self) -> int:
        return self.weyl_dim ** 2

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def basis_id(self) -> str:
        if "basis_id" not in self.meta:
            self.meta["basis_id"] = basis_fingerprint(self.basis)
        return self.meta["basis_id"]

    def coefficient_matrix(self) -> tuple[list, np.ndarray]:
        """Monomial keys (graded-lex) and the complex matrix of basis coefficients."""
        keys = list(_monomial_keys(self.n, self.degree))
        C = np.zeros((len(keys), self.dim), complex)
        idx = {k: i for i, k in enumerate(keys)}
        for j, p in enumerate(self.basis):
            for k, c in p.terms.items():
                C[idx[k], j] = complex(c)
        return keys, C

    def evaluate(self, Zs) -> np.ndarray:
        return evaluate_many(self.basis, Zs)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "d": self.degree,
            "mu": list(self.mu.m),
            "weyl_dim": self.weyl_dim,
            "basis": [p.to_json() for p in self.basis],
        }

    @classmethod
    def from_json(cls, data: dict) -> "IsotypicComponent":
        n = data["n"]
        return cls(DominantWeight(tuple(data["mu"])), n,
                   [Polynomial.from_json(n, t) for t in data["basis"]], data["weyl_dim"])


def generate_component(hwv: tuple[DominantWeight, Polynomial]) -> IsotypicComponent:
    """Span of the highest-weight vector under all lowering operators (exact)."""
    mu, p = hwv
    n = p.n
    wd = weyl_dim(mu, n)
    echelons: dict = {}
    basis: list = []

    def offer(q: Polynomial) -> bool:
        w = _key_weight(next(iter(q.terms)), n)
        ech = echelons.setdefault(w, SparseEchelon())
        if ech.insert(q.terms):
            basis.append(q)
            return True
        return False

    offer(p)
    frontier = [p]
    while frontier:
        nxt = []
        for q in frontier:
            for s, j, k in lowering_operators(n):
                r = lie_act(s, j, k, q)
                if r and offer(r):
                    nxt.append(r)
        frontier = nxt
    if len(basis) != wd * wd:
        raise DimensionMismatch(f"component {mu} spans {len(basis)}, expected {wd * wd}")
    return IsotypicComponent(mu, n, basis, wd, hwv=p)


def is_closed(comp: IsotypicComponent) -> bool:
    """Exact check that every generator ``E_jk`` (both sides) maps the basis into its span."""
    n = comp.n
    by_weight: dict = {}
    for q in comp.basis:
        by_weight.setdefault(_key_weight(next(iter(q.terms)), n), SparseEchelon()).insert(q.terms)
    for q in comp.basis:
        for s in Side:
            for j in range(1, n + 1):
                for k in range(1, n + 1):
                    r = lie_act(s, j, k, q)
                    if not r:
                        continue
                    w = r.weight()
                    if w is None:
                        return False
                    ech = by_weight.get((w.row, w.col))
                    if ech is None or not ech.contains(r.terms):
                        return False
    return True


def decompose_degree(n: int, d: int) -> list[IsotypicComponent]:
    """Isotypic decomposition of the degree-``d`` polynomials, with exact spanning check."""
    _check_scope(n, d)
    comps = [generate_component(h) for h in highest_weight_vectors(n, d)]
    total = sum(c.dim for c in comps)
    expected = math.comb(n * n + d - 1, d)
    if total != expected:
        raise DimensionMismatch(f"components sum to {total}, but dim P^{d} = {expected}")
    # all basis vectors are joint weight vectors, so independence can be checked per weight space
    per_space: dict = {}
    for c in comps:
        for q in c.basis:
            per_space.setdefault(_key_weight(next(iter(q.terms)), n), []).append(q.terms)
    for w, keys in _weight_spaces(n, d).items():
        ech = SparseEchelon()
        for v in per_space.get(w, []):
            ech.insert(v)
        if len(ech) != len(keys):
            raise DimensionMismatch(f"weight space {w} has rank {len(ech)} of {len(keys)}")
    return comps


@lru_cache(maxsize=64)
def cached_decomposition(n: int, d: int) -> tuple:
    return tuple(decompose_degree(n, d))


def component(n: int, mu) -> IsotypicComponent:
    """The isotypic component for ``mu`` (a DominantWeight, tuple or ``"m1,m2"`` string)."""
    if isinstance(mu, str):
        mu = DominantWeight.parse(mu, n)
    elif not isinstance(mu, DominantWeight):
        mu = DominantWeight(tuple(mu))
    mu = mu.padded(n)
    for c in cached_decomposition(n, mu.size):
        if c.mu == mu:
            return c
    raise KeyError(f"no component {mu} for n={n}")


# ---------------------------------------------------------------------------
# inner products and the group action


def fischer_inner(p: Polynomial, q: Polynomial) -> RationalComplex:
    """Fock-Fischer pairing ``sum_alpha alpha! c_alpha(p) conj(c_alpha(q))``."""
    p._check(q)
    total = ZERO
    for k, c in p.terms.items():
        d = q.terms.get(k)
        if d is not None:
            fact = math.prod(math.factorial(e) for e in k)
            total = total + c * d.conjugate() * fact
    return total


@dataclass(eq=False)
class FloatPolynomial:
    """Polynomial with double-precision coefficients (result of a substitution)."""

    n: int
    terms: dict

    def coefficient_vector(self, keys) -> np.ndarray:
        return np.array([self.terms.get(k, 0j) for k in keys], dtype=complex)

    def evaluate_batch(self, Zs) -> np.ndarray:
        Zs = np.asarray(Zs, dtype=complex)
        N = Zs.shape[0]
        X = Zs.reshape(N, self.n * self.n)
        out = np.zeros(N, complex)
        for k, c in self.terms.items():
            out += c * np.prod(X ** np.array(k), axis=1)
        return out

    def norm(self) -> float:
        return float(np.sqrt(sum(abs(c) ** 2 for c in self.terms.values())))


@lru_cache(maxsize=None)
def _mult_maps(n: int, d: int) -> tuple:
    """For each variable v, index map from degree-d monomials to degree-(d+1)."""
    src = _monomial_keys(n, d)
    dst = {k: i for i, k in enumerate(_monomial_keys(n, d + 1))}
    maps = []
    for v in range(n * n):
        idx = []
        for k in src:
            kk = list(k)
            kk[v] += 1
            idx.append(dst[tuple(kk)])
        maps.append(np.array(idx, dtype=np.intp))
    return tuple(maps)


def _check_unitary(M, name):
    M = np.asarray(M, dtype=complex)
    if np.linalg.norm(M @ M.conj().T - np.eye(M.shape[0])) > 1e-10:
        raise NotUnitary(f"{name} is not unitary to 1e-10")
    return M


def substitute(p: Polynomial, A, B) -> FloatPolynomial:
    """Expand ``p(A^{-1} Z B)`` (``A``, ``B`` unitary) in the monomial basis."""
    n = p.n
    A = _check_unitary(A, "A")
    B = _check_unitary(B, "B")
    # z_jk  ->  sum_{p,q} conj(A_pj) B_qk z_pq
    lin = np.einsum("pj,qk->jkpq", A.conj(), B).reshape(n * n, n * n)
    memo: dict = {(0,) * (n * n): np.ones(1, complex)}

    def expand(key):
        hit = memo.get(key)
        if hit is not None:
            return hit
        v = next(i for i, e in enumerate(key) if e)
        prev_key = key[:v] + (key[v] - 1,) + key[v + 1:]
        prev = expand(prev_key)
        deg = sum(prev_key)
        maps = _mult_maps(n, deg)
        out = np.zeros(len(_monomial_keys(n, deg + 1)), complex)
        for w in range(n * n):
            if lin[v, w] != 0:
                out[maps[w]] += lin[v, w] * prev
        memo[key] = out
        return out

    terms: dict = {}
    for key, c in p.terms.items():
        vec = expand(key)
        keys = _monomial_keys(n, sum(key))
        cc = complex(c)
        for i in np.flatnonzero(vec):
            terms[keys[i]] = terms.get(keys[i], 0j) + cc * vec[i]
    return FloatPolynomial(n, terms)
