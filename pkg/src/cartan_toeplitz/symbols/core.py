"""Compilation, classification and invariance testing of symbols."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable

import numpy as np

from ..errors import BoundExceeded, DivisorBelowBound
from ..matdomain import (
    RngStream,
    as_matrix,
    dagger,
    haar_unitaries,
    in_domain,
    sample_domain_batch,
)
from .parser import BinOp, Call, MatFunc, Neg, Node, Num, Pow, SymbolExpr, Var, parse_symbol, unparse

BOUND_SLACK = 1e-9
INVARIANCE_TOL = 1e-10


class Group(str, Enum):
    UUn = "UUn"  # Z -> U* Z V
    UnL = "UnL"  # Z -> U Z
    UnR = "UnR"  # Z -> Z V

    @classmethod
    def parse(cls, text: str) -> "Group":
        if isinstance(text, cls):
            return text
        for g in cls:
            if g.value.lower() == str(text).lower():
                return g
        raise ValueError(f"unknown group {text!r}; use uun, unl or unr")


class SymbolKind(str, Enum):
    UU_INVARIANT = "UUInvariant"
    LEFT_INVARIANT = "LeftInvariant"
    RIGHT_INVARIANT = "RightInvariant"
    GENERAL = "General"

    @property
    def groups(self) -> tuple:
        """Groups under which symbols of this kind are invariant."""
        return {
            SymbolKind.UU_INVARIANT: (Group.UUn, Group.UnL, Group.UnR),
            SymbolKind.LEFT_INVARIANT: (Group.UnL,),
            SymbolKind.RIGHT_INVARIANT: (Group.UnR,),
            SymbolKind.GENERAL: (),
        }[self]


def _walk(node: Node):
    yield node
    for child in (getattr(node, a, None) for a in ("arg", "base", "left", "right")):
        if isinstance(child, Node):
            yield from _walk(child)


def classify(e: SymbolExpr | Node) -> SymbolKind:
    root = e.root if isinstance(e, SymbolExpr) else e
    names = {v.name for v in _walk(root) if isinstance(v, Var)}
    if "Z" in names or {"G", "H"} <= names:
        return SymbolKind.GENERAL
    if "G" in names:
        return SymbolKind.LEFT_INVARIANT
    if "H" in names:
        return SymbolKind.RIGHT_INVARIANT
    return SymbolKind.UU_INVARIANT


def static_bound(node: Node, n: int) -> float:
    """Sup bound by interval propagation on the domain (|entries| <= 1, s < 1)."""
    if isinstance(node, Num):
        return abs(node.value)
    if isinstance(node, Var):
        return 1.0
    if isinstance(node, MatFunc):
        return float(n) if node.func == "tr" else 1.0
    if isinstance(node, (Call, Neg)):
        return static_bound(node.arg, n)
    if isinstance(node, Pow):
        return static_bound(node.base, n) ** node.exp
    if isinstance(node, BinOp):
        a, b = static_bound(node.left, n), static_bound(node.right, n)
        if node.op in "+-":
            return a + b
        if node.op == "*":
            return a * b
        return a / node.bound
    raise TypeError(f"unknown node {node!r}")


class EvalContext:
    """Lazily computed matrix data for a stack of points, shared by all symbols."""

    def __init__(self, Zs):
        Zs = np.asarray(Zs, dtype=complex)
        if Zs.ndim == 2:
            Zs = Zs[None]
        self.Z = Zs

    @property
    def n(self) -> int:
        return self.Z.shape[-1]

    def __len__(self):
        return self.Z.shape[0]

    @cached_property
    def s(self) -> np.ndarray:
        return np.linalg.svd(self.Z, compute_uv=False)

    @cached_property
    def G(self) -> np.ndarray:
        return dagger(self.Z) @ self.Z

    @cached_property
    def H(self) -> np.ndarray:
        return self.Z @ dagger(self.Z)

    @cached_property
    def trG(self) -> np.ndarray:
        return np.einsum("nii->n", self.G)

    @cached_property
    def detZ2(self) -> np.ndarray:
        # det(G) = det(H) = |det Z|^2, exactly real
        return np.abs(np.linalg.det(self.Z)) ** 2


def _eval(node: Node, ctx: EvalContext) -> np.ndarray:
    if isinstance(node, Num):
        return np.full(len(ctx), node.value, dtype=complex)
    if isinstance(node, Var):
        if node.name == "s":
            return ctx.s[:, node.index[0] - 1].astype(complex)
        j, k = node.index[0] - 1, node.index[1] - 1
        return getattr(ctx, node.name)[:, j, k]
    if isinstance(node, MatFunc):
        return (ctx.trG if node.func == "tr" else ctx.detZ2).astype(complex)
    if isinstance(node, Call):
        v = _eval(node.arg, ctx)
        return {"conj": np.conj, "abs": np.abs, "re": np.real, "im": np.imag}[node.func](v).astype(complex)
    if isinstance(node, Pow):
        return _eval(node.base, ctx) ** node.exp
    if isinstance(node, Neg):
        return -_eval(node.arg, ctx)
    a, b = _eval(node.left, ctx), _eval(node.right, ctx)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    low = np.abs(b)
    if np.any(low < node.bound * (1 - BOUND_SLACK)):
        raise DivisorBelowBound(
            f"divisor {unparse(node.right)!r} reached {low.min():.3e} < declared bound {node.bound}"
        )
    return a / b


@dataclass(eq=False)
class CompiledSymbol:
    n: int
    kind: SymbolKind
    sup_bound: float
    text: str
    expr: SymbolExpr | None = None
    meta: dict = field(default_factory=dict)
    _fn: Callable | None = field(default=None, repr=False)

    def eval_batch(self, Zs, check: bool = True) -> np.ndarray:
        ctx = Zs if isinstance(Zs, EvalContext) else EvalContext(Zs)
        if ctx.n != self.n:
            raise ValueError(f"symbol is for n={self.n}, points have n={ctx.n}")
        vals = self._fn(ctx) if self._fn is not None else _eval(self.expr.root, ctx)
        if check and vals.size and np.max(np.abs(vals)) > self.sup_bound * (1 + BOUND_SLACK):
            raise BoundExceeded(f"|{self.text}| = {np.max(np.abs(vals)):.6g} exceeds bound {self.sup_bound:.6g}")
        return vals

    def __call__(self, Z) -> complex:
        return complex(self.eval_batch(as_matrix(Z)[None])[0])

    def conj(self) -> "CompiledSymbol":
        if self.expr is not None:
            return compile_symbol(SymbolExpr(f"conj({self.text})", self.n, Call("conj", self.expr.root)))
        fn = self._fn
        return CompiledSymbol(self.n, self.kind, self.sup_bound, f"conj({self.text})", None,
                              dict(self.meta), lambda ctx: np.conj(fn(ctx)))

    @property
    def is_constant(self) -> bool:
        return self.expr is not None and isinstance(self.expr.root, Num)


def compile_symbol(sym: str | SymbolExpr, n: int | None = None) -> CompiledSymbol:
    if isinstance(sym, str):
        if n is None:
            raise ValueError("n is required when compiling from text")
        sym = parse_symbol(sym, n)
    return CompiledSymbol(sym.n, classify(sym), static_bound(sym.root, sym.n), sym.text, sym)


def evaluate(sym: CompiledSymbol, Z) -> complex:
    Z = as_matrix(Z)
    if Z.shape[0] != sym.n:
        raise ValueError("dimension mismatch between symbol and point")
    if not in_domain(Z):
        raise ValueError("point is not in the domain")
    return sym(Z)


def act(group: Group, U: np.ndarray, V: np.ndarray, Zs: np.ndarray) -> np.ndarray:
    """Apply group elements to points: U*ZV, UZ or ZV (broadcasts over stacks)."""
    if group is Group.UUn:
        return dagger(U) @ Zs @ V
    if group is Group.UnL:
        return U @ Zs
    return Zs @ V


@dataclass
class InvarianceReport:
    symbol: str
    kind: SymbolKind
    group: Group
    trials: int
    deviations: np.ndarray
    base_values: np.ndarray
    moved_values: np.ndarray

    @property
    def max_rel_deviation(self) -> float:
        return float(np.max(self.deviations)) if self.deviations.size else 0.0

    def passed(self, tol: float = INVARIANCE_TOL) -> bool:
        return self.max_rel_deviation <= tol

    def to_json(self) -> dict:
        return {
            "symbol": self.symbol,
            "kind": self.kind.value,
            "group": self.group.value,
            "trials": self.trials,
            "max_rel_deviation": self.max_rel_deviation,
        }


def invariance_check(sym: CompiledSymbol, group: Group | str, rng: RngStream, trials: int = 100) -> InvarianceReport:
    """Compare a(h.Z) with a(Z) for random Z and Haar h.

    Deviations are measured relative to the symbol's sup bound, so the
    scale is fixed per symbol rather than per point.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    group = Group.parse(group)
    gen = rng.generator()
    Zs = sample_domain_batch(sym.n, trials, gen).points
    U = haar_unitaries(sym.n, trials, gen)
    V = haar_unitaries(sym.n, trials, gen)
    base = sym.eval_batch(Zs)
    moved = sym.eval_batch(act(group, U, V, Zs))
    scale = sym.sup_bound
    dev = np.abs(moved - base) / scale if scale > 0 else np.zeros(trials)
    return InvarianceReport(sym.text, sym.kind, group, trials, dev, base, moved)


def average_symbol(sym: CompiledSymbol, group: Group | str, rng: RngStream | None = None, m: int = 1000,
                   elements: tuple | None = None, chunk: int = 1 << 16) -> CompiledSymbol:
    """Haar average of ``a(h^{-1}.Z)`` over ``m`` frozen group elements.

    ``elements`` may supply the (U, V) pairs explicitly, as two stacks of
    shape (m, n, n). Symbols already invariant under ``group`` are
    returned unchanged.
    """
    group = Group.parse(group)
    if group in sym.kind.groups:
        return sym
    if elements is None:
        if m < 1:
            raise ValueError("m must be >= 1")
        gen = rng.generator()
        U, V = haar_unitaries(sym.n, m, gen), haar_unitaries(sym.n, m, gen)
    else:
        U, V = (np.asarray(x, dtype=complex) for x in elements)
        m = U.shape[0]
    # Haar measure is inversion invariant, so a(h.Z) over the sample is as good as a(h^{-1}.Z)
    U.setflags(write=False)
    V.setflags(write=False)
    base = sym

    def fn(ctx: EvalContext) -> np.ndarray:
        Zs = ctx.Z
        N = Zs.shape[0]
        total = np.zeros(N, complex)
        step = max(1, chunk // max(N, 1))
        for a in range(0, m, step):
            b = min(m, a + step)
            moved = act(group, U[a:b, None], V[a:b, None], Zs[None])
            total += base.eval_batch(moved.reshape(-1, sym.n, sym.n), check=False).reshape(b - a, N).sum(axis=0)
        return total / m

    meta = dict(sym.meta, approx_invariant_under=group.value, m=m)
    return CompiledSymbol(sym.n, SymbolKind.GENERAL, sym.sup_bound, f"avg[{group.value}]({sym.text})",
                          None, meta, fn)
