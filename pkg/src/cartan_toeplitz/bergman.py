"""Weighted Bergman spaces on the domain: kernels, Monte Carlo inner
products, Gram matrices and Toeplitz compressions to isotypic components.

Inner products use the probability measure ``c_lam det(I - ZZ*)^(lam-2n) dv``.
Every quantity in one computation reuses the same uniform sample set, so
Gram and Toeplitz matrices carry correlated noise. Standard errors of
matrix entries and of derived defect metrics come from a leave-one-batch-out
jackknife over contiguous sample batches.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .errors import BasisMismatch, GramNotPD, NotUnitary
from .matdomain import DomainInfo, RngStream, as_matrix, haar_unitaries
from .montecarlo import MCConfig, MCEstimate, SampleSet, cached_samples, jackknife_stderr, ratio_estimate
from .polyrep import IsotypicComponent, Polynomial, basis_fingerprint, substitute
from .symbols.core import CompiledSymbol, Group, SymbolKind

PD_RATIO = 1e-8
DEFAULT_LAMBDA = {1: 3.0, 2: 5.0, 3: 7.0}


def check_lambda(n: int, lam: float) -> None:
    info = DomainInfo(n)
    if not info.admissible(lam):
        raise ValueError(f"weight lambda={lam} must exceed 2n-1 = {info.lambda_min} for n={n}")


def bergman_kernel(Z, W, lam: float) -> complex:
    """``det(I - Z W*)^(-lam)`` on the principal branch."""
    Z, W = as_matrix(Z), as_matrix(W)
    check_lambda(Z.shape[0], lam)
    return complex(kernel_batch(Z[None], W, lam)[0])


def kernel_batch(Zs: np.ndarray, W, lam: float) -> np.ndarray:
    W = as_matrix(W)
    n = W.shape[0]
    d = np.linalg.det(np.eye(n) - Zs @ W.conj().T)
    return np.exp(-lam * np.log(d))


def _samples(n: int, src: MCConfig | SampleSet) -> SampleSet:
    if isinstance(src, SampleSet):
        if src.n != n:
            raise ValueError("sample set has the wrong matrix size")
        return src
    return cached_samples(n, src)


def _values(f, ss: SampleSet) -> np.ndarray:
    if isinstance(f, Polynomial):
        return f.evaluate_batch(ss.points)
    if isinstance(f, CompiledSymbol):
        return f.eval_batch(ss.ctx)
    if callable(f):
        return np.asarray(f(ss.points), dtype=complex)
    return np.full(len(ss), complex(f))


def estimate_normalizer(n: int, lam: float, cfg: MCConfig | SampleSet) -> MCEstimate:
    """``c_lam = 1 / E[det(I - ZZ*)^(lam-2n)]`` under normalized Lebesgue measure."""
    check_lambda(n, lam)
    ss = _samples(n, cfg)
    w = ss.weight(lam)
    N = len(w)
    wbar = float(w.mean())
    se_w = float(w.std(ddof=1)) / math.sqrt(N)
    return MCEstimate(complex(1.0 / wbar), se_w / wbar**2, N)


def weighted_inner(f, g, lam: float, cfg: MCConfig | SampleSet, n: int | None = None) -> MCEstimate:
    """``<f, g>_lam`` for polynomials, symbols, callables on point stacks or constants."""
    if n is None:
        n = next((x.n for x in (f, g) if hasattr(x, "n")), None)
        if n is None and isinstance(cfg, SampleSet):
            n = cfg.n
    if n is None:
        raise ValueError("cannot infer n; pass it explicitly")
    check_lambda(n, lam)
    ss = _samples(n, cfg)
    w = ss.weight(lam)
    return ratio_estimate(_values(f, ss) * np.conj(_values(g, ss)) * w, w)


def _ratio_matrix(Bv: np.ndarray, Fv: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Entries ``sum conj(B_i) w F_j / sum w`` with delta-method standard errors."""
    N = w.shape[0]
    wsum = float(w.sum())
    R = Bv.conj().T @ (w[:, None] * Fv) / wsum
    w2 = w * w
    m_abs2 = (np.abs(Bv) ** 2).T @ (w2[:, None] * np.abs(Fv) ** 2) / N
    m_xw = Bv.conj().T @ (w2[:, None] * Fv) / N
    m_w2 = float(w2.mean())
    var = m_abs2 - 2 * np.real(np.conj(R) * m_xw) + np.abs(R) ** 2 * m_w2
    wbar = wsum / N
    se = np.sqrt(np.clip(var, 0, None) / (N - 1)) / wbar
    return R, se


def _batch_sums(Bv, Fv, w, batches) -> tuple[np.ndarray, np.ndarray]:
    S = np.stack([Bv[b].conj().T @ (w[b, None] * Fv[b]) for b in batches])
    W = np.array([w[b].sum() for b in batches])
    return S, W


def _leave_one_out(S: np.ndarray, W: np.ndarray) -> np.ndarray:
    tot, wt = S.sum(axis=0), W.sum()
    return (tot[None] - S) / (wt - W)[:, None, None]


def _hermitian(G):
    return (G + G.conj().T) / 2


def _check_pd(G: np.ndarray) -> tuple[float, float]:
    ev = np.linalg.eigvalsh(G)
    lo, hi = float(ev[0]), float(ev[-1])
    if not lo > PD_RATIO * hi:
        raise GramNotPD(
            f"Gram matrix not positive definite (min eigenvalue {lo:.3e}, max {hi:.3e}); "
            "increase the number of samples",
            lo, hi,
        )
    return lo, hi


def _chol(G: np.ndarray) -> np.ndarray:
    return cholesky(_hermitian(G), lower=True)


def _whiten(L: np.ndarray, A: np.ndarray) -> np.ndarray:
    """``L^{-1} A L^{-*}``."""
    X = solve_triangular(L, A, lower=True)
    return solve_triangular(L, X.conj().T, lower=True).conj().T


@dataclass(eq=False)
class GramMatrix:
    basis_id: str
    lam: float
    values: np.ndarray
    stderr: np.ndarray
    nsamples: int
    sample_key: tuple
    batch_sums: np.ndarray = field(repr=False)
    batch_weights: np.ndarray = field(repr=False)
    eig_range: tuple = (0.0, 0.0)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @property
    def identity(self) -> tuple:
        return (self.basis_id, self.lam, self.sample_key)

    @property
    def chol(self) -> np.ndarray:
        if not hasattr(self, "_L"):
            self._L = _chol(self.values)
        return self._L

    def replicates(self) -> np.ndarray:
        return np.stack([_hermitian(g) for g in _leave_one_out(self.batch_sums, self.batch_weights)])

    def replicate_chols(self) -> list:
        if not hasattr(self, "_Lr"):
            self._Lr = [_chol(g) for g in self.replicates()]
        return self._Lr

    def entry(self, i: int, j: int) -> MCEstimate:
        return MCEstimate(complex(self.values[i, j]), float(self.stderr[i, j]), self.nsamples)

    def estimates(self) -> np.ndarray:
        out = np.empty(self.values.shape, dtype=object)
        for i, j in np.ndindex(*self.values.shape):
            out[i, j] = self.entry(i, j)
        return out


def _basis_key(basis) -> str:
    return basis.basis_id if isinstance(basis, IsotypicComponent) else basis_fingerprint(basis)


def _gram_from(E: np.ndarray, w: np.ndarray, ss: SampleSet, basis_id: str, lam: float) -> GramMatrix:
    R, se = _ratio_matrix(E, E, w)
    G = _hermitian(R)
    se = (se + se.T) / 2
    S, W = _batch_sums(E, E, w, ss.batches())
    eig = _check_pd(G)
    return GramMatrix(basis_id, lam, G, se, len(ss), ss.key, S, W, eig)


def gram_matrix(basis, lam: float, cfg: MCConfig | SampleSet) -> GramMatrix:
    """Monte Carlo Gram matrix ``G_ij = <e_j, e_i>_lam``, symmetrized and checked PD."""
    polys = basis.basis if isinstance(basis, IsotypicComponent) else list(basis)
    n = polys[0].n
    check_lambda(n, lam)
    ss = _samples(n, cfg)
    bid = _basis_key(basis)
    E = ss.basis_values(bid, polys)
    return _gram_from(E, ss.weight(lam), ss, bid, lam)


@dataclass(eq=False)
class ToeplitzBlock:
    mu: object
    lam: float
    matrix: np.ndarray
    stderr: np.ndarray
    gram: GramMatrix
    symbol: str
    mc: MCConfig
    replicates: np.ndarray = field(repr=False)
    raw: np.ndarray = field(repr=False, default=None)
    compression_only: bool = False

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def entry(self, i: int, j: int) -> MCEstimate:
        return MCEstimate(complex(self.matrix[i, j]), float(self.stderr[i, j]), self.gram.nsamples)

    def to_csv(self, fh=None) -> str:
        return block_to_csv(self, fh)


def toeplitz_block(sym: CompiledSymbol, comp: IsotypicComponent, lam: float,
                   cfg: MCConfig | SampleSet) -> ToeplitzBlock:
    """Compression of ``T_a`` to ``comp`` in the lam-orthonormalized basis."""
    check_lambda(comp.n, lam)
    if sym.n != comp.n:
        raise ValueError("symbol and component live on different matrix sizes")
    ss = _samples(comp.n, cfg)
    w = ss.weight(lam)
    E = ss.basis_values(comp.basis_id, comp.basis)
    gram = _gram_from(E, w, ss, comp.basis_id, lam)
    aE = sym.eval_batch(ss.ctx)[:, None] * E
    SA, W = _batch_sums(E, aE, w, ss.batches())
    A = SA.sum(axis=0) / W.sum()
    M = _whiten(gram.chol, A)
    reps = np.stack([_whiten(L, Ak) for L, Ak in zip(gram.replicate_chols(), _leave_one_out(SA, W))])
    return ToeplitzBlock(
        comp.mu, lam, M, jackknife_stderr(reps), gram, sym.text, ss.cfg, reps, A,
        compression_only=sym.kind is SymbolKind.GENERAL,
    )


@dataclass(eq=False)
class CrossBlock:
    """``<a e_j^A, e_i^B>_lam`` for two different components."""

    values: np.ndarray
    stderr: np.ndarray
    nsamples: int

    def estimates(self) -> np.ndarray:
        out = np.empty(self.values.shape, dtype=object)
        for i, j in np.ndindex(*self.values.shape):
            out[i, j] = MCEstimate(complex(self.values[i, j]), float(self.stderr[i, j]), self.nsamples)
        return out

    def z_scores(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.abs(self.values) / self.stderr
        return np.where(self.stderr > 0, z, np.where(np.abs(self.values) > 0, np.inf, 0.0))


def cross_block(sym: CompiledSymbol, compA: IsotypicComponent, compB: IsotypicComponent, lam: float,
                cfg: MCConfig | SampleSet) -> CrossBlock:
    if compA.mu == compB.mu and compA.degree == compB.degree:
        raise ValueError("cross blocks need two distinct components")
    check_lambda(compA.n, lam)
    ss = _samples(compA.n, cfg)
    w = ss.weight(lam)
    EA = ss.basis_values(compA.basis_id, compA.basis)
    EB = ss.basis_values(compB.basis_id, compB.basis)
    R, se = _ratio_matrix(EB, sym.eval_batch(ss.ctx)[:, None] * EA, w)
    return CrossBlock(R, se, len(ss))


# -- defect metrics ---------------------------------------------------------


def _mat(B) -> np.ndarray:
    return B.matrix if isinstance(B, ToeplitzBlock) else np.asarray(B, dtype=complex)


def _scalar_defect(M):
    m = M.shape[0]
    return float(np.linalg.norm(M - np.trace(M) / m * np.eye(m)) / np.linalg.norm(M))


def _commutator_defect(M1, M2):
    return float(np.linalg.norm(M1 @ M2 - M2 @ M1) / (np.linalg.norm(M1) * np.linalg.norm(M2)))


def _normality_defect(M):
    Mh = M.conj().T
    return float(np.linalg.norm(M @ Mh - Mh @ M) / np.linalg.norm(M) ** 2)


def scalar_defect(B) -> float:
    return _scalar_defect(_mat(B))


def _same_basis(B1, B2):
    if isinstance(B1, ToeplitzBlock) and isinstance(B2, ToeplitzBlock):
        if B1.gram.identity != B2.gram.identity:
            raise BasisMismatch("blocks were orthonormalized with different Gram matrices")


def commutator_defect(B1, B2) -> float:
    _same_basis(B1, B2)
    return _commutator_defect(_mat(B1), _mat(B2))


def normality_defect(B) -> float:
    return _normality_defect(_mat(B))


def _jackknife_metric(fn: Callable, *blocks) -> float:
    reps = [b.replicates for b in blocks]
    vals = np.array([fn(*ms) for ms in zip(*reps)])
    return float(jackknife_stderr(vals))


def scalar_defect_noise(B: ToeplitzBlock) -> float:
    return _jackknife_metric(_scalar_defect, B)


def commutator_defect_noise(B1: ToeplitzBlock, B2: ToeplitzBlock) -> float:
    _same_basis(B1, B2)
    return _jackknife_metric(_commutator_defect, B1, B2)


def normality_defect_noise(B: ToeplitzBlock) -> float:
    return _jackknife_metric(_normality_defect, B)


# -- group action on components --------------------------------------------


def _check_unitary(M, name):
    M = as_matrix(M)
    if np.linalg.norm(M @ M.conj().T - np.eye(M.shape[0])) > 1e-10:
        raise NotUnitary(f"{name} is not unitary to 1e-10")
    return M


def action_coefficients(A, B, comp: IsotypicComponent) -> np.ndarray:
    """``C`` with ``e_j(A^{-1} Z B) = sum_i C_ij e_i(Z)`` (least squares in coefficients)."""
    A, B = _check_unitary(A, "A"), _check_unitary(B, "B")
    keys, P = comp.coefficient_matrix()
    S = np.stack([substitute(p, A, B).coefficient_vector(keys) for p in comp.basis], axis=1)
    C, *_ = np.linalg.lstsq(P, S, rcond=None)
    return C


def _pi_from(C: np.ndarray, L: np.ndarray) -> np.ndarray:
    # L* C L^{-*}
    X = solve_triangular(L, C.conj().T, lower=True).conj().T
    return L.conj().T @ X


def pi_matrix(A, B, comp: IsotypicComponent, gram: GramMatrix) -> np.ndarray:
    """Matrix of ``p -> p(A^{-1} Z B)`` on ``comp`` in the lam-orthonormalized basis."""
    if gram.basis_id != comp.basis_id:
        raise BasisMismatch("Gram matrix was computed for a different basis")
    return _pi_from(action_coefficients(A, B, comp), gram.chol)


def group_pair(group: Group, U: np.ndarray, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    I = np.eye(U.shape[0])
    group = Group.parse(group)
    if group is Group.UUn:
        return U, V
    if group is Group.UnL:
        return U, I
    return I, V


@dataclass
class DefectResult:
    value: float
    noise: float
    per_trial: list = field(default_factory=list)


def intertwining_analysis(B: ToeplitzBlock, comp: IsotypicComponent, group: Group | str, rng: RngStream,
                          trials: int = 20) -> DefectResult:
    """Max over Haar samples h of ``||pi(h) M - M pi(h)|| / ||M||`` plus jackknife noise."""
    group = Group.parse(group)
    if B.gram.basis_id != comp.basis_id:
        raise BasisMismatch("block was computed on a different component basis")
    gen = rng.generator()
    U, V = haar_unitaries(comp.n, trials, gen), haar_unitaries(comp.n, trials, gen)
    Cs = [action_coefficients(*group_pair(group, U[t], V[t]), comp) for t in range(trials)]

    def defect(M, L):
        vals = []
        for C in Cs:
            P = _pi_from(C, L)
            vals.append(float(np.linalg.norm(P @ M - M @ P) / np.linalg.norm(M)))
        return vals

    per = defect(B.matrix, B.gram.chol)
    reps = [max(defect(Mk, Lk)) for Mk, Lk in zip(B.replicates, B.gram.replicate_chols())]
    return DefectResult(max(per), float(jackknife_stderr(np.array(reps))), per)


def intertwining_defect(B: ToeplitzBlock, comp: IsotypicComponent, group: Group | str, rng: RngStream,
                        trials: int = 20) -> float:
    return intertwining_analysis(B, comp, group, rng, trials).value


# -- export ----------------------------------------------------------------


def block_to_csv(B: ToeplitzBlock, fh=None) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["row", "col", "re", "im", "stderr"])
    for i, j in np.ndindex(*B.matrix.shape):
        v = B.matrix[i, j]
        wr.writerow([i, j, repr(float(v.real)), repr(float(v.imag)), repr(float(B.stderr[i, j]))])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text
