"""Geometry of the type I Cartan domain of n x n complex matrices.

Matrices are plain ``numpy`` complex arrays. A point of the domain is a
matrix ``Z`` with ``Z* Z < I``, i.e. spectral norm strictly below one.
Singular value factorizations follow the convention ``Z = U D(x) V`` where
``V`` is the full right factor (not its adjoint).

All randomness is drawn through :class:`RngStream`, a counter-based
stream keyed by ``(master_seed, stream_index)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NotHermitianPSD, RejectionBudgetExceeded, SingularMatrix

UNITARY_TOL = 1e-12
RECON_TOL = 1e-10
PSD_TOL = 1e-8
DEGENERATE_GAP = 1e-10

# stream tags keep independent consumers of one master seed apart
TAG_DEFAULT = 0
TAG_DOMAIN_SAMPLES = 1
TAG_HAAR = 2


def as_matrix(Z) -> np.ndarray:
    """Validate and convert to a square complex128 array."""
    Z = np.asarray(Z, dtype=np.complex128)
    if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {Z.shape}")
    return Z


def dagger(Z: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the last two axes (works on stacks)."""
    return np.conj(np.swapaxes(Z, -1, -2))


@dataclass(frozen=True)
class DomainInfo:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")

    @property
    def dimension(self) -> int:
        return self.n * self.n

    @property
    def rank(self) -> int:
        return self.n

    @property
    def genus(self) -> int:
        return 2 * self.n

    @property
    def lambda_min(self) -> int:
        # weighted Bergman spaces need lambda strictly above this
        return self.genus - 1

    def admissible(self, lam: float) -> bool:
        return lam > self.lambda_min


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream identified by ``(master_seed, stream_index)``.

    Each call to :meth:`generator` returns a fresh generator positioned at
    the start of the stream, so equal streams yield identical samples.
    """

    master_seed: int
    stream_index: int = 0
    tag: int = TAG_DEFAULT

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=int(self.master_seed) & 0xFFFFFFFFFFFFFFFF,
            spawn_key=(int(self.tag), int(self.stream_index)),
        )
        return np.random.Generator(np.random.Philox(seq))

    def substream(self, index: int, tag: int | None = None) -> "RngStream":
        return RngStream(self.master_seed, index, self.tag if tag is None else tag)


@dataclass(frozen=True, eq=False)
class DomainPoint:
    Z: np.ndarray

    def __post_init__(self):
        Z = as_matrix(self.Z)
        if not in_domain(Z):
            raise ValueError("matrix is not in the domain (spectral norm >= 1)")
        object.__setattr__(self, "Z", Z)

    @property
    def n(self) -> int:
        return self.Z.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.Z if dtype is None else self.Z.astype(dtype)


@dataclass(frozen=True, eq=False)
class PolarForm:
    """``Z = U D(x) V`` with unitary ``U``, ``V`` and descending ``x``."""

    U: np.ndarray
    x: np.ndarray
    V: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        U, V = as_matrix(self.U), as_matrix(self.V)
        x = np.asarray(self.x, dtype=float)
        n = U.shape[0]
        if V.shape != (n, n) or x.shape != (n,):
            raise ValueError("inconsistent PolarForm shapes")
        for name, M in (("U", U), ("V", V)):
            if np.linalg.norm(M @ dagger(M) - np.eye(n)) > UNITARY_TOL * max(1, n):
                raise ValueError(f"{name} is not unitary")
        if np.any(x < 0) or np.any(np.diff(x) > 0):
            raise ValueError("x must be non-negative and sorted descending")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.U.shape[0]


def spectral_norm(Z) -> float:
    Z = as_matrix(Z)
    return float(np.linalg.svd(Z, compute_uv=False)[0])


def in_domain(Z) -> bool:
    return spectral_norm(Z) < 1.0


def in_domain_batch(Zs: np.ndarray) -> np.ndarray:
    """Boolean mask over a stack of matrices of shape (N, n, n)."""
    return np.linalg.svd(Zs, compute_uv=False)[:, 0] < 1.0


def svd_ordered(Z) -> PolarForm:
    Z = as_matrix(Z)
    W, s, Vh = np.linalg.svd(Z)
    # numpy returns Z = W diag(s) Vh; Vh already is the full right factor
    gaps = -np.diff(s)
    degenerate = bool(gaps.size and gaps.min() < DEGENERATE_GAP)
    return PolarForm(W, s, Vh, degenerate=degenerate)


def reconstruct(p: PolarForm) -> np.ndarray:
    return (p.U * p.x) @ p.V


def fiber_action(t, p: PolarForm) -> PolarForm:
    """Move along the torus fiber: ``(U D(conj t), x, D(t) V)``."""
    t = np.asarray(t, dtype=np.complex128)
    if t.shape != (p.n,):
        raise ValueError("t must have one entry per singular value")
    if np.any(np.abs(np.abs(t) - 1.0) > UNITARY_TOL):
        raise ValueError("fiber elements must have unit modulus")
    return PolarForm(p.U * np.conj(t), p.x, t[:, None] * p.V, degenerate=p.degenerate)


def psd_sqrt(P) -> np.ndarray:
    P = as_matrix(P)
    if np.linalg.norm(P - dagger(P)) > PSD_TOL:
        raise NotHermitianPSD("matrix is not Hermitian")
    w, Q = np.linalg.eigh((P + dagger(P)) / 2)
    if w.min() < -PSD_TOL:
        raise NotHermitianPSD(f"negative eigenvalue {w.min():.3e}")
    return (Q * np.sqrt(np.clip(w, 0.0, None))) @ dagger(Q)


def left_polar(Z) -> tuple[np.ndarray, np.ndarray]:
    """``Z = U P`` with ``P = (Z* Z)^(1/2)``; requires invertible ``Z``."""
    Z = as_matrix(Z)
    W, s, Vh = np.linalg.svd(Z)
    if s[-1] < 1e-12:
        raise SingularMatrix(f"smallest singular value {s[-1]:.3e}; unitary factor not unique")
    U = W @ Vh
    P = (dagger(Vh) * s) @ Vh
    return U, (P + dagger(P)) / 2


def right_polar(Z) -> tuple[np.ndarray, np.ndarray]:
    """``Z = Q V`` with ``Q = (Z Z*)^(1/2)``; requires invertible ``Z``."""
    Z = as_matrix(Z)
    W, s, Vh = np.linalg.svd(Z)
    if s[-1] < 1e-12:
        raise SingularMatrix(f"smallest singular value {s[-1]:.3e}; unitary factor not unique")
    Q = (W * s) @ dagger(W)
    return (Q + dagger(Q)) / 2, W @ Vh


def haar_unitaries(n: int, count: int, rng: RngStream | np.random.Generator) -> np.ndarray:
    """``count`` independent Haar unitaries, shape (count, n, n).

    QR of a complex Ginibre matrix, with the columns of Q rephased by the
    phases of diag(R) so the law is exactly Haar.
    """
    if n < 1:
        raise ValueError("n must be positive")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    G = (gen.standard_normal((count, n, n)) + 1j * gen.standard_normal((count, n, n))) / np.sqrt(2)
    Q, R = np.linalg.qr(G)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    return Q * (d / np.abs(d))[:, None, :]


def haar_unitary(n: int, rng: RngStream | np.random.Generator) -> np.ndarray:
    return haar_unitaries(n, 1, rng)[0]


@dataclass(frozen=True, eq=False)
class DomainSample:
    """A batch of uniform domain points together with sampler bookkeeping."""

    points: np.ndarray
    proposals: int
    proposal: str = "rowball"
    meta: dict = field(default_factory=dict)

    @property
    def accepted(self) -> int:
        return self.points.shape[0]

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposals if self.proposals else 0.0


_RATE_GUESS = {"rowball": {1: 1.0, 2: 0.33, 3: 0.025}, "polydisc": {1: 1.0, 2: 0.083, 3: 1.2e-4}}


def _propose(gen: np.random.Generator, n: int, size: int, proposal: str) -> np.ndarray:
    if proposal == "polydisc":
        r = np.sqrt(gen.random((size, n, n)))
        theta = 2 * np.pi * gen.random((size, n, n))
        return r * np.exp(1j * theta)
    if proposal == "rowball":
        # each row uniform in the unit ball of C^n = R^(2n)
        g = gen.standard_normal((size, n, 2 * n))
        g /= np.linalg.norm(g, axis=2, keepdims=True)
        g *= gen.random((size, n, 1)) ** (1.0 / (2 * n))
        return g[..., :n] + 1j * g[..., n:]
    raise ValueError(f"unknown proposal {proposal!r}")


def sample_domain_batch(
    n: int,
    count: int,
    rng: RngStream | np.random.Generator,
    proposal: str = "rowball",
    max_proposals: int = 10**7,
) -> DomainSample:
    """Draw ``count`` points uniformly (Lebesgue) from the domain.

    Rejection sampling from a box that contains the domain: either the
    polydisc over all n^2 entries, or the product of the unit balls of the
    rows (every row of a domain point has norm < 1). Both are exact.
    ``RejectionBudgetExceeded`` is raised when more than ``max_proposals``
    consecutive proposals fail.
    """
    if n < 1:
        raise ValueError("n must be positive")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    rate = _RATE_GUESS[proposal].get(n, 1e-6)
    chunks, have, proposed, dry = [], 0, 0, 0
    while have < count:
        need = count - have
        size = int(min(max(need / max(rate, 1e-9) * 1.1 + 16, 256), 2**18))
        # never propose past the remaining consecutive-failure budget
        size = max(1, min(size, max_proposals - dry + 1))
        Z = _propose(gen, n, size, proposal)
        proposed += size
        ok = Z[in_domain_batch(Z)]
        if ok.shape[0] == 0:
            dry += size
            if dry > max_proposals:
                raise RejectionBudgetExceeded(
                    f"no acceptance in {dry} proposals for n={n}; sampler unsuitable"
                )
        else:
            dry = 0
            chunks.append(ok)
            have += ok.shape[0]
            rate = have / proposed
    points = np.concatenate(chunks)[:count] if chunks else np.zeros((0, n, n), complex)
    return DomainSample(points, proposed, proposal)


def sample_domain_uniform(n: int, rng: RngStream | np.random.Generator, proposal: str = "rowball",
                          max_proposals: int = 10**7) -> DomainPoint:
    return DomainPoint(sample_domain_batch(n, 1, rng, proposal, max_proposals).points[0])
