"""Continuous-time OU model objects and the exact VAR(1) discretization.

The model is dX = -K (X - theta) dt + Sigma dL with K lower triangular
(positive diagonal for stationarity) and Sigma lower triangular with unit
diagonal. Sampling it on a uniform grid of step dt gives a VAR(1) with
a = (I - exp(-K dt)) theta and B = exp(-K dt); the per-step noise is driven
by three independent components mixed through a unit lower triangular S.

Time is measured in years; monthly data uses dt = 1/12.

All linear algebra here is fixed-size (3x3 state, 9x9 Kronecker sum) with
direct triangular algorithms, so results are deterministic and the
triangular structure is preserved exactly (off-pattern entries stay 0.0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .nig import NigFree, NigParams, expand_constrained, nig_moments

__all__ = [
    "OuParams",
    "Var1Params",
    "StationarityResult",
    "ou_to_var1",
    "var1_to_ou",
    "gaussian_step_covariance",
    "stationarity_check",
    "expm_lower_triangular",
    "logm_lower_triangular_3x3",
    "solve_lower_triangular",
]


def _matrix33(value, name: str) -> np.ndarray:
    m = np.array(value, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise ValueError(f"{name} must be a finite 3x3 matrix")
    return m


def _vector3(value, name: str) -> np.ndarray:
    v = np.array(value, dtype=float).reshape(-1)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be a finite 3-vector")
    return v


def _require_lower_triangular(m: np.ndarray, name: str) -> None:
    if np.any(np.triu(m, 1) != 0.0):
        raise ValueError(f"{name} must be lower triangular (exact zeros above the diagonal)")


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class OuParams:
    """Continuous-time parameters (K, theta, Sigma) of the 3-d OU dynamics."""

    K: np.ndarray
    theta: np.ndarray
    Sigma: np.ndarray

    def __post_init__(self):
        K = _matrix33(self.K, "K")
        theta = _vector3(self.theta, "theta")
        Sigma = _matrix33(self.Sigma, "Sigma")
        _require_lower_triangular(K, "K")
        _require_lower_triangular(Sigma, "Sigma")
        if np.any(np.diag(K) <= 0.0):
            raise ValueError("K must have positive diagonal entries (stationarity)")
        if np.any(np.diag(Sigma) != 1.0):
            raise ValueError("Sigma must have unit diagonal")
        object.__setattr__(self, "K", _freeze(K))
        object.__setattr__(self, "theta", _freeze(theta))
        object.__setattr__(self, "Sigma", _freeze(Sigma))


@dataclass(frozen=True)
class Var1Params:
    """Discrete-time VAR(1) parameters with explicit per-component noise.

    X_{k+1} = a + B X_k + S eps_k, with eps_k having independent components
    of standard deviation sigma[i]; under the "nig" family component i is
    NIG with mean 0 and variance sigma[i]^2 (use from_nig_free to build the
    quadruples from the free coordinates).

    B must be lower triangular with positive diagonal. Diagonal entries >= 1
    describe a non-mean-reverting system: construction allows them so that
    explosive projections can be studied, but converting back to
    continuous-time parameters and the estimation routines require the
    stationary case (diagonal inside (0, 1)).
    """

    a: np.ndarray
    B: np.ndarray
    S: np.ndarray
    sigma: np.ndarray
    noise_family: str = "gaussian"
    nig: Optional[tuple[NigParams, NigParams, NigParams]] = None
    dt: float = 1.0 / 12.0

    def __post_init__(self):
        a = _vector3(self.a, "a")
        B = _matrix33(self.B, "B")
        S = _matrix33(self.S, "S")
        sigma = _vector3(self.sigma, "sigma")
        _require_lower_triangular(B, "B")
        _require_lower_triangular(S, "S")
        if np.any(np.diag(B) <= 0.0):
            raise ValueError("B must have positive diagonal entries")
        if np.any(np.diag(S) != 1.0):
            raise ValueError("S must have unit diagonal")
        if np.any(sigma <= 0.0):
            raise ValueError("sigma components must be > 0")
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError("dt must be finite and > 0")
        if self.noise_family not in ("gaussian", "nig"):
            raise ValueError("noise_family must be 'gaussian' or 'nig'")
        if self.noise_family == "nig":
            if self.nig is None or len(self.nig) != 3:
                raise ValueError("nig family requires three NigParams")
            for i, q in enumerate(self.nig):
                if not isinstance(q, NigParams):
                    raise ValueError("nig entries must be NigParams")
                m = nig_moments(q)
                if abs(m.mean) > 1e-8 * sigma[i] or abs(m.variance - sigma[i] ** 2) > 1e-8 * sigma[i] ** 2:
                    raise ValueError(
                        f"nig[{i}] must have mean 0 and variance sigma[{i}]^2 "
                        "(build it with expand_constrained)")
            object.__setattr__(self, "nig", tuple(self.nig))
        elif self.nig is not None:
            raise ValueError("gaussian family must not carry nig parameters")
        object.__setattr__(self, "a", _freeze(a))
        object.__setattr__(self, "B", _freeze(B))
        object.__setattr__(self, "S", _freeze(S))
        object.__setattr__(self, "sigma", _freeze(sigma))

    @classmethod
    def from_nig_free(cls, a, B, S, sigma, log_gamma: Sequence[float],
                      beta: Sequence[float], dt: float = 1.0 / 12.0) -> "Var1Params":
        """Build an NIG-family instance from per-component (log gamma, beta)."""
        sigma = _vector3(sigma, "sigma")
        quads = tuple(expand_constrained(NigFree(lg, be, sg))
                      for lg, be, sg in zip(log_gamma, beta, sigma, strict=True))
        return cls(a=a, B=B, S=S, sigma=sigma, noise_family="nig", nig=quads, dt=dt)

    def sign_pattern_ok(self) -> bool:
        """Check the sign pattern b21>0, b31<0, b32>0, s21>0, s31<0, s32>0."""
        B, S = self.B, self.S
        return bool(B[1, 0] > 0 and B[2, 0] < 0 and B[2, 1] > 0
                    and S[1, 0] > 0 and S[2, 0] < 0 and S[2, 1] > 0)


def solve_lower_triangular(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Forward substitution for a lower triangular system L x = b."""
    L = np.asarray(L, dtype=float)
    b = np.asarray(b, dtype=float)
    n = L.shape[0]
    x = np.zeros_like(b)
    for i in range(n):
        if L[i, i] == 0.0:
            raise ValueError("singular triangular system (zero diagonal entry)")
        x[i] = (b[i] - L[i, :i] @ x[:i]) / L[i, i]
    return x


def expm_lower_triangular(A: np.ndarray) -> np.ndarray:
    """Matrix exponential of a lower triangular matrix (any fixed size).

    Scaling-and-squaring with a 20-term Taylor expansion; products of lower
    triangular matrices never touch the upper triangle, so the structure is
    preserved exactly.
    """
    A = np.asarray(A, dtype=float)
    _require_lower_triangular(A, "A")
    n = A.shape[0]
    nrm = float(np.abs(A).sum(axis=1).max())
    s = 0
    if nrm > 0.25:
        s = int(math.ceil(math.log2(nrm / 0.25)))
    M = A / (2.0 ** s)
    E = np.eye(n)
    term = np.eye(n)
    for k in range(1, 21):
        term = term @ M / k
        E = E + term
    for _ in range(s):
        E = E @ E
    return E


def _dd1_log(x: float, y: float) -> float:
    """First divided difference of log over positive nodes, stable for x ~ y."""
    if x == y:
        return 1.0 / x
    u = (x - y) / y
    return math.log1p(u) / (y * u)


def _h_complete(d: Sequence[float], j: int) -> float:
    """Complete homogeneous symmetric polynomial h_j of the given values."""
    h = [0.0] * (j + 1)
    h[0] = 1.0
    for v in d:
        for k in range(1, j + 1):
            h[k] += v * h[k - 1]
    return h[j]


def _dd2_log(x: float, y: float, z: float) -> float:
    """Second divided difference of log over positive nodes.

    Nodes are sorted so the outer subtraction uses the widest pair; in the
    near-confluent case a Taylor series about the node mean is used instead
    (divided differences of monomials are complete homogeneous symmetric
    polynomials).
    """
    p, q, r = sorted((x, y, z))
    m = (p + q + r) / 3.0
    if r - p < 0.05 * m:
        d = (p - m, q - m, r - m)
        total = 0.0
        sign = 1.0  # becomes (-1)^(k-1) after the flip below
        mk = m
        for k in range(2, 16):
            sign = -sign
            mk *= m
            total += sign / (k * mk) * _h_complete(d, k - 2)
        return total
    return (_dd1_log(p, q) - _dd1_log(q, r)) / (p - r)


def logm_lower_triangular_3x3(B: np.ndarray) -> np.ndarray:
    """Matrix logarithm of a 3x3 lower triangular matrix with positive
    diagonal, via the divided-difference (Opitz) closed form."""
    B = _matrix33(B, "B")
    _require_lower_triangular(B, "B")
    d = np.diag(B)
    if np.any(d <= 0.0):
        raise ValueError("matrix log requires positive diagonal entries")
    L = np.zeros((3, 3))
    L[0, 0] = math.log(d[0])
    L[1, 1] = math.log(d[1])
    L[2, 2] = math.log(d[2])
    L[1, 0] = B[1, 0] * _dd1_log(d[0], d[1])
    L[2, 1] = B[2, 1] * _dd1_log(d[1], d[2])
    L[2, 0] = (B[2, 0] * _dd1_log(d[0], d[2])
               + B[2, 1] * B[1, 0] * _dd2_log(d[0], d[1], d[2]))
    return L


def ou_to_var1(p: OuParams, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Map continuous-time (K, theta) to the exact VAR(1) drift (a, B) at
    step dt: B = exp(-K dt), a = (I - B) theta."""
    if not (math.isfinite(dt) and dt > 0.0):
        raise ValueError("dt must be finite and > 0")
    B = expm_lower_triangular(-p.K * dt)
    a = (np.eye(3) - B) @ p.theta
    return a, B


def var1_to_ou(a, B, dt: float = 1.0 / 12.0) -> tuple[np.ndarray, np.ndarray]:
    """Recover (K, theta) from VAR(1) drift parameters:
    K = -log(B)/dt, theta = (I - B)^{-1} a.

    Requires a mean-reverting B (diagonal strictly inside (0, 1))."""
    a = _vector3(a, "a")
    B = _matrix33(B, "B")
    _require_lower_triangular(B, "B")
    d = np.diag(B)
    if np.any(d <= 0.0) or np.any(d >= 1.0):
        raise ValueError("non-stationary B: diagonal entries must lie in (0, 1)")
    K = -logm_lower_triangular_3x3(B) / dt
    theta = solve_lower_triangular(np.eye(3) - B, a)
    return K, theta


def gaussian_step_covariance(p: OuParams, dt: float) -> np.ndarray:
    """Covariance of the exact one-step noise of the Gaussian-driven OU
    discretization:

        vec(C) = (K (+) K)^{-1} [I - exp(-(K (+) K) dt)] vec(Sigma Sigma'),

    where (+) is the Kronecker sum. dt = inf gives the stationary covariance
    (the solution of K C + C K' = Sigma Sigma')."""
    if not dt > 0.0:
        raise ValueError("dt must be > 0")
    eye3 = np.eye(3)
    KK = np.kron(p.K, eye3) + np.kron(eye3, p.K)
    v = (p.Sigma @ p.Sigma.T).flatten(order="F")
    if math.isinf(dt):
        w = v
    else:
        w = v - expm_lower_triangular(-KK * dt) @ v
    x = solve_lower_triangular(KK, w)
    C = x.reshape(3, 3, order="F")
    return 0.5 * (C + C.T)


@dataclass(frozen=True)
class StationarityResult:
    ok: bool
    eigenvalues: tuple[float, float, float]
    detail: str

    def __bool__(self) -> bool:
        return self.ok


def stationarity_check(matrix, kind: str = "B") -> StationarityResult:
    """Check mean reversion from a triangular system matrix.

    kind "B": all diagonal entries of the one-step matrix must lie in (0, 1).
    kind "K": all diagonal entries of the reversion-speed matrix must be > 0.
    The diagonal entries are the eigenvalues of the triangular matrix.
    """
    m = _matrix33(matrix, "matrix")
    eig = tuple(float(x) for x in np.diag(m))
    if kind == "B":
        ok = all(0.0 < x < 1.0 for x in eig)
        detail = "all B eigenvalues in (0, 1)" if ok else \
            f"B eigenvalues outside (0, 1): {[x for x in eig if not 0.0 < x < 1.0]}"
    elif kind == "K":
        ok = all(x > 0.0 for x in eig)
        detail = "all K eigenvalues > 0" if ok else \
            f"non-positive K eigenvalues: {[x for x in eig if x <= 0.0]}"
    else:
        raise ValueError("kind must be 'B' or 'K'")
    return StationarityResult(ok=ok, eigenvalues=eig, detail=detail)
