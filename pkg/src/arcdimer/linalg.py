"""Pfaffians, determinant ratios, trace series and inverse updates."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np


class LinalgError(ValueError):
    pass


@dataclass(frozen=True)
class PfaffianResult:
    """Pfaffian as ``phase * exp(log_abs)``; ``value`` may overflow to inf."""

    phase: complex
    log_abs: float
    method: str

    @property
    def value(self) -> complex:
        if self.log_abs == -math.inf:
            return 0j
        with np.errstate(over="ignore"):
            return complex(self.phase * np.exp(self.log_abs))

    def ratio(self, other: "PfaffianResult") -> complex:
        """self / other, computed from log magnitudes."""
        return complex(self.phase / other.phase * np.exp(self.log_abs - other.log_abs))


def _as_skew(m) -> np.ndarray:
    a = np.array(getattr(m, "data", m), dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise LinalgError("matrix must be square")
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if np.abs(a + a.T).max(initial=0.0) > 1e-12 * scale:
        raise LinalgError("matrix is not skew-symmetric")
    return a


def _householder(x: np.ndarray) -> tuple[np.ndarray, float, complex]:
    """Unitary reflector H = I - tau v v^H with H x = alpha e_1."""
    sigma = float(np.vdot(x[1:], x[1:]).real)
    if sigma == 0.0:
        return np.zeros_like(x), 0.0, x[0]
    norm_x = math.sqrt(abs(x[0]) ** 2 + sigma)
    phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
    v = x.copy()
    v[0] += phase * norm_x
    v /= np.linalg.norm(v)
    return v, 2.0, -phase * norm_x


def pfaffian(m, check_oracle: bool = False) -> PfaffianResult:
    """Pfaffian by Householder tridiagonalisation of a complex skew matrix.

    Each reflector is a unitary congruence with determinant -1, and the
    Pfaffian of the final tridiagonal matrix is the product of every other
    superdiagonal entry.  Magnitudes are accumulated in log form.
    """
    a = _as_skew(m)
    n = a.shape[0]
    if n % 2:
        return PfaffianResult(1.0 + 0j, -math.inf, "odd-dimension")
    if n == 0:
        return PfaffianResult(1.0 + 0j, 0.0, "householder")
    phase = 1.0 + 0j
    log_abs = 0.0
    for i in range(n - 2):
        v, tau, alpha = _householder(a[i + 1 :, i])
        a[i + 1, i] = alpha
        a[i, i + 1] = -alpha
        a[i + 2 :, i] = 0
        a[i, i + 2 :] = 0
        if tau != 0.0:
            w = tau * (a[i + 1 :, i + 1 :] @ v.conj())
            a[i + 1 :, i + 1 :] += np.outer(v, w) - np.outer(w, v)
            phase = -phase
        if i % 2 == 0:
            t = -alpha
            if t == 0:
                return PfaffianResult(1.0 + 0j, -math.inf, "householder")
            phase *= t / abs(t)
            log_abs += math.log(abs(t))
    t = a[n - 2, n - 1]
    if t == 0:
        return PfaffianResult(1.0 + 0j, -math.inf, "householder")
    phase *= t / abs(t)
    log_abs += math.log(abs(t))
    res = PfaffianResult(complex(phase), log_abs, "householder")
    if check_oracle and n <= 8:
        ref = pfaffian_combinatorial(m)
        if abs(res.value - ref) > 1e-10 * max(1.0, abs(ref)):
            raise LinalgError("Householder Pfaffian disagrees with the pairing sum")
    return res


def pairings(items: Sequence[int]):
    """All perfect pairings of ``items`` (each as a list of pairs)."""
    items = list(items)
    if not items:
        yield []
        return
    first = items[0]
    for k in range(1, len(items)):
        rest = items[1:k] + items[k + 1 :]
        for p in pairings(rest):
            yield [(first, items[k])] + p


def crossing_parity(pairs: Sequence[tuple[int, int]]) -> int:
    """Number of crossing chord pairs (mod 2) for points placed in index order."""
    chords = [tuple(sorted(p)) for p in pairs]
    cnt = 0
    for (a, b), (c, d) in combinations(chords, 2):
        if a < c < b < d or c < a < d < b:
            cnt += 1
    return cnt & 1


def pfaffian_combinatorial(m) -> complex:
    """Signed sum over pairings; exponential cost, used only as an oracle."""
    a = _as_skew(m)
    n = a.shape[0]
    if n % 2:
        return 0j
    if n > 12:
        raise LinalgError("pairing-sum oracle is limited to dimension 12")
    total = 0j
    for p in pairings(range(n)):
        term = 1.0 + 0j
        for i, j in p:
            term *= a[i, j]
            if term == 0:
                break
        if term != 0:
            total += -term if crossing_parity(p) else term
    return total


# ---------------------------------------------------------------------------
# determinant ratios and trace series
# ---------------------------------------------------------------------------


@dataclass
class RatioSeries:
    traces: np.ndarray  # T_1 .. T_n
    c: float
    spectral_radius: float
    matrix: np.ndarray

    def series(self, alpha: float) -> complex:
        """exp(1/2 sum_k (-1)^(k-1) (c alpha)^k T_k / k), truncated."""
        if alpha * self.c * self.spectral_radius >= 1:
            raise LinalgError(
                f"alpha={alpha} outside the disc of convergence (spectral radius {self.spectral_radius:.4g})"
            )
        k = np.arange(1, len(self.traces) + 1)
        s = np.sum((-1.0) ** (k - 1) * (self.c * alpha) ** k * self.traces / k)
        return complex(np.exp(0.5 * s))

    def direct(self, alpha: float, steps: int = 64) -> complex:
        """det(I + c alpha A)^(1/2) with the branch continued from alpha = 0."""
        return sqrt_det_continuation(self.matrix, self.c, alpha, steps)


def sqrt_det_continuation(a: np.ndarray, c: float, alpha: float, steps: int = 64) -> complex:
    n = a.shape[0]
    eye = np.eye(n)
    root = 1.0 + 0j
    for t in np.linspace(0.0, alpha, steps + 1)[1:]:
        d = complex(np.linalg.det(eye + c * t * a))
        cand = cmath.sqrt(d)
        root = cand if abs(cand - root) <= abs(cand + root) else -cand
    return root


def matrix_power_traces(a: np.ndarray, n_max: int) -> np.ndarray:
    out = np.empty(n_max, dtype=complex)
    p = np.array(a, dtype=complex)
    for k in range(n_max):
        out[k] = np.trace(p)
        if k + 1 < n_max:
            p = p @ a
    return out


def newton_traces(a: np.ndarray, n_max: int) -> np.ndarray:
    """Power sums tr(A^k) from Faddeev-LeVerrier coefficients and Newton's identities."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    coef = [1.0 + 0j]  # characteristic polynomial, monic
    m = np.zeros_like(a)
    eye = np.eye(n)
    for k in range(1, n + 1):
        m = a @ m + coef[-1] * eye
        coef.append(-np.trace(a @ m) / k)
    # e_k = (-1)^k coef_k; Newton: p_k = sum_{i<k} (-1)^(i-1) e_i p_{k-i} + (-1)^(k-1) k e_k
    e = [(-1) ** k * coef[k] for k in range(n + 1)]
    p = [0j] * (n_max + 1)
    for k in range(1, n_max + 1):
        s = 0j
        for i in range(1, min(k, n + 1)):
            s += (-1) ** (i - 1) * e[i] * p[k - i]
        if k <= n:
            s += (-1) ** (k - 1) * k * e[k]
        p[k] = s
    return np.array(p[1:], dtype=complex)


def det_ratio_series(a: np.ndarray, n_max: int, c: float = 2.0) -> RatioSeries:
    """Traces T_k = tr(A^k), k <= n_max, and evaluators for det(I + c alpha A)^(1/2)."""
    if n_max < 1:
        raise LinalgError("n_max must be at least 1")
    a = np.asarray(a, dtype=complex)
    rho = float(np.abs(np.linalg.eigvals(a)).max(initial=0.0)) if a.size else 0.0
    return RatioSeries(matrix_power_traces(a, n_max), c, rho, a)


# ---------------------------------------------------------------------------
# inverses
# ---------------------------------------------------------------------------


def invert(m, tol: float = 1e-9) -> np.ndarray:
    a = np.asarray(getattr(m, "data", m), dtype=complex)
    try:
        inv = np.linalg.inv(a)
    except np.linalg.LinAlgError as exc:
        raise LinalgError("matrix is singular") from exc
    resid = np.abs(a @ inv - np.eye(a.shape[0])).max(initial=0.0)
    if not np.isfinite(resid) or resid > tol:
        cond = np.linalg.cond(a)
        raise LinalgError(f"numerically singular matrix (condition {cond:.3e})")
    return inv


def rank2_update(minv: np.ndarray, remove: Sequence[int]) -> np.ndarray:
    """Inverse of M with rows and columns ``remove`` deleted, from M^{-1}.

    Uses the Schur complement identity
    (M_RR)^{-1} = N_RR - N_RP (N_PP)^{-1} N_PR with N = M^{-1}.
    """
    p = list(remove)
    n = minv.shape[0]
    r = [k for k in range(n) if k not in set(p)]
    npp = minv[np.ix_(p, p)]
    if abs(np.linalg.det(npp)) < 1e-300:
        raise LinalgError("removed block of the inverse is singular")
    return minv[np.ix_(r, r)] - minv[np.ix_(r, p)] @ np.linalg.solve(npp, minv[np.ix_(p, r)])


def delete_pair_update(kinv: np.ndarray, b: int, w: int) -> np.ndarray:
    """Inverse of a square W x B block with row ``w`` and column ``b`` deleted.

    ``kinv`` is indexed (black, white).  In the skew form this is the rank-2
    update of ``rank2_update``; here it collapses to one rank-1 correction.
    """
    piv = kinv[b, w]
    if abs(piv) < 1e-300:
        raise LinalgError("pivot vanishes")
    out = kinv - np.outer(kinv[:, w], kinv[b, :]) / piv
    out = np.delete(np.delete(out, b, axis=0), w, axis=1)
    return out
