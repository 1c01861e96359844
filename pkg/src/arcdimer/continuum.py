"""Continuum kernels, path integrals c_n and closed-form targets.

For a symmetric domain with a conformal map ``phi`` onto the upper half
plane, the complexified Dirichlet Green's function gives the two kernels

    F_+(u, v) = -(1/2pi) phi'(u) / (phi(u) - phi(v))
    F_-(u, v) =  (1/2pi) conj(phi'(u)) / (conj(phi(u)) - phi(v)).

The coefficients c_n are cyclic n-fold integrals along a path from z to the
flat boundary point.  Discretising the path with Gauss-Legendre nodes turns
them into traces of powers of a 2m x 2m kernel matrix, mirroring the
discrete traces tr((S K^{-1})^n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .zipper import bell_polynomial, kasteleyn_wb


class ContinuumError(ValueError):
    pass


@dataclass(frozen=True)
class ConformalKernel:
    """Kernels F_+ and F_- from a conformal map onto the upper half plane."""

    name: str
    phi: Callable[[np.ndarray], np.ndarray]
    dphi: Callable[[np.ndarray], np.ndarray]

    def F_plus(self, u, v):
        u = np.asarray(u, dtype=complex)
        v = np.asarray(v, dtype=complex)
        return -self.dphi(u) / (self.phi(u) - self.phi(v)) / (2 * math.pi)

    def F_minus(self, u, v):
        u = np.asarray(u, dtype=complex)
        v = np.asarray(v, dtype=complex)
        return np.conj(self.dphi(u)) / (np.conj(self.phi(u)) - self.phi(v)) / (2 * math.pi)


GreenKernel = ConformalKernel


def strip_kernel() -> ConformalKernel:
    """Horizontal strip of height pi centred on the real axis."""
    return ConformalKernel("strip", lambda u: 1j * np.exp(u), lambda u: 1j * np.exp(u))


def half_plane_kernel() -> ConformalKernel:
    """Right half plane {Re u > 0}, symmetric across the real axis."""
    return ConformalKernel("half-plane", lambda u: 1j * u, lambda u: 1j * np.ones_like(u))


def kernel_by_name(name: str) -> ConformalKernel:
    kernels = {"strip": strip_kernel, "half-plane": half_plane_kernel}
    if name not in kernels:
        raise ContinuumError(f"unknown kernel {name!r}")
    return kernels[name]()


def path_nodes(waypoints: Sequence[complex], m: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on a polyline and the complex weights dz."""
    x, w = np.polynomial.legendre.leggauss(m)
    t = (x + 1) / 2
    zs, dz = [], []
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        a, b = complex(a), complex(b)
        zs.append(a + (b - a) * t)
        dz.append((b - a) * w / 2)
    return np.concatenate(zs), np.concatenate(dz)


def kernel_matrix(kernel: ConformalKernel, waypoints: Sequence[complex], m: int = 48) -> np.ndarray:
    """Block matrix A with c_n = 2 i^n tr(A^n).

    Block (sigma, tau) at (k, l) is sigma * F^{(sigma)}_{-sigma tau}(conj z_l, z_k)
    times dz_k^{(sigma)}, where ^{(-1)} means complex conjugation.
    """
    z, dz = path_nodes(waypoints, m)
    u = np.conj(z)[None, :]  # column index l
    v = z[:, None]  # row index k
    fp = kernel.F_plus(u, v)
    fm = kernel.F_minus(u, v)
    n = len(z)
    a = np.zeros((2 * n, 2 * n), dtype=complex)
    # sigma = +1 rows, sigma = -1 rows; tau = +1 cols, tau = -1 cols
    a[:n, :n] = fm * dz[:, None]  # -sigma tau = -1
    a[:n, n:] = fp * dz[:, None]  # -sigma tau = +1
    a[n:, :n] = -np.conj(fp) * np.conj(dz)[:, None]
    a[n:, n:] = -np.conj(fm) * np.conj(dz)[:, None]
    return a


@dataclass
class CnTable:
    """Coefficients c_1..c_K with the quadrature that produced them."""

    values: np.ndarray
    path: tuple
    nodes_per_segment: int
    rule: str = "gauss-legendre"
    imag_residual: float = 0.0
    richardson_change: float | None = None

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, k):
        return self.values[k]

    def __iter__(self):
        return iter(self.values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def growth(self) -> np.ndarray:
        """|c_n|^(1/n), which should stay bounded."""
        n = np.arange(1, len(self.values) + 1)
        return np.abs(self.values) ** (1.0 / n)

    def to_dict(self) -> dict:
        return {
            "c": [float(v) for v in self.values],
            "path": [[float(complex(p).real), float(complex(p).imag)] for p in self.path],
            "nodes_per_segment": self.nodes_per_segment,
            "rule": self.rule,
            "imag_residual": self.imag_residual,
            "richardson_change": self.richardson_change,
        }


def _cn_values(kernel: ConformalKernel, waypoints, n_max: int, m: int) -> tuple[np.ndarray, float]:
    a = kernel_matrix(kernel, waypoints, m)
    out = np.empty(n_max)
    worst = 0.0
    p = np.eye(a.shape[0], dtype=complex)
    for n in range(1, n_max + 1):
        p = p @ a
        val = 2 * (1j**n) * np.trace(p)
        worst = max(worst, abs(val.imag))
        out[n - 1] = val.real
    return out, worst


def compute_cn(
    kernel: ConformalKernel, z: complex, z_boundary: complex | None = None, n_max: int = 6,
    waypoints: Sequence[complex] | None = None, m: int = 48, richardson_tol: float | None = 1e-8,
) -> CnTable:
    """c_1 .. c_{n_max} along the straight path (or ``waypoints``) from z.

    With ``richardson_tol`` set, the computation is repeated with twice the
    nodes and a change larger than the tolerance raises ``ContinuumError``.
    """
    if waypoints is None:
        if z_boundary is None:
            raise ContinuumError("need a boundary point or a path")
        waypoints = [z, z_boundary]
    vals, imag = _cn_values(kernel, waypoints, n_max, m)
    if imag > 1e-9 * max(1.0, float(np.abs(vals).max())):
        raise ContinuumError(f"c_n has an imaginary residue {imag:.2e}")
    change = None
    if richardson_tol is not None:
        fine, _ = _cn_values(kernel, waypoints, n_max, 2 * m)
        change = float(np.abs(fine - vals).max())
        if change > richardson_tol:
            raise ContinuumError(f"quadrature not converged: change {change:.2e} on doubling nodes")
        vals = fine
    return CnTable(vals, tuple(complex(w) for w in waypoints), m, imag_residual=float(imag), richardson_change=change)


def quartic_variance(c: Sequence[float]) -> float:
    """An alternative quartic closed form for the variance in c_1..c_4.

    It differs from the Bell-polynomial variance by exactly 4 c_2^2; the
    Bell value agrees with exhaustive enumeration at finite mesh.
    """
    c1, c2, c3, c4 = (float(c[k]) for k in range(4))
    return (
        -2 / 3 * c1**4 - 4 / 3 * c1**3 - 3 * c1**2 - c1
        + 32 / 3 * c1 * c3 - 4 * c2**2 + 4 * c2 + 16 / 3 * c3 - 16 * c4
    )


def bell_moments(c: Sequence[float]) -> dict:
    """Limit moments from c_n with X_k = (-2)^(k-1) (k-1)! c_k.

    Returns E[o], E[n] and var(n) (the last when four coefficients are given),
    and the binomial moments ``E[binom((n-o)/2, k) o^s]`` under key (k, s).
    """
    x = [(-2) ** (k - 1) * math.factorial(k - 1) * c[k - 1] for k in range(1, len(c) + 1)]
    out: dict = {}
    for m in range(1, len(x) + 1):
        k, s = divmod(m, 2)
        out[(k, s)] = float(((-1) ** (k + s) * bell_polynomial(m, x) / math.factorial(m)).real)
    eo = out[(0, 1)]
    er = out.get((1, 0), 0.0)
    out["E_o"] = eo
    out["E_n"] = eo + 2 * er
    if len(x) >= 4:
        en2 = 4 * (2 * out[(2, 0)] + er) + 4 * out[(1, 1)] + eo
        out["var_n"] = en2 - out["E_n"] ** 2
    return out


# ---------------------------------------------------------------------------
# closed forms on the strip
# ---------------------------------------------------------------------------


def strip_c1(y: float) -> float:
    return -0.5 + y / math.pi


def strip_c2(y: float) -> float:
    return -math.log(math.sin(y)) / math.pi**2


def strip_mean_o(y: float) -> float:
    return 0.5 - y / math.pi


def strip_mean_n(y: float) -> float:
    return 0.25 - y * y / math.pi**2 - 2 * math.log(math.sin(y)) / math.pi**2


def ale_targets(y: float) -> dict:
    """Closed-form strip targets at height y in (0, pi/2)."""
    if not 0 < y < math.pi / 2:
        raise ContinuumError("y must lie in (0, pi/2)")
    return {
        "c_1": strip_c1(y),
        "c_2": strip_c2(y),
        "E_o": strip_mean_o(y),
        "P_o1": strip_mean_o(y),
        "E_n": strip_mean_n(y),
    }


# ---------------------------------------------------------------------------
# inverse Kasteleyn asymptotics
# ---------------------------------------------------------------------------

# class signs: r = +1 for vertical-edge whites, s = +1 for face blacks
CLASS_PAIRS = ((0, 2, 1, 1), (0, 3, 1, -1), (1, 2, -1, 1), (1, 3, -1, -1))

# (white point, black point) in strip coordinates; the flat pairs sit within
# a few lattice steps of the top and bottom boundary
STRIP_PAIRS = {
    "interior": ((-0.4 - 0.9j, 0.3 + 0.5j), (0.5 + 0.2j, -0.3 - 0.6j)),
    "flat": ((-0.2 - 1.45j, 0.1 + 1.45j), (0.0 - 1.5j, 0.5 + 1.5j)),
}


def folded_prediction(kernel: ConformalKernel, u: complex, v: complex, eps: float, r: int, s: int) -> complex:
    """(eps/2)(F_+ + r F_- + s conj F_- + r s conj F_+) at (u, v)."""
    fp = complex(kernel.F_plus(u, v))
    fm = complex(kernel.F_minus(u, v))
    return eps / 2 * (fp + r * fm + s * np.conj(fm) + r * s * np.conj(fp))


def shifted_prediction(kernel: ConformalKernel, u: complex, v: complex, eps: float, r: int, s: int) -> complex:
    """Prediction for (K^1)^{-1}(b,w) - (K^2)^{-1}(b,w) with u = w, v = b.

    The kernels are evaluated at (u, conj v); the combination is
    -eps (conj F_- + r conj F_+ + s F_+ + r s F_-).
    """
    vb = np.conj(v)
    fp = complex(kernel.F_plus(u, vb))
    fm = complex(kernel.F_minus(u, vb))
    return -eps * (np.conj(fm) + r * np.conj(fp) + s * fp + r * s * fm)


def _nearest(g, cls: int, p: complex) -> int:
    h = g.eps * g.scale
    d = np.abs(g.coords[:, 0] * h + 1j * g.coords[:, 1] * h - p)
    d = np.where(g.classes == cls, d, np.inf)
    return int(np.argmin(d))


def _inverse_entry(lu, g, w: int, b: int) -> complex:
    e = np.zeros(len(g.whites), dtype=complex)
    e[g.white_pos[w]] = 1.0
    return complex(lu.solve(e)[g.black_pos[b]])


@dataclass
class CouplingReport:
    """Errors of inverse Kasteleyn entries against the continuum predictions."""

    heights: tuple
    errors: dict  # (kind, r, s) -> list of max errors, one per height
    shifted_errors: dict
    identity_error: float

    @staticmethod
    def _orders(errs: dict) -> dict:
        return {k: [math.log2(a / b) for a, b in zip(v[:-1], v[1:])] for k, v in errs.items()}

    def orders(self) -> dict:
        return self._orders(self.errors)

    def shifted_orders(self) -> dict:
        return self._orders(self.shifted_errors)

    def fitted_orders(self, shifted: bool = False) -> dict:
        """Least-squares slope of log2(error) against log2(height)."""
        errs = self.shifted_errors if shifted else self.errors
        x = np.log2(np.asarray(self.heights, dtype=float))
        return {k: float(-np.polyfit(x, np.log2(v), 1)[0]) for k, v in errs.items()}

    def min_order(self) -> float:
        return min(self.fitted_orders().values())

    def to_dict(self) -> dict:
        key = lambda k: f"{k[0]}:r={k[1]}:s={k[2]}"
        return {
            "heights": list(self.heights),
            "errors": {key(k): v for k, v in self.errors.items()},
            "orders": {key(k): v for k, v in self.orders().items()},
            "shifted_errors": {key(k): v for k, v in self.shifted_errors.items()},
            "shifted_orders": {key(k): v for k, v in self.shifted_orders().items()},
            "fitted_orders": {key(k): v for k, v in self.fitted_orders().items()},
            "shifted_fitted_orders": {key(k): v for k, v in self.fitted_orders(True).items()},
            "identity_error": self.identity_error,
        }


def laplacian_identity_error(g) -> float:
    """max |K^{-1} - G K^*| over a few columns, with G = (K^* K)^{-1}.

    K^* K is the discrete Laplacian with mixed boundary conditions; it is
    factorised independently of K.
    """
    import scipy.sparse.linalg as spla

    K = kasteleyn_wb(g).tocsc()
    lu = spla.splu(K)
    delta = (K.conj().T @ K).tocsc()
    glu = spla.splu(delta)
    n = K.shape[0]
    cols = np.linspace(0, n - 1, 6).astype(int)
    rhs = np.zeros((n, len(cols)), dtype=complex)
    rhs[cols, np.arange(len(cols))] = 1.0
    direct = lu.solve(rhs)
    via = glu.solve(np.asarray(K.conj().T @ rhs))
    return float(np.abs(direct - via).max() / max(1.0, np.abs(direct).max()))


def coupling_asymptotic_check(
    heights: Sequence[int] = (16, 32, 64), aspect: float = 8, kernel: ConformalKernel | None = None,
    pairs: dict | None = None, shifted: bool = True,
) -> CouplingReport:
    """Compare inverse Kasteleyn entries on strips of growing height.

    For every pair kind (interior, flat) and class pair (r, s) the maximum
    absolute error over the pairs is recorded at each height.
    """
    import scipy.sparse.linalg as spla

    from .lattice import build_symmetric_domain, build_temperleyan, restrict_upper

    kernel = kernel or strip_kernel()
    pairs = pairs or STRIP_PAIRS
    errors: dict = {}
    sh_errors: dict = {}
    ident = 0.0
    for H in heights:
        dom = build_symmetric_domain(f"kind=strip\nrows={H}\naspect={aspect}")
        g = build_temperleyan(dom)
        h = g.eps * g.scale
        lu = spla.splu(kasteleyn_wb(g).tocsc())
        if H == heights[0]:
            ident = laplacian_identity_error(g)
        for kind, plist in pairs.items():
            for wc, bc, r, s in CLASS_PAIRS:
                worst = 0.0
                for u0, v0 in plist:
                    w, b = _nearest(g, wc, u0), _nearest(g, bc, v0)
                    if abs(u0 - v0) < dom.delta / 2:
                        raise ContinuumError("pair closer than the separation hypothesis")
                    u = complex(*g.coords[w]) * h
                    v = complex(*g.coords[b]) * h
                    val = _inverse_entry(lu, g, w, b)
                    worst = max(worst, abs(val - folded_prediction(kernel, u, v, g.eps, r, s)))
                errors.setdefault((kind, r, s), []).append(worst)
        if shifted:
            g1, g2 = restrict_upper(g), restrict_upper(g, True)
            lus = [spla.splu(kasteleyn_wb(x).tocsc()) for x in (g1, g2)]
            for wc, bc, r, s in CLASS_PAIRS:
                worst = 0.0
                for u0, v0 in ((-0.4 + 0.5j, 0.3 + 1.1j), (0.6 + 0.9j, -0.2 + 0.4j)):
                    w, b = _nearest(g1, wc, u0), _nearest(g1, bc, v0)
                    vals = []
                    for gg, lx in zip((g1, g2), lus):
                        ww = gg.index[tuple(int(t) for t in g1.coords[w])]
                        bb = gg.index[tuple(int(t) for t in g1.coords[b])]
                        vals.append(_inverse_entry(lx, gg, ww, bb))
                    u = complex(*g1.coords[w]) * h
                    v = complex(*g1.coords[b]) * h
                    pred = shifted_prediction(kernel, u, v, g.eps, r, s)
                    worst = max(worst, abs(vals[0] - vals[1] - pred))
                sh_errors.setdefault(("shifted", r, s), []).append(worst)
    return CouplingReport(tuple(heights), errors, sh_errors, ident)
