"""Quadrature on the Gaussian-weighted plane and on Euclidean disks.

Plane integrals use the substitution ``t = |v|**2``, which maps
``|v|**(2 alpha) exp(-|v|**2) dA(v)`` to ``(1/2) t**alpha exp(-t) dt dtheta``.
The radial factor is handled by a generalized Gauss-Laguerre rule built with the
Golub-Welsch construction; weights are kept in log form so that rules with
thousands of nodes stay usable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.special
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .stablefun import LogComplex

DEFAULT_N_RADIAL = 64
DEFAULT_N_ANGULAR = 128
DEFAULT_PANELS = 8


class QuadratureError(RuntimeError):
    pass


class NonFiniteIntegrand(QuadratureError, ValueError):
    pass


def _gauss_laguerre_log(n: int, alpha: float):
    """Nodes and log-weights for weight ``t**alpha exp(-t)`` on (0, inf)."""
    if n < 1:
        raise ValueError("n_radial must be >= 1")
    if alpha <= -1:
        raise ValueError("alpha must exceed -1")
    k = np.arange(n, dtype=float)
    diag = 2.0 * k + alpha + 1.0
    off = np.sqrt(k[1:] * (k[1:] + alpha))
    if n == 1:
        nodes = diag.copy()
    else:
        try:
            nodes = eigh_tridiagonal(diag, off, eigvals_only=True)
        except LinAlgError as exc:  # pragma: no cover - LAPACK failure
            raise QuadratureError(f"tridiagonal eigensolver did not converge (n={n})") from exc
    nodes = np.sort(nodes)
    # Christoffel numbers 1 / sum_k p_k(t)^2 with orthonormal p_k, rescaled on the fly
    log_mu0 = math.lgamma(alpha + 1.0)
    p_prev = np.zeros(n)
    p_cur = np.full(n, math.exp(-0.5 * log_mu0))
    sumsq = p_cur**2
    logscale = np.zeros(n)
    for j in range(n - 1):
        p_next = ((nodes - diag[j]) * p_cur - (off[j - 1] if j else 0.0) * p_prev) / off[j]
        p_prev, p_cur = p_cur, p_next
        sumsq = sumsq + p_cur**2
        big = np.abs(p_cur) > 1e100
        if np.any(big):
            p_cur[big] *= 1e-100
            p_prev[big] *= 1e-100
            sumsq[big] *= 1e-200
            logscale[big] += 100.0 * math.log(10.0)
    logw = -(np.log(sumsq) + 2.0 * logscale)
    return nodes, logw


@dataclass(frozen=True)
class RadialRule:
    """``int_0^inf phi(t) t**alpha exp(-t) dt ~= sum exp(logw) * phi(t)``."""

    alpha: float
    nodes: np.ndarray
    logw: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.logw)


def radial_rule(alpha: float, n: int, breaks=(), n_panel: int | None = None) -> RadialRule:
    """Radial rule, optionally composite with panel boundaries at radii ``breaks``.

    Finite panels ``[r_i, r_{i+1}]`` use Gauss-Legendre in ``r``; the last panel
    ``[r_k**2, inf)`` uses a shifted Gauss-Laguerre rule in ``t``.  Polynomials in
    ``t`` are integrated exactly on the tail when ``alpha`` is an integer.
    """
    breaks = sorted({float(b) for b in breaks if b > 0})
    if not breaks:
        t, lw = _gauss_laguerre_log(n, alpha)
        return RadialRule(float(alpha), t, lw)
    n_panel = n_panel or n
    x, wx = np.polynomial.legendre.leggauss(n_panel)
    ts, lws = [], []
    edges = [0.0] + breaks
    beta = 2.0 * alpha + 1.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if lo == 0.0 and beta != int(beta):
            # fractional power of r at the origin goes into a Gauss-Jacobi weight
            xj, wj = scipy.special.roots_jacobi(n_panel, 0.0, beta)
            r = 0.5 * hi * (xj + 1.0)
            lw = np.log(wj) + (beta + 1.0) * math.log(0.5 * hi) + math.log(2.0) - r**2
            ts.append(r**2)
            lws.append(lw)
            continue
        r = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        lw = np.log(0.5 * (hi - lo) * wx) + math.log(2.0) + beta * np.log(r) - r**2
        ts.append(r**2)
        lws.append(lw)
    c = breaks[-1] ** 2
    s, lw_tail = _gauss_laguerre_log(n, 0.0)
    ts.append(c + s)
    lws.append(lw_tail + alpha * np.log(c + s) - c)
    return RadialRule(float(alpha), np.concatenate(ts), np.concatenate(lws))


@dataclass(frozen=True)
class PlaneRule:
    """Product rule for ``int_C F(v) |v|**(2 alpha) exp(-|v|**2) dA(v)``."""

    alpha: float
    n_radial: int
    n_angular: int
    radial_nodes: np.ndarray
    radial_log_weights: np.ndarray
    breaks: tuple = ()

    @property
    def radial_weights(self) -> np.ndarray:
        return np.exp(self.radial_log_weights)

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_angular) / self.n_angular

    def nodes(self) -> np.ndarray:
        """Complex nodes, shape ``(n_radial_nodes, n_angular)``."""
        return np.sqrt(self.radial_nodes)[:, None] * np.exp(1j * self.angles)[None, :]


def build_plane_rule(m: float, n_radial: int = DEFAULT_N_RADIAL,
                     n_angular: int = DEFAULT_N_ANGULAR, breaks=(),
                     n_panel: int | None = None) -> PlaneRule:
    if n_radial < 1:
        raise ValueError("n_radial must be >= 1")
    if n_angular < 2:
        raise ValueError("n_angular must be >= 2")
    rr = radial_rule(m, n_radial, breaks, n_panel)
    return PlaneRule(float(m), int(n_radial), int(n_angular), rr.nodes, rr.logw,
                     tuple(sorted(b for b in breaks if b > 0)))


def _check_finite(values, nodes):
    bad = ~np.isfinite(values)
    if np.any(bad):
        idx = np.argwhere(bad)[0]
        node = complex(np.asarray(nodes)[tuple(idx)])
        raise NonFiniteIntegrand(f"integrand is not finite at node {node!r}")


def integrate_plane(rule: PlaneRule, f, log_scale: bool = False):
    """``int_C f(v) |v|**(2 alpha) exp(-|v|**2) dA(v)``.

    With ``log_scale`` the integrand must return a :class:`LogComplex`; the sum is
    carried out after shifting by the largest term and a :class:`LogComplex` is
    returned.
    """
    v = rule.nodes()
    lw = rule.radial_log_weights[:, None] + math.log(np.pi / rule.n_angular)
    if not log_scale:
        vals = np.asarray(f(v))
        vals = np.broadcast_to(vals, v.shape)
        _check_finite(vals, v)
        total = np.sum(np.exp(lw) * vals)
        return complex(total) if np.iscomplexobj(total) else float(total)
    lc = f(v)
    lm = np.broadcast_to(np.asarray(lc.logmag, dtype=float), v.shape)
    ph = np.broadcast_to(np.asarray(lc.phase, dtype=float), v.shape)
    if np.any(np.isnan(lm)) or np.any(np.isposinf(lm)):
        _check_finite(np.where(np.isneginf(lm), 0.0, lm), v)
    return _logsum(lm + lw, ph)


def _logsum(logmag, phase) -> LogComplex:
    logmag = np.asarray(logmag, dtype=float).ravel()
    phase = np.asarray(phase, dtype=float).ravel()
    shift = np.max(logmag)
    if np.isneginf(shift):
        return LogComplex(-np.inf, 0.0)
    s = np.sum(np.exp(logmag - shift) * np.exp(1j * phase))
    if s == 0:
        return LogComplex(-np.inf, 0.0)
    return LogComplex(shift + math.log(abs(s)), float(np.angle(s)))


# --------------------------------------------------------------------------- disks


@dataclass(frozen=True)
class DiskRule:
    """Polar rule on ``B(center; radius)``: ``int f dA ~= sum weights * f(nodes)``."""

    center: complex
    radius: float
    panels: int
    n_radial: int
    n_angular: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)


def _ray_circle_roots(offset: complex, theta: float, a: float, rmax: float):
    """Radii rho in (0, rmax) with ``|offset + rho e^{i theta}| = a``."""
    b = (offset * np.exp(-1j * theta)).real
    c = abs(offset) ** 2 - a * a
    disc = b * b - c
    if disc <= 0:
        return []
    sq = math.sqrt(disc)
    return [rho for rho in (-b - sq, -b + sq) if 0.0 < rho < rmax]


def _break_angles(center: complex, radius: float, circles):
    """Angles (seen from ``center``) where ray/circle intersections appear or hit the rim.

    Returns ``(all_angles, tangent_angles)``; at tangent angles the crossing radius
    has a square-root endpoint.
    """
    angles, tangent = [], []
    for c0, a in circles:
        off = c0 - center
        d = abs(off)
        if d - a >= radius or d + radius <= a or d == 0.0:
            continue
        phi = math.atan2(off.imag, off.real)
        if d >= a * (1.0 - 1e-12):
            # includes circles through the centre, tangent to every ray at phi +- pi/2
            da = math.asin(min(1.0, a / d))
            tangent += [phi - da, phi + da]
        cosv = (radius * radius + d * d - a * a) / (2.0 * radius * d)
        if -1.0 <= cosv <= 1.0:
            da = math.acos(cosv)
            angles += [phi - da, phi + da]
    wrap = lambda ts: sorted({float(np.remainder(t, 2.0 * np.pi)) for t in ts})
    return wrap(angles + tangent), wrap(tangent)


def build_disk_rule(center: complex, radius: float, panels: int = DEFAULT_PANELS,
                    n_radial: int = DEFAULT_N_RADIAL, n_angular: int = DEFAULT_N_ANGULAR,
                    circles=()) -> DiskRule:
    """Composite polar rule on a disk.

    ``circles`` lists ``(center, radius)`` pairs of known discontinuity curves.
    Radial panels are split where each ray crosses such a circle, and the angular
    direction switches from the trapezoid rule to composite Gauss-Legendre with
    sector boundaries at tangency and rim-crossing angles, so that piecewise
    smooth integrands keep high-order accuracy.
    """
    if radius <= 0:
        raise ValueError("disk radius must be positive")
    center = complex(center)
    x, wx = np.polynomial.legendre.leggauss(n_radial)
    base_edges = radius * np.arange(panels + 1) / panels
    relevant = []
    for c0, a in circles:
        d = abs(complex(c0) - center)
        if a > 0 and d - a < radius and d + radius > a:
            relevant.append((complex(c0), float(a)))

    def radial_nodes(edges):
        lo, hi = edges[:-1, None], edges[1:, None]
        rho = (0.5 * (hi - lo) * x[None, :] + 0.5 * (hi + lo)).ravel()
        w = (0.5 * (hi - lo) * wx[None, :]).ravel() * rho
        keep = w > 0
        return rho[keep], w[keep]

    if not relevant:
        rho, wr = radial_nodes(base_edges)
        th = 2.0 * np.pi * np.arange(n_angular) / n_angular
        nodes = center + rho[:, None] * np.exp(1j * th)[None, :]
        weights = wr[:, None] * np.full(n_angular, 2.0 * np.pi / n_angular)[None, :]
        return DiskRule(center, float(radius), panels, n_radial, n_angular,
                        nodes.ravel(), weights.ravel())

    cuts, tangent = _break_angles(center, radius, relevant)
    tangent = np.array(tangent + [t + 2.0 * np.pi for t in tangent])

    def is_tangent(t):
        return tangent.size > 0 and np.min(np.abs(tangent - t)) < 1e-13

    sector_edges = sorted(set(cuts) | {2.0 * np.pi * k / 8 for k in range(8)})
    sector_edges = np.array(sector_edges + [sector_edges[0] + 2.0 * np.pi])
    q = max(4, n_angular // 8)
    xa, wa = np.polynomial.legendre.leggauss(q)
    all_nodes, all_w = [], []
    for lo, hi in zip(sector_edges[:-1], sector_edges[1:]):
        if hi - lo <= 1e-15:
            continue
        s = 0.5 * (xa + 1.0)
        tl, th_ = is_tangent(lo), is_tangent(hi)
        # grade towards tangent endpoints so the square-root edge becomes smooth
        if tl and th_:
            u, du = s * s * (3.0 - 2.0 * s), 6.0 * s * (1.0 - s)
        elif tl:
            u, du = s * s, 2.0 * s
        elif th_:
            u, du = 1.0 - (1.0 - s) ** 2, 2.0 * (1.0 - s)
        else:
            u, du = s, np.ones_like(s)
        ths = lo + (hi - lo) * u
        wth = 0.5 * wa * (hi - lo) * du
        for th, wt in zip(ths, wth):
            extra = []
            for c0, a in relevant:
                extra += _ray_circle_roots(center - c0, th, a, radius)
            edges = np.unique(np.concatenate([base_edges, extra]))
            rho, wr = radial_nodes(edges)
            all_nodes.append(center + rho * np.exp(1j * th))
            all_w.append(wr * wt)
    return DiskRule(center, float(radius), panels, n_radial, n_angular,
                    np.concatenate(all_nodes), np.concatenate(all_w))


def translate(rule: DiskRule, new_center: complex) -> DiskRule:
    shift = complex(new_center) - rule.center
    return DiskRule(complex(new_center), rule.radius, rule.panels, rule.n_radial,
                    rule.n_angular, rule.nodes + shift, rule.weights)


def integrate_disk(rule: DiskRule, f, log_scale: bool = False):
    """``int_{B(center; radius)} f(v) dA(v)``."""
    if log_scale:
        lc = f(rule.nodes)
        return _logsum(np.asarray(lc.logmag) + np.log(rule.weights), lc.phase)
    vals = np.broadcast_to(np.asarray(f(rule.nodes)), rule.nodes.shape)
    _check_finite(vals, rule.nodes)
    total = np.dot(rule.weights, vals)
    return complex(total) if np.iscomplexobj(total) else float(total)
