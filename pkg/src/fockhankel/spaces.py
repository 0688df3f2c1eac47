"""Norms, inner products, projection and disk-mean oscillation estimators.

Inner products on F^{2,m} use the normalisation

    <f, g>_{2,m} = 1/(pi m!) int f(v) conj(g(v)) |v|^{2m} exp(-|v|^2) dA(v),

under which ``b_k(v) = sqrt(m!/(k+m)!) v^k`` is orthonormal and ``K_z`` reproduces.
Suprema over the plane are replaced by maxima over a truncated square lattice;
every estimator therefore reports a lower bound for the true supremum.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import symbols as sym
from .quadrature import (
    build_disk_rule,
    build_plane_rule,
    integrate_plane,
)

MAX_COEFFS = 4096
TOL_VANISH = 1e-3
DEFAULT_R = 12.0
BIN_WIDTH = 1.0
BOUNDARY_POINTS = 64


@dataclass(frozen=True)
class DiskSizes:
    """Composite polar rule sizes for disk means (per disk)."""

    panels: int = 2
    n_radial: int = 12
    n_angular: int = 256


DISK_SIZES = DiskSizes()


def _next_pow2(n: int) -> int:
    return 1 << max(0, int(math.ceil(math.log2(max(n, 1)))))


# ------------------------------------------------------------------ coefficients


@dataclass(frozen=True)
class CoeffVector:
    """``f = sum_k coeffs[k] * b_k`` in F^{2,m}."""

    m: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        if c.ndim != 1 or len(c) > MAX_COEFFS:
            raise ValueError(f"coefficient vector must be 1-D with at most {MAX_COEFFS} entries")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def basis(cls, m: int, k: int, length: int | None = None) -> CoeffVector:
        c = np.zeros(max(k + 1, length or 0), dtype=complex)
        c[k] = 1.0
        return cls(m, c)

    @property
    def degree(self) -> int:
        nz = np.nonzero(self.coeffs)[0]
        return int(nz[-1]) if len(nz) else 0

    def __call__(self, v):
        return eval_coeffs(self, v)


def log_basis_scale(m: int, k):
    """``log sqrt(m!/(k+m)!)``."""
    k = np.asarray(k)
    from scipy.special import gammaln

    return 0.5 * (gammaln(m + 1.0) - gammaln(k + m + 1.0))


def eval_basis(m: int, k: int, v):
    """``b_k(v)`` evaluated without forming huge intermediates."""
    v = np.asarray(v, dtype=complex)
    with np.errstate(divide="ignore"):
        lm = log_basis_scale(m, k) + k * np.log(np.abs(v))
    out = np.exp(lm) * np.exp(1j * k * np.angle(v))
    if k == 0:
        out = np.full(v.shape, math.exp(log_basis_scale(m, 0)), dtype=complex)
    return complex(out) if out.ndim == 0 else out


def eval_coeffs(f: CoeffVector, v):
    v = np.asarray(v, dtype=complex)
    out = np.zeros(v.shape, dtype=complex)
    for k, c in enumerate(f.coeffs):
        if c != 0:
            out = out + c * eval_basis(f.m, k, v)
    return complex(out) if out.ndim == 0 else out


# ------------------------------------------------------------- structural helpers


@dataclass(frozen=True)
class HintedFn:
    """Plain callable plus the structural facts quadrature sizing needs."""

    fn: object
    degree: float = 8.0
    band: int = 32
    smooth: bool = False
    circles: tuple = ()
    growth: float = 0.0

    def __call__(self, v):
        return self.fn(v)



def _degree(g) -> float:
    if isinstance(g, HintedFn):
        return float(g.degree)
    if isinstance(g, CoeffVector):
        return float(g.degree)
    if callable(g) and not _is_symbol(g):
        return 8.0
    return float(sym.poly_degree(g))


def _band(g) -> int:
    if isinstance(g, HintedFn):
        return g.band
    if isinstance(g, CoeffVector):
        return g.degree
    if callable(g) and not _is_symbol(g):
        return 32
    b = sym.bandwidth(g)
    return 64 if b is None else b


def _is_symbol(g) -> bool:
    return isinstance(g, (sym.Mono, sym.RadialPower, sym.RadialSin, sym.RadialExpQ,
                          sym.Angular, sym.IndicatorAnnulus, sym.Sum, sym.Product, sym.Conj))


def _circles(g) -> list:
    if isinstance(g, HintedFn):
        return list(g.circles)
    return sym.discontinuity_circles(g) if _is_symbol(g) else []


def _fn(g):
    if isinstance(g, (CoeffVector, HintedFn)):
        return g
    return sym.as_function(g)


def hinted(g) -> HintedFn:
    """Wrap a symbol, coefficient vector or callable together with its hints."""
    if isinstance(g, HintedFn):
        return g
    return HintedFn(_fn(g), _degree(g), _band(g), _smooth_in_t(g), tuple(_circles(g)), _growth(g))


def hinted_product(f, g, conj_g: bool = False) -> HintedFn:
    """``f * g`` (or ``f * conj(g)``) with combined hints."""
    a, b = hinted(f), hinted(g)
    fa, fb = a.fn, b.fn
    fn = (lambda v: fa(v) * np.conj(fb(v))) if conj_g else (lambda v: fa(v) * fb(v))
    return HintedFn(fn, a.degree + b.degree, a.band + b.band, a.smooth and b.smooth,
                    a.circles + b.circles, a.growth + b.growth)


def _smooth_in_t(g) -> bool:
    """True when ``g`` restricted to rays is smooth in ``t = |v|^2`` (Laguerre-friendly)."""
    if isinstance(g, (CoeffVector, sym.Mono, sym.RadialExpQ, sym.Angular)):
        return True
    if isinstance(g, HintedFn):
        return g.smooth
    if isinstance(g, sym.RadialPower):
        return g.s >= 0 and g.s % 2 == 0
    if isinstance(g, sym.Sum):
        return all(_smooth_in_t(t) for t in g.terms)
    if isinstance(g, sym.Product):
        return _smooth_in_t(g.left) and _smooth_in_t(g.right)
    if isinstance(g, sym.Conj):
        return _smooth_in_t(g.child)
    return False


def _growth(g) -> float:
    if isinstance(g, HintedFn):
        return max(g.growth, 0.0)
    if _is_symbol(g):
        return max(sym.growth_rate(g), 0.0)
    return 0.0


def plane_breaks(circles, scale: float = 1.0, panels: int = 8) -> list:
    """Radial panel boundaries (in |v| units times ``scale``) for indicator circles.

    Circles centred at the origin are snapped exactly; off-centre circles get a
    4x refined set of panels across the annulus they sweep.
    """
    out = set()
    for c0, a in circles:
        d = abs(c0)
        if d == 0:
            out.add(a * scale)
        else:
            lo, hi = max(0.0, d - a), d + a
            out.update(float(x) * scale for x in np.linspace(lo, hi, 4 * panels + 1) if x > 0)
    return sorted(out)


def panel_edges(peak_t: float, decay: float = 1.0, width: float = 1.0) -> list:
    """Unit-width radial panels covering the bulk of ``t^peak_t exp(-decay t)``."""
    decay = max(decay, 0.05)
    r_end = math.sqrt(max(peak_t, 0.0) / decay) + 9.0 / math.sqrt(decay)
    return [float(x) for x in np.arange(width, r_end + width, width)]


N_PANEL = 20
N_TAIL = 24


def _rule(alpha, nr, na, breaks, composite, peak_t, decay):
    if composite:
        edges = sorted(set(breaks) | set(panel_edges(peak_t, decay)))
        return build_plane_rule(alpha, N_TAIL, na, breaks=edges, n_panel=N_PANEL)
    return build_plane_rule(alpha, nr, na, breaks=breaks)


def plane_rule_for(m, *exprs, degree_extra: int = 0, n_radial=None, n_angular=None):
    """Plane rule with weight ``t^m e^{-t}`` sized for the given expressions."""
    deg = sum(_degree(g) for g in exprs) + degree_extra
    band = sum(_band(g) for g in exprs) + degree_extra
    nr = n_radial or max(64, int(math.ceil(deg / 2.0 + m)) + 16)
    na = n_angular or max(128, _next_pow2(2 * band + 8))
    circles = [c for g in exprs for c in _circles(g)]
    breaks = plane_breaks(circles)
    composite = not all(_smooth_in_t(g) for g in exprs)
    decay = 1.0 - sum(_growth(g) for g in exprs)
    return _rule(m, nr, na, breaks, composite, deg / 2.0 + m, decay)


# ------------------------------------------------------------------------ norms


def norm_pm(g, p: float = 2.0, m: int = 0, n_radial=None, n_angular=None) -> float:
    """``||g||_{p,m}`` with the constant omega_{p,m} that makes ``||1||_{p,m} = 1``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if _is_symbol(g):
        sym.check_admissible(g, 0.5, "norm integrand")
    alpha = m * p / 2.0
    deg = _degree(g)
    nr = n_radial or max(64, int(math.ceil(p * deg / 2.0 + alpha)) + 16)
    na = n_angular or max(128, _next_pow2(int(p * _band(g)) + 2 * _band(g) + 8))
    breaks = plane_breaks(_circles(g), scale=math.sqrt(p / 2.0))
    # |g|^p is rarely smooth in t, so always use radial panels
    rule = _rule(alpha, nr, na, breaks, True, alpha + p * deg / 2.0, 1.0 - 2.0 * _growth(g))
    v = np.sqrt(2.0 * rule.radial_nodes / p)[:, None] * np.exp(1j * rule.angles)[None, :]
    vals = np.abs(np.asarray(_fn(g)(v)))
    if not np.all(np.isfinite(vals)):
        raise ValueError("norm integrand is not finite on the quadrature nodes")
    with np.errstate(divide="ignore"):
        logs = p * np.log(vals) + rule.radial_log_weights[:, None]
    shift = np.max(logs)
    if np.isneginf(shift):
        return 0.0
    total = np.sum(np.exp(logs - shift))
    log_norm_p = shift + math.log(total) - math.lgamma(alpha + 1.0) - math.log(na)
    return math.exp(log_norm_p / p)


def inner_2m(f, g, m: int = 0) -> complex:
    """``<f, g>_{2,m}``; exact Parseval sum when both are coefficient vectors."""
    if isinstance(f, CoeffVector) and isinstance(g, CoeffVector):
        if f.m != g.m:
            raise ValueError("coefficient vectors belong to different orders m")
        n = max(len(f.coeffs), len(g.coeffs))
        a = np.zeros(n, complex)
        b = np.zeros(n, complex)
        a[: len(f.coeffs)] = f.coeffs
        b[: len(g.coeffs)] = g.coeffs
        return complex(np.sum(a * np.conj(b)))
    for h in (f, g):
        if _is_symbol(h):
            sym.check_admissible(h, 0.5, "inner product integrand")
    rule = plane_rule_for(m, f, g)
    ff, gg = _fn(f), _fn(g)
    val = integrate_plane(rule, lambda v: ff(v) * np.conj(gg(v)))
    return complex(val) / (math.pi * math.factorial(m))


# ---------------------------------------------------------------- polar moments


def basis_table(rule, n_basis: int, m: int) -> np.ndarray:
    """``P[i, l] = sqrt(w_i t_i^l / (l+m)!)`` so that ``sum_i P[i,l]^2 = 1``."""
    from scipy.special import gammaln

    t = rule.radial_nodes
    l = np.arange(n_basis)
    with np.errstate(divide="ignore"):
        logp = 0.5 * (rule.radial_log_weights[:, None] + l[None, :] * np.log(t)[:, None]
                      - gammaln(l + m + 1.0)[None, :])
    return np.exp(logp)


def angular_modes(samples: np.ndarray) -> np.ndarray:
    """``hat[i, s] = (1/n) sum_j samples[i, j] exp(-i s theta_j)`` (index s mod n)."""
    return np.fft.fft(samples, axis=1) / samples.shape[1]


def moment_matrix(P_rows, P_cols, modes, row_idx, col_idx) -> np.ndarray:
    """``M[l, k] = sum_i P_rows[i, l] P_cols[i, k] modes[i, (l - k) mod n]``."""
    n = modes.shape[1]
    out = np.empty((len(row_idx), len(col_idx)), dtype=complex)
    rows = np.asarray(row_idx)
    for kk, k in enumerate(col_idx):
        sel = modes[:, (rows - k) % n]
        out[:, kk] = np.sum(P_rows * (P_cols[:, kk][:, None] * sel), axis=0)
    return out


def project(g, m: int = 0, L: int = 32) -> CoeffVector:
    """Coefficients ``c_l = <g, b_l>_{2,m}`` for ``l = 0..L``."""
    if L < 0 or L + 1 > MAX_COEFFS:
        raise ValueError(f"truncation L must satisfy 0 <= L < {MAX_COEFFS}")
    if _is_symbol(g):
        sym.check_admissible(g, 0.5, "projection integrand")
    deg = _degree(g)
    rule = plane_rule_for(m, g, degree_extra=L, n_radial=max(64, int(math.ceil((L + deg) / 2.0 + m)) + 16),
                          n_angular=max(128, _next_pow2(2 * (L + _band(g)) + 8)))
    samples = np.asarray(_fn(g)(rule.nodes()), dtype=complex)
    modes = angular_modes(samples)
    P = basis_table(rule, L + 1, m)
    # P[:, 0] = sqrt(w / m!) is exactly the weight factor of <g, b_l>
    c = moment_matrix(P, P[:, :1], modes, range(L + 1), [0])[:, 0]
    return CoeffVector(m, c)


# ---------------------------------------------------------------- lattice & disks


@dataclass(frozen=True)
class LatticeSpec:
    delta: float
    R: float = DEFAULT_R

    def __post_init__(self):
        if not (self.delta > 0 and self.R > 0 and self.delta <= self.R):
            raise ValueError("lattice needs 0 < delta <= R")

    @classmethod
    def default_for(cls, r: float, R: float = DEFAULT_R) -> LatticeSpec:
        return cls(r / 2.0, R)

    def points(self) -> np.ndarray:
        n = int(math.floor(self.R / self.delta + 1e-12))
        j = np.arange(-n, n + 1)
        jj, kk = np.meshgrid(j, j, indexing="ij")
        pts = (self.delta * (jj + 1j * kk)).ravel()
        return pts[np.abs(pts) <= self.R * (1 + 1e-12)]


def disk_batches(g, centers, radius: float, sizes: DiskSizes = DISK_SIZES, chunk: int = 256):
    """Yield ``(indices, nodes[Z, M], weights[M])`` covering every centre.

    Centres whose disk meets a discontinuity circle of ``g`` get their own snapped
    rule; all others share one translated template.
    """
    centers = np.asarray(centers, dtype=complex)
    circles = _circles(g)
    template = build_disk_rule(0j, radius, sizes.panels, sizes.n_radial, sizes.n_angular)
    special = np.zeros(len(centers), dtype=bool)
    for c0, a in circles:
        d = np.abs(centers - c0)
        special |= (d - a < radius) & (d + radius > a)
    plain = np.nonzero(~special)[0]
    for s in range(0, len(plain), chunk):
        idx = plain[s:s + chunk]
        yield idx, centers[idx, None] + template.nodes[None, :], template.weights
    for i in np.nonzero(special)[0]:
        rule = build_disk_rule(centers[i], radius, sizes.panels, sizes.n_radial,
                               sizes.n_angular, circles=circles)
        yield np.array([i]), rule.nodes[None, :], rule.weights


def disk_mean(g, z: complex, r: float, p="linear", sizes: DiskSizes = DISK_SIZES):
    """``g~_r(z)`` (``p="linear"``) or ``g~_r^p(z)`` = mean of ``|g|^p`` over ``B(z; r)``."""
    if r <= 0:
        raise ValueError("disk radius must be positive")
    out = disk_means(g, np.array([z]), r, p, sizes)[0]
    return complex(out) if p == "linear" else float(out.real)


def disk_means(g, centers, r: float, p="linear", sizes: DiskSizes = DISK_SIZES) -> np.ndarray:
    centers = np.asarray(centers, dtype=complex)
    f = _fn(g)
    area = math.pi * r * r
    out = np.zeros(len(centers), dtype=complex)
    for idx, nodes, w in disk_batches(g, centers, r, sizes):
        vals = np.asarray(f(nodes), dtype=complex)
        if p != "linear":
            vals = np.abs(vals) ** float(p)
        out[idx] = vals @ w / area
    return out if p == "linear" else out.real


def oscillations(g, centers, r: float, p: float, centers_mu=None,
                 sizes: DiskSizes = DISK_SIZES) -> np.ndarray:
    """``(mean_{B(z;r)} |g - mu_z|^p)^{1/p}``; ``mu_z`` defaults to the disk mean."""
    centers = np.asarray(centers, dtype=complex)
    f = _fn(g)
    area = math.pi * r * r
    out = np.zeros(len(centers))
    for idx, nodes, w in disk_batches(g, centers, r, sizes):
        vals = np.asarray(f(nodes), dtype=complex)
        mu = vals @ w / area if centers_mu is None else np.asarray(centers_mu)[idx]
        dev = np.abs(vals - mu[:, None]) ** float(p)
        out[idx] = (dev @ w / area) ** (1.0 / p)
    return out


# ---------------------------------------------------------------------- reports


@dataclass
class OscillationReport:
    """Lattice maximum of a non-negative estimator plus its ``|z|``-binned profile."""

    sup_value: float
    argmax: complex
    profile: list
    points: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    estimator: str = "bmo"
    vanishing: object = None

    def to_rows(self):
        return [(float(z.real), float(z.imag), float(v)) for z, v in zip(self.points, self.values)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["z_re", "z_im", "value"])
        w.writerows(self.to_rows())
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "sup_value": float(self.sup_value),
            "argmax": [float(self.argmax.real), float(self.argmax.imag)],
            "profile": [[float(a), float(b)] for a, b in self.profile],
            "vanishing": self.vanishing,
            "points": [[float(z.real), float(z.imag)] for z in self.points],
            "values": [float(v) for v in self.values],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def classify(self, tol_vanish: float = TOL_VANISH, z_min: float = 0.0) -> str:
        return classify_profile(self.profile, tol_vanish, z_min)


def make_report(points, values, estimator: str, bin_width: float = BIN_WIDTH) -> OscillationReport:
    points = np.asarray(points, dtype=complex)
    values = np.asarray(values, dtype=float)
    i = int(np.argmax(values))
    profile = binned_profile(points, values, bin_width)
    return OscillationReport(float(values[i]), complex(points[i]), profile, points, values, estimator)


def binned_profile(points, values, bin_width: float = BIN_WIDTH) -> list:
    radii = np.abs(np.asarray(points))
    bins = np.floor(radii / bin_width + 1e-9).astype(int)
    out = []
    for b in np.unique(bins):
        out.append((float(b * bin_width), float(np.max(np.asarray(values)[bins == b]))))
    return out


NOISE_SLACK = 1e-9


def is_vanishing(profile, tol_vanish: float = TOL_VANISH, slack: float = NOISE_SLACK) -> bool:
    """Last three bins each below ``tol_vanish`` and non-increasing (up to rounding ``slack``)."""
    tail = [v for _, v in profile[-3:]]
    if len(tail) < 3:
        return False
    return all(v <= tol_vanish for v in tail) and tail[0] + slack >= tail[1] and tail[1] + slack >= tail[2]


def growth_exponent(profile, z_min: float = 0.0) -> float:
    """Least-squares slope of log(value) against log(|z|) over bins with |z| >= z_min."""
    pts = [(a, v) for a, v in profile if a >= max(z_min, 1.0)]
    if len(pts) < 3:
        return 0.0
    x = np.log([a for a, _ in pts])
    y = np.log(np.maximum([v for _, v in pts], 1e-300))
    return float(np.polyfit(x, y, 1)[0])


def classify_profile(profile, tol_vanish: float = TOL_VANISH, z_min: float = 0.0) -> str:
    """``"vanishing"``, ``"bounded"`` or ``"diverging"`` from a binned profile.

    A profile diverges when its outer bins grow at least like ``|z|^{1/2}`` and
    its last bin exceeds ``tol_vanish``; growth of rounding noise does not count.
    """
    if is_vanishing(profile, tol_vanish):
        return "vanishing"
    if profile[-1][1] > tol_vanish and growth_exponent(profile, z_min) > 0.5:
        return "diverging"
    return "bounded"


# -------------------------------------------------------------------- estimators


def bmo_norm(g, r: float, p: float, lattice: LatticeSpec | None = None,
             sizes: DiskSizes = DISK_SIZES) -> OscillationReport:
    """Lattice maximum of ``(mean_{B(z;r)} |g - g~_r(z)|^p)^{1/p}``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    lattice = lattice or LatticeSpec.default_for(r)
    pts = lattice.points()
    return make_report(pts, oscillations(g, pts, r, p, sizes=sizes), "bmo")


def ba_values(g, r: float, p: float, pts, sizes: DiskSizes = DISK_SIZES) -> np.ndarray:
    return np.maximum(disk_means(g, pts, r, p, sizes), 0.0) ** (1.0 / p)


def bo_values(g, r: float, pts, sizes: DiskSizes = DISK_SIZES) -> np.ndarray:
    if _is_symbol(g) and not sym.is_continuous(g):
        raise ValueError("bounded-oscillation estimator needs a continuous symbol "
                         "(indicator atoms are not allowed)")
    f = _fn(g)
    pts = np.asarray(pts, dtype=complex)
    template = build_disk_rule(0j, r, sizes.panels, sizes.n_radial, sizes.n_angular)
    out = np.zeros(len(pts))
    ring = np.exp(2j * np.pi * np.arange(BOUNDARY_POINTS) / BOUNDARY_POINTS)
    for s in range(0, len(pts), 256):
        z = pts[s:s + 256]
        phase = np.where(z == 0, 1.0, z / np.where(z == 0, 1.0, np.abs(z)))
        offsets = np.concatenate(
            [np.broadcast_to(template.nodes, (len(z), template.nodes.size)),
             r * phase[:, None] * ring[None, :]], axis=1)
        nodes = z[:, None] + offsets
        vals = np.asarray(f(nodes), dtype=complex)
        base = np.asarray(f(z), dtype=complex)
        out[s:s + 256] = np.max(np.abs(vals - base[:, None]), axis=1)
    return out


def bo_norm(g, r: float, lattice: LatticeSpec | None = None,
            sizes: DiskSizes = DISK_SIZES) -> OscillationReport:
    """Lattice maximum of ``sup_{v in B(z;r)} |g(v) - g(z)|``."""
    lattice = lattice or LatticeSpec.default_for(r)
    pts = lattice.points()
    return make_report(pts, bo_values(g, r, pts, sizes), "bo")


def vanishing_profile(estimator: str, g, r: float, p: float = 2.0,
                      lattice: LatticeSpec | None = None, tol_vanish: float = TOL_VANISH,
                      sizes: DiskSizes = DISK_SIZES) -> OscillationReport:
    """Estimator profile with the vanishing-at-infinity flag set.

    ``ba`` reports ``(g~_r^p)^{1/p}`` so that all three estimators share units.
    """
    lattice = lattice or LatticeSpec.default_for(r)
    pts = lattice.points()
    if estimator == "bmo":
        vals = oscillations(g, pts, r, p, sizes=sizes)
    elif estimator == "ba":
        vals = ba_values(g, r, p, pts, sizes)
    elif estimator == "bo":
        vals = bo_values(g, r, pts, sizes)
    else:
        raise ValueError(f"unknown estimator {estimator!r}; expected bmo, ba or bo")
    rep = make_report(pts, vals, estimator)
    rep.vanishing = is_vanishing(rep.profile, tol_vanish)
    return rep
