"""Numerical checks of the growth, series and kernel estimates and the oscillation equivalences.

Every check returns a :class:`LemmaReport`.  A "bounded" verdict means the
largest ratio on the grid stays within a budget fixed from the inner half of
the grid (points at or below the median size), so genuine growth towards the
outer edge is flagged as "violated".
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from . import symbols as sym
from .berezin import Z_MIN, berezin_values
from .quadrature import build_disk_rule
from .spaces import (
    DiskSizes,
    LatticeSpec,
    ba_values,
    binned_profile,
    bo_values,
    classify_profile,
    disk_batches,
    is_vanishing,
    oscillations,
)
from .stablefun import eval_em

BUDGET_FACTOR = 10.0


@dataclass
class LemmaReport:
    lemma_id: str
    params: dict
    grid_size: int
    ratio_min: float
    ratio_max: float
    argmax: object
    budget: float | None
    verdict: str
    details: dict = field(default_factory=dict)
    runtime: float = 0.0

    def __post_init__(self):
        if self.grid_size < 1:
            raise ValueError("report grid is empty")

    @property
    def violated(self) -> bool:
        return self.verdict == "violated"

    def to_dict(self) -> dict:
        """Serialisable form; the wall-clock runtime is left out so output is reproducible."""
        am = self.argmax
        if isinstance(am, complex):
            am = [am.real, am.imag]
        elif isinstance(am, tuple):
            am = [[complex(x).real, complex(x).imag] for x in am]
        return {"lemma": self.lemma_id, "params": self.params, "grid_size": self.grid_size,
                "ratio_min": self.ratio_min, "ratio_max": self.ratio_max, "argmax": am,
                "budget": self.budget, "verdict": self.verdict, "details": self.details}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_text(self) -> str:
        rows = [("lemma", self.lemma_id)]
        rows += [(f"param {k}", str(v)) for k, v in sorted(self.params.items())]
        rows += [("grid size", str(self.grid_size)),
                 ("ratio min", f"{self.ratio_min:.12g}"),
                 ("ratio max", f"{self.ratio_max:.12g}"),
                 ("argmax", str(self.to_dict()["argmax"])),
                 ("budget", "n/a" if self.budget is None else f"{self.budget:.6g}"),
                 ("verdict", self.verdict)]
        rows += [(f"{k}", json.dumps(v)) for k, v in sorted(self.details.items())]
        w = max(len(a) for a, _ in rows)
        return "\n".join(f"{a.ljust(w)}  {b}" for a, b in rows) + "\n"


def _budget(sizes, ratios) -> float:
    """``BUDGET_FACTOR`` times the largest ratio on points no larger than the median size."""
    sizes = np.asarray(sizes, dtype=float)
    inner = ratios[sizes <= np.median(sizes)]
    return BUDGET_FACTOR * float(np.max(inner))


def _finish(lemma, params, sizes, ratios, points, t0, details=None) -> LemmaReport:
    ratios = np.asarray(ratios, dtype=float)
    if not np.all(np.isfinite(ratios)):
        bad = points[int(np.argmax(~np.isfinite(ratios)))]
        raise OverflowError(f"{lemma}: non-finite ratio at {bad!r} with parameters {params}")
    i = int(np.argmax(ratios))
    budget = _budget(sizes, ratios)
    verdict = "bounded" if ratios[i] <= budget else "violated"
    am = points[i]
    am = complex(am) if np.isscalar(am) or np.ndim(am) == 0 else tuple(complex(x) for x in am)
    return LemmaReport(lemma, params, len(ratios), float(ratios.min()), float(ratios[i]), am,
                       budget, verdict, details or {}, time.perf_counter() - t0)


# ------------------------------------------------------------- growth integral


def lemma21_ratio(m: int, pprime: float, c: float, d: int, z: complex,
                  panels: int | None = None, n_radial: int = 16, n_angular: int = 128) -> float:
    """``int |e^{conj(z) w} - Q_m(conj(z) w)|^{p'} e^{-c|w|^2} |w|^d dA / (|z|^d e^{p'^2|z|^2/(4c)})``.

    The integrand peaks at ``w0 = p' z / (2c)``; the disk ``B(w0; |w0| + 10/sqrt(c))``
    holds it up to a relative ``e^{-100}``.
    """
    w0 = pprime * z / (2.0 * c)
    radius = abs(w0) + 10.0 / math.sqrt(c)
    panels = panels or max(8, int(math.ceil(1.5 * radius * math.sqrt(c))))
    rule = build_disk_rule(w0, radius, panels, n_radial, n_angular)
    w = rule.nodes
    arg = np.conj(z) * w
    e = eval_em(m, arg)
    with np.errstate(divide="ignore"):
        la = np.log(np.abs(w))
        logmag = pprime * (np.asarray(e.logmag) + m * np.log(np.abs(arg))) - c * np.abs(w) ** 2 + d * la
        lognum = logsumexp(logmag, b=rule.weights)
    logden = d * math.log(abs(z)) + pprime**2 * abs(z) ** 2 / (4.0 * c)
    return math.exp(lognum - logden)


def check_lemma21(m: int = 0, pprime: float = 2.0, c: float = 1.0, d: int = 0,
                  sigma: float = 1.0, z_grid=None) -> LemmaReport:
    if d < 0 or d % 2:
        raise ValueError("d must be an even non-negative integer")
    if pprime <= 0 or c <= 0 or sigma <= 0:
        raise ValueError("p', c and sigma must be positive")
    t0 = time.perf_counter()
    if z_grid is None:
        rad = np.linspace(sigma, 10.0, 19)
        z_grid = (rad[:, None] * np.exp(2j * np.pi * np.arange(4) / 4)[None, :]).ravel()
    z_grid = np.asarray(z_grid, dtype=complex)
    if np.any(np.abs(z_grid) < sigma * (1 - 1e-12)) or np.any(np.abs(z_grid) > 10.0 + 1e-12):
        raise ValueError("grid points must satisfy sigma <= |z| <= 10")
    ratios = np.array([lemma21_ratio(m, pprime, c, d, z) for z in z_grid])
    params = {"m": m, "pprime": pprime, "c": c, "d": d, "sigma": sigma}
    return _finish("lemma21", params, np.abs(z_grid), ratios, z_grid, t0)


# --------------------------------------------------------------------- series


def lemma23_log_series(t: float, y: float) -> float:
    """``log sum_k (y/(k+1))^t y^k / k!`` for ``y > 0``.

    Terms are summed in log space from ``k = 0`` until they fall 1e-18 below the
    largest term.
    """
    if y <= 0:
        raise ValueError("y must be positive")
    if y > 700:
        raise ValueError("y must be at most 700")
    kmax = int(y + 20.0 * math.sqrt(y + 1.0) + 6.0 * abs(t) + 60.0)
    k = np.arange(kmax + 1)
    logs = t * (math.log(y) - np.log(k + 1.0)) + k * math.log(y) - gammaln(k + 1.0)
    keep = logs >= logs.max() + math.log(1e-18)
    return float(logsumexp(logs[keep]))


def check_lemma23_series(t: float = 1.0, y_grid=None, M: float = 1.0) -> LemmaReport:
    """Ratio ``S(y, t) / e^y``; both the upper and the lower side must stay in budget for ``y >= M``."""
    t0 = time.perf_counter()
    y_grid = np.linspace(1.0, 50.0, 99) if y_grid is None else np.asarray(y_grid, dtype=float)
    if np.any(y_grid <= 0):
        raise ValueError("y grid must be positive")
    ratios = np.array([math.exp(lemma23_log_series(t, y) - y) for y in y_grid])
    rep = _finish("lemma23", {"t": t, "M": M}, y_grid, ratios, y_grid.astype(complex), t0)
    sel = y_grid >= M
    inner = sel & (y_grid <= np.median(y_grid[sel] if np.any(sel) else y_grid))
    lo_budget = float(np.min(ratios[inner])) / BUDGET_FACTOR if np.any(inner) else 0.0
    lo = float(np.min(ratios[sel])) if np.any(sel) else math.inf
    rep.details = {"lower_budget": lo_budget, "min_ratio_y_ge_M": lo}
    if lo < lo_budget or lo <= 0:
        rep.verdict = "violated"
    return rep


# ---------------------------------------------------------------- kernel bound


def default_kernel_pairs(n: int = 100, rmax: float = 12.0) -> np.ndarray:
    """``n * n`` deterministic pairs: ``n`` polar points for ``z`` times ``n`` for ``v``."""
    side = int(round(math.sqrt(n)))
    rad = np.linspace(0.0, rmax, side)
    ang = 2.0 * np.pi * (np.arange(side) + 0.5) / side
    pts = (rad[:, None] * np.exp(1j * ang)[None, :]).ravel()
    zz, vv = np.meshgrid(pts, pts, indexing="ij")
    return np.stack([zz.ravel(), vv.ravel()], axis=1)


def kernel_bound_log_ratio(m: int, z, v):
    z = np.asarray(z, dtype=complex)
    v = np.asarray(v, dtype=complex)
    e = eval_em(m, z * np.conj(v))
    return (np.asarray(e.logmag) + m * np.log1p(np.abs(z) * np.abs(v))
            - (np.abs(z) ** 2 / 2 + np.abs(v) ** 2 / 2 - np.abs(z - v) ** 2 / 8))


def check_kernel_bound(m: int = 0, pairs=None) -> LemmaReport:
    """``|E_m(z conj(v))| (1+|z||v|)^m / exp(|z|^2/2 + |v|^2/2 - |z-v|^2/8)`` over pairs."""
    t0 = time.perf_counter()
    pairs = default_kernel_pairs() if pairs is None else np.asarray(pairs, dtype=complex)
    if np.any(np.abs(pairs) > 12.0 + 1e-12):
        raise ValueError("kernel bound grid must satisfy |z|, |v| <= 12")
    ratios = np.exp(kernel_bound_log_ratio(m, pairs[:, 0], pairs[:, 1]))
    sizes = np.max(np.abs(pairs), axis=1)
    return _finish("kernel-bound", {"m": m}, sizes, ratios, pairs, t0)


# --------------------------------------------------------------- equivalences


THEOREMS = {"thm28": "bounded", "thm32": "vanishing"}
CONDITIONS = ("berezin_mo", "disk_mean_center", "disk_berezin_center")


def condition_values(g, pts, m: int, p: float, r: float) -> dict:
    """Three oscillation quantities at each lattice point, all in units of ``|g|``."""
    b, mo, _ = berezin_values(g, pts, m, "berezin+mo", p)
    return {
        "berezin_mo": mo ** (1.0 / p),
        "disk_mean_center": oscillations(g, pts, r, p),
        "disk_berezin_center": oscillations(g, pts, r, p, centers_mu=b),
    }


def check_equivalence_thm(theorem: str, g, p: float = 2.0, r: float = 1.0, m: int = 0,
                          lattice: LatticeSpec | None = None, z_min: float = Z_MIN,
                          tol_vanish: float = 1e-3) -> LemmaReport:
    """Compare bounded (``thm28``) or vanishing (``thm32``) verdicts of three oscillation
    conditions with each other and with the catalog tag of ``g``."""
    if theorem not in THEOREMS:
        raise ValueError(f"theorem must be one of {sorted(THEOREMS)}")
    t0 = time.perf_counter()
    entry = sym.catalog_entry(g) if isinstance(g, str) else g
    lattice = lattice or LatticeSpec.default_for(r)
    pts = lattice.points()
    pts = pts[np.abs(pts) >= z_min]
    vals = condition_values(entry.expr, pts, m, p, r)
    mode = THEOREMS[theorem]
    verdicts = {}
    for name, v in vals.items():
        cls = classify_profile(binned_profile(pts, v), tol_vanish, z_min)
        verdicts[name] = (cls != "diverging") if mode == "bounded" else (cls == "vanishing")
    tag = entry.tags.in_BMO_p if mode == "bounded" else entry.tags.in_VMO_p
    agree = all(v == tag for v in verdicts.values())
    allv = np.concatenate(list(vals.values()))
    i = int(np.argmax(allv))
    details = {"mode": mode, "tag": tag, "verdicts": verdicts,
               "maxima": {k: float(np.max(v)) for k, v in vals.items()}}
    if theorem == "thm32":
        dec, parts = decomposition_condition(entry, r, lattice, z_min, tol_vanish, p)
        details["decomposition_condition"] = dec
        if parts:
            details["decomposition_parts"] = parts
        if isinstance(dec, bool):
            agree = agree and dec == tag
    params = {"theorem": theorem, "symbol": entry.name, "p": p, "r": r, "m": m,
              "z_min": z_min, "delta": lattice.delta, "R": lattice.R}
    return LemmaReport(theorem, params, len(pts), float(allv.min()), float(allv[i]),
                       complex(pts[i % len(pts)]), None, "agree" if agree else "violated",
                       details, time.perf_counter() - t0)


# explicit VO + VA splits known for catalog symbols: (VO part, VA part)
KNOWN_SPLITS = {"const": ("const", None), "gauss_bump": ("gauss_bump", None),
                "disk_ind": (None, "disk_ind")}


def decomposition_condition(entry, r: float, lattice: LatticeSpec, z_min: float,
                            tol_vanish: float, p: float = 2.0):
    """Check ``g = g1 + g2`` with ``g1`` vanishing-oscillation and ``g2`` vanishing-average.

    Only symbols with a split in :data:`KNOWN_SPLITS` are checked; for the rest
    the condition is reported as ``"unchecked"``.
    """
    split = KNOWN_SPLITS.get(entry.name)
    if split is None:
        return "unchecked", {}
    pts = lattice.points()
    pts = pts[np.abs(pts) >= z_min]
    parts = {}
    vo, va = split
    if vo is not None:
        v = bo_values(sym.catalog_entry(vo).expr, r, pts)
        parts["vo_part"] = {"symbol": vo, "vanishing": is_vanishing(binned_profile(pts, v), tol_vanish),
                            "max": float(np.max(v))}
    if va is not None:
        v = ba_values(sym.catalog_entry(va).expr, r, p, pts)
        parts["va_part"] = {"symbol": va, "vanishing": is_vanishing(binned_profile(pts, v), tol_vanish),
                            "max": float(np.max(v))}
    return all(q["vanishing"] for q in parts.values()), parts


# ------------------------------------------------------- Berezin split bounds


SPLIT_SIZES = DiskSizes(panels=1, n_radial=4, n_angular=16)
SPLIT_RING = (0.5, 1.0)
SPLIT_ANGLES = 8
# lighter Berezin rule: these profiles only need a few digits
SPLIT_BEREZIN = DiskSizes(panels=6, n_radial=12, n_angular=48)
SPLIT_RHO = 6.0
SPLIT_NOISE = 1e-9


def split_profiles(g, pts, r: float, p: float = 2.0, m: int = 0):
    """Per-point ``sup_{B(z;r)} |Bg - Bg(z)|`` and ``(mean_{B(z;r)} |g - Bg|^p)^{1/p}``.

    The supremum is sampled on concentric rings; ``Bg`` is smooth, so the rings
    resolve it well at these radii.
    """
    pts = np.asarray(pts, dtype=complex)
    f = sym.as_function(g)
    ang = np.exp(2j * np.pi * np.arange(SPLIT_ANGLES) / SPLIT_ANGLES)
    offs = np.concatenate([[0j], (r * np.asarray(SPLIT_RING)[:, None] * ang[None, :]).ravel()])
    samples = (pts[:, None] + offs[None, :]).ravel()
    b, _ = berezin_values(g, samples, m, rho=SPLIT_RHO, sizes=SPLIT_BEREZIN)
    b = b.reshape(len(pts), len(offs))
    bo = np.max(np.abs(b - b[:, :1]), axis=1)
    ba = np.zeros(len(pts))
    area = math.pi * r * r
    for idx, nodes, w in disk_batches(g, pts, r, SPLIT_SIZES, chunk=32):
        bn, _ = berezin_values(g, nodes.ravel(), m, rho=SPLIT_RHO, sizes=SPLIT_BEREZIN)
        diff = np.asarray(f(nodes), dtype=complex) - bn.reshape(nodes.shape)
        ba[idx] = ((np.abs(diff) ** p) @ w / area) ** (1.0 / p)
    return bo, ba


def check_split_bounds(g, p: float = 2.0, r: float = 1.0, m: int = 0,
                       lattice: LatticeSpec | None = None, z_min: float = Z_MIN) -> LemmaReport:
    """For a bounded-mean-oscillation symbol, ``Bg`` has bounded oscillation and
    ``g - Bg`` bounded averages; both profiles must stay within budget for ``|z| >= z_min + r``."""
    t0 = time.perf_counter()
    entry = sym.catalog_entry(g) if isinstance(g, str) else None
    expr = entry.expr if entry else g
    lattice = lattice or LatticeSpec(2.0, 10.0)
    pts = lattice.points()
    pts = pts[np.abs(pts) >= z_min + r]
    if len(pts) == 0:
        raise ValueError("no lattice points with |z| >= z_min + r")
    bo, ba = split_profiles(expr, pts, r, p, m)
    sizes = np.abs(pts)
    # profiles that vanish identically (e.g. g - Bg for analytic-conjugate g) only carry rounding
    b_bo, b_ba = (max(_budget(sizes, x), SPLIT_NOISE) for x in (bo, ba))
    # one ratio per point: the larger of the two profiles measured against its own budget
    scaled = np.maximum(bo / max(b_bo, 1e-300), ba / max(b_ba, 1e-300))
    i = int(np.argmax(scaled))
    ok = bool(np.max(bo) <= b_bo and np.max(ba) <= b_ba)
    params = {"symbol": entry.name if entry else sym.to_text(expr), "p": p, "r": r, "m": m,
              "z_min": z_min, "delta": lattice.delta, "R": lattice.R}
    details = {"bo_max": float(np.max(bo)), "bo_budget": b_bo,
               "ba_max": float(np.max(ba)), "ba_budget": b_ba}
    return LemmaReport("split-bounds", params, len(pts), float(scaled.min()), float(scaled[i]),
                       complex(pts[i]), 1.0, "bounded" if ok else "violated", details,
                       time.perf_counter() - t0)
