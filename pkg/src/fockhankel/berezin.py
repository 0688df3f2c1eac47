"""Berezin transform, Berezin mean oscillation and lattice Carleson checks.

The Berezin transform is

    B_m(g)(z) = 1/(pi m!) int g(v) |k_z(v)|^2 |v|^{2m} exp(-|v|^2) dA(v),

evaluated on the disk ``B(z; rho)``.  The weight ``|k_z(v) v^m exp(-|v|^2/2)|^2``
is formed from log-magnitudes, since ``K(z, z)`` alone overflows for ``|z| > 26``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import symbols as sym
from .spaces import (
    DiskSizes,
    LatticeSpec,
    OscillationReport,
    _fn,
    _is_symbol,
    disk_batches,
    disk_means,
    is_vanishing,
    make_report,
)
from .stablefun import normalized_kernel_weighted

RHO_DEFAULT = 8.0
RHO_MIN = 6.0
Z_MIN = 2.0
BEREZIN_SIZES = DiskSizes(panels=8, n_radial=16, n_angular=64)
KINDS = ("berezin", "abs_p", "mo", "berezin+mo")


def _check(g, m: int, p: float, rho: float):
    if rho < RHO_MIN:
        raise ValueError(f"truncation radius rho must be >= {RHO_MIN}")
    if p < 1:
        raise ValueError("p must be >= 1")
    if _is_symbol(g):
        sym.check_admissible(g, 0.5 / p, "Berezin integrand")


def tail_bound(g, z, m: int, rho: float, residual=0.0, p: float = 1.0):
    """Bound for the part of the integral dropped outside ``B(z; rho)``.

    ``residual`` is the kernel mass missed by the disk rule (``1 - int_disk``),
    which dominates ``2 exp(-rho^2/2)`` only for larger ``m`` near the origin.
    """
    z = np.abs(np.asarray(z))
    deg = float(sym.poly_degree(g)) if _is_symbol(g) else 0.0
    s = max(sym.growth_rate(g), 0.0) if _is_symbol(g) else 0.0
    mass = np.maximum(2.0 * math.exp(-rho * rho / 2.0), np.abs(residual))
    return mass * (1.0 + rho + z) ** (p * deg) * np.exp(p * s * (z + rho) ** 2)


def berezin_values(g, points, m: int = 0, kind: str = "berezin", p: float = 1.0,
                   rho: float = RHO_DEFAULT, sizes: DiskSizes = BEREZIN_SIZES):
    """Vectorised Berezin quantities over ``points``; returns ``(values, tails)``.

    ``kind`` selects ``B_m(g)``, ``B_m(|g|^p)`` or ``MO_p(g) = B_m(|g - B_m g(z)|^p)(z)``;
    ``"berezin+mo"`` returns ``(B_m g, MO_p g, tails)`` from a single pass.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown Berezin quantity {kind!r}")
    _check(g, m, p, rho)
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    f = _fn(g)
    norm = 1.0 / (math.pi * math.factorial(m))
    vals = np.zeros(len(points), dtype=complex)
    bvals = np.zeros(len(points), dtype=complex)
    resid = np.zeros(len(points))
    for idx, nodes, w in disk_batches(g, points, rho, sizes, chunk=64):
        lw = normalized_kernel_weighted(m, points[idx, None], nodes)
        kw = np.exp(2.0 * np.asarray(lw.logmag)) * (w * norm)[None, :]
        gv = np.asarray(f(nodes), dtype=complex)
        if not np.all(np.isfinite(gv)):
            raise ValueError("Berezin integrand is not finite on the quadrature nodes")
        resid[idx] = 1.0 - kw.sum(axis=1)
        if kind == "berezin":
            vals[idx] = np.sum(kw * gv, axis=1)
        elif kind == "abs_p":
            vals[idx] = np.sum(kw * np.abs(gv) ** p, axis=1)
        else:
            b = np.sum(kw * gv, axis=1)
            bvals[idx] = b
            vals[idx] = np.sum(kw * np.abs(gv - b[:, None]) ** p, axis=1)
    tails = tail_bound(g, points, m, rho, resid, 1.0 if kind == "berezin" else p)
    if kind == "berezin+mo":
        return bvals, np.maximum(vals.real, 0.0), tails
    if kind != "berezin":
        vals = np.maximum(vals.real, 0.0)
    return vals, tails


def berezin(g, z: complex, m: int = 0, rho: float = RHO_DEFAULT) -> complex:
    v, _ = berezin_values(g, [z], m, "berezin", 1.0, rho)
    return complex(v[0])


def berezin_abs_p(g, z: complex, m: int = 0, p: float = 1.0, rho: float = RHO_DEFAULT) -> float:
    v, _ = berezin_values(g, [z], m, "abs_p", p, rho)
    return float(v[0])


def mean_oscillation(g, z: complex, m: int = 0, p: float = 2.0, rho: float = RHO_DEFAULT) -> float:
    v, _ = berezin_values(g, [z], m, "mo", p, rho)
    return float(v[0])


@dataclass
class BerezinGrid:
    points: np.ndarray
    values: np.ndarray
    tail_bounds: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.points) != len(self.values):
            raise ValueError("points and values differ in length")
        if self.meta.get("rho", RHO_DEFAULT) < RHO_MIN:
            raise ValueError(f"truncation radius rho must be >= {RHO_MIN}")

    def _complex(self) -> bool:
        return self.meta.get("kind", "berezin") == "berezin"

    def to_csv(self) -> str:
        """Columns ``z_re, z_im, value, tail_bound`` (plus ``value_im`` for complex values)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["z_re", "z_im", "value", "tail_bound"] + (["value_im"] if self._complex() else []))
        for z, v, t in zip(self.points, self.values, self.tail_bounds):
            v = complex(v)
            row = [repr(float(z.real)), repr(float(z.imag)), repr(v.real), repr(float(t))]
            w.writerow(row + ([repr(v.imag)] if self._complex() else []))
        return buf.getvalue()

    def to_dict(self) -> dict:
        vals = [complex(v) for v in self.values]
        return {
            "meta": dict(self.meta),
            "points": [[float(z.real), float(z.imag)] for z in self.points],
            "values": [[v.real, v.imag] for v in vals] if self._complex() else [v.real for v in vals],
            "tail_bounds": [float(t) for t in self.tail_bounds],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def berezin_grid(g, m: int = 0, kind: str = "berezin", p: float = 1.0,
                 lattice: LatticeSpec | None = None, rho: float = RHO_DEFAULT,
                 symbol_id: str = "") -> BerezinGrid:
    lattice = lattice or LatticeSpec(1.0)
    pts = lattice.points()
    vals, tails = berezin_values(g, pts, m, kind, p, rho)
    meta = {"m": m, "symbol": symbol_id or (sym.to_text(g) if _is_symbol(g) else ""),
            "rho": rho, "kind": kind, "p": p}
    return BerezinGrid(pts, vals, tails, meta)


def carleson_lattice_check(g, p: float, r: float, lattice: LatticeSpec | None = None,
                           mode: str = "bounded", tol_vanish: float = 1e-3) -> OscillationReport:
    """Disk masses ``int_{B(b_n; r)} |g|^p dA`` over the lattice.

    ``bounded`` reports the maximum; ``vanishing`` also sets the vanishing flag
    from the binned profile.
    """
    if mode not in ("bounded", "vanishing"):
        raise ValueError("mode must be 'bounded' or 'vanishing'")
    if p < 1:
        raise ValueError("p must be >= 1")
    lattice = lattice or LatticeSpec.default_for(r)
    pts = lattice.points()
    masses = disk_means(g, pts, r, p) * math.pi * r * r
    rep = make_report(pts, masses, "carleson")
    if mode == "vanishing":
        rep.vanishing = is_vanishing(rep.profile, tol_vanish)
    return rep


def oscillation_ratio_floor(g, m: int, r: float, p: float = 2.0,
                            lattice: LatticeSpec | None = None, z_min: float = Z_MIN,
                            floor: float = 1e-12) -> float:
    """Smallest ``MO_p(g)(z) / (disk oscillation at z)^p`` over lattice points with ``|z| > z_min``.

    Points where the disk oscillation is below ``floor`` carry no information and
    are skipped; ``inf`` is returned when none remain.
    """
    from .spaces import oscillations

    lattice = lattice or LatticeSpec(1.0)
    pts = lattice.points()
    pts = pts[np.abs(pts) > z_min]
    mo, _ = berezin_values(g, pts, m, "mo", p)
    osc = oscillations(g, pts, r, p) ** p
    keep = osc > floor
    if not np.any(keep):
        return math.inf
    return float(np.min(mo[keep] / osc[keep]))
