"""Hankel operators ``H_g f = (I - P)(g f)``: pointwise action, finite sections, kernel probes.

At p = 2 the identity ``||H_g f||^2 = ||g f||^2 - ||P(g f)||^2`` makes the norm on
``span{b_0..b_{N-1}}`` a Hermitian eigenproblem ``sqrt(lambda_max(G1 - C^H C))``
with ``G1[j,k] = <g b_k, g b_j>`` and ``C[l,k] = <g b_k, b_l>`` for ``l = 0..L``.
Both matrices come from one radial rule and one FFT over angles.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import symbols as sym
from .spaces import (
    MAX_COEFFS,
    CoeffVector,
    HintedFn,
    _band,
    _degree,
    _is_symbol,
    _next_pow2,
    angular_modes,
    basis_table,
    hinted,
    hinted_product,
    moment_matrix,
    norm_pm,
    plane_rule_for,
    project,
)
from .stablefun import _log_em_real

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-8
PROBE_TAIL = 1e-12
DEFAULT_DIRECTIONS = 8


class HankelError(RuntimeError):
    pass


class SectionInvariantError(HankelError):
    pass


def _check_symbol(g):
    if _is_symbol(g):
        sym.check_admissible(g, 0.5, "Hankel symbol")


# ------------------------------------------------------------------ pointwise


def hankel_apply(g, f: CoeffVector, z, m: int = 0, L: int = 32):
    """``(g f)(z) - (P_{<=L}(g f))(z)``; ``z`` may be an array."""
    _check_symbol(g)
    if f.m != m:
        raise ValueError("coefficient vector order does not match m")
    gf = hinted_product(g, f)
    c = project(gf, m, L)
    z = np.asarray(z, dtype=complex)
    out = np.asarray(gf(z), dtype=complex) - np.asarray(c(z), dtype=complex)
    return complex(out) if out.ndim == 0 else out


def hankel_norm_p(g, f: CoeffVector, p: float = 2.0, m: int = 0, L: int = 32) -> float:
    """``||H_g f||_{p,m}`` for a given polynomial ``f`` (projection truncated at ``L``)."""
    _check_symbol(g)
    gf = hinted_product(g, f)
    c = project(gf, m, L)
    resid = HintedFn(lambda v: gf(v) - c(v), max(gf.degree, L), max(gf.band, L), False,
                     gf.circles, gf.growth)
    return norm_pm(resid, p, m)


# ------------------------------------------------------------- finite sections


@dataclass
class HankelSection:
    m: int
    N: int
    L: int
    G1: np.ndarray = field(repr=False)
    C: np.ndarray = field(repr=False)
    A: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        def cm(a):
            return [[[float(x.real), float(x.imag)] for x in row] for row in a]

        return {"m": self.m, "N": self.N, "L": self.L,
                "G1": cm(self.G1), "C": cm(self.C), "A": cm(self.A)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _section_rule(g, m: int, N: int, L: int):
    deg = _degree(g)
    band = _band(g)
    nr = max(64, int(math.ceil((N + L) / 2.0 + deg + m)) + 16)
    na = max(128, _next_pow2(N + L + 2 * band + 2))
    # the integrands carry b_j b_k (degree up to N + L) times g or |g|^2
    return plane_rule_for(m, g, g, degree_extra=N + L, n_radial=nr, n_angular=na)


def build_section(g, m: int = 0, N: int = 16, L: int | None = None) -> HankelSection:
    """Galerkin section of ``H_g^* H_g`` on ``span{b_0..b_{N-1}}``."""
    L = 4 * N if L is None else L
    if N < 1 or L < N - 1 or L + 1 > MAX_COEFFS:
        raise ValueError(f"need 1 <= N, N - 1 <= L and L < {MAX_COEFFS}")
    _check_symbol(g)
    h = hinted(g)
    rule = _section_rule(h, m, N, L)
    v = rule.nodes()
    gv = np.asarray(h(v), dtype=complex)
    if not np.all(np.isfinite(gv)):
        raise HankelError("symbol is not finite on the quadrature nodes")
    P = basis_table(rule, max(N, L + 1), m)
    cols = range(N)
    C = moment_matrix(P[:, : L + 1], P[:, :N], angular_modes(gv), range(L + 1), cols)
    G1 = moment_matrix(P[:, :N], P[:, :N], angular_modes(np.abs(gv) ** 2), cols, cols)
    A = G1 - C.conj().T @ C
    _check_section(G1, A)
    A = 0.5 * (A + A.conj().T)
    return HankelSection(m, N, L, 0.5 * (G1 + G1.conj().T), C, A)


def _check_section(G1, A):
    scale = max(1.0, float(np.max(np.abs(G1))))
    for name, M in (("G1", G1), ("A", A)):
        asym = float(np.max(np.abs(M - M.conj().T))) if M.size else 0.0
        if asym > HERMITIAN_TOL * scale:
            raise SectionInvariantError(
                f"{name} is not Hermitian: max |M - M^H| = {asym:.3e} (scale {scale:.3e}); "
                "increase the quadrature resolution")
    lam = scipy.linalg.eigvalsh(0.5 * (A + A.conj().T))
    if lam[0] < -PSD_TOL * scale:
        raise SectionInvariantError(
            f"A has eigenvalue {lam[0]:.3e} below -{PSD_TOL:g} * {scale:.3e}; "
            "the projection truncation or quadrature is inconsistent")


def resolution(section: HankelSection) -> float:
    """Size below which entries of ``A`` are indistinguishable from rounding in ``G1 - C^H C``."""
    scale = float(np.max(np.abs(np.diag(section.G1)))) if section.N else 0.0
    return 64.0 * np.finfo(float).eps * section.N * max(scale, 1e-300)


def section_norm(section: HankelSection) -> float:
    """``sqrt(lambda_max(A))``; LAPACK's Hermitian solver supplies the eigenvalue.

    Eigenvalues under :func:`resolution` are reported as 0.
    """
    try:
        lam = scipy.linalg.eigvalsh(section.A)
    except np.linalg.LinAlgError as exc:
        raise HankelError(f"Hermitian eigensolver did not converge: {exc}") from None
    top = float(lam[-1])
    return 0.0 if top <= resolution(section) else math.sqrt(top)


# ----------------------------------------------------------------- kernel probe


def kernel_coeffs(m: int, z: complex, tail: float = PROBE_TAIL) -> np.ndarray:
    """Coefficients of the normalised kernel ``k_z`` in the basis, truncated so the
    dropped squared mass is at most ``tail``."""
    t = abs(z) ** 2
    if t == 0.0:
        return np.array([1.0 + 0j])
    kmax = int(t + 14.0 * math.sqrt(t + 1.0) + 60.0)
    k = np.arange(kmax + 1)
    from scipy.special import gammaln

    logw = k * math.log(t) - gammaln(k + m + 1.0) - float(_log_em_real(m, np.array([t]))[0])
    w = np.exp(logw)
    tails = np.cumsum(w[::-1])[::-1]
    # tails[K + 1] = sum over k > K
    ok = np.nonzero(np.append(tails[1:], 0.0) <= tail)[0]
    K = int(ok[0])
    if K + 1 > MAX_COEFFS:
        raise HankelError(f"kernel at |z| = {abs(z):.4g} needs {K + 1} coefficients "
                          f"(cap {MAX_COEFFS}); use a smaller radius")
    return np.sqrt(w[: K + 1]) * np.exp(-1j * k[: K + 1] * np.angle(z))


@dataclass
class ProbeCurve:
    radii: np.ndarray
    directions: np.ndarray
    values: np.ndarray  # shape (len(radii), len(directions))
    meta: dict = field(default_factory=dict)

    def direction_max(self) -> np.ndarray:
        return np.max(self.values, axis=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["radius", "direction_re", "direction_im", "value"])
        for i, r in enumerate(self.radii):
            for j, d in enumerate(self.directions):
                w.writerow([repr(float(r)), repr(float(d.real)), repr(float(d.imag)),
                            repr(float(self.values[i, j]))])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"meta": dict(self.meta),
                "radii": [float(r) for r in self.radii],
                "directions": [[float(d.real), float(d.imag)] for d in self.directions],
                "values": [[float(x) for x in row] for row in self.values]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def default_directions(g, n: int = DEFAULT_DIRECTIONS) -> np.ndarray:
    if _is_symbol(g) and sym.is_radial(g):
        n = 1
    return np.exp(2j * np.pi * np.arange(n) / n)


def kernel_probe(g, m: int = 0, radii=(2.0, 4.0, 6.0, 8.0), directions=None,
                 L: int | None = None) -> ProbeCurve:
    """``||H_g k_z||_{2,m}`` for ``z = radius * direction``.

    One section sized for the largest kernel expansion serves every probe point,
    since smaller sections are its leading principal blocks.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(radii < 0) or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be non-negative and strictly increasing")
    dirs = default_directions(g) if directions is None else np.asarray(directions, dtype=complex)
    dirs = dirs / np.abs(dirs)
    coeffs = [[kernel_coeffs(m, r * d) for d in dirs] for r in radii]
    N = max(len(a) for row in coeffs for a in row)
    sec = build_section(g, m, N, L)
    vals = np.zeros((len(radii), len(dirs)))
    floor = resolution(sec)
    for i, row in enumerate(coeffs):
        for j, a in enumerate(row):
            n = len(a)
            q = np.real(np.conj(a) @ sec.A[:n, :n] @ a)
            vals[i, j] = 0.0 if q <= floor else math.sqrt(q)
    return ProbeCurve(radii, dirs, vals, {"m": m, "N": sec.N, "L": sec.L})


def compactness_verdict(curve: ProbeCurve, tol: float = 1e-3, slack: float = 1e-9):
    """``(flag, summary)``: compact-consistent iff the direction-max is non-increasing
    over the last three radii and ends at or below ``tol``.  Evidence only."""
    if len(curve.radii) < 4:
        raise ValueError("compactness verdict needs at least 4 radii")
    dm = curve.direction_max()
    last = dm[-3:]
    mono = bool(last[0] + slack >= last[1] and last[1] + slack >= last[2])
    flag = mono and bool(dm[-1] <= tol)
    summary = (f"{'compact-consistent' if flag else 'not compact-consistent'}: "
               f"max ||H_g k_z|| at radius {curve.radii[-1]:g} is {dm[-1]:.3e} "
               f"(tol {tol:g}); last three {'non-increasing' if mono else 'not monotone'}")
    return flag, summary
