"""Stable evaluation of the truncated exponential family and the Fock-Sobolev kernel.

Everything that can grow like ``exp(|z|**2)`` is carried as a :class:`LogComplex`
(natural log of the magnitude plus a phase), so lattice sweeps out to ``|z| = 12``
and beyond never overflow.  All functions accept scalars or numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

M_MAX = 32

# exact up to 170!, used for 1/(k+m)! and m! normalisations
_LOG_FACT = np.array([math.lgamma(k + 1.0) for k in range(4200)])
_FACT = np.array([float(math.factorial(k)) for k in range(171)])

# exp() of anything above this overflows a double
_LOGMAG_SAFE = 700.0


def _wrap_phase(theta):
    """Map angles into (-pi, pi]."""
    out = np.remainder(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    out = np.where(out == -np.pi, np.pi, out)
    return out if out.ndim else float(out)


def _check_m(m: int) -> int:
    if int(m) != m or m < 0:
        raise ValueError(f"Sobolev order m must be a non-negative integer, got {m!r}")
    if m > M_MAX:
        raise ValueError(f"Sobolev order m={m} exceeds the supported cap {M_MAX}")
    return int(m)


def log_factorial(k):
    k = np.asarray(k, dtype=int)
    out = _LOG_FACT[k]
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class LogComplex:
    """Complex number ``exp(logmag) * exp(1j * phase)``.

    ``logmag = -inf`` encodes zero, in which case the phase is forced to 0.
    Fields may be floats or equally shaped numpy arrays.
    """

    logmag: object
    phase: object = 0.0

    def __post_init__(self):
        lm = np.asarray(self.logmag, dtype=float)
        ph = np.broadcast_to(np.asarray(self.phase, dtype=float), lm.shape)
        ph = np.asarray(_wrap_phase(ph))
        ph = np.where(np.isneginf(lm), 0.0, ph)
        if lm.ndim == 0:
            object.__setattr__(self, "logmag", float(lm))
            object.__setattr__(self, "phase", float(ph))
        else:
            object.__setattr__(self, "logmag", lm)
            object.__setattr__(self, "phase", ph)

    @classmethod
    def from_complex(cls, z) -> LogComplex:
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore"):
            return cls(np.log(np.abs(z)), np.angle(z))

    def to_complex(self, check: bool = True):
        lm = np.asarray(self.logmag)
        if check and np.any(lm > _LOGMAG_SAFE):
            raise OverflowError(
                f"value with log-magnitude {float(np.max(lm)):.6g} does not fit in a double"
            )
        out = np.exp(lm) * np.exp(1j * np.asarray(self.phase))
        out = np.where(np.isneginf(lm), 0.0, out)
        return complex(out) if out.ndim == 0 else out

    def __complex__(self):
        return complex(self.to_complex())

    def __abs__(self):
        lm = np.asarray(self.logmag)
        if np.any(lm > _LOGMAG_SAFE):
            raise OverflowError("magnitude does not fit in a double")
        out = np.exp(lm)
        return float(out) if out.ndim == 0 else out

    def __mul__(self, other):
        if not isinstance(other, LogComplex):
            other = LogComplex.from_complex(other)
        return LogComplex(
            np.asarray(self.logmag) + np.asarray(other.logmag),
            np.asarray(self.phase) + np.asarray(other.phase),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, LogComplex):
            other = LogComplex.from_complex(other)
        return LogComplex(
            np.asarray(self.logmag) - np.asarray(other.logmag),
            np.asarray(self.phase) - np.asarray(other.phase),
        )

    def conj(self) -> LogComplex:
        return LogComplex(self.logmag, -np.asarray(self.phase))

    def scale(self, log_factor) -> LogComplex:
        """Multiply by ``exp(log_factor)`` (a real)."""
        return LogComplex(np.asarray(self.logmag) + log_factor, self.phase)

    def __getitem__(self, idx):
        return LogComplex(np.asarray(self.logmag)[idx], np.asarray(self.phase)[idx])


def eval_qm(m: int, w):
    """Taylor polynomial ``sum_{k<m} w**k / k!`` (zero when ``m == 0``)."""
    m = _check_m(m)
    w = np.asarray(w, dtype=complex)
    if m == 0:
        out = np.zeros_like(w)
    else:
        out = np.ones_like(w)
        for k in range(m - 1, 0, -1):
            out = 1.0 + out * w / k
    return complex(out) if out.ndim == 0 else out


def _log_em_real(m: int, a):
    """``log E_m(a)`` for real ``a >= 0``; all series terms are positive here."""
    a = np.asarray(a, dtype=float)
    out = np.empty_like(a)
    thresh = max(30.0, 2.0 * m)
    small = a <= thresh
    if np.any(small):
        out[small] = np.log(np.real(_em_series(m, a[small].astype(complex))))
    big = ~small
    if np.any(big):
        ab = a[big]
        # Q_m(a) e^{-a} < 1 and small for a > 2m
        with np.errstate(divide="ignore"):
            lq = np.log(np.real(eval_qm(m, ab.astype(complex)))) if m else np.full_like(ab, -np.inf)
        out[big] = ab - m * np.log(ab) + np.log1p(-np.exp(lq - ab))
    return out


def _series_terms(amax: float) -> int:
    return int(amax + 12.0 * math.sqrt(amax + 1.0) + 40.0)


def _em_series(m: int, w):
    """``sum_k w**k / (k+m)!`` by Horner; accurate where |w| - Re(w) is small."""
    w = np.asarray(w, dtype=complex)
    if w.size == 0:
        return w.copy()
    kmax = _series_terms(float(np.max(np.abs(w))))
    acc = np.ones_like(w)
    for k in range(kmax, 0, -1):
        acc = 1.0 + acc * w / (k + m)
    return acc / math.exp(_LOG_FACT[m])


def _em_closed_log(m: int, w):
    """``(e**w - Q_m(w)) / w**m`` as (logmag, phase), shifted to avoid overflow."""
    w = np.asarray(w, dtype=complex)
    q = np.asarray(eval_qm(m, w)) if m else np.zeros_like(w)
    with np.errstate(divide="ignore"):
        lq = np.log(np.abs(q))
        s = np.maximum(w.real, lq)
        diff = np.exp(w.real - s) * np.exp(1j * w.imag) - q * np.exp(-s)
        logmag = s + np.log(np.abs(diff)) - m * np.log(np.abs(w))
    phase = np.angle(diff) - m * np.angle(w)
    return logmag, phase


def eval_em(m: int, w) -> LogComplex:
    """``E_m(w) = (e**w - Q_m(w)) / w**m = sum_k w**k/(k+m)!`` in log-scale.

    For each argument the route with the smaller forward-error bound is used:
    the Horner series costs ``eps * E_m(|w|)`` in absolute terms, the closed
    form ``eps * (e**Re(w) + sum_{k<m}|w|**k/k!) / |w|**m``.  The series is only
    considered for ``|w| <= max(30, 2m)``.
    """
    m = _check_m(m)
    w = np.asarray(w, dtype=complex)
    if m == 0:
        return LogComplex(w.real, w.imag)
    scalar = w.ndim == 0
    w = np.atleast_1d(w)
    a = np.abs(w)
    logmag = np.empty(w.shape)
    phase = np.empty(w.shape)

    zero = a == 0.0
    logmag[zero] = -_LOG_FACT[m]
    phase[zero] = 0.0

    thresh = max(30.0, 2.0 * m)
    cand = (~zero) & (a <= thresh)
    use_series = np.zeros(w.shape, dtype=bool)
    if np.any(cand):
        ac = a[cand]
        err_series = _log_em_real(m, ac) + math.log(_series_terms(float(ac.max())))
        qabs = np.real(np.asarray(eval_qm(m, ac.astype(complex)))) if m else np.zeros_like(ac)
        with np.errstate(divide="ignore"):
            err_closed = np.logaddexp(w.real[cand], np.log(qabs)) - m * np.log(ac)
        use_series[cand] = err_series <= err_closed
    if np.any(use_series):
        val = _em_series(m, w[use_series])
        with np.errstate(divide="ignore"):
            logmag[use_series] = np.log(np.abs(val))
        phase[use_series] = np.angle(val)
    closed = (~zero) & (~use_series)
    if np.any(closed):
        lm, ph = _em_closed_log(m, w[closed])
        logmag[closed] = lm
        phase[closed] = ph
    if scalar:
        return LogComplex(logmag[0], phase[0])
    return LogComplex(logmag, phase)


def kernel(m: int, z, v) -> LogComplex:
    """Reproducing kernel ``K^m(v, z) = m! E_m(conj(z) v)``."""
    m = _check_m(m)
    w = np.conj(np.asarray(z, dtype=complex)) * np.asarray(v, dtype=complex)
    return eval_em(m, w).scale(_LOG_FACT[m])


def kernel_diag_log(m: int, z):
    """``log K^m(z, z)`` (real, >= 0)."""
    m = _check_m(m)
    t = np.abs(np.asarray(z, dtype=complex)) ** 2
    out = np.atleast_1d(_log_em_real(m, np.atleast_1d(t))) + _LOG_FACT[m]
    return float(out[0]) if np.ndim(t) == 0 else out


def normalized_kernel_weighted(m: int, z, v) -> LogComplex:
    """``k_z^m(v) * v**m * exp(-|v|**2 / 2)`` with ``k_z^m = K_z / sqrt(K(z,z))``.

    For ``m = 0`` the modulus is exactly ``exp(-|z - v|**2 / 2)``.
    """
    m = _check_m(m)
    z = np.asarray(z, dtype=complex)
    v = np.asarray(v, dtype=complex)
    k = kernel(m, z, v)
    with np.errstate(divide="ignore"):
        lv = np.log(np.abs(v))
    logmag = (
        np.asarray(k.logmag)
        + (m * lv if m else 0.0)
        - 0.5 * np.abs(v) ** 2
        - 0.5 * kernel_diag_log(m, z)
    )
    phase = np.asarray(k.phase) + m * np.angle(v)
    if m:
        logmag = np.where(np.abs(v) == 0.0, -np.inf, logmag)
    return LogComplex(logmag, phase)
