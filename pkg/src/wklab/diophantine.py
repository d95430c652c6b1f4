"""Finite Diophantine certification and continued-fraction return times."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


def small_divisor_scan(omega, k_check: int, rho: float) -> tuple[float, tuple]:
    """min over 0 < |k|_1 <= k_check of |<omega, k>| * |k|_1**rho, and the minimising k.

    For n = 2 only the two integers nearest to ``-omega_1 k_1 / omega_2`` can
    be small divisors once ``|k| > small``; everything else has
    ``|<omega, k>| >= |omega_2| / 2`` and is covered by a brute-force block.
    """
    w = np.asarray(omega, dtype=float)
    n = w.size
    best, arg = np.inf, None
    brute = min(k_check, 40 if n == 2 else k_check)
    for k in itertools.product(range(-brute, brute + 1), repeat=n):
        norm = sum(abs(c) for c in k)
        if norm == 0 or norm > k_check:
            continue
        val = abs(float(np.dot(w, k))) * norm**rho
        if val < best:
            best, arg = val, k
    if n == 1 or k_check <= brute:
        return best, arg
    if n != 2:
        raise NotImplementedError("scan implemented for n <= 2")
    k1 = np.arange(-k_check, k_check + 1)
    centre = np.floor(-w[0] * k1 / w[1])
    for off in (0.0, 1.0):
        k2 = centre + off
        norm = np.abs(k1) + np.abs(k2)
        ok = (norm > 0) & (norm <= k_check)
        vals = np.abs(w[0] * k1 + w[1] * k2) * norm ** rho
        vals[~ok] = np.inf
        i = int(np.argmin(vals))
        if vals[i] < best:
            best, arg = float(vals[i]), (int(k1[i]), int(k2[i]))
    return best, arg


@dataclass(frozen=True)
class DiophantineSpec:
    """Frequency with its (finitely certified) Diophantine constants."""

    omega: tuple
    rho: float
    alpha: float
    k_check: int

    @classmethod
    def calibrate(cls, omega, rho: float | None = None, k_check: int = 10_000):
        w = np.asarray(omega, dtype=float)
        w = w / np.linalg.norm(w)
        n = w.size
        if rho is None:
            rho = (n - 1) + 1e-9
        if rho <= n - 1:
            raise ValueError(f"rho must exceed n - 1 = {n - 1}")
        alpha, _ = small_divisor_scan(w, k_check, rho)
        return cls(tuple(w), rho, alpha, k_check)

    def certify(self, k_check: int | None = None) -> bool:
        val, _ = small_divisor_scan(self.omega, k_check or self.k_check, self.rho)
        return val >= self.alpha * (1 - 1e-12)

    @property
    def rate_exponent(self) -> float:
        """Exponent 1 + 4 / (2 rho + n) of the windowed convergence bound."""
        n = len(self.omega)
        return 1.0 + 4.0 / (2 * self.rho + n)


def continued_fraction(x: float, terms: int) -> list[int]:
    out = []
    for _ in range(terms):
        a = int(np.floor(x))
        out.append(a)
        frac = x - a
        if frac < 1e-15:
            break
        x = 1.0 / frac
    return out


def convergents(x: float, terms: int) -> list[Fraction]:
    """Successive convergents p/q of the continued fraction of ``x``."""
    cf = continued_fraction(x, terms)
    p_prev, p = 1, cf[0]
    q_prev, q = 0, 1
    out = [Fraction(p, q)]
    for a in cf[1:]:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        out.append(Fraction(p, q))
    return out


def return_times_1d(omega: float, radius: float, count: int) -> list[tuple[int, int]]:
    """Convergent denominators q with |q * omega - p| <= radius, as (q, p) pairs.

    Consecutive convergents can share a denominator only at the start of the
    expansion; duplicates are dropped.
    """
    out: list[tuple[int, int]] = []
    seen = set()
    terms = 4
    while len(out) < count:
        terms += 4
        if terms > 80:
            raise RuntimeError("not enough convergents within the return radius")
        out, seen = [], set()
        for c in convergents(omega, terms):
            q, p = c.denominator, c.numerator
            if q in seen or q == 0:
                continue
            seen.add(q)
            if abs(q * omega - p) <= radius:
                out.append((q, p))
            if len(out) == count:
                break
    return out


def return_times_lattice(omega, radius: float, count: int, t_step: float = 1e-3,
                         t_max: float = 1e4) -> list[float]:
    """Times t at which the linear flow started at 0 comes back within ``radius``.

    One time per excursion: after each return the scan waits until the orbit
    leaves the ball before recording the next one, and keeps only record
    (strictly closer) returns.
    """
    w = np.asarray(omega, dtype=float)
    out = []
    best = np.inf
    t = 1.0
    chunk = 200_000
    while len(out) < count and t < t_max:
        ts = t + t_step * np.arange(chunk)
        d = ts[:, None] * w[None, :]
        d = d - np.rint(d)
        dist = np.sqrt(np.sum(d * d, axis=1))
        for i in np.flatnonzero(dist <= radius):
            if dist[i] < best * 0.999:
                # local minimum of the excursion
                j = i
                while j + 1 < chunk and dist[j + 1] < dist[j]:
                    j += 1
                best = dist[j]
                out.append(float(ts[j]))
                if len(out) == count:
                    break
        t = ts[-1] + t_step
    return out
