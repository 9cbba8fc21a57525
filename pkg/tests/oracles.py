"""Independent oracles used by the test suite.

Each oracle deliberately takes a different computational route from the
implementation it checks: dense-grid enumeration instead of breakpoint
candidates, a pure power series plus bisection instead of the continued
fraction, shifted-inverse iteration instead of a direct eigensolver, and
Simpson quadrature instead of the error function.
"""

from __future__ import annotations

import math

import numpy as np


def grid_pibt_bounds(values1, values0, delta, step=1e-4, pad=1.0):
    """Brute-force Makarov bounds on a dense grid.

    Evaluates G(y) = F1(y + delta/2) - F0(y - delta/2) at every grid point
    of [min - |delta| - pad, max + |delta| + pad] and takes the running
    extrema together with the sentinel value 0. Returns
    (lower, upper, sup_g, inf_g).
    """
    v1 = np.sort(np.asarray(values1, dtype=float))
    v0 = np.sort(np.asarray(values0, dtype=float))
    lo = min(v1[0], v0[0]) - abs(delta) - pad
    hi = max(v1[-1], v0[-1]) + abs(delta) + pad
    num = int(math.ceil((hi - lo) / step)) + 1
    ys = np.linspace(lo, hi, num)
    h = 0.5 * delta
    g = (
        np.searchsorted(v1, ys + h, side="right") / v1.size
        - np.searchsorted(v0, ys - h, side="right") / v0.size
    )
    sup_g = max(float(g.max()), 0.0)
    inf_g = min(float(g.min()), 0.0)
    return max(0.0, -inf_g), 1.0 - sup_g, sup_g, inf_g


def gamma_p_series_only(a: float, x: float, max_iter: int = 20_000) -> float:
    """Regularized lower incomplete gamma by straight power series."""
    if x <= 0.0:
        return 0.0
    term = 1.0 / a
    total = term
    denom = a
    for _ in range(max_iter):
        denom += 1.0
        term *= x / denom
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return min(total * math.exp(-x + a * math.log(x) - math.lgamma(a)), 1.0)


def chi2_quantile_bisect(d: int, prob: float) -> float:
    """Chi-squared quantile by plain bisection on the series CDF."""
    cdf = lambda v: gamma_p_series_only(d / 2.0, v / 2.0)
    lo, hi = 0.0, 1.0
    while cdf(hi) < prob:
        hi *= 2.0
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        if cdf(mid) < prob:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def normal_cdf_quadrature(z: float, panels: int = 20_000) -> float:
    """Standard normal CDF by Simpson quadrature of the density from 0."""
    a = abs(z)
    if a == 0.0:
        return 0.5
    xs = np.linspace(0.0, a, 2 * panels + 1)
    dens = np.exp(-0.5 * xs * xs) / math.sqrt(2.0 * math.pi)
    h = a / (2 * panels)
    area = h / 3.0 * (dens[0] + dens[-1] + 4.0 * dens[1:-1:2].sum() + 2.0 * dens[2:-1:2].sum())
    return 0.5 + area if z > 0 else 0.5 - area


def min_eig_inverse_iteration(matrix, iters: int = 400) -> float:
    """Smallest eigenvalue by inverse iteration at a sub-spectrum shift."""
    a = np.asarray(matrix, dtype=float)
    a = 0.5 * (a + a.T)
    d = a.shape[0]
    # Gershgorin lower bound keeps the shift strictly below the spectrum.
    radii = np.sum(np.abs(a), axis=1) - np.abs(np.diag(a))
    shift = float(np.min(np.diag(a) - radii)) - 1.0
    m = a - shift * np.eye(d)
    x = np.ones(d) / math.sqrt(d)
    for _ in range(iters):
        x = np.linalg.solve(m, x)
        x /= np.linalg.norm(x)
    return float(x @ a @ x)


def gaussian_g_extrema_points(m1, s1, m0, s0):
    """Critical points of G(y) = Phi((y - m1)/s1) - Phi((y - m0)/s0).

    Solves the stationarity condition in closed form (a quadratic in y, or
    linear when the scales match). Returns a possibly empty list; an empty
    list means G is identically zero (identical marginals) or has no
    interior extremum.
    """
    if s1 <= 0.0 or s0 <= 0.0:
        raise ValueError("scales must be positive")
    A = 0.5 / s0**2 - 0.5 / s1**2
    B = m1 / s1**2 - m0 / s0**2
    C = 0.5 * m0**2 / s0**2 - 0.5 * m1**2 / s1**2 - math.log(s1 / s0)
    if abs(A) < 1e-300:
        if abs(B) < 1e-300:
            return []
        return [-C / B]
    disc = B * B - 4.0 * A * C
    if disc < 0.0:
        return []
    root = math.sqrt(disc)
    return [(-B - root) / (2.0 * A), (-B + root) / (2.0 * A)]


def _phi(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def gaussian_pair_g(y, m1, s1, m0, s0):
    return _phi((y - m1) / s1) - _phi((y - m0) / s0)


def gaussian_pair_extrema(m1, s1, m0, s0):
    """Exact (sup, inf) of G over the real line for a Gaussian pair."""
    candidates = [0.0] + [
        gaussian_pair_g(y, m1, s1, m0, s0) for y in gaussian_g_extrema_points(m1, s1, m0, s0)
    ]
    return max(candidates), min(candidates)


def true_gaussian_bounds(mu1, sigma1, mu0, sigma0, delta):
    """Population Makarov bounds when both conditional laws are Gaussian.

    G(y, delta) = F1(y + delta/2) - F0(y - delta/2) reduces to a Gaussian
    pair with shifted means m1 = mu1 - delta/2 and m0 = mu0 + delta/2.
    """
    sup_g, inf_g = gaussian_pair_extrema(mu1 - 0.5 * delta, sigma1, mu0 + 0.5 * delta, sigma0)
    return max(0.0, -min(inf_g, 0.0)), 1.0 - max(sup_g, 0.0)


def sup_abs_step_vs_smooth(points1, points0, delta, smooth, critical_points):
    """Exact sup over y of |step(y) - smooth(y)|.

    step(y) = F1(y + delta/2) - F0(y - delta/2) for the empirical CDFs of
    points1 and points0, enumerated by sweeping its jump events with
    integer counts (so the piece values match empirical evaluation
    bitwise); smooth must be continuous with all interior extrema listed
    in critical_points, so each constant piece attains its deviation
    maximum at a piece endpoint or a listed point.
    """
    p1 = np.sort(np.asarray(points1, dtype=float))
    p0 = np.sort(np.asarray(points0, dtype=float))
    n1, n0 = p1.size, p0.size
    h = 0.5 * delta
    events = np.concatenate([p1 - h, p0 + h])
    jump1 = np.concatenate([np.ones(n1, dtype=int), np.zeros(n0, dtype=int)])
    jump0 = np.concatenate([np.zeros(n1, dtype=int), np.ones(n0, dtype=int)])
    order = np.argsort(events, kind="mergesort")
    events, jump1, jump0 = events[order], jump1[order], jump0[order]
    best = 0.0
    c1 = c0 = 0
    i = 0
    m = events.size
    while i < m:
        j = i
        d1 = d0 = 0
        while j < m and events[j] == events[i]:
            d1 += jump1[j]
            d0 += jump0[j]
            j += 1
        g_before = c1 / n1 - c0 / n0
        c1 += d1
        c0 += d0
        g_after = c1 / n1 - c0 / n0
        s = smooth(float(events[i]))
        best = max(best, abs(g_before - s), abs(g_after - s))
        i = j
    for y in critical_points:
        g = (
            np.searchsorted(p1, y + h, side="right") / n1
            - np.searchsorted(p0, y - h, side="right") / n0
        )
        best = max(best, abs(float(g) - smooth(float(y))))
    return best
