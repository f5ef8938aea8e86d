"""Numeric certification of approximation-ratio bounds.

Each certificate minimizes (or maximizes) one of the library's worst-case
ratio expressions over its constrained domain by a dense vectorized grid
scan followed by local refinement, and reports the certified value with its
optimizer.  Kinds:

``sdp_directed``   worst per-edge revenue ratio of rotate-and-round versus
                   the directed relaxation objective, min over angle triples.
``sdp_undirected`` same for undirected edge terms.
``sdp_self``       same for self-weight terms (depends only on gamma).
``rounding_undirected``  the two minima governing randomized rounding of an
                   undirected pricing vector (self-weight term over x; edge
                   term over y <= x).
``rounding_directed``    the single directed rounding term (its x-dependence
                   cancels; certified over the full (x, y) square).
``random_ie``      best achievable ratio of the single-set random IE family,
                   max over (q, p) at a given self-weight ratio lam.
``class_ie``       ratio terms of a K-class assignment vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .netmodel import ValidationError
from .revenue import class_moments, pricing_classes
from .strategies import (DIRECTED_ROUNDING, RoundingSchedule,
                         SIX_CLASS_PRESET_Q, UNDIRECTED_ROUNDING,
                         UNDIRECTED_ROUNDING_FLAT)
from .sdprelax import (DIRECTED_SDP_GAMMA, DIRECTED_SDP_PRICING,
                       UNDIRECTED_SDP_GAMMA, UNDIRECTED_SDP_PRICING,
                       _rotated_pair_angles, rotate)

CERTIFICATE_KINDS = ("sdp_directed", "sdp_undirected", "sdp_self",
                     "rounding_undirected", "rounding_directed",
                     "random_ie", "class_ie")

_TWO_OVER_PI = 2.0 / math.pi
_DEN_TOL = 1e-9


@dataclass(frozen=True)
class CertificateReport:
    """Certified optimum of a ratio expression.

    ``value`` is a minimum unless ``maximization`` (then the JSON keys keep
    their names for format stability and hold the maximum/argmax).
    """

    kind: str
    params: dict
    value: float
    argopt: dict
    grid_step: Optional[float]
    maximization: bool = False
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": self.params,
                "min_value": self.value, "argmin": self.argopt,
                "grid_step": self.grid_step, "details": self.details}


# ---------------------------------------------------------------------------
# Angle-domain machinery (shared by the sdp_* kinds)
# ---------------------------------------------------------------------------
# Domain: angles (x, y, z) in [0, pi]^3 whose cosines satisfy the four
# half-space constraints s1 cx + s2 cy + s3 cz >= -1 (even sign patterns).
# That region is the tetrahedron spanned by the integral sign assignments,
# so every feasible triple is realizable by unit vectors and, coordinate-
# wise, cx ranges over [-1 + |cy + cz|, 1 - |cy - cz|] (symmetric in roles).

def _cos_band(ca: float, cb: float) -> tuple[float, float]:
    return -1.0 + abs(ca + cb), 1.0 - abs(ca - cb)


def _sdp_ratio_coeffs(kind: str, p: float):
    """(numerator, denominator) coefficient builders for the sdp kinds.

    Directed edge: num = a*g - a*f(y) + b*f(z), den = a + b + a*cy - b*cz
    - a*cx with a = 1 - p/2, b = 1 + p/2.  Undirected edge: num =
    (2-p)*g + p*f(y) + p*f(z), den = 2 + p - p*cy - p*cz - (2-p)*cx.
    """
    if kind == "sdp_directed":
        a, b = 1.0 - 0.5 * p, 1.0 + 0.5 * p
        return (a, -a, b), (b, a, -b, -a)
    a = 2.0 - p
    return (a, p, p), (2.0 + p, -p, -p, -a)


def _sdp_ratio_grid(kind: str, p: float, gamma: float, step: float,
                    x_samples: int = 24):
    """Vectorized scan of the constrained angle domain.

    Scans (y, z) on a regular grid and, for each pair, ``x_samples`` angles
    spanning the feasible x-band.  Returns the best point and a candidate
    list for refinement.
    """
    (cg, cfy, cfz), (d0, dy, dz, dx) = _sdp_ratio_coeffs(kind, p)
    ys = np.minimum(np.arange(0.0, math.pi + step * 0.5, step), math.pi)
    zs = ys
    cz_all = np.cos(zs)
    fz_all = rotate(zs, gamma)
    ts = np.linspace(0.0, 1.0, x_samples)
    best = (np.inf, 0.0, 0.0, 0.0)
    candidates = []
    for y in ys:
        cy = math.cos(y)
        fy = rotate(y, gamma)
        lo = -1.0 + np.abs(cy + cz_all)
        hi = 1.0 - np.abs(cy - cz_all)
        x_lo = np.arccos(np.clip(hi, -1.0, 1.0))
        x_hi = np.arccos(np.clip(lo, -1.0, 1.0))
        X = x_lo[:, None] + (x_hi - x_lo)[:, None] * ts[None, :]
        G = _rotated_pair_angles(X, y, zs[:, None], gamma)
        num = cg * G + cfy * fy + cfz * fz_all[:, None]
        den = d0 + dy * cy + dz * cz_all[:, None] + dx * np.cos(X)
        ratio = np.where(den > _DEN_TOL, num / np.maximum(den, _DEN_TOL), np.inf)
        k = int(np.argmin(ratio))
        zi, xi = np.unravel_index(k, ratio.shape)
        val = float(ratio[zi, xi])
        if math.isfinite(val):
            candidates.append((val, float(X[zi, xi]), float(y), float(zs[zi])))
            if val < best[0]:
                best = candidates[-1]
    candidates.sort(key=lambda c: c[0])
    return best, candidates[:32]


def _sdp_ratio_value(kind: str, p: float, gamma: float,
                     x: float, y: float, z: float) -> float:
    (cg, cfy, cfz), (d0, dy, dz, dx) = _sdp_ratio_coeffs(kind, p)
    g = float(_rotated_pair_angles(x, y, z, gamma))
    num = cg * g + cfy * rotate(y, gamma) + cfz * rotate(z, gamma)
    den = d0 + dy * math.cos(y) + dz * math.cos(z) + dx * math.cos(x)
    if den <= _DEN_TOL:
        return np.inf
    return num / den


def _refine_sdp_point(kind: str, p: float, gamma: float,
                      start: tuple[float, float, float],
                      sweeps: int = 12) -> tuple[float, tuple[float, float, float]]:
    """Cyclic 1-D minimization of the ratio along each angle, constrained
    to the feasible band implied by the other two."""
    pt = list(start)
    val = _sdp_ratio_value(kind, p, gamma, *pt)
    for _ in range(sweeps):
        moved = False
        for axis in range(3):
            others = [pt[(axis + 1) % 3], pt[(axis + 2) % 3]]
            lo, hi = _cos_band(math.cos(others[0]), math.cos(others[1]))
            a_lo = math.acos(min(1.0, max(-1.0, hi)))
            a_hi = math.acos(min(1.0, max(-1.0, lo)))
            if a_hi - a_lo < 1e-14:
                continue

            def along(t, axis=axis):
                q = list(pt)
                q[axis] = t
                return _sdp_ratio_value(kind, p, gamma, *q)

            res = minimize_scalar(along, bounds=(a_lo, a_hi), method="bounded",
                                  options={"xatol": 1e-10})
            if res.fun < val - 1e-15:
                pt[axis] = float(res.x)
                val = float(res.fun)
                moved = True
        if not moved:
            break
    return val, (pt[0], pt[1], pt[2])


def _certify_sdp_pair(kind: str, p: float, gamma: float, step: float,
                      refine: bool) -> CertificateReport:
    best, candidates = _sdp_ratio_grid(kind, p, gamma, step)
    val, (x, y, z) = best[0], best[1:]
    if refine:
        for cand in candidates:
            v, pt = _refine_sdp_point(kind, p, gamma, cand[1:])
            if v < val:
                val, (x, y, z) = v, pt
    return CertificateReport(
        kind=kind, params={"p": p, "gamma": gamma},
        value=_TWO_OVER_PI * val,
        argopt={"theta_ij": x, "theta_i": y, "theta_j": z},
        grid_step=step)


def _certify_sdp_self(gamma: float, step: float, refine: bool) -> CertificateReport:
    xs = np.minimum(np.arange(step, math.pi + 0.5 * step, step), math.pi)
    vals = rotate(xs, gamma) / (1.0 - np.cos(xs))
    k = int(np.argmin(vals))
    x, val = float(xs[k]), float(vals[k])
    if refine:
        lo = max(1e-9, x - 2 * step)
        hi = min(math.pi, x + 2 * step)
        res = minimize_scalar(
            lambda t: rotate(t, gamma) / (1.0 - math.cos(t)),
            bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        if res.fun < val:
            x, val = float(res.x), float(res.fun)
    return CertificateReport(kind="sdp_self", params={"gamma": gamma},
                             value=_TWO_OVER_PI * val, argopt={"theta": x},
                             grid_step=step)


# ---------------------------------------------------------------------------
# Pricing-vector rounding terms
# ---------------------------------------------------------------------------

def _resolve_schedule(schedule) -> RoundingSchedule:
    if isinstance(schedule, RoundingSchedule):
        return schedule
    if schedule in (None, "piecewise"):
        return UNDIRECTED_ROUNDING
    if schedule == "flat":
        return UNDIRECTED_ROUNDING_FLAT
    raise ValidationError(f"unknown rounding schedule {schedule!r}")


def _certify_rounding_undirected(schedule, step: float,
                                 refine: bool) -> CertificateReport:
    sched = _resolve_schedule(schedule)
    ph = sched.p_hat
    m = ph * (1.0 - ph)

    def I(v):
        return sched.alpha(np.asarray(v, dtype=np.float64)) \
            * (np.asarray(v, dtype=np.float64) - 0.5)

    def left_fn(x):
        x = np.asarray(x, dtype=np.float64)
        return m * (1.0 - I(x)) / (x * (1.0 - x))

    def right_fn(x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        Ex, Ey = 1.0 - I(x), 1.0 - I(y)
        return m * (I(x) * Ey + Ex * I(y) + ph * Ex * Ey) / (x * y * (1.0 - y))

    cap = 1.0 - 1e-9
    xs = np.arange(0.5, cap, step)
    lv = left_fn(xs)
    k = int(np.argmin(lv))
    left_x, left_val = float(xs[k]), float(lv[k])
    if refine:
        res = minimize_scalar(lambda t: float(left_fn(t)),
                              bounds=(max(0.5, left_x - 2 * step),
                                      min(cap, left_x + 2 * step)),
                              method="bounded", options={"xatol": 1e-10})
        if res.fun < left_val:
            left_x, left_val = float(res.x), float(res.fun)

    gx = np.arange(0.5, 1.0 + 0.5 * step, step)
    gx = np.minimum(gx, 1.0)
    gy = np.arange(0.5, cap, step)
    R = right_fn(gx[None, :], gy[:, None])
    R = np.where(gy[:, None] <= gx[None, :] + 1e-12, R, np.inf)
    yi, xi = np.unravel_index(int(np.argmin(R)), R.shape)
    right = [float(R[yi, xi]), float(gx[xi]), float(gy[yi])]
    if refine:
        for _ in range(8):
            v0 = right[0]
            res = minimize_scalar(lambda t: float(right_fn(t, right[2])),
                                  bounds=(right[2], 1.0), method="bounded",
                                  options={"xatol": 1e-10})
            if res.fun < right[0]:
                right[0], right[1] = float(res.fun), float(res.x)
            res = minimize_scalar(lambda t: float(right_fn(right[1], t)),
                                  bounds=(0.5, min(cap, right[1])),
                                  method="bounded", options={"xatol": 1e-10})
            if res.fun < right[0]:
                right[0], right[2] = float(res.fun), float(res.x)
            if v0 - right[0] < 1e-14:
                break
    value = min(left_val, right[0])
    return CertificateReport(
        kind="rounding_undirected",
        params={"schedule": sched.name, "p_hat": ph},
        value=value,
        argopt=({"x": left_x} if left_val <= right[0]
                else {"x": right[1], "y": right[2]}),
        grid_step=step,
        details={"self_term": {"min": left_val, "x": left_x},
                 "edge_term": {"min": right[0], "x": right[1], "y": right[2]}})


def _certify_rounding_directed(step: float, refine: bool) -> CertificateReport:
    sched = DIRECTED_ROUNDING
    ph = sched.p_hat
    m = ph * (1.0 - ph)

    def ratio(x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        Ix, Iy = x - 0.5, y - 0.5
        Ex, Ey = 1.0 - Ix, 1.0 - Iy
        return m * (Ix * Ey + 0.5 * ph * Ex * Ey) / (x * y * (1.0 - y))

    cap = 1.0 - 1e-9
    gx = np.arange(0.5, 1.0 + 0.5 * step, step)
    gx = np.minimum(gx, 1.0)
    gy = np.arange(0.5, cap, step)
    R = ratio(gx[None, :], gy[:, None])
    yi, xi = np.unravel_index(int(np.argmin(R)), R.shape)
    best = [float(R[yi, xi]), float(gx[xi]), float(gy[yi])]
    if refine:
        res = minimize_scalar(lambda t: float(ratio(best[1], t)),
                              bounds=(0.5, cap), method="bounded",
                              options={"xatol": 1e-12})
        if res.fun < best[0]:
            best[0], best[2] = float(res.fun), float(res.x)
    return CertificateReport(
        kind="rounding_directed", params={"p_hat": ph},
        value=best[0], argopt={"x": best[1], "y": best[2]},
        grid_step=step,
        details={"x_free": "the ratio is constant in x",
                 "closed_form_argmin_y": (3.0 - math.sqrt(3.0)) / 2.0})


# ---------------------------------------------------------------------------
# Random IE family ratio
# ---------------------------------------------------------------------------

def _random_ie_ratio(q, p, lam: float, directed: bool):
    q = np.asarray(q, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    m = (1.0 - q) * p * (1.0 - p)
    if directed:
        return 4.0 * m * (q + 0.5 * p * (1.0 - q))
    return 4.0 * m * (lam + 2.0 * q + p * (1.0 - q)) / (1.0 + lam)


def _tuned_random_ie(lam: float, directed: bool) -> dict:
    p = 2.0 - math.sqrt(2.0)
    if directed:
        q = 1.0 - math.sqrt(2.0) / 2.0
    else:
        q = max(1.0 - math.sqrt(2.0) * (2.0 + lam) / 4.0, 0.0)
    return {"q": q, "p": p,
            "value": float(_random_ie_ratio(q, p, lam, directed))}


def _certify_random_ie(lam: float, directed: bool, step: float,
                       refine: bool) -> CertificateReport:
    if lam < 0:
        raise ValidationError("self-weight ratio lam must be non-negative")
    qs = np.arange(0.0, 1.0 + 0.5 * step, step)
    ps = np.arange(0.5, 1.0 + 0.5 * step, step)
    qs, ps = np.minimum(qs, 1.0), np.minimum(ps, 1.0)
    R = _random_ie_ratio(qs[:, None], ps[None, :], lam, directed)
    qi, pi_ = np.unravel_index(int(np.argmax(R)), R.shape)
    best = [float(R[qi, pi_]), float(qs[qi]), float(ps[pi_])]
    if refine:
        res = minimize(
            lambda v: -float(_random_ie_ratio(v[0], v[1], lam, directed)),
            x0=np.array(best[1:]), method="L-BFGS-B",
            bounds=[(0.0, 1.0), (0.5, 1.0)])
        if -res.fun > best[0]:
            best = [float(-res.fun), float(res.x[0]), float(res.x[1])]
    tuned = _tuned_random_ie(lam, directed)
    if tuned["value"] > best[0]:
        best = [tuned["value"], tuned["q"], tuned["p"]]
    return CertificateReport(
        kind="random_ie",
        params={"lam": lam, "directed": directed},
        value=best[0], argopt={"q": best[1], "p": best[2]},
        grid_step=step, maximization=True,
        details={"tuned_parameters": tuned})


# ---------------------------------------------------------------------------
# Class-based IE ratio
# ---------------------------------------------------------------------------

def _certify_class_ie(K: int, q, directed: bool) -> CertificateReport:
    K = int(K)
    if q is None:
        if K != 6:
            raise ValidationError("default assignment vector exists for K=6 only")
        q = SIX_CLASS_PRESET_Q
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (K,):
        raise ValidationError(f"q must have length K={K}")
    if abs(float(np.sum(q)) - 1.0) > 1e-9 or np.any(q < -1e-9):
        raise ValidationError("q must lie on the probability simplex")
    S1, S2 = class_moments(np.clip(q, 0.0, None), pricing_classes(K))
    t1, t2 = 4.0 * S1, 4.0 * S2
    undirected = min(t1, t2)
    directed_value = 0.5 * t2
    return CertificateReport(
        kind="class_ie",
        params={"K": K, "q": [float(x) for x in q], "directed": directed},
        value=directed_value if directed else undirected,
        argopt={}, grid_step=None,
        details={"self_term": t1, "edge_term": t2,
                 "undirected": undirected, "directed": directed_value})


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def ratio_certificate(kind: str, grid_step: Optional[float] = None,
                      refine: bool = True, **params) -> CertificateReport:
    """Certify one ratio expression; see the module docstring for kinds.

    ``grid_step`` overrides the scan resolution (defaults to 1e-3 in the
    native units of the kind); refinement then polishes the best grid cells
    to ~1e-6.  Remaining keyword arguments are kind-specific: ``p`` and
    ``gamma`` for the sdp kinds, ``schedule`` ("piecewise" or "flat") for
    rounding_undirected, ``lam`` and ``directed`` for random_ie, ``K``,
    ``q``, ``directed`` for class_ie.
    """
    step = 1e-3 if grid_step is None else float(grid_step)
    if step <= 0:
        raise ValidationError("grid_step must be positive")
    if kind == "sdp_directed":
        p = float(params.pop("p", DIRECTED_SDP_PRICING))
        gamma = float(params.pop("gamma", DIRECTED_SDP_GAMMA))
        _no_extras(kind, params)
        return _certify_sdp_pair(kind, p, gamma, step, refine)
    if kind == "sdp_undirected":
        p = float(params.pop("p", UNDIRECTED_SDP_PRICING))
        gamma = float(params.pop("gamma", UNDIRECTED_SDP_GAMMA))
        _no_extras(kind, params)
        return _certify_sdp_pair(kind, p, gamma, step, refine)
    if kind == "sdp_self":
        gamma = float(params.pop("gamma", UNDIRECTED_SDP_GAMMA))
        _no_extras(kind, params)
        return _certify_sdp_self(gamma, step, refine)
    if kind == "rounding_undirected":
        schedule = params.pop("schedule", None)
        _no_extras(kind, params)
        return _certify_rounding_undirected(schedule, step, refine)
    if kind == "rounding_directed":
        _no_extras(kind, params)
        return _certify_rounding_directed(step, refine)
    if kind == "random_ie":
        lam = float(params.pop("lam", 0.0))
        directed = bool(params.pop("directed", False))
        _no_extras(kind, params)
        return _certify_random_ie(lam, directed, step, refine)
    if kind == "class_ie":
        K = params.pop("K", 6)
        q = params.pop("q", None)
        directed = bool(params.pop("directed", False))
        _no_extras(kind, params)
        return _certify_class_ie(K, q, directed)
    raise ValidationError(
        f"unknown certificate kind {kind!r}; choose from {CERTIFICATE_KINDS}")


def _no_extras(kind: str, params: dict) -> None:
    if params:
        raise ValidationError(
            f"unexpected parameters for {kind}: {sorted(params)}")
