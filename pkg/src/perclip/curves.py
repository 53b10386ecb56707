"""Rate-quality curves and shape-preserving cubic interpolation.

A curve is an ordered set of (rate, quality) operating points for one clip
and one quality metric. Interpolation uses the monotone piecewise cubic
Hermite scheme (Fritsch-Carlson slopes), so monotone data never overshoots.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DuplicateRate,
    NonAscendingAbscissae,
    NonFiniteValue,
    OutOfDomain,
    TooFewPoints,
)


@dataclass(frozen=True)
class RdPoint:
    """One operating point: rate in kilobits per second, quality in metric units."""

    rate: float
    quality: float
    qp: int | None = None
    tag: str | None = None


@dataclass(frozen=True)
class RdCurve:
    """Validated rate-quality curve, sorted by strictly increasing rate."""

    points: tuple[RdPoint, ...]
    metric_id: str

    def __post_init__(self) -> None:
        pts = sorted(self.points, key=lambda p: p.rate)
        if len(pts) < 2:
            raise TooFewPoints(f"curve needs >= 2 points, got {len(pts)}")
        for p in pts:
            if not (math.isfinite(p.rate) and p.rate > 0):
                raise NonFiniteValue(f"rate must be positive and finite, got {p.rate!r}")
            if not math.isfinite(p.quality):
                raise NonFiniteValue(f"quality must be finite, got {p.quality!r}")
        for a, b in zip(pts, pts[1:]):
            if a.rate == b.rate:
                raise DuplicateRate(f"duplicate rate {a.rate} kbps")
        object.__setattr__(self, "points", tuple(pts))

    @property
    def rates(self) -> tuple[float, ...]:
        return tuple(p.rate for p in self.points)

    @property
    def qualities(self) -> tuple[float, ...]:
        return tuple(p.quality for p in self.points)

    def quality_at_qp(self, qp: int) -> float | None:
        for p in self.points:
            if p.qp == qp:
                return p.quality
        return None


def build_curve(points, metric_id: str) -> RdCurve:
    """Validate and sort operating points into an RdCurve.

    Raises TooFewPoints, NonFiniteValue, or DuplicateRate on bad input.
    """
    pts = tuple(p if isinstance(p, RdPoint) else RdPoint(*p) for p in points)
    return RdCurve(points=pts, metric_id=metric_id)


# Hermite basis antiderivatives evaluated at t, used for exact segment integrals.
def _hermite_coeffs(y0: float, y1: float, a: float, b: float) -> tuple[float, float, float, float]:
    # cubic c0 + c1*t + c2*t^2 + c3*t^3 on the unit segment,
    # a = h*m0 and b = h*m1 are the scaled endpoint slopes
    dy = y1 - y0
    return y0, a, 3.0 * dy - 2.0 * a - b, -2.0 * dy + a + b


@dataclass(frozen=True)
class PchipInterpolant:
    """Monotone piecewise cubic Hermite interpolant.

    Knots are reproduced exactly; between knots the Fritsch-Carlson slope
    rule keeps the interpolant monotone wherever the data is monotone.
    Evaluation outside [xs[0], xs[-1]] raises OutOfDomain (no extrapolation).
    """

    xs: tuple[float, ...]
    ys: tuple[float, ...]
    slopes: tuple[float, ...]
    _coeffs: tuple[tuple[float, float, float, float], ...] = field(
        init=False, repr=False, compare=False
    )
    _arrays: tuple | None = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self) -> None:
        coeffs = []
        for i in range(len(self.xs) - 1):
            h = self.xs[i + 1] - self.xs[i]
            coeffs.append(
                _hermite_coeffs(
                    self.ys[i], self.ys[i + 1], h * self.slopes[i], h * self.slopes[i + 1]
                )
            )
        object.__setattr__(self, "_coeffs", tuple(coeffs))

    @property
    def domain(self) -> tuple[float, float]:
        return self.xs[0], self.xs[-1]

    def __call__(self, x):
        if isinstance(x, (int, float)):
            return self._eval_scalar(float(x))
        return self._eval_array(np.asarray(x, dtype=float))

    def _segment(self, x: float) -> int:
        i = bisect_right(self.xs, x) - 1
        return min(max(i, 0), len(self.xs) - 2)

    def _eval_scalar(self, x: float) -> float:
        lo, hi = self.domain
        if not (lo <= x <= hi):
            raise OutOfDomain(f"x={x} outside [{lo}, {hi}]")
        if x == hi:
            return self.ys[-1]
        i = self._segment(x)
        c0, c1, c2, c3 = self._coeffs[i]
        t = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i])
        return c0 + t * (c1 + t * (c2 + t * c3))

    def _eval_array(self, x: np.ndarray) -> np.ndarray:
        lo, hi = self.domain
        if x.size and (x.min() < lo or x.max() > hi):
            raise OutOfDomain(f"values outside [{lo}, {hi}]")
        if self._arrays is None:
            c = np.asarray(self._coeffs)
            object.__setattr__(
                self,
                "_arrays",
                (np.asarray(self.xs), np.diff(np.asarray(self.xs)),
                 c[:, 0].copy(), c[:, 1].copy(), c[:, 2].copy(), c[:, 3].copy()),
            )
        xs, h, c0, c1, c2, c3 = self._arrays
        n_seg = len(self.xs) - 1
        if x.ndim == 1 and x.size > 64 and np.all(x[1:] >= x[:-1]):
            # sorted input: each segment owns one contiguous slice
            out = np.empty_like(x)
            cuts = np.searchsorted(x, xs[1:-1], side="left")
            bounds = [0, *cuts.tolist(), x.size]
            for i in range(n_seg):
                sl = slice(bounds[i], bounds[i + 1])
                t = (x[sl] - xs[i]) / h[i]
                out[sl] = ((c3[i] * t + c2[i]) * t + c1[i]) * t + c0[i]
        else:
            idx = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, n_seg - 1)
            t = (x - xs[idx]) / h[idx]
            out = c2[idx] + t * c3[idx]
            out *= t
            out += c1[idx]
            out *= t
            out += c0[idx]
        out[x == hi] = self.ys[-1]
        return out

    def _segment_integral(self, i: int, t0: float, t1: float) -> float:
        # exact integral of the cubic over [t0, t1] in local coordinates
        c0, c1, c2, c3 = self._coeffs[i]
        h = self.xs[i + 1] - self.xs[i]

        def anti(t: float) -> float:
            return t * (c0 + t * (c1 / 2.0 + t * (c2 / 3.0 + t * c3 / 4.0)))

        return h * (anti(t1) - anti(t0))

    def integrate(self, a: float, b: float) -> float:
        """Exact integral of the interpolant over [a, b] (closed form)."""
        lo, hi = self.domain
        if not (lo <= a <= hi and lo <= b <= hi):
            raise OutOfDomain(f"integration bounds [{a}, {b}] outside [{lo}, {hi}]")
        if b < a:
            return -self.integrate(b, a)
        ia, ib = self._segment(a), self._segment(b)
        ta = (a - self.xs[ia]) / (self.xs[ia + 1] - self.xs[ia])
        tb = (b - self.xs[ib]) / (self.xs[ib + 1] - self.xs[ib])
        if ia == ib:
            return self._segment_integral(ia, ta, tb)
        total = self._segment_integral(ia, ta, 1.0)
        for i in range(ia + 1, ib):
            total += self._segment_integral(i, 0.0, 1.0)
        total += self._segment_integral(ib, 0.0, tb)
        return total


def _edge_slope(h0: float, h1: float, d0: float, d1: float) -> float:
    # one-sided three-point estimate, clamped so the boundary segment
    # cannot overshoot the adjacent secant
    m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1)
    if m * d0 <= 0.0:
        return 0.0
    if d0 * d1 < 0.0 and abs(m) > 3.0 * abs(d0):
        return 3.0 * d0
    return m


def pchip_fit(xs, ys) -> PchipInterpolant:
    """Fit a monotone cubic Hermite interpolant through (xs, ys).

    xs must be strictly increasing and everything finite. Interior slopes
    use the weighted harmonic mean of adjacent secants and drop to zero at
    local extrema, which is what keeps monotone data monotone.
    """
    xs = [float(v) for v in xs]
    ys = [float(v) for v in ys]
    n = len(xs)
    if n != len(ys):
        raise ValueError(f"xs and ys lengths differ: {n} vs {len(ys)}")
    if n < 2:
        raise TooFewPoints(f"need >= 2 knots, got {n}")
    for v in xs + ys:
        if not math.isfinite(v):
            raise NonFiniteValue(f"non-finite knot value {v!r}")
    for a, b in zip(xs, xs[1:]):
        if b <= a:
            raise NonAscendingAbscissae(f"xs not strictly increasing at {a} -> {b}")

    h = [xs[i + 1] - xs[i] for i in range(n - 1)]
    d = [(ys[i + 1] - ys[i]) / h[i] for i in range(n - 1)]
    if n == 2:
        m = [d[0], d[0]]
    else:
        m = [0.0] * n
        for i in range(1, n - 1):
            if d[i - 1] == 0.0 or d[i] == 0.0 or (d[i - 1] > 0.0) != (d[i] > 0.0):
                m[i] = 0.0
            else:
                w1 = 2.0 * h[i] + h[i - 1]
                w2 = h[i] + 2.0 * h[i - 1]
                m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i])
        m[0] = _edge_slope(h[0], h[1], d[0], d[1])
        m[-1] = _edge_slope(h[-1], h[-2], d[-1], d[-2])
    return PchipInterpolant(xs=tuple(xs), ys=tuple(ys), slopes=tuple(m))


def enforce_monotone(curve: RdCurve) -> RdCurve:
    """Drop the fewest points needed so quality is non-decreasing with rate.

    Keeps a maximum-cardinality subset; when several subsets tie, the
    lower-rate points win. Raises TooFewPoints if fewer than 2 survive.
    """
    q = [p.quality for p in curve.points]
    n = len(q)
    # f[i] = length of the longest non-decreasing run starting at i
    f = [1] * n
    for i in range(n - 2, -1, -1):
        for j in range(i + 1, n):
            if q[j] >= q[i] and 1 + f[j] > f[i]:
                f[i] = 1 + f[j]
    target = max(f)
    if target < 2:
        raise TooFewPoints(f"only {target} point(s) left after monotone cleanup")
    kept: list[int] = []
    last = -math.inf
    need = target
    for i in range(n):
        if q[i] >= last and f[i] >= need:
            kept.append(i)
            last = q[i]
            need -= 1
            if need == 0:
                break
    return RdCurve(points=tuple(curve.points[i] for i in kept), metric_id=curve.metric_id)


def read_curve_json(path) -> RdCurve:
    """Read a curve file: {"metric": id, "points": [{"rate_kbps", "quality", "qp"?}]}."""
    curve, _ = load_curve_file(path)
    return curve


def load_curve_file(path) -> tuple[RdCurve, dict]:
    """Read a curve file plus its optional annotations.

    Returns (curve, meta) where meta may carry "clip", "variant", and a
    "ci95" list aligned with the curve's (rate-sorted) points.
    """
    with open(path) as fh:
        doc = json.load(fh)
    try:
        metric = doc["metric"]
        raw = doc["points"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: not a curve file: missing {exc}") from exc
    try:
        raw = sorted(raw, key=lambda p: float(p["rate_kbps"]))
        points = [
            RdPoint(
                rate=float(p["rate_kbps"]),
                quality=float(p["quality"]),
                qp=int(p["qp"]) if p.get("qp") is not None else None,
                tag=p.get("tag"),
            )
            for p in raw
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{path}: malformed point entry: {exc}") from exc
    curve = build_curve(points, metric)
    meta = {
        "clip": doc.get("clip"),
        "variant": doc.get("variant"),
        "ci95": [float(p["ci95"]) if p.get("ci95") is not None else 0.0 for p in raw],
    }
    return curve, meta


def write_curve_json(curve: RdCurve, path, clip: str | None = None,
                     variant: str | None = None, ci95=None) -> None:
    doc: dict = {"metric": curve.metric_id}
    if clip is not None:
        doc["clip"] = clip
    if variant is not None:
        doc["variant"] = variant
    pts = []
    for i, p in enumerate(curve.points):
        entry: dict = {"rate_kbps": p.rate, "quality": p.quality}
        if p.qp is not None:
            entry["qp"] = p.qp
        if p.tag is not None:
            entry["tag"] = p.tag
        if ci95 is not None:
            entry["ci95"] = float(ci95[i])
        pts.append(entry)
    doc["points"] = pts
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
