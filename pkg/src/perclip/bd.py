"""Bjontegaard delta metrics between two rate-quality curves.

bd_rate integrates log10(rate) as a function of quality over the common
quality interval, so the result is an average percent rate difference at
equal quality. bd_quality integrates quality as a function of log10(rate),
giving an average quality difference at equal rate. Both use the exact
piecewise-cubic integral of the fitted interpolants; no quadrature error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .curves import RdCurve, enforce_monotone, pchip_fit
from .errors import AnchorOutOfRange, NoOverlap

DEFAULT_ANCHOR_QPS = (27, 39, 59)


@dataclass(frozen=True)
class BdResult:
    """Delta value plus the integration interval and point counts used."""

    value: float
    overlap: tuple[float, float]
    n_ref: int
    n_test: int


@dataclass(frozen=True)
class SavingsResult:
    """Per-anchor percent rate savings at matched quality, and their mean."""

    per_anchor: tuple[tuple[str, float], ...]
    mean: float
    skipped: tuple[str, ...] = ()


def _quality_to_lograte(curve: RdCurve):
    # inverse fit; quality must be strictly increasing, which a cleaned
    # curve normally is (exact quality ties raise NonAscendingAbscissae)
    pairs = sorted((p.quality, p.rate) for p in curve.points)
    qs = [q for q, _ in pairs]
    lx = [math.log10(r) for _, r in pairs]
    return pchip_fit(qs, lx)


def _overlap(a_lo: float, a_hi: float, b_lo: float, b_hi: float) -> tuple[float, float]:
    lo, hi = max(a_lo, b_lo), min(a_hi, b_hi)
    if not lo < hi:
        raise NoOverlap(f"no common interval: [{a_lo}, {a_hi}] vs [{b_lo}, {b_hi}]")
    return lo, hi


def bd_rate(ref: RdCurve, test: RdCurve, clean: bool = True) -> BdResult:
    """Average percent rate difference of test vs ref at equal quality.

    Negative means the test curve needs less rate. With clean=True, points
    that break quality monotonicity are dropped first (enforce_monotone).
    """
    if clean:
        ref = enforce_monotone(ref)
        test = enforce_monotone(test)
    fr = _quality_to_lograte(ref)
    ft = _quality_to_lograte(test)
    lo, hi = _overlap(*fr.domain, *ft.domain)
    d = (ft.integrate(lo, hi) - fr.integrate(lo, hi)) / (hi - lo)
    return BdResult(
        value=(10.0 ** d - 1.0) * 100.0,
        overlap=(lo, hi),
        n_ref=len(ref.points),
        n_test=len(test.points),
    )


def bd_quality(ref: RdCurve, test: RdCurve) -> BdResult:
    """Average quality difference of test vs ref at equal rate.

    Positive means the test curve is better. Computed on the curves as
    given, without monotone cleanup.
    """
    fr = pchip_fit([math.log10(r) for r in ref.rates], ref.qualities)
    ft = pchip_fit([math.log10(r) for r in test.rates], test.qualities)
    lo, hi = _overlap(*fr.domain, *ft.domain)
    d = (ft.integrate(lo, hi) - fr.integrate(lo, hi)) / (hi - lo)
    return BdResult(value=d, overlap=(lo, hi), n_ref=len(ref.points), n_test=len(test.points))


def default_anchors(ref: RdCurve, qps=DEFAULT_ANCHOR_QPS) -> list[tuple[str, float]]:
    """Anchor qualities taken from the reference curve's labelled qp points."""
    anchors = []
    for qp in qps:
        q = ref.quality_at_qp(qp)
        if q is not None:
            anchors.append((f"qp{qp}", q))
    return anchors


def bitrate_savings(ref: RdCurve, test: RdCurve, anchors=None) -> SavingsResult:
    """Percent rate change of test vs ref at fixed anchor qualities.

    Each curve is cleaned to monotone quality, inverted (quality -> rate),
    and read at every anchor. Anchors outside either curve's quality range
    are skipped; if none survive, AnchorOutOfRange is raised.
    """
    ref_c = enforce_monotone(ref)
    test_c = enforce_monotone(test)
    if anchors is None:
        anchors = default_anchors(ref_c)
    pairs_r = sorted((p.quality, p.rate) for p in ref_c.points)
    pairs_t = sorted((p.quality, p.rate) for p in test_c.points)
    inv_r = pchip_fit([q for q, _ in pairs_r], [r for _, r in pairs_r])
    inv_t = pchip_fit([q for q, _ in pairs_t], [r for _, r in pairs_t])
    lo = max(inv_r.domain[0], inv_t.domain[0])
    hi = min(inv_r.domain[1], inv_t.domain[1])

    per_anchor: list[tuple[str, float]] = []
    skipped: list[str] = []
    for label, q in anchors:
        if not (lo <= q <= hi):
            skipped.append(label)
            continue
        r_ref = inv_r(q)
        r_test = inv_t(q)
        per_anchor.append((label, (r_test - r_ref) / r_ref * 100.0))
    if not per_anchor:
        raise AnchorOutOfRange(
            f"all anchors outside the common quality range [{lo}, {hi}]"
        )
    mean = sum(v for _, v in per_anchor) / len(per_anchor)
    return SavingsResult(
        per_anchor=tuple(per_anchor), mean=mean, skipped=tuple(skipped)
    )
