"""Search for the best per-clip lambda multipliers.

The cost of a candidate (k1, k2) is the BD-rate of the curve it produces
against the baseline curve encoded at (1, 1), so the cost at (1, 1) is
exactly zero and any negative best cost is a real improvement. Encodes are
memoized by (clip, settings, qp, k1, k2) since the search revisits points.
"""

from __future__ import annotations

import json
import logging
import math
import threading
from dataclasses import dataclass

from .backends import EncodeRequest, EncodeResult, EncoderBackend, LambdaMultipliers, build_rd_curve
from .bd import bd_rate
from .curves import RdCurve
from .errors import BackendFailure, NoOverlap, NonAscendingAbscissae, TooFewPoints
from .powell import PowellResult, powell_box_minimize

log = logging.getLogger(__name__)

DEFAULT_QPS = (27, 39, 49, 59, 63)


@dataclass(frozen=True)
class OptimizationConfig:
    qps: tuple[int, ...] = DEFAULT_QPS
    bounds: tuple[float, float] = (0.2, 4.0)
    x0: tuple[float, float] = (1.0, 1.0)
    ftol: float = 1e-6
    max_iters: int = 20
    metric_id: str = "ms_ssim"
    line_xtol: float = 1e-4  # absolute tolerance of the line search, in k units

    def __post_init__(self) -> None:
        if len(set(self.qps)) != len(self.qps):
            raise ValueError(f"duplicate qp in {self.qps}")
        for qp in self.qps:
            if not 0 <= qp <= 63:
                raise ValueError(f"qp {qp} outside [0, 63]")
        k_min, k_max = self.bounds
        if not 0.0 < k_min < 1.0 < k_max:
            raise ValueError(f"bounds must be positive and straddle 1.0, got {self.bounds}")
        if not all(k_min <= k <= k_max for k in self.x0):
            raise ValueError(f"start point {self.x0} outside bounds {self.bounds}")


@dataclass(frozen=True)
class CostEvaluation:
    ks: LambdaMultipliers
    cost: float
    cache_hit: bool


@dataclass(frozen=True)
class OptimizationTrace:
    evaluations: tuple[CostEvaluation, ...]
    best: tuple[LambdaMultipliers, float]
    iterations: int
    encode_count: int
    hit_iteration_cap: bool


class EncodeCache:
    """Thread-safe (rate, quality) store keyed by the encode request.

    k values are rounded to 1e-6 for the key. Persistable to JSON so a
    repeated run issues zero encodes.
    """

    def __init__(self) -> None:
        self._data: dict[tuple, tuple[float, float]] = {}
        self._lock = threading.Lock()

    @staticmethod
    def key(request: EncodeRequest) -> tuple:
        return (
            request.clip,
            request.settings,
            request.qp,
            round(request.ks.k1, 6),
            round(request.ks.k2, 6),
        )

    def get(self, request: EncodeRequest) -> EncodeResult | None:
        with self._lock:
            hit = self._data.get(self.key(request))
        if hit is None:
            return None
        return EncodeResult(rate=hit[0], quality=hit[1])

    def put(self, request: EncodeRequest, result: EncodeResult) -> None:
        with self._lock:
            self._data[self.key(request)] = (result.rate, result.quality)

    def __len__(self) -> int:
        return len(self._data)

    def save(self, path) -> None:
        with self._lock:
            rows = [list(k) + list(v) for k, v in self._data.items()]
        with open(path, "w") as fh:
            json.dump(rows, fh)

    def load(self, path) -> None:
        with open(path) as fh:
            rows = json.load(fh)
        with self._lock:
            for clip, settings, qp, k1, k2, rate, quality in rows:
                self._data[(clip, settings, int(qp), k1, k2)] = (rate, quality)


class CachingEncoder(EncoderBackend):
    """Backend wrapper that memoizes encodes and counts the real ones."""

    def __init__(self, backend: EncoderBackend, cache: EncodeCache | None = None):
        self.backend = backend
        self.cache = cache if cache is not None else EncodeCache()
        self._lock = threading.Lock()
        self.encodes_issued = 0
        self.cache_hits = 0

    def encode(self, request: EncodeRequest) -> EncodeResult:
        hit = self.cache.get(request)
        if hit is not None:
            with self._lock:
                self.cache_hits += 1
            return hit
        result = self.backend.encode(request)
        self.cache.put(request, result)
        with self._lock:
            self.encodes_issued += 1
        return result


def evaluate_cost(
    backend: EncoderBackend,
    clip: str,
    ks: LambdaMultipliers,
    baseline: RdCurve,
    config: OptimizationConfig,
    settings: str = "native",
) -> float:
    """BD-rate (percent) of the candidate curve at ks against the baseline.

    Negative is an improvement. A candidate whose curve cannot be compared
    (no quality overlap, or too few points after cleanup) costs +inf so the
    surrounding search can continue.
    """
    k_min, k_max = config.bounds
    if not (k_min <= ks.k1 <= k_max and k_min <= ks.k2 <= k_max):
        raise ValueError(f"ks {ks} outside bounds {config.bounds}")
    candidate = build_rd_curve(
        backend, clip, ks, config.qps, settings=settings, metric_id=config.metric_id
    )
    try:
        return bd_rate(baseline, candidate, clean=True).value
    except (NoOverlap, TooFewPoints, NonAscendingAbscissae) as exc:
        log.warning("cost at (%.4f, %.4f) not comparable (%s); using +inf", ks.k1, ks.k2, exc)
        return math.inf


def _trace_from(result: PowellResult, records: list[CostEvaluation],
                encode_count: int) -> OptimizationTrace:
    best = min(records, key=lambda r: r.cost)
    return OptimizationTrace(
        evaluations=tuple(records),
        best=(best.ks, best.cost),
        iterations=result.iterations,
        encode_count=encode_count,
        hit_iteration_cap=not result.converged,
    )


def powell_minimize(f, config: OptimizationConfig) -> OptimizationTrace:
    """Minimize an arbitrary cost over the (k1, k2) box of the config."""
    records: list[CostEvaluation] = []

    def wrapped(x) -> float:
        ks = LambdaMultipliers(k1=float(x[0]), k2=float(x[1]))
        cost = float(f(x))
        records.append(CostEvaluation(ks=ks, cost=cost, cache_hit=False))
        return cost

    k_min, k_max = config.bounds
    result = powell_box_minimize(
        wrapped,
        x0=config.x0,
        lower=(k_min, k_min),
        upper=(k_max, k_max),
        ftol=config.ftol,
        max_iters=config.max_iters,
        xtol=config.line_xtol,
    )
    return _trace_from(result, records, encode_count=0)


def optimize_clip(
    backend: EncoderBackend,
    clip: str,
    config: OptimizationConfig | None = None,
    proxy: str | None = None,
    cache: EncodeCache | None = None,
) -> tuple[LambdaMultipliers, OptimizationTrace]:
    """Find the best (k1, k2) for one clip under proxy settings.

    The baseline is the curve at (1, 1); the search minimizes BD-rate
    against it. The returned multipliers are meant to be reused for the
    native-settings encode. A failed candidate encode costs +inf rather
    than aborting the search; a failed baseline encode is fatal.
    """
    config = config or OptimizationConfig()
    settings = proxy if proxy is not None else "native"
    enc = CachingEncoder(backend, cache)
    baseline = build_rd_curve(
        enc, clip, LambdaMultipliers(1.0, 1.0), config.qps,
        settings=settings, metric_id=config.metric_id,
    )
    records: list[CostEvaluation] = []

    def cost(x) -> float:
        ks = LambdaMultipliers(k1=float(x[0]), k2=float(x[1]))
        misses_before = enc.encodes_issued
        try:
            value = evaluate_cost(enc, clip, ks, baseline, config, settings=settings)
        except BackendFailure as exc:
            log.warning("encode failed at (%.4f, %.4f): %s; using +inf", ks.k1, ks.k2, exc)
            value = math.inf
        records.append(
            CostEvaluation(
                ks=ks, cost=value, cache_hit=enc.encodes_issued == misses_before
            )
        )
        return value

    k_min, k_max = config.bounds
    result = powell_box_minimize(
        cost,
        x0=config.x0,
        lower=(k_min, k_min),
        upper=(k_max, k_max),
        ftol=config.ftol,
        max_iters=config.max_iters,
        xtol=config.line_xtol,
    )
    trace = _trace_from(result, records, encode_count=enc.encodes_issued)
    return trace.best[0], trace
