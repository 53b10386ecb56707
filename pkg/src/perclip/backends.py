"""Encode backends: the abstract contract, a synthetic closed-form model,
and an external-process driver.

The synthetic model exists so the whole optimization loop can run and be
checked at desk scale: it has a built-in best multiplier pair, is exact and
deterministic, and anchors to the default encoder curve at k = (1, 1).
"""

from __future__ import annotations

import abc
import json
import math
import shlex
import subprocess
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .curves import RdCurve, RdPoint, build_curve
from .errors import BackendFailure


@dataclass(frozen=True)
class LambdaMultipliers:
    """Scalers applied to the encoder's default lambda: k1 for keyframes,
    k2 for golden/alternate-reference frames."""

    k1: float
    k2: float

    def __post_init__(self) -> None:
        if not (self.k1 > 0 and self.k2 > 0):
            raise ValueError(f"multipliers must be positive, got ({self.k1}, {self.k2})")


@dataclass(frozen=True)
class EncodeRequest:
    clip: str
    qp: int
    ks: LambdaMultipliers
    settings: str = "native"
    metric_id: str = "ms_ssim"

    def __post_init__(self) -> None:
        if not 0 <= self.qp <= 63:
            raise ValueError(f"qp {self.qp} outside [0, 63]")


@dataclass(frozen=True)
class EncodeResult:
    rate: float  # kilobits per second
    quality: float
    artifacts: dict | None = None


class EncoderBackend(abc.ABC):
    """Contract: deterministic for identical requests, safe to call
    concurrently with distinct requests."""

    @abc.abstractmethod
    def encode(self, request: EncodeRequest) -> EncodeResult:
        raise NotImplementedError


@dataclass(frozen=True)
class SyntheticModel:
    """Closed-form rate/quality model with a known best multiplier pair.

    The bowl term g is zero at ks = (1, 1) and peaks at k_star, where the
    produced curve strictly dominates the baseline, so the resulting
    BD-rate cost is negative near k_star by construction.
    """

    r0: float = 30000.0
    alpha: float = 9.0
    qmax: float = 20.0
    beta: float = 0.18
    k_star: tuple[float, float] = (1.3, 0.8)
    gamma: float = 1.2
    w1: float = 0.4
    w2: float = 0.6

    def __post_init__(self) -> None:
        object.__setattr__(self, "k_star", tuple(float(k) for k in self.k_star))
        for name in ("r0", "alpha", "qmax", "beta", "gamma", "w1", "w2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not (self.k_star[0] > 0 and self.k_star[1] > 0):
            raise ValueError("k_star components must be positive")

    def bowl(self, k1: float, k2: float) -> float:
        k1s, k2s = self.k_star
        c0 = self.w1 * (1.0 - k1s) ** 2 + self.w2 * (1.0 - k2s) ** 2
        dist = self.w1 * (k1 - k1s) ** 2 + self.w2 * (k2 - k2s) ** 2
        return self.gamma * (c0 - dist)

    def rate(self, qp: int, g: float) -> float:
        return self.r0 * 2.0 ** (-qp / self.alpha) * (1.0 + 0.02 * g)

    def quality(self, qp: int, g: float) -> float:
        return self.qmax - self.beta * qp + 0.5 * g


def synthetic_encode(model: SyntheticModel, request: EncodeRequest) -> EncodeResult:
    g = model.bowl(request.ks.k1, request.ks.k2)
    return EncodeResult(
        rate=model.rate(request.qp, g),
        quality=model.quality(request.qp, g),
    )


class SyntheticBackend(EncoderBackend):
    """Pure, exact backend over a SyntheticModel (optionally per clip)."""

    def __init__(self, model: SyntheticModel | None = None,
                 per_clip: dict[str, SyntheticModel] | None = None):
        self.model = model or SyntheticModel()
        self.per_clip = per_clip or {}

    def encode(self, request: EncodeRequest) -> EncodeResult:
        model = self.per_clip.get(request.clip, self.model)
        return synthetic_encode(model, request)


@dataclass
class ProcessBackend(EncoderBackend):
    """Drives an external encoder plus metric tool through command templates.

    encode_template placeholders: {input} {output} {qp} {k1} {k2} plus any
    keys of the selected settings profile. metric_template additionally gets
    {stats}. Rate comes from the output container size over the clip
    duration; quality from the metric stats JSON under the metric key.
    """

    encode_template: str
    metric_template: str
    settings: dict[str, dict] = field(default_factory=lambda: {"native": {}})
    timeout_s: float = 600.0
    pool_size: int = 4
    stats_keys: dict[str, str] = field(default_factory=dict)
    clip_durations: dict[str, float] = field(default_factory=dict)
    default_duration_s: float | None = None
    workdir: str = "."

    def __post_init__(self) -> None:
        self._slots = threading.Semaphore(max(1, int(self.pool_size)))

    def _duration(self, clip: str) -> float:
        dur = self.clip_durations.get(clip, self.default_duration_s)
        if dur is None or dur <= 0:
            raise BackendFailure(f"no duration configured for clip {clip!r}")
        return dur

    def _run(self, cmd: str) -> None:
        argv = shlex.split(cmd)
        try:
            proc = subprocess.run(
                argv, capture_output=True, timeout=self.timeout_s, text=True
            )
        except FileNotFoundError as exc:
            raise BackendFailure(f"command not found: {argv[0]}") from exc
        except subprocess.TimeoutExpired as exc:
            raise BackendFailure(f"timed out after {self.timeout_s}s: {argv[0]}") from exc
        if proc.returncode != 0:
            raise BackendFailure(
                f"{argv[0]} exited {proc.returncode}: {proc.stderr.strip()[:400]}"
            )

    def encode(self, request: EncodeRequest) -> EncodeResult:
        try:
            profile = self.settings[request.settings]
        except KeyError as exc:
            raise BackendFailure(f"unknown settings profile {request.settings!r}") from exc
        stem = (
            f"{Path(request.clip).stem}_{request.settings}_qp{request.qp}"
            f"_k1_{request.ks.k1:.6f}_k2_{request.ks.k2:.6f}"
        )
        out = Path(self.workdir) / f"{stem}.bin"
        stats = Path(self.workdir) / f"{stem}.stats.json"
        fields = dict(
            profile,
            input=request.clip,
            output=str(out),
            qp=request.qp,
            k1=request.ks.k1,
            k2=request.ks.k2,
            stats=str(stats),
        )
        with self._slots:
            self._run(self.encode_template.format(**fields))
            if not out.exists():
                raise BackendFailure(f"encoder produced no output at {out}")
            self._run(self.metric_template.format(**fields))
        size = out.stat().st_size
        rate = 8.0 * size / self._duration(request.clip) / 1000.0
        try:
            with open(stats) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise BackendFailure(f"unreadable stats file {stats}: {exc}") from exc
        key = self.stats_keys.get(request.metric_id, request.metric_id)
        if key not in doc:
            raise BackendFailure(f"stats file {stats} has no key {key!r}")
        quality = float(doc[key])
        if not (rate > 0 and math.isfinite(quality)):
            raise BackendFailure(f"invalid encode result rate={rate} quality={quality}")
        return EncodeResult(rate=rate, quality=quality,
                            artifacts={"bitstream": str(out), "stats": str(stats)})


def build_rd_curve(backend: EncoderBackend, clip: str, ks: LambdaMultipliers,
                   qps, settings: str = "native", metric_id: str = "ms_ssim") -> RdCurve:
    """Encode the clip once per qp (concurrently) and assemble the curve."""
    qps = list(qps)
    if len(qps) < 2:
        raise ValueError(f"need >= 2 qps, got {qps}")
    if len(set(qps)) != len(qps):
        raise ValueError(f"duplicate qp in {qps}")
    requests = [
        EncodeRequest(clip=clip, qp=qp, ks=ks, settings=settings, metric_id=metric_id)
        for qp in qps
    ]

    def run(req: EncodeRequest) -> EncodeResult:
        try:
            return backend.encode(req)
        except BackendFailure as exc:
            raise BackendFailure(f"qp {req.qp}: {exc}") from exc

    with ThreadPoolExecutor(max_workers=len(requests)) as pool:
        results = list(pool.map(run, requests))
    points = [
        RdPoint(rate=res.rate, quality=res.quality, qp=req.qp)
        for req, res in zip(requests, results)
    ]
    return build_curve(points, metric_id)


def backend_from_config(cfg: dict) -> EncoderBackend:
    """Build a backend from the parsed config file's "backend" section."""
    kind = cfg.get("kind")
    if kind == "synthetic":
        model = SyntheticModel(**cfg.get("model", {}))
        per_clip = {
            name: SyntheticModel(**params)
            for name, params in cfg.get("clips", {}).items()
        }
        return SyntheticBackend(model=model, per_clip=per_clip)
    if kind == "process":
        return ProcessBackend(
            encode_template=cfg["encode_template"],
            metric_template=cfg["metric_template"],
            settings=cfg.get("settings", {"native": {}}),
            timeout_s=cfg.get("timeout_s", 600.0),
            pool_size=cfg.get("pool_size", 4),
            stats_keys=cfg.get("stats_keys", {}),
            clip_durations=cfg.get("clip_durations", {}),
            default_duration_s=cfg.get("default_duration_s"),
            workdir=cfg.get("workdir", "."),
        )
    raise ValueError(f"unknown backend kind {kind!r}")
