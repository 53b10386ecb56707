"""Opinion-score statistics: MOS/DMOS with confidence intervals, observer
screening, and maximum-likelihood recovery of per-subject bias and
inconsistency.

Scores live in a subject x stimulus matrix on the [0, 100] continuous
scale, with NaN marking missing entries. Every estimator sums over present
entries only; nothing is imputed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import t as student_t

from .errors import MissingPair, NonConvergence, TooFewRaters

NU_FLOOR = 0.1  # keeps 1/nu^2 finite for perfectly consistent subjects


@dataclass(frozen=True)
class PvsInfo:
    """Stimulus metadata: its role (src or dist) and encode provenance."""

    role: str | None = None
    clip: str | None = None
    qp: int | None = None
    variant: str | None = None


@dataclass(frozen=True)
class ScoreMatrix:
    subjects: tuple[str, ...]
    stimuli: tuple[str, ...]
    scores: np.ndarray  # shape (n_subjects, n_stimuli), NaN = missing
    roles: dict[str, PvsInfo] = field(default_factory=dict)

    def __post_init__(self) -> None:
        scores = np.asarray(self.scores, dtype=float)
        if scores.shape != (len(self.subjects), len(self.stimuli)):
            raise ValueError(
                f"scores shape {scores.shape} does not match "
                f"{len(self.subjects)} subjects x {len(self.stimuli)} stimuli"
            )
        present = np.isfinite(scores)
        vals = scores[present]
        if vals.size and (vals.min() < 0.0 or vals.max() > 100.0):
            raise ValueError("scores must lie in [0, 100]")
        per_subject = present.sum(axis=1)
        if np.any(per_subject < 1):
            bad = self.subjects[int(np.argmin(per_subject))]
            raise ValueError(f"subject {bad!r} has no scores")
        per_stim = present.sum(axis=0)
        if np.any(per_stim < 2):
            bad = self.stimuli[int(np.argmin(per_stim))]
            raise TooFewRaters(f"stimulus {bad!r} has fewer than 2 scores")
        scores = scores.copy()
        scores.flags.writeable = False
        object.__setattr__(self, "scores", scores)

    @property
    def present(self) -> np.ndarray:
        return np.isfinite(self.scores)

    def subset_subjects(self, keep) -> "ScoreMatrix":
        idx = [i for i, s in enumerate(self.subjects) if s in set(keep)]
        return ScoreMatrix(
            subjects=tuple(self.subjects[i] for i in idx),
            stimuli=self.stimuli,
            scores=self.scores[idx, :],
            roles=self.roles,
        )


@dataclass(frozen=True)
class MosEntry:
    mos: float
    ci95: float
    n: int


@dataclass(frozen=True)
class MosTable:
    entries: dict[str, MosEntry]

    def __getitem__(self, pvs_id: str) -> MosEntry:
        return self.entries[pvs_id]


@dataclass(frozen=True)
class SubjectScreen:
    p: int  # scores above the per-stimulus upper threshold
    q: int  # scores below the lower threshold
    n_scored: int
    outlier_ratio: float  # (p + q) / n_scored
    asymmetry: float  # |p - q| / (p + q), 0 when p + q == 0


@dataclass(frozen=True)
class ScreeningReport:
    rejected: tuple[str, ...]
    per_subject: dict[str, SubjectScreen]


@dataclass(frozen=True)
class SubjectModel:
    """Recovered quality and per-subject nuisance parameters.

    psi: per-stimulus quality; delta: per-subject bias (zero mean);
    nu: per-subject inconsistency (std, floored); ci95: per-stimulus
    half-width from the information of the scoring subjects.
    """

    stimuli: tuple[str, ...]
    subjects: tuple[str, ...]
    psi: tuple[float, ...]
    delta: tuple[float, ...]
    nu: tuple[float, ...]
    ci95: tuple[float, ...]
    loglik: float
    iterations: int
    loglik_trace: tuple[float, ...]
    method: str


def compute_mos(matrix: ScoreMatrix) -> MosTable:
    """Per-stimulus mean with a Student-t 95% confidence half-width."""
    entries: dict[str, MosEntry] = {}
    for j, pvs in enumerate(matrix.stimuli):
        col = matrix.scores[:, j]
        vals = col[np.isfinite(col)]
        n = int(vals.size)
        if n < 2:
            raise TooFewRaters(f"stimulus {pvs!r} has {n} score(s)")
        mos = float(vals.mean())
        s = float(vals.std(ddof=1))
        ci = float(student_t.ppf(0.975, n - 1) * s / math.sqrt(n))
        entries[pvs] = MosEntry(mos=mos, ci95=ci, n=n)
    return MosTable(entries=entries)


def compute_dmos(mos: MosTable, pairing: dict[str, str]) -> MosTable:
    """Differential scores: 100 - (mos_src - mos_dist), keyed by the
    distorted stimulus. Confidence intervals add in quadrature."""
    entries: dict[str, MosEntry] = {}
    for dist, src in pairing.items():
        if dist not in mos.entries:
            raise MissingPair(f"distorted stimulus {dist!r} not in the MOS table")
        if src not in mos.entries:
            raise MissingPair(f"source stimulus {src!r} (pair of {dist!r}) not in the MOS table")
        e_d, e_s = mos[dist], mos[src]
        entries[dist] = MosEntry(
            mos=100.0 - (e_s.mos - e_d.mos),
            ci95=math.hypot(e_s.ci95, e_d.ci95),
            n=min(e_s.n, e_d.n),
        )
    return MosTable(entries=entries)


def bt500_screen(matrix: ScoreMatrix) -> ScreeningReport:
    """Observer screening by per-stimulus outlier counting.

    A score counts toward P (Q) when it exceeds (falls below) the stimulus
    mean by 2 standard deviations for roughly normal score distributions
    (kurtosis in [2, 4]) or sqrt(20) standard deviations otherwise. A
    subject is rejected when more than 5% of their scores are outliers and
    the outliers are roughly symmetric (|P - Q| / (P + Q) < 0.3).
    """
    if len(matrix.subjects) < 3:
        raise ValueError(f"screening needs >= 3 subjects, got {len(matrix.subjects)}")
    scores = matrix.scores
    present = matrix.present
    n_per_stim = present.sum(axis=0)
    mean = np.nanmean(scores, axis=0)
    std = np.nanstd(scores, axis=0, ddof=1)
    centered = np.where(present, scores - mean, 0.0)
    m2 = (centered**2).sum(axis=0) / n_per_stim
    m4 = (centered**4).sum(axis=0) / n_per_stim
    with np.errstate(divide="ignore", invalid="ignore"):
        beta2 = np.where(m2 > 0.0, m4 / np.where(m2 > 0.0, m2, 1.0) ** 2, 0.0)
    threshold = np.where((beta2 >= 2.0) & (beta2 <= 4.0), 2.0 * std, math.sqrt(20.0) * std)

    above = present & (scores > mean + threshold)
    below = present & (scores < mean - threshold)
    p = above.sum(axis=1)
    q = below.sum(axis=1)
    n_scored = present.sum(axis=1)

    per_subject: dict[str, SubjectScreen] = {}
    rejected: list[str] = []
    for i, subj in enumerate(matrix.subjects):
        pq = int(p[i] + q[i])
        ratio = pq / int(n_scored[i])
        asym = abs(int(p[i]) - int(q[i])) / pq if pq > 0 else 0.0
        per_subject[subj] = SubjectScreen(
            p=int(p[i]), q=int(q[i]), n_scored=int(n_scored[i]),
            outlier_ratio=ratio, asymmetry=asym,
        )
        if ratio > 0.05 and asym < 0.3:
            rejected.append(subj)
    return ScreeningReport(rejected=tuple(rejected), per_subject=per_subject)


def _loglik(scores, present, psi, delta, nu) -> float:
    resid = np.where(present, scores - psi[None, :] - delta[:, None], 0.0)
    var = nu[:, None] ** 2
    per_entry = -0.5 * (np.log(2.0 * math.pi * var) + resid**2 / var)
    return float(np.where(present, per_entry, 0.0).sum())


def recover_mle(
    matrix: ScoreMatrix,
    method: str = "p913",
    nu_floor: float = NU_FLOOR,
    tol: float = 1e-8,
    max_sweeps: int = 10_000,
    fixed_inconsistency: float | None = None,
) -> SubjectModel:
    """Fit scores = psi[stimulus] + delta[subject] + nu[subject] * noise.

    Alternating coordinate maximum likelihood: stimulus qualities are
    precision-weighted means, biases are per-subject residual means,
    inconsistencies are per-subject residual stds (floored). Biases are
    recentered to zero mean each sweep, compensating psi so the likelihood
    is untouched. The two presets run the same solver; the method name is
    recorded on the result. fixed_inconsistency freezes nu at a constant
    for every subject (useful for sensitivity checks).
    """
    method = method.lower()
    if method not in ("p910", "p913"):
        raise ValueError(f"unknown recovery method {method!r}")
    present = matrix.present
    per_subject = present.sum(axis=1)
    if np.any(per_subject < 2):
        bad = matrix.subjects[int(np.argmin(per_subject))]
        raise TooFewRaters(f"subject {bad!r} has fewer than 2 scores")
    scores = np.where(present, matrix.scores, 0.0)
    n_stim_per_subject = per_subject.astype(float)
    n_subj_per_stim = present.sum(axis=0).astype(float)

    psi = scores.sum(axis=0) / n_subj_per_stim
    resid0 = np.where(present, scores - psi[None, :], 0.0)
    delta = resid0.sum(axis=1) / n_stim_per_subject
    resid1 = np.where(present, resid0 - delta[:, None], 0.0)
    if fixed_inconsistency is not None:
        nu = np.full(len(matrix.subjects), max(fixed_inconsistency, nu_floor))
    else:
        nu = np.maximum(np.sqrt((resid1**2).sum(axis=1) / n_stim_per_subject), nu_floor)
    shift = float(delta.mean())
    delta = delta - shift
    psi = psi + shift

    trace: list[float] = []
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        psi_old, delta_old, nu_old = psi, delta, nu
        w = np.where(present, (1.0 / nu**2)[:, None], 0.0)
        psi = (w * (scores - delta[:, None])).sum(axis=0) / w.sum(axis=0)
        delta = np.where(present, scores - psi[None, :], 0.0).sum(axis=1) / n_stim_per_subject
        resid = np.where(present, scores - psi[None, :] - delta[:, None], 0.0)
        if fixed_inconsistency is None:
            nu = np.maximum(np.sqrt((resid**2).sum(axis=1) / n_stim_per_subject), nu_floor)
        shift = float(delta.mean())
        delta = delta - shift
        psi = psi + shift
        trace.append(_loglik(scores, present, psi, delta, nu))
        change = max(
            float(np.abs(psi - psi_old).max()),
            float(np.abs(delta - delta_old).max()),
            float(np.abs(nu - nu_old).max()),
        )
        if change < tol:
            converged = True
            break
    if not converged:
        raise NonConvergence(f"no convergence after {max_sweeps} sweeps")

    info = np.where(present, (1.0 / nu**2)[:, None], 0.0).sum(axis=0)
    ci95 = 1.96 / np.sqrt(info)
    return SubjectModel(
        stimuli=matrix.stimuli,
        subjects=matrix.subjects,
        psi=tuple(float(v) for v in psi),
        delta=tuple(float(v) for v in delta),
        nu=tuple(float(v) for v in nu),
        ci95=tuple(float(v) for v in ci95),
        loglik=trace[-1],
        iterations=sweeps,
        loglik_trace=tuple(trace),
        method=method,
    )


@dataclass(frozen=True)
class ScoreRow:
    subject_id: str
    pvs_id: str
    score: float
    meta: dict


def read_scores_csv(path) -> list[ScoreRow]:
    """Read rows of subject_id,pvs_id,score plus optional metadata columns
    (clip, qp, variant, role, cohort...). Raises ValueError with the line
    number on malformed rows."""
    rows: list[ScoreRow] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"subject_id", "pvs_id", "score"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ValueError(f"{path}: header must contain {sorted(required)}")
        for lineno, rec in enumerate(reader, start=2):
            try:
                score = float(rec["score"])
            except (TypeError, ValueError):
                raise ValueError(f"{path}: line {lineno}: bad score {rec.get('score')!r}")
            if not (rec.get("subject_id") and rec.get("pvs_id")):
                raise ValueError(f"{path}: line {lineno}: empty subject_id or pvs_id")
            meta = {
                k: v for k, v in rec.items()
                if k not in ("subject_id", "pvs_id", "score") and v not in (None, "")
            }
            rows.append(ScoreRow(rec["subject_id"], rec["pvs_id"], score, meta))
    if not rows:
        raise ValueError(f"{path}: no score rows")
    return rows


def build_score_matrix(rows: list[ScoreRow]) -> ScoreMatrix:
    subjects: list[str] = []
    stimuli: list[str] = []
    for r in rows:
        if r.subject_id not in subjects:
            subjects.append(r.subject_id)
        if r.pvs_id not in stimuli:
            stimuli.append(r.pvs_id)
    s_idx = {s: i for i, s in enumerate(subjects)}
    e_idx = {e: j for j, e in enumerate(stimuli)}
    scores = np.full((len(subjects), len(stimuli)), np.nan)
    roles: dict[str, PvsInfo] = {}
    for r in rows:
        i, j = s_idx[r.subject_id], e_idx[r.pvs_id]
        if np.isfinite(scores[i, j]):
            raise ValueError(f"duplicate score for ({r.subject_id}, {r.pvs_id})")
        scores[i, j] = r.score
        if r.pvs_id not in roles and any(
            k in r.meta for k in ("role", "clip", "qp", "variant")
        ):
            roles[r.pvs_id] = PvsInfo(
                role=r.meta.get("role"),
                clip=r.meta.get("clip"),
                qp=int(r.meta["qp"]) if r.meta.get("qp") else None,
                variant=r.meta.get("variant"),
            )
    return ScoreMatrix(
        subjects=tuple(subjects), stimuli=tuple(stimuli), scores=scores, roles=roles
    )


def subject_cohorts(rows: list[ScoreRow], column: str) -> dict[str, str]:
    """Map each subject to its value of a metadata column (e.g. a cohort
    label). Conflicting values for one subject raise ValueError."""
    out: dict[str, str] = {}
    for r in rows:
        value = r.meta.get(column)
        if value is None:
            raise ValueError(f"row for {r.subject_id!r} lacks column {column!r}")
        if out.setdefault(r.subject_id, value) != value:
            raise ValueError(f"subject {r.subject_id!r} has conflicting {column!r} values")
    return out


def read_pairing_csv(path) -> dict[str, str]:
    """Read dist_pvs_id,src_pvs_id rows into a pairing map."""
    pairing: dict[str, str] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"dist_pvs_id", "src_pvs_id"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ValueError(f"{path}: header must contain {sorted(required)}")
        for lineno, rec in enumerate(reader, start=2):
            dist, src = rec.get("dist_pvs_id"), rec.get("src_pvs_id")
            if not dist or not src:
                raise ValueError(f"{path}: line {lineno}: empty pairing entry")
            pairing[dist] = src
    return pairing
