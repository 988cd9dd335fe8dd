"""Online-learning experiments, cost estimation and the engine equivalence check."""
from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .column import Column, ColumnConfig, LearningMode
from .config import ExperimentConfig, dump_config
from .costmodel import calibrate, column_cost, estimate_physical, reference_rows, RSTDP_OVERHEAD
from .dataio import DataError, Dataset, export_weights, load_dataset, read_weights_csv, write_weights_csv
from .plasticity import PlasticityParams
from .temporal import ABSENT, SPIKE_DTYPE, W_MAX

log = logging.getLogger(__name__)

NOT_ACQUIRED = "NOT_ACQUIRED"


class DivergenceError(RuntimeError):
    pass


# -- helpers ------------------------------------------------------------------

def sample_order(n: int, budget: int, seed: int, pool=None) -> np.ndarray:
    """Online stream: consecutive seeded permutations of the pool until ``budget``."""
    pool = np.arange(n) if pool is None else np.asarray(pool)
    chunks, total, epoch = [], 0, 0
    while total < budget:
        perm = pool[np.random.default_rng([seed, epoch]).permutation(len(pool))]
        chunks.append(perm)
        total += len(perm)
        epoch += 1
    return np.concatenate(chunks)[:budget] if chunks else pool[:0]


def cosine_matrix(weights, class_means) -> np.ndarray:
    """Neurons x classes cosine similarity; all-zero vectors give 0."""
    w = np.asarray(weights, dtype=np.float64)
    m = np.asarray(class_means, dtype=np.float64)
    wn = np.linalg.norm(w, axis=0)
    mn = np.linalg.norm(m, axis=0)
    wn[wn == 0] = 1.0
    mn[mn == 0] = 1.0
    return (w / wn).T @ (m / mn)


class WindowedMean:
    def __init__(self, size: int):
        self.values = deque(maxlen=size)
        self.total = 0.0

    def push(self, v: float) -> float:
        if len(self.values) == self.values.maxlen:
            self.total -= self.values[0]
        self.values.append(v)
        self.total += v
        return self.mean

    @property
    def full(self) -> bool:
        return len(self.values) == self.values.maxlen

    @property
    def mean(self) -> float:
        return self.total / len(self.values) if self.values else 0.0


def _record(sample: int, label, result, **extra) -> str:
    rec = {
        "sample": sample,
        "label": None if label is None else int(label),
        "winner": result.winner,
        "reward": result.reward.name if result.reward is not None else None,
        "mean_abs_dw": round(result.mean_abs_dw, 8),
    }
    rec.update(extra)
    return json.dumps(rec, separators=(",", ":"))


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_experiment_data(cfg: ExperimentConfig) -> Dataset:
    try:
        return load_dataset(cfg.images, cfg.labels, cfg.encoder(), cfg.limit)
    except OSError as exc:
        raise DataError(f"cannot read dataset: {exc}") from exc


def evaluate(column: Column, data: Dataset, class_means, engine: str, limit: int | None = None,
             classes=range(10), cosine_threshold: float = 0.6, purity_threshold: float = 0.5) -> dict:
    """Frozen inference pass: dominant winner, purity and centroid cosine per class."""
    n = len(data) if limit is None else min(limit, len(data))
    q = column.config.q
    counts = np.zeros((len(classes), q + 1), dtype=np.int64)
    index = {c: k for k, c in enumerate(classes)}
    for i in range(n):
        label = int(data.labels[i])
        if label not in index:
            continue
        res = column.step(data.volleys[i], engine=engine, learn=False)
        counts[index[label], q if res.winner is None else res.winner] += 1
    cos = cosine_matrix(column.weights, class_means)
    per_class = []
    ok = 0
    for c, k in index.items():
        total = int(counts[k].sum())
        dominant = int(np.argmax(counts[k, :q])) if total else None
        purity = float(counts[k, dominant] / total) if total else 0.0
        cosine = float(cos[dominant, c]) if dominant is not None else 0.0
        good = purity >= purity_threshold and cosine >= cosine_threshold
        ok += good
        per_class.append({"class": c, "samples": total, "dominant": dominant, "purity": round(purity, 6),
                          "cosine": round(cosine, 6), "no_winner": int(counts[k, q]), "ok": bool(good)})
    return {"eval_samples": n, "classes_ok": int(ok), "per_class": per_class}


@dataclass
class TrainOutcome:
    column: Column
    samples: int
    converged_at: Optional[int]
    final_window_dw: float
    records: list = field(default_factory=list)


def _stream(column: Column, data: Dataset, order, engine: str, labelled: bool, window: WindowedMean,
            eps: float, metrics, sample_offset: int = 0, phase: str | None = None,
            on_sample: Callable | None = None, export: Callable | None = None, export_every: int = 0):
    converged_at = None
    for k, i in enumerate(order):
        label = int(data.labels[i])
        res = column.step(data.volleys[i], label if labelled else None, engine=engine)
        wmean = window.push(res.mean_abs_dw)
        if converged_at is None and window.full and wmean < eps:
            converged_at = sample_offset + k
        extra = {"phase": phase} if phase else {}
        metrics.write(_record(sample_offset + k, label, res, **extra) + "\n")
        if export is not None and export_every and (k + 1) % export_every == 0:
            export(sample_offset + k + 1)
        if on_sample is not None and on_sample(sample_offset + k, res):
            return k + 1, converged_at
    return len(order), converged_at


def run_train(cfg: ExperimentConfig, data: Dataset | None = None) -> dict:
    """Stream labelled samples through one column; write the run directory."""
    data = data if data is not None else load_experiment_data(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(dump_config(cfg))
    column = Column(cfg.column())
    order = sample_order(len(data), cfg.budget, cfg.seed)
    window = WindowedMean(cfg.window)

    def snapshot(step):
        export_weights(column.weights, out / "snapshots" / f"step{step:06d}")

    with open(out / "metrics.jsonl", "w") as metrics:
        used, converged_at = _stream(column, data, order, cfg.engine, cfg.mode is LearningMode.RSTDP,
                                     window, cfg.dw_epsilon, metrics,
                                     export=snapshot, export_every=cfg.export_every)
    export_weights(column.weights, out)
    classes = list(range(min(cfg.q, 10)))
    means = data.class_means(classes)
    report = evaluate(column, data, means, cfg.engine, cfg.eval_samples, classes,
                      cfg.cosine_threshold, cfg.purity_threshold)
    summary = {
        "experiment": "train",
        "samples": used,
        "converged": converged_at is not None,
        "converged_at": converged_at,
        "final_window_mean_abs_dw": round(window.mean, 8),
        "dw_epsilon": cfg.dw_epsilon,
        "window": cfg.window,
        **report,
    }
    _write_json(out / "summary.json", summary)
    log.info("train: %d samples, converged_at=%s, classes_ok=%d", used, converged_at, report["classes_ok"])
    return summary


def acquisition_hits(weights, class_means, target: int, threshold: float, margin: float) -> list[int]:
    """Neurons whose weight image matches class ``target`` at ``threshold`` and
    beats every other class by ``margin``."""
    cos = cosine_matrix(weights, class_means)
    others = np.delete(cos, target, axis=1)
    best_other = others.max(axis=1) if others.size else np.zeros(cos.shape[0])
    ok = (cos[:, target] >= threshold) & (cos[:, target] - best_other >= margin)
    return [int(j) for j in np.flatnonzero(ok)]


def run_incremental(cfg: ExperimentConfig, data: Dataset | None = None, phase2_pool=None) -> dict:
    """R-STDP on every class but ``hidden_class``, then unlabelled STDP on all
    digits; reports when some neuron first acquires the hidden class.

    ``phase2_pool`` restricts the phase-2 stream to the given sample indices.
    """
    data = data if data is not None else load_experiment_data(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(dump_config(cfg))
    hidden = cfg.hidden_class
    classes = list(range(min(cfg.q, 10)))
    means = data.class_means(classes)
    window = WindowedMean(cfg.window)

    with open(out / "metrics.jsonl", "w") as metrics:
        if cfg.checkpoint:
            path = Path(cfg.checkpoint)
            if not path.is_file():
                raise DataError(f"checkpoint {path} not found")
            weights = read_weights_csv(path)
            if weights.shape != (cfg.p, cfg.q):
                raise DataError(f"checkpoint shape {weights.shape} != ({cfg.p}, {cfg.q})")
            column = Column(cfg.column(LearningMode.RSTDP), weights)
            phase1 = 0
        else:
            column = Column(cfg.column(LearningMode.RSTDP))
            seen = np.flatnonzero(data.labels != hidden)
            order = sample_order(len(data), cfg.phase1_budget, cfg.seed, pool=seen)
            phase1, _ = _stream(column, data, order, cfg.engine, True, window, cfg.dw_epsilon,
                                metrics, phase="rstdp")
            write_weights_csv(column.weights, out / "checkpoint.csv")

        before = acquisition_hits(column.weights, means, hidden, cfg.cosine_threshold, cfg.acquire_margin)
        column.config.mode = LearningMode.STDP
        pool = np.arange(len(data)) if phase2_pool is None else np.asarray(phase2_pool)
        order = sample_order(len(data), cfg.phase2_budget, cfg.seed + 1, pool=pool)
        found = {}

        def check(k, _res):
            hits = acquisition_hits(column.weights, means, hidden, cfg.cosine_threshold, cfg.acquire_margin)
            if hits and not before:
                found["index"] = k - phase1
                found["neuron"] = hits[0]
                return True
            return False

        if before:
            found["index"] = 0
            found["neuron"] = before[0]
            used = 0
        else:
            used, _ = _stream(column, data, order, cfg.engine, False, window, cfg.dw_epsilon, metrics,
                              sample_offset=phase1, phase="stdp", on_sample=check)
    export_weights(column.weights, out)
    cos = cosine_matrix(column.weights, means)
    acquired = "index" in found
    summary = {
        "experiment": "incremental",
        "hidden_class": hidden,
        "phase1_samples": phase1,
        "phase2_samples": used,
        "acquired": acquired,
        "acquisition_index": found["index"] if acquired else NOT_ACQUIRED,
        "acquiring_neuron": found.get("neuron"),
        "acquired_before_phase2": bool(before),
        "hidden_class_cosines": [round(float(v), 6) for v in cos[:, hidden]],
    }
    _write_json(out / "summary.json", summary)
    log.info("incremental: %s", summary["acquisition_index"])
    return summary


# -- cost -----------------------------------------------------------------

def estimate_cost(p: int, q: int, mode: str = "stdp") -> dict:
    report = column_cost(p, q, mode)
    fit = calibrate()
    phys = estimate_physical(report, fit.calibration)
    result = {
        "p": p, "q": q, "mode": mode,
        "gates": report.gates,
        "delay_gates": report.delay_gates,
        "time_gate_delays": report.time_gate_delays,
        "p_static_units": report.p_static_units,
        "p_dynamic_units": report.p_dynamic_units,
        "area_mm2": phys.area_mm2,
        "time_ns": phys.time_ns,
        "power_mw": phys.power_mw,
        "assumptions": [],
        "reference": None,
    }
    if mode == "rstdp":
        result["assumptions"].append(
            f"R-STDP modelled as STDP x {RSTDP_OVERHEAD} on gates and power (not derived)")
    result["assumptions"].extend(fit.notes)
    for row in reference_rows(mode):
        if (row.p, row.q) == (p, q):
            result["reference"] = {"gates": row.gates, "area_mm2": row.area_mm2,
                                   "time_ns": row.time_ns, "power_mw": row.power_mw}
    return result


# -- engine equivalence ---------------------------------------------------------

EQUIV_PARAMS = PlasticityParams(mu_capture=0.6, mu_backoff=0.5, mu_search=0.2, mu_min=0.2)


@dataclass
class EquivalenceReport:
    passed: bool
    trials: int
    first_divergence: Optional[int] = None
    detail: dict = field(default_factory=dict)


def _random_volleys(rng, trials: int, p: int) -> np.ndarray:
    times = rng.integers(0, W_MAX + 1, size=(trials, p)).astype(SPIKE_DTYPE)
    density = rng.uniform(0.1, 0.9, size=(trials, 1))
    times[rng.random((trials, p)) > density] = ABSENT
    return times


def check_equivalence(p: int, q: int, trials: int, seed: int = 0, volleys=None,
                      perturb: Callable[[Column], None] | None = None) -> EquivalenceReport:
    """Run the cycle and functional engines side by side on one seeded stream."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    theta = max(1, (7 * p) // 10)
    cfg = dict(p=p, q=q, theta=theta, params=EQUIV_PARAMS, mode=LearningMode.RSTDP, seed=seed,
               init_weights="uniform")
    cyc = Column(ColumnConfig(**cfg))
    fun = Column(ColumnConfig(**cfg))
    if perturb is not None:
        perturb(fun)
    volleys = _random_volleys(rng, trials, p) if volleys is None else np.asarray(volleys, dtype=SPIKE_DTYPE)
    labels = rng.integers(0, q, size=len(volleys))
    for k, (x, label) in enumerate(zip(volleys, labels)):
        a = cyc.step(x, int(label), engine="cycle")
        b = fun.step(x, int(label), engine="functional")
        diff = {}
        if a.winner != b.winner:
            diff["winner"] = [a.winner, b.winner]
        if not np.array_equal(a.output, b.output):
            diff["output"] = [a.output.tolist(), b.output.tolist()]
        if not np.array_equal(a.fire_times, b.fire_times):
            diff["fire_times"] = [a.fire_times.tolist(), b.fire_times.tolist()]
        if not np.array_equal(cyc.weights, fun.weights):
            idx = np.argwhere(cyc.weights != fun.weights)
            diff["weights"] = {"mismatches": int(len(idx)), "first": idx[0].tolist()}
        if diff:
            return EquivalenceReport(False, k + 1, k, diff)
    return EquivalenceReport(True, len(volleys))
