"""Named Monte Carlo experiments and their report files.

Every experiment reads an :class:`ExperimentConfig`, fans out over ensemble
seeds ``seed ^ k``, and returns an :class:`ExperimentResult` whose
assertions decide the exit status of a run. Default windows and tolerances
were fixed from pilot runs on seeds disjoint from the defaults used here.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .digits import DigitSetSpec, cover, exact_dim_values, periodic, superexp_blocks
from .dyadic import IntervalFamily, is_balanced, balance
from .errors import InvalidArguments, ValidationError
from .estimators import CoverHierarchy, fit_slope, window_assouad
from .fbm import sample_path
from .path_counts import gamma_event, image_count, level_set, record_set, witness_search
from .percolation import box_slope, surviving_sample, tail_check, window_event
from .rng import check_seed, ensemble_seeds, stream


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    alpha: float = 0.5
    ensemble: int = 50
    order: int = 16
    window: tuple[int, int] | None = None
    eps: float = 0.2
    set: dict = field(default_factory=dict)
    tolerance: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    out: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidArguments(f"unknown experiment {self.experiment!r}; "
                                   f"choose from {sorted(EXPERIMENTS)}")
        check_seed(self.seed)
        if not 0 < self.alpha < 1:
            raise InvalidArguments("alpha must lie in (0, 1)")
        if self.ensemble < 1 or self.workers < 1:
            raise InvalidArguments("ensemble and workers must be positive")
        if not 0 < self.eps < 1:
            raise InvalidArguments("eps must lie in (0, 1)")
        if self.window is not None:
            lo, hi = self.window
            object.__setattr__(self, "window", (int(lo), int(hi)))

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        data = dict(data)
        if "seed" not in data:
            raise InvalidArguments("config must give an explicit seed")
        name = data.get("experiment")
        merged = {**DEFAULTS.get(name, {}), **data}
        for key in ("tolerance", "params", "set"):
            merged[key] = {**DEFAULTS.get(name, {}).get(key, {}), **data.get(key, {})}
        known = set(cls.__dataclass_fields__)
        extra = set(merged) - known
        if extra:
            raise InvalidArguments(f"unknown config keys {sorted(extra)}")
        if merged.get("window") is not None:
            merged["window"] = tuple(merged["window"])
        return cls(**merged)

    @classmethod
    def from_toml(cls, path: str | os.PathLike, **overrides) -> ExperimentConfig:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(data)

    def tol(self, key: str) -> float:
        return float(self.tolerance[key])


@dataclass(frozen=True)
class Assertion:
    name: str
    passed: bool
    detail: str


@dataclass
class ExperimentResult:
    name: str
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    assertions: list[Assertion] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def check(self, name: str, passed: bool, detail: str) -> None:
        self.assertions.append(Assertion(name, bool(passed), detail))


def emit_report(result: ExperimentResult, out_dir: str | os.PathLike) -> tuple[Path, Path]:
    """Write ``<name>.csv`` and ``<name>_summary.txt``; return both paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{result.name}.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=result.columns, lineterminator="\n")
        w.writeheader()
        for row in result.rows:
            w.writerow({k: _fmt(v) for k, v in row.items()})
    txt_path = out / f"{result.name}_summary.txt"
    with open(txt_path, "w") as fh:
        fh.write(summary_text(result))
    return csv_path, txt_path


def summary_text(result: ExperimentResult) -> str:
    lines = [f"experiment: {result.name}"]
    lines += [f"{k}: {_fmt(v)}" for k, v in result.summary.items()]
    for a in result.assertions:
        lines.append(f"[{'PASS' if a.passed else 'FAIL'}] {a.name}: {a.detail}")
    lines.append(f"overall: {'PASS' if result.passed else 'FAIL'}")
    return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    return v


def _map(fn: Callable, items: list, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _slope(ns, counts) -> float:
    return fit_slope(ns, np.log2(np.asarray(counts, dtype=float)))[0]


def _digit_spec(cfg: ExperimentConfig) -> DigitSetSpec:
    s = dict(cfg.set)
    s.pop("kind", None)
    return DigitSetSpec.from_config(s)


# ---------------------------------------------------------------- fBm sets

def _zero_task(args):
    alpha, order, seed, (lo, hi), y = args
    p = sample_path(alpha, order, seed)
    ns = np.arange(lo, hi + 1)
    return _slope(ns, [len(level_set(p, y, int(n))) for n in ns])


def _record_task(args):
    alpha, order, seed, (lo, hi) = args
    p = sample_path(alpha, order, seed)
    ns = np.arange(lo, hi + 1)
    return _slope(ns, [len(record_set(p, int(n))) for n in ns])


def run_zero_set(cfg: ExperimentConfig) -> ExperimentResult:
    seeds = ensemble_seeds(cfg.seed, cfg.ensemble)
    y = float(cfg.params.get("level", 0.0))
    slopes = _map(_zero_task, [(cfg.alpha, cfg.order, s, cfg.window, y) for s in seeds], cfg.workers)
    res = ExperimentResult("zero_set", ["seed", "slope"],
                           [{"seed": s, "slope": v} for s, v in zip(seeds, slopes)])
    mean, target = float(np.mean(slopes)), 1 - cfg.alpha
    res.summary.update(alpha=cfg.alpha, window=str(cfg.window), mean_slope=mean,
                       stderr=float(np.std(slopes) / math.sqrt(len(slopes))), target=target)
    res.check("mean level-set slope", abs(mean - target) <= cfg.tol("slope"),
              f"{mean:.4f} vs {target:.4f} +/- {cfg.tol('slope')}")
    return res


def run_record_set(cfg: ExperimentConfig) -> ExperimentResult:
    seeds = ensemble_seeds(cfg.seed, cfg.ensemble)
    slopes = _map(_record_task, [(cfg.alpha, cfg.order, s, cfg.window) for s in seeds], cfg.workers)
    res = ExperimentResult("record_set", ["seed", "slope"],
                           [{"seed": s, "slope": v} for s, v in zip(seeds, slopes)])
    mean, target = float(np.mean(slopes)), cfg.alpha
    res.summary.update(alpha=cfg.alpha, window=str(cfg.window), mean_slope=mean,
                       stderr=float(np.std(slopes) / math.sqrt(len(slopes))), target=target)
    res.check("mean record-set slope", abs(mean - target) <= cfg.tol("slope"),
              f"{mean:.4f} vs {target:.4f} +/- {cfg.tol('slope')}")
    return res


# ---------------------------------------------------------------- images

def image_slope(path, covers: dict[int, IntervalFamily], window: tuple[int, int]) -> float:
    """Box slope of the path image of a set given by its covers, in value units."""
    ns = np.arange(window[0], window[1] + 1)
    counts = [image_count(path, covers[int(n)], int(n)) for n in ns]
    return _slope(ns, counts) / path.hurst


def set_slope(covers: dict[int, IntervalFamily], window: tuple[int, int]) -> float:
    ns = np.arange(window[0], window[1] + 1)
    return _slope(ns, [len(covers[int(n)]) for n in ns])


def _kahane_task(args):
    alpha, order, seed, window, spec = args
    p = sample_path(alpha, order, seed)
    covers = {n: cover(spec, n) for n in range(window[0], window[1] + 1)}
    return image_slope(p, covers, window), set_slope(covers, window)


def run_kahane_image(cfg: ExperimentConfig) -> ExperimentResult:
    spec = _digit_spec(cfg)
    dim_h = float(exact_dim_values(spec)[0])
    target = min(1.0, dim_h / cfg.alpha)
    seeds = ensemble_seeds(cfg.seed, cfg.ensemble)
    out = _map(_kahane_task, [(cfg.alpha, cfg.order, s, cfg.window, spec) for s in seeds], cfg.workers)
    res = ExperimentResult("kahane_image", ["seed", "image_slope", "set_slope"],
                           [{"seed": s, "image_slope": a, "set_slope": b} for s, (a, b) in zip(seeds, out)])
    mean = float(np.mean([a for a, _ in out]))
    res.summary.update(alpha=cfg.alpha, dim_h=dim_h, window=str(cfg.window), mean_image_slope=mean,
                       target=target)
    res.check("mean image slope", abs(mean - target) <= cfg.tol("slope"),
              f"{mean:.4f} vs {target:.4f} +/- {cfg.tol('slope')}")
    return res


def doubling_subsets(spec: DigitSetSpec, seed: int, n_families: int, family_order: int,
                     n_blocks: int, block_orders: tuple[int, ...]) -> list[tuple[str, IntervalFamily]]:
    """Random sub-families and dyadic sub-blocks of the cover of ``D_S``, as base families.

    A base family ``F`` stands for the subset ``D_S`` intersected with the union of ``F``.
    """
    gen = stream(seed, 0x5EB5E7)
    base = cover(spec, family_order).at_order(family_order)
    subsets = []
    for i in range(n_families):
        keep = np.zeros(0, dtype=bool)
        while not keep.any():
            keep = gen.random(base.size) < 0.5
        subsets.append((f"family{i}", IntervalFamily.at_single_order(family_order, base[keep])))
    blocks = [(k, int(p)) for k in block_orders for p in cover(spec, k).at_order(k)]
    pick = gen.permutation(len(blocks))[:n_blocks]
    for j in sorted(pick):
        k, p = blocks[j]
        subsets.append((f"block{k}_{p}", IntervalFamily.at_single_order(k, [p])))
    return subsets


def subset_covers(spec: DigitSetSpec, base: IntervalFamily, window: tuple[int, int]) -> dict[int, IntervalFamily]:
    k = base.max_order
    roots = base.at_order(k)
    covers = {}
    for n in range(window[0], window[1] + 1):
        if n < k:
            raise InvalidArguments("subset base order must not exceed the window start")
        idx = cover(spec, n).at_order(n)
        covers[n] = IntervalFamily.at_single_order(n, idx[np.isin(idx >> (n - k), roots)])
    return covers


def _doubling_task(args):
    alpha, order, seed, window, spec, subsets = args
    p = sample_path(alpha, order, seed)
    out = []
    for name, base in subsets:
        covers = subset_covers(spec, base, window)
        out.append((name, set_slope(covers, window), image_slope(p, covers, window)))
    return out


def run_doubling(cfg: ExperimentConfig) -> ExperimentResult:
    spec = _digit_spec(cfg)
    dim_ma = float(exact_dim_values(spec)[2])
    if dim_ma > cfg.alpha:
        raise ValidationError(f"doubling needs modified Assouad dimension {dim_ma} <= alpha")
    pr = cfg.params
    subsets = doubling_subsets(spec, cfg.seed, int(pr["families"]), int(pr["family_order"]),
                               int(pr["blocks"]), tuple(pr["block_orders"]))
    seeds = ensemble_seeds(cfg.seed, cfg.ensemble)
    out = _map(_doubling_task, [(cfg.alpha, cfg.order, s, cfg.window, spec, subsets) for s in seeds],
               cfg.workers)
    tol = cfg.tol("slope")
    res = ExperimentResult("doubling", ["seed", "subset", "set_slope", "predicted", "image_slope", "pass"])
    for s, rows in zip(seeds, out):
        for name, a, b in rows:
            pred = min(1.0, a / cfg.alpha)
            res.rows.append({"seed": s, "subset": name, "set_slope": a, "predicted": pred,
                             "image_slope": b, "pass": abs(b - pred) <= tol})
    frac = float(np.mean([r["pass"] for r in res.rows]))
    need = cfg.tol("pass_fraction")
    res.summary.update(alpha=cfg.alpha, dim_ma=dim_ma, window=str(cfg.window), pairs=len(res.rows),
                       pass_fraction=frac,
                       mean_gap=float(np.mean([r["image_slope"] - r["predicted"] for r in res.rows])))
    res.check("image slope tracks set slope / alpha", frac >= need,
              f"{frac:.3f} of pairs within +/- {tol} (need {need})")
    return res


# ---------------------------------------------------------------- witness

def _witness_task(args):
    alpha, order, seed, spec, eps, depth = args
    p = sample_path(alpha, order, seed)
    return witness_search(p, spec, alpha, eps, depth)


def run_witness(cfg: ExperimentConfig) -> ExperimentResult:
    spec = _digit_spec(cfg)
    depth = int(cfg.params.get("depth", cfg.order))
    seeds = ensemble_seeds(cfg.seed, cfg.ensemble)
    out = _map(_witness_task, [(cfg.alpha, cfg.order, s, spec, cfg.eps, depth) for s in seeds], cfg.workers)
    margin = cfg.tol("gap")
    res = ExperimentResult("witness", ["seed", "level", "m", "n", "parents", "population", "kept",
                                       "min_kept", "threshold", "pass", "witness_slope",
                                       "image_slope", "gap"])
    gaps, multi, collide = [], 0, 0
    for s, w in zip(seeds, out):
        for lv in w.levels:
            res.rows.append({"seed": s, "level": lv.level, "m": lv.m, "n": lv.n, "parents": lv.parents,
                             "population": lv.population, "kept": lv.kept, "min_kept": lv.min_kept,
                             "threshold": lv.threshold, "pass": lv.passed,
                             "witness_slope": w.witness_slope, "image_slope": w.image_slope,
                             "gap": w.gap})
        ok = w.found and len(w.levels) >= 2
        multi += ok
        collide += ok and all(lv.passed for lv in w.levels)
        gaps.append(ok and w.gap > margin)
    frac = float(np.mean(gaps))
    res.summary.update(alpha=cfg.alpha, eps=cfg.eps, depth=depth, multi_level=multi,
                       collision_bound_met=collide, gap_fraction=frac,
                       median_gap=float(np.median([w.gap for w in out if w.found] or [math.nan])))
    if not any(w.found for w in out):
        res.summary["reason"] = out[0].reason
    res.check("image slope below witness slope / alpha - margin", frac > 0.5,
              f"{frac:.3f} of seeds with gap > {margin} (need a majority)")
    res.check("collision bound at every level", collide > len(seeds) / 2,
              f"{collide}/{len(seeds)} seeds")
    return res


# ---------------------------------------------------------------- mixed level sets

def _mixed_task(args):
    alpha, order, seed, window, spec = args
    p = sample_path(alpha, order, seed)
    top = cover(spec, order).at_order(order)
    t0 = int(top[stream(seed, 1).integers(top.size)])
    y = float(p.values[t0])
    ns = np.arange(window[0], window[1] + 1)
    counts = []
    for n in ns:
        fam = cover(spec, int(n))
        lo, hi = p.ranges(int(n))
        idx = fam.at_order(int(n))
        counts.append(int(np.count_nonzero((lo[idx] <= y) & (y <= hi[idx]))))
    return y, _slope(ns, counts)


def run_mixed_level_sets(cfg: ExperimentConfig) -> ExperimentResult:
    spec = _digit_spec(cfg)
    dim_h = float(exact_dim_values(spec)[0])
    if dim_h > cfg.alpha:
        raise ValidationError(f"mixed level sets need Hausdorff dimension {dim_h} <= alpha")
    seeds = ensemble_seeds(cfg.seed, cfg.ensemble)
    out = _map(_mixed_task, [(cfg.alpha, cfg.order, s, cfg.window, spec) for s in seeds], cfg.workers)
    tol = cfg.tol("slope")
    res = ExperimentResult("mixed_level_sets", ["seed", "level", "slope", "pass"],
                           [{"seed": s, "level": y, "slope": v, "pass": v <= tol}
                            for s, (y, v) in zip(seeds, out)])
    frac = float(np.mean([r["pass"] for r in res.rows]))
    need = cfg.tol("pass_fraction")
    res.summary.update(alpha=cfg.alpha, dim_h=dim_h, window=str(cfg.window), pass_fraction=frac,
                       mean_slope=float(np.mean([v for _, v in out])))
    res.check("level sets of the restriction are small", frac >= need,
              f"{frac:.3f} of runs with slope <= {tol} (need {need})")
    return res


# ---------------------------------------------------------------- percolation

def _perc_task(args):
    gamma, depth, seed, window, eps, qa_eps = args
    s = surviving_sample(gamma, depth, seed)
    slope = box_slope(s, *window)
    ev = window_event(s, eps, window[0], window[1])
    h = CoverHierarchy.from_finest(s.family(depth))
    qa = window_assouad(h, qa_eps, min_len=8)
    return s.attempt, slope, ev.passed, qa


def run_percolation_dim(cfg: ExperimentConfig) -> ExperimentResult:
    gamma = float(cfg.set.get("gamma", 0.5))
    depth = int(cfg.set.get("depth", cfg.order))
    seeds = ensemble_seeds(cfg.seed, cfg.ensemble)
    qa_eps = float(cfg.params.get("qa_eps", 0.25))
    out = _map(_perc_task, [(gamma, depth, s, cfg.window, cfg.eps, qa_eps) for s in seeds], cfg.workers)
    res = ExperimentResult("percolation_dim", ["seed", "redraws", "slope", "window_pass", "quasi_assouad"],
                           [{"seed": s, "redraws": a, "slope": b, "window_pass": c, "quasi_assouad": d}
                            for s, (a, b, c, d) in zip(seeds, out)])
    slopes = np.array([b for _, b, _, _ in out])
    mean = float(slopes.mean())
    frac = float(np.mean([c for _, _, c, _ in out]))
    pr = cfg.params
    tail = tail_check(gamma, int(pr.get("tail_n", 12)), list(pr.get("tail_k", [1, 2, 3, 4])),
                      int(pr.get("tail_trials", 10000)), cfg.seed)
    qa_above = float(np.mean([d > b for _, b, _, d in out]))
    res.summary.update(gamma=gamma, depth=depth, window=str(cfg.window), mean_slope=mean,
                       redraws=int(sum(a for a, _, _, _ in out)), window_pass_fraction=frac,
                       tail_freqs=" ".join(f"{r.freq:.4g}" for r in tail.rows),
                       tail_decay_rate=tail.decay_rate, quasi_assouad_above_box=qa_above)
    res.check("survival-conditioned box slope", abs(mean - (1 - gamma)) <= cfg.tol("slope"),
              f"{mean:.4f} vs {1 - gamma:.4f} +/- {cfg.tol('slope')}")
    res.check("window event", frac >= cfg.tol("pass_fraction"),
              f"{frac:.3f} of runs pass for all n in {cfg.window}")
    res.check("tail frequencies strictly decreasing", tail.strictly_decreasing,
              " > ".join(f"{r.freq:.4g}" for r in tail.rows))
    return res


# ---------------------------------------------------------------- heart events

def heart_family(spec: DigitSetSpec, beta: float, eps: float, orders: tuple[int, int]) -> IntervalFamily:
    """Union of the covers at the given orders, rebalanced if it is not ``(beta, eps)``-balanced."""
    U = IntervalFamily([])
    for k in range(orders[0], orders[1] + 1):
        U = U.union(cover(spec, k))
    return U if is_balanced(U, beta, eps) else balance(U, beta)


def _heart_task(args):
    alpha, order, seed, U, thr_eps, window = args
    p = sample_path(alpha, order, seed)
    ev = gamma_event(p, U, thr_eps, *window)
    return ev.passed, ev.worst_ratio


def run_heart_events(cfg: ExperimentConfig) -> ExperimentResult:
    spec = _digit_spec(cfg)
    U = heart_family(spec, cfg.alpha + cfg.eps, cfg.eps, cfg.window)
    mult = float(cfg.params.get("threshold_multiplier", 3))
    seeds = ensemble_seeds(cfg.seed, cfg.ensemble)
    out = _map(_heart_task, [(cfg.alpha, cfg.order, s, U, mult * cfg.eps, cfg.window) for s in seeds],
               cfg.workers)
    res = ExperimentResult("heart_events", ["seed", "pass", "worst_ratio"],
                           [{"seed": s, "pass": a, "worst_ratio": b} for s, (a, b) in zip(seeds, out)])
    frac = float(np.mean([a for a, _ in out]))
    res.summary.update(alpha=cfg.alpha, eps=cfg.eps, family_size=len(U), window=str(cfg.window),
                       pass_fraction=frac, max_worst_ratio=float(max(b for _, b in out)))
    res.check("collision event", frac >= cfg.tol("pass_fraction"),
              f"{frac:.3f} of runs (need {cfg.tol('pass_fraction')})")
    return res


EXPERIMENTS: dict[str, Callable[[ExperimentConfig], ExperimentResult]] = {
    "zero_set": run_zero_set,
    "record_set": run_record_set,
    "kahane_image": run_kahane_image,
    "doubling": run_doubling,
    "witness": run_witness,
    "mixed_level_sets": run_mixed_level_sets,
    "percolation_dim": run_percolation_dim,
    "heart_events": run_heart_events,
}

_PERIODIC_10 = periodic("10").to_config()

DEFAULTS: dict[str, dict] = {
    "zero_set": dict(order=16, ensemble=50, window=(2, 10), tolerance={"slope": 0.08}),
    "record_set": dict(order=16, ensemble=50, window=(7, 13), tolerance={"slope": 0.1}),
    "kahane_image": dict(alpha=0.75, order=20, ensemble=20, window=(8, 18), set=_PERIODIC_10,
                         tolerance={"slope": 0.1}),
    "doubling": dict(alpha=0.6, order=20, ensemble=10, window=(10, 20), set=_PERIODIC_10,
                     tolerance={"slope": 0.1, "pass_fraction": 0.9},
                     params={"families": 20, "family_order": 8, "blocks": 10, "block_orders": [4, 6]}),
    "witness": dict(alpha=0.5, eps=0.2, order=18, ensemble=50, set=superexp_blocks().to_config(),
                    tolerance={"gap": 0.2}),
    "mixed_level_sets": dict(alpha=0.6, order=20, ensemble=50, window=(8, 20), set=_PERIODIC_10,
                             tolerance={"slope": 0.1, "pass_fraction": 0.9}),
    "percolation_dim": dict(order=18, ensemble=200, window=(10, 18), eps=0.2,
                            set={"gamma": 0.5, "depth": 18},
                            tolerance={"slope": 0.08, "pass_fraction": 0.95}),
    "heart_events": dict(alpha=0.5, eps=0.2, order=14, ensemble=100, window=(10, 14), set=_PERIODIC_10,
                         tolerance={"pass_fraction": 0.95}),
}


def run(cfg: ExperimentConfig) -> ExperimentResult:
    return EXPERIMENTS[cfg.experiment](cfg)


def make_config(experiment: str, seed: int, **kw) -> ExperimentConfig:
    return ExperimentConfig.from_dict({"experiment": experiment, "seed": seed, **kw})


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
