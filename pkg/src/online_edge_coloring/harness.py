"""Experiment harness: q policies, batched seeded trials, invariant checks.

An experiment is described by an ExperimentConfig (instance source,
algorithm, q policy, trial count, base seed, trace list).  run_trials
executes the trials with per-trial seeds base+i, so results are
independent of worker scheduling, and folds the outcomes into an
AggregateMetrics.  Traced indicators are recomputed from each trial's
edge colors after the fact: Z(t, c, v) is 1 when color c is unused at
offline node v just before arrival t.

Output is one JSON document (config echo, aggregate block, optional
per-trial records, volatile fields under "timing") plus a flat CSV of
per-trial results.
"""

from __future__ import annotations

import io
import json
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .generators import GadgetParams, gen_gadget_instance, gen_random_regular
from .instances import OnlineInstance, load_instance, validate

__all__ = [
    "default_q", "appendix_q", "TraceSpec", "ExperimentConfig",
    "AggregateMetrics", "resolve_instance", "resolve_q", "run_trials",
    "check_marginals", "check_negative_dependence", "metrics_to_doc",
    "doc_to_json", "metrics_to_csv", "write_outputs",
]

LOG_BASE = "natural"


def default_q(delta: int, n: int) -> int:
    """Recommended color surplus: ceil(3 * delta^(2/3) * (ln n)^(1/3)).

    Warns when the result exceeds delta (delta below 81 ln n), where the
    gate guarantee loses its footing; the value is still returned.
    """
    if delta < 1:
        raise ValueError("delta must be >= 1")
    if n < 2:
        raise ValueError("n must be >= 2")
    q = math.ceil(3.0 * delta ** (2.0 / 3.0) * math.log(n) ** (1.0 / 3.0))
    if q > delta:
        warnings.warn(
            f"recommended q={q} exceeds delta={delta} (delta < 81 ln n); "
            f"the overload guarantee does not apply at this size",
            stacklevel=2)
    return q


def appendix_q(delta: int, n: int, r: int) -> int:
    """Adversarial-regime surplus: floor of the same shape scaled by
    1/(6 r^(1/3)), clamped to >= 0.  Small on purpose; failure mode is
    expected to fire with noticeable frequency at this setting."""
    if r < 3:
        raise ValueError("r must be >= 3")
    q = math.floor(delta ** (2.0 / 3.0) * math.log(n) ** (1.0 / 3.0)
                   / (6.0 * r ** (1.0 / 3.0)))
    return max(q, 0)


@dataclass(frozen=True)
class TraceSpec:
    """Which palette indicator to record: Z(t, c, v) for each v in vs.

    t is an arrival index; the indicator is read in the state just
    before arrival t is processed.  Multi-node specs also record the
    joint event (all listed nodes still have color c unused).
    """

    t: int
    c: int
    vs: tuple[int, ...]

    @classmethod
    def parse(cls, text: str) -> "TraceSpec":
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"trace spec {text!r} is not t:c:v[+v2...]")
        t, c = int(parts[0]), int(parts[1])
        vs = tuple(int(v) for v in parts[2].split("+"))
        if not vs:
            raise ValueError(f"trace spec {text!r} lists no nodes")
        return cls(t=t, c=c, vs=vs)

    def format(self) -> str:
        return f"{self.t}:{self.c}:" + "+".join(str(v) for v in self.vs)


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce an experiment.

    instance: "file:<path>", "regular:side=<s>,delta=<d>,seed=<s>", or
        "gadget:r=<r>,k=<k>" (a bare string with no prefix is a path).
    algo: "paper" (the sampled-matching rule) or "greedy".
    q: "auto", "appendix:<r>", or a nonnegative integer literal.
    trace: TraceSpec strings, e.g. "12:5:3" or "12:5:3+7".
    """

    instance: str
    algo: str = "paper"
    q: str = "auto"
    trials: int = 1
    seed: int = 0
    trace: tuple[str, ...] = ()
    keep_trials: bool = False
    workers: int = 1


def _parse_kv(spec: str, what: str) -> dict:
    out = {}
    for part in spec.split(","):
        if "=" not in part:
            raise ValueError(f"bad {what} spec field {part!r}; want k=v")
        key, val = part.split("=", 1)
        out[key.strip()] = int(val)
    return out


def resolve_instance(source: str) -> OnlineInstance:
    """Materialize an instance from a config source string."""
    if source.startswith("file:"):
        return load_instance(source[5:])
    if source.startswith("regular:"):
        kv = _parse_kv(source[8:], "regular")
        extra = set(kv) - {"side", "delta", "seed"}
        if extra:
            raise ValueError(f"unknown regular fields {sorted(extra)}")
        return gen_random_regular(kv["side"], kv["side"], kv["delta"],
                                  kv.get("seed", 0))
    if source.startswith("gadget:"):
        kv = _parse_kv(source[7:], "gadget")
        extra = set(kv) - {"r", "k"}
        if extra:
            raise ValueError(f"unknown gadget fields {sorted(extra)}")
        return gen_gadget_instance(GadgetParams(r=kv["r"], k=kv["k"]))
    return load_instance(source)


def resolve_q(q_policy: str, delta: int, n: int) -> int:
    """Turn a q policy string into a concrete nonnegative integer."""
    if q_policy == "auto":
        return default_q(delta, n)
    if q_policy.startswith("appendix:"):
        return appendix_q(delta, n, int(q_policy[9:]))
    q = int(q_policy)
    if q < 0:
        raise ValueError("q must be >= 0")
    return q


@dataclass
class TraceResult:
    """Empirical frequencies for one traced spec across all trials."""

    spec: str
    t: int
    c: int
    vs: list[int]
    degrees: list[int]          # d_t(v) per node, from the instance
    samples: int
    marginal_hits: list[int]    # per node: trials with Z == 1
    joint_hits: int             # trials where all nodes had Z == 1


@dataclass
class AggregateMetrics:
    """Fold of all per-trial outcomes of one experiment."""

    trials: int
    algo: str
    q: int
    delta: int
    n: int
    palette_size: int
    failure_trials: int = 0
    failure_rate: float = 0.0
    failure_entries_total: int = 0
    failure_arrivals_total: int = 0
    invalid_trials: int = 0
    invalid_rate: float = 0.0
    improper_trials: int = 0
    drift_fallbacks_total: int = 0
    unassigned_total: int = 0
    colors_used_hist: dict = field(default_factory=dict)
    traces: list = field(default_factory=list)      # TraceResult
    per_trial: list = field(default_factory=list)   # summary dicts


class _TraceEval:
    """Precomputed edge positions for fast per-trial Z evaluation."""

    def __init__(self, specs: "list[TraceSpec]", instance: OnlineInstance,
                 aptr: np.ndarray, anbr: np.ndarray):
        t_ids = np.repeat(np.arange(instance.num_arrivals, dtype=np.int64),
                          np.diff(aptr))
        self.specs = specs
        self.rows = []
        for s in specs:
            if not 0 <= s.t <= instance.num_arrivals:
                raise ValueError(f"trace {s.format()}: arrival {s.t} "
                                 f"out of range")
            per_v = []
            degs = []
            for v in s.vs:
                if not 0 <= v < instance.num_offline:
                    raise ValueError(f"trace {s.format()}: offline node "
                                     f"{v} out of range")
                idx = np.nonzero((anbr == v) & (t_ids < s.t))[0]
                per_v.append(idx)
                degs.append(int(idx.size))
            self.rows.append((s, per_v, degs))

    def empty_results(self) -> "list[TraceResult]":
        return [TraceResult(spec=s.format(), t=s.t, c=s.c, vs=list(s.vs),
                            degrees=degs, samples=0,
                            marginal_hits=[0] * len(s.vs), joint_hits=0)
                for s, _per_v, degs in self.rows]

    def add_trial(self, results: "list[TraceResult]",
                  edge_colors: np.ndarray) -> None:
        for res, (s, per_v, _degs) in zip(results, self.rows):
            res.samples += 1
            all_unused = True
            for i, idx in enumerate(per_v):
                unused = not np.any(edge_colors[idx] == s.c)
                if unused:
                    res.marginal_hits[i] += 1
                else:
                    all_unused = False
            if all_unused:
                res.joint_hits += 1


def run_trials(config: ExperimentConfig,
               instance: OnlineInstance | None = None) -> AggregateMetrics:
    """Run the experiment and fold outcomes in trial order.

    Deterministic for a given config: trial i always uses seed
    config.seed + i, and aggregation order is by trial index no matter
    how many workers execute the trials.
    """
    if config.trials < 1:
        raise ValueError("trials must be >= 1")
    if config.algo not in ("paper", "greedy"):
        raise ValueError(f"unknown algorithm {config.algo!r}")
    if instance is None:
        instance = resolve_instance(config.instance)
    rep = validate(instance)
    if not rep.ok:
        raise ValueError("invalid instance: " + "; ".join(rep.violations))

    aptr, anbr = instance.to_arrays()
    delta = instance.declared_delta
    n = instance.declared_n
    q = resolve_q(config.q, delta, n) if config.algo == "paper" else 0
    palette = delta + q if config.algo == "paper" else 2 * delta - 1

    specs = [TraceSpec.parse(s) for s in config.trace]
    tracer = _TraceEval(specs, instance, aptr, anbr) if specs else None

    def one_trial(i: int):
        seed_i = config.seed + i
        if config.algo == "paper":
            rec = engine._paper_trial_arrays(instance.num_offline, delta, q,
                                             aptr, anbr, seed_i)
        else:
            rec = engine._greedy_trial_arrays(instance.num_offline, delta,
                                              aptr, anbr)
            rec.seed = seed_i
        return rec

    metrics = AggregateMetrics(trials=config.trials, algo=config.algo,
                               q=q, delta=delta, n=n, palette_size=palette)
    traces = tracer.empty_results() if tracer else []

    def fold(i: int, rec: engine.RunRecord) -> None:
        if rec.failure_arrivals > 0:
            metrics.failure_trials += 1
        metrics.failure_entries_total += len(rec.failure_mode_entries)
        metrics.failure_arrivals_total += rec.failure_arrivals
        if not rec.valid:
            metrics.invalid_trials += 1
        if not rec.proper:
            metrics.improper_trials += 1
        metrics.drift_fallbacks_total += rec.drift_fallbacks
        metrics.unassigned_total += rec.unassigned
        hist = metrics.colors_used_hist
        hist[rec.colors_used] = hist.get(rec.colors_used, 0) + 1
        if tracer:
            tracer.add_trial(traces, rec.edge_colors)
        metrics.per_trial.append({"trial": i, **rec.summary()})

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            for i, rec in enumerate(pool.map(one_trial,
                                             range(config.trials))):
                fold(i, rec)
    else:
        for i in range(config.trials):
            fold(i, one_trial(i))

    metrics.failure_rate = metrics.failure_trials / config.trials
    metrics.invalid_rate = metrics.invalid_trials / config.trials
    metrics.traces = traces
    return metrics


@dataclass
class CheckRow:
    """One line of an invariant report."""

    trace: str
    node: int | None
    target: float
    empirical: float
    slack: float
    ok: bool


@dataclass
class CheckReport:
    rows: list

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)


def check_marginals(metrics: AggregateMetrics, delta: int,
                    q: int) -> CheckReport:
    """Compare traced Z frequencies to (delta - d_t(v) + q)/(delta + q).

    A row passes when the empirical frequency sits within
    3 sigma + 0.005 of the target.  Raises if any trace has fewer than
    1000 samples (the slack calibration assumes at least that).
    """
    rows = []
    for tr in metrics.traces:
        if tr.samples < 1000:
            raise ValueError(f"trace {tr.spec}: {tr.samples} samples; "
                             f"need >= 1000")
        for i, v in enumerate(tr.vs):
            d = tr.degrees[i]
            target = (delta - d + q) / (delta + q)
            emp = tr.marginal_hits[i] / tr.samples
            sigma = math.sqrt(max(target * (1.0 - target), 0.0)
                              / tr.samples)
            slack = 3.0 * sigma + 0.005
            rows.append(CheckRow(trace=tr.spec, node=v, target=target,
                                 empirical=emp, slack=slack,
                                 ok=abs(emp - target) <= slack))
    return CheckReport(rows=rows)


def check_negative_dependence(metrics: AggregateMetrics) -> CheckReport:
    """Joint unused-frequency must not exceed the product of marginals.

    For each multi-node trace, checks
    Pr[all unused] <= prod Pr[unused] + 3 sigma, with sigma computed
    from the product estimate.  Single-node traces hold trivially and
    are skipped.
    """
    rows = []
    for tr in metrics.traces:
        if len(tr.vs) < 2:
            continue
        if tr.samples < 1000:
            raise ValueError(f"trace {tr.spec}: {tr.samples} samples; "
                             f"need >= 1000")
        joint = tr.joint_hits / tr.samples
        prod = 1.0
        for h in tr.marginal_hits:
            prod *= h / tr.samples
        sigma = math.sqrt(max(prod * (1.0 - prod), 0.0) / tr.samples)
        slack = 3.0 * sigma
        rows.append(CheckRow(trace=tr.spec, node=None, target=prod,
                             empirical=joint, slack=slack,
                             ok=joint <= prod + slack))
    return CheckReport(rows=rows)


def metrics_to_doc(config: ExperimentConfig,
                   metrics: AggregateMetrics) -> dict:
    """Assemble the JSON document (without volatile timing fields)."""
    doc = {
        "config": {
            "instance": config.instance,
            "algo": config.algo,
            "q_policy": config.q,
            "q": metrics.q,
            "delta": metrics.delta,
            "n": metrics.n,
            "palette_size": metrics.palette_size,
            "trials": config.trials,
            "seed": config.seed,
            "trace": list(config.trace),
            "log_base": LOG_BASE,
        },
        "aggregate": {
            "trials": metrics.trials,
            "failure_trials": metrics.failure_trials,
            "failure_rate": metrics.failure_rate,
            "failure_entries_total": metrics.failure_entries_total,
            "failure_arrivals_total": metrics.failure_arrivals_total,
            "invalid_trials": metrics.invalid_trials,
            "invalid_rate": metrics.invalid_rate,
            "improper_trials": metrics.improper_trials,
            "drift_fallbacks_total": metrics.drift_fallbacks_total,
            "unassigned_total": metrics.unassigned_total,
            "colors_used_hist": {str(k): v for k, v
                                 in sorted(metrics.colors_used_hist.items())},
            "traces": [{
                "trace": tr.spec,
                "t": tr.t,
                "c": tr.c,
                "vs": tr.vs,
                "degrees": tr.degrees,
                "samples": tr.samples,
                "marginal_hits": tr.marginal_hits,
                "joint_hits": tr.joint_hits,
            } for tr in metrics.traces],
        },
    }
    if config.keep_trials:
        doc["trials"] = metrics.per_trial
    return doc


def metrics_from_doc(doc: dict) -> AggregateMetrics:
    """Rebuild enough of AggregateMetrics from a JSON document to run
    the invariant checkers on it."""
    cfg = doc["config"]
    agg = doc["aggregate"]
    metrics = AggregateMetrics(
        trials=agg["trials"], algo=cfg["algo"], q=cfg["q"],
        delta=cfg["delta"], n=cfg["n"], palette_size=cfg["palette_size"],
        failure_trials=agg["failure_trials"],
        failure_rate=agg["failure_rate"],
        failure_entries_total=agg["failure_entries_total"],
        failure_arrivals_total=agg["failure_arrivals_total"],
        invalid_trials=agg["invalid_trials"],
        invalid_rate=agg["invalid_rate"],
        improper_trials=agg["improper_trials"],
        drift_fallbacks_total=agg["drift_fallbacks_total"],
        unassigned_total=agg["unassigned_total"],
        colors_used_hist={int(k): v for k, v
                          in agg["colors_used_hist"].items()},
    )
    metrics.traces = [TraceResult(
        spec=d["trace"], t=d["t"], c=d["c"], vs=list(d["vs"]),
        degrees=list(d["degrees"]), samples=d["samples"],
        marginal_hits=list(d["marginal_hits"]), joint_hits=d["joint_hits"],
    ) for d in agg["traces"]]
    metrics.per_trial = list(doc.get("trials", []))
    return metrics


def doc_to_json(doc: dict, wall_seconds: float | None = None) -> str:
    """Serialize with sorted keys; volatile fields go under "timing"."""
    full = dict(doc)
    full["timing"] = {
        "generated_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    if wall_seconds is not None:
        full["timing"]["wall_seconds"] = wall_seconds
    return json.dumps(full, indent=2, sort_keys=True) + "\n"


def metrics_to_csv(metrics: AggregateMetrics) -> str:
    """Flat per-trial CSV, one row per trial in trial order."""
    buf = io.StringIO()
    buf.write("trial,seed,failures,colors_used,valid\n")
    for row in metrics.per_trial:
        buf.write(f"{row['trial']},{row['seed']},{row['failure_entries']},"
                  f"{row['colors_used']},{int(row['valid'])}\n")
    return buf.getvalue()


def write_outputs(doc: dict, metrics: AggregateMetrics, out_path: str,
                  wall_seconds: float | None = None) -> tuple[str, str]:
    """Write <out>.json and <out>.csv; returns both paths."""
    if out_path.endswith(".json"):
        json_path = out_path
        csv_path = out_path[:-5] + ".csv"
    else:
        json_path = out_path + ".json"
        csv_path = out_path + ".csv"
    with open(json_path, "w", encoding="ascii") as fh:
        fh.write(doc_to_json(doc, wall_seconds))
    with open(csv_path, "w", encoding="ascii") as fh:
        fh.write(metrics_to_csv(metrics))
    return json_path, csv_path
