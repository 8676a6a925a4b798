"""Experiment orchestration: configs, seeded reproducible runs, suites.

Per-seed random streams are derived by mixing the base seed with the seed
index through the splitmix64 finalizer, so runs are reproducible and the
per-seed rows do not depend on execution order.  Output CSVs and record
files are byte-identical across re-runs with the same config; wall-clock
time lives only in the in-memory run record, never in the files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass, fields
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .brackets import bracket_thresholds, compose_brackets, verify_bracketing
from .covers import build_cover
from .domains import Dataset, Dist, Domain, is_sigma_smooth, make_smooth_dataset, save_dist
from .dp import (
    SmoothPolytope,
    _net_scores,
    exponential_mechanism_probabilities,
    kl_project_capped_simplex,
    mwem,
    projected_smooth_mwem,
    smooth_mwem,
    subsampled_net_mechanism,
    subsampled_net_selection_probabilities,
)
from .hypotheses import Hypothesis, ThresholdClass
from .online import (
    FixedSmoothAdversary,
    GreedyConcentrationStrategy,
    QuarterCommitAdversary,
    UncertaintyRegionAdversary,
    adversary_binary_search,
    max_deviation_monte_carlo,
    smooth_online_play,
)
from .oracles import kl_projection_oracle

CONFIG_HEADER = "#smoothlearn-config v1"
_MASK64 = (1 << 64) - 1
_DATA_STREAM_SALT = 0xD474_5EED


class ConfigError(ValueError):
    """Invalid experiment configuration; names the offending field."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"config field {field_name!r}: {message}")


def splitmix64(x: int) -> int:
    """Fixed 64-bit mixing function used to split random streams."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed: int, index: int) -> int:
    """Per-stream seed: splitmix64(base XOR index); parallel-safe by design."""
    return splitmix64((base_seed & _MASK64) ^ (index & _MASK64))


def rng_for(base_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(base_seed, index))


def _data_rng(base_seed: int) -> np.random.Generator:
    # Reserved stream for shared artifacts (datasets, covers) so per-seed
    # mechanism streams stay aligned regardless of how many seeds run.
    return rng_for(base_seed ^ _DATA_STREAM_SALT, 0)


KINDS = ("online", "dp-answer", "dp-release", "smalldb", "brackets", "lemma31")
ADVERSARIES = ("nonadaptive", "appendixB", "uncertainty_region", "worst_case_binary_search")


@dataclass
class ExperimentConfig:
    """Flat experiment description; round-trips losslessly through text."""

    kind: str
    n_atoms: int = 1024
    class_spec: str = "threshold1d"
    sigma: float = 0.1
    horizon: int = 100
    eps: float = 1.0
    delta: float = 1e-6
    n_records: int = 500
    queries: str = "thresholds:64"
    adversary: str = "uncertainty_region"
    seeds: int = 1
    base_seed: int = 0
    subsample_size: int = 8
    release_size: int = 6
    bracket_epsilon: float = 0.1
    trials: int = 200
    family_sizes: str = "4,16,64"
    out: str = ""
    transcript_out: str = ""

    _KEYS = {
        "kind": "kind",
        "n_atoms": "N",
        "class_spec": "class",
        "sigma": "sigma",
        "horizon": "T",
        "eps": "eps",
        "delta": "delta",
        "n_records": "n",
        "queries": "queries",
        "adversary": "adversary",
        "seeds": "seeds",
        "base_seed": "base_seed",
        "subsample_size": "M",
        "release_size": "k",
        "bracket_epsilon": "bracket_epsilon",
        "trials": "trials",
        "family_sizes": "family_sizes",
        "out": "out",
        "transcript_out": "transcript_out",
    }

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError("kind", f"must be one of {KINDS}")
        if self.n_atoms < 1:
            raise ConfigError("N", "must be >= 1")
        if self.seeds < 1:
            raise ConfigError("seeds", "must be >= 1")
        if self.kind in ("online", "dp-answer", "dp-release", "lemma31") and self.horizon < 1:
            raise ConfigError("T", "must be >= 1")
        if self.kind in ("online", "dp-answer", "dp-release") and not (0.0 < self.sigma <= 1.0):
            raise ConfigError("sigma", "must lie in (0, 1]")
        if self.kind in ("dp-answer", "dp-release", "smalldb") and self.eps <= 0.0:
            raise ConfigError("eps", "must be positive")
        if self.kind in ("dp-answer", "dp-release", "smalldb") and self.n_records < 1:
            raise ConfigError("n", "must be >= 1")
        if self.kind == "online":
            if self.adversary not in ADVERSARIES:
                raise ConfigError("adversary", f"must be one of {ADVERSARIES}")
            if self.class_spec != "threshold1d":
                raise ConfigError("class", "online runs support the threshold1d class")
        if self.kind == "smalldb" and (self.subsample_size < 1 or self.release_size < 1):
            raise ConfigError("M", "subsample size M and released size k must be >= 1")
        if self.kind == "brackets" and not (0.0 < self.bracket_epsilon <= 1.0):
            raise ConfigError("bracket_epsilon", "must lie in (0, 1]")
        if self.kind == "lemma31":
            if self.trials < 1:
                raise ConfigError("trials", "must be >= 1")
            try:
                sizes = self.family_size_list()
            except ValueError:
                raise ConfigError("family_sizes", "must be a comma list of integers")
            if any(s < 4 for s in sizes):
                raise ConfigError("family_sizes", "family sizes must be >= 4")

    def family_size_list(self) -> list[int]:
        return [int(s) for s in self.family_sizes.split(",") if s.strip()]

    def to_text(self) -> str:
        lines = [CONFIG_HEADER]
        for f in fields(self):
            if f.name.startswith("_"):
                continue
            v = getattr(self, f.name)
            key = self._KEYS[f.name]
            if isinstance(v, float):
                lines.append(f"{key}={format(v, '.17g')}")
            else:
                lines.append(f"{key}={v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != CONFIG_HEADER:
            raise ConfigError("header", f"expected header {CONFIG_HEADER!r}")
        by_key = {cls._KEYS[f.name]: f for f in fields(cls) if not f.name.startswith("_")}
        kwargs = {}
        for ln in lines[1:]:
            key, _, raw = ln.partition("=")
            key = key.strip()
            if key not in by_key:
                raise ConfigError(key, "unknown config key")
            f = by_key[key]
            if f.type in ("int", int):
                kwargs[f.name] = int(raw)
            elif f.type in ("float", float):
                kwargs[f.name] = float(raw)
            else:
                kwargs[f.name] = raw
        return cls(**kwargs)

    def config_hash(self) -> str:
        """Hash of every semantically meaningful field (output paths excluded)."""
        text = "\n".join(
            ln
            for ln in self.to_text().splitlines()
            if not ln.startswith(("out=", "transcript_out="))
        )
        return hashlib.sha256(text.encode("ascii")).hexdigest()[:16]


@dataclass
class RunRecord:
    config_hash: str
    header: list[str]
    rows: list[tuple]
    wallclock_s: float
    version: str = __version__


def _fmt_cell(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_csv(path: str, header: Sequence[str], rows: Iterable[tuple]) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt_cell(v) for v in row])


def _record_payload(record: RunRecord) -> dict:
    # Wall-clock is intentionally omitted so record files are byte-stable.
    return {
        "config_hash": record.config_hash,
        "version": record.version,
        "header": record.header,
        "rows": [[_fmt_cell(v) for v in row] for row in record.rows],
    }


# ---------------------------------------------------------------------------
# Query-set parsing.
# ---------------------------------------------------------------------------

def make_queries(domain: Domain, spec: str) -> list[Hypothesis]:
    """Parse a query-set token such as ``thresholds:64``."""
    name, _, arg = spec.partition(":")
    if name != "thresholds":
        raise ConfigError("queries", f"unknown query family {name!r}")
    k = int(arg) if arg else domain.n_atoms
    cls = ThresholdClass(domain)
    everything = cls.enumerate_hypotheses()
    if k >= len(everything):
        return everything
    idx = np.unique(np.linspace(0, len(everything) - 1, k).round().astype(int))
    return [everything[i] for i in idx]


# ---------------------------------------------------------------------------
# Experiment kinds.
# ---------------------------------------------------------------------------

def _make_adversary(cfg: ExperimentConfig, domain: Domain):
    if cfg.adversary == "appendixB":
        return QuarterCommitAdversary(cfg.horizon)
    if cfg.adversary == "uncertainty_region":
        return UncertaintyRegionAdversary(cfg.sigma)
    if cfg.adversary == "worst_case_binary_search":
        return adversary_binary_search(cfg.horizon)
    if cfg.adversary == "nonadaptive":
        # fixed uniform instance distribution, labels from a hidden target
        # threshold drawn on the shared data stream
        target_cut = float(_data_rng(cfg.base_seed).uniform(0.0, 1.0))
        target = ThresholdClass(domain).make(target_cut)
        return FixedSmoothAdversary(domain.uniform(), target, sigma=cfg.sigma)
    raise ConfigError("adversary", f"unknown adversary {cfg.adversary!r}")


def _online_rows(cfg: ExperimentConfig, seed_index: int) -> list[tuple]:
    domain = Domain.unit_interval_grid(cfg.n_atoms)
    cls = ThresholdClass(domain)
    rng = rng_for(cfg.base_seed, seed_index)
    record = smooth_online_play(
        cls, cfg.sigma, cfg.horizon, _make_adversary(cfg, domain), rng, seed=seed_index
    )

    # Prefix best-in-hindsight sweep: mistakes of every cut, updated per round.
    coords = domain.coordinates()
    order = np.argsort(coords, kind="stable")
    pos = np.empty(domain.n_atoms, dtype=np.int64)
    pos[order] = np.arange(domain.n_atoms)
    cut_losses = np.zeros(domain.n_atoms + 1)
    rows = []
    cum = 0.0
    for t in range(cfg.horizon):
        p = int(pos[record.xs[t]])
        if record.ys[t] > 0:
            cut_losses[p + 1 :] += 1.0
        else:
            cut_losses[: p + 1] += 1.0
        cum += float(record.losses[t])
        best_t = float(cut_losses.min())
        rows.append((seed_index, t + 1, float(record.losses[t]), cum, best_t, cum - best_t))
    return rows


def _dp_shared(cfg: ExperimentConfig):
    domain = Domain.unit_interval_grid(cfg.n_atoms)
    data_rng = _data_rng(cfg.base_seed)
    dataset = make_smooth_dataset(domain, cfg.sigma, cfg.n_records, data_rng)
    cls = ThresholdClass(domain)
    cover = build_cover(cls, cfg.sigma / (4.0 * cfg.n_records), rng=data_rng)
    return domain, dataset, cls, cover


def _threshold_errors(dbar: Dist, dataset: Dataset) -> np.ndarray:
    """|q(dbar) - q(D_B)| for every grid threshold, via sorted suffix sums."""
    domain = dataset.domain
    order = np.argsort(domain.coordinates(), kind="stable")
    d_sorted = dbar.weights[order]
    b_sorted = dataset.empirical().weights[order]
    suffix_d = np.concatenate([np.cumsum(d_sorted[::-1])[::-1], [0.0]])
    suffix_b = np.concatenate([np.cumsum(b_sorted[::-1])[::-1], [0.0]])
    return np.abs(suffix_d - suffix_b)


def _smooth_mwem_bound(cfg: ExperimentConfig, vc_dim: int) -> float:
    return (
        1.0 / cfg.n_records
        + 2.0 * math.sqrt(math.log(1.0 / cfg.sigma) / cfg.horizon)
        + 10.0
        * cfg.horizon
        * vc_dim
        * math.log(2.0 * cfg.n_records / cfg.sigma)
        / (cfg.eps * cfg.n_records)
    )


def _dump_transcript(cfg: ExperimentConfig, seed_index: int, transcript) -> None:
    if cfg.transcript_out:
        transcript.to_jsonl(f"{cfg.transcript_out}.seed{seed_index}.jsonl")


def _dp_answer_rows(cfg: ExperimentConfig, seed_index: int, shared) -> list[tuple]:
    domain, dataset, cls, cover = shared
    rng = rng_for(cfg.base_seed, seed_index)
    answers, transcript = smooth_mwem(
        dataset, cls, cfg.sigma, cfg.horizon, cfg.eps, rng, cover=cover
    )
    _dump_transcript(cfg, seed_index, transcript)
    errors = _threshold_errors(transcript.final_average, dataset)
    bound = _smooth_mwem_bound(cfg, cls.vc_dim)
    return [(seed_index, float(errors.max()), float(errors.mean()), bound)]


def _dp_release_rows(cfg: ExperimentConfig, seed_index: int, shared) -> list[tuple]:
    domain, dataset, cls, cover = shared
    rng = rng_for(cfg.base_seed, seed_index)
    dbar, transcript = projected_smooth_mwem(
        dataset, cls, cfg.sigma, cfg.horizon, cfg.eps, rng, cover=cover
    )
    _dump_transcript(cfg, seed_index, transcript)
    errors = _threshold_errors(dbar, dataset)
    smooth_ok = is_sigma_smooth(dbar, cfg.sigma)
    psi0 = transcript.psi_initial if transcript.psi_initial is not None else float("nan")
    if cfg.out:
        save_dist(f"{cfg.out}.seed{seed_index}.dist", dbar)
    return [(seed_index, float(errors.max()), float(errors.mean()), int(smooth_ok), psi0)]


def _smalldb_rows(cfg: ExperimentConfig, seed_index: int, shared) -> list[tuple]:
    domain, dataset, _, _ = shared
    queries = make_queries(domain, cfg.queries)
    rng = rng_for(cfg.base_seed, seed_index)
    released = subsampled_net_mechanism(
        dataset, queries, cfg.eps, cfg.subsample_size, cfg.release_size, rng
    )
    counts = released.counts()[None, :]
    score = float(_net_scores(dataset, queries, counts, cfg.release_size)[0])
    return [(seed_index, score, cfg.subsample_size, cfg.release_size)]


def _brackets_rows(cfg: ExperimentConfig) -> list[tuple]:
    domain = Domain.unit_interval_grid(cfg.n_atoms)
    mu = domain.uniform()
    cls = ThresholdClass(domain)
    b = bracket_thresholds(cfg.bracket_epsilon, mu)
    report = verify_bracketing(b, cls.enumerate_hypotheses())
    size_bound = math.ceil(1.0 / cfg.bracket_epsilon) + 1
    return [
        (
            cfg.bracket_epsilon,
            len(b),
            report.worst_gap,
            size_bound,
            int(report.passed),
        )
    ]


def _lemma31_rows(cfg: ExperimentConfig, seed_index: int) -> list[tuple]:
    rows = []
    for f_size in cfg.family_size_list():
        eps = 1.0 / f_size
        sigma = 4.0 / f_size
        n = cfg.n_atoms
        if n % f_size:
            raise ConfigError("N", f"must be divisible by every family size (got {f_size})")
        domain = Domain.unit_interval_grid(n)
        slab = n // f_size
        functions = []
        for j in range(f_size):
            bits = np.zeros(n, dtype=np.uint8)
            bits[j * slab : (j + 1) * slab] = 1
            functions.append(Hypothesis(domain, "extensional", bits=bits))
        rng = rng_for(cfg.base_seed, seed_index)
        mean = max_deviation_monte_carlo(
            functions,
            GreedyConcentrationStrategy(),
            cfg.horizon,
            cfg.trials,
            eps,
            sigma,
            rng,
        )
        bound = 8.0 * cfg.horizon * (eps / sigma) * math.sqrt(math.log(f_size))
        rows.append((f_size, eps, sigma, mean, bound, int(mean <= bound)))
    return rows


_HEADERS = {
    "online": ["seed", "t", "loss", "cum_loss", "best_hindsight", "regret"],
    "dp-answer": ["seed", "max_err", "mean_err", "stated_bound"],
    "dp-release": ["seed", "max_err", "mean_err", "sigma_smooth", "psi_initial"],
    "smalldb": ["seed", "score", "M", "k"],
    "brackets": ["epsilon", "count", "worst_gap", "size_bound", "passed"],
    "lemma31": ["family_size", "eps", "sigma", "empirical_mean", "bound", "within_bound"],
}


def collect_rows(cfg: ExperimentConfig, seed_indices: Sequence[int]) -> list[tuple]:
    """Rows for the given seed indices; order-independent per-seed streams."""
    cfg.validate()
    if cfg.kind == "online":
        return [row for i in seed_indices for row in _online_rows(cfg, i)]
    if cfg.kind in ("dp-answer", "dp-release", "smalldb"):
        shared = _dp_shared(cfg)
        fn = {
            "dp-answer": _dp_answer_rows,
            "dp-release": _dp_release_rows,
            "smalldb": _smalldb_rows,
        }[cfg.kind]
        return [row for i in seed_indices for row in fn(cfg, i, shared)]
    if cfg.kind == "brackets":
        return _brackets_rows(cfg)
    if cfg.kind == "lemma31":
        return [row for i in seed_indices for row in _lemma31_rows(cfg, i)]
    raise ConfigError("kind", f"unknown kind {cfg.kind!r}")


def run_experiment(cfg: ExperimentConfig) -> RunRecord:
    """Validate, fan out seeds, collect rows, and write CSV + record files."""
    cfg.validate()
    start = time.perf_counter()
    rows = collect_rows(cfg, list(range(cfg.seeds)))
    record = RunRecord(
        config_hash=cfg.config_hash(),
        header=_HEADERS[cfg.kind],
        rows=rows,
        wallclock_s=time.perf_counter() - start,
    )
    if cfg.out:
        write_csv(cfg.out, record.header, record.rows)
        with open(f"{cfg.out}.record.json", "w", encoding="ascii") as fh:
            json.dump(_record_payload(record), fh, indent=0, sort_keys=True)
            fh.write("\n")
    return record


# ---------------------------------------------------------------------------
# Replication suites: pinned configs with pinned thresholds.
# ---------------------------------------------------------------------------

@dataclass
class SuiteReport:
    name: str
    passed: bool
    details: dict

    def to_json(self) -> str:
        return json.dumps(
            {"suite": self.name, "passed": self.passed, "details": self.details},
            sort_keys=True,
        )


SUITE_NAMES = (
    "appendixB",
    "regret-sublinear",
    "mwem-bound",
    "projection-oracle",
    "privacy-ratio",
    "bracket-verify",
)


def _suite_appendix_b() -> SuiteReport:
    trials, horizon, n = 2000, 50, 1024
    domain = Domain.unit_interval_grid(n)
    coords = domain.coordinates()
    half_query = (coords >= 0.5).astype(np.float64)
    means = np.zeros(trials)
    for trial in range(trials):
        rng = rng_for(1, trial)
        adv = QuarterCommitAdversary(horizon)
        adv.start(domain, rng)
        total = 0.0
        for _ in range(horizon):
            dist, _ = adv.emit()
            if not is_sigma_smooth(dist, 0.25):
                raise AssertionError("quarter-commit emission broke its smoothness promise")
            x = dist.sample_index(rng)
            total += half_query[x]
            adv.observe(None, x, 1)
        means[trial] = total / horizon
    bimodal = bool(np.all(np.minimum(means, 1.0 - means) <= 1e-9))
    avg = float(means.mean())
    passed = bimodal and 0.47 <= avg <= 0.53
    return SuiteReport(
        "appendixB", passed, {"trial_average": avg, "bimodal": bimodal, "trials": trials}
    )


def _suite_regret_sublinear() -> SuiteReport:
    n, sigma, seeds = 2048, 0.05, 20
    domain = Domain.unit_interval_grid(n)
    cls = ThresholdClass(domain)
    means = {}
    cover_sizes = []
    for horizon in (500, 2000):
        total = 0.0
        for i in range(seeds):
            rng = rng_for(2, 1000 * horizon + i)
            rec = smooth_online_play(cls, sigma, horizon, UncertaintyRegionAdversary(sigma), rng)
            total += rec.regret
            cover_sizes.append(rec.cover_size)
        means[horizon] = total / seeds
    bound = 3.0 * math.sqrt(2000 * math.log(max(cover_sizes)))
    rate_drops = means[2000] / 2000 < means[500] / 500
    passed = rate_drops and means[2000] <= bound
    return SuiteReport(
        "regret-sublinear",
        passed,
        {
            "mean_regret_500": means[500],
            "mean_regret_2000": means[2000],
            "bound": bound,
            "rate_drops": rate_drops,
        },
    )


def _suite_mwem_bound() -> SuiteReport:
    n_atoms, n, horizon, eps, seeds = 64, 500, 10, 1.0, 50
    domain = Domain.unit_interval_grid(n_atoms)
    queries = make_queries(domain, "thresholds:64")
    data_rng = _data_rng(3)
    dataset = Dataset(domain, data_rng.integers(0, n_atoms, size=n))
    bound = 2.0 * math.sqrt(math.log(n_atoms) / horizon) + (
        10.0 * horizon * math.log(64) / (eps * n)
    )
    hits = 0
    worst = 0.0
    for i in range(seeds):
        rng = rng_for(3, i)
        dbar, _ = mwem(dataset, queries, horizon, eps, rng)
        errs = [
            abs(
                float(np.dot(dbar.weights, q.query_bits()))
                - float(np.dot(dataset.empirical().weights, q.query_bits()))
            )
            for q in queries
        ]
        err = max(errs)
        worst = max(worst, err)
        hits += err <= bound
    passed = hits >= 0.9 * seeds
    return SuiteReport(
        "mwem-bound",
        passed,
        {"bound": bound, "hits": hits, "seeds": seeds, "worst_error": worst},
    )


def _suite_projection_oracle() -> SuiteReport:
    rng = np.random.default_rng(derive_seed(4, 0))
    worst_value_gap = 0.0
    worst_kkt_gap = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 9))
        sigma = float(rng.uniform(0.05, 1.0))
        domain = Domain.unit_interval_grid(n)
        p = Dist(domain, rng.dirichlet(np.ones(n)) + 1e-9)
        polytope = SmoothPolytope(sigma, n)
        z, c = kl_project_capped_simplex(p, polytope, return_scale=True)
        if not is_sigma_smooth(z, sigma):
            return SuiteReport("projection-oracle", False, {"reason": "cap violated"})
        kkt = np.minimum(c * p.weights, polytope.cap)
        worst_kkt_gap = max(worst_kkt_gap, float(np.abs(kkt / kkt.sum() - z.weights).max()))
        value = float(np.sum(z.weights * np.log(z.weights / p.weights)))
        oracle = kl_projection_oracle(p.weights, polytope.cap)
        worst_value_gap = max(worst_value_gap, abs(value - oracle))
    passed = worst_value_gap <= 1e-6 and worst_kkt_gap <= 1e-9
    return SuiteReport(
        "projection-oracle",
        passed,
        {"worst_value_gap": worst_value_gap, "worst_kkt_gap": worst_kkt_gap},
    )


def _suite_privacy_ratio() -> SuiteReport:
    n_atoms, support_size, k, n = 8, 4, 3, 5
    domain = Domain.unit_interval_grid(n_atoms)
    queries = make_queries(domain, "thresholds:8")
    base = Dataset(domain, [0, 1, 2, 3, 4])
    adjacent = Dataset(domain, [0, 1, 2, 3, 7])
    support = np.array([0, 2, 4, 6])[:support_size]
    worst = 0.0
    for eps in (0.5, 1.0, 2.0):
        _, p = subsampled_net_selection_probabilities(base, queries, eps, support, k)
        _, p_adj = subsampled_net_selection_probabilities(adjacent, queries, eps, support, k)
        ratio = float(np.max(p / p_adj))
        worst = max(worst, ratio / math.exp(eps))
        scores = np.arange(4.0)
        em = exponential_mechanism_probabilities(scores, eps, 1.0)
        em_shift = exponential_mechanism_probabilities(scores + 1.0, eps, 1.0)
        worst = max(worst, float(np.max(em / em_shift)) / math.exp(eps))
    passed = worst <= 1.0 + 1e-9
    return SuiteReport("privacy-ratio", passed, {"worst_ratio_over_exp_eps": worst})


def _suite_bracket_verify() -> SuiteReport:
    domain = Domain.unit_interval_grid(1000)
    mu = domain.uniform()
    cls = ThresholdClass(domain)
    all_thresholds = cls.enumerate_hypotheses()
    details = {}
    passed = True
    for eps in (0.25, 0.1, 0.02):
        b = bracket_thresholds(eps, mu)
        report = verify_bracketing(b, all_thresholds)
        ok = report.passed and len(b) <= math.ceil(1.0 / eps) + 1
        composed = compose_brackets(b, b, op="intersection")
        comp_gap_ok = all(br.gap_measure <= 2 * eps for br in composed.brackets)
        ok = ok and comp_gap_ok and len(composed) == len(b) ** 2
        details[str(eps)] = {
            "count": len(b),
            "worst_gap": report.worst_gap,
            "contained": report.passed,
            "composed_ok": comp_gap_ok,
        }
        passed = passed and ok
    return SuiteReport("bracket-verify", passed, details)


def replicate_suite(name: str) -> SuiteReport:
    """Run one pinned replication suite and return its verdict."""
    suites = {
        "appendixB": _suite_appendix_b,
        "regret-sublinear": _suite_regret_sublinear,
        "mwem-bound": _suite_mwem_bound,
        "projection-oracle": _suite_projection_oracle,
        "privacy-ratio": _suite_privacy_ratio,
        "bracket-verify": _suite_bracket_verify,
    }
    if name not in suites:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITE_NAMES}")
    return suites[name]()
