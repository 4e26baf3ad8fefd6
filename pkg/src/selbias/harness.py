"""Experiment driver comparing unweighted, ideal, clustered and KMM reweighting.

One run draws a bias projection, then for every cross-validation fold it
draws a biased training sample from the fold's training part of the pool,
weights it with each method, fits weighted kernel ridge regression and
scores NMSE on the held-out fold.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import bias, bounds, clustering, kmm, learner
from .kernels import KernelSpec, cross_gram, gram

log = logging.getLogger(__name__)

METHODS = ("unweighted", "ideal", "clustered", "kmm")
#: Biased draws smaller than this are redrawn with the next seed.
MIN_SAMPLE = 10
MAX_REDRAWS = 1000


class DatasetError(ValueError):
    pass


# ---------------------------------------------------------------------------
# data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Pool:
    X: np.ndarray
    y: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    header: tuple[str, ...] | None = None

    def __len__(self):
        return self.y.size

    @property
    def dim(self) -> int:
        return self.X.shape[1]


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _read_rows(path) -> tuple[list[str] | None, np.ndarray]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if any(c.strip() for c in r)]
    if not rows:
        raise DatasetError(f"{path}: empty file")
    header = None
    if not all(_is_number(c) for c in rows[0][1]):
        header = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    arity = len(header) if header is not None else len(rows[0][1])
    data = np.empty((len(rows), arity))
    for k, (lineno, row) in enumerate(rows):
        if len(row) != arity:
            raise DatasetError(f"{path}:{lineno}: expected {arity} columns, got {len(row)}")
        for j, cell in enumerate(row):
            try:
                data[k, j] = float(cell)
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: non-numeric cell {cell!r} in column {j + 1}") from None
        if not np.all(np.isfinite(data[k])):
            raise DatasetError(f"{path}:{lineno}: non-finite value")
    return header, data


def standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return (X - mean) / std, mean, std


def load_dataset(path) -> Pool:
    """Read a numeric CSV (optional header, label in the last column).

    Features are z-scored with pool statistics; constant columns become 0.
    """
    header, data = _read_rows(path)
    if data.shape[1] < 2:
        raise DatasetError(f"{path}: need at least one feature column and a label column")
    Xs, mean, std = standardize(data[:, :-1])
    return Pool(Xs, data[:, -1].copy(), mean, std, tuple(header) if header else None)


def load_features(path) -> np.ndarray:
    """Read a numeric CSV whose every column is a feature (no standardization)."""
    return _read_rows(path)[1]


def write_dataset(path, X, y, header=None):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if header is not None:
            w.writerow(header)
        for row, label in zip(np.asarray(X), np.asarray(y)):
            w.writerow([repr(float(v)) for v in row] + [repr(float(label))])


def make_surrogate(rows: int = 506, features: int = 13, seed: int = 0, noise: float = 0.3):
    """Synthetic regression pool shaped like the housing data (506 x 13).

    Correlated Gaussian features; the target is a random linear trend plus
    ``2 sin(x_0)`` and Gaussian noise.
    """
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(features, features)) / math.sqrt(features)
    X = rng.normal(size=(rows, features)) @ (np.eye(features) + 0.5 * A)
    trend = rng.uniform(-1.0, 1.0, size=features)
    y = X @ trend + 2.0 * np.sin(X[:, 0]) + noise * rng.normal(size=rows)
    return X, y


# ---------------------------------------------------------------------------
# metrics and fitting helpers
# ---------------------------------------------------------------------------


def nmse(actual, predicted) -> float:
    """Mean squared error over the (population) variance of ``actual``."""
    y = np.asarray(actual, dtype=float).ravel()
    p = np.asarray(predicted, dtype=float).ravel()
    if y.size != p.size:
        raise ValueError(f"length mismatch: {y.size} vs {p.size}")
    if y.size < 2:
        raise ValueError("nmse needs at least two points")
    var = y.var()
    if var <= 0:
        raise ValueError("labels have zero variance")
    return float(np.mean((y - p) ** 2) / var)


@dataclass(frozen=True)
class CenteredFit:
    """Weighted KRR on labels centered by their weighted mean."""

    h: learner.Hypothesis
    offset: float

    def predict(self, X):
        return learner.predict(self.h, X) + self.offset


def fit_centered(X, y, raw_weights, kernel, lam, K=None) -> CenteredFit:
    W = learner.normalize(raw_weights)
    offset = float(W @ y)
    h = learner.fit(learner.WeightedSample(X, y - offset, W), kernel, lam, K=K)
    return CenteredFit(h, offset)


# ---------------------------------------------------------------------------
# configuration and reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_path: str
    seed: int
    num_projections: int = 10
    projection_trials: int = 20
    folds: int = 10
    lam: float = 1e-3
    kernel_bandwidth: float | None = None
    min_leaf: int = clustering.DEFAULT_MIN_LEAF
    kmm: kmm.KmmConfig = field(default_factory=kmm.KmmConfig)
    methods: tuple[str, ...] = METHODS
    delta: float = 0.05
    unbiased: bool = False

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if not self.methods:
            raise ValueError("methods must be non-empty")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}")
        if self.num_projections < 1 or self.projection_trials < 1:
            raise ValueError("num_projections and projection_trials must be >= 1")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        object.__setattr__(self, "methods", tuple(m for m in METHODS if m in self.methods))

    def kernel_for(self, dim: int) -> KernelSpec:
        if self.kernel_bandwidth is None:
            return KernelSpec.default(dim)
        return KernelSpec(self.kernel_bandwidth)

    def to_dict(self):
        d = asdict(self)
        d["methods"] = list(self.methods)
        return d


@dataclass
class RunReport:
    dataset: str
    seed: int
    config: dict
    n_pool: int
    n_features: int
    projection_index: int
    projection_gaps: list
    nmse: dict  # method -> {"mean", "std", "folds"}
    sizes: dict  # "u_train", "s", "n_test" -> per-fold lists
    fold_seeds: list
    redraws: list
    bounds: list  # one dict per fold
    timings: dict = field(default_factory=dict, compare=False)

    def summary(self, method):
        return self.nmse[method]["mean"], self.nmse[method]["std"]

    def to_json(self) -> str:
        d = asdict(self)
        d.pop("timings")
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str, timings: dict | None = None) -> "RunReport":
        return cls(**json.loads(text), timings=timings or {})

    def to_text(self) -> str:
        cols = [m for m in METHODS if m in self.nmse]
        mean_u = np.mean(self.sizes["u_train"])
        mean_s = np.mean(self.sizes["s"])
        mean_t = np.mean(self.sizes["n_test"])
        lines = [
            f"dataset: {self.dataset}",
            f"seed: {self.seed}   folds: {len(self.fold_seeds)}   projection: {self.projection_index}"
            f"   redraws: {sum(self.redraws)}",
            "",
            "NMSE (mean +- std over folds)",
            "  " + " | ".join([f"{'|U|':>8}", f"{'|S|':>8}", f"{'n_test':>8}"] + [f"{c:>15}" for c in cols]),
            "  "
            + " | ".join(
                [f"{mean_u:8.1f}", f"{mean_s:8.1f}", f"{mean_t:8.1f}"]
                + [f"{self.nmse[c]['mean']:7.3f}+-{self.nmse[c]['std']:.3f}" for c in cols]
            ),
            "",
            "bounds (fold median)",
        ]
        def numeric(v):
            return isinstance(v, (int, float)) and not isinstance(v, bool)

        keys = sorted({k for b in self.bounds for k, v in b.items() if numeric(v)})
        for key in keys:
            vals = [b[key] for b in self.bounds if numeric(b.get(key))]
            lines.append(f"  {key:<30} {float(np.median(vals)):.6g}")
        return "\n".join(lines) + "\n"

    def write(self, prefix) -> tuple[Path, Path, Path]:
        prefix = Path(prefix)
        txt = prefix.with_suffix(".txt")
        js = prefix.with_suffix(".json")
        tm = prefix.with_suffix(".timings.json")
        txt.write_text(self.to_text(), encoding="utf-8")
        js.write_text(self.to_json(), encoding="utf-8")
        tm.write_text(json.dumps(self.timings, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return txt, js, tm

    @classmethod
    def read(cls, prefix) -> "RunReport":
        prefix = Path(prefix)
        tm = prefix.with_suffix(".timings.json")
        timings = json.loads(tm.read_text(encoding="utf-8")) if tm.exists() else {}
        return cls.from_json(prefix.with_suffix(".json").read_text(encoding="utf-8"), timings)


# ---------------------------------------------------------------------------
# biased draws, projection choice
# ---------------------------------------------------------------------------


def draw_with_redraw(X, model, seed_seq: np.random.SeedSequence):
    """Draw until the sample holds at least :data:`MIN_SAMPLE` points.

    Returns the draw and the number of redraws.
    """
    for attempt in range(MAX_REDRAWS):
        child = seed_seq.spawn(1)[0]
        d = bias.draw(X, model, child)
        if len(d) >= min(MIN_SAMPLE, len(X)):
            return d, attempt
    raise RuntimeError(f"no biased draw with >= {MIN_SAMPLE} points after {MAX_REDRAWS} attempts")


@dataclass(frozen=True)
class ProjectionChoice:
    model: bias.BiasModel
    index: int
    gaps: tuple[float, ...]


def candidate_models(X, num_projections: int, seed) -> list[bias.BiasModel]:
    seqs = np.random.SeedSequence([int(seed), 1]).spawn(num_projections)
    return [bias.make_model(X, s) for s in seqs]


def choose_projection(X, y, config: ExperimentConfig, candidates=None) -> ProjectionChoice:
    """Pick the candidate maximizing mean NMSE(unweighted) - NMSE(ideal).

    Each candidate is scored over ``config.projection_trials`` biased draws
    from the pool, with NMSE measured on the whole pool. All candidates share
    the same trial seeds, so identical candidates tie; ties go to the lowest
    index.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if candidates is None:
        candidates = candidate_models(X, config.num_projections, config.seed)
    if len(candidates) == 1:
        return ProjectionChoice(candidates[0], 0, (float("nan"),))
    kernel = config.kernel_for(X.shape[1])
    gaps = []
    for model in candidates:
        seq = np.random.SeedSequence([int(config.seed), 2])
        diffs = []
        for t_seq in seq.spawn(config.projection_trials):
            d, _ = draw_with_redraw(X, model, t_seq)
            S = d.selected
            K = cross_gram(kernel, X[S], X[S])
            unw = fit_centered(X[S], y[S], np.ones(S.size), kernel, config.lam, K)
            ide = fit_centered(X[S], y[S], bias.ideal_weights(d), kernel, config.lam, K)
            diffs.append(nmse(y, unw.predict(X)) - nmse(y, ide.predict(X)))
        gaps.append(float(np.mean(diffs)))
    best = int(np.argmax(gaps))
    return ProjectionChoice(candidates[best], best, tuple(gaps))


# ---------------------------------------------------------------------------
# the cross-validated comparison
# ---------------------------------------------------------------------------


def fold_indices(n: int, folds: int, seed) -> list[np.ndarray]:
    """Disjoint folds covering ``range(n)``; sizes differ by at most one."""
    perm = np.random.default_rng(np.random.SeedSequence([int(seed), 3])).permutation(n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


def _method_weights(method, Xs, ys, d, X_train, config, kernel):
    """Raw weights for one method plus any method-specific diagnostics."""
    if method == "unweighted":
        return np.ones(Xs.shape[0]), {}
    if method == "ideal":
        return bias.ideal_weights(d), {}
    if method == "clustered":
        part = clustering.assign_counts(clustering.fit_tree(Xs, ys, config.min_leaf), X_train)
        return clustering.weights(part, Xs), {"partition": part}
    if method == "kmm":
        sol = kmm.solve(Xs, X_train, kernel, config.kmm)
        return kmm.normalized_weights(sol), {"solution": sol}
    raise ValueError(method)


def _fold_bounds(config, kernel, Ks, d, Xs, ideal_w, weights, extras, y_center, preds, n_train):
    """Stability report and gap bounds for one fold (all plain floats)."""
    out = {}
    m = d.selected.size
    M = max(float(np.max(np.abs(y_center))), max(float(np.max(np.abs(p))) for p in preds))
    sigma = 2.0 * M
    stab = bounds.beta_coefficients(sigma, kernel.kappa, config.lam, Ks.lambda_max)
    out.update({f"stability_{k}": v for k, v in stab.to_dict().items()})
    out["lambda_min"] = Ks.lambda_min
    out["cond"] = Ks.cond
    W_ideal = learner.normalize(ideal_w)
    if "clustered" in weights:
        part = extras["clustered"]["partition"]
        leaves = part.route(Xs)
        q_hat = part.q_hat[leaves]
        p_true = d.selected_probabilities
        B = float(np.max(np.maximum(1 / p_true, 1 / q_hat)))
        k_used = int(np.unique(leaves).size)
        p0 = float(np.min(part.u_count[leaves]) / n_train)
        l1b, l2b = bounds.cluster_gap_bounds(sigma, kernel.kappa, config.lam, Ks.lambda_max, B,
                                             k_used, p0, n_train, m, config.delta)
        dl1, dl2 = clustering.cluster_distance_bounds(B, part.c_max, part.k, part.q0, n_train, m, config.delta)
        W_cl = learner.normalize(weights["clustered"])
        cross = bounds.crossover_diagnostic(Ks.lambda_min, B, max(k_used, 1), n_train)
        out.update(
            cluster_B=B, cluster_k=part.k, cluster_p0=p0, cluster_q0=part.q0, cluster_c_max=part.c_max,
            cluster_gap_l1=l1b.value, cluster_gap_l2=l2b.value,
            cluster_distance_bound_l1=dl1, cluster_distance_bound_l2=dl2,
            cluster_measured_l1=bounds.l1_distance(W_ideal, W_cl),
            cluster_measured_l2=bounds.l2_distance(W_ideal, W_cl),
            crossover_threshold=cross.threshold, crossover_regime=cross.regime,
        )
    if "kmm" in weights:
        sol = extras["kmm"]["solution"]
        kc = config.kmm
        g = bounds.kmm_gap_bound(sigma, kernel.kappa, config.lam, Ks.lambda_max, Ks.lambda_min,
                                 kc.b_prime, kc.epsilon, m, n_train, config.delta)
        out.update(
            kmm_gap=g.value,
            kmm_l2_deviation_bound=kmm.kmm_l2_deviation_bound(kc.epsilon, kc.b_prime, m, n_train, kernel.kappa,
                                                             Ks.lambda_min, config.delta),
            kmm_measured_l2=bounds.l2_distance(W_ideal, weights["kmm"]),
            kmm_objective=sol.objective, kmm_iterations=sol.iterations, kmm_converged=sol.converged,
        )
        if kc.epsilon == 0:
            out["kmm_gap_eps0"] = bounds.kmm_gap_bound_eps0(sigma, kernel.kappa, config.lam, Ks.cond, kc.b_prime,
                                                            m, n_train, config.delta).value
    return out


def run_fold(X, y, train, test, model, config, kernel, seed_seq):
    """Evaluate every configured method on one fold; returns a result dict."""
    X_train, y_train = X[train], y[train]
    d, redraws = draw_with_redraw(X_train, model, seed_seq)
    S = d.selected
    Xs, ys = X_train[S], y_train[S]
    Ks = gram(kernel, Xs)
    res = {"nmse": {}, "redraws": redraws, "u_train": int(train.size), "s": int(S.size), "n_test": int(test.size)}
    weights, extras, preds = {}, {}, []
    for method in config.methods:
        try:
            w, extra = _method_weights(method, Xs, ys, d, X_train, config, kernel)
            fitted = fit_centered(Xs, ys, w, kernel, config.lam, Ks.entries)
            res["nmse"][method] = nmse(y[test], fitted.predict(X[test]))
        except Exception as exc:
            raise RuntimeError(f"method {method!r} failed: {exc}") from exc
        weights[method], extras[method] = learner.normalize(w), extra
        preds.append(learner.predict(fitted.h, X_train))
    ideal_w = bias.ideal_weights(d)
    y_center = y_train - float(learner.normalize(ideal_w) @ ys)
    res["bounds"] = _fold_bounds(config, kernel, Ks, d, Xs, ideal_w, weights, extras,
                                 y_center, preds, int(train.size))
    return res


def run(config: ExperimentConfig, pool: Pool | None = None) -> RunReport:
    """Full comparison; deterministic given ``config.seed``."""
    timings = {}
    t0 = time.perf_counter()
    if pool is None:
        pool = load_dataset(config.dataset_path)
    X, y = pool.X, pool.y
    kernel = config.kernel_for(pool.dim)
    timings["load"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if config.unbiased:
        choice = ProjectionChoice(bias.BiasModel.uniform(pool.dim), 0, (0.0,))
    else:
        choice = choose_projection(X, y, config)
    timings["choose_projection"] = time.perf_counter() - t0
    log.info("projection %d chosen (gaps %s)", choice.index, choice.gaps)

    t0 = time.perf_counter()
    folds = fold_indices(len(pool), config.folds, config.seed)
    fold_seqs = np.random.SeedSequence([int(config.seed), 4]).spawn(config.folds)
    results = []
    for k, test in enumerate(folds):
        train = np.setdiff1d(np.arange(len(pool)), test)
        try:
            results.append(run_fold(X, y, train, test, choice.model, config, kernel, fold_seqs[k]))
        except Exception as exc:
            raise RuntimeError(f"fold {k}: {exc}") from exc
        log.info("fold %d: %s", k, results[-1]["nmse"])
    timings["folds"] = time.perf_counter() - t0

    table = {}
    for method in config.methods:
        vals = [r["nmse"][method] for r in results]
        table[method] = {"mean": float(np.mean(vals)), "std": float(np.std(vals, ddof=1)), "folds": vals}
    return RunReport(
        dataset=str(config.dataset_path),
        seed=int(config.seed),
        config=config.to_dict(),
        n_pool=len(pool),
        n_features=pool.dim,
        projection_index=choice.index,
        projection_gaps=list(choice.gaps),
        nmse=table,
        sizes={key: [r[key] for r in results] for key in ("u_train", "s", "n_test")},
        fold_seeds=[[int(config.seed), 4, *map(int, s.spawn_key)] for s in fold_seqs],
        redraws=[r["redraws"] for r in results],
        bounds=[r["bounds"] for r in results],
        timings=timings,
    )


# ---------------------------------------------------------------------------
# Monte Carlo checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UnbiasednessRecord:
    mean: float
    std_error: float
    pool_risk: float
    z: float
    trials: int

    def to_dict(self):
        return asdict(self)


def verify_unbiasedness(X, y, model: bias.BiasModel, trials: int, seed, h=None, kernel=None, lam=1e-2):
    """Monte Carlo check that inverse-probability weighting is unbiased.

    Per trial, ``sum_{i in S} c(h, z_i) / P(x_i) / |U|`` is computed; its
    average is compared to the pool risk ``mean_x c(h, z)``. ``h`` defaults
    to an unweighted fit on the whole pool.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if h is None:
        kernel = kernel or KernelSpec.default(X.shape[1])
        h = learner.fit(learner.WeightedSample(X, y, np.ones(y.size)), kernel, lam)
    c = np.asarray(learner.cost(h, X, y), dtype=float).reshape(-1)
    p = model.probabilities(X)
    risk = float(c.mean())
    rng = np.random.default_rng(seed)
    per_point = c / p / c.size
    est = np.empty(trials)
    batch = max(1, 2_000_000 // max(c.size, 1))
    for start in range(0, trials, batch):
        stop = min(trials, start + batch)
        keep = rng.random((stop - start, c.size)) < p
        est[start:stop] = keep @ per_point
    mean = float(est.mean())
    se = float(est.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
    # a standard error at rounding level means every trial gave the same value
    if se > 1e-12 * max(abs(risk), 1e-300):
        z = (mean - risk) / se
    else:
        z = 0.0 if math.isclose(mean, risk, rel_tol=1e-10, abs_tol=1e-15) else math.inf
    return UnbiasednessRecord(mean, se, risk, float(z), int(trials))


@dataclass(frozen=True)
class StabilityProbe:
    max_delta: np.ndarray
    l1: np.ndarray
    l2: np.ndarray
    envelope_l1: np.ndarray
    envelope_l2: np.ndarray
    ratio_l1: np.ndarray
    ratio_l2: np.ndarray
    report: bounds.StabilityReport
    M: float

    @property
    def max_ratio(self) -> float:
        return float(max(self.ratio_l1.max(initial=0.0), self.ratio_l2.max(initial=0.0)))

    def to_dict(self):
        return {
            "pairs": int(self.l1.size),
            "M": self.M,
            "stability": self.report.to_dict(),
            "max_ratio_l1": float(self.ratio_l1.max(initial=0.0)),
            "max_ratio_l2": float(self.ratio_l2.max(initial=0.0)),
            "max_delta": float(self.max_delta.max(initial=0.0)),
        }


def random_distribution_pairs(m: int, pairs: int, rng) -> list[tuple[np.ndarray, np.ndarray]]:
    """Mix of dense Dirichlet pairs, sparse pairs and leave-one-out pairs."""
    out = []
    for t in range(pairs):
        kind = t % 3
        if kind == 0:
            a = rng.dirichlet(np.ones(m))
            b = rng.dirichlet(np.ones(m))
        elif kind == 1:
            a = rng.dirichlet(np.full(m, 0.2))
            b = a + rng.uniform(0, 0.1, m) * rng.dirichlet(np.ones(m))
            b /= b.sum()
        else:
            a = np.full(m, 1.0 / m)
            b = np.full(m, 1.0 / (m - 1)) if m > 1 else a.copy()
            if m > 1:
                b[rng.integers(m)] = 0.0
        out.append((a, b))
    return out


def empirical_stability_probe(X, y, kernel: KernelSpec, lam: float, pairs, seed, probe_X=None,
                              n_probe: int = 50) -> StabilityProbe:
    """Measure per-point cost changes against the stability envelopes.

    ``pairs`` is a count of random distribution pairs or an explicit list
    of ``(W, W')``. The probe set is the sample itself plus ``n_probe``
    random points with labels drawn uniformly from ``[-M, M]``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float)
    m = y.size
    rng = np.random.default_rng(seed)
    if isinstance(pairs, int):
        if pairs < 1:
            raise ValueError("pairs must be >= 1")
        pairs = random_distribution_pairs(m, pairs, rng)
    if probe_X is None:
        lo, hi = X.min(axis=0), X.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        probe_X = rng.uniform(lo - 0.25 * span, hi + 0.25 * span, size=(n_probe, X.shape[1]))
    Km = gram(kernel, X)
    fits = []
    for a, b in pairs:
        ha = learner.fit(learner.WeightedSample(X, y, a), kernel, lam, K=Km.entries)
        hb = learner.fit(learner.WeightedSample(X, y, b), kernel, lam, K=Km.entries)
        fits.append((ha, hb))
    Z = np.vstack([X, probe_X])
    preds = [(learner.predict(ha, Z), learner.predict(hb, Z)) for ha, hb in fits]
    M = max(float(np.abs(y).max()), max(float(max(np.abs(pa).max(), np.abs(pb).max())) for pa, pb in preds))
    y_probe = np.concatenate([y, rng.uniform(-M, M, size=probe_X.shape[0])])
    stab = bounds.beta_coefficients(2.0 * M, kernel.kappa, lam, Km.lambda_max)
    deltas, l1s, l2s = [], [], []
    for (a, b), (pa, pb) in zip(pairs, preds):
        deltas.append(float(np.max(np.abs((pa - y_probe) ** 2 - (pb - y_probe) ** 2))))
        l1s.append(bounds.l1_distance(a, b))
        l2s.append(bounds.l2_distance(a, b))
    deltas, l1s, l2s = map(np.asarray, (deltas, l1s, l2s))
    env1 = stab.beta_l1 * l1s
    env2 = stab.beta_l2 * l2s
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(env1 > 0, deltas / env1, 0.0)
        r2 = np.where(env2 > 0, deltas / env2, 0.0)
    return StabilityProbe(deltas, l1s, l2s, env1, env2, r1, r2, stab, M)
