"""Task-stream orchestration: learners, closed-form baselines, metrics, reports.

Four learners share one interface. `anacp` runs the full stack (incremental
statistics -> contrastive projection -> NCM or pseudo-replay ELM); the
baselines are raw nearest-class-mean, incremental ridge on raw features, and
ridge on nonlinear random projections. All are closed-form: no learner here
performs gradient updates.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from dataclasses import replace as dc_replace
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from .analytic import (
    PRNG_NAME,
    PRNG_VERSION,
    GramAccumulator,
    accumulate,
    empty_accumulator,
    project,
    random_projection,
)
from .classifier import (
    CLASSIFIER_SEED_OFFSET,
    ElmClassifier,
    elm_scores,
    ncm_distances,
    rebuild_elm,
)
from .cp_layer import CPHead, cp_transform, cp_update, derive_prototypes, make_cp_state
from .errors import DegenerateBaseline, NotFitted, RepeatedClass, UnknownTask
from .features import TaskSplit, TaskStream
from .stats import DEFAULT_EPS_SCALE, ClassStats, empty_stats, update_stats

REPLAY_SEED_OFFSET = 2 * 10**6

METHODS = ("anacp", "raw_ncm", "incremental_ridge", "rp_ridge")


@dataclass(frozen=True)
class LearnerConfig:
    """Knobs for one learner; defaults follow the reference configuration."""

    method: str = "anacp"
    rp_dim: int = 5000
    heads: int = 3
    replay_per_class: int = 100
    lambda_cp: float = 100.0
    lambda_cls: float = 100.0
    alpha: float = 1.0
    eps_scale: float = DEFAULT_EPS_SCALE
    base_seed: int = 0
    use_repulsion: bool = True
    classifier: str = "elm"  # "elm" or "ncm"
    ncm_metric: str = "euclidean"
    normalize_inputs: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.classifier not in ("elm", "ncm"):
            raise ValueError("classifier must be 'elm' or 'ncm'")


def _onehot_padded(y: np.ndarray, width: int) -> np.ndarray:
    out = np.zeros((len(y), width))
    out[np.arange(len(y)), y] = 1.0
    return out


def _l2_rows(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    return X / np.where(norms > 0, norms, 1.0)


class _Learner:
    """Shared bookkeeping: seen classes, per-task class sets, prediction modes."""

    def __init__(self, config: LearnerConfig):
        self.config = config
        self.classes: list[int] = []
        self.task_classes: list[tuple[int, ...]] = []

    # -- subclass hooks -------------------------------------------------

    def _absorb(self, X: np.ndarray, y: np.ndarray) -> None:
        raise NotImplementedError

    def scores(self, X: np.ndarray) -> np.ndarray:
        """(n, n_seen) score matrix; columns follow `self.classes` ascending."""
        raise NotImplementedError

    # -- common surface ---------------------------------------------------

    def learn_task(self, task: TaskSplit) -> "_Learner":
        repeated = sorted(set(task.classes) & set(self.classes))
        if repeated:
            raise RepeatedClass(f"classes {repeated} were already learned")
        X = np.asarray(task.train.features, dtype=np.float64)
        if self.config.normalize_inputs:
            X = _l2_rows(X)
        self._absorb(X, task.train.labels)
        self.classes = sorted(set(self.classes) | set(task.classes))
        self.task_classes.append(tuple(sorted(task.classes)))
        return self

    def predict(self, X: np.ndarray, task_id: int | None = None) -> np.ndarray:
        """Class labels; `task_id=None` scores all seen classes, otherwise the
        score columns are masked to that task's class set before the argmax."""
        if not self.classes:
            raise NotFitted("no task has been learned yet")
        X = np.asarray(X, dtype=np.float64)
        if self.config.normalize_inputs:
            X = _l2_rows(X)
        scores = self.scores(X)
        class_arr = np.asarray(self.classes, dtype=np.int64)
        if task_id is None:
            return class_arr[np.argmax(scores, axis=1)]
        if not 0 <= task_id < len(self.task_classes):
            raise UnknownTask(f"task {task_id} not learned (have {len(self.task_classes)})")
        cols = np.searchsorted(class_arr, np.asarray(self.task_classes[task_id]))
        return class_arr[cols[np.argmax(scores[:, cols], axis=1)]]

    def diagnostics(self) -> dict | None:
        return None

    def parameter_count(self) -> int:
        return parameter_count(self.config, len(self.classes), self._dim)

    def _state(self) -> tuple[dict, dict]:
        raise NotImplementedError

    def _restore(self, arrays: dict, meta: dict) -> None:
        raise NotImplementedError


def _stats_arrays(stats: ClassStats, prefix: str) -> dict:
    return {
        f"{prefix}_classes": np.asarray(stats.classes, dtype=np.int64),
        f"{prefix}_counts": stats.count_vector(),
        f"{prefix}_means": stats.mean_matrix().T if stats.classes else np.zeros((0, stats.dim)),
        f"{prefix}_cov": stats.shared_cov,
    }


def _stats_from_arrays(arrays: dict, prefix: str, dim: int) -> ClassStats:
    classes = arrays[f"{prefix}_classes"]
    counts = arrays[f"{prefix}_counts"]
    means_rows = arrays[f"{prefix}_means"]
    return ClassStats(
        dim=dim,
        means={int(c): means_rows[k].copy() for k, c in enumerate(classes)},
        counts={int(c): int(counts[k]) for k, c in enumerate(classes)},
        shared_cov=arrays[f"{prefix}_cov"],
        total_count=int(counts.sum()),
    )


class AnaCPLearner(_Learner):
    """Full pipeline: statistics, contrastive projection, replay classifier."""

    def __init__(self, config: LearnerConfig):
        super().__init__(config)
        self._dim: int | None = None
        self._stats = None
        self._cp = None
        self._cls_rp = None
        self._elm: ElmClassifier | None = None
        self._task_index = 0

    def _init_dim(self, dim: int) -> None:
        self._dim = dim
        cfg = self.config
        self._stats = empty_stats(dim)
        self._cp = make_cp_state(
            dim, cfg.rp_dim, cfg.heads, cfg.lambda_cp, cfg.alpha,
            cfg.base_seed, cfg.use_repulsion, cfg.eps_scale,
        )
        self._cls_rp = random_projection(dim, cfg.rp_dim, cfg.base_seed + CLASSIFIER_SEED_OFFSET)

    def _absorb(self, X, y):
        if self._dim is None:
            self._init_dim(X.shape[1])
        self._stats = update_stats(self._stats, X, y)
        self._cp = cp_update(self._cp, X, y, self._stats)
        if self.config.classifier == "elm":
            self._elm = rebuild_elm(
                self._cp,
                self._stats,
                self.config.replay_per_class,
                self.config.lambda_cls,
                self.config.base_seed + REPLAY_SEED_OFFSET + self._task_index,
                rp=self._cls_rp,
            )
        self._task_index += 1

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if self.config.normalize_inputs:
            X = _l2_rows(X)
        return cp_transform(self._cp, X)

    def scores(self, X):
        U = cp_transform(self._cp, X)
        if self.config.classifier == "elm":
            return elm_scores(self._elm, U)
        return -ncm_distances(U, self._cp.prototypes, self.config.ncm_metric)

    def diagnostics(self):
        proto = self._cp.prototypes if self._cp is not None else None
        if proto is None:
            return None
        deltas = proto.deltas
        return {
            "cos_sum_before": proto.cos_sum_before,
            "cos_sum_after": proto.cos_sum_after,
            "delta_histogram": {
                "-1": int(np.sum(deltas == -1)),
                "0": int(np.sum(deltas == 0)),
                "+1": int(np.sum(deltas == 1)),
            },
        }

    def _state(self):
        if self._dim is None:
            raise NotFitted("nothing to checkpoint")
        arrays = _stats_arrays(self._stats, "stats")
        for h, head in enumerate(self._cp.heads):
            arrays[f"head{h}_gram"] = head.gram
            arrays[f"head{h}_proto_sums"] = head.proto_sums
            arrays[f"head{h}_weights"] = head.weights
        if self._elm is not None:
            arrays["elm_weights"] = self._elm.weights
        extra = {
            "dim": self._dim,
            "task_index": self._task_index,
            "head_seeds": [head.rp.seed for head in self._cp.heads],
            "cls_rp_seed": self._cls_rp.seed,
            "elm_classes": list(self._elm.classes) if self._elm is not None else None,
        }
        return arrays, extra

    def _restore(self, arrays, meta):
        self._init_dim(int(meta["dim"]))
        self._task_index = int(meta["task_index"])
        self._stats = _stats_from_arrays(arrays, "stats", self._dim)
        heads = tuple(
            CPHead(
                rp=random_projection(self._dim, self.config.rp_dim, seed),
                gram=arrays[f"head{h}_gram"],
                proto_sums=arrays[f"head{h}_proto_sums"],
                weights=arrays[f"head{h}_weights"],
            )
            for h, seed in enumerate(meta["head_seeds"])
        )
        cp = make_cp_state(
            self._dim, self.config.rp_dim, self.config.heads, self.config.lambda_cp,
            self.config.alpha, self.config.base_seed, self.config.use_repulsion,
            self.config.eps_scale,
        )
        prototypes = derive_prototypes(cp, self._stats) if self._stats.classes else None
        self._cp = dc_replace(cp, heads=heads, prototypes=prototypes)
        if meta["elm_classes"] is not None:
            self._elm = ElmClassifier(
                rp=random_projection(self._dim, self.config.rp_dim, int(meta["cls_rp_seed"])),
                weights=arrays["elm_weights"],
                lam=self.config.lambda_cls,
                classes=tuple(meta["elm_classes"]),
            )


class RawNcmLearner(_Learner):
    """Nearest class mean directly on the stored features."""

    def __init__(self, config: LearnerConfig):
        super().__init__(config)
        self._dim = None
        self._stats = None

    def _absorb(self, X, y):
        if self._dim is None:
            self._dim = X.shape[1]
            self._stats = empty_stats(self._dim)
        self._stats = update_stats(self._stats, X, y)

    def scores(self, X):
        means = self._stats.mean_matrix().T
        return -cdist(X, means, metric="euclidean")

    def _state(self):
        if self._dim is None:
            raise NotFitted("nothing to checkpoint")
        return _stats_arrays(self._stats, "stats"), {"dim": self._dim}

    def _restore(self, arrays, meta):
        self._dim = int(meta["dim"])
        self._stats = _stats_from_arrays(arrays, "stats", self._dim)


class IncrementalRidgeLearner(_Learner):
    """One-hot ridge on raw features, Gram/cross accumulated across tasks."""

    def __init__(self, config: LearnerConfig):
        super().__init__(config)
        self._dim = None
        self._acc: GramAccumulator | None = None
        self._weights = None

    def _absorb(self, X, y):
        if self._dim is None:
            self._dim = X.shape[1]
            self._acc = empty_accumulator(self._dim, self.config.lambda_cls)
        width = max(self._acc.width, int(np.max(y)) + 1)
        self._acc = accumulate(self._acc, X, _onehot_padded(y, width))
        self._weights = self._acc.solve()

    def scores(self, X):
        return (X @ self._weights)[:, self.classes]

    def _state(self):
        if self._dim is None:
            raise NotFitted("nothing to checkpoint")
        arrays = {"gram": self._acc.gram, "cross": self._acc.cross, "weights": self._weights}
        return arrays, {"dim": self._dim}

    def _restore(self, arrays, meta):
        self._dim = int(meta["dim"])
        self._acc = GramAccumulator(arrays["gram"], arrays["cross"], self.config.lambda_cls)
        self._weights = arrays["weights"]


class RpRidgeLearner(_Learner):
    """One-hot ridge on GELU random projections of the features."""

    def __init__(self, config: LearnerConfig):
        super().__init__(config)
        self._dim = None
        self._rp = None
        self._acc: GramAccumulator | None = None
        self._weights = None

    def _absorb(self, X, y):
        if self._dim is None:
            self._dim = X.shape[1]
            self._rp = random_projection(self._dim, self.config.rp_dim, self.config.base_seed)
            self._acc = empty_accumulator(self.config.rp_dim, self.config.lambda_cls)
        Z = project(self._rp, X)
        width = max(self._acc.width, int(np.max(y)) + 1)
        self._acc = accumulate(self._acc, Z, _onehot_padded(y, width))
        self._weights = self._acc.solve()

    def scores(self, X):
        return (project(self._rp, X) @ self._weights)[:, self.classes]

    def _state(self):
        if self._dim is None:
            raise NotFitted("nothing to checkpoint")
        arrays = {"gram": self._acc.gram, "cross": self._acc.cross, "weights": self._weights}
        return arrays, {"dim": self._dim, "rp_seed": self._rp.seed}

    def _restore(self, arrays, meta):
        self._dim = int(meta["dim"])
        self._rp = random_projection(self._dim, self.config.rp_dim, int(meta["rp_seed"]))
        self._acc = GramAccumulator(arrays["gram"], arrays["cross"], self.config.lambda_cls)
        self._weights = arrays["weights"]


_LEARNERS = {
    "anacp": AnaCPLearner,
    "raw_ncm": RawNcmLearner,
    "incremental_ridge": IncrementalRidgeLearner,
    "rp_ridge": RpRidgeLearner,
}


def build_learner(config: LearnerConfig) -> _Learner:
    return _LEARNERS[config.method](config)


def learn_task(learner: _Learner, task: TaskSplit) -> _Learner:
    """Absorb one task (its classes must be unseen) and return the learner."""
    return learner.learn_task(task)


def predict(learner: _Learner, X: np.ndarray, task_id: int | None = None) -> np.ndarray:
    """Labels for `X`; without a task id all seen classes compete, with one the
    prediction is restricted to that task's classes."""
    return learner.predict(X, task_id)


def parameter_count(config: LearnerConfig, num_classes: int, dim: int) -> int:
    """Stored float parameters of a fitted learner, by method.

    For the full pipeline this counts the input-layer means and covariance,
    each head's projection, Gram matrix, class feature sums, and solved
    weights, and (for the ELM variant) the classifier projection and readout.
    """
    C, d, D, H = num_classes, dim, config.rp_dim, config.heads
    if config.method == "raw_ncm":
        return C * d
    if config.method == "incremental_ridge":
        return d * d + 2 * d * C  # gram + cross + weights
    if config.method == "rp_ridge":
        return d * D + D * D + 2 * D * C
    count = C * d + d * d  # class means + shared covariance
    count += H * (d * D + D * D + C * D + D * d)  # per head: rp, gram, sums, weights
    if config.classifier == "elm":
        count += d * D + D * C  # classifier rp + readout
    return count


def rel_error_reduction(baseline_acc: float, improved_acc: float) -> float:
    """Percent of the baseline's error removed: (a1 - a0) / (100 - a0) * 100."""
    if not 0 <= baseline_acc < 100:
        raise DegenerateBaseline(f"baseline accuracy must be in [0, 100), got {baseline_acc}")
    return (improved_acc - baseline_acc) / (100.0 - baseline_acc) * 100.0


@dataclass
class RunReport:
    """Everything measured over one stream run; accuracies are percentages."""

    method: str
    config: dict
    task_classes: list
    test_sizes: list
    acc_cil: np.ndarray  # acc_cil[t][i] = accuracy on task i's test set after task t
    acc_til: np.ndarray
    cumulative_acc: list  # A_t over the union of test sets seen so far
    a_last: float
    a_avg: float
    wall_times: list
    diagnostics: dict
    prng: dict = field(default_factory=lambda: {"name": PRNG_NAME, "version": PRNG_VERSION})

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "config": self.config,
            "task_classes": [list(c) for c in self.task_classes],
            "test_sizes": list(self.test_sizes),
            "acc_cil": np.asarray(self.acc_cil).tolist(),
            "acc_til": np.asarray(self.acc_til).tolist(),
            "cumulative_acc": list(self.cumulative_acc),
            "a_last": self.a_last,
            "a_avg": self.a_avg,
            "wall_times": list(self.wall_times),
            "diagnostics": self.diagnostics,
            "prng": self.prng,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json())
        return path

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        return cls(
            method=data["method"],
            config=data["config"],
            task_classes=[tuple(c) for c in data["task_classes"]],
            test_sizes=data["test_sizes"],
            acc_cil=np.asarray(data["acc_cil"]),
            acc_til=np.asarray(data["acc_til"]),
            cumulative_acc=data["cumulative_acc"],
            a_last=data["a_last"],
            a_avg=data["a_avg"],
            wall_times=data["wall_times"],
            diagnostics=data["diagnostics"],
            prng=data.get("prng", {}),
        )

    @classmethod
    def load(cls, path) -> "RunReport":
        return cls.from_dict(json.loads(Path(path).read_text()))


def run_stream(config: LearnerConfig, stream: TaskStream) -> RunReport:
    """Run one learner over the stream, evaluating after every task.

    After task t the learner is scored on every test split i <= t, in both
    modes (all classes compete; task classes only). A_t is the sample-weighted
    accuracy over the union of test sets seen so far; the average of the A_t
    and the final A_T are the two headline numbers.
    """
    learner = build_learner(config)
    T = len(stream)
    acc_cil = np.full((T, T), np.nan)
    acc_til = np.full((T, T), np.nan)
    correct = np.zeros(T)
    wall_times, cumulative, per_task_diag = [], [], []

    for t, task in enumerate(stream.tasks):
        start = time.perf_counter()
        learner.learn_task(task)
        wall_times.append(time.perf_counter() - start)

        for i in range(t + 1):
            test = stream.tasks[i].test
            pred_cil = learner.predict(test.features, task_id=None)
            pred_til = learner.predict(test.features, task_id=i)
            correct[i] = np.sum(pred_cil == test.labels)
            acc_cil[t, i] = 100.0 * correct[i] / test.n
            acc_til[t, i] = 100.0 * np.mean(pred_til == test.labels)
        seen_sizes = sum(stream.tasks[i].test.n for i in range(t + 1))
        cumulative.append(100.0 * correct[: t + 1].sum() / seen_sizes)
        per_task_diag.append(learner.diagnostics())

    diagnostics = {
        "per_task": per_task_diag,
        "parameter_count": learner.parameter_count(),
    }
    return RunReport(
        method=config.method,
        config=asdict(config),
        task_classes=[task.classes for task in stream.tasks],
        test_sizes=[task.test.n for task in stream.tasks],
        acc_cil=acc_cil,
        acc_til=acc_til,
        cumulative_acc=cumulative,
        a_last=cumulative[-1],
        a_avg=float(np.mean(cumulative)),
        wall_times=wall_times,
        diagnostics=diagnostics,
    )


# -- checkpointing -------------------------------------------------------


def save_learner(learner: _Learner, path) -> Path:
    """Serialize a fitted learner to an .npz checkpoint (seeds, sums, weights)."""
    arrays, extra = learner._state()
    meta = {
        "config": asdict(learner.config),
        "classes": learner.classes,
        "task_classes": [list(c) for c in learner.task_classes],
        "prng": {"name": PRNG_NAME, "version": PRNG_VERSION},
        **extra,
    }
    path = Path(path)
    if path.suffix != ".npz":
        path = path.with_name(path.name + ".npz")
    np.savez(path, __meta__=np.array(json.dumps(meta)), **arrays)
    return path


def load_learner(path) -> _Learner:
    data = np.load(path)
    meta = json.loads(data["__meta__"].item())
    config = LearnerConfig(**meta["config"])
    learner = _LEARNERS[config.method](config)
    learner.classes = list(meta["classes"])
    learner.task_classes = [tuple(c) for c in meta["task_classes"]]
    arrays = {k: data[k] for k in data.files if k != "__meta__"}
    learner._restore(arrays, meta)
    return learner
