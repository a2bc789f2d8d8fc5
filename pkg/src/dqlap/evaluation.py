"""Classification metrics, prediction latency and the 2-D PCA projection."""

import json
import statistics
import time
from dataclasses import asdict, dataclass, field

import numpy as np

METRIC_COLUMNS = ("Accuracy", "Precision", "Recall", "F1 Score")
ZERO_DIVISION_NOTE = "precision/recall/F1 with a zero denominator are reported as 0"


@dataclass(frozen=True)
class ClassCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def precision(self):
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self):
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self):
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


@dataclass
class MetricsReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    per_class: dict = field(default_factory=dict)
    mean_prediction_time: float | None = None

    @property
    def row(self):
        return (self.accuracy, self.macro_precision, self.macro_recall, self.macro_f1)

    def to_dict(self):
        d = asdict(self)
        d["per_class"] = {str(k): v for k, v in self.per_class.items()}
        d["zero_division"] = ZERO_DIVISION_NOTE
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def confusion_counts(predictions, labels, cls):
    pos_pred = predictions == cls
    pos_true = labels == cls
    return ClassCounts(
        tp=int(np.sum(pos_pred & pos_true)),
        fp=int(np.sum(pos_pred & ~pos_true)),
        fn=int(np.sum(~pos_pred & pos_true)),
        tn=int(np.sum(~pos_pred & ~pos_true)),
    )


def compute_metrics(predictions, labels):
    """Accuracy plus macro-averaged precision, recall and F1.

    Macro averages run over every class that occurs in either the labels or
    the predictions. A zero denominator yields 0 for that cell.
    """
    predictions = np.asarray(predictions).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if predictions.shape != labels.shape:
        raise ValueError(f"length mismatch: {predictions.shape[0]} predictions, {labels.shape[0]} labels")
    if labels.size == 0:
        raise ValueError("cannot score an empty prediction set")
    classes = np.union1d(labels, predictions)
    per_class = {}
    for cls in classes.tolist():
        c = confusion_counts(predictions, labels, cls)
        per_class[int(cls)] = {
            "tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn,
            "support": c.tp + c.fn,
            "precision": c.precision, "recall": c.recall, "f1": c.f1,
        }
    stats = list(per_class.values())
    return MetricsReport(
        accuracy=float(np.mean(predictions == labels)),
        macro_precision=float(np.mean([s["precision"] for s in stats])),
        macro_recall=float(np.mean([s["recall"] for s in stats])),
        macro_f1=float(np.mean([s["f1"] for s in stats])),
        per_class=per_class,
    )


def greedy_labels(q_values):
    """Argmax over outputs; ``np.argmax`` already resolves ties to the lowest index."""
    return np.argmax(np.asarray(q_values), axis=-1)


def measure_prediction_time(net, samples, repetitions=5, predict=None):
    """Median wall-clock seconds per sample for greedy prediction."""
    x = samples.features if hasattr(samples, "features") else np.asarray(samples, dtype=np.float64)
    if len(x) == 0:
        raise ValueError("no samples to time")
    if repetitions < 3:
        raise ValueError("repetitions must be >= 3")
    predict = predict or (lambda n, batch: greedy_labels(n.forward(batch)))
    times = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        predict(net, x)
        times.append(time.perf_counter() - t0)
    return statistics.median(times) / len(x)


def format_table(rows, timing=None):
    """Render a comparison table: one row per method, the four metric columns
    and optionally a seconds-per-sample column.

    ``rows`` maps method name to MetricsReport; ``timing`` maps method name to seconds.
    """
    head = ["method", *METRIC_COLUMNS]
    if timing is not None:
        head.append("Prediction time (s/sample)")
    body = []
    for name, report in rows.items():
        cells = [name, *(f"{v:.4f}" for v in report.row)]
        if timing is not None:
            cells.append(f"{timing[name]:.3e}")
        body.append(cells)
    widths = [max(len(r[i]) for r in [head, *body]) for i in range(len(head))]
    fmt = lambda r: " | ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()
    sep = "-+-".join("-" * w for w in widths)
    return "\n".join([fmt(head), sep, *map(fmt, body)]) + "\n"


# ---------------------------------------------------------------------------
# PCA


@dataclass(frozen=True)
class Projection2D:
    components: np.ndarray
    explained_variance: np.ndarray
    points: np.ndarray
    labels: np.ndarray
    mean: np.ndarray


def _fix_sign(v):
    return -v if v[np.argmax(np.abs(v))] < 0 else v


def power_iteration(cov, start, orth=None, tol=1e-10, max_sweeps=1000):
    """Dominant eigenpair of a symmetric PSD matrix, optionally restricted to the
    complement of the unit vectors in ``orth``.

    Stops once the Rayleigh quotient changes by at most ``tol`` (relative to
    its size) and the iterate moves by at most ``tol`` in the same sweep.
    """
    orth = [] if orth is None else orth

    def project(v):
        for u in orth:
            v = v - (u @ v) * u
        return v

    v = project(np.asarray(start, dtype=np.float64))
    v /= np.linalg.norm(v)
    scale = np.abs(cov).max()
    lam = 0.0
    for _ in range(max_sweeps):
        y = project(cov @ v)
        norm = np.linalg.norm(y)
        if norm <= 1e-13 * scale:
            return 0.0, v
        lam_new = float(v @ y)
        v_new = y / norm
        moved = min(np.linalg.norm(v_new - v), np.linalg.norm(v_new + v))
        done = abs(lam_new - lam) <= tol * max(abs(lam_new), 1.0) and moved <= tol
        v, lam = v_new, lam_new
        if done:
            break
    return float(v @ cov @ v), v


def pca_project(data, labels=None, tol=1e-10, max_sweeps=1000):
    """Project onto the top two principal directions found by power iteration
    with deflation. Each component's largest-magnitude entry is made positive.

    ``data`` is a Dataset or an (N, F) array.
    """
    if hasattr(data, "features"):
        x, labels = data.features, data.labels if labels is None else labels
    else:
        x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 2:
        raise ValueError(f"need at least 2 samples and 2 features, got shape {x.shape}")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / (x.shape[0] - 1)
    if not np.any(cov):
        raise ValueError("all points are identical; no principal direction exists")
    start = np.random.default_rng(0).standard_normal(x.shape[1])
    lam1, v1 = power_iteration(cov, start, tol=tol, max_sweeps=max_sweeps)
    v1 = _fix_sign(v1)
    deflated = cov - lam1 * np.outer(v1, v1)
    lam2, v2 = power_iteration(deflated, start, orth=[v1], tol=tol, max_sweeps=max_sweeps)
    v2 = _fix_sign(v2)
    components = np.vstack([v1, v2])
    variance = np.array([max(lam1, 0.0), max(lam2, 0.0)])
    labels = np.zeros(x.shape[0], dtype=np.int64) if labels is None else np.asarray(labels)
    return Projection2D(components, variance, xc @ components.T, labels, mean)


def write_projection_csv(points, labels, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,y,label\n")
        for (px, py), lab in zip(points, labels):
            fh.write(f"{float(px)!r},{float(py)!r},{int(lab)}\n")
