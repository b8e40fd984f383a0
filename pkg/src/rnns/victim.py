"""Black-box victims: anything with ``classify(unit) -> Probabilities``.

Includes the in-repo toy model (softmax regression over hashed token counts),
an HTTP client/server pair speaking ``POST /classify``, and a query counter.
"""
from __future__ import annotations

import json
import logging
import os
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from functools import lru_cache
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .encoder import fnv1a64, split_subtokens, splitmix64_stream
from .lexing import SourceUnit, tokenize

log = logging.getLogger(__name__)

MODEL_FORMAT = "rnns-toy-model"
MODEL_VERSION = 1
SIMPLEX_TOL = 1e-6


class VictimError(RuntimeError):
    pass


class VictimTransportError(VictimError):
    """The victim could not be reached (connection refused, timeout, ...)."""


class VictimProtocolError(VictimError):
    """The victim answered, but not with a valid probability distribution."""


@dataclass(frozen=True)
class Probabilities:
    probs: tuple[float, ...]

    @property
    def predicted(self) -> int:
        # first maximum wins
        return int(np.argmax(self.probs))

    def __len__(self):
        return len(self.probs)

    def __getitem__(self, i):
        return self.probs[i]


def check_distribution(probs: Sequence[float], n_classes: int | None = None) -> Probabilities:
    try:
        arr = np.asarray(probs, dtype=np.float64)
    except (TypeError, ValueError):
        raise VictimProtocolError("probabilities are not numeric") from None
    if arr.ndim != 1 or arr.size == 0:
        raise VictimProtocolError("probabilities must be a non-empty flat list")
    if n_classes is not None and arr.size != n_classes:
        raise VictimProtocolError(f"expected {n_classes} probabilities, got {arr.size}")
    if not np.isfinite(arr).all() or (arr < 0).any() or abs(arr.sum() - 1.0) > SIMPLEX_TOL:
        raise VictimProtocolError("probabilities are not a distribution")
    return Probabilities(tuple(float(p) for p in arr))


class Victim(Protocol):
    def classify(self, unit: SourceUnit) -> Probabilities: ...


# --- featurization -----------------------------------------------------------

@lru_cache(maxsize=1 << 16)
def _bucket(key: str, n_features: int, hash_seed: int) -> int:
    return int(splitmix64_stream(fnv1a64(key.encode("utf-8")) ^ hash_seed, 1)[0] % np.uint64(n_features))


def _token_keys(kind: str, text: str) -> list[str]:
    if kind == "string":
        return ["<str>"]
    if kind == "comment":
        return ["<comment>"]
    if kind == "identifier":
        return ["id:" + text] + ["sub:" + s for s in split_subtokens(text)]
    return [f"{kind}:{text}"]


def feature_keys(unit: SourceUnit) -> list[str]:
    """Token-level feature keys; identifiers also emit one key per subtoken."""
    keys = []
    for t in tokenize(unit):
        if t.kind != "whitespace":
            keys.extend(_token_keys(t.kind, t.text))
    return keys


@lru_cache(maxsize=1 << 17)
def _token_buckets(kind: str, text: str, n_features: int, hash_seed: int) -> tuple[int, ...]:
    return tuple(_bucket(k, n_features, hash_seed) for k in _token_keys(kind, text))


def featurize(unit: SourceUnit, n_features: int, hash_seed: int) -> dict[int, int]:
    """Sparse bucket -> count map of hashed feature keys."""
    counts: dict[int, int] = {}
    for t in tokenize(unit):
        if t.kind == "whitespace":
            continue
        for b in _token_buckets(t.kind, t.text, n_features, hash_seed):
            counts[b] = counts.get(b, 0) + 1
    return counts


def feature_vector(unit: SourceUnit, n_features: int, hash_seed: int) -> np.ndarray:
    """Dense, L2-normalized count vector (the model input)."""
    x = np.zeros(n_features)
    for b, n in featurize(unit, n_features, hash_seed).items():
        x[b] = n
    norm = np.linalg.norm(x)
    return x / norm if norm > 0 else x


# --- toy model ---------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    lr: float = 5.0
    epochs: int = 300
    l2: float = 1e-4
    seed: int = 0
    n_features: int = 4096
    hash_seed: int = 0x70F


@dataclass
class ToyModel:
    weights: np.ndarray  # (C, F)
    bias: np.ndarray  # (C,)
    hash_seed: int
    config: TrainConfig = field(default_factory=TrainConfig)
    train_accuracy: float | None = None

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    def logits(self, x: np.ndarray) -> np.ndarray:
        return x @ self.weights.T + self.bias

    def classify(self, unit: SourceUnit) -> Probabilities:
        return classify_toy(self, unit)


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def loss_and_grad(W: np.ndarray, b: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float):
    """Mean cross-entropy plus ``l2/2 * ||W||^2`` and its gradient wrt (W, b)."""
    n = X.shape[0]
    P = softmax(X @ W.T + b)
    loss = -np.log(P[np.arange(n), y]).mean() + 0.5 * l2 * np.sum(W * W)
    G = P.copy()
    G[np.arange(n), y] -= 1.0
    G /= n
    return loss, G.T @ X + l2 * W, G.sum(axis=0)


def train_toy(dataset: Sequence[SourceUnit], config: TrainConfig = TrainConfig(),
              n_classes: int | None = None) -> ToyModel:
    labels = [u.label for u in dataset]
    if any(lbl is None for lbl in labels):
        raise ValueError("every training sample needs a label")
    C = n_classes or (max(labels) + 1)
    counts = np.bincount(labels, minlength=C)
    if C < 2 or (counts < 10).any():
        raise ValueError(f"degenerate dataset: need >= 2 classes with >= 10 samples each, got {counts.tolist()}")
    X = np.stack([feature_vector(u, config.n_features, config.hash_seed) for u in dataset])
    y = np.asarray(labels)
    rng = np.random.default_rng(config.seed)
    W = rng.normal(0.0, 0.01, size=(C, config.n_features))
    b = np.zeros(C)
    for _ in range(config.epochs):
        _, gW, gb = loss_and_grad(W, b, X, y, config.l2)
        W -= config.lr * gW
        b -= config.lr * gb
    acc = float((np.argmax(X @ W.T + b, axis=1) == y).mean())
    log.info("toy model trained: %d samples, %d classes, train accuracy %.4f", len(y), C, acc)
    return ToyModel(W, b, config.hash_seed, config, acc)


def classify_toy(model: ToyModel, unit: SourceUnit) -> Probabilities:
    x = feature_vector(unit, model.n_features, model.hash_seed)
    return Probabilities(tuple(float(p) for p in softmax(model.logits(x))))


def accuracy(victim: Victim, dataset: Sequence[SourceUnit]) -> float:
    hits = sum(victim.classify(u).predicted == u.label for u in dataset)
    return hits / len(dataset)


def dumps_model(model: ToyModel) -> str:
    cfg = model.config
    return json.dumps({
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "n_classes": model.n_classes,
        "n_features": model.n_features,
        "hash_seed": model.hash_seed,
        "train": {"lr": cfg.lr, "epochs": cfg.epochs, "l2": cfg.l2, "seed": cfg.seed},
        "train_accuracy": model.train_accuracy,
        "weights": model.weights.tolist(),
        "bias": model.bias.tolist(),
    }, sort_keys=True)


def save_model(model: ToyModel, path: str | Path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(dumps_model(model), encoding="utf-8")
    os.replace(tmp, path)


def load_model(path: str | Path) -> ToyModel:
    rec = json.loads(Path(path).read_text(encoding="utf-8"))
    if rec.get("format") != MODEL_FORMAT or rec.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: not a {MODEL_FORMAT} v{MODEL_VERSION} file")
    W = np.array(rec["weights"], dtype=np.float64)
    b = np.array(rec["bias"], dtype=np.float64)
    if W.shape != (rec["n_classes"], rec["n_features"]) or b.shape != (rec["n_classes"],):
        raise ValueError(f"{path}: weight shapes disagree with header")
    if not (np.isfinite(W).all() and np.isfinite(b).all()):
        raise ValueError(f"{path}: non-finite parameters")
    cfg = TrainConfig(n_features=rec["n_features"], hash_seed=rec["hash_seed"], **rec["train"])
    return ToyModel(W, b, rec["hash_seed"], cfg, rec.get("train_accuracy"))


# --- HTTP --------------------------------------------------------------------

def _classify_url(endpoint: str) -> str:
    endpoint = endpoint.rstrip("/")
    return endpoint if endpoint.endswith("/classify") else endpoint + "/classify"


def http_classify(endpoint: str, unit: SourceUnit, timeout: float = 30.0) -> Probabilities:
    body = json.dumps({"code": unit.code, "lang": unit.language}).encode("utf-8")
    req = urllib.request.Request(_classify_url(endpoint), data=body, method="POST",
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            status, payload = resp.status, resp.read()
    except urllib.error.HTTPError as exc:
        raise VictimProtocolError(f"victim answered HTTP {exc.code}") from None
    except (urllib.error.URLError, OSError) as exc:
        raise VictimTransportError(f"cannot reach victim at {endpoint}: {exc}") from None
    if status != 200:
        raise VictimProtocolError(f"victim answered HTTP {status}")
    try:
        probs = json.loads(payload)["probs"]
    except (json.JSONDecodeError, KeyError, TypeError):
        raise VictimProtocolError("response is not a {\"probs\": [...]} object") from None
    return check_distribution(probs)


class HttpVictim:
    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout

    def classify(self, unit: SourceUnit) -> Probabilities:
        return http_classify(self.endpoint, unit, self.timeout)


def make_server(victim: Victim, port: int = 0, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    """An HTTP server answering ``POST /classify``; call ``serve_forever()`` on it."""

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            if self.path.rstrip("/") != "/classify":
                self._reply(404, {"error": "not found"})
                return
            try:
                length = int(self.headers.get("Content-Length", 0))
                req = json.loads(self.rfile.read(length))
                unit = SourceUnit(req["code"], req["lang"])
            except (ValueError, KeyError, TypeError) as exc:
                self._reply(400, {"error": str(exc)})
                return
            try:
                probs = victim.classify(unit)
            except ValueError as exc:  # lexing errors and the like
                self._reply(422, {"error": str(exc)})
                return
            self._reply(200, {"probs": list(probs.probs)})

        def _reply(self, status, obj):
            data = json.dumps(obj).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def log_message(self, fmt, *args):
            log.debug("victim server: " + fmt, *args)

    return ThreadingHTTPServer((host, port), Handler)


def serve(model: ToyModel, port: int, host: str = "127.0.0.1") -> None:
    server = make_server(model, port, host)
    log.info("serving toy victim on http://%s:%d/classify", host, server.server_address[1])
    try:
        server.serve_forever()
    finally:
        server.server_close()


# --- query accounting --------------------------------------------------------

class CountedVictim:
    """Wraps a victim and counts every classify call routed through it."""

    def __init__(self, victim: Victim):
        self.victim = victim
        self._count = 0
        self._lock = threading.Lock()

    @property
    def count(self) -> int:
        return self._count

    def classify(self, unit: SourceUnit) -> Probabilities:
        with self._lock:
            self._count += 1
        return self.victim.classify(unit)


def counted(victim: Victim) -> CountedVictim:
    return CountedVictim(victim)


def resolve_victim(spec: str) -> Victim:
    """``toy:PATH`` or ``http:URL`` -> victim."""
    scheme, sep, locator = spec.partition(":")
    if not sep or not locator:
        raise ValueError(f"victim must look like toy:PATH or http:URL, got {spec!r}")
    if scheme == "toy":
        return load_model(locator)
    if scheme == "http":
        url = locator if locator.startswith(("http://", "https://")) else "http://" + locator.lstrip("/")
        return HttpVictim(url)
    raise ValueError(f"unknown victim scheme {scheme!r}")
