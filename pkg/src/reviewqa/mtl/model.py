"""Subjectivity-aware span-extraction model: forward and backward passes.

Architecture, all float64 numpy:

    X~   per review token: word embedding + binary word-in-question flag
    H'   bidirectional LSTM over X~ (or a token-wise affine map in the
         "linear" degenerate encoder used for exact gradient checks)
    H    tanh(B h'_t) applied per position
    span head          start logit  = H_s . w_start
                       end logit    = H_e . w_end + (H_e * H_s) . w_end_cond
                       (the elementwise interaction term conditions the
                       end score on the chosen start)
    no-answer          single learned scalar z, compared to the best
                       valid pair score
    subjectivity head  S' = relu(W1 . mean_t H_t), S = softmax(W2 . S')

Training losses are cross-entropies: over start positions (with z
appended as a virtual no-answer class when enabled), over end positions
conditioned on the gold start, and over the two subjectivity classes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class NumericalError(RuntimeError):
    pass


@dataclass(frozen=True)
class MTLConfig:
    vocab_size: int
    emb_dim: int = 16
    hidden_dim: int = 16
    proj_dim: int = 16
    subj_hidden: int = 8
    encoder: str = "lstm"  # or "linear"
    max_span_len: int = 30
    allow_no_answer: bool = False

    def __post_init__(self):
        if self.encoder not in ("lstm", "linear"):
            raise ValueError(f"unknown encoder {self.encoder!r}")

    @property
    def input_dim(self) -> int:
        return self.emb_dim + 1


@dataclass(frozen=True)
class InputFeatures:
    review_ids: np.ndarray  # (T,) int token ids
    question_ids: np.ndarray  # (Q,) int token ids
    word_in_question: np.ndarray  # (T,) float 0/1

    def __post_init__(self):
        if len(self.review_ids) != len(self.word_in_question):
            raise ValueError("word_in_question must align with review tokens")


@dataclass(frozen=True)
class SpanPrediction:
    start: int
    end: int  # inclusive token index
    score: float

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError("span start must not exceed end")


NO_ANSWER = "NO_ANSWER"


@dataclass
class MTLParams:
    config: MTLConfig
    seed: int
    tensors: dict[str, np.ndarray]
    frozen: frozenset[str] = frozenset()

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def parameter_count(self) -> int:
        return sum(t.size for t in self.tensors.values())

    def copy(self) -> "MTLParams":
        return MTLParams(
            config=self.config,
            seed=self.seed,
            tensors={k: v.copy() for k, v in self.tensors.items()},
            frozen=self.frozen,
        )


def init_params(config: MTLConfig, seed: int) -> MTLParams:
    rng = np.random.default_rng(seed)

    def uniform(shape, fan_in):
        r = 1.0 / np.sqrt(max(fan_in, 1))
        return rng.uniform(-r, r, size=shape)

    E, H, P, S = config.emb_dim, config.hidden_dim, config.proj_dim, config.subj_hidden
    D = config.input_dim
    tensors: dict[str, np.ndarray] = {}
    frozen: set[str] = set()
    tensors["emb"] = uniform((config.vocab_size, E), E)
    if config.encoder == "lstm":
        for prefix in ("fwd", "bwd"):
            tensors[f"{prefix}_W"] = uniform((4 * H, D), D)
            tensors[f"{prefix}_U"] = uniform((4 * H, H), H)
            tensors[f"{prefix}_b"] = np.zeros(4 * H)
    else:
        # degenerate encoder: token-wise affine map, no recurrence
        tensors["in_W"] = uniform((2 * H, D), D)
        tensors["in_b"] = np.zeros(2 * H)
    tensors["B"] = uniform((P, 2 * H), 2 * H)
    tensors["w_start"] = uniform((P,), P)
    tensors["w_end"] = uniform((P,), P)
    tensors["w_end_cond"] = uniform((P,), P)
    tensors["z"] = np.zeros(())
    tensors["W1"] = uniform((S, P), P)
    tensors["W2"] = uniform((2, S), S)
    if not config.allow_no_answer:
        frozen.add("z")
    return MTLParams(config=config, seed=seed, tensors=tensors, frozen=frozenset(frozen))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _lstm_forward(X: np.ndarray, W: np.ndarray, U: np.ndarray, b: np.ndarray):
    """Run one direction over X (T, D); returns h (T, H) and caches."""
    T = X.shape[0]
    H = U.shape[1]
    i_s = np.zeros((T, H))
    f_s = np.zeros((T, H))
    g_s = np.zeros((T, H))
    o_s = np.zeros((T, H))
    c_s = np.zeros((T, H))
    h_s = np.zeros((T, H))
    h_prev = np.zeros(H)
    c_prev = np.zeros(H)
    for t in range(T):
        a = W @ X[t] + U @ h_prev + b
        i = _sigmoid(a[0:H])
        f = _sigmoid(a[H : 2 * H])
        g = np.tanh(a[2 * H : 3 * H])
        o = _sigmoid(a[3 * H : 4 * H])
        c = f * c_prev + i * g
        h = o * np.tanh(c)
        i_s[t], f_s[t], g_s[t], o_s[t], c_s[t], h_s[t] = i, f, g, o, c, h
        h_prev, c_prev = h, c
    return h_s, {"X": X, "i": i_s, "f": f_s, "g": g_s, "o": o_s, "c": c_s, "h": h_s}


def _lstm_backward(cache: dict, W: np.ndarray, U: np.ndarray, dh_seq: np.ndarray):
    """BPTT for one direction; dh_seq (T, H) is the upstream h gradient."""
    X, i_s, f_s, g_s, o_s, c_s, h_s = (
        cache["X"], cache["i"], cache["f"], cache["g"], cache["o"], cache["c"], cache["h"],
    )
    T, H = dh_seq.shape
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros(4 * H)
    dX = np.zeros_like(X)
    dh_carry = np.zeros(H)
    dc_carry = np.zeros(H)
    for t in range(T - 1, -1, -1):
        dh = dh_seq[t] + dh_carry
        tc = np.tanh(c_s[t])
        do = dh * tc
        dc = dh * o_s[t] * (1.0 - tc * tc) + dc_carry
        di = dc * g_s[t]
        dg = dc * i_s[t]
        c_prev = c_s[t - 1] if t > 0 else np.zeros(H)
        df = dc * c_prev
        dc_carry = dc * f_s[t]
        da = np.concatenate(
            [
                di * i_s[t] * (1.0 - i_s[t]),
                df * f_s[t] * (1.0 - f_s[t]),
                dg * (1.0 - g_s[t] * g_s[t]),
                do * o_s[t] * (1.0 - o_s[t]),
            ]
        )
        h_prev = h_s[t - 1] if t > 0 else np.zeros(H)
        dW += np.outer(da, X[t])
        dU += np.outer(da, h_prev)
        db += da
        dX[t] += W.T @ da
        dh_carry = U.T @ da
    return dW, dU, db, dX


def encode(features: InputFeatures, params: MTLParams) -> np.ndarray:
    """H matrix (T, proj_dim), one row per review token."""
    return _encode_cached(features, params)["H"]


def _encode_cached(features: InputFeatures, params: MTLParams) -> dict:
    config = params.config
    ids = np.asarray(features.review_ids, dtype=np.int64)
    if ids.size == 0:
        raise ValueError("cannot encode an empty review")
    X = params["emb"][ids]
    Xt = np.concatenate(
        [X, np.asarray(features.word_in_question, dtype=np.float64)[:, None]], axis=1
    )
    cache: dict = {"ids": ids, "Xt": Xt}
    if config.encoder == "lstm":
        h_f, cache_f = _lstm_forward(Xt, params["fwd_W"], params["fwd_U"], params["fwd_b"])
        h_b_rev, cache_b = _lstm_forward(
            Xt[::-1], params["bwd_W"], params["bwd_U"], params["bwd_b"]
        )
        Hprime = np.concatenate([h_f, h_b_rev[::-1]], axis=1)
        cache.update({"cache_f": cache_f, "cache_b": cache_b})
    else:
        Hprime = Xt @ params["in_W"].T + params["in_b"]
    if not np.all(np.isfinite(Hprime)):
        raise NumericalError("non-finite values in the recurrent encoder output")
    A = Hprime @ params["B"].T
    Hmat = np.tanh(A)
    if not np.all(np.isfinite(Hmat)):
        raise NumericalError("non-finite values in the tanh projection")
    cache.update({"Hprime": Hprime, "H": Hmat})
    return cache


def _encoder_backward(cache: dict, dH: np.ndarray, params: MTLParams) -> dict:
    """Push dL/dH back through projection, encoder, and embeddings."""
    config = params.config
    Hmat, Hprime, Xt = cache["H"], cache["Hprime"], cache["Xt"]
    dA = dH * (1.0 - Hmat * Hmat)
    grads: dict[str, np.ndarray] = {"B": dA.T @ Hprime}
    dHprime = dA @ params["B"]
    H = config.hidden_dim
    if config.encoder == "lstm":
        dW_f, dU_f, db_f, dX_f = _lstm_backward(
            cache["cache_f"], params["fwd_W"], params["fwd_U"], dHprime[:, :H]
        )
        dW_b, dU_b, db_b, dX_b_rev = _lstm_backward(
            cache["cache_b"], params["bwd_W"], params["bwd_U"], dHprime[:, H:][::-1]
        )
        grads.update(
            {
                "fwd_W": dW_f, "fwd_U": dU_f, "fwd_b": db_f,
                "bwd_W": dW_b, "bwd_U": dU_b, "bwd_b": db_b,
            }
        )
        dXt = dX_f + dX_b_rev[::-1]
    else:
        grads["in_W"] = dHprime.T @ Xt
        grads["in_b"] = dHprime.sum(axis=0)
        dXt = dHprime @ params["in_W"]
    demb = np.zeros_like(params["emb"])
    np.add.at(demb, cache["ids"], dXt[:, : config.emb_dim])
    grads["emb"] = demb
    return grads


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    ex = np.exp(shifted)
    return ex / ex.sum()


def _pair_score_terms(Hmat: np.ndarray, params: MTLParams):
    start_logits = Hmat @ params["w_start"]
    end_base = Hmat @ params["w_end"]
    return start_logits, end_base


def span_score(Hmat: np.ndarray, params: MTLParams, s: int, e: int) -> float:
    """Score of candidate span (s, e), both inclusive token indices."""
    start_logits, end_base = _pair_score_terms(Hmat, params)
    cond = float((Hmat[e] * Hmat[s]) @ params["w_end_cond"])
    return float(start_logits[s] + end_base[e] + cond)


def predict_span(
    Hmat: np.ndarray, params: MTLParams, allow_no_answer: bool = False
) -> SpanPrediction | str:
    """Argmax over valid (start <= end <= start+max_span_len) pairs.

    With ``allow_no_answer``, returns NO_ANSWER when the learned score z
    beats the best span pair.
    """
    T = Hmat.shape[0]
    max_len = params.config.max_span_len
    start_logits, end_base = _pair_score_terms(Hmat, params)
    cond_w = params["w_end_cond"]
    best = None
    for s in range(T):
        cond = (Hmat * Hmat[s]) @ cond_w
        hi = min(T - 1, s + max_len)
        for e in range(s, hi + 1):
            score = start_logits[s] + end_base[e] + cond[e]
            if best is None or score > best[0]:
                best = (score, s, e)
    assert best is not None
    if allow_no_answer and float(params["z"]) > best[0]:
        return NO_ANSWER
    return SpanPrediction(start=best[1], end=best[2], score=float(best[0]))


def predict_subjectivity(Hmat: np.ndarray, params: MTLParams) -> np.ndarray:
    """Probability pair (factual, subjective) from mean-pooled H."""
    pool = Hmat.mean(axis=0)
    s1 = np.maximum(params["W1"] @ pool, 0.0)
    return _softmax(params["W2"] @ s1)


# --------------------------------------------------------------- losses

def span_loss_and_grads(
    cache: dict, params: MTLParams, target: tuple[int, int] | None
) -> tuple[float, dict[str, np.ndarray], np.ndarray]:
    """Cross-entropy span loss; returns (loss, head grads, dL/dH)."""
    config = params.config
    Hmat = cache["H"]
    T = Hmat.shape[0]
    if target is None and not config.allow_no_answer:
        raise ValueError("unanswerable target requires allow_no_answer")
    grads: dict[str, np.ndarray] = {}
    dH = np.zeros_like(Hmat)

    start_logits = Hmat @ params["w_start"]
    if config.allow_no_answer:
        aug = np.append(start_logits, float(params["z"]))
        gold_start = T if target is None else target[0]
    else:
        aug = start_logits
        gold_start = target[0]
    p = _softmax(aug)
    loss = -np.log(max(p[gold_start], 1e-300))
    daug = p.copy()
    daug[gold_start] -= 1.0
    d_positions = daug[:T]
    grads["w_start"] = Hmat.T @ d_positions
    dH += np.outer(d_positions, params["w_start"])
    if config.allow_no_answer:
        grads["z"] = np.array(daug[T])

    if target is not None:
        s_gold, e_gold = target
        interact = Hmat * Hmat[s_gold]
        end_logits = Hmat @ params["w_end"] + interact @ params["w_end_cond"]
        q = _softmax(end_logits)
        loss = loss - np.log(max(q[e_gold], 1e-300))
        dq = q.copy()
        dq[e_gold] -= 1.0
        grads["w_end"] = Hmat.T @ dq
        grads["w_end_cond"] = interact.T @ dq
        dH += np.outer(dq, params["w_end"])
        dH += np.outer(dq, params["w_end_cond"] * Hmat[s_gold])
        dH[s_gold] += (dq[:, None] * (Hmat * params["w_end_cond"])).sum(axis=0)
    return float(loss), grads, dH


def subjectivity_loss_and_grads(
    cache: dict, params: MTLParams, target: int
) -> tuple[float, dict[str, np.ndarray], np.ndarray]:
    """Cross-entropy over the two subjectivity classes."""
    Hmat = cache["H"]
    T = Hmat.shape[0]
    pool = Hmat.mean(axis=0)
    a1 = params["W1"] @ pool
    s1 = np.maximum(a1, 0.0)
    logits = params["W2"] @ s1
    p = _softmax(logits)
    loss = -np.log(max(p[target], 1e-300))
    dlogits = p.copy()
    dlogits[target] -= 1.0
    grads = {"W2": np.outer(dlogits, s1)}
    ds1 = params["W2"].T @ dlogits
    da1 = ds1 * (a1 > 0)
    grads["W1"] = np.outer(da1, pool)
    dpool = params["W1"].T @ da1
    dH = np.tile(dpool / T, (T, 1))
    return float(loss), grads, dH


# sentinel: leave a loss out entirely (None is a real span target meaning
# UNANSWERABLE, so it cannot double as "skip")
SKIP = object()


def example_loss_and_grads(
    features: InputFeatures,
    params: MTLParams,
    span_target: tuple[int, int] | None | object = SKIP,
    subj_target: int | object = SKIP,
) -> tuple[float, dict[str, np.ndarray]]:
    """Total loss and full-parameter gradients for one example.

    Included losses are summed and their gradients flow through the
    shared encoder; pass SKIP to leave a head out of this step.
    """
    cache = _encode_cached(features, params)
    total = 0.0
    head_grads: dict[str, np.ndarray] = {}
    dH = np.zeros_like(cache["H"])
    if span_target is not SKIP:
        loss, grads, dH_part = span_loss_and_grads(cache, params, span_target)
        total += loss
        head_grads.update(grads)
        dH += dH_part
    if subj_target is not SKIP:
        loss, grads, dH_part = subjectivity_loss_and_grads(cache, params, subj_target)
        total += loss
        head_grads.update(grads)
        dH += dH_part
    enc_grads = _encoder_backward(cache, dH, params)
    enc_grads.update(head_grads)
    return total, enc_grads


# ---------------------------------------------------------- persistence
#
# JSON with base64 little-endian float64 payloads: byte-deterministic
# (unlike zip-based containers, which embed timestamps) and exact.

def save_params(params: MTLParams, path: str | Path) -> None:
    import base64

    payload = {
        "format_version": 1,
        "seed": params.seed,
        "frozen": sorted(params.frozen),
        "config": {
            "vocab_size": params.config.vocab_size,
            "emb_dim": params.config.emb_dim,
            "hidden_dim": params.config.hidden_dim,
            "proj_dim": params.config.proj_dim,
            "subj_hidden": params.config.subj_hidden,
            "encoder": params.config.encoder,
            "max_span_len": params.config.max_span_len,
            "allow_no_answer": params.config.allow_no_answer,
        },
        "tensors": {
            name: {
                "shape": list(t.shape),
                "data": base64.b64encode(
                    np.ascontiguousarray(t, dtype="<f8").tobytes()
                ).decode("ascii"),
            }
            for name, t in sorted(params.tensors.items())
        },
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_params(path: str | Path) -> MTLParams:
    import base64

    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if raw.get("format_version") != 1:
        raise ValueError(f"unsupported checkpoint version {raw.get('format_version')}")
    tensors = {
        name: np.frombuffer(
            base64.b64decode(rec["data"]), dtype="<f8"
        ).reshape(rec["shape"]).copy()
        for name, rec in raw["tensors"].items()
    }
    config = MTLConfig(**raw["config"])
    params = MTLParams(
        config=config,
        seed=raw["seed"],
        tensors=tensors,
        frozen=frozenset(raw["frozen"]),
    )
    expected = init_params(config, seed=0)
    for name, tensor in expected.tensors.items():
        if name not in tensors:
            raise ValueError(f"checkpoint missing tensor {name}")
        if tensors[name].shape != tensor.shape:
            raise ValueError(
                f"tensor {name} has shape {tensors[name].shape}, "
                f"expected {tensor.shape}"
            )
    return params
