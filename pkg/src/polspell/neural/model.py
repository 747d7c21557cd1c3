"""Character-level LSTM encoder-decoder corrector.

Unidirectional models have one encoder/decoder/projection chain. The
bidirectional model has two chains, one reading the error forwards and
one reading it reversed; each decoder yields a distribution per output
step and the two are averaged. Embeddings are shared by all chains.

The optional init hook replaces the fixed random start state of the
encoders with ``relu(A @ sum_l w_l * layer_l + a)`` split into (h, c),
computed from precomputed external per-token layer vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from polspell.neural.lstm import LstmCell, _step, unroll, unroll_backward
from polspell.neural.vocab import EOS, PAD, SOS, CharVocab


OBJECTIVES = ("separate", "mixture")


@dataclass(frozen=True)
class HookShape:
    layers: int
    dim: int


class Seq2SeqModel:
    """Parameters plus structure. ``params`` are trained; ``buffers`` are fixed."""

    def __init__(
        self,
        vocab: CharVocab,
        hidden: int,
        embed: int,
        bidirectional: bool,
        hook: HookShape | None,
        params: dict[str, np.ndarray],
        buffers: dict[str, np.ndarray] | None = None,
    ):
        self.vocab = vocab
        self.hidden = hidden
        self.embed = embed
        self.bidirectional = bidirectional
        self.hook = hook
        self.params = params
        self.buffers = buffers or {}
        self.loss_history: list[float] = []
        self._check_shapes()

    @property
    def directions(self) -> tuple[str, ...]:
        return ("fwd", "bwd") if self.bidirectional else ("fwd",)

    @property
    def mode(self) -> str:
        return "bi" if self.bidirectional else "uni"

    def encoder_cell(self, direction: str = "fwd") -> LstmCell:
        return LstmCell(self.params[f"enc.{direction}.W"], self.params[f"enc.{direction}.b"])

    def decoder_cell(self, direction: str = "fwd") -> LstmCell:
        return LstmCell(self.params[f"dec.{direction}.W"], self.params[f"dec.{direction}.b"])

    def expected_shapes(self) -> dict[str, tuple[int, ...]]:
        V, H, E = len(self.vocab), self.hidden, self.embed
        shapes: dict[str, tuple[int, ...]] = {"embedding": (V, E)}
        for d in self.directions:
            shapes[f"enc.{d}.W"] = (4 * H, E + H)
            shapes[f"enc.{d}.b"] = (4 * H,)
            shapes[f"dec.{d}.W"] = (4 * H, E + H)
            shapes[f"dec.{d}.b"] = (4 * H,)
            shapes[f"out.{d}.W"] = (H, V)
            shapes[f"out.{d}.b"] = (V,)
        if self.hook is not None:
            shapes["hook.weights"] = (self.hook.layers,)
            shapes["hook.W"] = (2 * H, self.hook.dim)
            shapes["hook.b"] = (2 * H,)
        return shapes

    def expected_buffers(self) -> dict[str, tuple[int, ...]]:
        if self.hook is not None:
            return {}
        shapes = {}
        for d in self.directions:
            shapes[f"init.{d}.h"] = (self.hidden,)
            shapes[f"init.{d}.c"] = (self.hidden,)
        return shapes

    def _check_shapes(self) -> None:
        for store, expected in ((self.params, self.expected_shapes()),
                                (self.buffers, self.expected_buffers())):
            if set(store) != set(expected):
                raise ValueError(f"tensor names {sorted(store)} != {sorted(expected)}")
            for name, shape in expected.items():
                if store[name].shape != shape:
                    raise ValueError(f"{name}: shape {store[name].shape}, expected {shape}")

    @classmethod
    def create(
        cls,
        vocab: CharVocab,
        hidden: int = 128,
        embed: int = 64,
        bidirectional: bool = False,
        hook: HookShape | None = None,
        seed: int = 0,
    ) -> "Seq2SeqModel":
        rng = np.random.default_rng(seed)
        V, H, E = len(vocab), hidden, embed
        params: dict[str, np.ndarray] = {"embedding": rng.normal(0.0, 0.1, (V, E))}
        buffers: dict[str, np.ndarray] = {}
        directions = ("fwd", "bwd") if bidirectional else ("fwd",)
        limit = np.sqrt(6.0 / (E + 2 * H))
        for d in directions:
            for part in ("enc", "dec"):
                params[f"{part}.{d}.W"] = rng.uniform(-limit, limit, (4 * H, E + H))
                b = np.zeros(4 * H)
                b[H:2 * H] = 1.0  # forget gate
                params[f"{part}.{d}.b"] = b
            out_limit = np.sqrt(6.0 / (H + V))
            params[f"out.{d}.W"] = rng.uniform(-out_limit, out_limit, (H, V))
            params[f"out.{d}.b"] = np.zeros(V)
            if hook is None:
                buffers[f"init.{d}.h"] = rng.normal(0.0, 0.1, H)
                buffers[f"init.{d}.c"] = rng.normal(0.0, 0.1, H)
        if hook is not None:
            hook_limit = np.sqrt(6.0 / (hook.dim + 2 * H))
            params["hook.weights"] = np.full(hook.layers, 1.0 / hook.layers)
            params["hook.W"] = rng.uniform(-hook_limit, hook_limit, (2 * H, hook.dim))
            params["hook.b"] = np.zeros(2 * H)
        return cls(vocab, hidden, embed, bidirectional, hook, params, buffers)

    def copy(self) -> "Seq2SeqModel":
        clone = Seq2SeqModel(
            self.vocab, self.hidden, self.embed, self.bidirectional, self.hook,
            {k: v.copy() for k, v in self.params.items()},
            {k: v.copy() for k, v in self.buffers.items()},
        )
        clone.loss_history = list(self.loss_history)
        return clone

    def layer_weights(self) -> tuple[float, ...] | None:
        if self.hook is None:
            return None
        return tuple(float(w) for w in self.params["hook.weights"])


# -- initial states ---------------------------------------------------------

def _external_batch(model: Seq2SeqModel, external: Sequence[np.ndarray] | None, batch: int):
    if model.hook is None:
        return None
    shape = (model.hook.layers, model.hook.dim)
    if external is None:
        return np.zeros((batch,) + shape)
    ext = np.asarray(external, dtype=np.float64)
    if ext.shape != (batch,) + shape:
        raise ValueError(f"external layers shape {ext.shape}, expected {(batch,) + shape}")
    return ext


def _initial_states(model: Seq2SeqModel, ext, batch: int):
    """Start (h, c) per direction, plus the hook cache when a hook is used."""
    H = model.hidden
    if model.hook is None:
        states = {
            d: (np.tile(model.buffers[f"init.{d}.h"], (batch, 1)),
                np.tile(model.buffers[f"init.{d}.c"], (batch, 1)))
            for d in model.directions
        }
        return states, None
    p = model.params
    mixed = np.einsum("l,bld->bd", p["hook.weights"], ext)
    pre = mixed @ p["hook.W"].T + p["hook.b"]
    r = np.maximum(pre, 0.0)
    states = {d: (r[:, :H], r[:, H:]) for d in model.directions}
    return states, (ext, mixed, pre)


def hook_state(model: Seq2SeqModel, layers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Initial (h, c) computed by the hook from one token's (L, D) layer stack."""
    states, _ = _initial_states(model, _external_batch(model, [layers], 1), 1)
    h, c = states["fwd"]
    return h[0], c[0]


# -- batching ---------------------------------------------------------------

def _pad(seqs: Sequence[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    T = max(len(s) for s in seqs)
    ids = np.full((T, len(seqs)), PAD, dtype=np.int64)
    mask = np.zeros((T, len(seqs)))
    for k, s in enumerate(seqs):
        ids[:len(s), k] = s
        mask[:len(s), k] = 1.0
    return ids, mask


def _softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def batch_loss(
    model: Seq2SeqModel,
    errors: Sequence[str],
    corrections: Sequence[str],
    external: Sequence[np.ndarray] | None = None,
    grads: bool = False,
    objective: str = "separate",
):
    """Teacher-forced mean per-character cross-entropy (nats).

    With two directions, ``objective="separate"`` averages the two
    decoders' own cross-entropies, while ``"mixture"`` scores the averaged
    distribution. The mixture gradient reaching each decoder is scaled by
    that decoder's share of the gold probability, which starves whichever
    chain starts out weaker, so "separate" is the training default. The
    two coincide for one direction. Arithmetic follows the dtype of
    ``model.params``.

    Returns ``(loss, gold_probs, grads)``; ``gold_probs`` is a (T, B) array
    of probabilities assigned to each gold character (EOS included, zero
    beyond each row's length) and ``grads`` is None unless requested.
    """
    if any(not e for e in errors):
        raise ValueError("empty error token")
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}")
    p = model.params
    vocab = model.vocab
    B = len(errors)
    emb = p["embedding"]
    ext = _external_batch(model, external, B)
    starts, hook_cache = _initial_states(model, ext, B)

    src = [vocab.encode(e) for e in errors]
    tgt = [vocab.encode(c) for c in corrections]
    dec_in, dec_mask = _pad([[SOS] + t for t in tgt])
    dec_out, _ = _pad([t + [EOS] for t in tgt])
    n_chars = dec_mask.sum()

    runs = {}
    for d in model.directions:
        seqs = src if d == "fwd" else [s[::-1] for s in src]
        enc_ids, enc_mask = _pad(seqs)
        h0, c0 = starts[d]
        hT, cT, _, enc_cache = unroll(
            p[f"enc.{d}.W"], p[f"enc.{d}.b"], emb[enc_ids], h0, c0, enc_mask
        )
        _, _, hs, dec_cache = unroll(p[f"dec.{d}.W"], p[f"dec.{d}.b"], emb[dec_in], hT, cT)
        hs = np.stack(hs)
        probs = _softmax(hs @ p[f"out.{d}.W"] + p[f"out.{d}.b"])
        runs[d] = (enc_ids, enc_mask, enc_cache, hs, dec_cache, probs)

    n_dir = len(model.directions)
    gold = {
        d: np.take_along_axis(runs[d][5], dec_out[..., None], axis=-1)[..., 0]
        for d in model.directions
    }
    gold_mix = sum(gold.values()) / n_dir
    gold_mix = np.where(dec_mask > 0, gold_mix, 1.0)
    # kept as numpy scalars so extended-precision callers keep their precision
    if objective == "mixture":
        loss = -np.sum(dec_mask * np.log(gold_mix)) / n_chars
    else:
        loss = sum(
            -np.sum(dec_mask * np.log(np.where(dec_mask > 0, gold[d], 1.0)))
            for d in model.directions
        ) / (n_dir * n_chars)
    gold_probs = gold_mix * dec_mask
    if not grads:
        return loss, gold_probs, None

    g = {k: np.zeros_like(v) for k, v in p.items()}
    onehot = np.zeros_like(runs[model.directions[0]][5])
    np.put_along_axis(onehot, dec_out[..., None], 1.0, axis=-1)
    d_start = {}
    for d in model.directions:
        enc_ids, enc_mask, enc_cache, hs, dec_cache, probs = runs[d]
        if objective == "mixture":
            scale = dec_mask * gold[d] / (n_dir * gold_mix) / n_chars
        else:
            scale = dec_mask / (n_dir * n_chars)
        dlogits = scale[..., None] * (probs - onehot)
        g[f"out.{d}.W"] += np.einsum("tbh,tbv->hv", hs, dlogits)
        g[f"out.{d}.b"] += dlogits.sum(axis=(0, 1))
        dhs = dlogits @ p[f"out.{d}.W"].T
        zero = np.zeros((B, model.hidden))
        dX, dh, dc = unroll_backward(
            p[f"dec.{d}.W"], dec_cache, zero, zero, g[f"dec.{d}.W"], g[f"dec.{d}.b"], dhs=dhs
        )
        np.add.at(g["embedding"], dec_in, np.stack(dX))
        dX, dh0, dc0 = unroll_backward(
            p[f"enc.{d}.W"], enc_cache, dh, dc, g[f"enc.{d}.W"], g[f"enc.{d}.b"], mask=enc_mask
        )
        np.add.at(g["embedding"], enc_ids, np.stack(dX))
        d_start[d] = (dh0, dc0)

    if hook_cache is not None:
        ext, mixed, pre = hook_cache
        dr = sum(np.concatenate(d_start[d], axis=1) for d in model.directions)
        dpre = dr * (pre > 0)
        g["hook.W"] += dpre.T @ mixed
        g["hook.b"] += dpre.sum(axis=0)
        dmixed = dpre @ p["hook.W"]
        g["hook.weights"] += np.einsum("bd,bld->l", dmixed, ext)
    return loss, gold_probs, g


# -- inference --------------------------------------------------------------

def encode(model: Seq2SeqModel, token: str, external: np.ndarray | None = None):
    """Final encoder (h, c) per direction for one token, as 1-D arrays."""
    if not token:
        raise ValueError("cannot encode an empty token")
    ext = _external_batch(model, None if external is None else [external], 1)
    starts, _ = _initial_states(model, ext, 1)
    ids = model.vocab.encode(token)
    p = model.params
    states = {}
    for d in model.directions:
        seq = ids if d == "fwd" else ids[::-1]
        h, c = starts[d]
        for idx in seq:
            h, c, _ = _step(p[f"enc.{d}.W"], p[f"enc.{d}.b"], p["embedding"][[idx]], h, c)
        states[d] = (h[0], c[0])
    return states


def step_distribution(model: Seq2SeqModel, states, prev: int):
    """Advance every direction's decoder by one input symbol.

    Returns the averaged, renormalized next-symbol distribution and the
    new per-direction states.
    """
    p = model.params
    x = p["embedding"][[prev]]
    dists = []
    new_states = {}
    for d in model.directions:
        h, c = states[d]
        h, c, _ = _step(p[f"dec.{d}.W"], p[f"dec.{d}.b"], x, h[None, :], c[None, :])
        dists.append(_softmax(h[0] @ p[f"out.{d}.W"] + p[f"out.{d}.b"]))
        new_states[d] = (h[0], c[0])
    mixed = sum(dists) / len(dists)
    return mixed / mixed.sum(), new_states


def decode_greedy(model: Seq2SeqModel, enc, max_len: int) -> tuple[str, list[float]]:
    """Greedy argmax decoding from SOS until EOS or ``max_len`` steps.

    The probability list includes the EOS step when EOS is emitted. Ties
    go to the lowest vocabulary index.
    """
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    states = dict(enc)
    prev = SOS
    out = []
    probs = []
    for _ in range(max_len):
        dist, states = step_distribution(model, states, prev)
        best = int(np.argmax(dist))
        probs.append(float(dist[best]))
        if best == EOS:
            break
        out.append(best)
        prev = best
    return model.vocab.decode(out), probs


def correct_token(
    model: Seq2SeqModel, token: str, external: np.ndarray | None = None, extra_len: int = 8
) -> tuple[str, list[float]]:
    return decode_greedy(model, encode(model, token, external), len(token) + extra_len)


def lookup_layers(model: Seq2SeqModel, layers: Mapping[str, np.ndarray] | None, tokens):
    """External layer stacks for a batch; tokens without an entry get zeros."""
    if model.hook is None:
        return None
    zeros = np.zeros((model.hook.layers, model.hook.dim))
    if layers is None:
        return [zeros for _ in tokens]
    return [layers.get(t, zeros) for t in tokens]
