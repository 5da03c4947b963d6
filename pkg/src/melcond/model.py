"""Pitch and Duration networks under selectable conditioning inputs.

Each network predicts its own token stream one step ahead. The input at
step t is an information vector: the concatenation of the self embedding
(pitch for the Pitch network, duration for the Duration network) with the
embeddings of whatever conditioning inputs the configuration activates:

* inter: the partner sequence's embedding,
* chord: an encoding of the chord sounding at note t,
* next_chord: the same encoder (separate weights) applied to note t+1's
  chord (the final step reuses the current chord),
* barpos: the note's bar-position embedding.

The information vector runs through a single linear + batch-norm + ReLU
encoder, a 2-layer LSTM, and a paired-linear decoder whose hidden width
is the arithmetic mean (rounded half up) of the LSTM width and the
vocabulary, ending in log-softmax. The output at step t is the
distribution over step t+1's token.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, ShapeMismatch
from .grid import BARPOS_VOCAB, DURATION_VOCAB, PITCH_VOCAB, ROOT_VOCAB
from .nn import layers as L
from .nn.lstm import init_lstm_params, layer_params, lstm_backward, lstm_forward
from .nn.params import ParameterStore

PITCH_EMBED = 8
DURATION_EMBED = 4
ROOT_EMBED = 2
BARPOS_EMBED = 8
PCV_ENCODED = 4
CHORD_EMBED = 8
PCV_BITS = 12

LSTM_LAYERS = 2
LSTM_DROPOUT = 0.2


def _round_half_up(x):
    return int(np.floor(x + 0.5))


@dataclass(frozen=True)
class ConditioningConfig:
    inter: bool = False
    chord: bool = False
    next_chord: bool = False
    barpos: bool = False

    def __post_init__(self):
        # next-chord without chord exists only as the standalone N row
        if self.next_chord and not self.chord and (self.inter or self.barpos):
            raise InvalidArgument(
                f"{self.flags()!r} is not one of the 13 studied configurations")

    def flags(self):
        return "".join(letter for letter, on in
                       (("C", self.chord), ("N", self.next_chord),
                        ("I", self.inter), ("B", self.barpos)) if on)

    @property
    def abbrev(self):
        return self.flags() or "No-Cond"

    def active_inputs(self):
        """The condition letters this configuration switches on."""
        return tuple(self.flags())

    @classmethod
    def from_abbrev(cls, abbrev):
        if abbrev == "No-Cond":
            return cls()
        letters = set(abbrev)
        if letters - set("CNIB") or len(abbrev) != len(letters):
            raise InvalidArgument(f"unknown configuration abbreviation {abbrev!r}")
        config = cls(inter="I" in letters, chord="C" in letters,
                     next_chord="N" in letters, barpos="B" in letters)
        if config.abbrev != abbrev:
            raise InvalidArgument(
                f"{abbrev!r}: letters must appear in C, N, I, B order")
        return config


# the 13 studied rows, in presentation order
CONFIG_ABBREVS = ("No-Cond", "I", "C", "N", "B", "CI", "CN", "CB", "IB",
                  "CNI", "CNB", "CIB", "CNIB")


def all_configs():
    return [ConditioningConfig.from_abbrev(a) for a in CONFIG_ABBREVS]


def config_fingerprint(config):
    """Hash of the canonical configuration string, stored in checkpoints."""
    canonical = f"P|D:{config.abbrev}"
    return hashlib.sha256(canonical.encode("ascii")).hexdigest()


@dataclass(frozen=True)
class NetworkSpec:
    target: str  # "pitch" or "duration"
    config: ConditioningConfig
    hidden_size: int = 256

    def __post_init__(self):
        if self.target not in ("pitch", "duration"):
            raise InvalidArgument(f"unknown target {self.target!r}")
        if self.hidden_size < 1:
            raise InvalidArgument("hidden_size must be positive")

    @property
    def self_vocab(self):
        return PITCH_VOCAB if self.target == "pitch" else DURATION_VOCAB

    @property
    def self_embed(self):
        return PITCH_EMBED if self.target == "pitch" else DURATION_EMBED

    @property
    def inter_vocab(self):
        return DURATION_VOCAB if self.target == "pitch" else PITCH_VOCAB

    @property
    def inter_embed(self):
        return DURATION_EMBED if self.target == "pitch" else PITCH_EMBED

    @property
    def vocab_out(self):
        return self.self_vocab

    @property
    def info_width(self):
        width = self.self_embed
        if self.config.inter:
            width += self.inter_embed
        if self.config.chord:
            width += CHORD_EMBED
        if self.config.next_chord:
            width += CHORD_EMBED
        if self.config.barpos:
            width += BARPOS_EMBED
        return width

    @property
    def decoder_mid(self):
        return _round_half_up((self.hidden_size + self.vocab_out) / 2)

    @property
    def pcv_mid(self):
        return _round_half_up((PCV_BITS + PCV_ENCODED) / 2)

    @property
    def chord_mix_mid(self):
        return _round_half_up((ROOT_EMBED + PCV_ENCODED + CHORD_EMBED) / 2)


def _uniform(rng, shape, fan_in):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, shape)


def _add_linear(store, rng, prefix, out_width, in_width):
    store.add(f"{prefix}.W", _uniform(rng, (out_width, in_width), in_width))
    store.add(f"{prefix}.b", np.zeros(out_width, dtype=np.float32))


def _add_batchnorm(store, prefix, width):
    store.add(f"{prefix}.scale", np.ones(width, dtype=np.float32))
    store.add(f"{prefix}.shift", np.zeros(width, dtype=np.float32))
    store.add(f"{prefix}.running_mean", np.zeros(width, dtype=np.float32), trainable=False)
    store.add(f"{prefix}.running_var", np.ones(width, dtype=np.float32), trainable=False)


class CondNetwork:
    """One network (pitch or duration) for a fixed spec, holding its own
    parameters; construction is deterministic for a given seed."""

    def __init__(self, spec, seed, dropout=LSTM_DROPOUT, dtype=np.float32):
        self.spec = spec
        self.seed = seed
        self.dropout = dropout
        self.store = ParameterStore(dtype=dtype)
        self.dtype = self.store.dtype
        rng = np.random.default_rng(seed)
        store = self.store

        store.add("embed.self", _uniform(rng, (spec.self_vocab, spec.self_embed),
                                         spec.self_embed))
        if spec.config.inter:
            store.add("embed.inter", _uniform(rng, (spec.inter_vocab, spec.inter_embed),
                                              spec.inter_embed))
        if spec.config.chord:
            self._add_chord_branch(rng, "chord")
        if spec.config.next_chord:
            self._add_chord_branch(rng, "nextchord")
        if spec.config.barpos:
            store.add("embed.barpos", _uniform(rng, (BARPOS_VOCAB, BARPOS_EMBED),
                                               BARPOS_EMBED))

        _add_linear(store, rng, "encoder.fc", spec.hidden_size, spec.info_width)
        _add_batchnorm(store, "encoder.bn", spec.hidden_size)
        init_lstm_params(store, "lstm", spec.hidden_size, spec.hidden_size,
                         LSTM_LAYERS, rng)
        _add_linear(store, rng, "decoder.fc1", spec.decoder_mid, spec.hidden_size)
        _add_batchnorm(store, "decoder.bn", spec.decoder_mid)
        _add_linear(store, rng, "decoder.fc2", spec.vocab_out, spec.decoder_mid)

    def _add_chord_branch(self, rng, prefix):
        spec = self.spec
        self.store.add(f"{prefix}.root_embed",
                       _uniform(rng, (ROOT_VOCAB, ROOT_EMBED), ROOT_EMBED))
        _add_linear(self.store, rng, f"{prefix}.pcv_fc1", spec.pcv_mid, PCV_BITS)
        _add_batchnorm(self.store, f"{prefix}.pcv_bn", spec.pcv_mid)
        _add_linear(self.store, rng, f"{prefix}.pcv_fc2", PCV_ENCODED, spec.pcv_mid)
        mix_in = ROOT_EMBED + PCV_ENCODED
        _add_linear(self.store, rng, f"{prefix}.mix_fc1", spec.chord_mix_mid, mix_in)
        _add_batchnorm(self.store, f"{prefix}.mix_bn", spec.chord_mix_mid)
        _add_linear(self.store, rng, f"{prefix}.mix_fc2", CHORD_EMBED, spec.chord_mix_mid)

    # --- chord encoder ---

    def encode_chord(self, prefix, roots, pcvs, train, update_running=True):
        """Roots (M,) and pitch-class vectors (M, 12) to embeddings (M, 8)."""
        store = self.store
        pcvs = np.asarray(pcvs, dtype=self.dtype)
        if pcvs.ndim != 2 or pcvs.shape[1] != PCV_BITS:
            raise ShapeMismatch(f"pitch-class vectors must be (M, 12), got {pcvs.shape}")
        root_e = L.embedding_forward(store[f"{prefix}.root_embed"], roots)
        p1 = L.linear_forward(pcvs, store[f"{prefix}.pcv_fc1.W"], store[f"{prefix}.pcv_fc1.b"])
        p1n, pcv_bn = L.batchnorm_forward(
            p1, store[f"{prefix}.pcv_bn.scale"], store[f"{prefix}.pcv_bn.shift"],
            store[f"{prefix}.pcv_bn.running_mean"], store[f"{prefix}.pcv_bn.running_var"],
            train, update_running=update_running)
        p1r = L.relu_forward(p1n)
        pcv_enc = L.linear_forward(p1r, store[f"{prefix}.pcv_fc2.W"],
                                   store[f"{prefix}.pcv_fc2.b"])
        mix_in = np.concatenate([root_e, pcv_enc], axis=1)
        m1 = L.linear_forward(mix_in, store[f"{prefix}.mix_fc1.W"], store[f"{prefix}.mix_fc1.b"])
        m1n, mix_bn = L.batchnorm_forward(
            m1, store[f"{prefix}.mix_bn.scale"], store[f"{prefix}.mix_bn.shift"],
            store[f"{prefix}.mix_bn.running_mean"], store[f"{prefix}.mix_bn.running_var"],
            train, update_running=update_running)
        m1r = L.relu_forward(m1n)
        out = L.linear_forward(m1r, store[f"{prefix}.mix_fc2.W"], store[f"{prefix}.mix_fc2.b"])
        cache = (roots, pcvs, p1n, pcv_bn, p1r, mix_in, m1n, mix_bn, m1r)
        return out, cache

    def _chord_backward(self, prefix, d_out, cache):
        store = self.store
        roots, pcvs, p1n, pcv_bn, p1r, mix_in, m1n, mix_bn, m1r = cache
        d_m1r, dW, db = L.linear_backward(d_out, m1r, store[f"{prefix}.mix_fc2.W"])
        store.accumulate(f"{prefix}.mix_fc2.W", dW)
        store.accumulate(f"{prefix}.mix_fc2.b", db)
        d_m1n = L.relu_backward(d_m1r, m1n)
        d_m1, dscale, dshift = L.batchnorm_backward(d_m1n, mix_bn)
        store.accumulate(f"{prefix}.mix_bn.scale", dscale)
        store.accumulate(f"{prefix}.mix_bn.shift", dshift)
        d_mix_in, dW, db = L.linear_backward(d_m1, mix_in, store[f"{prefix}.mix_fc1.W"])
        store.accumulate(f"{prefix}.mix_fc1.W", dW)
        store.accumulate(f"{prefix}.mix_fc1.b", db)
        d_root = d_mix_in[:, :ROOT_EMBED]
        d_pcv_enc = d_mix_in[:, ROOT_EMBED:]
        L.embedding_backward(d_root, roots, store.grad(f"{prefix}.root_embed"))
        d_p1r, dW, db = L.linear_backward(d_pcv_enc, p1r, store[f"{prefix}.pcv_fc2.W"])
        store.accumulate(f"{prefix}.pcv_fc2.W", dW)
        store.accumulate(f"{prefix}.pcv_fc2.b", db)
        d_p1n = L.relu_backward(d_p1r, p1n)
        d_p1, dscale, dshift = L.batchnorm_backward(d_p1n, pcv_bn)
        store.accumulate(f"{prefix}.pcv_bn.scale", dscale)
        store.accumulate(f"{prefix}.pcv_bn.shift", dshift)
        _, dW, db = L.linear_backward(d_p1, pcvs, store[f"{prefix}.pcv_fc1.W"])
        store.accumulate(f"{prefix}.pcv_fc1.W", dW)
        store.accumulate(f"{prefix}.pcv_fc1.b", db)

    # --- information vector ---

    def build_info(self, batch, train, update_running=True):
        """Embed and concatenate the active inputs into (T, N, info_width)."""
        spec = self.spec
        tokens = np.asarray(batch["self"])
        T, N = tokens.shape
        feats = []
        slices = {}
        caches = {}
        cursor = 0

        def push(name, block):
            nonlocal cursor
            feats.append(block.astype(self.dtype, copy=False))
            slices[name] = (cursor, cursor + block.shape[-1])
            cursor += block.shape[-1]

        push("self", L.embedding_forward(self.store["embed.self"], tokens))
        if spec.config.inter:
            push("inter", L.embedding_forward(self.store["embed.inter"],
                                              np.asarray(batch["inter"])))
        if spec.config.chord:
            out, cache = self.encode_chord(
                "chord", np.asarray(batch["chord_root"]).reshape(-1),
                np.asarray(batch["chord_pcv"]).reshape(-1, PCV_BITS),
                train, update_running)
            caches["chord"] = cache
            push("chord", out.reshape(T, N, CHORD_EMBED))
        if spec.config.next_chord:
            out, cache = self.encode_chord(
                "nextchord", np.asarray(batch["next_root"]).reshape(-1),
                np.asarray(batch["next_pcv"]).reshape(-1, PCV_BITS),
                train, update_running)
            caches["nextchord"] = cache
            push("nextchord", out.reshape(T, N, CHORD_EMBED))
        if spec.config.barpos:
            push("barpos", L.embedding_forward(self.store["embed.barpos"],
                                               np.asarray(batch["barpos"])))
        info = np.concatenate(feats, axis=2) if len(feats) > 1 else feats[0]
        if info.shape[2] != spec.info_width:
            raise ShapeMismatch(f"info width {info.shape[2]} != spec {spec.info_width}")
        info_cache = (batch, slices, caches, (T, N))
        return np.ascontiguousarray(info), info_cache

    def _info_backward(self, d_info, info_cache):
        batch, slices, caches, (T, N) = info_cache
        store = self.store

        def chunk(name):
            lo, hi = slices[name]
            return d_info[:, :, lo:hi]

        L.embedding_backward(chunk("self"), np.asarray(batch["self"]),
                             store.grad("embed.self"))
        if "inter" in slices:
            L.embedding_backward(chunk("inter"), np.asarray(batch["inter"]),
                                 store.grad("embed.inter"))
        if "chord" in slices:
            self._chord_backward("chord", chunk("chord").reshape(T * N, CHORD_EMBED),
                                 caches["chord"])
        if "nextchord" in slices:
            self._chord_backward("nextchord",
                                 chunk("nextchord").reshape(T * N, CHORD_EMBED),
                                 caches["nextchord"])
        if "barpos" in slices:
            L.embedding_backward(chunk("barpos"), np.asarray(batch["barpos"]),
                                 store.grad("embed.barpos"))

    # --- encoder -> LSTM -> decoder ---

    def forward_from_info(self, info, train, rng=None, initial_state=None,
                          update_running=True, dropout_masks=None):
        """Per-step class log-probabilities (T, N, vocab) from info vectors."""
        spec = self.spec
        store = self.store
        T, N, width = info.shape
        if width != spec.info_width:
            raise ShapeMismatch(f"info width {width} != spec {spec.info_width}")
        H = spec.hidden_size
        flat = info.reshape(T * N, width)
        e1 = L.linear_forward(flat, store["encoder.fc.W"], store["encoder.fc.b"])
        e1n, enc_bn = L.batchnorm_forward(
            e1, store["encoder.bn.scale"], store["encoder.bn.shift"],
            store["encoder.bn.running_mean"], store["encoder.bn.running_var"],
            train, update_running=update_running)
        e1r = L.relu_forward(e1n)

        if initial_state is None:
            h0 = np.zeros((LSTM_LAYERS, N, H), dtype=self.dtype)
            c0 = np.zeros((LSTM_LAYERS, N, H), dtype=self.dtype)
        else:
            h0, c0 = initial_state
        lstm_p = layer_params(store, "lstm", LSTM_LAYERS)
        y, hT, cT, lstm_cache = lstm_forward(
            lstm_p, e1r.reshape(T, N, H), h0, c0, train=train,
            dropout_p=self.dropout, rng=rng, dropout_masks=dropout_masks)

        yflat = y.reshape(T * N, H)
        d1 = L.linear_forward(yflat, store["decoder.fc1.W"], store["decoder.fc1.b"])
        d1n, dec_bn = L.batchnorm_forward(
            d1, store["decoder.bn.scale"], store["decoder.bn.shift"],
            store["decoder.bn.running_mean"], store["decoder.bn.running_var"],
            train, update_running=update_running)
        d1r = L.relu_forward(d1n)
        logits = L.linear_forward(d1r, store["decoder.fc2.W"], store["decoder.fc2.b"])
        logp = L.log_softmax_forward(logits)
        net_cache = {
            "flat": flat, "e1n": e1n, "enc_bn": enc_bn, "e1r_shape": (T, N, H),
            "lstm": lstm_cache, "yflat": yflat, "d1n": d1n, "dec_bn": dec_bn,
            "d1r": d1r, "logp": logp, "state": (hT, cT),
        }
        return logp.reshape(T, N, spec.vocab_out), net_cache

    def forward(self, batch, train, rng=None, initial_state=None,
                update_running=True, dropout_masks=None):
        info, info_cache = self.build_info(batch, train, update_running)
        logp, net_cache = self.forward_from_info(
            info, train, rng=rng, initial_state=initial_state,
            update_running=update_running, dropout_masks=dropout_masks)
        return logp, (info_cache, net_cache)

    def backward(self, d_logp, cache):
        """Accumulate gradients for a forward pass into the store."""
        info_cache, net_cache = cache
        store = self.store
        T, N, V = d_logp.shape
        d_flat = d_logp.reshape(T * N, V)
        d_logits = L.log_softmax_backward(d_flat, net_cache["logp"])
        d_d1r, dW, db = L.linear_backward(d_logits, net_cache["d1r"], store["decoder.fc2.W"])
        store.accumulate("decoder.fc2.W", dW)
        store.accumulate("decoder.fc2.b", db)
        d_d1n = L.relu_backward(d_d1r, net_cache["d1n"])
        d_d1, dscale, dshift = L.batchnorm_backward(d_d1n, net_cache["dec_bn"])
        store.accumulate("decoder.bn.scale", dscale)
        store.accumulate("decoder.bn.shift", dshift)
        d_y, dW, db = L.linear_backward(d_d1, net_cache["yflat"], store["decoder.fc1.W"])
        store.accumulate("decoder.fc1.W", dW)
        store.accumulate("decoder.fc1.b", db)

        (T2, N2, H) = net_cache["e1r_shape"]
        d_lstm_in, lstm_grads, _, _ = lstm_backward(d_y.reshape(T2, N2, H),
                                                    net_cache["lstm"])
        for layer, (dWx, dWh, dbias) in enumerate(lstm_grads):
            store.accumulate(f"lstm.l{layer}.Wx", dWx)
            store.accumulate(f"lstm.l{layer}.Wh", dWh)
            store.accumulate(f"lstm.l{layer}.b", dbias)

        d_e1r = d_lstm_in.reshape(T2 * N2, H)
        d_e1n = L.relu_backward(d_e1r, net_cache["e1n"])
        d_e1, dscale, dshift = L.batchnorm_backward(d_e1n, net_cache["enc_bn"])
        store.accumulate("encoder.bn.scale", dscale)
        store.accumulate("encoder.bn.shift", dshift)
        d_info_flat, dW, db = L.linear_backward(d_e1, net_cache["flat"], store["encoder.fc.W"])
        store.accumulate("encoder.fc.W", dW)
        store.accumulate("encoder.fc.b", db)
        self._info_backward(d_info_flat.reshape(T, N, -1), info_cache)

    # --- losses ---

    def loss(self, batch, train, rng=None, update_running=True, dropout_masks=None):
        """NLL of next-step targets under the mask; returns (loss, d_logp, cache)."""
        logp, cache = self.forward(batch, train, rng=rng,
                                   update_running=update_running,
                                   dropout_masks=dropout_masks)
        T, N, V = logp.shape
        value, d_flat = L.nll_loss(logp.reshape(T * N, V),
                                   np.asarray(batch["targets"]).reshape(-1),
                                   np.asarray(batch["mask"]).reshape(-1))
        return value, d_flat.reshape(T, N, V), cache

    def train_step(self, batch, rng):
        """Forward, backward and gradient accumulation; returns the loss."""
        self.store.zero_grads()
        value, d_logp, cache = self.loss(batch, train=True, rng=rng)
        self.backward(d_logp, cache)
        return value
