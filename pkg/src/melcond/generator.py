"""Autoregressive melody generation over a source lead sheet's harmony.

The first ``seed_len`` notes of the source warm both networks' LSTM
states; after that, each step samples the next pitch and duration from
the two temperature-scaled softmax outputs (pitch first, then duration;
no information crosses between the networks within a step). A tick clock
advances by the sampled duration and drives the bar-position token and
the chord lookups against the source progression. Generation stops when
the clock reaches the end of the progression or ``max_notes`` is hit.

Batch-norm layers run in eval mode throughout (effective batch size 1).
"""

from dataclasses import dataclass, field

import numpy as np

from .chords import pitch_class_vector
from .errors import FingerprintMismatch, InvalidArgument, SeedTooShort
from .grid import TICKS_PER_BAR
from .model import LSTM_LAYERS, CondNetwork, ConditioningConfig, NetworkSpec
from .tokenizer import ChordSymbol, TokenizedSong, default_duration_dictionary, tokenize

DEFAULT_SEED_LEN = 10


@dataclass
class GenerationRequest:
    pitch_checkpoint: object      # (arrays, meta) as returned by load_checkpoint
    duration_checkpoint: object
    source: object                # LeadSheet supplying the seed and harmony
    seed_len: int = DEFAULT_SEED_LEN
    temperature: float = 1.0
    rng_seed: int = 0
    max_notes: int = 1024


@dataclass
class GeneratedMelody:
    tokens: TokenizedSong
    provenance: dict = field(default_factory=dict)


def network_from_checkpoint(checkpoint):
    """Rebuild a CondNetwork from (arrays, meta)."""
    arrays, meta = checkpoint
    spec = NetworkSpec(meta["target"], ConditioningConfig.from_abbrev(meta["config"]),
                       hidden_size=int(meta["hidden_size"]))
    net = CondNetwork(spec, seed=0)
    weights = {k: v for k, v in arrays.items() if not k.startswith("opt.")}
    net.store.restore(weights)
    return net


class _StepState:
    """Carries one network's recurrent state across generation steps."""

    def __init__(self, net):
        self.net = net
        h = np.zeros((LSTM_LAYERS, 1, net.spec.hidden_size), dtype=net.dtype)
        self.state = (h, h.copy())

    def step(self, note):
        """Feed one note's inputs; returns log-probabilities for the next token."""
        batch = {
            "self": np.array([[note["pitch" if self.net.spec.target == "pitch"
                                    else "duration"]]]),
            "inter": np.array([[note["duration" if self.net.spec.target == "pitch"
                                     else "pitch"]]]),
            "barpos": np.array([[note["barpos"]]]),
            "chord_root": np.array([[note["chord"].root]]),
            "chord_pcv": np.array(note["chord"].pcv, np.float32).reshape(1, 1, 12),
            "next_root": np.array([[note["next_chord"].root]]),
            "next_pcv": np.array(note["next_chord"].pcv, np.float32).reshape(1, 1, 12),
        }
        logp, cache = self.net.forward(batch, train=False,
                                       initial_state=self.state)
        _, net_cache = cache
        self.state = net_cache["state"]
        return logp[0, 0]


def _sample(log_probs, temperature, rng):
    probs = np.exp(log_probs.astype(np.float64))
    total = probs.sum()
    assert abs(total - 1.0) < 1e-5, f"model output is not a distribution (sum {total})"
    if temperature <= 0.0:
        return int(np.argmax(log_probs))
    if temperature != 1.0:
        probs = np.exp(log_probs.astype(np.float64) / temperature)
    probs /= probs.sum()
    return int(rng.choice(len(probs), p=probs))


def _chord_lookup(song, symbols):
    """tick -> ChordSymbol against the source progression; past the end the
    final chord is reused."""
    total = song.total_ticks()

    def lookup(tick):
        tick = min(max(tick, 0), total - 1)
        bar = song.bars[tick // TICKS_PER_BAR]
        onset = tick % TICKS_PER_BAR
        active = bar.chords[0]
        for chord in bar.chords:
            if chord.onset <= onset:
                active = chord
            else:
                break
        return symbols.symbol_for(active)

    return lookup


class _SymbolCache:
    def __init__(self, tokens):
        self._by_key = {}
        for symbol in tokens.chord:
            self._by_key.setdefault((symbol.root, symbol.pcv), symbol)

    def symbol_for(self, chord_event):
        key = (chord_event.root, pitch_class_vector(chord_event.root, chord_event.kind))
        if key not in self._by_key:
            self._by_key[key] = ChordSymbol(key[0], key[1])
        return self._by_key[key]


def generate(request, dictionary=None, kind_table=None):
    """Run one generation; deterministic for a given request."""
    dictionary = dictionary or default_duration_dictionary()
    pitch_net = network_from_checkpoint(request.pitch_checkpoint)
    duration_net = network_from_checkpoint(request.duration_checkpoint)
    fp_p = request.pitch_checkpoint[1]["fingerprint"]
    fp_d = request.duration_checkpoint[1]["fingerprint"]
    if fp_p != fp_d:
        raise FingerprintMismatch(
            f"pitch checkpoint {fp_p[:12]} vs duration checkpoint {fp_d[:12]}")
    if request.seed_len < 1:
        raise InvalidArgument("seed_len must be >= 1")

    source_tokens = tokenize(request.source, dictionary, kind_table)
    if len(source_tokens) < request.seed_len:
        raise SeedTooShort(
            f"source has {len(source_tokens)} notes, seed needs {request.seed_len}")

    symbols = _SymbolCache(source_tokens)
    chord_at = _chord_lookup(request.source, symbols)
    total_ticks = request.source.total_ticks()
    rng = np.random.default_rng(request.rng_seed)

    pitch_state = _StepState(pitch_net)
    duration_state = _StepState(duration_net)

    out = TokenizedSong(pitch=[], duration=[], chord=[], barpos=[],
                        title=f"generated/{request.source.title}")
    clock = 0
    # warm both networks on the seed prefix
    pitch_logp = duration_logp = None
    for t in range(request.seed_len):
        ticks = dictionary.ticks_for_token(source_tokens.duration[t])
        next_chord = (source_tokens.chord[t + 1] if t + 1 < len(source_tokens)
                      else chord_at(clock + ticks))
        note = {
            "pitch": source_tokens.pitch[t],
            "duration": source_tokens.duration[t],
            "barpos": source_tokens.barpos[t],
            "chord": source_tokens.chord[t],
            "next_chord": next_chord,
        }
        out.pitch.append(note["pitch"])
        out.duration.append(note["duration"])
        out.barpos.append(note["barpos"])
        out.chord.append(note["chord"])
        pitch_logp = pitch_state.step(note)
        duration_logp = duration_state.step(note)
        clock += ticks

    while clock < total_ticks and len(out) < request.max_notes:
        pitch_token = _sample(pitch_logp, request.temperature, rng)
        duration_token = _sample(duration_logp, request.temperature, rng)
        ticks = dictionary.ticks_for_token(duration_token)
        note = {
            "pitch": pitch_token,
            "duration": duration_token,
            "barpos": clock % TICKS_PER_BAR,
            "chord": chord_at(clock),
            "next_chord": chord_at(clock + ticks),
        }
        out.pitch.append(pitch_token)
        out.duration.append(duration_token)
        out.barpos.append(note["barpos"])
        out.chord.append(note["chord"])
        clock += ticks
        if clock >= total_ticks or len(out) >= request.max_notes:
            break
        pitch_logp = pitch_state.step(note)
        duration_logp = duration_state.step(note)

    provenance = {
        "source_title": request.source.title,
        "seed_len": request.seed_len,
        "temperature": request.temperature,
        "rng_seed": request.rng_seed,
        "max_notes": request.max_notes,
        "fingerprint": fp_p,
        "config": request.pitch_checkpoint[1]["config"],
        "generated_notes": len(out) - request.seed_len,
    }
    return GeneratedMelody(tokens=out, provenance=provenance)


def generate_eval_set(pitch_checkpoint, duration_checkpoint, songs, master_seed,
                      seed_len=DEFAULT_SEED_LEN, temperature=1.0, max_notes=1024,
                      dictionary=None, on_error=None):
    """One melody per source song with per-song derived seeds.

    Songs that fail (too short for the seed, for instance) are skipped;
    ``on_error`` receives (song, exception) for logging.
    """
    melodies = []
    for index, song in enumerate(songs):
        seed = int(np.random.SeedSequence([master_seed, index]).generate_state(1)[0])
        request = GenerationRequest(
            pitch_checkpoint=pitch_checkpoint,
            duration_checkpoint=duration_checkpoint,
            source=song, seed_len=seed_len, temperature=temperature,
            rng_seed=seed, max_notes=max_notes)
        try:
            melody = generate(request, dictionary)
        except (SeedTooShort, InvalidArgument) as exc:
            if on_error is not None:
                on_error(song, exc)
            continue
        melody.provenance["source_index"] = index
        melodies.append(melody)
    return melodies
