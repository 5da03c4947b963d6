"""Dataset windowing, training loops, and the experiment matrix.

Songs are cut into teacher-forced windows: inputs at positions n..n+w-1,
targets at n+1..n+w, sliding by the hop. Songs shorter than one window
yield a single right-padded window whose padded targets are masked out of
the loss. LSTM state resets to zero at every window.

Corpus splitting happens at the base-song level before transposition
augmentation, so no validation song leaks into training in any key.
"""

import hashlib
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import CorpusTooSmall, DivergedNaN, InvalidArgument
from .grid import REST_TOKEN, TICKS_PER_BAR
from .leadsheet import augment_corpus
from .model import CondNetwork, NetworkSpec, config_fingerprint
from .nn.optim import AmsGrad
from .tokenizer import default_duration_dictionary, tokenize

NETWORKS = ("pitch", "duration")


@dataclass(frozen=True)
class TrainPlan:
    window_len: int = 64
    hop: int = 1
    batch_size: int = 64
    epochs: int = 30
    lr: float = 1e-3
    val_fraction: float = 0.2
    seed: int = 0
    hidden_size: int = 256

    def __post_init__(self):
        if self.window_len < 2:
            raise InvalidArgument("window_len must be >= 2")
        if not 0.0 < self.val_fraction < 1.0:
            raise InvalidArgument("val_fraction must be in (0, 1)")
        if self.hop < 1 or self.batch_size < 1 or self.epochs < 0:
            raise InvalidArgument("hop, batch_size must be >= 1 and epochs >= 0")

    def to_dict(self):
        return {
            "window_len": self.window_len, "hop": self.hop,
            "batch_size": self.batch_size, "epochs": self.epochs, "lr": self.lr,
            "val_fraction": self.val_fraction, "seed": self.seed,
            "hidden_size": self.hidden_size,
        }

    @classmethod
    def from_dict(cls, doc):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise InvalidArgument(f"unknown plan fields: {sorted(unknown)}")
        return cls(**doc)


def split_corpus(songs, val_fraction, seed):
    """Deterministic base-song split; every transposition of a song must be
    derived after this call so both sides stay disjoint."""
    n = len(songs)
    if n < 2:
        raise CorpusTooSmall(f"need at least 2 base songs, got {n}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_val = int(round(n * val_fraction))
    n_val = min(max(n_val, 1), n - 1)
    val_idx = set(order[:n_val].tolist())
    train = [songs[i] for i in range(n) if i not in val_idx]
    val = [songs[i] for i in range(n) if i in val_idx]
    return train, val


def prepare_corpus(base_songs, plan, dictionary=None, augment=True):
    """Split, optionally augment each side, tokenize.

    Returns (train, val) token lists. Augmentation defaults on (the full
    pipeline); desk-scale runs may skip it.
    """
    dictionary = dictionary or default_duration_dictionary()
    train, val = split_corpus(base_songs, plan.val_fraction, plan.seed)
    if augment:
        train, val = augment_corpus(train), augment_corpus(val)
    train_tok = [tokenize(s, dictionary) for s in train]
    val_tok = [tokenize(s, dictionary) for s in val]
    return train_tok, val_tok


@dataclass(frozen=True)
class Window:
    start: int
    n_valid: int
    window_len: int

    @property
    def input_range(self):
        return (self.start, self.start + self.window_len)

    @property
    def target_range(self):
        return (self.start + 1, self.start + 1 + self.window_len)

    def mask(self):
        m = np.zeros(self.window_len, dtype=bool)
        m[:self.n_valid] = True
        return m


def make_windows(length, window_len=64, hop=1):
    """Teacher-forced windows for a song of ``length`` tokens."""
    if length < 1:
        raise InvalidArgument("song length must be >= 1")
    if length > window_len:
        return [Window(start, window_len, window_len)
                for start in range(0, length - window_len, hop)]
    return [Window(0, length - 1, window_len)]


class SongArrays:
    """Token arrays for one song, extended by one window of padding.

    Padding repeats the song's final chord, uses the rest pitch token and
    the shortest duration token, and continues the bar-position recurrence
    so the extension stays internally consistent. Padded targets are
    always masked, so padding never reaches the loss.
    """

    def __init__(self, song, window_len, dictionary=None):
        dictionary = dictionary or default_duration_dictionary()
        song.check_aligned()
        n = len(song)
        if n < 1:
            raise InvalidArgument(f"{song.title!r}: empty song")
        self.length = n
        w = window_len
        pad_dur_token = len(dictionary) - 1  # shortest entry
        self.pitch = np.concatenate(
            [np.asarray(song.pitch, np.int64), np.full(w, REST_TOKEN, np.int64)])
        self.duration = np.concatenate(
            [np.asarray(song.duration, np.int64), np.full(w, pad_dur_token, np.int64)])
        barpos = np.asarray(song.barpos, np.int64)
        tail = np.empty(w, np.int64)
        pos = barpos[-1] + dictionary.ticks_for_token(song.duration[-1])
        step = dictionary.ticks_for_token(pad_dur_token)
        for k in range(w):
            tail[k] = pos % TICKS_PER_BAR
            pos += step
        self.barpos = np.concatenate([barpos, tail])

        roots = np.array([c.root for c in song.chord], np.int64)
        pcvs = np.array([c.pcv for c in song.chord], np.float32)
        self.chord_root = np.concatenate([roots, np.full(w, roots[-1], np.int64)])
        self.chord_pcv = np.concatenate([pcvs, np.tile(pcvs[-1], (w, 1))])
        # the final step has no successor, so it reuses its own chord
        self.next_root = np.concatenate([self.chord_root[1:], self.chord_root[-1:]])
        self.next_pcv = np.concatenate([self.chord_pcv[1:], self.chord_pcv[-1:]])

    def tokens_for(self, target):
        return self.pitch if target == "pitch" else self.duration

    def partner_for(self, target):
        return self.duration if target == "pitch" else self.pitch


def build_batch(song_arrays, refs, target):
    """Assemble (T, N, ...) tensors for window references (song_idx, Window)."""
    window_len = refs[0][1].window_len
    cols = {"self": [], "inter": [], "barpos": [], "chord_root": [], "chord_pcv": [],
            "next_root": [], "next_pcv": [], "targets": [], "mask": []}
    for song_idx, window in refs:
        arrays = song_arrays[song_idx]
        lo, hi = window.input_range
        cols["self"].append(arrays.tokens_for(target)[lo:hi])
        cols["inter"].append(arrays.partner_for(target)[lo:hi])
        cols["barpos"].append(arrays.barpos[lo:hi])
        cols["chord_root"].append(arrays.chord_root[lo:hi])
        cols["chord_pcv"].append(arrays.chord_pcv[lo:hi])
        cols["next_root"].append(arrays.next_root[lo:hi])
        cols["next_pcv"].append(arrays.next_pcv[lo:hi])
        cols["targets"].append(arrays.tokens_for(target)[lo + 1:hi + 1])
        cols["mask"].append(window.mask())
    batch = {}
    for key, items in cols.items():
        stacked = np.stack(items)  # (N, T, ...)
        batch[key] = np.ascontiguousarray(np.moveaxis(stacked, 0, 1))
    assert batch["self"].shape[0] == window_len
    return batch


@dataclass
class NetworkLog:
    epochs: list = field(default_factory=list)  # dicts: epoch/train_nll/val_nll/seconds
    best_epoch: int | None = None
    best_val_nll: float | None = None
    diverged: bool = False

    def record(self, epoch, train_nll, val_nll, seconds):
        self.epochs.append({"epoch": epoch, "train_nll": train_nll,
                            "val_nll": val_nll, "seconds": seconds})
        if val_nll is not None and np.isfinite(val_nll) and (
                self.best_val_nll is None or val_nll < self.best_val_nll):
            self.best_val_nll = val_nll
            self.best_epoch = epoch
            return True
        return False


@dataclass
class TrainedNetwork:
    target: str
    arrays: dict          # parameters + buffers + optimizer state at the best epoch
    meta: dict
    log: NetworkLog


@dataclass
class TrainResult:
    config: object
    networks: dict  # target -> TrainedNetwork


def _derived_seed(master, *parts):
    digest = hashlib.sha256(("/".join(str(p) for p in parts)).encode()).digest()
    entropy = int.from_bytes(digest[:8], "little")
    return int(np.random.SeedSequence([master, entropy]).generate_state(1)[0])


def _window_refs(token_songs, plan, dictionary):
    arrays = [SongArrays(song, plan.window_len, dictionary) for song in token_songs]
    refs = []
    for idx, arr in enumerate(arrays):
        for window in make_windows(arr.length, plan.window_len, plan.hop):
            if window.n_valid > 0:
                refs.append((idx, window))
    return arrays, refs


def _evaluate(net, song_arrays, refs, target, batch_size):
    total = 0.0
    count = 0
    for lo in range(0, len(refs), batch_size):
        batch = build_batch(song_arrays, refs[lo:lo + batch_size], target)
        loss, _, _ = net.loss(batch, train=False)
        n = int(batch["mask"].sum())
        total += loss * n
        count += n
    return total / count if count else float("nan")


def train_network(target, config, corpus, plan, dictionary=None):
    """Train one network; returns a TrainedNetwork (best validation epoch)."""
    dictionary = dictionary or default_duration_dictionary()
    train_songs, val_songs = corpus
    if not train_songs or not val_songs:
        raise CorpusTooSmall("both corpus sides must be non-empty")
    train_arrays, train_refs = _window_refs(train_songs, plan, dictionary)
    val_arrays, val_refs = _window_refs(val_songs, plan, dictionary)

    spec = NetworkSpec(target, config, hidden_size=plan.hidden_size)
    net = CondNetwork(spec, seed=_derived_seed(plan.seed, config.abbrev, target, "init"))
    optimizer = AmsGrad(net.store, lr=plan.lr)
    shuffle_rng = np.random.default_rng(
        _derived_seed(plan.seed, config.abbrev, target, "shuffle"))
    dropout_rng = np.random.default_rng(
        _derived_seed(plan.seed, config.abbrev, target, "dropout"))

    log = NetworkLog()
    meta = {
        "target": target,
        "config": config.abbrev,
        "fingerprint": config_fingerprint(config),
        "hidden_size": plan.hidden_size,
        "dropout": net.dropout,
        "plan": plan.to_dict(),
    }

    def snapshot(epoch, val_nll):
        arrays = dict(net.store.snapshot())
        arrays.update({k: v.copy() for k, v in optimizer.state_arrays().items()})
        return TrainedNetwork(target, arrays,
                              dict(meta, epoch=epoch, val_nll=val_nll,
                                   opt_step=optimizer.step_count), log)

    val0 = _evaluate(net, val_arrays, val_refs, target, plan.batch_size)
    log.record(0, None, val0, 0.0)
    best = snapshot(0, val0)

    order = np.arange(len(train_refs))
    for epoch in range(1, plan.epochs + 1):
        t0 = time.perf_counter()
        shuffle_rng.shuffle(order)
        total = 0.0
        count = 0
        for lo in range(0, len(order), plan.batch_size):
            refs = [train_refs[i] for i in order[lo:lo + plan.batch_size]]
            batch = build_batch(train_arrays, refs, target)
            loss = net.train_step(batch, dropout_rng)
            if not np.isfinite(loss):
                log.diverged = True
                log.record(epoch, float("nan"), None, time.perf_counter() - t0)
                exc = DivergedNaN(
                    f"{target} network loss went non-finite at epoch {epoch}")
                exc.partial = best
                exc.log = log
                raise exc
            optimizer.step()
            n = int(batch["mask"].sum())
            total += loss * n
            count += n
        train_nll = total / count
        val_nll = _evaluate(net, val_arrays, val_refs, target, plan.batch_size)
        improved = log.record(epoch, train_nll, val_nll, time.perf_counter() - t0)
        if improved:
            best = snapshot(epoch, val_nll)
    return best


def train(config, corpus, plan, dictionary=None):
    """Train the pitch and duration networks; returns a TrainResult.

    Raises DivergedNaN (carrying the partial log and best snapshot) if a
    loss goes non-finite.
    """
    networks = {}
    for target in NETWORKS:
        networks[target] = train_network(target, config, corpus, plan, dictionary)
    return TrainResult(config=config, networks=networks)


def run_experiment_matrix(corpus, plan, configs, dictionary=None):
    """Train every configuration on one shared split.

    Returns a list of (config, TrainResult | None, status) where status is
    "ok", "diverged" or "failed: <reason>"; the matrix keeps going when a
    cell fails.
    """
    results = []
    for config in configs:
        try:
            results.append((config, train(config, corpus, plan, dictionary), "ok"))
        except DivergedNaN:
            results.append((config, None, "diverged"))
        except (InvalidArgument, CorpusTooSmall) as exc:
            results.append((config, None, f"failed: {exc}"))
    return results


def summary_rows(results):
    """Rows shaped like the validation-NLL summary table."""
    rows = []
    for config, result, status in results:
        row = {"config": config.abbrev, "status": status,
               "pitch_val_nll": None, "pitch_best_epoch": None,
               "duration_val_nll": None, "duration_best_epoch": None}
        if result is not None:
            for target in NETWORKS:
                log = result.networks[target].log
                row[f"{target}_val_nll"] = log.best_val_nll
                row[f"{target}_best_epoch"] = log.best_epoch
        rows.append(row)
    return rows
