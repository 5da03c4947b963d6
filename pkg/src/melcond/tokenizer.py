"""Lead sheets to/from the four aligned token sequences.

Every note (rests included) contributes one entry to each of the four
sequences:

* pitch token: ``midi - 21`` in [0, 87], or 88 for a rest;
* duration token: index into a 19-entry duration dictionary;
* chord symbol: root token in [0, 11] plus a 12-bit pitch-class vector;
* bar-position token: the note's onset within its bar, in ticks [0, 95].

Gaps between notes and silence at the end of the last bar become explicit
rest tokens, so durations tile the song exactly and the bar-position
recurrence ``barpos[t+1] = (barpos[t] + ticks(dur[t])) mod 96`` holds for
any song whose durations all sit in the dictionary.
"""

import json
from dataclasses import dataclass, field

from . import chords as chordlib
from .errors import IndexOutOfRange, InvalidArgument
from .grid import DURATION_VOCAB, REST_TOKEN, TICKS_PER_BAR
from .leadsheet import Bar, ChordEvent, LeadSheet, NoteEvent, normalize, validate

# double whole down to a single tick, including dotted and triplet values
DEFAULT_DURATION_TICKS = (192, 144, 96, 72, 64, 48, 36, 32, 24, 18, 16, 12, 9, 8, 6, 4, 3, 2, 1)


@dataclass(frozen=True)
class DurationDictionary:
    """Ordered tick values; token index = position in the list."""

    entries: tuple = DEFAULT_DURATION_TICKS

    def __post_init__(self):
        if len(self.entries) != DURATION_VOCAB:
            raise InvalidArgument(f"duration dictionary needs exactly {DURATION_VOCAB} entries")
        if any(e <= 0 for e in self.entries):
            raise InvalidArgument("duration entries must be positive")
        if any(nxt >= cur for cur, nxt in zip(self.entries, self.entries[1:])):
            raise InvalidArgument("duration entries must be strictly decreasing")

    def __len__(self):
        return len(self.entries)

    def token_for_ticks(self, ticks):
        """Nearest entry's token; ties quantize toward the shorter duration."""
        return min(range(len(self.entries)),
                   key=lambda i: (abs(self.entries[i] - ticks), -i))

    def ticks_for_token(self, token):
        if not 0 <= token < len(self.entries):
            raise IndexOutOfRange(f"duration token {token} outside [0, {len(self.entries) - 1}]")
        return self.entries[token]


def default_duration_dictionary():
    return DurationDictionary()


@dataclass(frozen=True)
class ChordSymbol:
    root: int        # pitch class of the root, C = 0
    pcv: tuple       # 12 bits, absolute pitch classes

    def __post_init__(self):
        if not 0 <= self.root <= 11:
            raise IndexOutOfRange(f"chord root {self.root} outside [0, 11]")
        if len(self.pcv) != 12 or not 1 <= sum(self.pcv) <= 12:
            raise InvalidArgument("pitch-class vector needs 12 bits with at least one set")


@dataclass
class TokenizedSong:
    pitch: list
    duration: list
    chord: list      # ChordSymbol per note
    barpos: list
    title: str = ""

    def __len__(self):
        return len(self.pitch)

    def check_aligned(self):
        n = len(self.pitch)
        if not (len(self.duration) == len(self.chord) == len(self.barpos) == n):
            raise InvalidArgument("token sequences have different lengths")
        return self

    def to_dict(self):
        return {
            "title": self.title,
            "pitch": list(self.pitch),
            "duration": list(self.duration),
            "barpos": list(self.barpos),
            "chords": [{"root": c.root, "pcv": list(c.pcv)} for c in self.chord],
        }

    @classmethod
    def from_dict(cls, doc):
        song = cls(
            pitch=[int(p) for p in doc["pitch"]],
            duration=[int(d) for d in doc["duration"]],
            chord=[ChordSymbol(int(c["root"]), tuple(int(b) for b in c["pcv"]))
                   for c in doc["chords"]],
            barpos=[int(b) for b in doc["barpos"]],
            title=doc.get("title", ""),
        )
        return song.check_aligned()

    def to_json(self):
        return (json.dumps(self.to_dict()) + "\n").encode("utf-8")

    @classmethod
    def from_json(cls, data):
        return cls.from_dict(json.loads(data))


def _chord_at(bar, onset):
    active = bar.chords[0]
    for chord in bar.chords:
        if chord.onset <= onset:
            active = chord
        else:
            break
    return active


def _split_gap(dictionary, start, end):
    """Decompose the silent span [start, end) into per-bar dictionary ticks."""
    spans = []
    pos = start
    while pos < end:
        bar_end = (pos // TICKS_PER_BAR + 1) * TICKS_PER_BAR
        segment = min(end, bar_end) - pos
        while segment > 0:
            ticks = next(e for e in dictionary.entries if e <= segment)
            spans.append((pos, ticks))
            pos += ticks
            segment -= ticks
    return spans


def tokenize(song, dictionary=None, kind_table=None):
    """LeadSheet to TokenizedSong. Total on valid songs: off-dictionary
    durations quantize to the nearest entry (ties toward shorter)."""
    dictionary = dictionary or default_duration_dictionary()
    symbols = {}

    def symbol_for(chord):
        key = (chord.root, chord.kind)
        if key not in symbols:
            symbols[key] = ChordSymbol(
                chord.root, chordlib.pitch_class_vector(chord.root, chord.kind, kind_table))
        return symbols[key]

    events = []  # (pitch or None, global onset, duration ticks, ChordSymbol)
    clock = 0
    for bi, bar in enumerate(song.bars):
        for note in bar.notes:
            onset = bi * TICKS_PER_BAR + note.onset
            if onset > clock:
                for pos, ticks in _split_gap(dictionary, clock, onset):
                    gap_bar = song.bars[pos // TICKS_PER_BAR]
                    events.append((None, pos, ticks, symbol_for(_chord_at(gap_bar, pos % TICKS_PER_BAR))))
            events.append((note.pitch, onset, note.duration,
                           symbol_for(_chord_at(bar, note.onset))))
            clock = onset + note.duration
    total = song.total_ticks()
    if clock < total:
        for pos, ticks in _split_gap(dictionary, clock, total):
            gap_bar = song.bars[pos // TICKS_PER_BAR]
            events.append((None, pos, ticks, symbol_for(_chord_at(gap_bar, pos % TICKS_PER_BAR))))

    out = TokenizedSong(pitch=[], duration=[], chord=[], barpos=[], title=song.title)
    for pitch, onset, duration, symbol in events:
        out.pitch.append(REST_TOKEN if pitch is None else pitch - 21)
        out.duration.append(dictionary.token_for_ticks(duration))
        out.chord.append(symbol)
        out.barpos.append(onset % TICKS_PER_BAR)
    return out


def detokenize(tokens, dictionary=None, kind_table=None):
    """TokenizedSong back to a LeadSheet.

    Bars are rebuilt by accumulating durations; chord events are emitted
    wherever the chord symbol changes. Inverse of :func:`tokenize` for
    songs whose durations are all dictionary values.
    """
    dictionary = dictionary or default_duration_dictionary()
    tokens.check_aligned()
    if len(tokens) == 0:
        raise InvalidArgument("cannot detokenize an empty song")

    bars = []
    clock = 0
    previous_symbol = None
    for t in range(len(tokens)):
        p = tokens.pitch[t]
        if not 0 <= p <= REST_TOKEN:
            raise IndexOutOfRange(f"pitch token {p} outside [0, {REST_TOKEN}]")
        ticks = dictionary.ticks_for_token(tokens.duration[t])
        bar_index = clock // TICKS_PER_BAR
        onset = clock % TICKS_PER_BAR
        while len(bars) <= bar_index:
            bars.append(Bar())
        symbol = tokens.chord[t]
        if symbol != previous_symbol:
            kind = chordlib.kind_from_pcv(symbol.root, symbol.pcv, kind_table)
            bars[bar_index].chords.append(ChordEvent(root=symbol.root, kind=kind, onset=onset))
            previous_symbol = symbol
        pitch = None if p == REST_TOKEN else p + 21
        bars[bar_index].notes.append(NoteEvent(pitch=pitch, onset=onset, duration=ticks))
        clock += ticks
    while len(bars) * TICKS_PER_BAR < clock:
        bars.append(Bar())

    song = LeadSheet(title=tokens.title, time_signature=(4, 4), bars=bars)
    return validate(normalize(song), kind_table)
