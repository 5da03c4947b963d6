"""Lead sheet data model: bars of monophonic notes with chord annotations.

All timing is in grid ticks (24 per beat, 96 per 4/4 bar). A rest is a
``NoteEvent`` whose ``pitch`` is ``None``. Parsers construct raw bars and
then call :func:`normalize` followed by :func:`validate`; everything
downstream may assume the invariants hold.
"""

from dataclasses import dataclass, field, replace

from . import chords
from .errors import InvalidArgument, MissingHarmony, OutOfRangeError
from .grid import PITCH_MAX, PITCH_MIN, TICKS_PER_BAR


@dataclass(frozen=True)
class NoteEvent:
    pitch: int | None  # midi number in [21, 108], None for a rest
    onset: int         # ticks from bar start, [0, 96)
    duration: int      # ticks, >= 1; may extend past the bar (tied note)

    @property
    def is_rest(self):
        return self.pitch is None


@dataclass(frozen=True)
class ChordEvent:
    root: int   # pitch class, C = 0
    kind: str   # name from the chord-kind dictionary
    onset: int  # ticks from bar start, [0, 96)


@dataclass
class Bar:
    notes: list = field(default_factory=list)
    chords: list = field(default_factory=list)


@dataclass
class LeadSheet:
    title: str
    time_signature: tuple = (4, 4)
    bars: list = field(default_factory=list)

    def note_count(self):
        return sum(len(b.notes) for b in self.bars)

    def total_ticks(self):
        return len(self.bars) * TICKS_PER_BAR


def normalize(song):
    """Fill chord gaps in place: a bar with no chord at tick 0 inherits the
    last sounding chord. Raises MissingHarmony if the first bar starts bare."""
    last = None
    for i, bar in enumerate(song.bars):
        bar.chords.sort(key=lambda c: c.onset)
        if not bar.chords or bar.chords[0].onset > 0:
            if last is None:
                raise MissingHarmony(
                    f"{song.title!r}: bar 0 has no chord at its start and none precedes it"
                )
            bar.chords.insert(0, replace(last, onset=0))
        last = bar.chords[-1]
    return song


def validate(song, kind_table=None):
    """Check every structural invariant; raises InvalidArgument on the first
    violation. Returns the song unchanged so calls can be chained."""
    if tuple(song.time_signature) != (4, 4):
        raise InvalidArgument(f"{song.title!r}: time signature must be 4/4")
    if not song.bars:
        raise InvalidArgument(f"{song.title!r}: no bars")
    prev_end = 0  # global ticks, so cross-bar spills cannot hide an overlap
    for bi, bar in enumerate(song.bars):
        for ni, note in enumerate(bar.notes):
            where = f"{song.title!r} bar {bi} note {ni}"
            if note.pitch is not None and not PITCH_MIN <= note.pitch <= PITCH_MAX:
                raise InvalidArgument(f"{where}: pitch {note.pitch} outside [21, 108]")
            if not 0 <= note.onset < TICKS_PER_BAR:
                raise InvalidArgument(f"{where}: onset {note.onset} outside [0, 96)")
            if note.duration < 1:
                raise InvalidArgument(f"{where}: duration {note.duration} < 1")
            onset = bi * TICKS_PER_BAR + note.onset
            if onset < prev_end:
                raise InvalidArgument(f"{where}: overlaps the previous note")
            prev_end = onset + note.duration
        if not bar.chords or bar.chords[0].onset != 0:
            raise InvalidArgument(f"{song.title!r} bar {bi}: first chord must sit at tick 0")
        prev = -1
        for chord in bar.chords:
            if not 0 <= chord.onset < TICKS_PER_BAR:
                raise InvalidArgument(f"{song.title!r} bar {bi}: chord onset outside [0, 96)")
            if chord.onset <= prev:
                raise InvalidArgument(f"{song.title!r} bar {bi}: chord onsets not increasing")
            prev = chord.onset
            chords.kind_intervals(chord.kind, kind_table)
    return song


def transpose(song, semitones):
    """Shift every pitch by ``semitones`` and every chord root mod 12.

    Raises OutOfRangeError if any shifted pitch leaves the piano range.
    """
    if not -6 <= semitones <= 5:
        raise InvalidArgument(f"semitones {semitones} outside [-6, +5]")
    bars = []
    for bar in song.bars:
        notes = []
        for note in bar.notes:
            if note.pitch is None:
                notes.append(note)
                continue
            shifted = note.pitch + semitones
            if not PITCH_MIN <= shifted <= PITCH_MAX:
                raise OutOfRangeError(
                    f"{song.title!r}: pitch {note.pitch} shifted by {semitones} leaves [21, 108]"
                )
            notes.append(replace(note, pitch=shifted))
        new_chords = [replace(c, root=(c.root + semitones) % 12) for c in bar.chords]
        bars.append(Bar(notes=notes, chords=new_chords))
    return LeadSheet(title=song.title, time_signature=song.time_signature, bars=bars)


def augment_corpus(songs):
    """Every transposition in [-6, +5] of every song that stays in range.

    Output order is deterministic: songs in input order, shifts ascending
    (the unshifted original appears at shift 0).
    """
    out = []
    for song in songs:
        for shift in range(-6, 6):
            try:
                out.append(transpose(song, shift))
            except OutOfRangeError:
                continue
    return out


@dataclass
class StatsReport:
    song_count: int
    unique_chords: int
    unique_kinds: int
    bar_count_min: int | None
    bar_count_max: int | None
    bar_count_mean: float | None
    notes_per_bar_min: int | None
    notes_per_bar_max: int | None
    notes_per_bar_mean: float | None

    def to_dict(self):
        return {
            "song_count": self.song_count,
            "unique_chords": self.unique_chords,
            "unique_kinds": self.unique_kinds,
            "bar_count": {
                "min": self.bar_count_min,
                "max": self.bar_count_max,
                "mean": self.bar_count_mean,
            },
            "notes_per_bar": {
                "min": self.notes_per_bar_min,
                "max": self.notes_per_bar_max,
                "mean": self.notes_per_bar_mean,
            },
        }

    def to_text(self):
        def fmt(v):
            if v is None:
                return "-"
            if isinstance(v, float):
                return f"{v:.3f}"
            return str(v)

        rows = [
            ("songs", self.song_count),
            ("unique chords", self.unique_chords),
            ("unique chord kinds", self.unique_kinds),
            ("bars per song (min)", self.bar_count_min),
            ("bars per song (max)", self.bar_count_max),
            ("bars per song (mean)", self.bar_count_mean),
            ("notes per bar (min)", self.notes_per_bar_min),
            ("notes per bar (max)", self.notes_per_bar_max),
            ("notes per bar (mean)", self.notes_per_bar_mean),
        ]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {fmt(value)}" for name, value in rows) + "\n"


def corpus_stats(songs):
    """Corpus-level statistics. ``notes per bar`` counts sounding notes only."""
    if not songs:
        return StatsReport(0, 0, 0, None, None, None, None, None, None)
    chords_seen = set()
    kinds_seen = set()
    bar_counts = []
    notes_per_bar = []
    for song in songs:
        bar_counts.append(len(song.bars))
        for bar in song.bars:
            notes_per_bar.append(sum(1 for n in bar.notes if not n.is_rest))
            for chord in bar.chords:
                chords_seen.add((chord.root, chord.kind))
                kinds_seen.add(chord.kind)
    return StatsReport(
        song_count=len(songs),
        unique_chords=len(chords_seen),
        unique_kinds=len(kinds_seen),
        bar_count_min=min(bar_counts),
        bar_count_max=max(bar_counts),
        bar_count_mean=sum(bar_counts) / len(bar_counts),
        notes_per_bar_min=min(notes_per_bar),
        notes_per_bar_max=max(notes_per_bar),
        notes_per_bar_mean=sum(notes_per_bar) / len(notes_per_bar),
    )
