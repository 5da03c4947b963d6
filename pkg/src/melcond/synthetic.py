"""Deterministic synthetic lead-sheet corpus.

Stands in for a real dataset at desk scale. Two styles:

* ``chord-locked``: each note's pitch class comes from the active chord's
  pitch-class set with probability 0.9, so pitch prediction has a strong
  learnable dependency on the chord input.
* ``diatonic``: pitch classes come from the key's major scale instead.

Both styles draw each note's duration from a rule keyed on the *previous*
pitch token, which gives the duration network a learnable dependency on
the partner sequence. Chord changes always coincide with note onsets and
every duration lands in the default duration dictionary, so these songs
round-trip exactly through the tokenizer.
"""

import numpy as np

from .chords import pitch_class_vector
from .errors import InvalidArgument
from .grid import TICKS_PER_BAR
from .leadsheet import Bar, ChordEvent, LeadSheet, NoteEvent, normalize, validate

_MAJOR_SCALE = (0, 2, 4, 5, 7, 9, 11)
# scale degrees used for progressions: I, IV, V7, vi, ii7
_DEGREES = ((0, "major"), (5, "major"), (7, "dominant"), (9, "minor"), (2, "minor-seventh"))

_LOW, _HIGH = 52, 88      # melody register (E3..E6)
_REST_PROB = 0.08
_LOCK_PROB = 0.9          # chance the pitch class obeys the style rule
_SMOOTH_PROB = 0.85       # chance the octave minimizes the leap
_DUR_RULE_PROB = 0.85     # chance the duration follows the previous-pitch rule


def _choose_duration(prev_pitch, rng):
    # rule: previous rest -> long; low pitch classes -> medium; high -> short
    if prev_pitch is None:
        ruled = 48
    elif prev_pitch % 12 < 6:
        ruled = 24
    else:
        ruled = 12
    if rng.random() < _DUR_RULE_PROB:
        return ruled
    return 12 if ruled != 12 else 24


def _choose_pitch(allowed_classes, prev_pitch, rng):
    if rng.random() < _LOCK_PROB:
        pc = int(allowed_classes[rng.integers(len(allowed_classes))])
    else:
        pc = int(rng.integers(12))
    candidates = [p for p in range(_LOW, _HIGH + 1) if p % 12 == pc]
    anchor = prev_pitch if prev_pitch is not None else 65
    if rng.random() < _SMOOTH_PROB:
        return min(candidates, key=lambda p: (abs(p - anchor), p))
    return int(candidates[rng.integers(len(candidates))])


def generate_synthetic_corpus(seed, n_songs, style="chord-locked", bars_range=(14, 19)):
    """Build ``n_songs`` deterministic songs for the given seed."""
    if n_songs < 1:
        raise InvalidArgument(f"n_songs must be >= 1, got {n_songs}")
    if style not in ("chord-locked", "diatonic"):
        raise InvalidArgument(f"unknown style {style!r}")
    lo, hi = bars_range
    if not 1 <= lo <= hi:
        raise InvalidArgument(f"bad bars_range {bars_range!r}")

    rng = np.random.default_rng(seed)
    songs = []
    for index in range(n_songs):
        key = int(rng.integers(12))
        scale = [(key + d) % 12 for d in _MAJOR_SCALE]
        n_bars = int(rng.integers(lo, hi + 1))
        bars = []
        prev_pitch = None
        last_sounding = None
        for _ in range(n_bars):
            chords = [_pick_chord(key, rng, onset=0)]
            if rng.random() < 0.35:
                second = _pick_chord(key, rng, onset=48)
                if (second.root, second.kind) != (chords[0].root, chords[0].kind):
                    chords.append(second)
            boundaries = [c.onset for c in chords[1:]] + [TICKS_PER_BAR]
            notes = []
            pos = 0
            for boundary in boundaries:
                while pos < boundary:
                    active = chords[-1] if pos >= chords[-1].onset else chords[0]
                    duration = min(_choose_duration(prev_pitch, rng), boundary - pos)
                    if rng.random() < _REST_PROB:
                        notes.append(NoteEvent(pitch=None, onset=pos, duration=duration))
                        prev_pitch = None
                    else:
                        if style == "chord-locked":
                            allowed = [pc for pc, bit in
                                       enumerate(pitch_class_vector(active.root, active.kind))
                                       if bit]
                        else:
                            allowed = scale
                        pitch = _choose_pitch(allowed, last_sounding, rng)
                        notes.append(NoteEvent(pitch=pitch, onset=pos, duration=duration))
                        prev_pitch = pitch
                        last_sounding = pitch
                    pos += duration
            bars.append(Bar(notes=notes, chords=chords))
        song = LeadSheet(title=f"synthetic-{style}-{seed}-{index:03d}",
                         time_signature=(4, 4), bars=bars)
        songs.append(validate(normalize(song)))
    return songs


def _pick_chord(key, rng, onset):
    degree, kind = _DEGREES[rng.integers(len(_DEGREES))]
    return ChordEvent(root=(key + degree) % 12, kind=kind, onset=onset)
