"""Canonical song format: portable JSON interchange for lead sheets.

Schema (one song per UTF-8 file)::

    {"title": str,
     "time_signature": "4/4",
     "bars": [{"chords": [{"root": 0-11, "kind": str, "onset": 0-95}],
               "notes":  [{"pitch": 21-108 | "rest", "onset": 0-95,
                           "duration": int >= 1}]}]}

``parse_canonical`` applies the same chord-fill normalization and
invariant checks as the MusicXML reader, so both produce identical
``LeadSheet`` values for equivalent scores.
"""

import json

from .errors import SchemaViolation, UnsupportedTimeSignature
from .leadsheet import Bar, ChordEvent, LeadSheet, NoteEvent, normalize, validate


def _expect(cond, path, message):
    if not cond:
        raise SchemaViolation(path, message)


def _int_in(value, lo, hi, path):
    _expect(isinstance(value, int) and not isinstance(value, bool), path, "expected an integer")
    _expect(lo <= value <= hi, path, f"expected a value in [{lo}, {hi}], got {value}")
    return value


def parse_canonical(document, kind_table=None):
    """Parse canonical JSON bytes (or str) into a validated LeadSheet."""
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaViolation("$", f"not valid JSON: {exc}") from None

    _expect(isinstance(doc, dict), "$", "expected an object")
    allowed = {"title", "time_signature", "bars"}
    for key in doc:
        _expect(key in allowed, key, "unknown field")
    _expect("title" in doc, "title", "missing")
    _expect(isinstance(doc["title"], str), "title", "expected a string")
    _expect("time_signature" in doc, "time_signature", "missing")
    if doc["time_signature"] != "4/4":
        raise UnsupportedTimeSignature(
            f"time_signature {doc['time_signature']!r} is not supported (4/4 only)"
        )
    _expect("bars" in doc, "bars", "missing")
    _expect(isinstance(doc["bars"], list) and doc["bars"], "bars", "expected a non-empty array")

    bars = []
    for bi, rawbar in enumerate(doc["bars"]):
        bpath = f"bars[{bi}]"
        _expect(isinstance(rawbar, dict), bpath, "expected an object")
        for key in rawbar:
            _expect(key in {"chords", "notes"}, f"{bpath}.{key}", "unknown field")
        bar = Bar()
        for ci, rawchord in enumerate(rawbar.get("chords", [])):
            cpath = f"{bpath}.chords[{ci}]"
            _expect(isinstance(rawchord, dict), cpath, "expected an object")
            for key in rawchord:
                _expect(key in {"root", "kind", "onset"}, f"{cpath}.{key}", "unknown field")
            _expect(isinstance(rawchord.get("kind"), str), f"{cpath}.kind", "expected a string")
            bar.chords.append(ChordEvent(
                root=_int_in(rawchord.get("root"), 0, 11, f"{cpath}.root"),
                kind=rawchord["kind"],
                onset=_int_in(rawchord.get("onset"), 0, 95, f"{cpath}.onset"),
            ))
        for ni, rawnote in enumerate(rawbar.get("notes", [])):
            npath = f"{bpath}.notes[{ni}]"
            _expect(isinstance(rawnote, dict), npath, "expected an object")
            for key in rawnote:
                _expect(key in {"pitch", "onset", "duration"}, f"{npath}.{key}", "unknown field")
            pitch = rawnote.get("pitch")
            if pitch == "rest":
                pitch = None
            else:
                pitch = _int_in(pitch, 21, 108, f"{npath}.pitch")
            duration = rawnote.get("duration")
            _expect(isinstance(duration, int) and not isinstance(duration, bool)
                    and duration >= 1, f"{npath}.duration", "expected an integer >= 1")
            bar.notes.append(NoteEvent(
                pitch=pitch,
                onset=_int_in(rawnote.get("onset"), 0, 95, f"{npath}.onset"),
                duration=duration,
            ))
        bars.append(bar)

    song = LeadSheet(title=doc["title"], time_signature=(4, 4), bars=bars)
    return validate(normalize(song), kind_table)


def to_dict(song):
    return {
        "title": song.title,
        "time_signature": "4/4",
        "bars": [
            {
                "chords": [
                    {"root": c.root, "kind": c.kind, "onset": c.onset} for c in bar.chords
                ],
                "notes": [
                    {
                        "pitch": "rest" if n.pitch is None else n.pitch,
                        "onset": n.onset,
                        "duration": n.duration,
                    }
                    for n in bar.notes
                ],
            }
            for bar in song.bars
        ],
    }


def serialize_canonical(song):
    """LeadSheet to canonical JSON bytes (stable formatting, trailing newline)."""
    return (json.dumps(to_dict(song), indent=2) + "\n").encode("utf-8")
