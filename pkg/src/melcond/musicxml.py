"""MusicXML subset reader for monophonic lead sheets.

Honored elements: ``divisions``, ``time``, ``note`` (``pitch``/``rest``,
``duration``, ``tie``), ``harmony`` (``root``, ``kind``). Everything else
is skipped. Grace and cue notes are ignored; repeats are not unrolled.

Positions are kept as exact fractions of a beat and quantized to the
24-per-beat tick grid at the end of each note, rounding half-ticks down
(toward the shorter duration). Note durations are computed end minus
start on the quantized grid, so quantization can never create overlaps.
"""

import math
import xml.etree.ElementTree as ET
from fractions import Fraction

from .chords import kind_intervals
from .errors import (
    EmptyScore,
    MalformedXml,
    OutOfRangeError,
    PolyphonicInput,
    UnsupportedTimeSignature,
)
from .grid import PITCH_MAX, PITCH_MIN, TICKS_PER_BAR, TICKS_PER_BEAT
from .leadsheet import Bar, ChordEvent, LeadSheet, NoteEvent, normalize, validate

_STEP_TO_PC = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}


def _quantize(ticks_fraction):
    # round to nearest tick, half-ticks toward the earlier/shorter side
    return int(math.ceil(ticks_fraction - Fraction(1, 2)))


def _text(element, child, where):
    node = element.find(child)
    if node is None or node.text is None:
        raise MalformedXml(f"{where}: missing <{child}>")
    return node.text.strip()


def _int_text(element, child, where):
    try:
        return int(_text(element, child, where))
    except ValueError:
        raise MalformedXml(f"{where}: <{child}> is not an integer") from None


def parse_musicxml(document, kind_table=None, title=None):
    """Parse MusicXML bytes (or str) into a validated LeadSheet."""
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise MalformedXml(f"not well-formed XML: {exc}") from None
    if root.tag != "score-partwise":
        raise MalformedXml(f"expected <score-partwise>, got <{root.tag}>")

    if title is None:
        node = root.find("work/work-title")
        title = node.text.strip() if node is not None and node.text else "untitled"

    parts = root.findall("part")
    if len(parts) != 1:
        raise MalformedXml(f"expected exactly one <part>, found {len(parts)}")
    measures = parts[0].findall("measure")
    if not measures:
        raise EmptyScore("score has no measures")

    divisions = None
    notes = []      # dicts: midi (None = rest), start (tick), end (tick)
    chord_events = []  # (tick, root_pc, kind)
    pending_tie = None  # open note record awaiting a tie stop

    for bar_index, measure in enumerate(measures):
        pos = Fraction(0)  # beats from the start of this measure
        bar_start = bar_index * TICKS_PER_BAR
        for element in measure:
            if element.tag == "attributes":
                div = element.find("divisions")
                if div is not None:
                    divisions = int(div.text)
                    if divisions < 1:
                        raise MalformedXml("divisions must be >= 1")
                time = element.find("time")
                if time is not None:
                    beats = _text(time, "beats", "time")
                    beat_type = _text(time, "beat-type", "time")
                    if (beats, beat_type) != ("4", "4"):
                        raise UnsupportedTimeSignature(
                            f"time signature {beats}/{beat_type} is not supported (4/4 only)"
                        )
            elif element.tag == "harmony":
                rootel = element.find("root")
                if rootel is None:
                    raise MalformedXml("harmony without <root>")
                step = _text(rootel, "root-step", "harmony root")
                if step not in _STEP_TO_PC:
                    raise MalformedXml(f"harmony root-step {step!r} is not a note letter")
                alter = rootel.find("root-alter")
                alter = int(float(alter.text)) if alter is not None and alter.text else 0
                kind_el = element.find("kind")
                kind = kind_el.text.strip() if kind_el is not None and kind_el.text else ""
                kind_intervals(kind, kind_table)  # raises UnknownChordKind
                tick = bar_start + _quantize(pos * TICKS_PER_BEAT)
                chord_events.append((tick, (_STEP_TO_PC[step] + alter) % 12, kind))
            elif element.tag == "note":
                if element.find("grace") is not None or element.find("cue") is not None:
                    continue
                if element.find("chord") is not None:
                    raise PolyphonicInput("simultaneous notes in one part are not supported")
                if divisions is None:
                    raise MalformedXml("note before any <divisions> declaration")
                dur = _int_text(element, "duration", "note")
                beats = Fraction(dur, divisions)
                start = bar_start + _quantize(pos * TICKS_PER_BEAT)
                end = bar_start + _quantize((pos + beats) * TICKS_PER_BEAT)
                pos += beats
                tie_types = {t.get("type") for t in element.findall("tie")}
                if element.find("rest") is not None:
                    pending_tie = None
                    notes.append({"midi": None, "start": start, "end": max(end, start + 1)})
                    continue
                pitch_el = element.find("pitch")
                if pitch_el is None:
                    raise MalformedXml("note has neither <pitch> nor <rest>")
                step = _text(pitch_el, "step", "pitch")
                if step not in _STEP_TO_PC:
                    raise MalformedXml(f"pitch step {step!r} is not a note letter")
                octave = _int_text(pitch_el, "octave", "pitch")
                alter_el = pitch_el.find("alter")
                alter = int(float(alter_el.text)) if alter_el is not None and alter_el.text else 0
                midi = 12 * (octave + 1) + _STEP_TO_PC[step] + alter
                if not PITCH_MIN <= midi <= PITCH_MAX:
                    raise OutOfRangeError(f"pitch {midi} outside the piano range [21, 108]")
                if "stop" in tie_types and pending_tie is not None and pending_tie["midi"] == midi:
                    pending_tie["end"] = max(end, pending_tie["end"])
                    if "start" not in tie_types:
                        pending_tie = None
                    continue
                record = {"midi": midi, "start": start, "end": max(end, start + 1)}
                notes.append(record)
                pending_tie = record if "start" in tie_types else None
            # every other element (backup, direction, barline, ...) is skipped

    if not notes:
        raise EmptyScore("score has no notes")

    notes.sort(key=lambda n: n["start"])
    for prev, cur in zip(notes, notes[1:]):
        if cur["start"] == prev["start"]:
            raise PolyphonicInput("two notes share an onset")
        if cur["start"] < prev["end"]:
            raise MalformedXml("overlapping notes in a single part")

    bars = [Bar() for _ in measures]
    for record in notes:
        bar_index = record["start"] // TICKS_PER_BAR
        if bar_index >= len(bars):
            continue  # quantization pushed a trailing note past the last barline
        bars[bar_index].notes.append(NoteEvent(
            pitch=record["midi"],
            onset=record["start"] % TICKS_PER_BAR,
            duration=record["end"] - record["start"],
        ))
    seen = set()
    for tick, root_pc, kind in chord_events:
        bar_index = min(tick // TICKS_PER_BAR, len(bars) - 1)
        onset = tick % TICKS_PER_BAR
        if (bar_index, onset) in seen:
            continue
        seen.add((bar_index, onset))
        bars[bar_index].chords.append(ChordEvent(root=root_pc, kind=kind, onset=onset))

    song = LeadSheet(title=title, time_signature=(4, 4), bars=bars)
    return validate(normalize(song), kind_table)
