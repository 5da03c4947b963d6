"""Chord kind dictionary: kind names to pitch-class interval sets.

The default table ships as ``data/chord_kinds.json`` (20 MusicXML kind
strings). Callers may load their own table with :func:`load_kind_table`
to extend or override the defaults.
"""

import json
from importlib import resources

from .errors import UnknownChordKind

_DEFAULT_TABLE = None


def default_kind_table():
    """The packaged kind table, loaded once; maps kind name -> interval tuple."""
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        raw = resources.files("melcond.data").joinpath("chord_kinds.json").read_text("utf-8")
        _DEFAULT_TABLE = {k: tuple(v) for k, v in json.loads(raw).items()}
    return _DEFAULT_TABLE


def load_kind_table(path):
    """Load a kind table from a JSON file, validating its entries."""
    with open(path, "rb") as fh:
        raw = json.load(fh)
    table = {}
    for name, intervals in raw.items():
        ivs = tuple(int(i) for i in intervals)
        if not ivs or any(i < 0 or i > 11 for i in ivs) or len(set(ivs)) != len(ivs):
            raise ValueError(f"kind {name!r}: intervals must be distinct values in [0, 11]")
        table[name] = ivs
    return table


def kind_intervals(kind, table=None):
    table = table if table is not None else default_kind_table()
    try:
        return table[kind]
    except KeyError:
        raise UnknownChordKind(f"chord kind {kind!r} is not in the kind dictionary") from None


def pitch_class_vector(root, kind, table=None):
    """12-bit tuple with ones at the chord's absolute pitch classes (C = 0)."""
    intervals = kind_intervals(kind, table)
    bits = [0] * 12
    for iv in intervals:
        bits[(root + iv) % 12] = 1
    return tuple(bits)


def kind_from_intervals(intervals, table=None):
    """Reverse lookup: interval set back to its kind name."""
    table = table if table is not None else default_kind_table()
    key = tuple(sorted(set(intervals)))
    for name, ivs in table.items():
        if tuple(sorted(ivs)) == key:
            return name
    raise UnknownChordKind(f"no kind in the dictionary has intervals {sorted(intervals)}")


def kind_from_pcv(root, pcv, table=None):
    """Kind name for an absolute pitch-class vector with the given root."""
    intervals = [(pc - root) % 12 for pc, bit in enumerate(pcv) if bit]
    return kind_from_intervals(intervals, table)
