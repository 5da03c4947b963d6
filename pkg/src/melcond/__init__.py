"""Conditioned melody generation over chord-annotated lead sheets.

The package covers the full desk-scale pipeline: parsing lead sheets
(MusicXML subset or canonical JSON), tokenizing them into aligned pitch /
duration / chord / bar-position sequences, training pairs of recurrent
networks under selectable conditioning configurations, sampling new
melodies over a given harmony, and scoring the results (validation NLL,
feature divergences, corpus BLEU).
"""

__version__ = "0.1.0"

from .leadsheet import Bar, ChordEvent, LeadSheet, NoteEvent
from .tokenizer import TokenizedSong, default_duration_dictionary, detokenize, tokenize

__all__ = [
    "Bar",
    "ChordEvent",
    "LeadSheet",
    "NoteEvent",
    "TokenizedSong",
    "default_duration_dictionary",
    "detokenize",
    "tokenize",
    "__version__",
]
