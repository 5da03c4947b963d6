"""Tick grid shared by every module.

Each beat is split into 24 divisions so that straight, dotted and triplet
values all land on integer ticks; a 4/4 bar therefore spans 96 ticks.
"""

TICKS_PER_BEAT = 24
BEATS_PER_BAR = 4
TICKS_PER_BAR = TICKS_PER_BEAT * BEATS_PER_BAR  # 96

PITCH_MIN = 21   # A0
PITCH_MAX = 108  # C8

PITCH_VOCAB = 89     # 88 piano keys + rest
REST_TOKEN = 88
DURATION_VOCAB = 19
BARPOS_VOCAB = TICKS_PER_BAR
ROOT_VOCAB = 12
