"""Earbud IMU mouth-activity recognition driving playful eating sounds.

Pipeline: IMU CSV -> 4 s windows -> time-domain features -> random forest ->
JSON prediction service -> per-activity sound clip scheduler.
"""

__version__ = "0.1.0"
