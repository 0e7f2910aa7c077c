"""Acoustic shadow imaging pipeline.

Simulates exterior scattering of line sources off rigid convex polygons,
renders octave-band loudness maps, packs them with occupancy ground truth
into dataset directories, derives degraded variants, and scores
predictions with a smoothed image distance.
"""

__version__ = "0.1.0"
