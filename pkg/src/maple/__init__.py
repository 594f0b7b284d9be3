"""Imperfect-information game engine for Phantom Go and Dark Hex.

Multi-world aggregated tree search over a single shared tree, a
perfect-information-Monte-Carlo baseline, random and embedding-filtered
determinization sampling, a from-scratch residual policy/value network with
Siamese towers, and the self-play training / evaluation / serving pipeline
around them.
"""

__version__ = "0.1.0"
