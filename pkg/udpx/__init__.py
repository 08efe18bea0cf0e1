"""
udpx - Cross-lingual dependency parsing with multi-task language modeling.
"""

from __future__ import annotations

__version__ = "0.1.0"
__author__ = "Galen Spikes"
__email__ = "galenspikes@gmail.com"
