"""
Domain models for udpx.
"""

from udpx.domain.models.alphabets import Alphabet, Alphabets
from udpx.domain.models.distribution import ParseDistribution
from udpx.domain.models.ensemble import Ensemble
from udpx.domain.models.reports import (
    EpochRecord,
    EvaluationReport,
    RoundReport,
    SignificanceReport,
)
from udpx.domain.models.sentence import Sentence, Token, Treebank

__all__ = [
    "Alphabet",
    "Alphabets",
    "Ensemble",
    "EpochRecord",
    "EvaluationReport",
    "ParseDistribution",
    "RoundReport",
    "Sentence",
    "SignificanceReport",
    "Token",
    "Treebank",
]
