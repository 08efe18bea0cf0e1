"""
Corpus input and output.
"""
