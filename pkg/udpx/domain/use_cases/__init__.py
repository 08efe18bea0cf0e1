"""
Use cases: training, self-training and corpus parsing.
"""
