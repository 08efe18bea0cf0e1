"""
Neural parser components.
"""
