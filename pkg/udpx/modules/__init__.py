"""
Processing modules.
"""
