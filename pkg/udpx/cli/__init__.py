"""
Command-line interface for udpx.
"""
