"""
Core infrastructure for udpx: configuration, logging, errors and worker pools.
"""
