"""
Domain layer for udpx.

Domain models, services and use cases, separated from file formats and the
command line.
"""
