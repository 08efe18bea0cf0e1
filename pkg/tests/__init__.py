"""Test package for udpx."""
