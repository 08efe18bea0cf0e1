"""
Domain services: scoring and ensembling.
"""
