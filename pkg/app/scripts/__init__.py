"""
Scripts package for the fBm Legendre expansion toolkit.
"""
