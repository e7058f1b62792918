"""
Shared utilities: the parallel-map contract and logging setup.
"""
