"""
Experiment generators package
"""
