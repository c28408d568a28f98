"""
Experiment factories package
"""
