"""
Calculation and construction services package
"""
