"""
Data layer package
"""
