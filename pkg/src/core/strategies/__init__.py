"""
Strategy patterns package
"""
