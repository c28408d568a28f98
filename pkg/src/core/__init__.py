"""
Core business logic package
"""
