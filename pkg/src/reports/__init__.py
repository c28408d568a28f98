"""
Reports package
"""
