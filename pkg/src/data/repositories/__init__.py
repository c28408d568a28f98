"""
Repository implementations package
"""
