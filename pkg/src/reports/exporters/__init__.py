"""
Report exporters package
"""
