"""
qmms - quasi-metric-measure space laboratory, main package
"""
