"""
KAN-Ehrenfest time-series toolkit - Source Package
"""
