"""Diurnal activity and content-reliability analysis."""
