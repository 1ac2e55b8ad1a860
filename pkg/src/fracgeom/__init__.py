"""Fractional perimeters, nonlocal curvature and nonlocal minimal graphs."""
