"""Convex clustering under additive data perturbation."""
