"""Uniform dimension toolkit for fractional Brownian motion."""
