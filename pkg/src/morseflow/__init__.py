"""Orbit spaces of f-gradient flows."""
