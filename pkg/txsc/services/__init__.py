"""Toolkit stages: parsing, analysis, transformation, execution and checking."""
