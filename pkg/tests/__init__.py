# tests/__init__.py
"""Test package for the knapsack QUBO benchmark."""
