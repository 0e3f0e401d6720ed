"""Test package for dbc-gridsim."""
