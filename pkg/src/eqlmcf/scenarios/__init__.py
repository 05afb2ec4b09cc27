"""Experiment catalog, scenario runner and plots."""
