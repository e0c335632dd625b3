"""Test suite implementations."""
