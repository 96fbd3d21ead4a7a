"""Tests for dcw-portfolio."""
