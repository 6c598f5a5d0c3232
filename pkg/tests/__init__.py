"""Tests for catgate."""
