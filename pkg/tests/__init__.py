"""Tests for the two-phase flow simulator."""
