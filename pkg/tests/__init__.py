"""Tests for the UAV coverage analyzer."""
