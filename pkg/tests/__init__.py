"""Tests for ris_vlc."""
