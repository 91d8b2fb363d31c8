"""Simulator and optimizer for a VLC link assisted by a mirror-array RIS and an LC receiver."""
