"""Segmentation trainer consuming loudness-occupancy dataset directories."""
