"""Training-free smile/laugh detection from local mouth keypoints."""

__version__ = "0.1.0"
