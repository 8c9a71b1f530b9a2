"""EEG band-power pipeline discriminating 2D vs. 3D video watching."""

__version__ = "0.1.0"
