"""City- and metro-level publication indicators from affiliation data."""

__version__ = "0.1.0"
