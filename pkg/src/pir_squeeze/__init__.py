"""Private retrieval from MDS-coded storage with colluding servers, over prime fields."""

__version__ = "0.1.0"
