"""Linear stability toolkit for elliptic rhombus orbits of the four-body problem."""

__version__ = "0.1.0"
