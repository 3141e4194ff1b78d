"""Tree amalgamations of locally finite graphs and quasi-isometry tooling."""

__version__ = "0.1.0"
