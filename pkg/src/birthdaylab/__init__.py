"""Birthday and repulsion inequalities for hard spheres, independent sets and matchings."""

__version__ = "0.1.0"
