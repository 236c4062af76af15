"""
equicube: perfect colorings (equitable partitions) of the hypercube Q_n.
"""

__version__ = "0.1.0"
