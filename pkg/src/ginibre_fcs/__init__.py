"""Counting statistics of Ginibre eigenvalues in centred discs."""
