"""Land-cover diversity conditioned on appropriation of net primary production."""

__version__ = "0.1.0"
