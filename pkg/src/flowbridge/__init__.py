"""Flow-matching bridges with chunked minibatch OT couplings."""

__version__ = "0.1.0"
