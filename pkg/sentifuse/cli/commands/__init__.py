"""
CLI Commands - Individual command implementations.

Each module holds one command function registered by ``sentifuse.cli.main``;
``config`` is a command group.
"""

from sentifuse.cli.commands import baseline, compare, config, evaluate, featurize, prepare, run, synth, train

__all__ = ["synth", "featurize", "prepare", "train", "evaluate", "baseline", "compare", "run", "config"]
