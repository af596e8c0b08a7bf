"""Subcommands of the ``sttformer`` CLI, keyed by name."""

from . import ablate, convert, evaluate, fuse, gradcheck, synth, train

COMMANDS = {
    "convert": convert.Command,
    "synth": synth.Command,
    "train": train.Command,
    "eval": evaluate.Command,
    "fuse": fuse.Command,
    "gradcheck": gradcheck.Command,
    "ablate": ablate.Command,
}

__all__ = ["COMMANDS"]
