"""
Command plumbing shared by every ``sttformer`` subcommand.

A command declares ``help``, registers its flags in ``add_arguments`` and
does its work in ``handle(**options)``, returning an exit code. Output goes
through ``self.stdout`` / ``self.stderr`` so tests can capture it.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO

from ..core.tensor import set_precision
from ..data.skeleton import SkeletonSequence, derive_mode, load_dataset_dir
from ..data.splits import split_dataset
from ..data.topology import SkeletonTopology, chain_topology, load_topology, ntu_topology
from ..errors import ConfigError, SttfError
from ..run_config import RunConfig, build_run_config, load_config_file

logger = logging.getLogger("sttformer.cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVARIANT = 2


class CommandError(SttfError):
    """Command failure with the exit code to report."""

    def __init__(self, message: str, exit_code: int = EXIT_USAGE):
        self.exit_code = exit_code
        super().__init__(message)


class OutputWrapper:
    """Line-oriented writer around a text stream."""

    def __init__(self, stream: TextIO):
        self._stream = stream

    def write(self, message: str = "") -> None:
        if not message.endswith("\n"):
            message += "\n"
        self._stream.write(message)


class BaseCommand:
    help = ""

    def __init__(self, stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None):
        self.stdout = OutputWrapper(stdout or sys.stdout)
        self.stderr = OutputWrapper(stderr or sys.stderr)

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        """Register command flags."""

    def handle(self, **options: Any) -> int:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Shared run flags
# ---------------------------------------------------------------------------

def add_run_arguments(parser: argparse.ArgumentParser, data: bool = True) -> None:
    """Flags that feed the RunConfig (defaults < --config file < flags)."""
    parser.add_argument("--config", metavar="PATH", help="JSON or key=value run config file")
    parser.add_argument("--seed", type=int, help="seed for initialization and batch order")
    parser.add_argument("--mode", choices=["joint", "bone", "motion", "bone_motion"], help="data mode")
    parser.add_argument("--n", type=int, help="frames per tuple (must divide T0)")
    parser.add_argument("--no-pe", action="store_true", help="disable the positional encoding")
    parser.add_argument("--no-iffa", action="store_true", help="bypass inter-frame feature aggregation")
    parser.add_argument("--k1", type=int, help="output-projection kernel width (odd)")
    parser.add_argument("--k2", type=int, help="inter-frame aggregation kernel height (odd)")
    parser.add_argument("--precision", choices=["f32", "f64"], help="floating-point precision")
    parser.add_argument("--out", metavar="DIR", help="run directory")
    parser.add_argument("--epochs", type=int, help="override the epoch count")
    if data:
        parser.add_argument("--data", metavar="DIR", help="directory of .sttd training/evaluation files")
        parser.add_argument("--eval-data", metavar="DIR", help="directory of .sttd held-out files")
        parser.add_argument("--topology", metavar="PATH", help="JSON parent list for bone modes")
        parser.add_argument("--protocol", choices=["xsub", "xview", "xset"],
                            help="split --data into train/test halves by subject, camera or setup")


def run_config_from_options(options: Dict[str, Any], defaults: Optional[Dict[str, Any]] = None) -> RunConfig:
    """``defaults`` (command-specific) sit below the config file."""
    file_values = dict(defaults or {})
    if options.get("config"):
        file_values.update(load_config_file(options["config"]))
    overrides = {
        "seed": options.get("seed"),
        "mode": options.get("mode"),
        "n": options.get("n"),
        "k1": options.get("k1"),
        "k2": options.get("k2"),
        "precision": options.get("precision"),
        "out": options.get("out"),
        "epochs": options.get("epochs"),
        "data": options.get("data"),
        "eval_data": options.get("eval_data"),
        "topology": options.get("topology"),
        "protocol": options.get("protocol"),
        "pe_enabled": False if options.get("no_pe") else None,
        "iffa_enabled": False if options.get("no_iffa") else None,
    }
    config = build_run_config(file_values, overrides)
    set_precision(config.run.precision)
    return config


def topology_for(config: RunConfig) -> SkeletonTopology:
    """Explicit topology file, else the NTU layout for 25 joints, else a chain."""
    if config.run.topology:
        topology = load_topology(config.run.topology)
    elif config.model.num_joints == 25:
        topology = ntu_topology()
    else:
        topology = chain_topology(config.model.num_joints)
    if topology.num_joints != config.model.num_joints:
        raise ConfigError(
            f"topology has {topology.num_joints} joints but num_joints={config.model.num_joints}"
        )
    return topology


def load_mode_dataset(directory: Optional[str], mode: str, topology: SkeletonTopology, what: str) -> List[SkeletonSequence]:
    if not directory:
        raise ConfigError(f"no {what} directory given (use --data / --eval-data or the config file)")
    if not Path(directory).is_dir():
        raise ConfigError(f"{what} directory not found: {directory}")
    sequences = load_dataset_dir(directory)
    logger.info("loaded %d %s sequences from %s (mode=%s)", len(sequences), what, directory, mode)
    return [derive_mode(seq, mode, topology) for seq in sequences]


def load_split(config: RunConfig, topology: SkeletonTopology, mode: str, half: str) -> List[SkeletonSequence]:
    """``half`` ("train" or "test") of the run's data.

    With a split protocol both halves come from ``data``; otherwise
    train is ``data`` and test is ``eval_data`` (falling back to ``data``).
    """
    run = config.run
    if run.protocol:
        train, test = split_dataset(load_mode_dataset(run.data, mode, topology, "dataset"), run.protocol)
        logger.info("%s split: %d train / %d test sequences", run.protocol, len(train), len(test))
        return train if half == "train" else test
    if half == "train":
        return load_mode_dataset(run.data, mode, topology, "training")
    return load_mode_dataset(run.eval_data or run.data, mode, topology, "evaluation")
