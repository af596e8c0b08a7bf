"""Convert NTU-style ``.skeleton`` text files into the ``.sttd`` interchange format."""

import logging
from pathlib import Path

from ..data.skeleton import MAX_PERSONS, NTU_JOINTS, read_skeleton_file, save_sttd, write_skeleton_text
from ..errors import SttfError
from .base import EXIT_OK, EXIT_USAGE, BaseCommand, CommandError

logger = logging.getLogger("sttformer.cli")

FORMATS = ("sttd", "skeleton")


def convert_directory(input_dir, output_dir, fmt: str = "sttd", num_joints: int = NTU_JOINTS,
                      max_persons: int = MAX_PERSONS):
    """Convert every ``*.skeleton`` file; returns (converted count, failed file names)."""
    input_dir = Path(input_dir)
    output_dir = Path(output_dir)
    if not input_dir.is_dir():
        raise CommandError(f"input directory not found: {input_dir}")
    files = sorted(input_dir.glob("*.skeleton"))
    converted = 0
    failures = []
    for path in files:
        try:
            seq = read_skeleton_file(path, num_joints, max_persons)
        except (SttfError, OSError, UnicodeDecodeError) as exc:
            logger.warning("skipping %s: %s", path.name, exc)
            failures.append(path.name)
            continue
        if fmt == "sttd":
            save_sttd(seq, output_dir / f"{path.stem}.sttd")
        else:
            output_dir.mkdir(parents=True, exist_ok=True)
            (output_dir / path.name).write_text(write_skeleton_text(seq), encoding="utf-8")
        converted += 1
    return converted, failures


class Command(BaseCommand):
    help = "Convert .skeleton text files to .sttd (or normalized .skeleton) files."

    def add_arguments(self, parser):
        parser.add_argument("input_dir", help="directory of .skeleton files")
        parser.add_argument("output_dir", help="directory to write converted files to")
        parser.add_argument("--format", choices=FORMATS, default="sttd", help="output format (default: sttd)")
        parser.add_argument("--joints", type=int, default=NTU_JOINTS, help="joints per body (default: 25)")
        parser.add_argument("--max-persons", type=int, default=MAX_PERSONS,
                            help="bodies kept per sequence, highest motion first (default: 2)")

    def handle(self, **options):
        converted, failures = convert_directory(
            options["input_dir"], options["output_dir"], options["format"],
            options["joints"], options["max_persons"],
        )
        total = converted + len(failures)
        if total == 0:
            logger.warning("no .skeleton files found in %s", options["input_dir"])
        if failures:
            self.stderr.write(f"warning: {len(failures)} file(s) failed: {', '.join(failures)}")
        self.stdout.write(f"converted {converted} of {total} file(s) to {options['output_dir']}")
        if total and converted == 0:
            return EXIT_USAGE
        return EXIT_OK
