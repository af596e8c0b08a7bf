"""Write a synthetic dataset (train/ and eval/ splits) as .sttd files."""

from pathlib import Path

from ..data.skeleton import save_sttd
from ..data.synthetic import make_synthetic_dataset
from .base import EXIT_OK, BaseCommand, run_config_from_options


def write_synthetic(out_dir, num_classes: int, samples_per_class: int, eval_samples_per_class: int,
                    num_frames: int, num_joints: int, seed: int, noise: float):
    """Training split from ``seed``, held-out split from ``seed + 1``."""
    out_dir = Path(out_dir)
    counts = {}
    splits = (("train", samples_per_class, seed), ("eval", eval_samples_per_class, seed + 1))
    for split, per_class, split_seed in splits:
        if per_class <= 0:
            continue
        sequences = make_synthetic_dataset(num_classes, per_class, num_frames, num_joints, split_seed, noise=noise)
        for seq in sequences:
            save_sttd(seq, out_dir / split / f"{seq.name}.sttd")
        counts[split] = len(sequences)
    return counts


SYNTH_DEFAULTS = {"num_classes": 4, "num_joints": 8, "num_frames": 24}


class Command(BaseCommand):
    help = (
        "Generate a seed-deterministic synthetic skeleton dataset. Classes, joints, frames and seed "
        "come from --config (num_classes, num_joints, num_frames, seed) unless given as flags."
    )

    def add_arguments(self, parser):
        parser.add_argument("--out", required=True, metavar="DIR", help="output directory (gets train/ and eval/)")
        parser.add_argument("--config", metavar="PATH", help="run config to size the data for (JSON or key=value)")
        parser.add_argument("--classes", type=int, help="number of classes (default: 4)")
        parser.add_argument("--samples-per-class", type=int, default=16, help="training samples per class")
        parser.add_argument("--eval-samples-per-class", type=int, default=8, help="held-out samples per class")
        parser.add_argument("--frames", type=int, help="raw frames per sequence (default: 24)")
        parser.add_argument("--joints", type=int, help="joints per skeleton (default: 8)")
        parser.add_argument("--noise", type=float, default=0.02, help="coordinate noise std in metres")
        parser.add_argument("--seed", type=int, help="generator seed (default: 0)")

    def handle(self, **options):
        config = run_config_from_options({"config": options.get("config"), "seed": options.get("seed")},
                                         defaults=SYNTH_DEFAULTS)
        model = config.model

        def pick(flag, fallback):
            return options[flag] if options.get(flag) is not None else fallback

        counts = write_synthetic(
            options["out"], pick("classes", model.num_classes), options["samples_per_class"],
            options["eval_samples_per_class"], pick("frames", model.num_frames), pick("joints", model.num_joints),
            config.schedule.seed, options["noise"],
        )
        summary = ", ".join(f"{split}: {count}" for split, count in counts.items())
        self.stdout.write(f"wrote synthetic dataset to {options['out']} ({summary})")
        return EXIT_OK
