"""Fuse the scores of several mode checkpoints on one dataset."""

import json
from pathlib import Path

import numpy as np

from ..core.checkpoint import load_checkpoint
from ..data.skeleton import derive_mode, load_dataset_dir
from ..data.splits import split_dataset
from ..errors import ConfigError
from ..model.network import SttFormer
from ..report_formatter import format_fusion_report
from ..training.evaluate import predict_logits
from ..training.fusion import AVERAGES, fusion_report
from .base import EXIT_OK, BaseCommand, add_run_arguments, run_config_from_options, topology_for


def _parse_entry(entry: str):
    """``mode=path`` or a bare path (mode read from checkpoint metadata)."""
    if "=" in entry:
        mode, path = entry.split("=", 1)
        return mode, path
    return None, entry


class Command(BaseCommand):
    help = (
        "Average the scores of mode checkpoints (joint, bone, motion, ...) and report "
        "one accuracy per mode plus the fused accuracy; writes fusion.json into --out."
    )

    def add_arguments(self, parser):
        parser.add_argument("checkpoints", nargs="+", metavar="[MODE=]CHECKPOINT",
                            help="checkpoint per mode; the mode defaults to the one stored at training time")
        parser.add_argument("--weights", help="comma-separated per-mode weights (default: equal)")
        parser.add_argument("--average", choices=AVERAGES, default="logits",
                            help="average raw logits or softmax probabilities (default: logits)")
        parser.add_argument("--batch-size", type=int, default=64, help="evaluation batch size")
        add_run_arguments(parser)

    def handle(self, **options):
        config = run_config_from_options(options)
        data = config.run.eval_data or config.run.data
        if not data or not Path(data).is_dir():
            raise ConfigError(f"evaluation directory not found: {data}")
        raw = load_dataset_dir(data)
        if config.run.protocol:
            raw = split_dataset(raw, config.run.protocol)[1]
        labels = [seq.label for seq in raw]

        mode_logits = {}
        for entry in options["checkpoints"]:
            mode, path = _parse_entry(entry)
            checkpoint = load_checkpoint(path)
            model = SttFormer.from_checkpoint(checkpoint)
            mode = mode or checkpoint.metadata.get("mode")
            if not mode:
                raise ConfigError(f"checkpoint {path} does not record its data mode; pass MODE={path}")
            if mode in mode_logits:
                raise ConfigError(f"mode '{mode}' given twice")
            config.model = model.config
            sequences = [derive_mode(seq, mode, topology_for(config)) for seq in raw]
            mode_logits[mode] = predict_logits(model, sequences, batch_size=options["batch_size"])

        weights = None
        if options.get("weights"):
            weights = [float(w) for w in options["weights"].split(",")]
        report = fusion_report(mode_logits, labels, weights, options["average"])

        out = Path(config.run.out)
        out.mkdir(parents=True, exist_ok=True)
        payload = {
            "average": options["average"],
            "weights": weights,
            "num_samples": int(np.asarray(labels).size),
            **report.to_dict(),
        }
        (out / "fusion.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        self.stdout.write(format_fusion_report(report))
        return EXIT_OK
