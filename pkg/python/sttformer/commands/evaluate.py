"""Evaluate a checkpoint on a dataset directory."""

import json
from pathlib import Path

from ..core.checkpoint import load_checkpoint
from ..model.network import SttFormer
from ..report_formatter import format_eval_report
from ..training.evaluate import evaluate
from .base import EXIT_OK, BaseCommand, add_run_arguments, load_split, run_config_from_options, topology_for


class Command(BaseCommand):
    help = "Evaluate a checkpoint; prints the report and writes eval.json into --out."

    def add_arguments(self, parser):
        parser.add_argument("checkpoint", help="checkpoint file (.sttf)")
        parser.add_argument("--batch-size", type=int, default=64, help="evaluation batch size")
        add_run_arguments(parser)

    def handle(self, **options):
        checkpoint = load_checkpoint(options["checkpoint"])
        model = SttFormer.from_checkpoint(checkpoint)
        config = run_config_from_options(options)
        # the checkpoint's own architecture wins over config defaults
        config.model = model.config
        mode = options.get("mode") or checkpoint.metadata.get("mode") or config.run.mode
        dataset = load_split(config, topology_for(config), mode, "test")

        report = evaluate(model, dataset, batch_size=options["batch_size"])
        out = Path(config.run.out)
        out.mkdir(parents=True, exist_ok=True)
        payload = {"checkpoint": str(options["checkpoint"]), "mode": mode, **report.to_dict()}
        (out / "eval.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        self.stdout.write(format_eval_report(report, mode))
        return EXIT_OK
