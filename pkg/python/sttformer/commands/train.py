"""Train one network on one data mode."""

import json
from pathlib import Path

from ..training.trainer import train
from .base import EXIT_OK, BaseCommand, add_run_arguments, load_split, run_config_from_options, topology_for


class Command(BaseCommand):
    help = (
        "Train a network. Writes config.json, log.jsonl and "
        "checkpoints/{best,last}.sttf into the run directory."
    )

    def add_arguments(self, parser):
        add_run_arguments(parser)

    def handle(self, **options):
        config = run_config_from_options(options)
        topology = topology_for(config)
        mode = config.run.mode
        dataset = load_split(config, topology, mode, "train")
        eval_dataset = None
        if config.run.eval_data or config.run.protocol:
            eval_dataset = load_split(config, topology, mode, "test")

        run_dir = Path(config.run.out)
        config.write_snapshot(run_dir)
        result = train(
            config.model, dataset, config.schedule,
            eval_dataset=eval_dataset, run_dir=run_dir, metadata={"mode": mode},
        )
        final = result.log[-1]
        self.stdout.write(json.dumps({
            "run_dir": str(run_dir),
            "mode": mode,
            "epochs": len(result.log),
            "best_epoch": result.best_epoch,
            "train_loss": final.train_loss,
            "train_acc": final.train_acc,
            "eval_acc": final.eval_acc,
        }, sort_keys=True))
        return EXIT_OK
