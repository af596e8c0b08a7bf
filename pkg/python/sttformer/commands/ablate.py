"""
Ablation sweeps on a small model.

Variants (``--variants``):
  - ``full``     the configured model
  - ``no-pe``    positional encoding off
  - ``no-iffa``  inter-frame aggregation bypassed
  - ``k1k2``     k1 = k2 = 1

``--n-list`` adds one full-model row per tuple length. Without ``--n-list``
the default variant list is all four; with it, only the listed variants
run. Each row trains from scratch on the training split and reports the
final train and held-out accuracy, averaged over ``--seeds``.
"""

import dataclasses
import json
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from ..data.skeleton import derive_mode
from ..data.synthetic import make_synthetic_dataset
from ..errors import ConfigError
from ..report_formatter import format_ablation_table
from ..training.trainer import train
from .base import EXIT_OK, BaseCommand, add_run_arguments, load_split, run_config_from_options, topology_for

ABLATION_DEFAULTS: Dict[str, Any] = {
    "n": 3,
    "channels": [16, 16, 32, 32],
    "heads": 4,
    "qk_dim_per_head": 8,
    "c1": 16,
    "num_classes": 4,
    "num_joints": 8,
    "num_frames": 24,
    "max_persons": 1,
    "epochs": 60,
    "base_lr": 0.05,
    "milestones": [40, 50],
    "batch_size": 16,
    "out": "runs/ablation",
}

VARIANTS: Dict[str, Dict[str, Any]] = {
    "full": {},
    "no-pe": {"pe_enabled": False},
    "no-iffa": {"iffa_enabled": False},
    "k1k2": {"k1": 1, "k2": 1},
}


def _int_list(text: Optional[str]) -> List[int]:
    if not text:
        return []
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated integer list, got {text!r}") from None


def plan_rows(variants: Optional[str], n_list: List[int]) -> List[Dict[str, Any]]:
    """(label, model overrides) for every row, in table order."""
    if variants is None:
        names = [] if n_list else list(VARIANTS)
    else:
        names = [v.strip() for v in variants.split(",") if v.strip()]
    rows = []
    for name in names:
        if name not in VARIANTS:
            raise ConfigError(f"unknown variant '{name}'. Valid variants: {', '.join(VARIANTS)}")
        rows.append({"variant": name, "changes": dict(VARIANTS[name])})
    for n in n_list:
        rows.append({"variant": f"n={n}", "changes": {"n": n}})
    if not rows:
        raise ConfigError("nothing to run: give --variants and/or --n-list")
    return rows


class Command(BaseCommand):
    help = (
        "Train the model under ablation switches (PE, IFFA, k1=k2=1) and/or a sweep of "
        "tuple lengths n, and print a comparison table; writes ablation.json into --out."
    )

    def add_arguments(self, parser):
        add_run_arguments(parser)
        parser.add_argument("--variants", help=f"comma-separated subset of: {', '.join(VARIANTS)}")
        parser.add_argument("--n-list", help="comma-separated tuple lengths to sweep, e.g. 1,3,6")
        parser.add_argument("--seeds", help="comma-separated training seeds to average (default: --seed)")
        parser.add_argument("--samples-per-class", type=int, default=16, help="synthetic training samples per class")
        parser.add_argument("--eval-samples-per-class", type=int, default=8, help="synthetic held-out samples per class")
        parser.add_argument("--data-seed", type=int, default=0, help="synthetic data seed (held-out uses +1)")

    def handle(self, **options):
        config = run_config_from_options(options, defaults=ABLATION_DEFAULTS)
        rows = plan_rows(options.get("variants"), _int_list(options.get("n_list")))
        seeds = _int_list(options.get("seeds")) or [config.schedule.seed]
        cfg = config.model
        mode = config.run.mode
        topology = topology_for(config)

        if config.run.data:
            train_set = load_split(config, topology, mode, "train")
            eval_set = load_split(config, topology, mode, "test")
        else:
            seed = options["data_seed"]
            train_set = [derive_mode(s, mode, topology) for s in make_synthetic_dataset(
                cfg.num_classes, options["samples_per_class"], cfg.num_frames, cfg.num_joints, seed)]
            eval_set = [derive_mode(s, mode, topology) for s in make_synthetic_dataset(
                cfg.num_classes, options["eval_samples_per_class"], cfg.num_frames, cfg.num_joints, seed + 1)]

        out = Path(config.run.out)
        config.write_snapshot(out)
        table = []
        for row in rows:
            variant_cfg = cfg.replace(**row["changes"])
            train_accs, eval_accs = [], []
            for seed in seeds:
                schedule = dataclasses.replace(config.schedule, seed=seed)
                result = train(variant_cfg, train_set, schedule, eval_dataset=eval_set,
                               metadata={"mode": mode, "variant": row["variant"]})
                train_accs.append(result.log[-1].train_acc)
                eval_accs.append(result.log[-1].eval_acc)
            table.append({
                "variant": row["variant"],
                "n": variant_cfg.n,
                "pe": variant_cfg.pe_enabled,
                "iffa": variant_cfg.iffa_enabled,
                "k1": variant_cfg.k1,
                "k2": variant_cfg.k2,
                "seeds": len(seeds),
                "train_acc": float(np.mean(train_accs)),
                "eval_acc": float(np.mean(eval_accs)),
            })

        out.mkdir(parents=True, exist_ok=True)
        (out / "ablation.json").write_text(json.dumps({"rows": table}, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        self.stdout.write(format_ablation_table(table))
        return EXIT_OK
