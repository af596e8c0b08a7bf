"""Gradient self-test: every op plus the tiny network, against finite differences."""

import json
from pathlib import Path

from ..model.config import tiny_config
from ..model.selftest import TOLERANCE, check_network_gradients, check_op_gradients
from ..report_formatter import format_gradcheck
from .base import EXIT_INVARIANT, EXIT_OK, BaseCommand


class Command(BaseCommand):
    help = (
        "Compare tape gradients with central differences (64-bit) for every op and for "
        "a tiny network (T0=12, V0=5, n=3, L=2, h=2). Exits 2 when any error reaches the tolerance. "
        "Takes only its own flags: the check always runs in 64-bit on the built-in tiny network, "
        "so --config and --precision do not apply."
    )

    def add_arguments(self, parser):
        parser.add_argument("--seed", type=int, default=0, help="seed for parameters and inputs")
        parser.add_argument("--eps", type=float, default=1e-4, help="finite-difference step")
        parser.add_argument("--tolerance", type=float, default=TOLERANCE, help="max relative error allowed")
        parser.add_argument("--skip-ops", action="store_true", help="only check the network")
        parser.add_argument("--out", metavar="DIR", help="also write gradcheck.json here")

    def handle(self, **options):
        errors = {}
        if not options["skip_ops"]:
            errors.update({f"op:{name}": err for name, err in check_op_gradients(options["seed"], options["eps"]).items()})
        network = check_network_gradients(tiny_config(), seed=options["seed"], eps=options["eps"])
        errors.update({f"net:{name}": err for name, err in network.errors.items()})

        tolerance = options["tolerance"]
        max_error = max(errors.values())
        self.stdout.write(format_gradcheck(errors, tolerance))
        if options.get("out"):
            out = Path(options["out"])
            out.mkdir(parents=True, exist_ok=True)
            payload = {"tolerance": tolerance, "max_error": max_error, "errors": errors}
            (out / "gradcheck.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return EXIT_OK if max_error < tolerance else EXIT_INVARIANT
