"""
Plain-text rendering of evaluation, fusion, ablation and gradient-check
results.

Every formatter returns a single string so the CLI prints one block per
result. Example::

    ━━━ sttformer eval ━━━ joint ━━━
        samples: 64 | top-1: 93.75% | loss: 0.2104

      class  samples  accuracy
          0       16   100.00%
          1       16    87.50%
    ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
"""

import math
from typing import Any, Dict, List, Mapping, Optional, Sequence

from .training.evaluate import EvalReport
from .training.fusion import FusionReport

_RULE = "━" * 60


def _percent(value: Optional[float]) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "n/a"
    return f"{100.0 * value:.2f}%"


def _header(kind: str, subject: str = "") -> str:
    title = f"━━━ sttformer {kind} ━━━"
    return f"{title} {subject} ━━━" if subject else title


def format_eval_report(report: EvalReport, subject: str = "") -> str:
    lines: List[str] = [_header("eval", subject)]
    loss = "n/a" if math.isnan(report.mean_loss) else f"{report.mean_loss:.4f}"
    lines.append(f"    samples: {report.num_samples} | top-1: {_percent(report.top1)} | loss: {loss}")
    lines.append("")
    lines.append("  class  samples  accuracy")
    for label, (count, accuracy) in enumerate(zip(report.class_counts, report.per_class)):
        lines.append(f"  {label:>5}  {int(count):>7}  {_percent(float(accuracy)):>8}")
    lines.append(_RULE)
    return "\n".join(lines)


def format_fusion_report(report: FusionReport) -> str:
    lines: List[str] = [_header("fusion"), "", "  mode          accuracy"]
    for row in report.rows:
        lines.append(f"  {row['mode']:<12}  {_percent(row['accuracy']):>8}")
    lines.append(_RULE)
    return "\n".join(lines)


def format_table(rows: Sequence[Mapping[str, Any]], columns: Sequence[str]) -> List[str]:
    """Left-aligned text columns sized to their widest cell."""
    def cell(value: Any) -> str:
        if isinstance(value, float):
            return _percent(value) if not math.isnan(value) else "n/a"
        return str(value)

    cells = [[cell(row.get(col, "")) for col in columns] for row in rows]
    widths = [max([len(col)] + [len(r[i]) for r in cells]) for i, col in enumerate(columns)]
    out = ["  " + "  ".join(col.ljust(w) for col, w in zip(columns, widths))]
    for r in cells:
        out.append("  " + "  ".join(value.ljust(w) for value, w in zip(r, widths)))
    return out


def format_ablation_table(rows: Sequence[Mapping[str, Any]]) -> str:
    columns = ["variant", "n", "pe", "iffa", "k1", "k2", "train_acc", "eval_acc"]
    return "\n".join([_header("ablation"), ""] + format_table(rows, columns) + [_RULE])


def format_gradcheck(errors: Dict[str, float], tolerance: float) -> str:
    worst = max(errors, key=errors.get) if errors else "-"
    max_error = errors.get(worst, 0.0) if errors else 0.0
    verdict = "PASS" if max_error < tolerance else "FAIL"
    lines = [
        _header("gradcheck"),
        f"    tensors: {len(errors)} | max rel error: {max_error:.3e} ({worst}) | tolerance: {tolerance:.0e} | {verdict}",
        _RULE,
    ]
    return "\n".join(lines)
