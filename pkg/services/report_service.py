"""
Text tables of metric reports, rendered through a Jinja2 template.
"""

import os
import logging
from typing import List, Optional, Sequence, Tuple

from jinja2 import Environment, FileSystemLoader, StrictUndefined

from models.metrics import MetricReport
from models.variant import VARIANT_TITLES, AblationTable

logger = logging.getLogger('attnseg.report')

COLUMNS = ("Method", "Accuracy", "mean Accuracy", "mean IOU", "IOU fire", "IOU background",
           "Avg. Consistency")

_template_dir = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'templates')
_jinja_env = Environment(
    loader=FileSystemLoader(_template_dir),
    undefined=StrictUndefined,
    keep_trailing_newline=True,
)


def _percent(value: Optional[float]) -> str:
    return "-" if value is None else f"{100.0 * value:.2f}"


def metric_cells(name: str, report: Optional[MetricReport], status: str = "ok") -> List[str]:
    if report is None:
        return [name, status.upper()] + [""] * (len(COLUMNS) - 2)
    return [
        name,
        _percent(report.class_accuracy),
        _percent(report.pixel_accuracy),
        _percent(report.mean_iou),
        _percent(report.iou_fire),
        _percent(report.iou_background),
        f"{report.avg_consistency:.4f}",
    ]


def render_table(rows: Sequence[Sequence[str]], header: Sequence[str] = COLUMNS,
                 title: Optional[str] = None) -> str:
    widths = [len(h) for h in header]
    for cells in rows:
        widths = [max(w, len(c)) for w, c in zip(widths, cells)]
    padded_header = [h.ljust(w) for h, w in zip(header, widths)]
    padded_rows = [[c.ljust(w) for c, w in zip(cells, widths)] for cells in rows]
    rule = "-+-".join("-" * w for w in widths)
    template = _jinja_env.get_template("metric_table.txt.j2")
    return template.render(title=title, header=padded_header, rule=rule, rows=padded_rows)


def render_reports(named_reports: Sequence[Tuple[str, Optional[MetricReport]]],
                   title: Optional[str] = None) -> str:
    return render_table([metric_cells(name, report) for name, report in named_reports],
                        title=title)


def render_ablation(table: AblationTable) -> str:
    rows = [metric_cells(VARIANT_TITLES[row.variant], row.report, row.status) for row in table.rows]
    return render_table(rows, title=f"Variant comparison (seed {table.seed})")


def render_epoch(epoch: int, train_loss: dict, val_loss: dict, report: MetricReport) -> str:
    header = ("epoch", "train L", "train L_S", "train L_C", "val L", "mean Accuracy",
              "mean IOU", "Avg. Consistency")
    cells = [
        str(epoch),
        f"{train_loss['total']:.4f}",
        f"{train_loss['seg_loss']:.4f}",
        f"{train_loss['class_loss']:.4f}",
        f"{val_loss['total']:.4f}",
        _percent(report.pixel_accuracy),
        _percent(report.mean_iou),
        f"{report.avg_consistency:.4f}",
    ]
    return render_table([cells], header=header)
