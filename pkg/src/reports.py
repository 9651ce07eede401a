"""
Plain-text exports rendered with Jinja2 templates from src/templates.
"""

from pathlib import Path
from typing import Iterable, Optional, Sequence

from jinja2 import Environment, FileSystemLoader, StrictUndefined

from .activity_power import comparison_rows
from .randomness import HISTOGRAM_LABELS
from .schemas import CycleReport, DesignClockRow, GatingComparison, HwTraceEvent, ReferencePower, SuiteReport

TEMPLATES_DIR = Path(__file__).parent / "templates"

_env = Environment(
    loader=FileSystemLoader(str(TEMPLATES_DIR)),
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
    undefined=StrictUndefined,
    autoescape=False,
)


def render_cycle_report(report: CycleReport) -> str:
    return _env.get_template("cycle_report.txt.j2").render(report=report)


def render_design_table(rows: Sequence[DesignClockRow]) -> str:
    return _env.get_template("design_table.txt.j2").render(rows=rows)


def render_activity(comparison: GatingComparison, reference: Optional[ReferencePower] = None) -> str:
    return _env.get_template("activity_report.txt.j2").render(
        comparison=comparison,
        rows=comparison_rows(comparison),
        reference=reference,
    )


def render_suite_report(report: SuiteReport) -> str:
    """Proportion/uniformity table followed by the 11-range histogram block."""
    return _env.get_template("suite_report.txt.j2").render(report=report, labels=HISTOGRAM_LABELS)


def render_trace(events: Iterable[HwTraceEvent]) -> str:
    return "".join(event.to_line() + "\n" for event in events)


def write_report(text: str, path: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text)
