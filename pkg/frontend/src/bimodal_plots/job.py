"""Plot job descriptor."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class PlotJob:
    """One figure render: bundle CSVs in, a single image out.

    log_y and annotate are the only style knobs; everything else follows
    the bundle contents.
    """

    figure: str
    inputs: list[Path] = field(default_factory=list)
    output: Path = Path("figure.svg")
    log_y: bool = False
    annotate: bool = True
    dpi: int = 150
