import json
import os
from typing import Any, Dict, Optional

import pandas as pd
from pydantic import BaseModel
from reportlab.lib import colors
from reportlab.lib.pagesizes import letter
from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
from reportlab.platypus import Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

from models.bench import SweepResult
from models.manifest import RunManifest
from .flop_model import FORMULAS

TABLE_STYLE = TableStyle([
    ('BACKGROUND', (0, 0), (-1, 0), colors.grey),
    ('TEXTCOLOR', (0, 0), (-1, 0), colors.whitesmoke),
    ('ALIGN', (0, 0), (-1, -1), 'CENTER'),
    ('FONTNAME', (0, 0), (-1, 0), 'Helvetica-Bold'),
    ('FONTSIZE', (0, 0), (-1, 0), 11),
    ('BOTTOMPADDING', (0, 0), (-1, 0), 10),
    ('BACKGROUND', (0, 1), (-1, -1), colors.beige),
    ('TEXTCOLOR', (0, 1), (-1, -1), colors.black),
    ('FONTNAME', (0, 1), (-1, -1), 'Helvetica'),
    ('FONTSIZE', (0, 1), (-1, -1), 10),
    ('GRID', (0, 0), (-1, -1), 1, colors.black)
])


class ExportHandler:
    def __init__(self, output_dir: str = "reports"):
        """Initialize ExportHandler with output directory"""
        self.output_dir = output_dir
        if output_dir and not os.path.exists(output_dir):
            os.makedirs(output_dir)

    def _path(self, filename: str) -> str:
        if os.path.isabs(filename) or os.path.dirname(filename):
            directory = os.path.dirname(filename)
            if directory and not os.path.exists(directory):
                os.makedirs(directory)
            return filename
        return os.path.join(self.output_dir, filename)

    def export_json(self, data: Any, filename: str) -> str:
        """Export a report model (or plain dict) as JSON in field order"""
        if isinstance(data, BaseModel):
            data = data.model_dump(mode="json")
        filepath = self._path(filename)
        with open(filepath, 'w') as f:
            json.dump(data, f, indent=2)
        return filepath

    def export_csv(self, frame: pd.DataFrame, filename: str) -> str:
        """Export a table to CSV, one row per record"""
        filepath = self._path(filename)
        frame.to_csv(filepath, index=False)
        return filepath

    def export_pdf(self, sweep: SweepResult, filename: str) -> str:
        """Render a sweep: the complexity formulas, fitted slopes and per-record timings"""
        filepath = self._path(filename)
        doc = SimpleDocTemplate(filepath, pagesize=letter)
        styles = getSampleStyleSheet()
        title_style = ParagraphStyle('CustomTitle', parent=styles['Heading1'], fontSize=20, spaceAfter=20)
        elements = [
            Paragraph("Learner Complexity Report", title_style),
            Paragraph(f"Method {sweep.method}, sweep over {sweep.axis}", styles["Normal"]),
            Spacer(1, 20),
            Paragraph("Complexity Models", styles['Heading2']),
        ]

        formulas = Table([['Method', 'Operation count']] + [[m, f] for m, f in FORMULAS.items()])
        formulas.setStyle(TABLE_STYLE)
        elements.extend([formulas, Spacer(1, 20), Paragraph("Fitted Slopes", styles['Heading2'])])

        slopes = Table([
            ['Time slope', 'Flop-model slope', 'Primal/dual parity'],
            [_fmt(sweep.time_slope), _fmt(sweep.flop_slope), _fmt(sweep.parity_error, "{:.2e}")],
        ])
        slopes.setStyle(TABLE_STYLE)
        elements.extend([slopes, Spacer(1, 20), Paragraph("Records", styles['Heading2'])])

        rows = [[sweep.axis, 'Median (ms)', 'Min (ms)', 'Flops', 'Note']]
        for value, record in zip(sweep.values, sweep.records):
            rows.append([
                str(value),
                _fmt(None if record.time_ns_median is None else record.time_ns_median / 1e6),
                _fmt(None if record.time_ns_min is None else record.time_ns_min / 1e6),
                str(record.flop_estimate),
                "skipped" if record.skipped else "",
            ])
        records = Table(rows)
        records.setStyle(TABLE_STYLE)
        elements.append(records)

        doc.build(elements)
        return filepath

    def export_manifest(self, manifest: RunManifest, primary_output: str) -> str:
        """Write <stem>.manifest.json next to the primary output"""
        stem, _ = os.path.splitext(primary_output)
        filepath = f"{stem}.manifest.json"
        with open(filepath, 'w') as f:
            json.dump(manifest.model_dump(mode="json"), f, indent=2)
        return filepath


def _fmt(value: Optional[float], pattern: str = "{:.3f}") -> str:
    return "N/A" if value is None else pattern.format(value)


def manifest_config(values: Dict[str, Any]) -> Dict[str, Any]:
    """Keep only JSON-friendly scalars and lists from a flag namespace"""
    return {key: value for key, value in values.items()
            if isinstance(value, (str, int, float, bool, list, tuple, type(None))) and key != "handler"}
