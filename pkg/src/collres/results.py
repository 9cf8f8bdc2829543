"""Tabular results with a metadata block, written as CSV and JSON."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path


def format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


@dataclass
class ResultTable:
    columns: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values, expected {len(self.columns)}")
        self.rows.append(tuple(values))

    def column(self, name):
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([format_value(v) for v in row])
        return buf.getvalue()

    def to_json(self):
        doc = {"columns": self.columns, "rows": [list(r) for r in self.rows], "metadata": self.metadata}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def write(self, path):
        """Write CSV to ``path`` and the JSON mirror next to it (``.json`` suffix)."""
        path = Path(path)
        json_path = path.with_suffix(".json")
        if path.suffix == ".json":
            path = path.with_suffix(".csv")
        path.write_text(self.to_csv(), newline="")
        json_path.write_text(self.to_json())
        return path, json_path
