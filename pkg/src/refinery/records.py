"""Run records: CSV tables plus a key=value sidecar, both round-trippable."""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from pathlib import Path

SIDECAR_SUFFIX = ".record"
_PARAM_LINE = re.compile(r"^(.*):(bool|int|float|str)=(.*)$")


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


_TYPES = {"bool": lambda s: s == "true", "int": int, "float": float, "str": str}


def type_name(v) -> str:
    for name, t in (("bool", bool), ("int", int), ("float", float)):
        if isinstance(v, t):
            return name
    return "str"


def parse_value(s: str, kind: str | None = None):
    """Inverse of :func:`format_value`; guesses the type when ``kind`` is None."""
    if kind is not None:
        return _TYPES[kind](s)
    if s in ("true", "false"):
        return s == "true"
    for cast in (int, float):
        try:
            return cast(s)
        except ValueError:
            pass
    return s


@dataclass
class Table:
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)

    @property
    def types(self) -> list[str]:
        return [type_name(v) for v in self.rows[0]] if self.rows else ["str"] * len(self.columns)

    def add(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values for {len(self.columns)} columns")
        self.rows.append(tuple(values))

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([format_value(v) for v in r])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, types: list[str] | None = None) -> "Table":
        reader = csv.reader(io.StringIO(text))
        columns = next(reader)
        types = types or [None] * len(columns)
        return cls(columns, [tuple(parse_value(v, t) for v, t in zip(row, types)) for row in reader])


@dataclass
class RunRecord:
    """Everything needed to re-plot one invocation.

    ``parameters`` holds resolved inputs and derived scalars (shift, gaps,
    energies), keyed by flat dotted names. ``tables`` maps a name to a table;
    the ``main`` table is the primary CSV.
    """

    family: str
    parameters: dict[str, object] = field(default_factory=dict)
    tables: dict[str, Table] = field(default_factory=dict)
    wall_clock: float = 0.0
    version: str = ""

    def table_path(self, csv_path: Path, name: str) -> Path:
        csv_path = Path(csv_path)
        return csv_path if name == "main" else csv_path.with_name(f"{csv_path.stem}_{name}{csv_path.suffix}")

    def sidecar_text(self) -> str:
        lines = [f"[{self.family}]", f"version={self.version}", f"wall_clock_s={format_value(float(self.wall_clock))}"]
        lines.append("tables=" + ",".join(self.tables))
        lines += [f"types.{name}=" + ",".join(t.types) for name, t in self.tables.items()]
        lines += [f"{k}:{type_name(v)}={format_value(v)}" for k, v in self.parameters.items()]
        return "\n".join(lines) + "\n"

    def write(self, csv_path: Path) -> list[Path]:
        """Write each table as CSV and the sidecar next to the main CSV."""
        csv_path = Path(csv_path)
        written = []
        for name, table in self.tables.items():
            path = self.table_path(csv_path, name)
            path.write_text(table.to_csv(), encoding="utf-8", newline="")
            written.append(path)
        side = csv_path.with_name(csv_path.name + SIDECAR_SUFFIX)
        side.write_text(self.sidecar_text(), encoding="utf-8", newline="")
        written.append(side)
        return written

    @classmethod
    def read(cls, csv_path: Path) -> "RunRecord":
        csv_path = Path(csv_path)
        text = csv_path.with_name(csv_path.name + SIDECAR_SUFFIX).read_text(encoding="utf-8")
        lines = text.splitlines()
        family = lines[0].strip().strip("[]")
        params: dict[str, object] = {}
        meta: dict[str, str] = {}
        for line in lines[1:]:
            m = _PARAM_LINE.match(line)
            if m:
                params[m[1]] = parse_value(m[3], m[2])
            else:
                key, _, val = line.partition("=")
                meta[key] = val
        rec = cls(family, params, {}, float(meta["wall_clock_s"]), meta["version"])
        for name in filter(None, meta["tables"].split(",")):
            types = meta[f"types.{name}"].split(",")
            rec.tables[name] = Table.from_csv(rec.table_path(csv_path, name).read_text(encoding="utf-8"), types)
        return rec
