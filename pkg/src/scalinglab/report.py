"""Structured diagnostics records.

A Report is a flat list of named entries {name, value, margin, pass} plus a
free-form data dict for arrays that tests want to inspect.  An entry passes
when its margin is >= -tol; a report passes when every entry does.  Entries
serialize deterministically (sorted keys, repr floats) so identical runs
produce byte-identical JSON.
"""

import csv
import json
from dataclasses import dataclass, field


@dataclass
class ReportEntry:
    name: str
    value: float
    margin: float
    passed: bool

    def as_dict(self):
        return {
            "name": self.name,
            "value": float(self.value),
            "margin": float(self.margin),
            "pass": bool(self.passed),
        }


@dataclass
class Report:
    title: str = "report"
    metadata: dict = field(default_factory=dict)
    entries: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def add(self, name, value, margin, tol=0.0):
        entry = ReportEntry(name, float(value), float(margin),
                            bool(margin >= -tol))
        self.entries.append(entry)
        return entry

    def extend(self, other, prefix=""):
        for e in other.entries:
            self.entries.append(
                ReportEntry(prefix + e.name, e.value, e.margin, e.passed))
        for k, v in other.data.items():
            self.data[prefix + k] = v

    @property
    def all_pass(self):
        return all(e.passed for e in self.entries)

    def entry(self, name):
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def as_dict(self):
        return {
            "title": self.title,
            "metadata": self.metadata,
            "entries": [e.as_dict() for e in self.entries],
            "artifacts": list(self.artifacts),
            "pass": self.all_pass,
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        self.artifacts.append(str(path))

    def entries_to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["name", "value", "margin", "pass"])
            for e in self.entries:
                writer.writerow([e.name, repr(e.value), repr(e.margin),
                                 int(e.passed)])
        self.artifacts.append(str(path))


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
