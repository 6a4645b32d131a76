"""Report files: per-property CSV, per-bit CSV, text summary, JSON summary, traces."""

from __future__ import annotations

import csv
import json
import os

from ..bmc.engine import BOUNDED, FAILED, PROVEN
from .run import Report


def _trace_name(prop: str, label: str) -> str:
    return f"{prop}__{label.replace(':', '_')}.trace"


def summary_dict(report: Report) -> dict:
    tables = report.tables()
    ranking = report.ranking()
    return {
        "total_bits": report.total_bits,
        "census_bits": report.census.total_bits,
        "families": sorted(set(report.families.values())),
        "k_max": report.config.k_max,
        "mode": report.config.mode,
        "classification": report.counts(),
        "tables": tables,
        "baseline": report.baseline,
        "coi_safe_bits": [report.census.entries[b].label for b in report.coi_safe],
        "consistency_flags": [report.census.entries[b].label for b in report.consistency_flags],
        "replay": report.replay_stats(),
        "partial": report.partial,
        "wall_time": {k: round(v, 3) for k, v in report.wall_time.items()},
        "solver_calls": report.solver_calls,
        "top_bits": [{"bit": c.name, "score": c.score, "label": c.display} for c in ranking[:20]],
    }


def summary_text(report: Report) -> str:
    d = summary_dict(report)
    out = [f"bits: {d['total_bits']} of {d['census_bits']}   k_max: {d['k_max']}   mode: {d['mode']}"]
    c = d["classification"]
    out.append(f"Safe {c['Safe']}   Vulnerable {c['Vulnerable']}   Undetermined {c['Undetermined']}")
    for fam, rows in d["tables"].items():
        out.append("")
        out.append(f"[{fam}]")
        width = max(len(p) for p in rows) if rows else 10
        out.append(f"{'property':<{width}}  {'Proven':>7} {'Bounded':>8} {'Failed':>7}   baseline")
        for p, row in rows.items():
            out.append(f"{p:<{width}}  {row[PROVEN]:>7} {row[BOUNDED]:>8} {row[FAILED]:>7}   {d['baseline'][p]}")
    out.append("")
    out.append(f"COI-safe bits: {len(d['coi_safe_bits'])}")
    r = d["replay"]
    out.append(f"witnesses: {r['witnesses']}, replayed ok: {r['replayed_ok']}, mismatches: {r['mismatches']}")
    out.append(f"strobe/arch consistency flags: {len(d['consistency_flags'])}")
    if d["partial"]:
        out.append("PARTIAL: some checks ran out of budget")
    out.append("wall time: " + ", ".join(f"{k} {v:.1f}s" for k, v in d["wall_time"].items()))
    out.append("")
    out.append("most susceptible bits:")
    for t in d["top_bits"][:10]:
        out.append(f"  {t['bit']:<20} {t['score']:>3}  {t['label']}")
    return "\n".join(out) + "\n"


def write_report(report: Report, out_dir: str) -> dict[str, str]:
    """Writes every report file; returns their paths by kind."""
    os.makedirs(out_dir, exist_ok=True)
    tdir = os.path.join(out_dir, "traces")
    paths = {
        "properties": os.path.join(out_dir, "properties.csv"),
        "bits": os.path.join(out_dir, "bits.csv"),
        "summary": os.path.join(out_dir, "summary.txt"),
        "json": os.path.join(out_dir, "summary.json"),
        "traces": tdir,
    }
    with open(paths["properties"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["family", "property", "Proven", "BoundedProven", "Failed", "baseline"])
        for fam, rows in report.tables().items():
            for p, row in rows.items():
                w.writerow([fam, p, row[PROVEN], row[BOUNDED], row[FAILED], report.baseline[p]])
    os.makedirs(tdir, exist_ok=True)
    evidence = {}
    for (b, p), rec in sorted(report.verdicts.items()):
        if rec.verdict == FAILED and rec.trace is not None:
            name = _trace_name(p, report.census.entries[b].label)
            rec.trace.save(os.path.join(tdir, name))
            evidence.setdefault(b, os.path.join("traces", name))
    with open(paths["bits"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rank", "bit_id", "register_name", "bit_index", "label", "effects", "score", "coi_safe",
                    "failed_properties", "evidence_ref"])
        for i, c in enumerate(report.ranking(), 1):
            failed = [p for p, v in c.verdicts.items() if v == FAILED]
            w.writerow([i, c.bit_id, c.register, c.bit_index, c.label, "|".join(sorted(c.effects)), c.score,
                        int(c.coi_safe), "|".join(failed), evidence.get(c.bit_id, "")])
    with open(paths["summary"], "w") as fh:
        fh.write(summary_text(report))
    with open(paths["json"], "w") as fh:
        json.dump(summary_dict(report), fh, indent=2)
    return paths


def read_bits_csv(path: str) -> dict[int, tuple[str, frozenset]]:
    """(label, effects) per bit id from a ``bits.csv``."""
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            eff = frozenset(x for x in row["effects"].split("|") if x)
            out[int(row["bit_id"])] = (row["label"], eff)
    return out
