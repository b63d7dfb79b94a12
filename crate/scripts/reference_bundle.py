#!/usr/bin/env python3
"""Independent scorer for a run config: writes cells.csv and aggregates.json.

Used once to produce the frozen reference bundle under fixtures/mini/reference.
Shares no code with the Rust crates; only the file formats are common.

    python3 scripts/reference_bundle.py fixtures/mini/run.toml fixtures/mini/reference
"""

import csv
import io
import json
import math
import os
import re
import sys
import xml.etree.ElementTree as ET

import tomli

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
RDFS_LABEL = "http://www.w3.org/2000/01/rdf-schema#label"
ALT_LABEL = "http://www.w3.org/2004/02/skos/core#altLabel"
CLASS_MARKERS = {
    "http://www.w3.org/2002/07/owl#Class",
    "http://www.w3.org/2000/01/rdf-schema#Class",
}
PROPERTY_MARKERS = {
    "http://www.w3.org/1999/02/22-rdf-syntax-ns#Property",
    "http://www.w3.org/2002/07/owl#ObjectProperty",
    "http://www.w3.org/2002/07/owl#DatatypeProperty",
    "http://www.w3.org/2002/07/owl#AnnotationProperty",
}

TRIPLE = re.compile(r'^<([^>]*)>\s+<([^>]*)>\s+(<[^>]*>|"(?:[^"\\]|\\.)*"(?:@[A-Za-z0-9-]+|\^\^<[^>]*>)?)\s*\.\s*$')


def unescape(s):
    out, i = [], 0
    while i < len(s):
        c = s[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        n = s[i + 1]
        if n == "u":
            out.append(chr(int(s[i + 2:i + 6], 16)))
            i += 6
        elif n == "U":
            out.append(chr(int(s[i + 2:i + 10], 16)))
            i += 10
        else:
            out.append({"t": "\t", "n": "\n", "r": "\r", "b": "\b", "f": "\f", '"': '"', "'": "'", "\\": "\\"}[n])
            i += 2
    return "".join(out)


class Graph:
    def __init__(self, path):
        self.kind = {}
        self.labels = {}
        self.alt = {}
        typed_class, typed_prop, type_object = set(), set(), set()
        order = []

        def see(iri):
            if iri not in self.labels:
                self.labels[iri] = []
                self.alt[iri] = []
                order.append(iri)

        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                m = TRIPLE.match(line)
                if not m:
                    raise ValueError(f"{path}: cannot parse {line!r}")
                s, p, o = m.groups()
                see(s)
                if o.startswith("<"):
                    obj_iri, literal = o[1:-1], None
                else:
                    obj_iri, literal = None, unescape(o[1:o.rindex('"')])
                if p == RDF_TYPE and obj_iri is not None:
                    if obj_iri in PROPERTY_MARKERS:
                        typed_prop.add(s)
                    elif obj_iri in CLASS_MARKERS:
                        typed_class.add(s)
                    else:
                        see(obj_iri)
                        type_object.add(obj_iri)
                elif p == RDFS_LABEL and literal is not None:
                    if literal not in self.labels[s]:
                        self.labels[s].append(literal)
                elif p == ALT_LABEL and literal is not None:
                    if literal not in self.alt[s]:
                        self.alt[s].append(literal)
        for iri in order:
            if iri in typed_prop:
                self.kind[iri] = "property"
            elif iri in typed_class or iri in type_object:
                self.kind[iri] = "class"
            else:
                self.kind[iri] = "instance"
            if not self.labels[iri]:
                self.labels[iri] = [local_name(iri)]


def local_name(iri):
    t = iri.rstrip("/#")
    cut = max(t.rfind("/"), t.rfind("#"))
    name = t[cut + 1:] or t
    return name.replace("_", " ")


def normalize(label):
    return " ".join(w for w in re.split(r"[\s_]+", label.lower()) if w)


def graph_id(path):
    return os.path.basename(path).split(".")[0]


def label_match(src, tgt, alt):
    def keys(g, iri):
        names = g.labels[iri] + (g.alt[iri] if alt else [])
        return {(g.kind[iri], normalize(n)) for n in names if normalize(n)}

    pairs = set()
    for s in src.kind:
        ks = keys(src, s)
        for t in tgt.kind:
            if ks & keys(tgt, t):
                pairs.add((s, t))
    return [(s, t, 1.0) for s, t in sorted(pairs)]


def read_tsv_alignment(path):
    cells = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            conf = float(fields[3]) if len(fields) > 3 and fields[3].strip() else 1.0
            cells.append((fields[0].strip("<>"), fields[1].strip("<>"), conf))
    return cells


def read_xml_alignment(path):
    rdf = "{http://www.w3.org/1999/02/22-rdf-syntax-ns#}"
    cells = []
    for cell in ET.parse(path).getroot().iter():
        if not cell.tag.endswith("Cell"):
            continue
        parts = {child.tag.split("}")[-1]: child for child in cell}
        measure = parts.get("measure")
        conf = float(measure.text) if measure is not None else 1.0
        cells.append((parts["entity1"].get(rdf + "resource"), parts["entity2"].get(rdf + "resource"), conf))
    return cells


def dedup(cells):
    seen, out = set(), []
    for s, t, c in cells:
        if (s, t) not in seen:
            seen.add((s, t))
            out.append((s, t, c))
    return out


def read_gold(path):
    return [(s, t) for s, t, _ in read_tsv_alignment(path)]


def outcome(s, t, gold, fp_side):
    gold_src = {a for a, _ in gold}
    gold_tgt = {b for _, b in gold}
    if (s, t) in gold:
        return "TP"
    if s in gold_src or (fp_side == "both" and t in gold_tgt):
        return "FP"
    return "IGNORED"


def arity(cells):
    pairs = {(s, t) for s, t, _ in cells}
    out_deg, in_deg = {}, {}
    for s, t in pairs:
        out_deg[s] = out_deg.get(s, 0) + 1
        in_deg[t] = in_deg.get(t, 0) + 1
    names = {(False, False): "1:1", (False, True): "n:1", (True, False): "1:n", (True, True): "n:m"}
    return [names[(out_deg[s] > 1, in_deg[t] > 1)] for s, t, _ in cells]


def cell_kind(src, tgt, s, t):
    a, b = src.kind.get(s), tgt.kind.get(t)
    return a if a is not None and a == b else "mixed"


def trivial(src, tgt, s, t):
    if s not in src.kind or t not in tgt.kind:
        return False
    return bool(set(src.labels[s]) & set(tgt.labels[t]))


def round6(x):
    return math.floor(x * 1e6 + 0.5) / 1e6


def prf(c):
    p = c["tp"] / (c["tp"] + c["fp"]) if c["tp"] + c["fp"] else 0.0
    r = c["tp"] / (c["tp"] + c["fn"]) if c["tp"] + c["fn"] else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def empty_counts():
    return {"tp": 0, "fp": 0, "fn": 0, "ignored": 0}


def main(config_path, out_dir):
    base = os.path.dirname(config_path)
    with open(config_path, "rb") as f:
        cfg = tomli.load(f)
    fp_side = cfg.get("fp_side", "both")
    assert cfg.get("semantics", "2019") == "2019", "this script covers the partial 1:1 semantics only"

    graphs = {}
    tasks = []
    for t in cfg["task"]:
        src_path, tgt_path = os.path.join(base, t["source"]), os.path.join(base, t["target"])
        for p in (src_path, tgt_path):
            if graph_id(p) not in graphs:
                graphs[graph_id(p)] = Graph(p)
        tasks.append((graph_id(src_path), graph_id(tgt_path), read_gold(os.path.join(base, t["gold"]))))

    external = {}
    for a in cfg.get("alignment", []):
        path = os.path.join(base, a["path"])
        with open(path, encoding="utf-8") as f:
            is_xml = f.read().lstrip().startswith("<")
        external.setdefault(a["matcher"], {})[a["task"]] = read_xml_alignment(path) if is_xml else read_tsv_alignment(path)

    matchers = list(cfg.get("matchers", [])) + sorted(external)
    cells_out = []
    runs = {}
    for src_id, tgt_id, gold in tasks:
        task = f"{src_id}-{tgt_id}"
        src, tgt = graphs[src_id], graphs[tgt_id]
        gold_set = set(gold)
        for m in matchers:
            if m == "baselineLabel":
                cells = label_match(src, tgt, False)
            elif m == "baselineAltLabel":
                cells = label_match(src, tgt, True)
            else:
                cells = dedup(external[m].get(task, []))
            counts = {k: empty_counts() for k in ("class", "property", "instance", "mixed")}
            classes = {"1:1": 0, "1:n": 0, "n:1": 0, "n:m": 0}
            produced = set()
            for (s, t, conf), ar in zip(cells, arity(cells)):
                o = outcome(s, t, gold_set, fp_side)
                k = cell_kind(src, tgt, s, t)
                counts[k][o.lower()] += 1
                classes[ar] += 1
                produced.add((s, t))
                cells_out.append([m, task, s, t, k, o, trivial(src, tgt, s, t), ar, conf])
            for s, t in sorted(gold):
                if (s, t) not in produced:
                    k = cell_kind(src, tgt, s, t)
                    counts[k]["fn"] += 1
                    cells_out.append([m, task, s, t, k, "FN", trivial(src, tgt, s, t), None, None])
            runs[(m, task)] = (len(cells), counts, classes)

    os.makedirs(out_dir, exist_ok=True)
    cells_out.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["matcher", "task", "source", "target", "kind", "outcome", "trivial", "arity", "confidence"])
    for r in cells_out:
        w.writerow([r[0], r[1], r[2], r[3], r[4], r[5], "true" if r[6] else "false", r[7] or "", "" if r[8] is None else repr(float(r[8]))])
    with open(os.path.join(out_dir, "cells.csv"), "w", encoding="utf-8", newline="") as f:
        f.write(buf.getvalue())

    def select(counts, kind):
        if kind != "overall":
            return counts[kind]
        total = empty_counts()
        for c in counts.values():
            for key in total:
                total[key] += c[key]
        return total

    table4, per_task, table5 = [], [], []
    for m in sorted({m for m, _ in runs}):
        task_ids = sorted(t for mm, t in runs if mm == m)
        for kind in ("class", "property", "instance", "overall"):
            rows = []
            for t in task_ids:
                size, counts, _ = runs[(m, t)]
                c = select(counts, kind)
                rows.append((size, c))
            done = [(size, c) for size, c in rows if size > 0]
            psum = sum(prf(c)[0] for _, c in done)
            rsum = sum(prf(c)[1] for _, c in done)
            p_all, r_all = psum / len(rows), rsum / len(rows)
            p_done = psum / len(done) if done else 0.0
            r_done = rsum / len(done) if done else 0.0
            hm = lambda p, r: 2 * p * r / (p + r) if p + r else 0.0
            produced = sum(c["tp"] + c["fp"] + c["ignored"] for _, c in done)
            table4.append({
                "System": m,
                "Kind": kind,
                "# tasks": len(done),
                "Size": round6(produced / len(done) if done else 0.0),
                "Prec.": round6(p_all),
                "F-m.": round6(hm(p_all, r_all)),
                "Rec.": round6(r_all),
                "Prec. (non-empty)": round6(p_done),
                "F-m. (non-empty)": round6(hm(p_done, r_done)),
                "Rec. (non-empty)": round6(r_done),
            })
        for t in task_ids:
            size, counts, classes = runs[(m, t)]
            for kind in ("class", "property", "instance", "overall", "mixed"):
                c = counts["mixed"] if kind == "mixed" else select(counts, kind)
                p, r, f = prf(c)
                per_task.append({
                    "System": m, "Task": t, "Kind": kind, "Size": size,
                    "tp": c["tp"], "fp": c["fp"], "fn": c["fn"], "ignored": c["ignored"],
                    "Prec.": round6(p), "F-m.": round6(f), "Rec.": round6(r),
                })
            table5.append({"System": m, "Task": t, **classes})

    aggregates = {
        "semantics": "2019",
        "fp_side": fp_side,
        "aggregation": {
            "within_task": "micro: tp/fp/fn pooled over kinds, mixed-kind cells in overall only",
            "across_tasks": "macro: mean of per-task precision and recall",
            "f_measure": "harmonic mean of macro precision and macro recall",
            "empty_tasks": "Prec./Rec. count empty alignments as 0; the (non-empty) columns leave them out",
        },
        "table4": table4,
        "per_task": per_task,
        "table5": table5,
    }
    with open(os.path.join(out_dir, "aggregates.json"), "w", encoding="utf-8") as f:
        f.write(json.dumps(aggregates, indent=2, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
