#!/usr/bin/env python3
"""Second implementation of the interlink gold extraction, used to freeze
fixtures/goldgen/expected.tsv. Reads a page dump and prints source<TAB>target."""
import json
import re
import sys
from collections import defaultdict

BASE = "http://dbkwik.webdatacommons.org/{}/resource/"


def canon(title):
    t = " ".join(title.replace("_", " ").split())
    return t[:1].upper() + t[1:]


def sections(page):
    out = [(s["header"], s["body"]) for s in page.get("sections", [])]
    text = page.get("text")
    if text is not None:
        header, body = "", []
        for line in text.split("\n"):
            m = re.fullmatch(r"\s*(={1,6})\s*(.*?)\s*(={1,6})\s*", line)
            if m and m.group(2):
                out.append((header, "\n".join(body)))
                header, body = m.group(2), []
            else:
                body.append(line)
        out.append((header, "\n".join(body)))
    return out


def links(page, targets):
    for header, body in sections(page):
        current = header
        for line in body.split("\n"):
            m = re.fullmatch(r"\s*(={1,6})\s*(.*?)\s*(={1,6})\s*", line)
            if m and m.group(2):
                current = m.group(2)
                continue
            if "link" not in current.lower():
                continue
            for inner in re.findall(r"\[\[([^\[\]]*)\]\]", line):
                target = inner.split("|")[0].strip()
                parts = target.split(":")
                if len(parts) >= 4 and parts[0].lower() in ("w", "wikia") and parts[1].lower() == "c":
                    wiki, title = parts[2], ":".join(parts[3:])
                elif len(parts) >= 2:
                    wiki, title = parts[0], ":".join(parts[1:])
                else:
                    continue
                wiki = wiki.strip().lower()
                title = canon(title.split("#")[0])
                if wiki in targets and wiki != page["wiki"].lower() and title:
                    yield wiki, title


def main(path):
    pages = [json.loads(l) for l in open(path, encoding="utf-8") if l.strip()]
    targets = {p["wiki"].lower() for p in pages}
    redirects = {(p["wiki"].lower(), canon(p["title"])): canon(p["redirect_to"]) for p in pages if p.get("redirect_to")}
    raw = set()
    for p in pages:
        if p.get("redirect_to"):
            continue
        for wiki, title in links(p, targets):
            seen = {title}
            ok = True
            for _ in range(10):
                nxt = redirects.get((wiki, title))
                if nxt is None:
                    break
                if nxt in seen:
                    ok = False
                    break
                seen.add(nxt)
                title = nxt
            else:
                if (wiki, title) in redirects:
                    ok = False
            if ok:
                raw.add(((p["wiki"], canon(p["title"])), (wiki, title)))
    out_deg = defaultdict(set)
    for s, t in raw:
        out_deg[(s, t[0])].add(t)
    step1 = {(s, t) for s, t in raw if len(out_deg[(s, t[0])]) == 1}
    in_deg = defaultdict(set)
    for s, t in step1:
        in_deg[(t, s[0])].add(s)
    final = sorted((s, t) for s, t in step1 if len(in_deg[(t, s[0])]) == 1)
    for (sw, st), (tw, tt) in final:
        print(BASE.format(sw) + st.replace(" ", "_") + "\t" + BASE.format(tw) + tt.replace(" ", "_"))


if __name__ == "__main__":
    main(sys.argv[1])
