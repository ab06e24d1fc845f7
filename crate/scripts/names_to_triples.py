#!/usr/bin/env python3
"""Convert a named relation list into the pltf triple format.

Input lines are `head<TAB>relation<TAB>tail` (the layout Kinship, Countries
and similar relational datasets are commonly shipped in); `--order hrt`
or `--order rht` picks the column order. Objects and relations are
numbered in order of first appearance unless `--objects`/`--relations`
name files listing them one per line.

By default every unlisted (i, j, t) is written as an observed 0, which
matches datasets where all pairs are known. `--positives-only` writes
only the listed links.

The index maps are written next to the output as `<out>.objects` and
`<out>.relations`.
"""

import argparse
import sys


def read_names(path):
    with open(path, encoding="utf-8") as f:
        return [line.strip() for line in f if line.strip()]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("input")
    p.add_argument("out")
    p.add_argument("--order", choices=["hrt", "rht"], default="hrt")
    p.add_argument("--objects")
    p.add_argument("--relations")
    p.add_argument("--positives-only", action="store_true")
    args = p.parse_args()

    objects = read_names(args.objects) if args.objects else []
    relations = read_names(args.relations) if args.relations else []
    obj_index = {n: k for k, n in enumerate(objects)}
    rel_index = {n: k for k, n in enumerate(relations)}

    def lookup(index, names, name, fixed, what, lineno):
        if name not in index:
            if fixed:
                sys.exit(f"{args.input}:{lineno}: unknown {what} `{name}`")
            index[name] = len(names)
            names.append(name)
        return index[name]

    links = set()
    with open(args.input, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t") if "\t" in line else line.split()
            if len(fields) != 3:
                sys.exit(f"{args.input}:{lineno}: expected 3 fields, found {len(fields)}")
            if args.order == "hrt":
                head, rel, tail = fields
            else:
                rel, head, tail = fields
            i = lookup(obj_index, objects, head, bool(args.objects), "object", lineno)
            j = lookup(obj_index, objects, tail, bool(args.objects), "object", lineno)
            t = lookup(rel_index, relations, rel, bool(args.relations), "relation", lineno)
            links.add((i, j, t))

    n, t_count = len(objects), len(relations)
    with open(args.out, "w", encoding="utf-8", newline="\n") as out:
        out.write(f"{n} {t_count}\n")
        if args.positives_only:
            for i, j, t in sorted(links):
                out.write(f"{i} {j} {t} 1\n")
        else:
            for i in range(n):
                for j in range(n):
                    for t in range(t_count):
                        out.write(f"{i} {j} {t} {int((i, j, t) in links)}\n")
    for suffix, names in ((".objects", objects), (".relations", relations)):
        with open(args.out + suffix, "w", encoding="utf-8", newline="\n") as f:
            f.writelines(name + "\n" for name in names)
    print(f"{n} objects, {t_count} relations, {len(links)} links", file=sys.stderr)


if __name__ == "__main__":
    main()
