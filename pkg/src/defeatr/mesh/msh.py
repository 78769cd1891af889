"""Reader for ASCII .msh files, format version 2.2.

Only what the toolkit needs: physical names, nodes, 2-node line elements
(facet tags) and 3-node triangles (element tags).  Other element types are
skipped.  Version 4 files and binary files are rejected up front.
"""
from __future__ import annotations

import numpy as np

from ..errors import MshParseError
from .core import Mesh, orient_ccw


def parse_msh(text: str) -> Mesh:
    lines = text.splitlines()
    pos = 0
    n = len(lines)

    def next_line() -> str:
        nonlocal pos
        while pos < n and not lines[pos].strip():
            pos += 1
        if pos >= n:
            raise MshParseError("unexpected end of file")
        s = lines[pos].strip()
        pos += 1
        return s

    sections: dict[str, list[str]] = {}
    while pos < n:
        if not lines[pos].strip():
            pos += 1
            continue
        head = next_line()
        if not head.startswith("$"):
            raise MshParseError(f"expected section header, got {head!r}")
        name = head[1:]
        body: list[str] = []
        closer = f"$End{name}"
        while True:
            if pos >= n:
                raise MshParseError(f"section {name!r} is not closed")
            s = lines[pos].strip()
            pos += 1
            if s == closer:
                break
            body.append(s)
        sections[name] = body

    fmt = sections.get("MeshFormat")
    if not fmt:
        raise MshParseError("missing $MeshFormat section")
    parts = fmt[0].split()
    if len(parts) < 3:
        raise MshParseError("malformed $MeshFormat line")
    version, file_type = parts[0], parts[1]
    if not version.startswith("2."):
        raise MshParseError(f"unsupported msh version {version}; need 2.2 ASCII")
    if file_type != "0":
        raise MshParseError("binary msh files are not supported")

    phys: dict[int, str] = {}
    for line in sections.get("PhysicalNames", [])[1:]:
        p = line.split(None, 2)
        if len(p) < 3:
            raise MshParseError(f"malformed physical name line {line!r}")
        phys[int(p[1])] = p[2].strip().strip('"')

    body = sections.get("Nodes")
    if not body:
        raise MshParseError("missing $Nodes section")
    try:
        count = int(body[0])
    except ValueError as exc:
        raise MshParseError("malformed $Nodes count") from exc
    if count != len(body) - 1:
        raise MshParseError("node count does not match $Nodes body")
    ids = np.empty(count, dtype=np.int64)
    xy = np.empty((count, 2), dtype=float)
    for i, line in enumerate(body[1:]):
        p = line.split()
        if len(p) < 4:
            raise MshParseError(f"malformed node line {line!r}")
        ids[i] = int(p[0])
        xy[i] = float(p[1]), float(p[2])
    renum: dict[int, int] = {int(v): i for i, v in enumerate(ids)}

    body = sections.get("Elements")
    if body is None:
        raise MshParseError("missing $Elements section")
    try:
        count = int(body[0])
    except (ValueError, IndexError) as exc:
        raise MshParseError("malformed $Elements count") from exc
    if count != len(body) - 1:
        raise MshParseError("element count does not match $Elements body")

    facet_lists: dict[str, list[tuple[int, int]]] = {}
    tri_rows: list[tuple[int, int, int]] = []
    tri_names: list[str | None] = []
    for line in body[1:]:
        p = line.split()
        etype = int(p[1])
        ntags = int(p[2])
        tags = [int(t) for t in p[3:3 + ntags]]
        conn = p[3 + ntags:]
        name = phys.get(tags[0]) if tags else None
        try:
            nodes = [renum[int(c)] for c in conn]
        except KeyError as exc:
            raise MshParseError(f"element references unknown node {exc}") from exc
        if etype == 1:
            if len(nodes) != 2:
                raise MshParseError("line element needs two nodes")
            if name is not None:
                facet_lists.setdefault(name, []).append((nodes[0], nodes[1]))
        elif etype == 2:
            if len(nodes) != 3:
                raise MshParseError("triangle element needs three nodes")
            tri_rows.append((nodes[0], nodes[1], nodes[2]))
            tri_names.append(name)
        # other element types (points, quads, ...) are ignored

    if not tri_rows:
        raise MshParseError("file contains no triangles")
    triangles = orient_ccw(np.array(tri_rows, dtype=np.int64), xy)

    element_tags: dict[str, np.ndarray] = {}
    for name in sorted({t for t in tri_names if t is not None}):
        element_tags[name] = np.array(
            [i for i, t in enumerate(tri_names) if t == name], dtype=np.int64
        )
    facet_tags = {
        name: np.array(edges, dtype=np.int64) for name, edges in facet_lists.items()
    }
    return Mesh(xy, triangles, facet_tags, element_tags)
