"""Checkpoint snapshots: canonical JSON of the frame tree, keyed by graph
content hashes so modification is detected on resume.

Restore accepts replacement graphs keyed by the hash they replace. Stored
slots rebind to edges of the (possibly edited) graph by endpoint identity;
slots for deleted edges are dropped, and every surviving value is re-checked
against the re-inferred edge type.
"""

from __future__ import annotations

from typing import Optional

from ..graph import Graph, InputNode
from ..serialize import (DecodeError, canonical_bytes, graph_from_json,
                         graph_to_json, load_json, value_from_json,
                         value_to_json)
from ..signatures import SignatureIndex
from ..typesys import check_value, infer_graph
from .errors import GraphHashMissing, ResumeError, ResumeTypeError
from .state import ExecutionState, Frame, LoopState, Slot, graph_hash


def checkpoint_state(state: ExecutionState) -> dict:
    graphs: dict[str, dict] = {}
    frames = []
    for f in sorted(state.frames.values(), key=lambda f: f.id):
        plain = f.graph.strip_types()
        h = graph_hash(plain)
        graphs.setdefault(h, graph_to_json(plain))
        edges = []
        for key in sorted(f.slots):
            slot = f.slots[key]
            if slot.state == "full":
                encoded = {"full": value_to_json(slot.value)}
            else:
                encoded = slot.state
            edges.append({"edge": list(key), "slot": encoded})
        doc: dict = {"id": f.id, "graph": h, "edges": edges, "fired": sorted(f.fired)}
        if f.parent is not None:
            doc["parent"] = list(f.parent)
        if f.loop is not None:
            doc["loop"] = {"iter": f.loop.iteration, "value": value_to_json(f.loop.value)}
        frames.append(doc)
    return {"version": 1, "graphs": graphs, "root": state.root, "frames": frames}


def checkpoint_bytes(state: ExecutionState) -> bytes:
    return canonical_bytes(checkpoint_state(state))


def _decode_edge_key(doc, path: str) -> tuple[int, str, int, str]:
    if (not isinstance(doc, list) or len(doc) != 4
            or not isinstance(doc[0], int) or not isinstance(doc[1], str)
            or not isinstance(doc[2], int) or not isinstance(doc[3], str)):
        raise DecodeError(path, "expected [src id, src port, dst id, dst port]")
    return (doc[0], doc[1], doc[2], doc[3])


def restore_state(b: bytes | str, index: SignatureIndex,
                  graphs: Optional[dict[str, Graph]] = None) -> ExecutionState:
    """Rebuild an ExecutionState from checkpoint bytes.

    ``graphs`` supplies replacements for stored graphs, keyed by the hash the
    checkpoint references (the pre-edit identity).
    """
    doc = load_json(b)
    if not isinstance(doc, dict):
        raise DecodeError("/", "expected a checkpoint object")
    if doc.get("version") != 1:
        raise DecodeError("/version", f"unsupported version {doc.get('version')!r}")
    if not isinstance(doc.get("graphs"), dict):
        raise DecodeError("/graphs", "expected an object")
    if not isinstance(doc.get("frames"), list):
        raise DecodeError("/frames", "expected an array")
    if not isinstance(doc.get("root"), int):
        raise DecodeError("/root", "expected a frame id")

    store: dict[str, Graph] = {}
    for h, gdoc in doc["graphs"].items():
        store[h] = graph_from_json(gdoc, f"/graphs/{h}")
    for h, g in (graphs or {}).items():
        store[h] = g

    annotated: dict[tuple[str, frozenset], Graph] = {}

    def infer_stored(h: str, where: str, fired: frozenset) -> Graph:
        if h not in store:
            raise GraphHashMissing(f"{where}: graph {h[:12]}... not in store")
        key = (h, fired)
        if key not in annotated:
            # nodes that already fired may have lost input edges to an edit;
            # their outputs are pinned by stored slot values instead
            result = infer_graph(store[h].strip_types(), index, unfed_ok=fired)
            if not result.ok:
                raise ResumeTypeError(
                    f"{where}: stored graph no longer type-checks: "
                    + "; ".join(str(v) for v in result.errors[:3]))
            annotated[key] = result.graph
        return annotated[key]

    state = ExecutionState()
    state.root = doc["root"]
    max_id = -1
    for i, fdoc in enumerate(doc["frames"]):
        fpath = f"/frames/{i}"
        if not isinstance(fdoc, dict):
            raise DecodeError(fpath, "expected a frame object")
        for k in ("id", "graph", "edges", "fired"):
            if k not in fdoc:
                raise DecodeError(f"{fpath}/{k}", "missing")
        fid = fdoc["id"]
        if not isinstance(fid, int):
            raise DecodeError(f"{fpath}/id", "expected an integer")
        if not isinstance(fdoc["fired"], list):
            raise DecodeError(f"{fpath}/fired", "expected an array of node ids")
        g = infer_stored(fdoc["graph"], f"frame {fid}", frozenset(fdoc["fired"]))
        node_ids = {n.id for n in g.nodes}
        edge_types = {e.key(): e.ty for e in g.edges}

        parent = None
        if "parent" in fdoc:
            p = fdoc["parent"]
            if not isinstance(p, list) or len(p) != 2:
                raise DecodeError(f"{fpath}/parent", "expected [frame id, node id]")
            parent = (p[0], p[1])
        loop = None
        if "loop" in fdoc:
            l = fdoc["loop"]
            if not isinstance(l, dict) or "iter" not in l or "value" not in l:
                raise DecodeError(f"{fpath}/loop", "expected {iter, value}")
            loop = LoopState(l["iter"], value_from_json(l["value"], f"{fpath}/loop/value"))

        frame = Frame(fid, g, {e.key(): Slot() for e in g.edges},
                      set(), parent, loop)
        frame.fired = {n for n in fdoc["fired"] if n in node_ids}

        for j, edoc in enumerate(fdoc["edges"]):
            epath = f"{fpath}/edges/{j}"
            if not isinstance(edoc, dict) or "edge" not in edoc or "slot" not in edoc:
                raise DecodeError(epath, "expected {edge, slot}")
            key = _decode_edge_key(edoc["edge"], f"{epath}/edge")
            if key not in frame.slots:
                continue  # edge deleted by a graph edit; stored slot dropped
            slot_doc = edoc["slot"]
            if slot_doc == "empty":
                continue
            if slot_doc == "consumed":
                frame.slots[key] = Slot("consumed")
            elif isinstance(slot_doc, dict) and set(slot_doc) == {"full"}:
                v = value_from_json(slot_doc["full"], f"{epath}/slot/full")
                ty = edge_types.get(key)
                if ty is not None:
                    bad = check_value(v, ty, index)
                    if bad is not None:
                        raise ResumeTypeError(
                            f"frame {fid}, edge {key}: stored value no longer "
                            f"type-checks: {bad}")
                frame.slots[key] = Slot("full", v)
            else:
                raise DecodeError(f"{epath}/slot", f"bad slot {slot_doc!r}")

        # a loop body's Input edge may be new after an edit; re-seed it from
        # the recorded iteration value (type-checked like any stored slot)
        if loop is not None:
            in_node = g.input_node()
            for e in g.out_edges(in_node.id):
                if (in_node.id in frame.fired
                        and frame.slots[e.key()].state == "empty" and e.src[1] == "value"):
                    ty = edge_types.get(e.key())
                    if ty is not None:
                        bad = check_value(loop.value, ty, index)
                        if bad is not None:
                            raise ResumeTypeError(
                                f"frame {fid}: loop value no longer type-checks "
                                f"against the edited body: {bad}")
                    frame.slots[e.key()] = Slot("full", loop.value)

        state.frames[fid] = frame
        max_id = max(max_id, fid)

    if state.root not in state.frames:
        raise ResumeError(f"root frame {state.root} missing from snapshot")
    for f in state.frames.values():
        if f.parent is not None:
            pf, pnode = f.parent
            if pf not in state.frames:
                raise ResumeError(f"frame {f.id}: parent frame {pf} missing")
            if pnode not in {n.id for n in state.frames[pf].graph.nodes}:
                raise ResumeError(f"frame {f.id}: resume node {pnode} deleted from parent")
    state.next_frame_id = max_id + 1
    state.peak_live_frames = len(state.frames)
    return state


def restore(b: bytes | str, index: SignatureIndex,
            graphs: Optional[dict[str, Graph]] = None, options=None):
    """Checkpoint bytes -> a resumable Job."""
    from .scheduler import Job

    return Job.resumed(restore_state(b, index, graphs), index, options)
