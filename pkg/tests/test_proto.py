import json
import time

import pytest

from tierkreis import examples
from tierkreis.builtins import builtin_index
from tierkreis.executor.state import graph_hash
from tierkreis.proto import (RunContext, RuntimeClient, RuntimeServer,
                             ServerConfig, TransportError, WireError,
                             WorkerClient, signature_from_json,
                             signature_to_json)
from tierkreis.proto.client import callback_run_graph
from tierkreis.serialize import canonical_bytes
from tierkreis.signatures import FunctionDecl, SignatureClash
from tierkreis.typesys.exprs import FLOAT, Row, TypeScheme
from tierkreis.values import FloatValue, IntValue, StrValue, value_of


@pytest.fixture(scope="module")
def server():
    srv = RuntimeServer(ServerConfig(include_mocks=True)).start()
    yield srv
    srv.shutdown()


@pytest.fixture(scope="module")
def client(server):
    return RuntimeClient(server.url)


def ctx_for(server):
    return RunContext(server.url, "-")


def test_signature_lists_builtins(client):
    doc = client.get_signature()
    assert "builtin" in doc["namespaces"]
    fns = doc["namespaces"]["builtin"]
    for name in ("eval", "fsub", "partial", "loop", "parallel"):
        assert name in fns
    triples = signature_from_json(doc)
    assert any(n == "builtin/eval" for n, _, _ in triples)


def test_signature_round_trips_canonically(client, server):
    doc = client.get_signature()
    local = signature_to_json(server.index)
    assert canonical_bytes(doc) == canonical_bytes(local)


def test_empty_worker_signature():
    assert signature_from_json({"namespaces": {}}) == []


def test_run_function_builtin(client, server):
    out = client.run_function("builtin/fsub",
                              {"a": FloatValue(1.0), "b": FloatValue(0.2)},
                              ctx_for(server))
    assert out == {"value": FloatValue(0.8)}


def test_run_function_id_identity(client, server):
    v = value_of([1, 2, 3])
    out = client.run_function("builtin/id", {"value": v}, ctx_for(server))
    assert out == {"value": v}


def test_run_function_unknown(client, server):
    with pytest.raises(WireError) as e:
        client.run_function("missing/f", {}, ctx_for(server))
    assert e.value.status == 404
    assert e.value.kind == "UnknownFunction"


def test_run_function_eval_executes_graph(client, server, fig1a):
    from tierkreis.values import GraphValue

    out = client.run_function("builtin/eval",
                              {"thunk": GraphValue(fig1a), "x": FloatValue(0.2)},
                              ctx_for(server))
    assert out == {"parity": FloatValue(0.4)}


def test_submit_await_outputs(client, fig1a):
    job_id = client.submit(fig1a, {"x": FloatValue(0.2)})
    record = client.await_done(job_id)
    assert client.outputs_of(record) == {"parity": FloatValue(0.4)}


def test_submit_rejects_ill_typed_graph(client, builtins):
    from tierkreis.builder import GraphBuilder

    b = GraphBuilder()
    n = b.fn("builtin/fneg", value=b.const("nope"))
    b.output(v=n["value"])
    with pytest.raises(WireError) as e:
        client.submit(b.build(), {})
    assert e.value.status == 422
    assert e.value.locations  # located type errors, no job created


def test_submit_rejects_bad_inputs(client, fig1a):
    with pytest.raises(WireError) as e:
        client.submit(fig1a, {"x": StrValue("s")})
    assert e.value.status == 422


def test_unknown_job_404(client):
    with pytest.raises(WireError) as e:
        client.status("no-such-job")
    assert e.value.status == 404


def test_cancel_job(client):
    job_id = client.submit(examples.counting_loop(10_000_000), {})
    client.cancel(job_id)
    record = client.await_done(job_id, timeout=30)
    assert "cancelled" in record["status"]


def test_checkpoint_and_resume_via_wire(client):
    job_id = client.submit(examples.counting_loop(500), {})
    snap = client.checkpoint(job_id)
    doc = json.loads(snap)
    assert doc["version"] == 1
    resumed = client.resume(snap)
    rec = client.await_done(resumed, timeout=60)
    assert client.outputs_of(rec) == {"n": IntValue(500)}
    rec0 = client.await_done(job_id, timeout=60)
    assert client.outputs_of(rec0) == {"n": IntValue(500)}


def test_variational_via_wire_equals_local(client, mocks):
    from tierkreis.executor import RunOptions, run_graph

    local = run_graph(examples.variational_main(), {}, mocks,
                      RunOptions(max_concurrency=1, max_loop_iters=500))
    job_id = client.submit(examples.variational_main(), {},
                           {"max_loop_iters": 500})
    rec = client.await_done(job_id, timeout=120)
    assert client.outputs_of(rec) == local


# -- routing / runtime trees -----------------------------------------------------

@pytest.fixture(scope="module")
def tree(server):
    parent = RuntimeServer(ServerConfig(workers=[server.url])).start()
    yield parent
    parent.shutdown()


def test_parent_aggregates_child_namespaces(tree):
    doc = RuntimeClient(tree.url).get_signature()
    assert {"builtin", "mock", "optimizer"} <= set(doc["namespaces"])


def test_route_forwards_two_hops(tree, server):
    grandparent = RuntimeServer(ServerConfig(workers=[tree.url])).start()
    try:
        client = RuntimeClient(grandparent.url)
        out = client.run_function("mock/run_circuit",
                                  {"params": value_of([0.0, 0.0])},
                                  RunContext(grandparent.url, "-"))
        assert out == {"value": FloatValue(1.0)}
    finally:
        grandparent.shutdown()


def test_route_builtin_stays_local(tree):
    client = RuntimeClient(tree.url)
    out = client.run_function("builtin/fsub",
                              {"a": FloatValue(1.0), "b": FloatValue(0.2)},
                              RunContext(tree.url, "-"))
    assert out == {"value": FloatValue(0.8)}


def test_tree_outputs_equal_flat(tree, server, mocks):
    flat = RuntimeClient(server.url)
    nested = RuntimeClient(tree.url)
    for name, (g, inputs) in examples.corpus().items():
        if name == "sleep_fan":
            continue
        jid_flat = flat.submit(g, inputs, {"max_loop_iters": 800})
        jid_tree = nested.submit(g, inputs, {"max_loop_iters": 800})
        out_flat = flat.outputs_of(flat.await_done(jid_flat, timeout=120))
        out_tree = nested.outputs_of(nested.await_done(jid_tree, timeout=120))
        assert out_flat == out_tree, name


def test_collision_fails_at_startup(server):
    with pytest.raises(SignatureClash) as e:
        RuntimeServer(ServerConfig(workers=[server.url, server.url],
                                   include_mocks=False))
    assert "mock/" in str(e.value) or "optimizer/" in str(e.value)


def test_child_unreachable_after_retries():
    t0 = time.monotonic()
    with pytest.raises(TransportError):
        WorkerClient("http://127.0.0.1:9", timeout=2).get_signature()
    assert time.monotonic() - t0 >= 0.3  # the backoff schedule ran


# -- callbacks & auth --------------------------------------------------------------

def test_worker_callback_run_graph(server, fig1a):
    ctx = RunContext(server.url, "job-123")
    out = callback_run_graph(ctx, fig1a, {"x": FloatValue(0.2)})
    assert out == {"parity": FloatValue(0.4)}


def test_callback_passthrough_identity(server):
    ctx = RunContext(server.url, "-")
    out = callback_run_graph(ctx, examples.passthrough(), {"v": IntValue(7)})
    assert out == {"v": IntValue(7)}


def test_token_auth_enforced():
    srv = RuntimeServer(ServerConfig(include_mocks=False, token="sekrit")).start()
    try:
        with pytest.raises(WireError) as e:
            RuntimeClient(srv.url).get_signature()
        assert e.value.status == 403
        with pytest.raises(WireError) as e:
            RuntimeClient(srv.url, token="wrong").get_signature()
        assert e.value.status == 403
        ok = RuntimeClient(srv.url, token="sekrit").get_signature()
        assert "builtin" in ok["namespaces"]
    finally:
        srv.shutdown()


def test_extra_decl_collision_detected():
    lying = FunctionDecl("builtin/fsub",
                         TypeScheme((), (), Row.closed({}), Row.closed({})),
                         lambda i: {})
    with pytest.raises(SignatureClash):
        RuntimeServer(ServerConfig(extra_decls=[lying]))
