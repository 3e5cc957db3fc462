"""Smoke test for the Python bindings: classify, graph, simulate."""

import dexflat


def main() -> None:
    assert "rigid_body" in dexflat.BUILTIN_SYSTEMS
    assert "motivating_unified" in dexflat.BUILTIN_SCENARIOS

    ex1 = dexflat.System.builtin("example1")
    rep = dexflat.classify(ex1)
    assert rep["d_family"] == [[1], [2]], rep["d_family"]
    print(f"{ex1!r}: D = {rep['d_family']}, labels = {rep['labels']}")

    again = dexflat.System.parse(ex1.render())
    assert again.inputs == ex1.inputs

    g = dexflat.negotiability_graph(dexflat.System.builtin("motivating_square"), "0,1,0")
    assert len(g) == 2 and g.edges == [(0, 1)], g.edges
    assert "v0 -- v1" in g.dot()
    print(f"graph: {g.labels}, edges {g.edges}")

    tr = dexflat.simulate(dexflat.Scenario.builtin("motivating_unified"))
    assert tr.aborted is None
    assert tr.switch_times == [8.0]
    metric = tr.transient_metric("x3", 8.0)
    assert metric < 1e-3, metric
    kinds = [e["kind"] for e in tr.events()]
    assert kinds == ["switch"], kinds
    print(f"unified run: {len(tr)} samples, transient metric on x3 = {metric:.2e}")

    ok, line = dexflat.run_criterion("AC2")
    assert ok, line
    print(line)

    try:
        dexflat.Scenario.parse("scenario x\nsystem builtin:example1\nbogus 1\n")
    except ValueError as e:
        assert "line 3" in str(e), e
    else:
        raise AssertionError("bad scenario accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
