import pytest

import cnndse


def test_builtins_listed():
    names = cnndse.builtin_names()
    assert {"nin", "alexnet", "squeezenet", "lenet"} <= set(names)


def test_nin_totals():
    r = cnndse.analyze("nin", batch=1024)
    totals = r["totals"]
    assert totals["forward_flops"] == pytest.approx(2.27e12, rel=0.005)
    assert totals["param_bytes"] == pytest.approx(30.4e6, rel=0.005)
    assert len(r["rows"]) == 17


def test_inline_architecture():
    doc = {
        "name": "tiny",
        "input": {"channels": 1, "height": 4, "width": 4},
        "layers": [
            {"name": "data", "kind": "input", "inputs": []},
            {"name": "c", "kind": "convolution", "filters": 2, "filter": [3, 3], "inputs": ["data"]},
        ],
    }
    r = cnndse.analyze(doc, batch=1, bias=False)
    # 2x2 outputs x 2 filters x 9 taps x 2 ops
    assert r["totals"]["forward_flops"] == 144


def test_errors_map_to_python_exceptions():
    with pytest.raises(LookupError):
        cnndse.analyze("no-such-net")
    with pytest.raises(ValueError):
        cnndse.analyze("nin", batch=0)


def test_design_space_count():
    assert cnndse.count_design_space(16, 5) == 5**16


def test_workbench_diff_and_save(tmp_path):
    wb = cnndse.Workbench(tmp_path)
    d = wb.diff("nin", [{"kind": "remove_layer", "layer": "pool3"}], batch=1024)
    assert d["totals"]["flops_multiplier"].startswith("3.8")
    assert d["classification"] == "global"
    saved = wb.save(dict(wb.architecture("lenet"), name="mine"))
    assert saved["created"]
    assert [a["name"] for a in wb.architectures()["workspace"]] == ["mine"]
    with pytest.raises(ValueError):
        wb.diff("nin", [{"kind": "warp"}])
