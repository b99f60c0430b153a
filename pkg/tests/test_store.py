import json

import numpy as np
import pytest

from extito import process_models as pm
from extito import store


def batch(spec, n=3, dt=1e-2):
    return [pm.simulate_path(spec, 1.0, dt, s) for s in range(n)]


@pytest.mark.parametrize("spec", [pm.brownian(), pm.alpha_stable(1.2, delta=0.05),
                                  pm.brownian_jumps(1.0, 1.5, scale=0.5),
                                  pm.compound_poisson(3.0, "twopoint", 0.5),
                                  pm.diffusion2d(((1.0, 0.3), (0.3, 2.0)))])
def test_round_trip(tmp_path, spec):
    paths = batch(spec, dt=1e-3)
    store.store_paths(paths, tmp_path)
    back = store.load_paths(tmp_path)
    assert len(back) == len(paths)
    for a, b in zip(paths, back):
        assert a.same_as(b)
        assert a.seed == b.seed and a.spec == b.spec


def test_single_bm_path(tmp_path):
    p = pm.simulate_path(pm.brownian(), 1.0, 1e-3, 42)
    store.store_paths([p], tmp_path)
    (q,) = store.load_paths(tmp_path)
    np.testing.assert_array_equal(p.values, q.values)
    assert q.seed == 42


def test_empty_batch_writes_stub(tmp_path):
    store.store_paths([], tmp_path)
    assert sorted(f.name for f in tmp_path.iterdir()) == [store.MANIFEST_FILE]
    assert store.load_paths(tmp_path) == []


def test_version_mismatch_refused(tmp_path):
    store.store_paths(batch(pm.brownian(), 1), tmp_path)
    m = json.loads((tmp_path / store.MANIFEST_FILE).read_text())
    m["version"] = store.FORMAT_VERSION + 1
    (tmp_path / store.MANIFEST_FILE).write_text(json.dumps(m))
    with pytest.raises(store.StoreVersionError):
        store.load_paths(tmp_path)


def test_header_layout(tmp_path):
    store.store_paths(batch(pm.brownian(), 2), tmp_path)
    raw = (tmp_path / store.BATCH_FILE).read_bytes()
    assert raw[:8] == store.MAGIC
    hlen = int.from_bytes(raw[8:12], "little")
    head = json.loads(raw[12:12 + hlen])
    assert head["version"] == store.FORMAT_VERSION
    assert (head["n_paths"], head["n_steps"], head["dim"]) == (2, 100, 1)


def test_mixed_batch_rejected(tmp_path):
    with pytest.raises(ValueError):
        store.store_paths(batch(pm.brownian(), 1) + batch(pm.brownian(2.0), 1), tmp_path)


def test_truncated_file(tmp_path):
    store.store_paths(batch(pm.brownian(), 2), tmp_path)
    f = tmp_path / store.BATCH_FILE
    f.write_bytes(f.read_bytes()[:-10])
    with pytest.raises(ValueError):
        store.load_paths(tmp_path)


def test_csv_export(tmp_path):
    paths = batch(pm.alpha_stable(1.2, delta=0.05), 2, dt=1e-3)
    out = store.export_csv(paths, tmp_path / "p.csv")
    lines = out.read_text().splitlines()
    assert lines[0] == "path,seed,step,t,x0,jump0"
    assert len(lines) == 1 + 2 * 1001
