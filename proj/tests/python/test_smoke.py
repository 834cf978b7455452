import json
import math

import pytest

import vulnatlas as va


def grid_adjacency(rows, cols):
    adj = []
    for r in range(rows):
        for c in range(cols):
            nb = []
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    if (dr or dc) and 0 <= r + dr < rows and 0 <= c + dc < cols:
                        nb.append((r + dr) * cols + c + dc)
            adj.append(nb)
    return adj


def test_version_and_error_type():
    assert va.__version__
    with pytest.raises(va.VulnatlasError) as info:
        va.make_geoid("37", "81A", "010600")
    assert info.value.args[0] == "MalformedComponent"


def test_geometry():
    x, y = va.project_point(180.0, 0.0)
    assert abs(x - 20037508.3428) < 1e-3
    assert va.polygon_area([(0, 0), (1, 0), (1, 1), (0, 1)]) == pytest.approx(1.0)
    tract = [(0, 0), (1000, 0), (1000, 1000), (0, 1000)]
    half = [[(0, 0), (500, 0), (500, 1000), (0, 1000)]]
    assert va.flood_exposure(tract, half, 0.0) == pytest.approx(50.0)
    assert va.make_geoid("37", "081", "010600") == "37081010600"


def test_preprocess_and_indices():
    assert va.quantile([1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 100], 0.25) == pytest.approx(3.5)
    flags = va.tukey_fences([1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 100])
    assert flags == [False] * 10 + [True]
    assert va.zscore([0.0, 10.0]) == pytest.approx([-1.0, 1.0])
    assert va.minmax_normalize([2.0, 4.0, 6.0]) == pytest.approx([0.0, 50.0, 100.0])
    assert va.composite_index([50.0], [0.0])[0] == pytest.approx(30.0)
    assert sum(va.top_decile(list(range(1, 101)))) == 10


def test_stats_against_scipy():
    scipy_stats = pytest.importorskip("scipy.stats")
    a, b = [1.0, 2.0, 3.0], [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
    ref = scipy_stats.ttest_ind(a, b, equal_var=False)
    got = va.welch_t(a, b)
    assert got["statistic"] == pytest.approx(ref.statistic, abs=1e-9)
    assert got["p_value"] == pytest.approx(ref.pvalue, abs=1e-9)
    chi = va.chi_square([[10.0, 20.0], [20.0, 10.0]])
    ref_chi = scipy_stats.chi2_contingency([[10, 20], [20, 10]], correction=False)
    assert chi["statistic"] == pytest.approx(ref_chi[0], abs=1e-9)
    w, p = va.shapiro_wilk([2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8, 6.1, 3.9, 4.0])
    ref_w = scipy_stats.shapiro([2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8, 6.1, 3.9, 4.0])
    assert w == pytest.approx(ref_w.statistic, abs=1e-5)
    assert p == pytest.approx(ref_w.pvalue, rel=1e-3)


def test_clustering():
    rows = [[0.0, 0.1], [0.1, 0.0], [0.05, 0.05], [10.0, 10.1], [10.1, 10.0], [10.05, 9.95]]
    model = va.kmeans_fit(rows, 2, seed=3)
    assert va.adjusted_rand(model["assignments"], [0, 0, 0, 1, 1, 1]) == pytest.approx(1.0)
    k_best, table = va.select_k(rows, 2, 4, seed=1)
    assert k_best == 2
    assert [row[0] for row in table] == [2, 3, 4]
    merges = va.ward_linkage([[0.0], [1.0], [10.0], [11.0]])
    assert {merges[0][0], merges[0][1]} in ({0, 1}, {2, 3})
    assert va.ward_cut([[0.0], [1.0], [10.0], [11.0]], 2) == [0, 0, 1, 1]
    assert va.adjusted_rand([0, 0, 0, 1, 1, 1], [0, 0, 1, 1, 2, 2]) == pytest.approx(0.24242424242424243)


def test_spatial():
    adj = grid_adjacency(4, 4)
    checker = [float((i // 4 + i % 4) % 2) for i in range(16)]
    assert va.morans_i(checker, adj, "binary") < 0
    values = [float(i // 4 + i % 4) for i in range(16)]
    i_val, p = va.morans_i_test(values, adj, 999, 5)
    assert i_val > 0 and p == pytest.approx(0.001)
    lisa = va.local_moran(values, adj, 99, 2)
    assert len(lisa["quadrant"]) == 16
    assert lisa["quadrant"][15] == "HH"
    breaks, labels = va.fisher_jenks([1, 2, 3, 11, 12, 13], 2)
    assert labels == [0, 0, 0, 1, 1, 1]
    assert breaks == [1, 3, 13]


def test_pipeline_end_to_end(tmp_path):
    typology = va.write_synthetic_city(str(tmp_path / "city"))
    assert len(typology) == 100
    result = va.run_pipeline(str(tmp_path / "city" / "config.toml"), str(tmp_path / "run"))
    assert result["ok"], result["failed_stage"]
    assert result["exit_code"] == 0
    manifest = json.loads(result["manifest"])
    assert manifest["status"] == "ok"
    scored = json.loads((tmp_path / "run" / "scored.geojson").read_text())
    assert len(scored["features"]) == 94
    composite = [f["properties"]["composite"] for f in scored["features"]]
    assert all(0.0 <= v <= 100.0 and not math.isnan(v) for v in composite)
