import math

import pytest

import vstream


def test_qoe_worked_example():
    w = vstream.QoEWeights.preset("1,1,1,1")
    b = vstream.qoe_total(w, [0.7, 0.3], [8.0, 5.0], [10.0, 5.0], 0.0)
    assert b.viewport_quality == pytest.approx(0.7 * 8 + 0.3 * 5, abs=1e-12)
    assert b.temporal_variation == pytest.approx(1.4, abs=1e-12)
    assert b.spatial_variation == pytest.approx(0.5 * 2 * 0.21 * 3.0, abs=1e-12)


def test_qoe_presets():
    w = vstream.QoEWeights.preset("(1,2,1,1)")
    assert w.temporal_penalty == 2.0
    with pytest.raises(Exception):
        vstream.QoEWeights.preset("not-a-preset")


def test_great_circle():
    assert vstream.great_circle_distance([1, 0, 0], [1, 0, 0]) == 0.0
    assert vstream.great_circle_distance([1, 0, 0], [0, 1, 0]) == pytest.approx(math.pi / 2)
    assert vstream.great_circle_distance([1, 0, 0], [-1, 0, 0]) == pytest.approx(math.pi)


def test_viewport_tiles_center():
    tiles = vstream.viewport_tiles([1, 0, 0], vstream.TileGrid(6, 12), vstream.Fov(100, 100))
    assert len(tiles) == 16


def test_partition_overlap_goes_to_higher_probability():
    preds = vstream.make_prediction_set([[[1, 0, 0]], [[1, 0, 0]]], [0.6, 0.4])
    part = vstream.partition(preds, vstream.TileGrid(6, 12), vstream.Fov(100, 100))
    assert len(part.regions[0]) == 16
    assert len(part.regions[1]) == 0
    assert len(part.rest) == 72 - 16


def test_gae_and_returns():
    ret = vstream.discounted_returns([1.0, 1.0], 2.0, 0.5)
    assert ret[0] == pytest.approx(1 + 0.5 * 1 + 0.25 * 2)
    adv = vstream.gae([1.0, 1.0], [0.0, 0.0], 0.0, 0.99, 0.0)
    assert adv[1] == pytest.approx(1.0)


def test_download_time_piecewise():
    tr = vstream.make_trace([0.0, 2.0], [2.0, 6.0])
    assert vstream.download_time(8.0, tr, 0.0) == pytest.approx(2 + 2 / 3)


def test_manifest_and_sizes():
    mf = vstream.generate_manifest(seed=7, segments=4)
    assert mf.tiles == 72
    uniform = [0] * mf.tiles
    total = vstream.segment_size_mb(mf, 0, uniform)
    assert total == pytest.approx(mf.ladder_mbps[0] * mf.segment_duration_s, rel=1e-9)


def test_baselines():
    assert vstream.bb_select(2.0, 6) == 0
    assert vstream.bb_select(20.0, 6) == 5
    assert vstream.bb_select(10.0, 6) == 2
    ladder = [1, 2.5, 5, 8, 16, 35]
    assert vstream.rb_select([9.0, 9.0], ladder) == 3
    assert vstream.rb_select([4.0, 12.0], ladder) == 2


def test_env_episode(tmp_path):
    oracle = tmp_path / "oracle.txt"
    rows = []
    for _ in range(5):
        rows.append("0.5 1 0 0")
        rows.append("0.3 0 1 0")
        rows.append("0.15 0 0 1")
    oracle.write_text("\n".join(rows) + "\n")

    cfg = vstream.EnvConfig()
    cfg.manifest = vstream.generate_manifest(seed=7, segments=5)
    cfg.trace = vstream.make_trace([0.0], [100.0])
    cfg.weights = vstream.QoEWeights.preset("1,1,1,1")
    cfg.agents = 3
    cfg.predictor.kind = "oracle-log"
    cfg.predictor.oracle_log_path = str(oracle)

    env = vstream.Env(cfg)
    obs = env.reset()
    assert len(obs) == 3
    assert len(obs[0]) == env.observation_size == 2 * 8 + 2 * 6 + 3
    assert env.global_state() == [x for o in obs for x in o]

    total = 0.0
    while not env.done:
        obs, reward, qoe, done = env.step([0, 0, 0])
        total += reward
    log = env.episode_log()
    assert len(log) == 5
    assert vstream.freeze_frequency(log) == 0.0


def test_kmeans_and_quantize():
    pts = [[1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, 0, 0]]
    cb = vstream.kmeans_fit(pts, 4, seed=3)
    assert cb.size == 4
    idx = vstream.quantize([1, 0, 0], cb)
    assert cb.centroids[idx] == pytest.approx([1, 0, 0])


def test_attention_uniform_model():
    cfg = vstream.AttentionConfig()
    cfg.frame_h, cfg.frame_w, cfg.frame_c = 4, 4, 1
    cfg.patch_h = cfg.patch_w = 2
    cfg.frames = cfg.history = cfg.horizon = 2
    cfg.classes = 8
    cfg.embed_dim = 8
    cfg.heads = 2
    cfg.spatial_blocks = cfg.temporal_blocks = 1
    cfg.viewpoint_blocks = cfg.decoder_blocks = 1
    cfg.ffn_hidden = 8
    model = vstream.AttentionModel(cfg)
    frames = [[[0.0] * 4 for _ in range(4)] for _ in range(2)]
    probs = model.forward(frames, [0, 1])
    assert len(probs) == 2 and len(probs[0]) == 8
    for row in probs:
        assert sum(row) == pytest.approx(1.0, abs=1e-9)
        # zero-initialized head emits uniform probabilities
        assert all(p == pytest.approx(1.0 / 8, abs=1e-9) for p in row)
