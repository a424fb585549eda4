import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddlearn.data import (RawRecording, SynthConfig, WindowSet, apply_minmax, build_task_data,
                          fit_minmax, invert_minmax, load_dataset, make_tasks, segment_all,
                          segment_windows, split_counts, subsample_low_resource, synth_generate,
                          write_dataset_csv, DatasetSchema)
from ddlearn.data.io import expected_header
from ddlearn.data.windows import window_step
from ddlearn.errors import ConfigError, DimensionError, ParseError, SchemaError


def rec(length, channels=2, subject=0, label=0, seed=0):
    return RawRecording(subject, label, np.random.default_rng(seed).normal(size=(channels, length)))


def windows(n, channels=2, width=8, seed=0, subject=0):
    r = np.random.default_rng(seed)
    return WindowSet(r.normal(size=(n, channels, 1, width)), r.integers(0, 3, n), np.full(n, subject))


# -- segmentation -----------------------------------------------------------------

def test_segment_examples():
    assert len(segment_windows(rec(125), 125, 0.5)) == 1
    ws = segment_windows(rec(1000), 125, 0.5)
    assert len(ws) == 15
    assert ws[-1].data.shape == (2, 1, 125)


def test_segment_starts_enumerated():
    r = rec(1000)
    ws = segment_windows(r, 125, 0.5)
    starts = [int(np.flatnonzero(r.samples[0] == w.data[0, 0, 0])[0]) for w in ws]
    assert starts == list(range(0, 869, 62))


def test_short_recording_warns_and_yields_nothing():
    with pytest.warns(UserWarning):
        assert segment_windows(rec(10), 125, 0.5) == []


def test_window_count_formula_matches_enumeration():
    r = np.random.default_rng(0)
    for _ in range(1000):
        length, w = int(r.integers(1, 400)), int(r.integers(1, 120))
        overlap = float(r.uniform(0, 0.95))
        try:
            step = window_step(w, overlap)
        except ConfigError:
            continue
        brute = sum(1 for s in range(length) if s % step == 0 and s + w <= length)
        formula = (length - w) // step + 1 if w <= length else 0
        assert brute == formula
        if w <= length:
            assert len(segment_windows(rec(length, 1), w, overlap)) == formula


def test_segment_labels_inherited():
    ws = segment_windows(rec(200, subject=3, label=5), 50, 0.5)
    assert all(w.subject_id == 3 and w.activity_label == 5 for w in ws)


def test_bad_overlap_rejected():
    with pytest.raises(ConfigError):
        segment_windows(rec(100), 10, 1.0)


# -- min-max -------------------------------------------------------------------------

def test_minmax_examples():
    x = np.zeros((2, 3, 1, 4))
    x[0, 0, 0] = [-2, 0, 1, 2]
    x[:, 1] = 5.0
    x[1, 2, 0] = [10, 20, 30, 40]
    ws = WindowSet(x, [0, 0], [0, 0])
    s = fit_minmax(ws)
    assert (s.mins[0], s.maxs[0]) == (-2, 2)
    assert s.degenerate.tolist() == [False, True, False]
    assert (s.mins[2], s.maxs[2]) == (0, 40)
    out = apply_minmax(ws, s).x
    assert out[0, 0, 0].tolist() == [0, 0.5, 0.75, 1]
    assert np.all(out[:, 1] == 0)
    assert out.min() >= 0 and out.max() <= 1


def test_minmax_clamps_out_of_range_and_checks_channels():
    s = fit_minmax(WindowSet(np.array([0.0, 1.0]).reshape(1, 1, 1, 2), [0], [0]))
    out = apply_minmax(WindowSet(np.array([-5.0, 0.5, 9.0]).reshape(1, 1, 1, 3), [0], [0]), s)
    assert out.x.ravel().tolist() == [0, 0.5, 1]
    with pytest.raises(DimensionError):
        apply_minmax(windows(2, channels=3), s)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31))
def test_minmax_inverse_round_trip(seed):
    ws = windows(6, channels=3, seed=seed)
    s = fit_minmax(ws)
    back = invert_minmax(apply_minmax(ws, s), s)
    np.testing.assert_allclose(back.x, ws.x, rtol=0, atol=1e-9)


def test_scaler_depends_on_source_train_only():
    wsall = segment_all([rec(300, subject=s, label=l, seed=10 * s + l)
                         for s in range(4) for l in range(2)], 20, 0.5)
    split = make_tasks(range(4), 2)[0]
    a = build_task_data(wsall, split, seed=1)
    tainted = WindowSet(wsall.x.copy(), wsall.y, wsall.subject)
    tainted.x[np.isin(wsall.subject, split.target_subjects)] = 1e6
    b = build_task_data(tainted, split, seed=1)
    assert np.array_equal(a.scaler.mins, b.scaler.mins)
    assert np.array_equal(a.train.x, b.train.x) and np.array_equal(a.val.x, b.val.x)


# -- tasks / splits --------------------------------------------------------------------

def test_make_tasks_examples():
    tasks = make_tasks(range(8), 4)
    assert len(tasks) == 4 and [t.target_group_index for t in tasks] == [0, 1, 2, 3]
    assert [len(g) for g in tasks[0].groups] == [2, 2, 2, 2]
    assert [len(g) for g in make_tasks(range(1, 15), 5)[0].groups] == [3, 3, 3, 3, 2]
    two = make_tasks([4, 9], 2)
    assert two[0].source_subjects == (9,) and two[1].source_subjects == (4,)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 30), st.data())
def test_groups_partition_subjects(n, data):
    g = data.draw(st.integers(2, n))
    for task in make_tasks(range(n), g):
        flat = [s for grp in task.groups for s in grp]
        assert sorted(flat) == list(range(n))
        assert not set(task.target_subjects) & set(task.source_subjects)


def test_make_tasks_errors():
    with pytest.raises(ConfigError):
        make_tasks(range(3), 4)
    with pytest.raises(ConfigError):
        make_tasks(range(3), 1)
    with pytest.raises(ConfigError):
        make_tasks(range(4), 2, fraction=0.0)
    with pytest.raises(ConfigError):
        make_tasks(range(4), 2, groups=[(0, 1), (1, 2, 3)])


def test_split_counts_sum():
    for n in range(1, 200):
        a, b, c = split_counts(n)
        assert a + b + c == n and min(a, b, c) >= 0
    assert split_counts(10) == (6, 2, 2)


def test_subsample_examples():
    ws = windows(100)
    assert subsample_low_resource(ws, 1.0, 0) is ws
    sub = subsample_low_resource(ws, 0.2, 3)
    assert len(sub) == 20
    again = subsample_low_resource(ws, 0.2, 3)
    assert np.array_equal(sub.x, again.x)
    rows = {r.tobytes() for r in ws.x}
    assert all(r.tobytes() in rows for r in sub.x)
    with pytest.raises(ConfigError):
        subsample_low_resource(windows(2), 0.1, 0)


def test_subsample_warns_when_a_class_vanishes(caplog):
    ws = WindowSet(np.zeros((10, 1, 1, 4)), [0] * 9 + [1], np.zeros(10))
    with caplog.at_level(logging.WARNING):
        for seed in range(20):
            subsample_low_resource(ws, 0.2, seed)
    assert "dropped every window" in caplog.text


def test_target_group_never_in_training():
    wsall = segment_all([rec(300, subject=s, label=l, seed=s + l)
                         for s in range(6) for l in range(2)], 20, 0.5)
    for split in make_tasks(range(6), 3, 0.4):
        td = build_task_data(wsall, split, seed=0)
        assert not set(td.train.subject) & set(split.target_subjects)
        assert not set(td.val.subject) & set(split.target_subjects)
        assert set(td.target.subject) == set(split.target_subjects)


# -- csv ingestion -----------------------------------------------------------------------

def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_load_examples(tmp_path):
    path = write(tmp_path, "subject,activity,ch_0,ch_1\n0,2,1,2\n0,2,3,4\n0,2,5,6\n")
    recs = load_dataset(path, DatasetSchema(2))
    assert len(recs) == 1 and recs[0].length == 3
    assert recs[0].samples.tolist() == [[1, 3, 5], [2, 4, 6]]
    path = write(tmp_path, "subject,activity,ch_0\n0,1,1\n0,1,2\n1,1,3\n", "e.csv")
    assert [r.subject_id for r in load_dataset(path, DatasetSchema(1))] == [0, 1]


def test_load_errors(tmp_path):
    with pytest.raises(SchemaError):
        load_dataset(write(tmp_path, "subject,activity,ch_0\n0,0,1\n"), DatasetSchema(2))
    with pytest.raises(ParseError, match="line 3"):
        load_dataset(write(tmp_path, "subject,activity,ch_0\n0,0,1\n0,0,x\n"), DatasetSchema(1))
    with pytest.raises(ParseError, match="line 2"):
        load_dataset(write(tmp_path, "subject,activity,ch_0\n0,0\n"), DatasetSchema(1))
    with pytest.raises(SchemaError, match="label"):
        load_dataset(write(tmp_path, "subject,activity,ch_0\n0,9,1\n"), DatasetSchema(1, (0, 1)))


def test_csv_round_trip(tmp_path):
    recs = synth_generate(SynthConfig(n_subjects=2, n_classes=2, channels=3, length=20), 4)
    path = str(tmp_path / "s.csv")
    write_dataset_csv(path, recs)
    back = load_dataset(path, DatasetSchema(3))
    assert len(back) == len(recs)
    for a, b in zip(recs, back):
        assert (a.subject_id, a.activity_label) == (b.subject_id, b.activity_label)
        assert np.array_equal(a.samples, b.samples)
    assert open(path).readline().strip().split(",") == expected_header(3)


# -- synthetic generator -----------------------------------------------------------------

def test_synth_zero_shift_subjects_identical():
    recs = synth_generate(SynthConfig(length=200).without_shift(), 1)
    by = {}
    for r in recs:
        by.setdefault(r.activity_label, []).append(r.samples)
    for label, xs in by.items():
        assert all(np.array_equal(xs[0], x) for x in xs[1:])


def test_synth_deterministic_and_shaped():
    cfg = SynthConfig(length=300)
    a, b = synth_generate(cfg, 5), synth_generate(cfg, 5)
    assert len(a) == 4 * 6
    assert all(np.array_equal(x.samples, y.samples) for x, y in zip(a, b))
    assert a[0].samples.shape == (9, 300)
    assert not np.array_equal(a[0].samples, synth_generate(cfg, 6)[0].samples)


def test_synth_channels_must_be_triads():
    with pytest.raises(ConfigError):
        synth_generate(SynthConfig(channels=8), 0)


def subject_probe_accuracy(cfg):
    # least-squares one-vs-all probe on per-window channel means and stds
    ws = segment_all(synth_generate(cfg, 0), 64, 0.5)
    feat = np.c_[ws.x.mean(axis=(2, 3)), ws.x.std(axis=(2, 3)), np.ones(len(ws))]
    idx = np.random.default_rng(0).permutation(len(ws))
    tr, te = idx[:len(idx) // 2], idx[len(idx) // 2:]
    w = np.linalg.lstsq(feat[tr], np.eye(cfg.n_subjects)[ws.subject[tr]], rcond=None)[0]
    return float(((feat[te] @ w).argmax(1) == ws.subject[te]).mean())


def test_linear_probe_separates_subjects():
    # recorded oracle values: 1.00 with shift, 0.21 (chance 0.25) without
    assert subject_probe_accuracy(SynthConfig()) > 0.9
    assert subject_probe_accuracy(SynthConfig().without_shift()) < 0.35
