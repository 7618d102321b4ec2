import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from rtis.errors import TrialFormatError
from rtis.stats import stochasticity
from rtis.store import (TrialRecord, config_hash, parse_trial, read_csv, read_ensemble, read_ensembles, read_trial,
                        read_trials,
                        serialize_trial, write_csv, write_trial)

FIXTURES = __import__("pathlib").Path(__file__).parent / "fixtures"


def make_record(rng, n=200, k=12, tid="trial_0000"):
    return TrialRecord(tid, {f"ch_{i}": rng.standard_normal(n) for i in range(k)}, 1000.0, seed=3,
                       config_hash="abc", meta={"note": "x"})


def test_roundtrip_exact(tmp_path, rng):
    rec = make_record(rng)
    path = write_trial(rec, tmp_path)
    back = read_trial(path)
    assert back.trial_id == rec.trial_id and back.sample_rate == 1000.0 and back.seed == 3
    assert back.meta == {"note": "x"}
    for k in rec.channels:
        assert np.array_equal(back.channels[k], rec.channels[k])


def test_deterministic_bytes_and_size(tmp_path, rng):
    rec = make_record(rng)
    write_trial(rec, tmp_path / "a.log")
    write_trial(rec, tmp_path / "b.log")
    assert (tmp_path / "a.log").read_bytes() == (tmp_path / "b.log").read_bytes()
    assert (tmp_path / "a.log").stat().st_size < 100_000


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 30), st.integers(1, 5)), elements=finite))
def test_roundtrip_property(data):
    rec = TrialRecord("t", {f"c{j}": data[:, j] for j in range(data.shape[1])}, 250.0)
    text = serialize_trial(rec)
    back = parse_trial(text)
    assert serialize_trial(back) == text
    for j in range(data.shape[1]):
        assert np.array_equal(back.channels[f"c{j}"], data[:, j])


def test_nan_rejected(rng):
    with pytest.raises(TrialFormatError, match="trial_0007"):
        serialize_trial(TrialRecord("trial_0007", {"a": [1.0, np.nan]}, 1.0))


def test_inconsistent_lengths_rejected():
    with pytest.raises(TrialFormatError, match="bad"):
        TrialRecord("bad", {"a": [1.0, 2.0], "b": [1.0]}, 1.0)


def test_truncated_file_names_trial(tmp_path, rng):
    path = write_trial(make_record(rng, tid="trial_0042"), tmp_path)
    lines = path.read_text().splitlines(keepends=True)
    path.write_text("".join(lines[:-3]))
    with pytest.raises(TrialFormatError, match="trial_0042"):
        read_trial(path)


def test_corrupted_row_names_trial(tmp_path, rng):
    path = write_trial(make_record(rng, tid="trial_0009"), tmp_path)
    lines = path.read_text().splitlines(keepends=True)
    lines[5] = "1.0,abc" + lines[5][lines[5].index(",", 4):]
    path.write_text("".join(lines))
    with pytest.raises(TrialFormatError, match="trial_0009"):
        read_trial(path)


def test_garbage_header(tmp_path):
    p = tmp_path / "x.log"
    p.write_text("not json\na\n1\n")
    with pytest.raises(TrialFormatError, match="x.log"):
        read_trial(p)
    p.write_text("")
    with pytest.raises(TrialFormatError):
        read_trial(p)


def test_ensemble_from_directory(tmp_path, rng):
    for i in range(3):
        write_trial(make_record(rng, n=50, tid=f"trial_{i:04d}"), tmp_path)
    e = read_ensemble(tmp_path, "ch_3")
    assert e.n_trials == 3 and e.n_steps == 50


def test_short_trial_named_in_ensemble(tmp_path, rng):
    write_trial(make_record(rng, n=50, tid="trial_0000"), tmp_path)
    write_trial(make_record(rng, n=49, tid="trial_0001"), tmp_path)
    with pytest.raises(TrialFormatError, match="trial_0001"):
        read_ensemble(tmp_path, "ch_0")
    with pytest.raises(TrialFormatError, match="trial_0000"):
        read_ensemble(tmp_path, "missing")
    with pytest.raises(TrialFormatError):
        read_trials(tmp_path / "empty")


def test_external_torque_logs_are_analyzable():
    # hand-written logs in the trial format, as an external recorder would produce
    e = read_ensemble(FIXTURES / "torque", "torque_2")
    assert e.n_trials == 3 and e.sample_rate == 1000.0
    rep = stochasticity(e)
    np.testing.assert_allclose(rep.mean_signal, [1.0, 2.0, 3.0, 4.0])
    np.testing.assert_allclose(rep.per_trial_delta, [0.1, 0.0, 0.1])


def test_config_hash_stable():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


def test_csv_roundtrip(tmp_path):
    write_csv(tmp_path / "t.csv", ["x", "y"], [[1, 0.1], ["a", 2.5]])
    assert read_csv(tmp_path / "t.csv") == [{"x": "1", "y": "0.10000000000000001"}, {"x": "a", "y": "2.5"}]


def test_read_ensembles_matches_single_channel(tmp_path, rng):
    for i in range(3):
        write_trial(make_record(rng, n=20, k=4, tid=f"trial_{i:04d}"), tmp_path)
    many = read_ensembles(tmp_path)
    assert list(many) == ["ch_0", "ch_1", "ch_2", "ch_3"]
    assert np.array_equal(many["ch_2"].matrix(), read_ensemble(tmp_path, "ch_2").matrix())
