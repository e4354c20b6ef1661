import json
import math
import threading
import time

import numpy as np
import pandas as pd
import pytest

from levitodyn import __version__, records
from levitodyn.core import ConfigError
from levitodyn.jobs import (
    create_run_manifest,
    file_sha256,
    load_manifest,
    manifest_path_for,
    parallel_map,
    record_output,
    replay,
    save_manifest,
    update_run_status,
    verify_outputs,
)


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------

def test_jsonable_converts_numpy_and_special_floats():
    out = records.jsonable({
        "a": np.float64(1.5),
        "b": np.int64(3),
        "c": np.array([1.0, np.inf]),
        "d": math.nan,
        "e": (np.bool_(True), -math.inf),
    })
    assert out == {"a": 1.5, "b": 3, "c": [1.0, "inf"], "d": "nan", "e": [True, "-inf"]}
    assert json.loads(records.to_json(out)) == out


def test_flags_to_cell():
    assert records.flags_to_cell([]) == ""
    assert records.flags_to_cell(["a", "b"]) == "a | b"


def test_write_csv_fixes_column_order(tmp_path):
    df = pd.DataFrame({"b": [2.0], "a": [1.0]})
    path = records.write_csv(df, tmp_path / "sub" / "t.csv", columns=["a", "b", "flags"])
    header = path.read_text(encoding="utf-8").splitlines()[0]
    assert header == "a,b,flags"
    back = records.read_csv(path, required=["a", "b"])
    assert back.loc[0, "a"] == 1.0


def test_write_csv_to_stdout(capsys):
    assert records.write_csv(pd.DataFrame({"x": [0.25]}), "-") is None
    out = capsys.readouterr().out
    assert out.splitlines() == ["x", "2.5000000000e-01"]


def test_read_csv_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        records.read_csv(tmp_path / "nope.csv")
    path = tmp_path / "t.csv"
    path.write_text("x\n1\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="missing required column"):
        records.read_csv(path, required=["y"])


# ---------------------------------------------------------------------------
# manifests
# ---------------------------------------------------------------------------

def test_manifest_round_trip(tmp_path):
    out = tmp_path / "result.csv"
    out.write_text("x\n1\n", encoding="utf-8")
    manifest = create_run_manifest(["freqs", "--out", str(out)], {"beam": {"power": 0.1}}, {"master_seed": 42})
    assert manifest.status == "running"
    assert manifest.tool_version == __version__

    record_output(manifest, out)
    update_run_status(manifest, "completed")
    path = save_manifest(manifest, manifest_path_for(out))
    assert path.name == "result.csv.manifest.json"

    loaded = load_manifest(path)
    assert loaded == manifest
    assert loaded.outputs[str(out)] == file_sha256(out)
    assert verify_outputs(loaded) == []

    out.write_text("x\n2\n", encoding="utf-8")
    assert verify_outputs(loaded) == [str(out)]


def test_failed_status_keeps_the_message():
    manifest = create_run_manifest([], {}, {})
    update_run_status(manifest, "failed", "boom")
    assert (manifest.status, manifest.error_message) == ("failed", "boom")


def test_load_manifest_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_manifest(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"id": "x", "colour": "red"}), encoding="utf-8")
    with pytest.raises(ConfigError, match="unexpected fields"):
        load_manifest(bad)


def test_replay_reruns_the_command(tmp_path):
    out = tmp_path / "a.txt"
    out.write_text("same", encoding="utf-8")
    manifest = create_run_manifest(["write", str(out)], {}, {})
    record_output(manifest, out)
    path = save_manifest(manifest, manifest_path_for(out))

    calls = []

    def runner(argv):
        calls.append(argv)
        out.write_text("same", encoding="utf-8")
        return 0

    result = replay(path, runner)
    assert calls == [["write", str(out)]]
    assert result["matched"] == [str(out)] and result["mismatched"] == []

    result = replay(path, lambda argv: out.write_text("different", encoding="utf-8") and 0)
    assert result["mismatched"] == [str(out)]


# ---------------------------------------------------------------------------
# parallel_map
# ---------------------------------------------------------------------------

def test_parallel_map_keeps_input_order():
    def slow_square(x):
        time.sleep(0.01 * (5 - x))
        return x * x

    assert parallel_map(slow_square, list(range(6)), jobs=4) == [0, 1, 4, 9, 16, 25]
    assert parallel_map(slow_square, list(range(6)), jobs=1) == [0, 1, 4, 9, 16, 25]


def test_parallel_map_uses_threads():
    seen = set()

    def record(_):
        seen.add(threading.get_ident())
        time.sleep(0.05)

    parallel_map(record, list(range(8)), jobs=4)
    assert len(seen) > 1
