"""Record containers and the line-delimited serialization format."""

import numpy as np
import pytest

from robustshadows import CalibrationRecords, ShadowRecords, read_records, write_records
from robustshadows.errors import BackendError
from robustshadows.records import CALIBRATION_SCHEMA, SHADOW_SCHEMA


def small_shadow() -> ShadowRecords:
    return ShadowRecords(
        shot_index=[0, 1, 2, 3],
        batch_index=[0, 0, 1, 1],
        basis=np.array([[0, 1], [2, 2], [1, 0], [0, 0]]),
        flip=np.array([[0, 1], [1, 1], [0, 0], [1, 0]]),
        outcome=np.array([[1, 1], [1, 0], [0, 1], [1, 1]]),
    )


def small_calibration() -> CalibrationRecords:
    return CalibrationRecords(
        shot_index=[10, 11, 12],
        batch_index=[0, 0, 0],
        flip=np.array([[0, 0], [1, 0], [1, 1]]),
        outcome=np.array([[0, 0], [1, 1], [0, 1]]),
    )


def test_adjusted_outcome_is_flip_xor_outcome():
    rec = small_shadow()
    assert np.array_equal(rec.adjusted_outcome(), rec.flip ^ rec.outcome)


def test_batches_select_and_for_batch():
    rec = small_shadow()
    assert rec.batches().tolist() == [0, 1]
    b1 = rec.for_batch(1)
    assert len(b1) == 2
    assert b1.shot_index.tolist() == [2, 3]
    picked = rec.select(np.array([True, False, False, True]))
    assert picked.shot_index.tolist() == [0, 3]


def test_restrict_reorders_columns():
    rec = small_shadow()
    swapped = rec.restrict((1, 0))
    assert np.array_equal(swapped.basis[:, 0], rec.basis[:, 1])
    assert np.array_equal(swapped.outcome[:, 1], rec.outcome[:, 0])
    assert swapped.n_qubits == 2


def test_concat_keeps_order():
    rec = small_shadow()
    joined = ShadowRecords.concat([rec.for_batch(0), rec.for_batch(1)])
    assert len(joined) == 4
    assert np.array_equal(joined.basis, rec.basis)


def test_column_shape_validation():
    with pytest.raises(BackendError):
        ShadowRecords([0], [0], np.zeros((1, 2)), np.zeros((1, 2)), np.zeros((2, 2)))
    with pytest.raises(BackendError):
        CalibrationRecords([0, 1], [0], np.zeros((2, 2)), np.zeros((2, 2)))


def test_shot_views():
    rec = small_shadow()
    shot = rec[1]
    assert shot.shot_index == 1
    assert shot.basis.tolist() == [2, 2]
    shots = list(rec)
    assert len(shots) == 4


def test_shadow_roundtrip(tmp_path):
    rec = small_shadow()
    path = tmp_path / "shadow.jsonl"
    write_records(path, rec, meta={"label": "roundtrip"})
    back, header = read_records(path)
    assert header["schema"] == SHADOW_SCHEMA
    assert header["meta"]["label"] == "roundtrip"
    assert isinstance(back, ShadowRecords)
    assert np.array_equal(back.basis, rec.basis)
    assert np.array_equal(back.flip, rec.flip)
    assert np.array_equal(back.outcome, rec.outcome)
    assert np.array_equal(back.shot_index, rec.shot_index)


def test_calibration_roundtrip(tmp_path):
    rec = small_calibration()
    path = tmp_path / "calib.jsonl"
    write_records(path, rec)
    back, header = read_records(path)
    assert header["schema"] == CALIBRATION_SCHEMA
    assert isinstance(back, CalibrationRecords)
    assert np.array_equal(back.flip, rec.flip)
    assert np.array_equal(back.outcome, rec.outcome)


def test_serialization_is_byte_stable(tmp_path):
    rec = small_shadow()
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_records(a, rec)
    write_records(b, rec)
    assert a.read_bytes() == b.read_bytes()


def test_read_rejects_unknown_schema(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"schema": "something-else/9", "n_qubits": 1, "n_records": 0, "meta": {}}\n')
    with pytest.raises(BackendError):
        read_records(path)


def test_read_rejects_malformed_bits(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text(
        '{"schema": "%s", "n_qubits": 2, "n_records": 1, "meta": {}}\n'
        '{"t": 0, "batch": 0, "flip": "0x", "outcome": "00"}\n' % CALIBRATION_SCHEMA
    )
    with pytest.raises(BackendError):
        read_records(path)


def test_read_rejects_empty_body(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text('{"schema": "%s", "n_qubits": 2, "n_records": 0, "meta": {}}\n' % CALIBRATION_SCHEMA)
    with pytest.raises(BackendError):
        read_records(path)
