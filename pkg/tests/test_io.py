import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from zacf import FormatError, MultiChannelSignal, make_problem, solve_mmcf, solve_zamace
from zacf.io import (
    DatasetManifest,
    ManifestRecord,
    decode_mcs1,
    decode_template,
    encode_mcs1,
    encode_template,
    format_value,
    load_image,
    read_manifest,
    read_pgm,
    read_template,
    write_csv,
    write_manifest,
    write_mcs1,
    write_pgm,
    write_template,
)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@given(arrays(np.float64, st.tuples(st.integers(1, 3), st.integers(1, 5), st.integers(1, 4)), elements=finite))
def test_mcs1_round_trip_is_exact(data):
    signal = MultiChannelSignal(data)
    assert np.array_equal(decode_mcs1(encode_mcs1(signal)).data, data)


def test_mcs1_layout():
    buf = encode_mcs1(MultiChannelSignal(np.arange(6.0).reshape(1, 2, 3)))
    assert buf.startswith(b"MCS1 1 2 3\n")
    assert np.frombuffer(buf[11:], "<f8").tolist() == [0, 1, 2, 3, 4, 5]


def test_mcs1_errors_report_offsets():
    buf = encode_mcs1(MultiChannelSignal(np.ones((1, 2, 2))))
    with pytest.raises(FormatError) as info:
        decode_mcs1(buf[:-3])
    assert info.value.offset == len(buf) - 3
    with pytest.raises(FormatError) as info:
        decode_mcs1(buf + b"x")
    assert info.value.offset == len(buf)
    with pytest.raises(FormatError):
        decode_mcs1(b"MCS2 1 1 1\n" + bytes(8))
    with pytest.raises(FormatError):
        decode_mcs1(b"MCS1 1 x 1\n" + bytes(8))
    with pytest.raises(FormatError):
        decode_mcs1(b"MCS1 1 1 1")
    with pytest.raises(FormatError, match="non-finite"):
        decode_mcs1(b"MCS1 1 1 1\n" + np.array([np.nan]).tobytes())


def test_template_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    training = [MultiChannelSignal(rng.normal(size=(2, 3, 2))) for _ in range(3)]
    t, _ = solve_mmcf(make_problem(training, [1, -1, -1], pad=2, delta=0.1))
    write_template(tmp_path / "t.cft1", t)
    back = read_template(tmp_path / "t.cft1")
    assert back.kind == "MMCF" and back.bias == t.bias
    assert np.array_equal(back.template.data, t.template.data)
    assert back.support.size == t.support.size and back.grid == t.grid
    assert encode_template(back) == encode_template(t)


def test_template_header_and_errors():
    rng = np.random.default_rng(1)
    t = solve_zamace(make_problem([MultiChannelSignal(rng.normal(size=(1, 3, 1)))], pad=2))
    buf = encode_template(t)
    assert buf.split(b"\n")[0] == f"CFT1 ZAMACE 1 3 1 5 1 {t.bias!r}".encode()
    with pytest.raises(FormatError):
        decode_template(buf[:-1])
    with pytest.raises(FormatError):
        decode_template(b"CFT1 X 1 3 1 2 1 0.0\n" + bytes(16))
    with pytest.raises(FormatError):
        decode_template(b"CFT1 X 1 1 1 1 1\n" + bytes(8))


def test_pgm_scaling(tmp_path):
    img = read_pgm(b"P5\n2 2\n255\n" + bytes([0, 255, 0, 255]))
    assert img.data.reshape(-1).tolist() == [0.0, 1.0, 0.0, 1.0]
    commented = read_pgm(b"P5 # comment\n2 1\n# another\n255\n" + bytes([51, 102]))
    assert commented.data.reshape(-1) == pytest.approx([0.2, 0.4])
    wide = read_pgm(b"P5\n1 1\n1000\n" + (500).to_bytes(2, "big"))
    assert wide.data.reshape(-1) == pytest.approx([0.5])
    write_pgm(tmp_path / "a.pgm", np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert load_image(tmp_path / "a.pgm").data[0].tolist() == [[0.0, 1.0], [1.0, 0.0]]


def test_pgm_and_load_errors(tmp_path):
    with pytest.raises(FormatError) as info:
        read_pgm(b"P5\n2 2\n255\n" + bytes(3))
    assert info.value.offset == 14
    with pytest.raises(FormatError):
        read_pgm(b"P2\n1 1\n255\n0")
    with pytest.raises(FormatError):
        read_pgm(b"P5\n2")
    (tmp_path / "x.bin").write_bytes(b"junk")
    with pytest.raises(FormatError):
        load_image(tmp_path / "x.bin")
    write_mcs1(tmp_path / "s.mcs1", MultiChannelSignal(np.ones((2, 2, 2))))
    assert load_image(tmp_path / "s.mcs1").channels == 2


def test_manifest_round_trip(tmp_path):
    records = [
        ManifestRecord("a.mcs1", 0, "train"),
        ManifestRecord("b.mcs1", 1, "test", location=(3, 4)),
        ManifestRecord("c.mcs1", -1, "mine"),
        ManifestRecord("d.mcs1", 1, "test", eyes=((1, 2), (1, 8))),
    ]
    write_manifest(tmp_path / "m.cfman", DatasetManifest(records, (8, 8), 1, {"kind": "x"}))
    text = (tmp_path / "m.cfman").read_text()
    assert text.splitlines()[0] == "CFMAN1"
    back = read_manifest(tmp_path / "m.cfman")
    assert back.records == records and back.grid == (8, 8) and back.info == {"kind": "x"}
    assert back.classes == [0, 1]
    assert [r.path for r in back.select("test", 1)] == ["b.mcs1", "d.mcs1"]


def test_manifest_errors(tmp_path):
    path = tmp_path / "m.cfman"
    path.write_text("CFMAN0\n{}\n")
    with pytest.raises(FormatError):
        read_manifest(path)
    path.write_text('CFMAN1\n{"grid": [2, 2]}\n{"path": "a"}\n')
    with pytest.raises(FormatError) as info:
        read_manifest(path)
    assert info.value.offset == len('CFMAN1\n{"grid": [2, 2]}\n')
    path.write_text('CFMAN1\n{}\n{"path": "a", "class": 0, "split": "train"}\n{"path": "b", "class": 2, "split": "train"}\n')
    with pytest.raises(FormatError, match="contiguous"):
        read_manifest(path)
    path.write_text('CFMAN1\n{}\n{"path": "a", "class": 0, "split": "valid"}\n')
    with pytest.raises(FormatError, match="split"):
        read_manifest(path)


def test_csv_formatting(tmp_path):
    assert format_value(0.1) == "0.1" and format_value(True) == "1" and format_value(np.int64(3)) == "3"
    text = write_csv(tmp_path / "x.csv", ("a", "b"), [(1, 0.5), ("z", np.float64(1 / 3))])
    assert text == "a,b\n1,0.5\nz,0.3333333333333333\n"
    assert (tmp_path / "x.csv").read_text() == text
