import numpy as np
import pytest

from ledleak.formats import (
    atomic_write_text,
    hexline_to_octets,
    octets_to_hexline,
    read_events,
    read_trace,
    write_events,
    write_trace,
)
from ledleak.signals import LogicEventStream, OpticalTrace


class TestTraceFiles:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        tr = OpticalTrace(1_000_000.0, rng.normal(0.5, 0.1, 500), origin_time=0.25)
        path = tmp_path / "t.optrace"
        write_trace(path, tr)
        back = read_trace(path)
        assert back.sample_rate == tr.sample_rate
        assert back.origin_time == tr.origin_time
        assert np.array_equal(back.samples, tr.samples)

    def test_header_format(self, tmp_path):
        path = tmp_path / "t.optrace"
        write_trace(path, OpticalTrace(9600.0, np.array([0.5])))
        first = path.read_text().splitlines()[0]
        assert first.startswith("# optrace v1 sample_rate_hz=")
        assert "origin_s=" in first

    def test_rejects_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.optrace"
        path.write_text("# nottrace v1\n0.5\n")
        with pytest.raises(ValueError):
            read_trace(path)

    def test_empty_trace_round_trip(self, tmp_path):
        path = tmp_path / "e.optrace"
        write_trace(path, OpticalTrace(100.0, np.empty(0)))
        assert read_trace(path).n_samples == 0

    def test_repeated_writes_byte_identical(self, tmp_path):
        tr = OpticalTrace(48e3, np.linspace(0, 1, 64))
        a, b = tmp_path / "a", tmp_path / "b"
        write_trace(a, tr)
        write_trace(b, tr)
        assert a.read_bytes() == b.read_bytes()

    def test_no_temp_files_left(self, tmp_path):
        write_trace(tmp_path / "x.optrace", OpticalTrace(1.0, np.zeros(3)))
        assert [p.name for p in tmp_path.iterdir()] == ["x.optrace"]


class TestEventFiles:
    def test_round_trip(self, tmp_path):
        ev = LogicEventStream(1, (0.0, 1e-4, 2.5e-4), 1e-3)
        path = tmp_path / "e.optevents"
        write_events(path, ev)
        assert read_events(path) == ev

    def test_header_format(self, tmp_path):
        path = tmp_path / "e.optevents"
        write_events(path, LogicEventStream(0, (), 2.0))
        first = path.read_text().splitlines()[0]
        assert first.startswith("# optevents v1 initial=0 duration_s=")


class TestHexFormats:
    def test_hexline_round_trip(self):
        data = bytes(range(20))
        line = octets_to_hexline(data)
        assert line.startswith("00 01 02")
        assert line == line.lower()
        assert hexline_to_octets(line) == data

    def test_hexline_rejects_garbage(self):
        with pytest.raises(ValueError):
            hexline_to_octets("0g 00")
        with pytest.raises(ValueError):
            hexline_to_octets("000 11")


class TestAtomicWrite:
    def test_overwrites_existing(self, tmp_path):
        p = tmp_path / "f.txt"
        atomic_write_text(p, "one")
        atomic_write_text(p, "two")
        assert p.read_text() == "two"
