"""CSV schema edge cases: strict parsing, error localization, formatting."""

import numpy as np
import pytest

from tickbench.columns import concat_trades
from tickbench.engine import csvio
from tickbench.errors import CsvFormatError
from tickbench.fp import fp_to_str

HEADER = ",".join(csvio.TRADES_COLUMNS)
GOOD = "2022-06-01T00:00:00.000000000Z,EX1,BTC-USD,buy,1,1"


def _write(tmp_path, *rows):
    path = tmp_path / "trades.csv"
    path.write_text(HEADER + "\n" + "".join(r + "\n" for r in rows))
    return path


def _read(path):
    return concat_trades(list(csvio.read_trades_csv(path)))


class TestFormatTimestamps:
    def test_known_value(self):
        # 2022-06-01T00:00:00Z epoch seconds = 1654041600
        ts = np.array([1_654_041_600 * 10**9 + 123_456_789], np.int64)
        assert csvio.format_timestamps(ts)[0] == "2022-06-01T00:00:00.123456789Z"

    def test_parse_format_round_trip(self):
        values = np.array([1, 10**9, 1_654_041_600 * 10**9 + 987,
                           1_700_000_000 * 10**9 + 999_999_999], np.int64)
        text = csvio.format_timestamps(values)
        import pyarrow as pa

        parsed = csvio.parse_timestamps(pa.array([str(t) for t in text]), 2, "x")
        assert (parsed == values).all()


class TestMalformedRows:
    @pytest.mark.parametrize("row,line", [
        (GOOD.replace(",1,1", ",1.123456789,1"), 3),   # 9 fractional digits
        (GOOD.replace(",1,1", ",1e5,1"), 3),           # exponent
        (GOOD.replace(",1,1", ",-1,1"), 3),            # negative
        (GOOD.replace(",1,1", ",1.,1"), 3),            # trailing dot
        (GOOD.replace(",1,1", ",.5,1"), 3),            # leading dot
        (GOOD.replace("buy", "hold"), 3),              # bad side
        (GOOD.replace(".000000000Z", ".000Z"), 3),     # short timestamp
        (GOOD.replace("-06-", "-13-"), 3),             # bad calendar date
        (GOOD.replace("T00:", "T25:"), 3),             # bad time of day
        (GOOD.replace("EX1", ""), 3),                  # empty identifier
    ])
    def test_raises_with_line(self, tmp_path, row, line):
        path = _write(tmp_path, GOOD, row)
        with pytest.raises(CsvFormatError) as err:
            _read(path)
        assert err.value.line == line

    def test_wrong_field_count(self, tmp_path):
        path = _write(tmp_path, GOOD, GOOD.rsplit(",", 1)[0])
        with pytest.raises(CsvFormatError):
            _read(path)

    def test_header_mismatch(self, tmp_path):
        path = tmp_path / "trades.csv"
        path.write_text("a,b,c,d,e,f\n" + GOOD + "\n")
        with pytest.raises(CsvFormatError) as err:
            _read(path)
        assert err.value.line == 1

    def test_missing_file(self, tmp_path):
        with pytest.raises(CsvFormatError):
            _read(tmp_path / "absent.csv")


class TestParsing:
    def test_values_exact(self, tmp_path):
        path = _write(tmp_path,
                      GOOD.replace(",1,1", ",45012.34,0.00000001"),
                      GOOD.replace(",1,1", ",0.1,99999999.99999999"))
        frame = _read(path)
        assert frame.price.tolist() == [4_501_234_000_000, 10_000_000]
        assert frame.amount.tolist() == [1, 9_999_999_999_999_999]

    def test_input_order_preserved_for_equal_timestamps(self, tmp_path):
        rows = [GOOD.replace(",1,1", f",1,{k}") for k in (3, 1, 2)]
        frame = _read(_write(tmp_path, *rows))
        assert [a // 10**8 for a in frame.amount.tolist()] == [3, 1, 2]

    def test_fp_to_str_minimal(self):
        assert fp_to_str(4_501_234_000_000) == "45012.34"
        assert fp_to_str(100_000_000) == "1"
        assert fp_to_str(1) == "0.00000001"
        assert fp_to_str(-150_000_000) == "-1.5"
