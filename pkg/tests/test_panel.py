import math

import numpy as np
import pytest

from qmst import panel
from qmst.errors import DataError


def write(tmp_path, text, name="prices.csv"):
    f = tmp_path / name
    f.write_text(text)
    return f


class TestLoadWide:
    def test_full_panel(self, tmp_path):
        f = write(tmp_path, "timestamp,AAA,BBB\n1000,1.0,2.0\n2000,1.1,2.2\n3000,1.2,2.4\n")
        p = panel.load_prices(f)
        assert p.n_assets == 2
        assert p.n_points == 3
        assert p.assets == ("AAA", "BBB")
        assert p.dt_ms == 1000

    def test_zero_price_cites_row(self, tmp_path):
        f = write(tmp_path, "timestamp,AAA,BBB\n1000,1.0,2.0\n2000,0.0,2.2\n")
        with pytest.raises(DataError, match="row 3"):
            panel.load_prices(f)

    def test_negative_price_rejected(self, tmp_path):
        f = write(tmp_path, "timestamp,AAA,BBB\n1000,1.0,2.0\n2000,-1.0,2.2\n")
        with pytest.raises(DataError, match="row 3"):
            panel.load_prices(f)

    def test_non_monotone_timestamps(self, tmp_path):
        f = write(tmp_path, "timestamp,AAA,BBB\n2000,1.0,2.0\n1000,1.1,2.2\n")
        with pytest.raises(DataError, match="non-monotone"):
            panel.load_prices(f)

    def test_single_asset_rejected(self, tmp_path):
        f = write(tmp_path, "timestamp,AAA\n1000,1.0\n2000,1.1\n")
        with pytest.raises(DataError):
            panel.load_prices(f)

    def test_single_row_rejected(self, tmp_path):
        f = write(tmp_path, "timestamp,AAA,BBB\n1000,1.0,2.0\n")
        with pytest.raises(DataError):
            panel.load_prices(f)

    def test_interior_gap_carries_forward(self, tmp_path):
        f = write(tmp_path, "timestamp,AAA,BBB\n1000,1.0,2.0\n2000,1.5,\n3000,1.2,2.4\n")
        p = panel.load_prices(f)
        assert p.prices[1][1] == 2.0

    def test_leading_gap_drops_asset(self, tmp_path):
        f = write(
            tmp_path,
            "timestamp,AAA,BBB,CCC\n1000,1.0,2.0,\n2000,1.5,2.1,3.0\n3000,1.2,2.4,3.1\n",
        )
        p = panel.load_prices(f)
        assert p.assets == ("AAA", "BBB")
        assert p.dropped_assets == ("CCC",)

    def test_non_uniform_grid_rejected(self, tmp_path):
        f = write(tmp_path, "timestamp,AAA,BBB\n1000,1,2\n2000,1,2\n4000,1,2\n")
        with pytest.raises(DataError, match="non-uniform"):
            panel.load_prices(f)

    def test_iso_timestamps(self, tmp_path):
        f = write(
            tmp_path,
            "timestamp,AAA,BBB\n"
            "2021-01-01T00:01:00Z,1.0,2.0\n"
            "2021-01-01T00:02:00Z,1.1,2.2\n",
        )
        p = panel.load_prices(f)
        assert p.dt_ms == 60000
        assert p.timestamps[0] == 1609459260000

    def test_mixed_timestamp_formats_rejected(self, tmp_path):
        f = write(tmp_path, "timestamp,AAA,BBB\n1000,1.0,2.0\n2021-01-01T00:02:00Z,1.1,2.2\n")
        with pytest.raises(DataError):
            panel.load_prices(f)

    def test_duplicate_asset_labels_rejected(self, tmp_path):
        f = write(tmp_path, "timestamp,AAA,AAA\n1000,1.0,2.0\n2000,1.1,2.2\n")
        with pytest.raises(DataError, match="unique"):
            panel.load_prices(f)


class TestLoadLong:
    def test_middle_gap_carry_forward(self, tmp_path):
        text = (
            "timestamp,asset,price\n"
            "1000,A,1.0\n2000,A,1.5\n3000,A,1.2\n"
            "1000,B,2.0\n3000,B,2.4\n"
        )
        p = panel.load_prices(write(tmp_path, text), layout="long")
        bi = p.assets.index("B")
        assert p.prices[bi][1] == 2.0  # carried forward from the first price

    def test_duplicate_observation_rejected(self, tmp_path):
        text = "timestamp,asset,price\n1000,A,1.0\n1000,A,1.1\n1000,B,2.0\n2000,B,2.1\n"
        with pytest.raises(DataError, match="duplicate"):
            panel.load_prices(write(tmp_path, text), layout="long")

    def test_unknown_layout(self, tmp_path):
        f = write(tmp_path, "timestamp,asset,price\n1000,A,1.0\n")
        with pytest.raises(DataError, match="layout"):
            panel.load_prices(f, layout="tall")


def make_price_panel(prices, dt=1000):
    prices = np.asarray(prices, dtype=np.float64)
    n, t = prices.shape
    return panel.PricePanel(
        timestamps=np.arange(1, t + 1, dtype=np.int64) * dt,
        assets=tuple(f"A{i}" for i in range(n)),
        prices=prices,
    )


class TestReturns:
    def test_exponential_prices(self):
        p = make_price_panel([[1.0, math.e, math.e**2], [2.0, 2.0, 2.0]])
        r = panel.to_returns(p)
        assert np.allclose(r.returns[0], [1.0, 1.0], atol=1e-15)

    def test_constant_prices_zero_returns(self):
        p = make_price_panel([[5.0, 5.0, 5.0], [2.0, 4.0, 8.0]])
        r = panel.to_returns(p)
        assert np.all(r.returns[0] == 0.0)

    def test_ratio_value(self):
        p = make_price_panel([[100.0, 110.0], [1.0, 1.0]])
        r = panel.to_returns(p)
        assert abs(r.returns[0, 0] - 0.0953102) < 5e-8

    def test_timestamps_mark_interval_ends(self):
        p = make_price_panel([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]])
        r = panel.to_returns(p)
        assert list(r.timestamps) == list(p.timestamps[1:])


class TestCumulative:
    def test_running_sum(self):
        r = panel.ReturnPanel(
            timestamps=np.array([1, 2]), assets=("A", "B"), returns=np.array([[1.0, 1.0], [0.0, 0.0]])
        )
        assert np.array_equal(panel.cumulative_returns(r)[0], [1.0, 2.0])

    def test_mixed_signs(self):
        r = panel.ReturnPanel(
            timestamps=np.array([1, 2, 3]),
            assets=("A", "B"),
            returns=np.array([[0.5, -0.5, 0.25], [0.0, 0.0, 0.0]]),
        )
        cum = panel.cumulative_returns(r)
        assert np.allclose(cum[0], [0.5, 0.0, 0.25], atol=1e-15)
        assert np.all(cum[1] == 0.0)

    def test_round_trip_total(self):
        rng = np.random.default_rng(11)
        prices = np.exp(rng.standard_normal((3, 50)) * 0.02).cumprod(axis=1) + 1.0
        p = make_price_panel(prices)
        cum = panel.cumulative_returns(panel.to_returns(p))
        expect = np.log(p.prices[:, -1] / p.prices[:, 0])
        assert np.allclose(cum[:, -1], expect, rtol=1e-12, atol=0)


class TestSliceWindow:
    def make(self):
        return panel.ReturnPanel(
            timestamps=np.array([1, 2, 3, 4]),
            assets=("A", "B"),
            returns=np.arange(8, dtype=np.float64).reshape(2, 4),
        )

    def test_full_slice_identity(self):
        r = self.make()
        s = panel.slice_window(r, 0, 4)
        assert np.array_equal(s.returns, r.returns)
        assert s.assets == r.assets

    def test_interior_slice(self):
        s = panel.slice_window(self.make(), 1, 2)
        assert np.array_equal(s.returns, [[1.0, 2.0], [5.0, 6.0]])
        assert list(s.timestamps) == [2, 3]

    def test_out_of_range(self):
        with pytest.raises(DataError, match=r"\[3, 8\)"):
            panel.slice_window(self.make(), 3, 5)


def test_carry_forward_zero_return_fraction(tmp_path):
    # the carried asset must show at least as many zero returns as gaps
    lines = ["timestamp,asset,price"]
    rng = np.random.default_rng(5)
    miss = 0
    for t in range(40):
        lines.append(f"{1000 * (t + 1)},A,{1.0 + 0.01 * t}")
        if t in (0, 39) or rng.random() > 0.4:
            lines.append(f"{1000 * (t + 1)},B,{2.0 + 0.02 * t}")
        else:
            miss += 1
    f = write(tmp_path, "\n".join(lines) + "\n")
    p = panel.load_prices(f, layout="long")
    r = panel.to_returns(p)
    bi = p.assets.index("B")
    zero_frac = np.mean(r.returns[bi] == 0.0)
    assert zero_frac >= miss / r.n_samples


def test_panels_are_immutable():
    p = make_price_panel([[1.0, 2.0], [3.0, 4.0]])
    with pytest.raises(ValueError):
        p.prices[0, 0] = 9.0


def test_write_wide_round_trip(tmp_path):
    p = make_price_panel([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    f = tmp_path / "out.csv"
    panel.write_wide(f, p.timestamps, p.assets, p.prices)
    p2 = panel.load_prices(f)
    assert np.array_equal(p2.prices, p.prices)
    assert p2.assets == p.assets
    assert np.array_equal(p2.timestamps, p.timestamps)
