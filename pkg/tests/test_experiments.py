import dataclasses
import math

import numpy as np
import pytest

from fgclock import ClockModelParams, ParameterError
from fgclock.experiments import (
    ALL_ESTIMATORS,
    CSV_HEADER,
    MseTable,
    SweepConfig,
    compare_estimators,
    mse_vs_rounds,
    mse_vs_sigma,
)


def make_config(**kw):
    base = dict(
        params=ClockModelParams(10.0, 10.0, 1e-2, 1.0, 0.5, 25),
        axis="rounds",
        values=(2, 5),
        trials=100,
        seed=7,
    )
    base.update(kw)
    return SweepConfig(**base)


class TestSweepConfig:
    def test_values_must_increase(self):
        with pytest.raises(ParameterError):
            make_config(values=(5, 2))

    def test_values_nonempty(self):
        with pytest.raises(ParameterError):
            make_config(values=())

    def test_trials_positive(self):
        with pytest.raises(ParameterError):
            make_config(trials=0)

    def test_unknown_estimator(self):
        with pytest.raises(ParameterError):
            make_config(estimators=("fge-recursive", "bogus"))

    def test_axis_checked(self):
        with pytest.raises(ParameterError):
            make_config(axis="delay")
        with pytest.raises(ParameterError):
            mse_vs_sigma(make_config(axis="rounds"))
        with pytest.raises(ParameterError):
            mse_vs_rounds(make_config(axis="sigma", values=(0.01, 0.1)))


class TestMseVsRounds:
    def test_sigma_zero_rows_identical(self):
        params = ClockModelParams(10.0, 10.0, 0.0, 1.0, 0.5, 25)
        table = mse_vs_rounds(make_config(params=params, values=(2, 4), trials=50))
        for n in (2, 4):
            cells = [table.cell(n, tag) for tag in ALL_ESTIMATORS]
            assert len({c.mse for c in cells}) == 1
            assert len({c.stderr for c in cells}) == 1

    def test_reproducible(self):
        cfg = make_config(trials=64)
        a = mse_vs_rounds(cfg)
        b = mse_vs_rounds(cfg)
        assert a == b
        assert a.to_csv() == b.to_csv()

    def test_one_row_per_cell(self):
        table = mse_vs_rounds(make_config(trials=10))
        keys = [(r.axis_value, r.estimator) for r in table.rows]
        assert len(keys) == len(set(keys)) == 2 * len(ALL_ESTIMATORS)

    def test_stderr_scaling(self):
        # quadrupling trials should roughly halve the standard error
        lo = mse_vs_rounds(make_config(values=(10,), trials=2000, seed=3))
        hi = mse_vs_rounds(make_config(values=(10,), trials=8000, seed=3))
        ratio = hi.cell(10, "ml").stderr / lo.cell(10, "ml").stderr
        assert 0.4 <= ratio <= 0.6

    def test_estimates_finite(self):
        table = mse_vs_rounds(make_config(trials=30))
        for row in table.rows:
            assert math.isfinite(row.mse) and row.mse >= 0
            assert row.stderr >= 0

    def test_insensitive_to_d0_theta0(self):
        # translation equivariance makes the MSE independent of d0/theta0
        base = make_config(values=(8,), trials=500, seed=11)
        shifted = dataclasses.replace(
            base, params=dataclasses.replace(base.params, d0=3.0, theta0=-1.0)
        )
        a = mse_vs_rounds(base)
        b = mse_vs_rounds(shifted)
        for tag in ALL_ESTIMATORS:
            assert a.cell(8, tag).mse == pytest.approx(b.cell(8, tag).mse, rel=1e-9)


class TestMseVsSigma:
    def test_sigma_zero_point_collapses_to_ml(self):
        cfg = make_config(axis="sigma", values=(0.0, 0.05), trials=60)
        table = mse_vs_sigma(cfg)
        ml = table.cell(0.0, "ml")
        for tag in ("fge-recursive", "fge-paper"):
            assert table.cell(0.0, tag).mse == ml.mse

    def test_rounds_fixed_from_params(self):
        cfg = make_config(axis="sigma", values=(0.01, 0.1), trials=40)
        table = mse_vs_sigma(cfg)
        assert {r.axis_value for r in table.rows} == {0.01, 0.1}


class TestCsvAndJson:
    def test_header_exact(self):
        table = mse_vs_rounds(make_config(trials=5))
        assert table.to_csv().splitlines()[0] == ",".join(CSV_HEADER)

    def test_single_trial_stderr_empty(self):
        table = mse_vs_rounds(make_config(trials=1))
        line = table.to_csv().splitlines()[1]
        fields = line.split(",")
        assert fields[3] == ""
        assert math.isnan(table.rows[0].stderr)

    def test_csv_round_trips(self):
        table = mse_vs_rounds(make_config(trials=17))
        lines = table.to_csv().splitlines()[1:]
        for line, row in zip(lines, table.rows):
            fields = line.split(",")
            assert float(fields[0]) == row.axis_value
            assert float(fields[2]) == row.mse
            assert int(fields[4]) == row.trials

    def test_json_mirrors_rows(self):
        table = mse_vs_rounds(make_config(trials=9))
        doc = table.to_json_dict()
        assert doc["axis"] == "rounds"
        assert len(doc["rows"]) == len(table.rows)
        assert doc["rows"][0]["estimator"] == table.rows[0].estimator


class TestCompareEstimators:
    def params(self, sigma=0.05, rounds=5):
        return ClockModelParams(2.0, 2.0, sigma, 1.0, 0.2, rounds)

    def test_sigma_zero_all_identical(self):
        rng = np.random.default_rng(1)
        U, V = rng.uniform(0, 2, 5), rng.uniform(0, 2, 5)
        report = compare_estimators(U, V, self.params(sigma=0.0))
        thetas = set(report["theta_hat"].values())
        assert len(thetas) == 1
        assert report["oracle"] is None

    def test_deviations_symmetric_zero_diagonal(self):
        rng = np.random.default_rng(2)
        U, V = rng.uniform(0, 2, 6), rng.uniform(0, 2, 6)
        report = compare_estimators(U, V, self.params(rounds=6))
        dev = report["deviations"]
        for a in dev:
            assert dev[a][a] == 0.0
            for b in dev:
                assert dev[a][b] == dev[b][a]

    def test_recursive_matches_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = int(rng.integers(1, 11))
            U, V = rng.uniform(0, 2, n), rng.uniform(0, 2, n)
            report = compare_estimators(U, V, self.params(rounds=n))
            assert report["xi_hat_N"]["fge-recursive"] == pytest.approx(
                report["oracle"]["xi_hat_N"], abs=1e-8
            )
            assert report["psi_hat_N"]["fge-recursive"] == pytest.approx(
                report["oracle"]["psi_hat_N"], abs=1e-8
            )

    def test_oracle_skipped_for_large_n(self):
        rng = np.random.default_rng(4)
        U, V = rng.uniform(0, 2, 20), rng.uniform(0, 2, 20)
        report = compare_estimators(U, V, self.params(rounds=20))
        assert report["oracle"] is None
