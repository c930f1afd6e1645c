import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bikevolume.analysis import (
    Scenario,
    Strategy,
    full_city_weights,
    grouped_permutation_importance,
    sample_dates,
    simulate_sampling,
    ten_day_headline,
)
from bikevolume.core import derive_seed
from bikevolume.errors import ConfigError, DataError
from bikevolume.eval import logo_evaluate, mae, smape
from bikevolume.model import ModelSpec, VolumeModel
from bikevolume.pipeline import FeatureTable


def station_table(n_stations=4, n_rows=60, seed=0, signal=True, with_copy=False, gap_every=None):
    """Stations with different levels; ``a`` carries the signal, ``b`` and ``c`` are noise."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n_stations):
        level = 200 + 300 * i
        dates = pd.date_range("2019-04-01", periods=n_rows * (2 if gap_every else 1))
        if gap_every:
            dates = dates[np.arange(len(dates)) % gap_every != 0][:n_rows]
        for d in dates:
            a = rng.normal()
            y = level + (80 * a if signal else 0) + rng.normal(0, 5)
            rows.append({"station_id": f"L{i}", "date": d, "kind": "long_term", "target": max(y, 0.0),
                         "a": a + (level / 100 if signal else 0), "b": rng.normal(), "c": rng.normal(),
                         "flat": 1.0, "copy": max(y, 0.0)})
    frame = pd.DataFrame(rows)
    groups = {"a": "Crowdsourced", "b": "Weather", "c": "Weather", "flat": "Holiday"}
    if with_copy:
        groups["copy"] = "BikeSharing"
    else:
        frame = frame.drop(columns="copy")
    return FeatureTable(frame, groups)


# -- grouped permutation importance ------------------------------------------------


class TestImportance:
    def test_baseline_mean_has_zero_gains(self):
        gi = grouped_permutation_importance(station_table(), ModelSpec("baseline_mean"), n_permutations=3,
                                            k=3, n_repeats=1)
        assert all(v == 0.0 for g in gi.gains for v in gi.gains[g])

    def test_dropped_group_has_exactly_zero_gain(self):
        gi = grouped_permutation_importance(station_table(), ModelSpec("linear"), n_permutations=3, k=3,
                                            n_repeats=1)
        # the constant Holiday column is removed by preprocessing before any fit
        assert gi.gains["Holiday"] == [0.0] * gi.n_folds

    def test_signal_group_ranked_and_noise_near_zero(self):
        table = station_table(seed=1)
        spec = ModelSpec("linear")
        gi = grouped_permutation_importance(table, spec, metric="mae", n_permutations=20, k=5, n_repeats=2, seed=4)
        assert gi.ranking()[0] == "Crowdsourced" and gi.mean("Crowdsourced") > 50
        # leave-group-out oracle: refitting without the noise group barely moves the CV error
        from bikevolume.eval import repeated_stratified_kfold
        plans = repeated_stratified_kfold(table.stations, 5, 2, seed=derive_seed(4, "folds"))
        full, without = [], []
        for plan in plans:
            for fold in plan:
                tr, te = table.take(fold.train_idx), table.take(fold.test_idx)
                for cols, sink in ((table.features, full), (["a", "flat"], without)):
                    m = VolumeModel("linear").fit(tr.X[cols], tr.y, groups=tr.stations)
                    sink.append(mae(te.y, m.predict(te.X[cols], groups=te.stations)))
        refit_change = abs(np.mean(without) - np.mean(full))
        assert abs(gi.mean("Weather")) <= gi.half_width("Weather") + refit_change + 0.5
        assert gi.mean("Weather") < 0.05 * gi.mean("Crowdsourced")

    def test_permutation_keeps_group_values(self, monkeypatch):
        table = station_table(n_rows=20)
        seen = []
        original = VolumeModel.predict

        def spy(self, X, groups=None):
            seen.append(X.copy())
            return original(self, X, groups=groups)

        monkeypatch.setattr(VolumeModel, "predict", spy)
        grouped_permutation_importance(table, ModelSpec("linear"), n_permutations=4, k=2, n_repeats=1,
                                       groups=["Weather"])
        base, stacked = seen[0], seen[1]
        n = len(base)
        assert len(stacked) == 4 * n
        for r in range(4):
            block = stacked.iloc[r * n:(r + 1) * n].reset_index(drop=True)
            # one shared row order: (b, c) pairs survive intact, other columns untouched
            assert sorted(zip(block["b"], block["c"])) == sorted(zip(base["b"], base["c"]))
            pd.testing.assert_series_equal(block["a"], base["a"].reset_index(drop=True))

    def test_deterministic_and_schedule_free(self):
        table = station_table(n_rows=25)
        spec = ModelSpec("decision_tree", {"max_depth": 3})
        a = grouped_permutation_importance(table, spec, n_permutations=3, k=3, n_repeats=1, seed=2, workers=1)
        b = grouped_permutation_importance(table, spec, n_permutations=3, k=3, n_repeats=1, seed=2, workers=2)
        assert a.to_dict() == b.to_dict()
        assert a.n_folds == 3 and a.n_permutations == 3

    def test_group_without_columns(self):
        with pytest.raises(ConfigError):
            grouped_permutation_importance(station_table(), ModelSpec("linear"), groups=["Motorized"])

    def test_csv(self, tmp_path):
        gi = grouped_permutation_importance(station_table(n_rows=20), ModelSpec("linear"), n_permutations=2,
                                            k=2, n_repeats=1)
        gi.to_csv(tmp_path / "gpi.csv")
        df = pd.read_csv(tmp_path / "gpi.csv")
        assert list(df.columns) == ["group", "mean", "ci_low", "ci_high", "ci_half_width"]
        assert set(df["group"]) == {"Crowdsourced", "Weather", "Holiday"}


# -- date sampling --------------------------------------------------------------------


DAYS = pd.date_range("2019-01-01", periods=120)


class TestSampleDates:
    def test_one_day_distinct(self):
        out = sample_dates(DAYS, Strategy.ONE_DAY, 28, np.random.default_rng(0))
        assert len(set(out)) == 28 and set(out) <= set(DAYS)

    @pytest.mark.parametrize("strategy,block", [("three_day", 3), ("seven_day", 7)])
    def test_blocks_are_consecutive_and_disjoint(self, strategy, block):
        out = sample_dates(DAYS, strategy, 28, np.random.default_rng(1))
        assert len(out) == 28 and len(set(out)) == 28
        runs = [out[i:i + block] for i in range(0, 28, block)]
        for run in runs:
            assert all((b - a).days == 1 for a, b in zip(run[:-1], run[1:]))
        # 28 days -> ceil(28/3) = 10 runs of three, the last cut to one day
        assert len(runs) == -(-28 // block)

    def test_blocks_skip_gaps(self):
        sparse = DAYS[np.arange(len(DAYS)) % 4 != 3]  # at most three consecutive days anywhere
        assert sample_dates(sparse, "seven_day", 7, np.random.default_rng(0)) is None
        out = sample_dates(sparse, "three_day", 9, np.random.default_rng(0))
        for i in range(0, 9, 3):
            assert (out[i + 2] - out[i]).days == 2

    def test_too_few_dates(self):
        assert sample_dates(DAYS[:5], "one_day", 6, np.random.default_rng(0)) is None
        assert sample_dates(DAYS[:5], "one_day", 0, np.random.default_rng(0)) == []

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000), st.sampled_from(list(Strategy)))
    def test_prefixes_are_nested(self, seed, strategy):
        out = sample_dates(DAYS, strategy, 28, np.random.default_rng(seed))
        for d in range(1, 29):
            assert set(out[:d - 1]) <= set(out[:d]) and len(set(out[:d])) == d


class TestWeights:
    @settings(max_examples=300, deadline=None)
    @given(st.integers(0, 5000), st.integers(1, 40), st.floats(0.01, 0.99))
    def test_mass_share(self, n_other, n_sampled, share):
        w = full_city_weights(n_other, n_sampled, share)
        got = w[n_other:].sum() / w.sum()
        if n_other:
            assert got == pytest.approx(share, rel=1e-12, abs=1e-15)
            assert w.mean() == pytest.approx(1.0, rel=1e-12)
        else:
            assert got == 1.0

    def test_no_samples_means_unweighted(self):
        assert full_city_weights(10, 0, 0.25) is None


# -- sampling simulator ---------------------------------------------------------------


class TestSimulation:
    def test_zero_days_is_logo(self):
        table = station_table(n_rows=50)
        spec = ModelSpec("decision_tree", {"max_depth": 3})
        curve = simulate_sampling(table, spec, days=[0, 2], reps=2, seed=5, min_rows=40)
        logo = logo_evaluate(table, spec, seed=5)
        for i, s in enumerate(curve.stations):
            assert np.all(curve.errors["smape"][:, i, 0] == logo.station(s).smape)
        assert curve.at(0)[0] == pytest.approx(logo.aggregate_smape, rel=1e-12)
        assert curve.at(0)[1] == 0.0

    def test_weight_mass_reported(self):
        curve = simulate_sampling(station_table(n_rows=50), ModelSpec("baseline_mean"), days=[1, 5], reps=2,
                                  min_rows=40, weight_share=0.25)
        assert len(curve.weight_mass) == 2 * 4 * 2
        assert np.allclose(curve.weight_mass, 0.25, rtol=1e-12, atol=0)

    def test_location_specific_single_day(self):
        table = station_table(n_rows=40)
        curve = simulate_sampling(table, ModelSpec("baseline_mean"), scenario="location_specific", days=[0, 1],
                                  reps=1, seed=9, min_rows=30)
        assert np.isnan(curve.errors["smape"][0, :, 0]).all()
        for i, s in enumerate(curve.stations):
            own = np.flatnonzero(table.stations == s)
            rng = np.random.default_rng(derive_seed(9, "sampling", "one_day", s, 0))
            first = sample_dates(table.dates.iloc[own], "one_day", 1, rng)[0]
            day_row = own[np.flatnonzero(table.dates.iloc[own].to_numpy() == first.to_datetime64())[0]]
            test = np.setdiff1d(own, [day_row])
            expect = smape(table.y[test], np.full(len(test), table.y[day_row]))
            assert curve.errors["smape"][0, i, 1] == pytest.approx(expect, rel=1e-12)

    def test_sample_mean_closed_form(self):
        table = station_table(n_rows=40, seed=3)
        d = 35
        curve = simulate_sampling(table, ModelSpec("linear"), scenario="sample_mean", days=[d], reps=2, seed=1,
                                  min_rows=40)
        for r in range(2):
            for i, s in enumerate(curve.stations):
                own = np.flatnonzero(table.stations == s)
                dates = table.dates.iloc[own].to_numpy()
                rng = np.random.default_rng(derive_seed(1, "sampling", "one_day", s, r))
                picked = {t.to_datetime64() for t in sample_dates(dates, "one_day", d, rng)}
                sampled = np.array([x in picked for x in dates])
                expect = mae(table.y[own][~sampled], np.full((~sampled).sum(), table.y[own][sampled].mean()))
                assert curve.errors["mae"][r, i, 0] == pytest.approx(expect, rel=1e-12)

    def test_confidence_from_repetition_means(self):
        curve = simulate_sampling(station_table(n_rows=45), ModelSpec("baseline_mean"), days=[3], reps=5,
                                  min_rows=40)
        m = curve.rep_means()[:, 0]
        assert m.shape == (5,)
        assert curve.at(3)[1] == pytest.approx(1.96 * m.std(ddof=1) / np.sqrt(5))

    def test_samples_help_a_mean_model(self):
        table = station_table(n_rows=50)
        curve = simulate_sampling(table, ModelSpec("baseline_mean"), days=[0, 10], reps=3, min_rows=40)
        assert curve.at(10)[0] < curve.at(0)[0]

    def test_default_row_minimum(self):
        # 50 rows cover 3 sample days plus 30 test rows but not 25 plus 30
        curve = simulate_sampling(station_table(n_rows=50), ModelSpec("baseline_mean"), days=[0, 3], reps=1)
        assert len(curve.stations) == 4
        with pytest.raises(DataError):
            simulate_sampling(station_table(n_rows=50), ModelSpec("baseline_mean"), days=[0, 25], reps=1)

    def test_block_strategy_skips_station_without_runs(self):
        table = station_table(n_rows=60, gap_every=3)  # never three consecutive days
        curve = simulate_sampling(table, ModelSpec("baseline_mean"), strategy="seven_day", days=[0, 7], reps=1,
                                  min_rows=40)
        assert curve.stations == []
        assert {e["station_id"] for e in curve.skipped} == {"L0", "L1", "L2", "L3"}

    @pytest.mark.parametrize("bad", [{"weight_share": 1.0}, {"reps": 0}, {"days": [-1, 2]}])
    def test_invalid_settings(self, bad):
        with pytest.raises(ConfigError):
            simulate_sampling(station_table(), ModelSpec("baseline_mean"), **{"min_rows": 40, **bad})

    def test_reproducible(self, tmp_path):
        table = station_table(n_rows=45)
        spec = ModelSpec("regularized_boosting", {"n_estimators": 5})
        a = simulate_sampling(table, spec, days=[0, 2, 4], reps=2, seed=3, min_rows=40)
        b = simulate_sampling(table, spec, days=[0, 2, 4], reps=2, seed=3, min_rows=40, workers=2)
        assert a.to_dict() == b.to_dict()
        a.to_csv(tmp_path / "curve.csv")
        df = pd.read_csv(tmp_path / "curve.csv")
        assert df["days"].tolist() == [0, 2, 4]
        assert {"smape_mean", "smape_ci_low", "smape_ci_high", "mae_mean"} <= set(df.columns)

    def test_strategy_and_scenario_names(self):
        assert {s.value for s in Strategy} == {"one_day", "three_day", "seven_day"}
        assert {s.value for s in Scenario} == {"full_city", "location_specific", "sample_mean"}


class TestHeadline:
    def test_oracle_zero(self):
        table = station_table(n_rows=50, signal=False, with_copy=True)
        daily, aadb = ten_day_headline(table, ModelSpec("linear"), reps=1, min_aadb_rows=20)
        assert daily.aggregate_mae == pytest.approx(0, abs=1e-7)
        assert aadb.aggregate_mae == pytest.approx(0, abs=1e-7)

    def test_reproducible_and_better_than_no_samples(self):
        table = station_table(n_rows=50)
        spec = ModelSpec("baseline_mean")
        a = ten_day_headline(table, spec, seed=2, reps=1)
        b = ten_day_headline(table, spec, seed=2, reps=1)
        assert a[0].to_dict() == b[0].to_dict() and a[1].to_dict() == b[1].to_dict()
        logo = logo_evaluate(table, spec, seed=2)
        assert a[0].aggregate_smape < logo.aggregate_smape
        assert a[0].scale == "daily" and a[1].scale == "aadb"
