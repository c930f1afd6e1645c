"""Correlation and constant-column pruning followed by cross-station mean imputation."""

from __future__ import annotations

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .table import FeatureTable


def _as_frame(X, columns=None) -> pd.DataFrame:
    if isinstance(X, pd.DataFrame):
        return X
    X = np.asarray(X, dtype=float)
    return pd.DataFrame(X, columns=columns if columns is not None else [f"x{i}" for i in range(X.shape[1])])


class Preprocessor(TransformerMixin, BaseEstimator):
    """Learn which columns to keep and how to fill gaps from training rows only.

    1. Walking columns in order, drop a column whose absolute Pearson
       correlation with an already kept column exceeds ``corr_threshold``
       (pairwise-complete rows).
    2. Drop columns that are constant (or empty) over their observed values.
    3. Fill a missing cell with the column mean over the rows of all *other*
       stations; stations unseen during fit get the overall training mean.

    ``log_`` records every decision with the statistics behind it.
    """

    def __init__(self, corr_threshold: float = 0.99, min_overlap: int = 3):
        self.corr_threshold = corr_threshold
        self.min_overlap = min_overlap

    def fit(self, X, y=None, groups=None):
        df = _as_frame(X)
        cols = list(df.columns)
        values = df.to_numpy(dtype=float)
        corr = df.corr(min_periods=self.min_overlap).to_numpy()
        log = []
        kept = []
        for j, c in enumerate(cols):
            partner = None
            for i in kept:
                r = corr[i, j]
                if np.isfinite(r) and abs(r) > self.corr_threshold:
                    partner = (cols[i], float(r))
                    break
            if partner is None:
                kept.append(j)
            else:
                log.append({"action": "drop_correlated", "column": c, "partner": partner[0], "r": partner[1]})
        survivors = []
        for j in kept:
            col = values[:, j]
            obs = col[~np.isnan(col)]
            if obs.size == 0 or np.all(obs == obs[0]):
                log.append({"action": "drop_constant", "column": cols[j],
                            "value": None if obs.size == 0 else float(obs[0])})
            else:
                survivors.append(j)
        self.feature_names_in_ = np.asarray(cols, dtype=object)
        self.n_features_in_ = len(cols)
        self.columns_ = [cols[j] for j in survivors]
        V = values[:, survivors]
        present = ~np.isnan(V)
        filled = np.where(present, V, 0.0)
        self.total_sum_ = filled.sum(axis=0)
        self.total_count_ = present.sum(axis=0).astype(float)
        self.station_sum_ = {}
        self.station_count_ = {}
        if groups is not None:
            groups = np.asarray(groups, dtype=object)
            for s in sorted(set(groups.tolist()), key=str):
                m = groups == s
                self.station_sum_[s] = filled[m].sum(axis=0)
                self.station_count_[s] = present[m].sum(axis=0).astype(float)
        means = self.total_sum_ / np.maximum(self.total_count_, 1.0)
        for k, c in enumerate(self.columns_):
            missing = int((~present[:, k]).sum())
            if missing:
                log.append({"action": "impute", "column": c, "cells": missing, "mean": float(means[k])})
        self.log_ = log
        return self

    def _fill_values(self, station) -> np.ndarray:
        total_mean = self.total_sum_ / np.maximum(self.total_count_, 1.0)
        if station not in self.station_sum_:
            return total_mean
        cnt = self.total_count_ - self.station_count_[station]
        other = (self.total_sum_ - self.station_sum_[station]) / np.maximum(cnt, 1.0)
        return np.where(cnt > 0, other, total_mean)

    def transform(self, X, groups=None) -> pd.DataFrame:
        check_is_fitted(self, "columns_")
        df = _as_frame(X, list(self.feature_names_in_))
        out = df.loc[:, self.columns_].to_numpy(dtype=float, copy=True)
        holes = np.isnan(out)
        if holes.any():
            if groups is None:
                groups = np.full(len(out), None, dtype=object)
            groups = np.asarray(groups, dtype=object)
            rows = np.flatnonzero(holes.any(axis=1))
            for s in sorted(set(groups[rows].tolist()), key=str):
                sub = rows[groups[rows] == s]
                fill = self._fill_values(s)
                block = out[sub]
                mask = np.isnan(block)
                block[mask] = np.broadcast_to(fill, block.shape)[mask]
                out[sub] = block
        return pd.DataFrame(out, columns=self.columns_, index=df.index)

    def fit_transform(self, X, y=None, groups=None):
        return self.fit(X, y, groups=groups).transform(X, groups=groups)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "columns_")
        return np.asarray(self.columns_, dtype=object)


def preprocess(table: FeatureTable, corr_threshold: float = 0.99) -> tuple[FeatureTable, list]:
    """Fit on the whole table and apply; returns the cleaned table and the decision log."""
    pre = Preprocessor(corr_threshold=corr_threshold)
    X = pre.fit_transform(table.X, groups=table.stations)
    return table.with_features(X, {c: table.groups[c] for c in pre.columns_}), pre.log_
