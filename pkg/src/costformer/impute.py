"""Missing-value handling: high-missingness feature elimination followed by
iterative Bayesian-ridge imputation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataio import DatasetTable


class ImputeError(ValueError):
    pass


@dataclass
class MissingnessProfile:
    fractions: np.ndarray
    dropped: list[int]
    threshold: float
    names: list[str] = field(default_factory=list)

    @property
    def kept(self) -> list[int]:
        drop = set(self.dropped)
        return [j for j in range(len(self.fractions)) if j not in drop]

    def apply(self, table: DatasetTable) -> DatasetTable:
        if table.n_features != len(self.fractions):
            raise ImputeError(
                f"table has {table.n_features} features, profile was fitted on {len(self.fractions)}")
        keep = self.kept
        return table.with_features(table.features[:, keep], [table.feature_names[j] for j in keep])


def missingness_profile(table: DatasetTable, threshold: float) -> MissingnessProfile:
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    n = max(table.n_rows, 1)
    frac = table.missing.sum(axis=0) / n
    dropped = [int(j) for j in np.flatnonzero(frac > threshold)]
    return MissingnessProfile(frac, dropped, threshold, list(table.feature_names))


def eliminate_features(table: DatasetTable, threshold: float = 0.10,
                       profile_from: DatasetTable | None = None) -> tuple[DatasetTable, MissingnessProfile]:
    """Drop features whose missing fraction (on ``profile_from``, default
    ``table``) exceeds ``threshold``."""
    profile = missingness_profile(profile_from if profile_from is not None else table, threshold)
    if len(profile.dropped) == len(profile.fractions):
        raise ImputeError(f"every feature exceeds the missingness threshold {threshold}")
    return profile.apply(table), profile


# -- Bayesian ridge ----------------------------------------------------------------

@dataclass
class BayesRidgeModel:
    mean: np.ndarray
    cov: np.ndarray
    alpha: float
    lam: float
    x_offset: np.ndarray
    y_offset: float
    n_iter: int = 0

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(X) - self.x_offset) @ self.mean + self.y_offset


def fit_bayes_ridge(X: np.ndarray, y: np.ndarray, *, alpha: float | None = None, lam: float | None = None,
                    max_iter: int = 300, tol: float = 1e-3) -> BayesRidgeModel:
    """Posterior over linear weights with prior precision ``alpha`` and noise
    precision ``lam``, tuned by evidence maximisation unless both are given.

    Works on centred data; S = (alpha I + lam X'X)^-1, m = lam S X'y.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 1:
        raise ImputeError(f"need n >= 2 and d >= 1, got X shape {X.shape}")
    n, d = X.shape
    x_off = X.mean(axis=0)
    y_off = float(y.mean())
    Xc = X - x_off
    yc = y - y_off

    gram = Xc.T @ Xc
    jitter = 1e-10 * np.trace(gram) / d
    gram[np.diag_indices(d)] += jitter
    xty = Xc.T @ yc
    evals, evecs = np.linalg.eigh(gram)
    evals = np.clip(evals, 0.0, None)
    proj = evecs.T @ xty

    fixed = alpha is not None and lam is not None
    if alpha is None:
        alpha = 1.0
    if lam is None:
        var = float(yc.var())
        lam = 1.0 / var if var > 0 else 1.0

    def posterior_mean(a, l):
        return evecs @ (l * proj / (a + l * evals))

    it = 0
    if not fixed:
        for it in range(1, max_iter + 1):
            m = posterior_mean(alpha, lam)
            gamma = float(np.sum(lam * evals / (alpha + lam * evals)))
            resid = yc - Xc @ m
            new_alpha = gamma / (float(m @ m) + 1e-12)
            new_lam = (n - gamma) / (float(resid @ resid) + 1e-12)
            done = (abs(new_alpha - alpha) <= tol * abs(alpha)
                    and abs(new_lam - lam) <= tol * abs(lam))
            alpha, lam = new_alpha, new_lam
            if done:
                break
    denom = alpha + lam * evals
    if np.any(denom <= 0) or not np.all(np.isfinite(denom)):
        cond = float(denom.max() / max(denom.min(), 1e-300))
        raise ImputeError(f"singular posterior system (condition estimate {cond:.3g})")
    m = posterior_mean(alpha, lam)
    S = (evecs / denom) @ evecs.T
    S = 0.5 * (S + S.T)
    return BayesRidgeModel(m, S, float(alpha), float(lam), x_off, y_off, it)


def bayes_ridge_predict(model: BayesRidgeModel, x: np.ndarray) -> tuple[float, float]:
    """Posterior-predictive mean and variance at a single point."""
    xc = np.asarray(x, dtype=np.float64) - model.x_offset
    mean = float(xc @ model.mean + model.y_offset)
    var = 1.0 / model.lam + float(xc @ model.cov @ xc)
    return mean, var


# -- iterative imputer ---------------------------------------------------------------

@dataclass
class ImputeModel:
    fill_means: np.ndarray
    order: list[int]
    models: dict[int, BayesRidgeModel]
    rounds: int
    feature_names: list[str] = field(default_factory=list)
    # one dict per round: the fitted regressor for each imputed feature
    history: list[dict[int, BayesRidgeModel]] = field(default_factory=list)

    def transform(self, table: DatasetTable) -> DatasetTable:
        """Replay the fitted rounds on a new table; its rows never refit anything."""
        X = np.array(table.features, dtype=np.float64)
        if X.shape[1] != self.fill_means.size:
            raise ImputeError(f"table has {X.shape[1]} features, imputer fitted on {self.fill_means.size}")
        miss = np.isnan(X)
        X[miss] = np.broadcast_to(self.fill_means, X.shape)[miss]
        for round_models in self.history:
            snap = X.copy()
            for j, mdl in round_models.items():
                rows = miss[:, j]
                if rows.any():
                    others = np.delete(snap[rows], j, axis=1)
                    X[rows, j] = mdl.predict(others)
        return table.with_features(X)

    def provenance(self) -> dict:
        return {
            "rounds": self.rounds,
            "order": [int(j) for j in self.order],
            "features": {
                (self.feature_names[j] if self.feature_names else str(j)): {"alpha": m.alpha, "lambda": m.lam}
                for j, m in self.models.items()
            },
        }


def iterative_impute(table: DatasetTable, rounds: int = 5,
                     order: str = "ascending_missingness") -> tuple[DatasetTable, ImputeModel]:
    """Mean fill, then ``rounds`` passes of per-feature Bayesian-ridge refits.

    Every round regresses each incomplete feature on a snapshot of all other
    columns taken at the start of the round, using rows where the feature was
    observed, and overwrites only its originally-missing cells.
    """
    if order != "ascending_missingness":
        raise ValueError(f"unsupported visit order {order!r}")
    X = np.array(table.features, dtype=np.float64)
    miss = np.isnan(X)
    n, d = X.shape
    observed = (~miss).sum(axis=0)
    if np.any(observed == 0):
        bad = [table.feature_names[j] for j in np.flatnonzero(observed == 0)]
        raise ImputeError(f"features with no observed values: {bad[:5]}")
    means = np.nanmean(X, axis=0) if miss.any() else X.mean(axis=0)
    incomplete = [int(j) for j in np.flatnonzero(miss.any(axis=0))]
    frac = miss.sum(axis=0) / n
    visit = sorted(incomplete, key=lambda j: (frac[j], j))
    if not incomplete:
        return table.with_features(X), ImputeModel(means, [], {}, 0, list(table.feature_names))
    if d < 2:
        raise ImputeError("iterative imputation needs at least 2 features")

    X[miss] = np.broadcast_to(means, X.shape)[miss]
    history: list[dict[int, BayesRidgeModel]] = []
    for _ in range(rounds):
        snap = X.copy()
        fitted: dict[int, BayesRidgeModel] = {}
        for j in visit:
            obs = ~miss[:, j]
            others = np.delete(snap, j, axis=1)
            mdl = fit_bayes_ridge(others[obs], snap[obs, j])
            fitted[j] = mdl
            X[miss[:, j], j] = mdl.predict(others[miss[:, j]])
        history.append(fitted)
    last = history[-1] if history else {}
    model = ImputeModel(means, visit, last, rounds, list(table.feature_names), history)
    return table.with_features(X), model
