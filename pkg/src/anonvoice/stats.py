"""PCA and Gaussian mixture models used by the identity generators.

Both are fitted from scratch: PCA through the Jacobi eigensolver in
`kernels`, GMMs through EM with k-means++ initialization. Fitted models
are immutable and safe to share; sampling takes an external stream.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, NumericalError
from .kernels import jacobi_eigh
from .randomness import RandomStream, stream_from_seed

DEFAULT_RIDGE = 1e-6
DEFAULT_MAX_ITERS = 200
DEFAULT_TOL = 1e-6
DEFAULT_RESTARTS = 10

MODEL_FILE_VERSION = 1


@dataclass(frozen=True)
class PcaModel:
    """Principal components of a training sample, rows = directions."""

    mean: np.ndarray                 # (d,)
    components: np.ndarray           # (m, d) orthonormal rows
    explained_variance: np.ndarray   # (m,) descending
    component_mean: np.ndarray       # (m,) statistics of training projections
    component_std: np.ndarray        # (m,)
    retained_fraction: float

    @property
    def dimension(self) -> int:
        return self.mean.shape[0]

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


def pca_fit(data, retain: float = 0.95) -> PcaModel:
    """Fit PCA keeping the smallest component count reaching `retain` variance."""
    if not 0.0 < retain <= 1.0:
        raise ConfigError(f"retain must be in (0, 1], got {retain}")
    matrix = np.asarray(data, dtype=np.float64)
    if matrix.ndim != 2:
        raise DataError("pca_fit expects a 2-d sample matrix")
    n, d = matrix.shape
    if n < 2:
        raise DataError(f"pca_fit needs at least 2 samples, got {n}")
    if not np.all(np.isfinite(matrix)):
        raise DataError("pca_fit input contains non-finite values")
    mean = matrix.mean(axis=0)
    centered = matrix - mean
    cov = centered.T @ centered / (n - 1)
    cov = (cov + cov.T) / 2.0
    eigenvalues, directions = jacobi_eigh(cov)
    eigenvalues = np.maximum(eigenvalues, 0.0)
    total = float(eigenvalues.sum())
    if total == 0.0:
        raise DataError("pca_fit input has zero total variance (all samples identical)")
    cumulative = np.cumsum(eigenvalues) / total
    # tiny slack so retain=1.0 stops at the numerical rank
    m = int(np.searchsorted(cumulative, retain - 1e-12) + 1)
    m = min(m, d)
    components = np.ascontiguousarray(directions[:m])
    projections = centered @ components.T
    return PcaModel(
        mean=mean,
        components=components,
        explained_variance=eigenvalues[:m].copy(),
        component_mean=projections.mean(axis=0),
        component_std=projections.std(axis=0, ddof=1),
        retained_fraction=float(cumulative[m - 1]),
    )


def pca_transform(model: PcaModel, vectors: np.ndarray) -> np.ndarray:
    """Project into PCA space: subtract the mean, then project on the rows."""
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.shape[-1] != model.dimension:
        raise DataError(f"dimension mismatch: {vectors.shape[-1]} != {model.dimension}")
    return (vectors - model.mean) @ model.components.T


def pca_inverse(model: PcaModel, coords: np.ndarray) -> np.ndarray:
    """Reconstruct from PCA space: mean + coords @ components."""
    coords = np.asarray(coords, dtype=np.float64)
    if coords.shape[-1] != model.n_components:
        raise DataError(f"dimension mismatch: {coords.shape[-1]} != {model.n_components}")
    return model.mean + coords @ model.components


@dataclass(frozen=True, eq=False)
class GmmModel:
    """Full-covariance Gaussian mixture (covariances carry a ridge term)."""

    weights: np.ndarray       # (K,)
    means: np.ndarray         # (K, m)
    covariances: np.ndarray   # (K, m, m)
    ridge: float
    loglik_trace: tuple = field(default=(), repr=False)
    n_iterations: int = 0
    converged: bool = True

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def dimension(self) -> int:
        return self.means.shape[1]

    def cholesky_factors(self) -> np.ndarray:
        """(K, m, m) lower Cholesky factors, computed lazily and cached."""
        cached = getattr(self, "_chol", None)
        if cached is None:
            try:
                cached = np.linalg.cholesky(self.covariances)
            except np.linalg.LinAlgError as exc:
                raise NumericalError(
                    "GMM covariance is not positive definite (insufficient regularization)"
                ) from exc
            object.__setattr__(self, "_chol", cached)
        return cached


def _log_gaussians(data: np.ndarray, means: np.ndarray, chols: np.ndarray) -> np.ndarray:
    """(n, K) log densities of each sample under each component."""
    n, m = data.shape
    k = means.shape[0]
    out = np.empty((n, k), dtype=np.float64)
    base = -0.5 * m * np.log(2.0 * np.pi)
    for j in range(k):
        chol = chols[j]
        diff = data - means[j]
        whitened = diff @ np.linalg.inv(chol).T
        maha = np.sum(whitened * whitened, axis=1)
        logdet = 2.0 * np.sum(np.log(np.diagonal(chol)))
        out[:, j] = base - 0.5 * (logdet + maha)
    return out


def _logsumexp(rows: np.ndarray) -> np.ndarray:
    peak = rows.max(axis=1, keepdims=True)
    return (peak + np.log(np.exp(rows - peak).sum(axis=1, keepdims=True))).ravel()


def _kmeanspp_centers(data: np.ndarray, k: int, stream: RandomStream) -> np.ndarray:
    n = data.shape[0]
    chosen = [stream.randbelow(n)]
    sq_norms = np.sum(data * data, axis=1)
    best = np.full(n, np.inf)
    for _ in range(k - 1):
        center = data[chosen[-1]]
        dist = sq_norms - 2.0 * (data @ center) + float(center @ center)
        np.minimum(best, np.maximum(dist, 0.0), out=best)
        total = float(best.sum())
        if total <= 0.0:
            # all remaining mass on duplicates; fall back to uniform choice
            chosen.append(stream.randbelow(n))
            continue
        u = stream.uniforms(1)[0] * total
        chosen.append(int(np.searchsorted(np.cumsum(best), u, side="right")))
    return data[np.asarray(chosen)]


def gmm_fit(data, n_components: int, max_iters: int = DEFAULT_MAX_ITERS,
            tol: float = DEFAULT_TOL, seed: int = 0, ridge: float = DEFAULT_RIDGE,
            restarts: int = DEFAULT_RESTARTS) -> GmmModel:
    """Fit a GMM by EM; deterministic given (data, n_components, seed).

    Initialization draws `restarts` k-means++ seedings from the seed stream
    and keeps the one with the best initial log-likelihood; a single EM run
    follows. Stops when the per-sample log-likelihood improves by less than
    `tol` or after `max_iters` iterations.
    """
    matrix = np.asarray(data, dtype=np.float64)
    if matrix.ndim != 2:
        raise DataError("gmm_fit expects a 2-d sample matrix")
    n, m = matrix.shape
    if not np.all(np.isfinite(matrix)):
        raise DataError("gmm_fit input contains non-finite values")
    if n_components < 1:
        raise ConfigError("n_components must be >= 1")
    if n < n_components:
        raise DataError(f"gmm_fit needs at least {n_components} samples, got {n}")

    stream = stream_from_seed(seed, "altvoice/v1/gmm-fit")
    global_cov = np.cov(matrix, rowvar=False, ddof=1).reshape(m, m)
    global_cov = (global_cov + global_cov.T) / 2.0 + ridge * np.eye(m)
    weights = np.full(n_components, 1.0 / n_components)
    covariances = np.repeat(global_cov[None, :, :], n_components, axis=0)
    try:
        chols = np.linalg.cholesky(covariances)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "data covariance is not positive definite (increase the ridge)") from exc

    best_means = None
    best_ll = -np.inf
    for _ in range(max(1, restarts)):
        means = _kmeanspp_centers(matrix, n_components, stream)
        ll = float(np.mean(_logsumexp(_log_gaussians(matrix, means, chols) + np.log(weights))))
        if ll > best_ll:
            best_ll = ll
            best_means = means
    means = np.array(best_means)

    trace = []
    converged = False
    iterations = 0
    eye = np.eye(m)
    for iteration in range(max_iters + 1):
        with np.errstate(divide="ignore"):  # a dead component has log weight -inf
            log_joint = _log_gaussians(matrix, means, chols) + np.log(weights)
        log_norm = _logsumexp(log_joint)
        trace.append(float(np.mean(log_norm)))
        if iteration > 0 and trace[-1] - trace[-2] < tol:
            converged = True
            break
        if iteration == max_iters:
            break
        resp = np.exp(log_joint - log_norm[:, None])
        mass = resp.sum(axis=0)
        safe_mass = np.maximum(mass, 1e-300)
        weights = mass / n
        weights = weights / weights.sum()
        means = (resp.T @ matrix) / safe_mass[:, None]
        for j in range(n_components):
            diff = matrix - means[j]
            cov = (resp[:, j][:, None] * diff).T @ diff / safe_mass[j]
            covariances[j] = (cov + cov.T) / 2.0 + ridge * eye
        try:
            chols = np.linalg.cholesky(covariances)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("EM covariance update lost positive definiteness") from exc
        iterations = iteration + 1

    return GmmModel(
        weights=weights,
        means=means,
        covariances=covariances,
        ridge=ridge,
        loglik_trace=tuple(trace),
        n_iterations=iterations,
        converged=converged,
    )


def gmm_sample(model: GmmModel, stream: RandomStream) -> np.ndarray:
    """Draw one sample: component by weight, then Gaussian via its Cholesky factor."""
    chols = model.cholesky_factors()
    u = stream.uniforms(1)[0]
    component = int(np.searchsorted(np.cumsum(model.weights), u, side="right"))
    component = min(component, model.n_components - 1)
    z = stream.normals(model.dimension)
    return model.means[component] + chols[component] @ z


def gmm_loglik(model: GmmModel, data) -> float:
    """Average log-likelihood of `data` under the mixture."""
    matrix = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if matrix.shape[1] != model.dimension:
        raise DataError(f"dimension mismatch: {matrix.shape[1]} != {model.dimension}")
    log_joint = _log_gaussians(matrix, model.means, model.cholesky_factors())
    return float(np.mean(_logsumexp(log_joint + np.log(model.weights))))


# -- serialization ------------------------------------------------------------

def _encode_array(arr: np.ndarray) -> dict:
    arr = np.asarray(arr, dtype=np.float64)
    return {
        "shape": list(arr.shape),
        "data": base64.b64encode(arr.astype("<f8").tobytes()).decode("ascii"),
    }


def _decode_array(obj: dict) -> np.ndarray:
    raw = base64.b64decode(obj["data"])
    return np.frombuffer(raw, dtype="<f8").reshape(obj["shape"]).copy()


def pca_to_dict(model: PcaModel) -> dict:
    return {
        "mean": _encode_array(model.mean),
        "components": _encode_array(model.components),
        "explained_variance": _encode_array(model.explained_variance),
        "component_mean": _encode_array(model.component_mean),
        "component_std": _encode_array(model.component_std),
        "retained_fraction": model.retained_fraction,
    }


def pca_from_dict(obj: dict) -> PcaModel:
    return PcaModel(
        mean=_decode_array(obj["mean"]),
        components=_decode_array(obj["components"]),
        explained_variance=_decode_array(obj["explained_variance"]),
        component_mean=_decode_array(obj["component_mean"]),
        component_std=_decode_array(obj["component_std"]),
        retained_fraction=float(obj["retained_fraction"]),
    )


def gmm_to_dict(model: GmmModel) -> dict:
    return {
        "weights": _encode_array(model.weights),
        "means": _encode_array(model.means),
        "covariances": _encode_array(model.covariances),
        "ridge": model.ridge,
    }


def gmm_from_dict(obj: dict) -> GmmModel:
    return GmmModel(
        weights=_decode_array(obj["weights"]),
        means=_decode_array(obj["means"]),
        covariances=_decode_array(obj["covariances"]),
        ridge=float(obj["ridge"]),
    )
