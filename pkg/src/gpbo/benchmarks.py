"""Black-box benchmark functions with noise wrapping and range estimation.

Fifteen classical minimisation problems (2 to 10 input dimensions), each
registered with its native domain, global minimum value and a minimiser
refined to full float precision. Observation noise is simulated by adding
Gaussian noise whose standard deviation is a fraction of the estimated
function range |f| = f_max - f_min, with f_max taken over a large Latin
hypercube probe of the domain.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .design import latin_hypercube

# Seed of the dedicated stream used for range estimation probes.
RANGE_SEED = 170
RANGE_SAMPLES = 10**6


# -- function definitions (vectorised over leading axes) -------------------


def _branin(x: np.ndarray) -> np.ndarray:
    x1, x2 = x[..., 0], x[..., 1]
    b = 5.1 / (4.0 * math.pi**2)
    c = 5.0 / math.pi
    t = 1.0 / (8.0 * math.pi)
    return (x2 - b * x1**2 + c * x1 - 6.0) ** 2 + 10.0 * (1.0 - t) * np.cos(x1) + 10.0


def _eggholder(x: np.ndarray) -> np.ndarray:
    x1, x2 = x[..., 0], x[..., 1]
    a = x2 + x1 / 2.0 + 47.0
    b = x1 - (x2 + 47.0)
    return -(x2 + 47.0) * np.sin(np.sqrt(np.abs(a))) - x1 * np.sin(np.sqrt(np.abs(b)))


def _goldstein_price(x: np.ndarray) -> np.ndarray:
    x1, x2 = x[..., 0], x[..., 1]
    t1 = 1.0 + (x1 + x2 + 1.0) ** 2 * (
        19.0 - 14.0 * x1 + 3.0 * x1**2 - 14.0 * x2 + 6.0 * x1 * x2 + 3.0 * x2**2
    )
    t2 = 30.0 + (2.0 * x1 - 3.0 * x2) ** 2 * (
        18.0 - 32.0 * x1 + 12.0 * x1**2 + 48.0 * x2 - 36.0 * x1 * x2 + 27.0 * x2**2
    )
    return t1 * t2


def _six_hump_camel(x: np.ndarray) -> np.ndarray:
    x1, x2 = x[..., 0], x[..., 1]
    return (
        (4.0 - 2.1 * x1**2 + x1**4 / 3.0) * x1**2
        + x1 * x2
        + (-4.0 + 4.0 * x2**2) * x2**2
    )


_HARTMANN_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
_HARTMANN3_A = np.array(
    [[3.0, 10.0, 30.0], [0.1, 10.0, 35.0], [3.0, 10.0, 30.0], [0.1, 10.0, 35.0]]
)
_HARTMANN3_P = 1e-4 * np.array(
    [[3689, 1170, 2673], [4699, 4387, 7470], [1091, 8732, 5547], [381, 5743, 8828]]
)
_HARTMANN6_A = np.array(
    [
        [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
        [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
        [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
        [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
    ]
)
_HARTMANN6_P = 1e-4 * np.array(
    [
        [1312, 1696, 5569, 124, 8283, 5886],
        [2329, 4135, 8307, 3736, 1004, 9991],
        [2348, 1451, 3522, 2883, 3047, 6650],
        [4047, 8828, 8732, 5743, 1091, 381],
    ]
)


def _hartmann(A: np.ndarray, P: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    def fn(x: np.ndarray) -> np.ndarray:
        diff = x[..., None, :] - P
        inner = np.sum(A * diff**2, axis=-1)
        return -np.sum(_HARTMANN_ALPHA * np.exp(-inner), axis=-1)

    return fn


def _ackley(x: np.ndarray) -> np.ndarray:
    d = x.shape[-1]
    s1 = np.sqrt(np.sum(x**2, axis=-1) / d)
    s2 = np.sum(np.cos(2.0 * math.pi * x), axis=-1) / d
    return -20.0 * np.exp(-0.2 * s1) - np.exp(s2) + 20.0 + math.e


def _michalewicz(x: np.ndarray) -> np.ndarray:
    d = x.shape[-1]
    i = np.arange(1, d + 1)
    return -np.sum(np.sin(x) * np.sin(i * x**2 / math.pi) ** 20, axis=-1)


def _styblinski_tang(x: np.ndarray) -> np.ndarray:
    return 0.5 * np.sum(x**4 - 16.0 * x**2 + 5.0 * x, axis=-1)


def _rosenbrock(x: np.ndarray) -> np.ndarray:
    a = x[..., 1:] - x[..., :-1] ** 2
    return np.sum(100.0 * a**2 + (x[..., :-1] - 1.0) ** 2, axis=-1)


# -- registry ---------------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkFunction:
    """A benchmark problem: evaluator, native domain and global minimum."""

    name: str
    d: int
    lower: np.ndarray
    upper: np.ndarray
    fn: Callable[[np.ndarray], np.ndarray]
    f_min: float
    x_min: np.ndarray

    def __post_init__(self) -> None:
        self.lower.setflags(write=False)
        self.upper.setflags(write=False)
        self.x_min.setflags(write=False)

    def evaluate(self, x: np.ndarray) -> np.ndarray | float:
        """Noise-free value at native-domain location(s)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x.reshape(1, -1) if single else x
        if pts.shape[-1] != self.d:
            raise ValueError(f"{self.name} expects {self.d}-dim inputs, got {pts.shape}")
        tol = 1e-9 * np.maximum(np.abs(self.lower), np.abs(self.upper))
        if np.any(pts < self.lower - tol) or np.any(pts > self.upper + tol):
            raise ValueError(f"location outside the domain of {self.name}")
        vals = self.fn(pts)
        return float(vals[0]) if single else vals


def _entry(name, lower, upper, fn, f_min, x_min) -> BenchmarkFunction:
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    x_min = np.asarray(x_min, dtype=float)
    return BenchmarkFunction(name, len(lower), lower, upper, fn, float(f_min), x_min)


_STYB_X = -2.9035340286202334
_STYB_F = -39.16616570377141
_MICHALEWICZ_X = [
    2.202905506915179, 1.5707963325679184, 1.2849915672922219,
    1.923058482907826, 1.7204697795128345, 1.5707963323727356,
    1.4544139728514822, 1.756086530940644, 1.6557174237957135,
    1.570796332355769,
]


def _build_registry() -> dict[str, BenchmarkFunction]:
    entries = [
        _entry(
            "branin", [-5.0, 0.0], [10.0, 15.0], _branin,
            0.39788735772973816, [math.pi, 2.275],
        ),
        _entry(
            "eggholder", [-512.0, -512.0], [512.0, 512.0], _eggholder,
            -959.6406627208507, [512.0, 404.2318049938646],
        ),
        _entry(
            "goldstein_price", [-2.0, -2.0], [2.0, 2.0], _goldstein_price,
            3.0, [0.0, -1.0],
        ),
        _entry(
            "six_hump_camel", [-3.0, -2.0], [3.0, 2.0], _six_hump_camel,
            -1.0316284534898774, [0.08984200893527233, -0.712656403019058],
        ),
        _entry(
            "hartmann3", [0.0] * 3, [1.0] * 3, _hartmann(_HARTMANN3_A, _HARTMANN3_P),
            -3.862779787332663,
            [0.11458888122541287, 0.5556488954739371, 0.8525469842172746],
        ),
        _entry(
            "hartmann6", [0.0] * 6, [1.0] * 6, _hartmann(_HARTMANN6_A, _HARTMANN6_P),
            -3.3223680114155147,
            [0.20168950909365746, 0.15001069354111374, 0.4768739729250998,
             0.2753324275220782, 0.3116516172395686, 0.6573005345536702],
        ),
    ]
    for d in (5, 10):
        entries.append(
            _entry(f"ackley{d}", [-32.768] * d, [32.768] * d, _ackley, 0.0, [0.0] * d)
        )
    for d in (5, 10):
        xm = _MICHALEWICZ_X[:d]
        f_min = -4.6876581790880865 if d == 5 else -9.660151715641117
        entries.append(
            _entry(f"michalewicz{d}", [0.0] * d, [math.pi] * d, _michalewicz, f_min, xm)
        )
    for d in (5, 7, 10):
        entries.append(
            _entry(
                f"styblinski_tang{d}", [-5.0] * d, [5.0] * d, _styblinski_tang,
                d * _STYB_F, [_STYB_X] * d,
            )
        )
    for d in (7, 10):
        entries.append(
            _entry(f"rosenbrock{d}", [-5.0] * d, [10.0] * d, _rosenbrock, 0.0, [1.0] * d)
        )
    return {e.name: e for e in entries}


_REGISTRY = _build_registry()


def registry() -> dict[str, BenchmarkFunction]:
    """All registered benchmark functions, keyed by name."""
    return dict(_REGISTRY)


def get(name: str) -> BenchmarkFunction:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(
            f"unknown benchmark {name!r}; available: {sorted(_REGISTRY)}"
        ) from None


# -- domain scaling ---------------------------------------------------------


def from_unit_cube(fn: BenchmarkFunction, x_unit: np.ndarray) -> np.ndarray:
    """Affine map from [0, 1]^d onto the native domain."""
    x_unit = np.asarray(x_unit, dtype=float)
    if np.any(x_unit < 0.0) or np.any(x_unit > 1.0):
        raise ValueError("unit-cube coordinates must lie in [0, 1]")
    return fn.lower + x_unit * (fn.upper - fn.lower)


def to_unit_cube(fn: BenchmarkFunction, x_native: np.ndarray) -> np.ndarray:
    """Inverse of :func:`from_unit_cube`."""
    x_native = np.asarray(x_native, dtype=float)
    return (x_native - fn.lower) / (fn.upper - fn.lower)


# -- range estimation -------------------------------------------------------


class RangeCache:
    """File-backed cache of estimated function ranges.

    Keys are ``name:seed:samples``; the file is a small JSON object so the
    expensive million-point probes run once per campaign directory.
    """

    def __init__(self, path: str | os.PathLike | None = None):
        self.path = os.fspath(path) if path is not None else None
        self._values: dict[str, float] = {}
        if self.path is not None and os.path.exists(self.path):
            with open(self.path) as fh:
                self._values = json.load(fh)

    @staticmethod
    def key(name: str, seed: int, samples: int) -> str:
        return f"{name}:{seed}:{samples}"

    def get(self, name: str, seed: int, samples: int) -> float | None:
        return self._values.get(self.key(name, seed, samples))

    def put(self, name: str, seed: int, samples: int, value: float) -> None:
        self._values[self.key(name, seed, samples)] = value
        if self.path is not None:
            with open(self.path, "w") as fh:
                json.dump(self._values, fh, indent=0, sort_keys=True)


def estimate_range(
    fn: BenchmarkFunction,
    samples: int = RANGE_SAMPLES,
    seed: int = RANGE_SEED,
    cache: RangeCache | None = None,
) -> float:
    """Estimated range |f| = max(LHS probe values) - f_min."""
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    if cache is not None:
        hit = cache.get(fn.name, seed, samples)
        if hit is not None:
            return hit
    rng = np.random.default_rng(seed)
    unit = latin_hypercube(samples, fn.d, rng).points
    vals = fn.evaluate(fn.lower + unit * (fn.upper - fn.lower))
    result = float(np.max(vals) - fn.f_min)
    if cache is not None:
        cache.put(fn.name, seed, samples, result)
    return result


# -- noise wrapping ----------------------------------------------------------


@dataclass
class NoisyObjective:
    """Objective with proportional Gaussian observation noise.

    Each evaluation draws ``y ~ N(f(x), (noise_fraction * f_range)^2)``,
    returning the noise-free value alongside for regret bookkeeping. With
    a zero noise fraction, evaluations are deterministic and the random
    stream is left untouched.
    """

    base: BenchmarkFunction
    noise_fraction: float
    f_range: float
    rng: np.random.Generator = field(default_factory=np.random.default_rng)

    def __post_init__(self) -> None:
        if self.noise_fraction < 0.0:
            raise ValueError("noise fraction must be non-negative")
        if self.f_range < 0.0:
            raise ValueError("function range must be non-negative")

    def noisy_evaluate(self, x: np.ndarray) -> tuple[float, float]:
        f_true = float(self.base.evaluate(x))
        if self.noise_fraction == 0.0:
            return f_true, f_true
        sigma = self.noise_fraction * self.f_range
        return f_true + sigma * float(self.rng.standard_normal()), f_true
