"""Uncertain model inputs and reproducible sampling.

Every scalar input that the carbon model treats as uncertain is a
:class:`ParamDistribution`.  Draws are addressed by ``(master_seed,
sample_index, draw_counter)`` and never depend on evaluation order, so a
Monte Carlo run gives the same numbers whether it is evaluated one sample at
a time, in vectorized blocks, or across threads.

Random bits come from numpy's counter-based Philox generator.  The key is a
hash of ``(master_seed, draw_counter, lane)`` and the sample index is the
position in that keyed stream, which makes any sample directly addressable.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from scipy.special import ndtr, ndtri

_MASK64 = (1 << 64) - 1
_INV_2_53 = 2.0**-53
# lanes reserved for the "resample once" pass of non-negative parameters
_RESAMPLE_LANE_OFFSET = 64
_MAX_REJECTION_ROUNDS = 32

KDE_BANDWIDTH_FLOOR = 1e-12


class DistributionError(ValueError):
    """Invalid distribution parameters (raised at construction time)."""


# --------------------------------------------------------------------------
# sampling contexts


@dataclass(frozen=True)
class SampleContext:
    """One Monte Carlo sample: the stream is a pure function of both fields."""

    master_seed: int
    sample_index: int

    def __post_init__(self):
        if self.sample_index < 0:
            raise ValueError("sample_index must be non-negative")


@dataclass(frozen=True)
class SampleBlock:
    """A contiguous range ``[start, stop)`` of sample indices, evaluated as arrays."""

    master_seed: int
    start: int
    stop: int
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.start < self.stop:
            raise ValueError(f"invalid sample block [{self.start}, {self.stop})")

    def __len__(self) -> int:
        return self.stop - self.start


class ExpectedContext:
    """Evaluate every distribution at its expected value."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "EXPECTED"


EXPECTED = ExpectedContext()

Context = Union[SampleContext, SampleBlock, ExpectedContext]


def _uniforms(master_seed: int, counter: int, lane: int, start: int, stop: int) -> np.ndarray:
    """Uniform variates on the open interval (0, 1) for sample indices [start, stop)."""
    key = np.random.SeedSequence(
        [master_seed & _MASK64, counter & _MASK64, lane]
    ).generate_state(2, np.uint64)
    bitgen = np.random.Philox(key=key)
    first_block = start // 4
    if first_block:
        bitgen.advance(first_block)
    raw = bitgen.random_raw(stop - 4 * first_block)[start - 4 * first_block:]
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53


# --------------------------------------------------------------------------
# distributions


@dataclass(frozen=True)
class ParamDistribution:
    """Base class.  ``stream`` names the random stream; equal names draw equal values."""

    stream: str = field(default="", kw_only=True)
    nonnegative: bool = field(default=False, kw_only=True)

    def expected_value(self) -> float:
        raise NotImplementedError

    def _draw(self, seed: int, counter: int, lane0: int, start: int, stop: int) -> np.ndarray:
        raise NotImplementedError

    @property
    def draw_counter(self) -> int:
        label = self.stream or repr(self.with_stream(""))
        digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")

    def with_stream(self, stream: str) -> "ParamDistribution":
        kwargs = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kwargs["stream"] = stream
        return type(self)(**kwargs)

    def with_nonnegative(self, flag: bool = True) -> "ParamDistribution":
        kwargs = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kwargs["nonnegative"] = flag
        return type(self)(**kwargs)


@dataclass(frozen=True)
class PointMass(ParamDistribution):
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise DistributionError(f"point mass value must be finite, got {self.value}")

    def expected_value(self) -> float:
        return float(self.value)

    def _draw(self, seed, counter, lane0, start, stop):
        return np.full(stop - start, float(self.value))


@dataclass(frozen=True)
class Uniform(ParamDistribution):
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo > self.hi:
            raise DistributionError(f"uniform needs finite lo <= hi, got [{self.lo}, {self.hi}]")

    def expected_value(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def _draw(self, seed, counter, lane0, start, stop):
        u = _uniforms(seed, counter, lane0, start, stop)
        return self.lo + (self.hi - self.lo) * u


@dataclass(frozen=True)
class Gaussian(ParamDistribution):
    mean: float
    stddev: float
    truncate_lo: float | None = None
    truncate_hi: float | None = None

    def __post_init__(self):
        if not (self.stddev > 0 and math.isfinite(self.stddev)):
            raise DistributionError(f"gaussian stddev must be > 0, got {self.stddev}")
        if not math.isfinite(self.mean):
            raise DistributionError("gaussian mean must be finite")
        lo, hi = self.truncate_lo, self.truncate_hi
        if lo is not None and hi is not None and not lo < hi:
            raise DistributionError(f"truncation needs lo < hi, got [{lo}, {hi}]")

    @property
    def truncated(self) -> bool:
        return self.truncate_lo is not None or self.truncate_hi is not None

    def _std_bounds(self) -> tuple[float, float]:
        a = -math.inf if self.truncate_lo is None else (self.truncate_lo - self.mean) / self.stddev
        b = math.inf if self.truncate_hi is None else (self.truncate_hi - self.mean) / self.stddev
        return a, b

    def expected_value(self) -> float:
        if not self.truncated:
            return float(self.mean)
        a, b = self._std_bounds()
        phi = lambda z: 0.0 if math.isinf(z) else math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
        mass = float(ndtr(b) - ndtr(a))
        return self.mean + self.stddev * (phi(a) - phi(b)) / mass

    def _inside(self, x: np.ndarray) -> np.ndarray:
        ok = np.ones(x.shape, dtype=bool)
        if self.truncate_lo is not None:
            ok &= x >= self.truncate_lo
        if self.truncate_hi is not None:
            ok &= x <= self.truncate_hi
        return ok

    def _draw(self, seed, counter, lane0, start, stop):
        out = self.mean + self.stddev * ndtri(_uniforms(seed, counter, lane0, start, stop))
        if not self.truncated:
            return out
        pending = ~self._inside(out)
        for k in range(1, _MAX_REJECTION_ROUNDS):
            if not pending.any():
                return out
            retry = self.mean + self.stddev * ndtri(_uniforms(seed, counter, lane0 + k, start, stop))
            take = pending & self._inside(retry)
            out[take] = retry[take]
            pending &= ~take
        if pending.any():
            # rejection budget exhausted (tiny acceptance region): exact inverse-CDF draw
            a, b = self._std_bounds()
            u = _uniforms(seed, counter, lane0 + _MAX_REJECTION_ROUNDS, start, stop)
            lo_p, hi_p = ndtr(a), ndtr(b)
            z = ndtri(lo_p + u * (hi_p - lo_p))
            fallback = np.clip(self.mean + self.stddev * z,
                               -np.inf if self.truncate_lo is None else self.truncate_lo,
                               np.inf if self.truncate_hi is None else self.truncate_hi)
            out[pending] = fallback[pending]
        return out


@dataclass(frozen=True)
class EmpiricalKDE(ParamDistribution):
    """Gaussian-kernel density estimate over ``samples``."""

    samples: tuple[float, ...]
    bandwidth: float

    def __post_init__(self):
        if not isinstance(self.samples, tuple):
            object.__setattr__(self, "samples", tuple(float(s) for s in self.samples))
        if len(self.samples) == 0:
            raise DistributionError("KDE needs at least one sample")
        if not all(math.isfinite(s) for s in self.samples):
            raise DistributionError("KDE samples must be finite")
        if not (self.bandwidth > 0 and math.isfinite(self.bandwidth)):
            raise DistributionError(f"KDE bandwidth must be > 0, got {self.bandwidth}")

    def expected_value(self) -> float:
        return math.fsum(self.samples) / len(self.samples)

    def _draw(self, seed, counter, lane0, start, stop):
        base = np.asarray(self.samples)
        pick = _uniforms(seed, counter, lane0, start, stop)
        idx = np.minimum((pick * len(base)).astype(np.int64), len(base) - 1)
        noise = ndtri(_uniforms(seed, counter, lane0 + 1, start, stop))
        return base[idx] + self.bandwidth * noise


# --------------------------------------------------------------------------
# public operations


def sample_block(dist: ParamDistribution, master_seed: int, start: int, stop: int,
                 draw_counter: int) -> np.ndarray:
    """Draws for sample indices ``start .. stop-1``; element j equals the scalar draw at ``start + j``."""
    out = dist._draw(master_seed, draw_counter, 0, start, stop)
    if dist.nonnegative and (out < 0).any():
        neg = out < 0
        again = dist._draw(master_seed, draw_counter, _RESAMPLE_LANE_OFFSET, start, stop)
        out[neg] = np.maximum(again[neg], 0.0)
    return out


def sample(dist: ParamDistribution, ctx: SampleContext, draw_counter: int) -> float:
    """One draw of ``dist`` for sample ``ctx.sample_index``."""
    i = ctx.sample_index
    return float(sample_block(dist, ctx.master_seed, i, i + 1, draw_counter)[0])


def expected_value(dist: ParamDistribution) -> float:
    return dist.expected_value()


def draw(dist: ParamDistribution, ctx: Context):
    """Resolve ``dist`` under ``ctx``: a float for scalar contexts, an array for blocks."""
    if ctx is EXPECTED or isinstance(ctx, ExpectedContext):
        return dist.expected_value()
    if isinstance(ctx, SampleContext):
        return sample(dist, ctx, dist.draw_counter)
    if isinstance(ctx, SampleBlock):
        key = (dist.draw_counter, dist)
        hit = ctx._cache.get(key)
        if hit is None:
            hit = sample_block(dist, ctx.master_seed, ctx.start, ctx.stop, dist.draw_counter)
            hit.setflags(write=False)
            ctx._cache[key] = hit
        return hit
    raise TypeError(f"unsupported sampling context {ctx!r}")


def silverman_bandwidth(samples: Sequence[float]) -> float:
    n = len(samples)
    sd = float(np.std(samples, ddof=1)) if n > 1 else 0.0
    return max(1.06 * sd * n ** (-0.2), KDE_BANDWIDTH_FLOOR)


def build_kde(samples: Sequence[float], bandwidth_rule: Union[str, float] = "silverman",
              **kwargs) -> EmpiricalKDE:
    """Build an :class:`EmpiricalKDE`; ``bandwidth_rule`` is ``"silverman"`` or a fixed bandwidth."""
    values = tuple(float(s) for s in samples)
    if not values:
        raise DistributionError("cannot build a KDE from an empty sample list")
    if isinstance(bandwidth_rule, str):
        if bandwidth_rule.lower() != "silverman":
            raise DistributionError(f"unknown bandwidth rule {bandwidth_rule!r}")
        bw = silverman_bandwidth(values)
    else:
        bw = float(bandwidth_rule)
        if not bw > 0:
            raise DistributionError(f"fixed bandwidth must be > 0, got {bw}")
    return EmpiricalKDE(samples=values, bandwidth=bw, **kwargs)


def read_samples_csv(path: Union[str, Path]) -> list[float]:
    """Read a single-column CSV with header ``value``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "value" not in reader.fieldnames:
            raise DistributionError(f"{path}: expected a CSV column named 'value'")
        return [float(row["value"]) for row in reader if row["value"].strip()]


# --------------------------------------------------------------------------
# JSON form


def from_dict(obj, base_dir: Union[str, Path, None] = None) -> ParamDistribution:
    """Parse a tagged distribution object, or a bare number (point mass)."""
    if isinstance(obj, bool):
        raise DistributionError("expected a number or a distribution object")
    if isinstance(obj, (int, float)):
        return PointMass(float(obj))
    if not isinstance(obj, dict) or "kind" not in obj:
        raise DistributionError("distribution must be a number or an object with a 'kind' tag")
    kind = obj["kind"]
    allowed = {
        "point": {"value"},
        "uniform": {"lo", "hi"},
        "gaussian": {"mean", "stddev", "truncate_lo", "truncate_hi"},
        "kde": {"samples", "samples_file", "bandwidth"},
    }
    if kind not in allowed:
        raise DistributionError(f"unknown distribution kind {kind!r}")
    extra = set(obj) - allowed[kind] - {"kind", "stream"}
    if extra:
        raise DistributionError(f"unknown keys for {kind} distribution: {sorted(extra)}")
    stream = obj.get("stream", "")

    def num(key, default=None):
        val = obj.get(key, default)
        if val is None:
            if default is None and key in ("value", "lo", "hi", "mean", "stddev"):
                raise DistributionError(f"{kind} distribution requires '{key}'")
            return None
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise DistributionError(f"'{key}' must be a number")
        return float(val)

    if kind == "point":
        return PointMass(num("value"), stream=stream)
    if kind == "uniform":
        return Uniform(num("lo"), num("hi"), stream=stream)
    if kind == "gaussian":
        return Gaussian(num("mean"), num("stddev"), num("truncate_lo"), num("truncate_hi"),
                        stream=stream)
    if ("samples" in obj) == ("samples_file" in obj):
        raise DistributionError("kde needs exactly one of 'samples' or 'samples_file'")
    if "samples" in obj:
        values = obj["samples"]
        if not isinstance(values, list):
            raise DistributionError("'samples' must be a list")
    else:
        path = Path(obj["samples_file"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        if not path.exists():
            raise DistributionError(f"samples file not found: {path}")
        values = read_samples_csv(path)
    bw = obj.get("bandwidth", "silverman")
    if isinstance(bw, bool) or not isinstance(bw, (str, int, float)):
        raise DistributionError("'bandwidth' must be 'silverman' or a number")
    return build_kde(values, bw, stream=stream)


def scaled(dist: ParamDistribution, factor: float) -> ParamDistribution:
    """The distribution of ``factor * X`` (used for unit conversion, ``factor > 0``)."""
    if not factor > 0:
        raise DistributionError("unit scale factor must be positive")
    if factor == 1.0:
        return dist
    kw = dict(stream=dist.stream, nonnegative=dist.nonnegative)
    if isinstance(dist, PointMass):
        return PointMass(dist.value * factor, **kw)
    if isinstance(dist, Uniform):
        return Uniform(dist.lo * factor, dist.hi * factor, **kw)
    if isinstance(dist, Gaussian):
        lo = None if dist.truncate_lo is None else dist.truncate_lo * factor
        hi = None if dist.truncate_hi is None else dist.truncate_hi * factor
        return Gaussian(dist.mean * factor, dist.stddev * factor, lo, hi, **kw)
    if isinstance(dist, EmpiricalKDE):
        return EmpiricalKDE(tuple(s * factor for s in dist.samples), dist.bandwidth * factor, **kw)
    raise TypeError(f"unknown distribution type {type(dist).__name__}")


def to_dict(dist: ParamDistribution, default_stream: str = "") -> dict:
    """Canonical JSON form; KDE samples are written inline."""
    if isinstance(dist, PointMass):
        out = {"kind": "point", "value": dist.value}
    elif isinstance(dist, Uniform):
        out = {"kind": "uniform", "lo": dist.lo, "hi": dist.hi}
    elif isinstance(dist, Gaussian):
        out = {"kind": "gaussian", "mean": dist.mean, "stddev": dist.stddev}
        if dist.truncate_lo is not None:
            out["truncate_lo"] = dist.truncate_lo
        if dist.truncate_hi is not None:
            out["truncate_hi"] = dist.truncate_hi
    elif isinstance(dist, EmpiricalKDE):
        out = {"kind": "kde", "samples": list(dist.samples), "bandwidth": dist.bandwidth}
    else:
        raise TypeError(f"unknown distribution type {type(dist).__name__}")
    if dist.stream and dist.stream != default_stream:
        out["stream"] = dist.stream
    return out
