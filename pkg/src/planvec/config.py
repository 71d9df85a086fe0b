"""Flat key=value configuration shared by the command-line tools."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

from .errors import ConfigError
from .mask_io import Class, class_by_name
from .reconstruct3d import DEFAULT_PIXEL_SCALE, DEFAULT_SPANS, HeightProfile
from .vectorize import Thresholds

THREADS_ENV = "PLANVEC_THREADS"


def read_keyvalues(text: str) -> dict[str, str]:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are ignored."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def read_keyvalues_file(path: str | os.PathLike) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        return read_keyvalues(fh.read())


def write_keyvalues(path: str | os.PathLike, values: dict[str, str]) -> None:
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            for key, value in values.items():
                fh.write(f"{key}={value}\n")
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def effective_threads(requested: int | None = None) -> int:
    """Worker cap: the requested degree bounded by the PLANVEC_THREADS env var."""
    cap = os.environ.get(THREADS_ENV)
    limit = None
    if cap:
        try:
            limit = max(1, int(cap))
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {cap!r}") from exc
    threads = requested if requested and requested > 0 else (os.cpu_count() or 1)
    return min(threads, limit) if limit else threads


@dataclass
class PipelineConfig:
    """Everything the pipeline commands can tune, with defaults matching the
    published constants (fit 0.5, merge distance 4, cos 14 degrees, betas 2/10)."""

    thresholds: Thresholds = field(default_factory=Thresholds)
    betas: tuple[float, ...] = (2.0, 10.0)
    profile: HeightProfile = field(default_factory=HeightProfile)
    color_overrides: dict[Class, tuple[int, int, int]] = field(default_factory=dict)
    threads: int | None = None

    @staticmethod
    def from_keyvalues(values: dict[str, str]) -> "PipelineConfig":
        eps_u, eps_d, eps_a = 0.5, 4.0, math.cos(math.radians(14.0))
        betas: tuple[float, ...] = (2.0, 10.0)
        spans = dict(DEFAULT_SPANS)
        pixel_scale = DEFAULT_PIXEL_SCALE
        colors: dict[Class, tuple[int, int, int]] = {}
        threads = None
        for key, value in values.items():
            try:
                if key == "eps_u":
                    eps_u = float(value)
                elif key == "eps_d":
                    eps_d = float(value)
                elif key == "eps_a":
                    eps_a = float(value)
                elif key == "betas":
                    betas = tuple(float(v) for v in value.split(",") if v.strip())
                elif key == "pixel_scale":
                    pixel_scale = float(value)
                elif key == "threads":
                    threads = int(value)
                elif key.startswith("color."):
                    cls = class_by_name(key[len("color."):])
                    rgb = tuple(int(v) for v in value.split(","))
                    if len(rgb) != 3:
                        raise ValueError("colors need three components")
                    colors[cls] = rgb  # type: ignore[assignment]
                elif "." in key and key.rsplit(".", 1)[1] in ("base", "height"):
                    name, attr = key.rsplit(".", 1)
                    cls = class_by_name(name)
                    base, height = spans.get(cls, (0.0, 2.5))
                    spans[cls] = (float(value), height) if attr == "base" else (base, float(value))
                else:
                    raise ConfigError(f"unknown config key: {key}")
            except ConfigError:
                raise
            except Exception as exc:
                raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from exc
        if not betas or any(b <= 0 for b in betas):
            raise ConfigError(f"betas must be positive, got {betas}")
        try:
            thresholds = Thresholds(eps_u, eps_d, eps_a)
            profile = HeightProfile(spans, pixel_scale)
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(str(exc)) from exc
        return PipelineConfig(thresholds, betas, profile, colors, threads)

    @staticmethod
    def from_file(path: str | os.PathLike) -> "PipelineConfig":
        return PipelineConfig.from_keyvalues(read_keyvalues_file(path))

    def echo(self) -> dict[str, str]:
        """Config as flat key=value pairs, suitable for a run manifest."""
        out = {
            "eps_u": repr(self.thresholds.eps_u),
            "eps_d": repr(self.thresholds.eps_d),
            "eps_a": repr(self.thresholds.eps_a),
            "betas": ",".join(repr(b) for b in self.betas),
            "pixel_scale": repr(self.profile.pixel_scale),
        }
        for cls, (base, height) in sorted(self.profile.spans.items()):
            key = Class(cls).name.lower()
            out[f"{key}.base"] = repr(base)
            out[f"{key}.height"] = repr(height)
        if self.threads:
            out["threads"] = str(self.threads)
        return out
