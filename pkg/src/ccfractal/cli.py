"""Command-line front end: configuration, orchestration, and report emission.

Commands read a JSON config and write artifacts into a directory addressed by
the config hash, so repeated runs with the same config are byte-identical and
never clobber other experiments.  Exit codes: 0 pass, 1 diagnostic failure,
2 usage/config error, 3 piece budget exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BudgetError, ConfigError, DiagnosticFailure, InputError
from .fixtures import fixture_cloud
from .fractal import (
    CustomSchedule,
    Example1Schedule,
    Example2Schedule,
    build_construction,
    enumerate_cylinders,
)
from .group import calibrate_metric_constant, spec_from_json, spec_to_json
from .dimlab import (
    ExcisionSpec,
    density_ratio,
    dimension_comparison_report,
    excision_ratio,
)

__all__ = ["main"]


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


def _require_seed(config: dict, override: int | None) -> int:
    if override is not None:
        config["seed"] = int(override)
    if "seed" not in config:
        raise ConfigError("config must declare a seed (reproducibility is mandatory)")
    return int(config["seed"])


def _config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _out_dir(config: dict, override: str | None, command: str) -> Path:
    base = Path(override or config.get("output_dir", "cc-fractal-out"))
    return base / f"{command}-{_config_hash(config)}"


def _parse_spec(config: dict):
    if "spec" not in config:
        raise ConfigError("config must declare a group spec")
    try:
        return spec_from_json(config["spec"])
    except (InputError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad spec: {exc}")


def _parse_scales(config: dict) -> list[float]:
    scales = config.get("scales", {"dyadic": [2, 6]})
    if isinstance(scales, dict):
        jmin, jmax = scales.get("dyadic", [2, 6])
        return [2.0**-j for j in range(int(jmin), int(jmax) + 1)]
    return [float(r) for r in scales]


def _schedule(gen: dict):
    kind = gen.get("kind")
    m = int(gen.get("m", 1))
    if kind == "example1":
        return Example1Schedule(m)
    if kind == "example2":
        return Example2Schedule(float(gen.get("M", 2.0)), m)
    if kind == "custom":
        steps = tuple((int(N), float(lam)) for N, lam in gen.get("steps", []))
        if not steps:
            raise ConfigError("custom schedule needs a nonempty steps list")
        return CustomSchedule(steps, m)
    raise ConfigError(f"unknown slab scheme {kind!r}")


def _build_object(config: dict, spec):
    """Generator object (slab construction or Moran set) named by the config."""
    gen = config.get("generator")
    if not isinstance(gen, dict) or "kind" not in gen:
        raise ConfigError("config must declare a generator with a kind")
    kind = gen["kind"]
    if kind == "moran":
        return enumerate_cylinders(spec, float(gen.get("s", 2.5)), int(gen.get("depth", 5)))
    if kind == "fixture":
        raise ConfigError("fixture generators provide points only, not pieces")
    try:
        depth = int(gen["depth"])
    except KeyError:
        raise ConfigError("slab generator needs a depth")
    embedding = gen.get("embedding", "heis-xt")
    try:
        return build_construction(spec, _schedule(gen), depth, embedding=embedding)
    except InputError as exc:
        raise ConfigError(str(exc))


def _point_cloud(config: dict, spec, seed: int) -> tuple[np.ndarray, np.ndarray]:
    gen = config.get("generator", {})
    if gen.get("kind") == "fixture":
        try:
            return fixture_cloud(gen.get("name", ""))
        except InputError as exc:
            raise ConfigError(str(exc))
    obj = _build_object(config, spec)
    if gen.get("kind") == "moran":
        return obj.centers(), None
    return obj.sample(int(config.get("points", 20000)), seed)


def _fmt(x) -> str:
    return repr(float(x))


def _write_all(out: Path, files: dict[str, str | bytes]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name, payload in files.items():
        mode = "wb" if isinstance(payload, bytes) else "w"
        with open(out / name, mode) as fh:
            fh.write(payload)


def _sidecar(command: str, config: dict, extra: dict) -> str:
    doc = {
        "command": command,
        "config": config,
        "config_hash": _config_hash(config),
        "version": __version__,
    }
    doc.update(extra)
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _csv(header: str, rows) -> str:
    lines = [header]
    lines += [",".join(_fmt(v) if not isinstance(v, str) else v for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _loglog_svg(series: dict[str, list[tuple[float, float]]], fits: dict[str, tuple[float, float]]) -> bytes:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "cc-fractal"
    fig, ax = plt.subplots(figsize=(5, 4))
    for label, entries in series.items():
        x = np.log2([1.0 / r for r, _ in entries])
        y = np.log2([max(v, 1e-300) for _, v in entries])
        ax.scatter(x, y, s=12, label=label)
        if label in fits:
            slope, intercept = fits[label]
            ax.plot(x, (slope * np.log(2) * x + intercept) / np.log(2), lw=1)
    ax.set_xlabel("log2(1/r)")
    ax.set_ylabel("log2(value)")
    ax.legend(fontsize=8)
    import io

    buf = io.BytesIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands


def cmd_gen(config: dict, seed: int, out: Path) -> int:
    spec = _parse_spec(config)
    obj = _build_object(config, spec)
    boxes = obj.boxes_ambient()
    pts, weights = (
        (obj.centers(), None)
        if config.get("generator", {}).get("kind") == "moran"
        else obj.sample(int(config.get("points", 20000)), seed)
    )
    pieces = {
        "count": int(len(boxes)),
        "depth": int(obj.depth),
        "boxes": boxes.tolist(),
    }
    header = ",".join(f"x{i + 1}" for i in range(pts.shape[1])) + ",weight"
    w = weights if weights is not None else np.full(len(pts), 1.0 / len(pts))
    rows = [tuple(p) + (wi,) for p, wi in zip(pts, w)]
    files = {
        "pieces.json": json.dumps(pieces, sort_keys=True) + "\n",
        "sample.csv": _csv(header, rows),
        "sidecar.json": _sidecar("gen", config, {"pieces": int(len(boxes)), "spec": json.loads(spec_to_json(spec))}),
    }
    _write_all(out, files)
    print(f"gen: {len(boxes)} pieces -> {out}")
    return 0


def cmd_dims(config: dict, seed: int, out: Path) -> int:
    spec = _parse_spec(config)
    pts, _ = _point_cloud(config, spec, seed)
    scales = _parse_scales(config)
    tolerance = float(config.get("tolerance", 0.3))
    report = dimension_comparison_report(pts, spec, scales, tolerance=tolerance)
    rows = [
        (r, int(ne), int(ng))
        for (r, ne), (_, ng) in zip(report.series_euclid.entries, report.series_homog.entries)
    ]
    summary = {
        "dim_E": report.dim_euclid.slope,
        "dim_G": report.dim_homog.slope,
        "beta_minus": report.beta_lo,
        "beta_plus": report.beta_hi,
        "tolerance": report.tolerance,
        "pass": report.passed,
    }
    svg = _loglog_svg(
        {"euclidean": list(report.series_euclid.entries), "homogeneous": list(report.series_homog.entries)},
        {"euclidean": (report.dim_euclid.slope, report.dim_euclid.intercept),
         "homogeneous": (report.dim_homog.slope, report.dim_homog.intercept)},
    )
    files = {
        "counts.csv": _csv("r,count_euclid,count_homog", rows),
        "summary.json": json.dumps(summary, sort_keys=True, indent=2) + "\n",
        "loglog.svg": svg,
        "sidecar.json": _sidecar("dims", config, {"summary": summary}),
    }
    _write_all(out, files)
    print(f"dims: dim_E={summary['dim_E']:.3f} dim_G={summary['dim_G']:.3f} "
          f"sandwich [{summary['beta_minus']:.3f}, {summary['beta_plus']:.3f}] "
          f"{'pass' if report.passed else 'FAIL'} -> {out}")
    if not report.passed:
        raise DiagnosticFailure("dimension sandwich failed at the configured tolerance")
    return 0


def _ratio_radii(config: dict, obj, section: dict) -> list[float]:
    radii = section.get("radii", {"native_k": [1, 2]})
    if isinstance(radii, dict):
        ks = radii.get("native_k", [1, 2])
        h_levels = getattr(obj, "h_levels", None)
        if h_levels is None:
            raise ConfigError("native radii need a slab construction")
        bad = [k for k in ks if not 0 <= int(k) + 1 < len(h_levels)]
        if bad:
            raise ConfigError(f"native_k out of range for this depth: {bad}")
        return [4.0 * h_levels[int(k) + 1] for k in ks]
    return [float(r) for r in radii]


def cmd_excise(config: dict, seed: int, out: Path) -> int:
    spec = _parse_spec(config)
    obj = _build_object(config, spec)
    section = config.get("excise", {})
    exc = ExcisionSpec(section.get("mode", "linear"), float(section.get("param", 0.125)))
    s = float(section.get("s", 1.0))
    radii = _ratio_radii(config, obj, section)
    count = int(section.get("points", 200))
    pts, _ = obj.sample(count, seed)
    rows, per_radius = [], {}
    for r in radii:
        ratios = np.array([excision_ratio(obj, p, r, s, exc, spec) for p in pts])
        rows += [(r, v) for v in ratios]
        per_radius[_fmt(r)] = {
            "min": float(ratios.min()),
            "median": float(np.median(ratios)),
            "quantile_value": float(np.quantile(ratios, 1.0 - float(section.get("quantile", 0.9)))),
        }
    passed = True
    if "bound" in section:
        bound = float(section["bound"])
        q = float(section.get("quantile", 0.9))
        passed = all(
            stats["quantile_value"] >= bound for stats in per_radius.values()
        ) and q <= 1.0
    summary = {"s": s, "mode": exc.mode, "param": exc.param, "per_radius": per_radius, "pass": passed}
    svg = _loglog_svg({"excision ratio": [(r, max(v, 1e-12)) for r, v in rows]}, {})
    files = {
        "ratios.csv": _csv("r,ratio", rows),
        "summary.json": json.dumps(summary, sort_keys=True, indent=2) + "\n",
        "ratios.svg": svg,
        "sidecar.json": _sidecar("excise", config, {"summary": summary}),
    }
    _write_all(out, files)
    print(f"excise: {len(radii)} radii x {count} points, {'pass' if passed else 'FAIL'} -> {out}")
    if not passed:
        raise DiagnosticFailure("excision ratios fell below the configured bound")
    return 0


def cmd_density(config: dict, seed: int, out: Path) -> int:
    spec = _parse_spec(config)
    obj = _build_object(config, spec)
    section = config.get("density", {})
    s = float(section.get("s", 1.0))
    metric = section.get("metric", "euclidean")
    radii = _ratio_radii(config, obj, section)
    count = int(section.get("points", 200))
    pts, _ = obj.sample(count, seed)
    rows, per_radius = [], {}
    for r in radii:
        ratios = np.array([density_ratio(obj, p, r, s, metric, spec) for p in pts])
        rows += [(r, v) for v in ratios]
        per_radius[_fmt(r)] = {"min": float(ratios.min()), "median": float(np.median(ratios))}
    summary = {"s": s, "metric": metric, "per_radius": per_radius}
    files = {
        "ratios.csv": _csv("r,ratio", rows),
        "summary.json": json.dumps(summary, sort_keys=True, indent=2) + "\n",
        "sidecar.json": _sidecar("density", config, {"summary": summary}),
    }
    _write_all(out, files)
    print(f"density: {len(radii)} radii x {count} points -> {out}")
    return 0


def cmd_calibrate(config: dict, seed: int, out: Path) -> int:
    spec = _parse_spec(config)
    section = config.get("calibrate", {})
    samples = int(section.get("samples", 100_000))
    R = float(section.get("R", 5.0))
    c = calibrate_metric_constant(spec, sample_count=samples, R=R, seed=seed)
    doc = {"c": c, "violations": 0, "samples": samples, "R": R}
    files = {
        "calibration.json": json.dumps(doc, sort_keys=True, indent=2) + "\n",
        "sidecar.json": _sidecar("calibrate", config, {"calibration": doc}),
    }
    _write_all(out, files)
    print(f"calibrate: c={c} -> {out}")
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "dims": cmd_dims,
    "excise": cmd_excise,
    "density": cmd_density,
    "calibrate": cmd_calibrate,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="cc-fractal",
        description="Carnot-group fractal generation and dimension diagnostics",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="path to a JSON experiment config")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="override the output base directory")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        config = _load_config(args.config)
        seed = _require_seed(config, args.seed)
        out = _out_dir(config, args.out, args.command)
        return COMMANDS[args.command](config, seed, out)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 3
    except DiagnosticFailure as exc:
        print(f"diagnostic failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
