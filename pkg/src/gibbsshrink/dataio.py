"""File formats: results CSV/JSON, binary draw dumps, dataset exchange.

Determinism contract: every CSV and JSON writer here is byte-identical
across runs given identical inputs. Floats are rendered with repr (shortest
round-trip), JSON keys are sorted, and row order is fixed. Wall-clock
timings therefore never go into CSV/JSON; they are reported in a separate
plain-text sidecar.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .model import Dataset
from .sampler import ChainOutput

REPLICATE_COLUMNS = (
    "method",
    "tau",
    "replicate",
    "seed",
    "mspe_ppm",
    "mspe_pm",
    "coverage",
    "interval_width",
    "status",
)

DUMP_ARRAYS = ("beta0", "beta", "sigma2", "psi", "nu", "tau2", "mu_x", "sigma_x_inv")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_replicates_csv(path, tables) -> None:
    """Per-(method, tau, replicate) rows, stable column order; failed
    replicates keep their row with empty metrics and the error in status."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPLICATE_COLUMNS)
        for table in tables:
            for r in table.rows:
                writer.writerow(
                    [
                        r.method,
                        _fmt(r.tau),
                        r.replicate,
                        r.seed,
                        _fmt(r.mspe_ppm),
                        _fmt(r.mspe_pm),
                        _fmt(r.coverage),
                        _fmt(r.width),
                        "ok" if r.ok else r.error,
                    ]
                )


def config_to_dict(cfg) -> dict:
    pattern = cfg.beta_pattern
    if not isinstance(pattern, str):
        pattern = [float(v) for v in np.asarray(pattern).ravel()]
    return {
        "n_a": cfg.n_a,
        "n_b": cfg.n_b,
        "p": cfg.p,
        "beta_pattern": pattern,
        "r2": cfg.r2,
        "tau": cfg.tau,
        "rho": cfg.rho,
        "psi": cfg.psi,
        "nu": cfg.nu,
        "violation": cfg.violation,
        "replicates": cfg.replicates,
        "validation_n": cfg.validation_n,
        "seed": cfg.seed,
        "methods": list(cfg.methods),
        "chain": {
            "burn_in": cfg.chain.burn_in,
            "stored": cfg.chain.stored,
            "k": cfg.chain.k,
            "me_variant": cfg.chain.me_variant,
        },
    }


def write_summary_json(path, tables) -> None:
    """Aggregate metrics: "aggregate" pools every run; "by_tau" keys the
    same per-method mapping by the surrogate-noise level."""
    by_tau = {}
    pooled: dict[str, list] = {}
    for table in tables:
        agg = table.aggregate()
        by_tau[repr(float(table.config.tau))] = agg
        for method, metrics in agg.items():
            pooled.setdefault(method, []).append(metrics)

    def _pool(entries):
        used = sum(e["replicates_used"] for e in entries)
        failed = sum(e["replicates_failed"] for e in entries)
        if used == 0:
            return {
                "mspe_mean": None,
                "mspe_se": None,
                "coverage_mean": None,
                "width_mean": None,
                "mspe_pm_mean": None,
                "replicates_used": 0,
                "replicates_failed": failed,
            }
        def wmean(key):
            pairs = [(e[key], e["replicates_used"]) for e in entries if e[key] is not None]
            if not pairs:
                return None
            return float(sum(v * n for v, n in pairs) / sum(n for _, n in pairs))
        ses = [
            (e["mspe_se"], e["replicates_used"]) for e in entries if e["mspe_se"] is not None
        ]
        se = (
            float(np.sqrt(sum((s * n) ** 2 for s, n in ses)) / sum(n for _, n in ses))
            if ses
            else None
        )
        return {
            "mspe_mean": wmean("mspe_mean"),
            "mspe_se": se,
            "coverage_mean": wmean("coverage_mean"),
            "width_mean": wmean("width_mean"),
            "mspe_pm_mean": wmean("mspe_pm_mean"),
            "replicates_used": used,
            "replicates_failed": failed,
        }

    payload = {
        "config": config_to_dict(tables[0].config),
        "taus": sorted(float(t.config.tau) for t in tables),
        "aggregate": {m: _pool(entries) for m, entries in pooled.items()},
        "by_tau": by_tau,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_timings_txt(path, tables) -> None:
    """Wall-clock seconds per (method, tau), plain text (kept out of the
    CSV/JSON outputs so those stay byte-identical across runs)."""
    lines = ["method tau total_seconds mean_seconds_per_replicate"]
    for table in tables:
        for method in table.config.methods:
            times = [r.wall_time_s for r in table.rows if r.method == method]
            if times:
                lines.append(
                    f"{method} {table.config.tau:g} {sum(times):.2f} {np.mean(times):.3f}"
                )
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# binary draw dump
# ---------------------------------------------------------------------------


def write_draw_dump(out_dir, chain: ChainOutput, stem: str = "draws") -> tuple[Path, Path]:
    """Flat little-endian float64 dump of the stored draws plus a JSON
    sidecar describing array names, shapes, and byte offsets."""
    out_dir = Path(out_dir)
    bin_path = out_dir / f"{stem}.bin"
    meta_path = out_dir / f"{stem}.meta.json"
    arrays = []
    offset = 0
    with bin_path.open("wb") as fh:
        for name in DUMP_ARRAYS:
            arr = np.ascontiguousarray(np.asarray(getattr(chain, name), dtype="<f8"))
            fh.write(arr.tobytes())
            arrays.append({"name": name, "shape": list(arr.shape), "offset_bytes": offset})
            offset += arr.nbytes
    meta = {
        "byte_order": "little",
        "dtype": "float64",
        "order": "C",
        "total_bytes": offset,
        "method": chain.method.value,
        "arrays": arrays,
    }
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return bin_path, meta_path


def read_draw_dump(bin_path, meta_path) -> dict[str, np.ndarray]:
    meta = json.loads(Path(meta_path).read_text())
    if meta.get("byte_order") != "little" or meta.get("dtype") != "float64":
        raise ValueError("unsupported draw dump layout")
    raw = Path(bin_path).read_bytes()
    out = {}
    for entry in meta["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=entry["offset_bytes"])
        out[entry["name"]] = arr.reshape(shape).copy()
    return out


# ---------------------------------------------------------------------------
# dataset exchange
# ---------------------------------------------------------------------------


def dataset_sidecar(p: int) -> dict:
    return {
        "y": "y",
        "x": [f"x{j + 1}" for j in range(p)],
        "w": [f"w{j + 1}" for j in range(p)],
        "subsample": "subsample",
        "labels": {"complete": "A", "surrogate_only": "B"},
    }


def write_dataset_csv(csv_path, sidecar_path, data: Dataset) -> None:
    """CSV with one row per observation; the JSON sidecar declares which
    columns hold the outcome, covariates, surrogates, and subsample label.
    Covariate cells are empty on surrogate-only rows."""
    side = dataset_sidecar(data.p)
    header = [side["y"], *side["x"], *side["w"], side["subsample"]]
    with Path(csv_path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(data.n_a):
            writer.writerow(
                [_fmt(data.y_a[i]), *map(_fmt, data.x_a[i]), *map(_fmt, data.w_a[i]), "A"]
            )
        for i in range(data.n_b):
            writer.writerow(
                [_fmt(data.y_b[i]), *[""] * data.p, *map(_fmt, data.w_b[i]), "B"]
            )
    Path(sidecar_path).write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")


def read_dataset_csv(csv_path, sidecar_path) -> Dataset:
    side = json.loads(Path(sidecar_path).read_text())
    label_a = side["labels"]["complete"]
    label_b = side["labels"]["surrogate_only"]
    with Path(csv_path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        y_a, x_a, w_a, y_b, w_b = [], [], [], [], []
        for row in reader:
            label = row[side["subsample"]].strip()
            y = float(row[side["y"]])
            w = [float(row[c]) for c in side["w"]]
            if label == label_a:
                y_a.append(y)
                w_a.append(w)
                x_a.append([float(row[c]) for c in side["x"]])
            elif label == label_b:
                y_b.append(y)
                w_b.append(w)
            else:
                raise ValueError(f"unknown subsample label {label!r}")
    p = len(side["x"])
    return Dataset(
        y_a=np.array(y_a),
        x_a=np.array(x_a).reshape(-1, p),
        w_a=np.array(w_a).reshape(-1, p),
        y_b=np.array(y_b),
        w_b=np.array(w_b).reshape(-1, p),
    )


def write_geweke_csv(path, report) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["statistic", "forward_mean", "gibbs_mean", "se", "z"])
        for row in report.rows():
            writer.writerow(
                [
                    row["statistic"],
                    _fmt(row["forward_mean"]),
                    _fmt(row["gibbs_mean"]),
                    _fmt(row["se"]),
                    _fmt(row["z"]),
                ]
            )


def write_coefficients_csv(path, summary) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["coefficient", "beta_ppm", "beta_pm"])
        for j in range(summary.beta_ppm.size):
            writer.writerow([f"x{j + 1}", _fmt(summary.beta_ppm[j]), _fmt(summary.beta_pm[j])])


def write_predictions_csv(path, point_ppm, point_pm, lo, hi) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "point_ppm", "point_pm", "interval_lo", "interval_hi"])
        for i in range(len(point_ppm)):
            writer.writerow(
                [i, _fmt(point_ppm[i]), _fmt(point_pm[i]), _fmt(lo[i]), _fmt(hi[i])]
            )
