"""Experiment runner: seeded, reproducible sweeps persisted as JSON + CSV.

A config names a kind (certify, contraction, mlsi, mix, scale, exchange,
walk), an input (distribution/Ising file or inline generator), kind-specific
params, a seed, and an output directory. Identical config + seed reproduces
every numeric table byte for byte; run directories are named
<timestamp>-<content hash> so reruns never collide.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import certify as cz
from . import divergence as dv
from . import ising as iz
from . import kernels as kz
from . import sampling as sz
from . import subsets as sb
from .errors import ConfigParseError, InputNotFound

KINDS = ("certify", "contraction", "mlsi", "mix", "scale", "exchange", "walk")


@dataclass
class ExperimentConfig:
    kind: str
    input: object
    params: dict
    seed: int
    output_dir: str

    def to_json(self) -> dict:
        return {"kind": self.kind, "input": self.input, "params": self.params,
                "seed": self.seed, "output_dir": str(self.output_dir)}


@dataclass
class RunReport:
    config: ExperimentConfig
    input_hash: str
    out_dir: Path
    summary: dict
    tables: dict
    table_paths: dict
    timings: dict


def load_config(path, seed=None, output_dir=None) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise InputNotFound(f"config file {path} does not exist")
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigParseError(
            f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    return config_from_json(obj, base=path.parent, seed=seed, output_dir=output_dir)


def config_from_json(obj: dict, base=None, seed=None, output_dir=None) -> ExperimentConfig:
    kind = obj.get("kind")
    if kind not in KINDS:
        raise ConfigParseError(f"unknown kind {kind!r}; expected one of {KINDS}")
    if seed is None:
        seed = obj.get("seed")
    if seed is None:
        raise ConfigParseError("config must carry a seed (no ambient entropy)")
    out = output_dir or obj.get("output_dir") or "runs"
    inp = obj.get("input")
    if isinstance(inp, str) and base is not None and not os.path.isabs(inp):
        inp = str(Path(base) / inp)
    return ExperimentConfig(kind=kind, input=inp, params=obj.get("params", {}),
                            seed=int(seed), output_dir=str(out))


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("ENTROPYWALKS_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Order-preserving map honoring ENTROPYWALKS_THREADS; results merge by
    index so execution order cannot change the report."""
    items = list(items)
    w = thread_count()
    if w <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# inputs


def _load_input(config: ExperimentConfig):
    """Resolve the config input to a SubsetDensity or IsingModel."""
    inp = config.input
    if isinstance(inp, str):
        path = Path(inp)
        if not path.exists():
            raise InputNotFound(f"input file {path} does not exist")
        obj = json.loads(path.read_text())
    elif isinstance(inp, dict):
        obj = inp
    else:
        raise InputNotFound("config has no input")
    if "generator" in obj:
        g = obj["generator"]
        if g == "uniform":
            return sb.uniform_density(obj["n"], obj["k"])
        if g == "r_fold_uniform":
            return sb.r_fold(sb.uniform_density(obj["n"], obj["k"]), obj["r"])
        if g == "curie_weiss":
            return iz.curie_weiss(obj["n"], obj["delta"],
                                  obj.get("h"))
        if g == "rank_one":
            return iz.make_rank_one(obj["u"], obj["h"])
        raise ConfigParseError(f"unknown generator {g!r}")
    if "J" in obj:
        return iz.ising_from_json(obj)
    if "m" in obj and "entries" in obj:
        return sb.spin_density_from_json(obj)
    return sb.density_from_json(obj)


def _input_hash(config: ExperimentConfig) -> str:
    payload = json.dumps(config.to_json(), sort_keys=True).encode()
    if isinstance(config.input, str) and Path(config.input).exists():
        payload += Path(config.input).read_bytes()
    return hashlib.sha256(payload).hexdigest()[:12]


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, rows, columns, comment=None):
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in columns) + "\n")


# ---------------------------------------------------------------------------
# kind runners; each returns (summary, tables) with tables name -> (rows, columns, comment)


def _kernel_for(config, target):
    params = config.params
    if isinstance(target, iz.IsingModel):
        return kz.glauber_kernel(target)
    ell = params.get("ell", target.k - 1)
    return kz.down_up_kernel(target, int(ell), level=params.get("level", "k"))


def _run_certify(config, target):
    p = config.params
    alpha = p.get("alpha", 1.0)
    if isinstance(target, iz.IsingModel):
        if target.rank1 is None:
            raise ConfigParseError("certify on Ising input needs a rank-1 model")
        cert = iz.rank_one_flc_certify(target.rank1[0], target.field,
                                       shifts=p.get("shifts", 200), seed=config.seed)
    else:
        cert = cz.entropic_independence_certify(
            target, alpha, mode=p.get("mode", "exact-dual"),
            mesh=p.get("mesh", 256), seed=config.seed,
            all_links=p.get("all_links", False))
    summary = {"verdict": cert.verdict, "margin": cert.margin,
               "samples": cert.samples, "ok": cert.ok}
    if cert.witness is not None:
        summary["witness"] = cert.witness
    rows = [{"alpha": alpha if np.isscalar(alpha) else "profile",
             "verdict": cert.verdict, "margin": cert.margin,
             "samples": cert.samples}]
    return summary, {"certify": (rows, ["alpha", "verdict", "margin", "samples"],
                                 "one row per certified property")}


def _run_contraction(config, target):
    p = config.params
    alpha = p.get("alpha")
    ells = p.get("ells", [p.get("ell", target.k - 1)])
    rows = []
    ok = True
    for i, ell in enumerate(ells):
        rep = dv.contraction_coefficient(target, int(ell),
                                         trials=p.get("trials", 512),
                                         seed=config.seed + i, alpha=alpha)
        margin = None
        if rep.kappa_bound is not None:
            margin = (1.0 - rep.kappa_bound) - rep.coefficient
            ok = ok and margin >= -1e-8
        rows.append({"alpha": alpha, "ell": ell, "measured": rep.coefficient,
                     "kappa": rep.kappa_bound, "margin": margin})
    summary = {"ok": ok, "rows": len(rows)}
    return summary, {"contraction": (rows, ["alpha", "ell", "measured", "kappa", "margin"],
                                     "measured sup KL ratio vs closed-form kappa")}


def _run_mlsi(config, target):
    kern = _kernel_for(config, target)
    est = dv.mlsi_estimate(kern, trials=config.params.get("trials", 256),
                           seed=config.seed)
    summary = {"upper": est.upper, "lower": est.lower,
               "coefficient": est.contraction_sup,
               "ok": est.lower <= est.upper + 1e-6}
    if isinstance(target, iz.IsingModel):
        summary["theory_lower"] = (1.0 - target.op_norm) / target.n
    rows = [{"upper": est.upper, "lower": est.lower,
             "coefficient": est.contraction_sup}]
    return summary, {"mlsi": (rows, ["upper", "lower", "coefficient"],
                              "bracket for the modified log-Sobolev constant")}


def _run_mix(config, target):
    p = config.params
    kern = _kernel_for(config, target)
    eps = p.get("epsilon", 0.25)
    start = p.get("start", "worst")
    if start == "worst":
        t = dv.mixing_time_worst(kern, eps)
    else:
        t = dv.mixing_time(kern, tuple(start), eps)
    summary = {"t_mix": t, "epsilon": eps, "ok": True}
    if isinstance(target, iz.IsingModel):
        rho0 = (1.0 - target.op_norm) / target.n
        if rho0 > 0:
            bound = dv.mlsi_mixing_bound(rho0, kern.stationary, "worst", eps)
            summary["mlsi_bound"] = bound
            summary["ok"] = t <= bound
    rows = [dict(summary)]
    return summary, {"mix": (rows, sorted(rows[0].keys()), "exact mixing time")}


def magnetization_representatives(n: int):
    """One spin vector per magnetization class: first c coords +1."""
    reps = []
    for c in range(n + 1):
        reps.append(tuple([1] * c + [-1] * (n - c)))
    return reps


def _spin_index(X: np.ndarray) -> np.ndarray:
    n = X.shape[1]
    weights = 1 << (n - 1 - np.arange(n))
    return ((X > 0).astype(np.int64) @ weights).astype(np.int64)


def scale_study(sizes, delta: float, seed: int = 0, walk_runs: int = 20000,
                epsilon: float = 0.25):
    """Exact gap / mixing-time scaling for Curie-Weiss Glauber dynamics.

    Per size: exact spectral gap, exact worst-start t_mix (worst over
    magnetization classes, which is exact by permutation symmetry), the
    theoretical MLSI lower bound (1 - ||J||_op)/n = delta/n, and the
    empirical TV after t_mix steps from walk_runs seeded chains.
    Fits gap ~ n^a and t_mix ~ n^b log n by least squares.
    """
    rows = []
    for i, n in enumerate(sizes):
        model = iz.curie_weiss(n, delta)
        kern = kz.glauber_kernel(model, force_dense=False)
        gap = kz.spectral_gap(kern)
        reps = magnetization_representatives(n)
        tmix = max(dv.mixing_time(kern, r, epsilon) for r in reps)
        mlsi_lower = delta / n
        tv_emp = math.nan
        if walk_runs > 0:
            X = sz.glauber_chain_sample(model, np.ones(n, dtype=np.int8), tmix,
                                        walk_runs, seed=seed + 17 * i)
            counts = np.bincount(_spin_index(X), minlength=1 << n)
            emp = counts / counts.sum()
            tv_emp = dv.tv_distance(emp, kern.stationary)
        rows.append({"n": n, "delta": delta, "gap": gap, "tmix_exact": tmix,
                     "mlsi_lower": mlsi_lower, "tv_empirical": tv_emp,
                     "gap_n_over_delta": gap * n / delta,
                     "tmix_over_nlogn": tmix / (n * math.log(n) / delta)})
    summary = {"rows": len(rows)}
    if len(rows) >= 2:
        ln = np.log([r["n"] for r in rows])
        a = np.polyfit(ln, np.log([r["gap"] for r in rows]), 1)[0]
        b = np.polyfit(ln, np.log([r["tmix_exact"] / math.log(r["n"])
                                   for r in rows]), 1)[0]
        summary["gap_exponent"] = float(a)
        summary["tmix_exponent"] = float(b)
        ratios = [r["gap_n_over_delta"] for r in rows]
        summary["gap_band"] = [float(np.min(ratios)), float(np.max(ratios))]
        tb = [r["tmix_over_nlogn"] for r in rows]
        summary["tmix_band"] = [float(np.min(tb)), float(np.max(tb))]
        summary["ok"] = bool(np.min(ratios) >= 1 / 3 and np.max(ratios) <= 3
                             and abs(a + 1.0) <= 0.3)
    return rows, summary


def _run_scale(config, target):
    p = config.params
    rows, summary = scale_study(p.get("sizes", []), p.get("delta", 0.5),
                                seed=config.seed,
                                walk_runs=p.get("walk_runs", 20000),
                                epsilon=p.get("epsilon", 0.25))
    cols = ["n", "delta", "gap", "tmix_exact", "mlsi_lower", "tv_empirical",
            "gap_n_over_delta", "tmix_over_nlogn"]
    summary.setdefault("ok", True)
    return summary, {"scale": (rows, cols,
                               "per-size exact gap, t_mix, MLSI lower bound, empirical TV")}


def _run_exchange(config, target):
    if not isinstance(target, iz.IsingModel):
        raise ConfigParseError("exchange needs an Ising input")
    rep = iz.exchange_check(target, pairs=config.params.get("pairs", "all"),
                            seed=config.seed)
    summary = {"max_log_ratio": rep.max_log_ratio, "log_bound": rep.log_bound,
               "margin": rep.margin, "pairs": rep.pairs_checked, "ok": rep.ok}
    rows = [dict(summary)]
    return summary, {"exchange": (rows, sorted(rows[0].keys()),
                                  "log-space exchange-property sweep")}


def _run_walk(config, target, out_dir):
    p = config.params
    steps = int(p.get("steps", 1000))
    thin = int(p.get("thin", 1))
    if isinstance(target, iz.IsingModel):
        start = p.get("start", [1] * target.n)
        traj = sz.simulate_walk(target, start=start, steps=steps,
                                seed=config.seed, thin=thin)
    else:
        start = p.get("start", list(target.sets[0]))
        traj = sz.simulate_walk(target, ell=int(p.get("ell", target.k - 1)),
                                start=start, steps=steps, seed=config.seed,
                                thin=thin)
    path = out_dir / "trajectory.csv"
    traj.to_csv(path)
    summary = {"steps": steps, "recorded": len(traj.states), "ok": True,
               "trajectory": str(path)}
    return summary, {}


def run(config: ExperimentConfig) -> RunReport:
    """Dispatch a config, persist manifest/summary/tables, return the report."""
    t0 = time.perf_counter()
    target = _load_input(config)
    h = _input_hash(config)
    stamp = time.strftime("%Y%m%dT%H%M%S", time.gmtime())
    out_dir = Path(config.output_dir) / f"{stamp}-{h}"
    out_dir.mkdir(parents=True, exist_ok=True)

    runners = {"certify": _run_certify, "contraction": _run_contraction,
               "mlsi": _run_mlsi, "mix": _run_mix, "scale": _run_scale,
               "exchange": _run_exchange}
    if config.kind == "walk":
        summary, tables = _run_walk(config, target, out_dir)
    else:
        summary, tables = runners[config.kind](config, target)

    timings = {"wall_seconds": time.perf_counter() - t0}
    (out_dir / "manifest.json").write_text(json.dumps(
        {"config": config.to_json(), "input_hash": h}, indent=1, sort_keys=True))
    table_paths = {}
    for name, (rows, cols, comment) in tables.items():
        path = out_dir / f"{name}.csv"
        write_csv(path, rows, cols, comment)
        table_paths[name] = str(path)
    if not summary.get("ok", True) and "witness" in summary:
        (out_dir / "witness.json").write_text(json.dumps(summary["witness"], indent=1))
    (out_dir / "summary.json").write_text(json.dumps(
        {"summary": summary, "timings": timings}, indent=1, sort_keys=True, default=str))
    return RunReport(config=config, input_hash=h, out_dir=out_dir,
                     summary=summary, tables=tables, table_paths=table_paths,
                     timings=timings)


def emit_plotdata(report: RunReport, out_dir=None) -> list:
    """Re-emit the report tables as tidy CSVs with a schema comment line."""
    out = Path(out_dir) if out_dir else report.out_dir
    paths = []
    for name, (rows, cols, comment) in report.tables.items():
        path = out / f"plotdata_{name}.csv"
        write_csv(path, rows, cols, f"columns: {', '.join(cols)}; {comment}")
        paths.append(str(path))
    if not report.tables:
        path = out / "plotdata_empty.csv"
        write_csv(path, [], ["empty"], "columns: empty; report had no tables")
        paths.append(str(path))
    return paths
