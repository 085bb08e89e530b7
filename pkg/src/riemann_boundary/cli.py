"""Command-line front end.

    python3 -m riemann_boundary family [config.json]
    python3 -m riemann_boundary oracle [--nodes 128 256 512 1024]
    python3 -m riemann_boundary lindelof [config.json]

Exit codes: 0 success, 1 a checked claim failed, 2 bad configuration,
3 hypothesis violation, 4 numerical failure, 5 oracle regression.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .conformal import ConformalError, build_geodesic_map, eval_map, normalize_at_origin
from .convergence import ConvergenceConfig, non_increasing, run_family_experiment
from .domains import DomainFamily, generate, make_disk, make_unit_disk
from .geometry import ArcSpec, GeometryError
from .lindelof import (
    HypothesisNotMet,
    LindelofInstance,
    TestFunction,
    harmonic_measure_wos,
    lemma_geometry,
    random_test_functions,
    sector_removed_domain,
    shell_target,
    two_constants_check,
    verify_lemma,
    with_function,
)
from .geometry import validate_jordan

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_NUMERIC, EXIT_ORACLE = 0, 1, 2, 3, 4, 5
CSV_COLUMNS = ["j", "width", "rho_j", "int_sup_err", "bd_sup_err", "bd_offset_err", "inv_sup_err",
               "equicont_mod", "re_fprime0", "im_fprime0", "build_ms", "eval_ms"]
ORACLE_NODES = (128, 256, 512, 1024)
ORACLE_TOL = 1e-2
OFFCENTER = (0.4, 1.5)  # centre and radius of the off-centre disk oracle


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------ config parsing

def _number(value, where, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    return int(value) if integer else float(value)


def _pair(value, where):
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError(f"{where}: expected a two-element list")
    return [_number(v, f"{where}[{k}]") for k, v in enumerate(value)]


def _point(value, where) -> complex:
    x, y = _pair(value, where)
    return complex(x, y)


def _object(data, where, allowed):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}.{unknown[0]}: unknown field")
    return data


def _dataclass(cls, data, where, convert):
    """Build ``cls`` from ``data``, rejecting unknown keys; ``convert`` maps key -> parser."""
    names = [f.name for f in dataclasses.fields(cls)]
    _object(data, where, names)
    kwargs = {k: convert.get(k, lambda v, w: _number(v, w))(v, f"{where}.{k}") for k, v in data.items()}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _string(value, where):
    if not isinstance(value, str):
        raise ConfigError(f"{where}: expected a string")
    return value


def parse_family(data, where="family") -> DomainFamily:
    return _dataclass(DomainFamily, data, where, {
        "kind": _string,
        "j_range": lambda v, w: [int(x) for x in _pair(v, w)],
        "nodes": lambda v, w: _number(v, w, integer=True),
        "arcspec": lambda v, w: _dataclass(ArcSpec, v, w, {}),
    })


def parse_convergence(data, where="convergence") -> ConvergenceConfig:
    return _dataclass(ConvergenceConfig, data, where, {
        "interior_grid": lambda v, w: _number(v, w, integer=True),
        "boundary_grid": lambda v, w: _number(v, w, integer=True),
        "boundary_compact": _pair,
    })


def _parse_domain(data, where):
    _object(data, where, ["kind", "start", "end", "inner", "outer", "nodes", "points"])
    kind = _string(data.get("kind"), f"{where}.kind")
    try:
        if kind == "sector_removed":
            need = ["start", "end", "inner"]
            for k in need:
                if k not in data:
                    raise ConfigError(f"{where}.{k}: missing")
            return sector_removed_domain(
                _number(data["start"], f"{where}.start"), _number(data["end"], f"{where}.end"),
                _number(data["inner"], f"{where}.inner"),
                _number(data.get("outer", 2.0), f"{where}.outer"),
                _number(data.get("nodes", 1024), f"{where}.nodes", integer=True))
        if kind == "polyline":
            pts = data.get("points")
            if not isinstance(pts, list):
                raise ConfigError(f"{where}.points: expected a list of [x, y]")
            return validate_jordan([_point(p, f"{where}.points[{k}]") for k, p in enumerate(pts)])
    except GeometryError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}.kind: expected 'sector_removed' or 'polyline', got {kind!r}")


def parse_instance(data, where):
    _object(data, where, ["domain", "z0", "r", "m", "arc", "f", "shell_band", "trials",
                          "random_functions"])
    for k in ("domain", "r", "m", "arc", "f"):
        if k not in data:
            raise ConfigError(f"{where}.{k}: missing")
    dom = _parse_domain(data["domain"], f"{where}.domain")
    z0 = _point(data.get("z0", [0.0, 0.0]), f"{where}.z0")
    r = _number(data["r"], f"{where}.r")
    m = _number(data["m"], f"{where}.m", integer=True)
    arc = _pair(data["arc"], f"{where}.arc")
    fd = _object(data["f"], f"{where}.f", ["kind", "zeros", "equispaced_zeros", "scale"])
    if ("zeros" in fd) == ("equispaced_zeros" in fd):
        raise ConfigError(f"{where}.f: give exactly one of zeros, equispaced_zeros")
    if "zeros" in fd:
        if not isinstance(fd["zeros"], list):
            raise ConfigError(f"{where}.f.zeros: expected a list of [x, y]")
        zeros = [_point(p, f"{where}.f.zeros[{k}]") for k, p in enumerate(fd["zeros"])]
    else:
        K = _number(fd["equispaced_zeros"], f"{where}.f.equispaced_zeros", integer=True)
        zeros = list(z0 + r * np.exp(1j * np.linspace(arc[0], arc[1], K)))
    try:
        f = TestFunction(_string(fd.get("kind", "polynomial"), f"{where}.f.kind"), tuple(zeros),
                         _number(fd.get("scale", 1.0), f"{where}.f.scale"))
        inst = LindelofInstance(dom, z0, r, m, tuple(arc), f,
                                _number(data.get("shell_band", 0.02), f"{where}.shell_band"))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    trials = _number(data.get("trials", 100_000), f"{where}.trials", integer=True)
    extra = _number(data.get("random_functions", 0), f"{where}.random_functions", integer=True)
    return inst, trials, extra


@dataclasses.dataclass
class ExperimentConfig:
    family: DomainFamily | None
    convergence: ConvergenceConfig
    lindelof: list
    seed: int
    outputs: dict
    nodes: int | None = None


def parse_config(text: str) -> ExperimentConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not valid JSON: {exc}") from exc
    _object(data, "config", ["family", "convergence", "lindelof", "seed", "outputs", "nodes"])
    nodes = None
    fam = None
    if "family" in data:
        fam_data = dict(_object(data["family"], "family", [f.name for f in dataclasses.fields(DomainFamily)]))
        if "nodes" in data:
            nodes = _number(data["nodes"], "nodes", integer=True)
            fam_data["nodes"] = nodes
        fam = parse_family(fam_data)
    conv = parse_convergence(data.get("convergence", {}))
    lind = data.get("lindelof", [])
    if not isinstance(lind, list):
        raise ConfigError("lindelof: expected a list of instances")
    instances = [parse_instance(d, f"lindelof[{k}]") for k, d in enumerate(lind)]
    seed = _number(data.get("seed", 0), "seed", integer=True)
    outputs = _object(data.get("outputs", {}), "outputs", ["csv", "json", "svg"])
    for k, v in outputs.items():
        _string(v, f"outputs.{k}")
    return ExperimentConfig(fam, conv, instances, seed, dict(outputs), nodes)


def load_config(path: str | None, default: str) -> ExperimentConfig:
    if path is None:
        text = resources.files("riemann_boundary").joinpath("configs", default).read_text()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text)


# ------------------------------------------------------------------ output

def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def report_rows(report, timings: bool) -> list[dict]:
    rows = []
    for r in report.rows:
        d = r.to_dict()
        if not timings:
            d["build_ms"] = d["eval_ms"] = None
        rows.append(d)
    return rows


def write_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for d in rows:
        w.writerow([_cell(d[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def _jsonable(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n"


def family_json(report, timings: bool) -> dict:
    return {
        "family": report.family,
        "convergence": report.config,
        "disk_floor": report.floor,
        "hypotheses_ok": report.hypotheses_ok,
        "numerics_ok": report.numerics_ok,
        "kernel_converging": report.kernel_converging,
        "kernel_resolution": report.kernel_resolution,
        "rows": report_rows(report, timings),
    }


_PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]


def _f(x: float) -> str:
    return f"{x:.2f}"


def family_svg(family: DomainFamily, report) -> str:
    """Left: overlaid boundaries. Right: log10 errors against j."""
    out = ['<svg xmlns="http://www.w3.org/2000/svg" width="1200" height="600" viewBox="0 0 1200 600">',
           '<rect width="1200" height="600" fill="white"/>']
    # left panel: [-R, R]^2 into a 560 px square
    R = family.R
    sx = lambda z: 20 + (z.real + R) / (2 * R) * 560
    sy = lambda z: 20 + (R - z.imag) / (2 * R) * 560
    out.append('<rect x="20" y="20" width="560" height="560" fill="none" stroke="#999"/>')
    for k, j in enumerate(family.indices):
        try:
            nodes = generate(family, j).nodes
        except (GeometryError, ValueError):
            continue
        pts = " ".join(f"{_f(sx(z))},{_f(sy(z))}" for z in np.append(nodes, nodes[:1]))
        out.append(f'<polyline fill="none" stroke="{_PALETTE[k % len(_PALETTE)]}" '
                   f'stroke-width="1" points="{pts}"/>')
    # right panel: x = j, y = log10 error
    x0, y0, w, h = 640, 20, 540, 560
    out.append(f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#999"/>')
    metrics = ["int_sup_err", "bd_sup_err", "inv_sup_err", "bd_offset_err"]
    vals = [v for m in metrics for v in report.column(m) if v]
    js = list(family.indices)
    if vals and len(js) > 0:
        lo, hi = math.floor(math.log10(min(vals))), math.ceil(math.log10(max(vals)))
        hi = max(hi, lo + 1)
        jx = lambda j: x0 + 20 + (j - js[0]) / max(1, js[-1] - js[0]) * (w - 40)
        ly = lambda v: y0 + 20 + (hi - math.log10(v)) / (hi - lo) * (h - 40)
        for e in range(lo, hi + 1):
            y = ly(10.0 ** e)
            out.append(f'<line x1="{x0}" y1="{_f(y)}" x2="{x0 + w}" y2="{_f(y)}" stroke="#eee"/>')
            out.append(f'<text x="{x0 + 4}" y="{_f(y - 2)}" font-size="10">1e{e}</text>')
        for k, m in enumerate(metrics):
            pts = [(jx(r.j), ly(getattr(r, m))) for r in report.rows if getattr(r, m)]
            if pts:
                col = _PALETTE[k]
                out.append(f'<polyline fill="none" stroke="{col}" stroke-width="2" points="'
                           + " ".join(f"{_f(a)},{_f(b)}" for a, b in pts) + '"/>')
                out.append(f'<text x="{x0 + w - 120}" y="{y0 + 20 + 14 * k}" font-size="12" '
                           f'fill="{col}">{m}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _write(path: str | None, text: str, outdir: str | None):
    if not path:
        return
    p = Path(path)
    if outdir and not p.is_absolute():
        p = Path(outdir) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text, encoding="utf-8", newline="\n")


# ---------------------------------------------------------------- commands

def cmd_family(args) -> int:
    try:
        cfg = load_config(args.config, "tube_default.json")
        if cfg.family is None:
            raise ConfigError("family: missing")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    seed = cfg.seed if args.seed is None else args.seed
    report = run_family_experiment(cfg.family, cfg.convergence, seed=seed, threads=args.threads)
    rows = report_rows(report, args.timings)
    _write(cfg.outputs.get("csv"), write_csv(rows), args.output_dir)
    _write(cfg.outputs.get("json"), dump_json(family_json(report, args.timings)), args.output_dir)
    _write(cfg.outputs.get("svg"), family_svg(cfg.family, report), args.output_dir)
    if not args.quiet:
        print("j  width      int_sup_err  bd_sup_err   inv_sup_err  status")
        for r in report.rows:
            fmt = lambda v: f"{v:.3e}" if v is not None else "-"
            print(f"{r.j:<2} {r.width:.3e}  {fmt(r.int_sup_err):<11}  {fmt(r.bd_sup_err):<11}  "
                  f"{fmt(r.inv_sup_err):<11}  {r.status}")
    for r in report.rows:
        if r.status != "ok":
            print(f"row j={r.j}: {r.status}: {r.message}", file=sys.stderr)
    if not report.hypotheses_ok:
        return EXIT_HYPOTHESIS
    if not report.numerics_ok:
        return EXIT_NUMERIC
    return EXIT_OK


def _grid(radius: float, count: int = 41) -> np.ndarray:
    x = np.linspace(-radius, radius, count)
    z = (x[:, None] + 1j * x[None, :]).ravel()
    return z[np.abs(z) <= radius]


def oracle_errors(nodes: int) -> tuple[float, float]:
    """Sup errors of the disk and off-centre disk maps against their closed forms."""
    p = _grid(0.9)
    disk = normalize_at_origin(build_geodesic_map(make_unit_disk(nodes)))
    e_disk = float(np.abs(eval_map(disk, p) - p).max())
    c, r = OFFCENTER
    off = normalize_at_origin(build_geodesic_map(make_disk(c, r, nodes)))
    z = c + r * p
    a = -c / r
    exact = ((z - c) / r - a) / (1 - np.conj(a) * (z - c) / r)
    e_off = float(np.abs(eval_map(off, z) - exact).max())
    return e_disk, e_off


def cmd_oracle(args) -> int:
    counts = args.nodes or list(ORACLE_NODES)
    if min(counts) < 16:
        print("config error: oracle node counts must be at least 16", file=sys.stderr)
        return EXIT_CONFIG
    rows = []
    try:
        for n in counts:
            rows.append((n, *oracle_errors(n)))
    except (ConformalError, GeometryError, FloatingPointError) as exc:
        print(f"oracle regression: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    if not args.quiet:
        print("nodes  disk_err     offcenter_err")
        for n, a, b in rows:
            print(f"{n:<6} {a:.3e}    {b:.3e}")
    ok = True
    for k in (1, 2):
        errs = [row[k] for row in rows]
        ok &= all(math.isfinite(e) for e in errs) and errs[-1] <= ORACLE_TOL
        ok &= non_increasing(errs, slack=0.1)
    return EXIT_OK if ok else EXIT_ORACLE


def cmd_lindelof(args) -> int:
    try:
        cfg = load_config(args.config, "lindelof_sector.json")
        if not cfg.lindelof:
            raise ConfigError("lindelof: no instances")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    seed = cfg.seed if args.seed is None else args.seed
    records, all_ok = [], True
    for k, (inst, trials, extra) in enumerate(cfg.lindelof):
        try:
            geo = lemma_geometry(inst)
            rep = verify_lemma(inst, geometry=geo)
            omega, err = harmonic_measure_wos(inst.domain, inst.z0, shell_target(inst), trials,
                                              seed=seed + k, threads=args.threads)
            rep = dataclasses.replace(rep, omega_hat=omega, stderr=err,
                                      two_constants_ok=two_constants_check(rep, omega, err))
            randomized = [verify_lemma(with_function(inst, f), geometry=geo).conclusion_ok
                          for f in random_test_functions(inst, extra, seed + k)]
        except HypothesisNotMet as exc:
            print(f"instance {k}: hypothesis not met: {exc}", file=sys.stderr)
            return EXIT_HYPOTHESIS
        except (ArithmeticError, RuntimeError, GeometryError) as exc:
            print(f"instance {k}: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        rec = rep.to_dict()
        rec["one_over_m"] = 1.0 / inst.m
        rec["random_functions"] = len(randomized)
        rec["random_conclusion_passes"] = sum(randomized)
        records.append(rec)
        passed = rep.conclusion_ok and rep.eq3_ok and all(randomized)
        all_ok &= passed
        if not args.quiet:
            print(f"instance {k}: |f(z0)| = {rep.abs_f_z0:.4e} <= bound {rep.bound:.4e}: "
                  f"{rep.conclusion_ok}; eq3 {rep.eq3_lhs:.4e} <= {rep.eq3_rhs:.4e}: {rep.eq3_ok}; "
                  f"omega = {omega:.4f} +- {err:.4f}; random {sum(randomized)}/{len(randomized)}")
    _write(cfg.outputs.get("json"), dump_json({"seed": seed, "instances": records}), args.output_dir)
    return EXIT_OK if all_ok else EXIT_CHECK


# -------------------------------------------------------------------- main

def _common(suppress: bool) -> argparse.ArgumentParser:
    # flags are accepted before or after the subcommand; the subcommand copy
    # must not reset values given before it
    dflt = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    c = argparse.ArgumentParser(add_help=False)
    c.add_argument("--threads", type=int, default=dflt(1), help="worker threads (results do not depend on it)")
    c.add_argument("--seed", type=int, default=dflt(None), help="override the config seed")
    c.add_argument("--quiet", action="store_true", default=dflt(False), help="no table on standard output")
    c.add_argument("--output-dir", default=dflt(None), help="directory for relative output paths")
    return c


def build_parser() -> argparse.ArgumentParser:
    common = _common(suppress=True)
    p = argparse.ArgumentParser(prog="riemann-boundary", parents=[_common(suppress=False)],
                                description="Riemann maps of domains converging to the disk.")
    sub = p.add_subparsers(dest="command", required=True)
    f = sub.add_parser("family", parents=[common], help="run a domain-family convergence experiment")
    f.add_argument("config", nargs="?", help="JSON config (default: shipped tube family)")
    f.add_argument("--timings", action="store_true", help="fill build_ms/eval_ms (not deterministic)")
    f.set_defaults(func=cmd_family)
    o = sub.add_parser("oracle", parents=[common], help="disk and off-centre disk self-test")
    o.add_argument("--nodes", type=int, nargs="+", help="node counts (default 128 256 512 1024)")
    o.set_defaults(func=cmd_oracle)
    lnd = sub.add_parser("lindelof", parents=[common], help="check the Lindelof bound on instances")
    lnd.add_argument("config", nargs="?", help="JSON config (default: shipped sector instance)")
    lnd.set_defaults(func=cmd_lindelof)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.threads < 1:
        print("config error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
