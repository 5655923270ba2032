"""Command line driver: one subcommand per experiment, CSV/JSON/SVG output.

Exit codes: 0 all checks pass, 1 usage error, 2 numerical failure,
3 a baked-in check failed (the report is still written).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import empirics, kacrice, kernels, multijet
from .kernels import TOTAL_LENGTH, far_diagonal_threshold, kostlan_kernel

log = logging.getLogger("kostlan")

# every tolerance a subcommand checks against; echoed into JSON reports
DEFAULTS = {
    "version": 1,
    "degrees": [16, 25, 64, 100, 256, 400],
    "samples": 20000,
    "kmax": 4,
    "seed": 0,
    "cprime": 1.0,
    "grid": 512,
    "mcBudget": 100000,
    "threads": 1,
    "format": "csv",
    "meanStderrs": 3.0,
    "densityIntegralRtol": 1e-6,
    "densityFlatRtol": 1e-8,
    "bridgeStderrs": 3.0,
    "concentrationC": [0.25, 0.5, 1.0],
    "bergmanRadius": 3.0,
    "bergmanGrid": 50,
    "vanishingEps": [1e-1, 1e-2, 1e-3, 1e-4],
    "vanishingFraction": 0.05,
    "crossStderrs": 5.0,
    "farFactorization": 0.05,
    "crossPairs": 100,
    "fitA1": [0.98, 1.02],
    "fitA2": [0.95, 1.05],
    "fitB3overB2": [2.2, 3.8],
    "varianceStableRtol": 0.15,
    "chi2MinP": 0.01,
    "bins": 32,
}

CONFIG_FIELDS = ("subcommand", "degrees", "samples", "kmax", "seed", "cprime", "grid",
                 "mcBudget", "out", "format", "threads", "plot")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    degrees: list
    samples: int = DEFAULTS["samples"]
    kmax: int = DEFAULTS["kmax"]
    seed: int = DEFAULTS["seed"]
    cprime: float = DEFAULTS["cprime"]
    grid: int = DEFAULTS["grid"]
    mcBudget: int = DEFAULTS["mcBudget"]
    out: str | None = None
    format: str = "csv"
    threads: int = 1
    plot: str | None = None

    def validate(self):
        if not self.degrees:
            raise UsageError("degrees: empty list")
        if any(int(d) != d or d < 1 for d in self.degrees):
            raise UsageError("degrees: must be positive integers")
        self.degrees = sorted(int(d) for d in self.degrees)
        for name in ("samples", "kmax", "grid", "mcBudget", "threads"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v <= 0:
                raise UsageError(f"{name}: must be a positive integer")
        if self.seed < 0:
            raise UsageError("seed: must be non-negative")
        if self.cprime <= 0:
            raise UsageError("cprime: must be positive")
        if self.format not in ("csv", "json"):
            raise UsageError("format: csv or json")
        return self


@dataclass
class Check:
    name: str
    passed: bool
    value: object
    tolerance: object


@dataclass
class RunReport:
    config: dict
    version: str
    tables: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    wall_time: float = 0.0

    def check(self, name, passed, value, tolerance):
        self.checks.append(Check(name, bool(passed), _plain(value), _plain(tolerance)))

    @property
    def passed(self):
        return all(c.passed for c in self.checks)


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


# --------------------------------------------------------------------------
# subcommands

def _moment_reports(cfg, degrees=None):
    out = []
    for d in degrees or cfg.degrees:
        log.info("sampling d=%d N=%d", d, cfg.samples)
        out.append(empirics.run_moments(d, cfg.samples, min(cfg.kmax, 5), cfg.seed, cfg.threads))
    return out


def cmd_moments(cfg: RunConfig, rep: RunReport):
    rows = []
    for r in _moment_reports(cfg):
        for row in r.rows():
            rows.append({**row, "seed": cfg.seed})
        z = abs(r.mean - np.sqrt(r.degree)) / max(r.mean_stderr, 1e-300)
        ok = z <= DEFAULTS["meanStderrs"] or (r.mean_stderr == 0 and r.mean == np.sqrt(r.degree))
        rep.check(f"mean d={r.degree}", ok, z, DEFAULTS["meanStderrs"])
    rep.tables["moments"] = rows


def cmd_kacrice(cfg: RunConfig, rep: RunReport):
    rows = []
    for d in cfg.degrees:
        K = kostlan_kernel(d)
        x, _ = kacrice.composite_gauss_legendre(0.0, TOTAL_LENGTH, cfg.grid)
        rho = np.array([kacrice.density_k(K, [xi]).value for xi in x])
        flat = float(np.ptp(rho) / rho.mean())
        I1 = kacrice.integrate_density(K, d, 1, grid=cfg.grid)
        rel = abs(I1.value - np.sqrt(d)) / np.sqrt(d)
        rows.append({"d": d, "k": 1, "integral": I1.value, "target": np.sqrt(d),
                     "relError": rel, "rho": rho.mean(), "seed": cfg.seed})
        rep.check(f"int rho1 d={d}", rel <= DEFAULTS["densityIntegralRtol"], rel,
                  DEFAULTS["densityIntegralRtol"])
        rep.check(f"rho1 flat d={d}", flat <= DEFAULTS["densityFlatRtol"], flat,
                  DEFAULTS["densityFlatRtol"])
        if d >= 2:
            rel2 = far_factorization(K, d, cfg.cprime, DEFAULTS["crossPairs"], cfg.seed)
            rows.append({"d": d, "k": 2, "integral": "", "target": "", "relError": rel2,
                         "rho": "", "seed": cfg.seed})
            rep.check(f"far factorization d={d}", rel2 <= DEFAULTS["farFactorization"], rel2,
                      DEFAULTS["farFactorization"])
        if cfg.kmax >= 2 and d >= 2:
            I2 = kacrice.integrate_density(K, d, 2, grid=cfg.grid)
            rows.append({"d": d, "k": 2, "integral": I2.value, "target": "",
                         "relError": I2.richardson_gap / abs(I2.value), "rho": "", "seed": cfg.seed})
    rep.tables["kacrice"] = rows


def far_factorization(K, d: int, cprime: float, n: int, seed: int) -> float:
    """max |rho2 - rho1^2| / rho1^2 over n random pairs at distance
    >= log d / (c' sqrt d)."""
    rng = np.random.default_rng([seed, d])
    lo = far_diagonal_threshold(d, cprime)
    if lo >= 0.5 * TOTAL_LENGTH:
        raise UsageError(f"cprime: no far pairs exist at d={d}")
    gaps = rng.uniform(lo, 0.5 * TOTAL_LENGTH, n)
    return float(np.max(np.abs(kacrice.pair_excess_gaps(K, gaps))))


def cmd_compare(cfg: RunConfig, rep: RunReport):
    rows = []
    for r in _moment_reports(cfg):
        d = r.degree
        I2 = kacrice.integrate_density(kostlan_kernel(d), d, 2, grid=cfg.grid)
        mc = r.falling[1] if r.kmax >= 2 else float(np.mean(r.counts * (r.counts - 1)))
        mc_se = r.falling_stderr[1] if r.kmax >= 2 else float("nan")
        se = np.hypot(mc_se, I2.richardson_gap)
        z = abs(mc - I2.value) / se
        rows.append({"d": d, "N": r.samples, "mcFalling2": mc, "mcStderr": mc_se,
                     "quadrature": I2.value, "tube": I2.tube_contribution,
                     "quadError": I2.richardson_gap, "z": z, "seed": cfg.seed})
        rep.check(f"bridge d={d}", z <= DEFAULTS["bridgeStderrs"], z, DEFAULTS["bridgeStderrs"])
    rep.tables["compare"] = rows


def cmd_concentration(cfg: RunConfig, rep: RunReport):
    rows = []
    cs = DEFAULTS["concentrationC"]
    per_c = {c: [] for c in cs}
    for d in cfg.degrees:
        counts = empirics.sample_counts(d, cfg.samples, cfg.seed, cfg.threads)
        for c in cs:
            p, se = empirics.deviation_probability(d, cfg.samples, c, counts=counts)
            per_c[c].append(p)
            rows.append({"d": d, "N": cfg.samples, "c": c, "probability": p, "stderr": se,
                         "seed": cfg.seed})
    seq = per_c[0.5]
    rep.check("deviation(c=0.5) decreasing", all(a > b for a, b in zip(seq, seq[1:])), seq,
              "strict")
    rep.tables["concentration"] = rows


def cmd_bergman(cfg: RunConfig, rep: RunReport):
    rows = []
    devs = []
    for d in cfg.degrees:
        R = min(DEFAULTS["bergmanRadius"], np.log(d))
        dev = kernels.bergman_deviation(d, R, DEFAULTS["bergmanGrid"], orders=(0, 1, 2))
        devs.append(dev[0])
        rows.append({"d": d, "radius": R, "deviation0": dev[0], "deviation1": dev[1],
                     "deviation2": dev[2], "seed": cfg.seed})
    rep.check("bergman decreasing", all(a > b for a, b in zip(devs, devs[1:])), devs, "strict")
    rep.tables["bergman"] = rows


def cmd_neardiag(cfg: RunConfig, rep: RunReport):
    rows = []
    rng = np.random.default_rng(cfg.seed)
    for d in cfg.degrees:
        K = kostlan_kernel(d)
        rho1 = kacrice.density_k(K, [0.0]).value
        vals = []
        for eps in DEFAULTS["vanishingEps"]:
            v = multijet.near_diagonal_density(K, [0.0, eps / np.sqrt(d)], d=d).value
            vals.append(v)
            rows.append({"d": d, "test": "vanishing", "eps": eps, "value": v,
                         "reference": rho1 ** 2, "stderr": 0.0, "seed": cfg.seed})
        mono = all(a > b for a, b in zip(vals, vals[1:]))
        small = vals[-1] < DEFAULTS["vanishingFraction"] * rho1 ** 2
        rep.check(f"vanishing d={d}", mono and small, vals, DEFAULTS["vanishingFraction"])
        worst = 0.0
        for i in range(DEFAULTS["crossPairs"]):
            x = rng.uniform(0, TOTAL_LENGTH)
            g = rng.uniform(far_diagonal_threshold(d, cfg.cprime), 0.5 * TOTAL_LENGTH)
            pts = [x, x + g]
            a = multijet.near_diagonal_density(K, pts, d=d, mc_budget=cfg.mcBudget,
                                               rng=np.random.default_rng([cfg.seed, d, i]),
                                               force_mc=True)
            b = kacrice.density_k(K, pts).value
            z = abs(a.value - b) / max(a.stderr, 1e-300)
            worst = max(worst, z)
        rows.append({"d": d, "test": "cross", "eps": "", "value": worst, "reference": "",
                     "stderr": "", "seed": cfg.seed})
        rep.check(f"cross-formulation d={d}", worst <= DEFAULTS["crossStderrs"], worst,
                  DEFAULTS["crossStderrs"])
    rep.tables["neardiag"] = rows


def cmd_fit(cfg: RunConfig, rep: RunReport):
    reps = _moment_reports(cfg)
    rows = []
    fits = {}
    for k in range(1, min(cfg.kmax, 5) + 1):
        try:
            f = empirics.fit_asymptotics(reps, k)
        except empirics.IllConditionedFit as e:
            raise UsageError(f"degrees: {e}") from e
        fits[k] = f
        rows.append({"kind": "fit", "k": k, "a": f.a, "aLow": f.a_ci[0], "aHigh": f.a_ci[1],
                     "b": f.b, "bLow": f.b_ci[0], "bHigh": f.b_ci[1], "seed": cfg.seed})
    for k in range(2, min(cfg.kmax, 5) + 1):
        t = empirics.central_moment_decay(reps, k)
        for d, r, e in zip(t.degrees, t.ratio, t.ratio_stderr):
            rows.append({"kind": "decay", "k": k, "a": int(d), "aLow": "", "aHigh": "",
                         "b": r, "bLow": e, "bHigh": t.slope, "seed": cfg.seed})
        if k == 2:
            last = t.ratio[-2:]
            ok = len(last) == 2 and np.all(last > 0) and abs(last[0] - last[1]) <= \
                DEFAULTS["varianceStableRtol"] * max(abs(last))
            rep.check("variance/sqrt(d) stable", ok, t.ratio, DEFAULTS["varianceStableRtol"])
        if k == 3:
            m = np.array([r.central_true[2] for r in reps]) / np.array([r.degree for r in reps])
            rep.check("third central/d decreasing", all(a > b for a, b in zip(m, m[1:])), m,
                      "strict")
    lo, hi = DEFAULTS["fitA1"]
    rep.check("a1", lo <= fits[1].a <= hi, fits[1].a, DEFAULTS["fitA1"])
    if 2 in fits:
        lo, hi = DEFAULTS["fitA2"]
        rep.check("a2", lo <= fits[2].a <= hi, fits[2].a, DEFAULTS["fitA2"])
        rep.check("C > 0", fits[2].C_ci[0] > 0, fits[2].C_ci, 0)
    if 3 in fits:
        q = fits[3].b / fits[2].b
        lo, hi = DEFAULTS["fitB3overB2"]
        rep.check("b3/b2", lo <= q <= hi, q, DEFAULTS["fitB3overB2"])
    rep.tables["fit"] = rows


def cmd_complex(cfg: RunConfig, rep: RunReport):
    rows = []
    errs = []
    for d in cfg.degrees:
        q = empirics.complex_equidistribution(d, cfg.samples, DEFAULTS["bins"], cfg.seed)
        errs.append(q.cell_error)
        rows.append({"d": d, "N": cfg.samples, "chi2": q.chi2, "pValue": q.p_value,
                     "cellError": q.cell_error, "pairMoment": q.pair_moment,
                     "pairStderr": q.pair_moment_stderr, "pairTarget": q.pair_target,
                     "aborts": q.aborts, "seed": cfg.seed})
        rep.check(f"chi2 d={d}", q.p_value > DEFAULTS["chi2MinP"], q.p_value, DEFAULTS["chi2MinP"])
    if len(errs) > 1:
        rep.check("cell error decreasing", all(a > b for a, b in zip(errs, errs[1:])), errs,
                  "strict")
    rep.tables["complex"] = rows


COMMANDS = {
    "moments": cmd_moments,
    "kacrice": cmd_kacrice,
    "compare": cmd_compare,
    "concentration": cmd_concentration,
    "bergman": cmd_bergman,
    "neardiag": cmd_neardiag,
    "fit": cmd_fit,
    "complex": cmd_complex,
}

DEGREE_DEFAULTS = {
    "moments": [16, 100, 400],
    "kacrice": [4, 25, 100],
    "compare": [50],
    "concentration": [25, 100, 400],
    "bergman": [100, 400, 1600],
    "neardiag": [100],
    "fit": DEFAULTS["degrees"],
    "complex": [50, 200],
}


# --------------------------------------------------------------------------
# output

def to_csv(rows) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    cols = list(rows[0])
    for r in rows[1:]:
        cols += [c for c in r if c not in cols]
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(v) for k, v in r.items()})
    return buf.getvalue()


def _fmt(v):
    v = _plain(v)
    if isinstance(v, float):
        return repr(v)
    return v


def to_json(rep: RunReport, with_time: bool = True) -> str:
    doc = {
        "config": rep.config,
        "version": rep.version,
        "defaults": DEFAULTS,
        "tables": {k: [{c: _plain(v) for c, v in r.items()} for r in rows]
                   for k, rows in rep.tables.items()},
        "checks": [asdict(c) for c in rep.checks],
        "passed": rep.passed,
    }
    if with_time:
        doc["wallTime"] = rep.wall_time
    return json.dumps(doc, indent=2, sort_keys=False)


def to_svg(rows, x: str, y: str, group: str | None = None, width=480, height=320) -> str:
    """Minimal line plot of y against x, one polyline per group value."""
    pts = [(r[group] if group else "", float(r[x]), float(r[y])) for r in rows
           if _num(r.get(x)) and _num(r.get(y))]
    head = f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">'
    if not pts:
        return head + "</svg>\n"
    xs = np.array([p[1] for p in pts])
    ys = np.array([p[2] for p in pts])
    pad = 40
    x0, x1 = xs.min(), xs.max() if xs.max() > xs.min() else xs.min() + 1
    y0, y1 = ys.min(), ys.max() if ys.max() > ys.min() else ys.min() + 1

    def sx(v):
        return pad + (v - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(v):
        return height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    out = [head, f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle" font-size="12">{x}</text>',
           f'<text x="12" y="{height / 2}" font-size="12" transform="rotate(-90 12 {height / 2})">{y}</text>']
    groups = sorted({p[0] for p in pts}, key=str)
    for i, g in enumerate(groups):
        seg = sorted((p[1], p[2]) for p in pts if p[0] == g)
        poly = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in seg)
        c = colors[i % len(colors)]
        out.append(f'<polyline fill="none" stroke="{c}" points="{poly}"/>')
        out += [f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="3" fill="{c}"/>' for a, b in seg]
    out.append("</svg>\n")
    return "\n".join(out)


def _num(v):
    return isinstance(_plain(v), (int, float)) and np.isfinite(float(_plain(v)))


PLOTS = {
    "moments": ("d", "rawMoment", "k"),
    "kacrice": ("d", "integral", "k"),
    "compare": ("d", "quadrature", None),
    "concentration": ("d", "probability", "c"),
    "bergman": ("d", "deviation0", None),
    "neardiag": ("eps", "value", "d"),
    "fit": ("a", "b", "k"),
    "complex": ("d", "cellError", None),
}


# --------------------------------------------------------------------------
# entry point

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _degrees(s: str):
    try:
        return [int(v) for v in s.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad degree list {s!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kostlan", description="Zero-count experiments for Kostlan polynomials.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand")
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.error = p.error  # usage errors exit 1 everywhere
        s.add_argument("--degrees", type=_degrees)
        s.add_argument("--samples", type=int)
        s.add_argument("--kmax", type=int)
        s.add_argument("--seed", type=int)
        s.add_argument("--cprime", type=float)
        s.add_argument("--grid", type=int)
        s.add_argument("--mc-budget", dest="mcBudget", type=int)
        s.add_argument("--out")
        s.add_argument("--format", choices=("csv", "json"))
        s.add_argument("--threads", type=int)
        s.add_argument("--plot", help="write an SVG plot to this path")
        s.add_argument("--config", help="flat JSON object of run settings")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"config: cannot read {path}: {e.strerror}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"config: line {e.lineno} column {e.colno}: {e.msg}")
    if not isinstance(doc, dict):
        raise UsageError("config: top level must be an object")
    for k in doc:
        if k not in CONFIG_FIELDS:
            raise UsageError(f"config: unknown field {k!r}")
    return doc


def make_config(ns: argparse.Namespace) -> RunConfig:
    merged = {"degrees": DEGREE_DEFAULTS[ns.subcommand]}
    if ns.config:
        doc = load_config_file(ns.config)
        if "subcommand" in doc and doc["subcommand"] != ns.subcommand:
            raise UsageError(f"config: subcommand {doc['subcommand']!r} does not match")
        merged.update(doc)
    for k in CONFIG_FIELDS:
        v = getattr(ns, k, None)
        if v is not None:
            merged[k] = v
    merged["subcommand"] = ns.subcommand
    try:
        cfg = RunConfig(**merged)
    except TypeError as e:
        raise UsageError(f"config: {e}")
    return cfg.validate()


def run(cfg: RunConfig) -> RunReport:
    rep = RunReport(asdict(cfg), __version__)
    t0 = time.perf_counter()
    COMMANDS[cfg.subcommand](cfg, rep)
    rep.wall_time = time.perf_counter() - t0
    return rep


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.subcommand is None:
        parser.print_usage(sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = make_config(ns)
        rep = run(cfg)
    except UsageError as e:
        print(f"kostlan: error: {e}", file=sys.stderr)
        return 1
    except (ArithmeticError, np.linalg.LinAlgError, ValueError, RuntimeError) as e:
        print(f"kostlan: numerical failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    if cfg.format == "json":
        text = to_json(rep)
    else:
        text = to_csv(next(iter(rep.tables.values())))
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    if cfg.plot:
        x, y, g = PLOTS[cfg.subcommand]
        Path(cfg.plot).write_text(to_svg(next(iter(rep.tables.values())), x, y, g))
    for c in rep.checks:
        log.info("%s %s value=%s tol=%s", "PASS" if c.passed else "FAIL", c.name, c.value,
                 c.tolerance)
    if not rep.passed:
        failed = ", ".join(c.name for c in rep.checks if not c.passed)
        print(f"kostlan: checks failed: {failed}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
