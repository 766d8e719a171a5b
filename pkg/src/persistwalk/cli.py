"""Command-line front end: ``persistwalk {laws,simulate,verify,telegraph}``.

Each command reads a flat JSON config (``--config``) merged with ``key=value``
overrides, validates it, and writes one output file (or stdout). Files start
with ``#`` lines giving the tool version, the full config and the seed; JSON
output carries the same record under ``"meta"``. Nothing time- or
host-dependent is written, so reruns with the same config are byte-identical.

Exit codes: 0 all checks passed, 1 a statistical check rejected, 2 bad config.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__, laws, limits, telegraph, walk
from .errors import HorizonError, ParameterError, QuadratureError, StabilityError
from .itn import ItnParams, itn_ensemble
from .laws import AsymParams

EXIT_OK, EXIT_REJECTED, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


# --- config handling -----------------------------------------------------------------


def parse_override(item: str):
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, raw = item.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"override {item!r} has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def load_config(path, overrides) -> dict:
    cfg = {}
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    for item in overrides:
        k, v = parse_override(item)
        cfg[k] = v
    return cfg


class Cfg:
    """Typed access to a flat config dict; records which keys were consumed."""

    def __init__(self, data: dict):
        self.data = dict(data)
        self.used = set()

    def _get(self, key, default):
        self.used.add(key)
        if key in self.data:
            return self.data[key]
        if default is _REQUIRED:
            raise ConfigError(f"missing required key {key!r}")
        return default

    def num(self, key, default=None):
        v = self._get(key, _REQUIRED if default is None else default)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{key!r} must be a number, got {v!r}")
        v = float(v)
        if not math.isfinite(v):
            raise ConfigError(f"{key!r} must be finite")
        return self._store(key, v)

    def int(self, key, default=None):
        v = self._get(key, _REQUIRED if default is None else default)
        if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
            raise ConfigError(f"{key!r} must be an integer, got {v!r}")
        return self._store(key, int(v))

    def sign(self, key, default=-1):
        v = self.int(key, default)
        if v not in (-1, 1):
            raise ConfigError(f"{key!r} must be -1 or +1")
        return v

    def nums(self, key, default=None):
        v = self._get(key, _REQUIRED if default is None else default)
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            v = [v]
        if not isinstance(v, list) or not v or any(isinstance(e, bool) or not isinstance(e, (int, float)) for e in v):
            raise ConfigError(f"{key!r} must be a number or a nonempty list of numbers")
        return self._store(key, [float(e) for e in v])

    def str(self, key, choices, default=None):
        v = self._get(key, _REQUIRED if default is None else default)
        if v not in choices:
            raise ConfigError(f"{key!r} must be one of {list(choices)}, got {v!r}")
        return self._store(key, v)

    def raw(self, key, default=None):
        return self._store(key, self._get(key, _REQUIRED if default is None else default))

    def _store(self, key, v):
        self.data[key] = v
        return v

    def finish(self):
        extra = sorted(set(self.data) - self.used)
        if extra:
            raise ConfigError(f"unknown config keys: {', '.join(extra)}")
        return {k: self.data[k] for k in sorted(self.data)}


_REQUIRED = object()


# --- output ------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _header_lines(command, meta):
    return [
        f"# persistwalk {__version__}",
        f"# command: {command}",
        f"# config: {json.dumps(meta['config'], sort_keys=True)}",
        f"# seed: {meta['seed']}",
    ] + [f"# {line}" for line in meta.get("notes", [])]


def render_csv(command, meta, columns, rows) -> str:
    buf = io.StringIO()
    for line in _header_lines(command, meta):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def render_json(command, meta, payload) -> str:
    doc = {"meta": {"tool": "persistwalk", "version": __version__, "command": command, **meta}, "data": payload}
    return json.dumps(limits._plain(doc), indent=2, sort_keys=True) + "\n"


def _table_payload(columns, rows):
    return {"columns": list(columns), "rows": [[limits._plain(v) for v in row] for row in rows]}


def emit(text: str, out):
    if out and out != "-":
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- commands ------------------------------------------------------------------------


def cmd_laws(cfg: Cfg):
    query = cfg.str("query", ("density", "transform", "parity", "mgf"), "density")
    if query == "mgf":
        a, b, y0 = cfg.num("alpha"), cfg.num("beta"), cfg.sign("y0")
        lam = cfg.num("lam", 1.0)
        t_max = cfg.int("t_max", 10)
        rows = [(t, laws.mgf_phi(lam, t, a, b, y0), laws.expected_x(t, a, b, y0)) for t in range(t_max + 1)]
        notes = ["phi(t) = E[lam^X_t] for the two-state persistent walk; expected_x = E[X_t]"]
        return ("t", "phi", "expected_x"), rows, notes
    params = ItnParams(cfg.num("c0"), cfg.num("c1"))
    if query == "density":
        t = cfg.num("t")
        nx = cfg.int("n_x", 201)
        if nx < 2:
            raise ConfigError("n_x must be at least 2")
        x = np.linspace(-t, t, nx)
        atom, dens = laws.marginal_density(params, t, x)
        trap = float(np.sum(0.5 * (dens[1:] + dens[:-1]) * np.diff(x)))
        notes = [
            "density of Z_t: atom exp(-c0 t) at x = t plus the Bessel (I0, I1) density on (-t, t)",
            f"atom: {_fmt(atom)}",
            f"trapezoid mass + atom: {_fmt(trap + atom)}",
        ]
        return ("x", "density"), list(zip(x, dens)), notes
    if query == "transform":
        t = cfg.num("t")
        mus = cfg.nums("mu", [0.0, 0.5, 1.0])
        rows = []
        for mu in mus:
            le, lo = laws.laplace_parts(params, t, mu)
            rows.append((mu, le, lo, laws.laplace_full(params, t, mu)))
        return ("mu", "even_part", "odd_part", "laplace"), rows, ["E[exp(-mu Z_t)] split by the parity of N_t"]
    ts = cfg.nums("t", [0.0, 0.5, 1.0, 2.0])
    rows = []
    for t in ts:
        pe, po = laws.parity_probs(params, t)
        rows.append((t, pe, po, laws.mean_z(params, t)))
    return ("t", "p_even", "p_odd", "mean_z"), rows, ["parity probabilities of N_t and E[Z_t]"]


def cmd_simulate(cfg: Cfg, seed: int, n_paths: int):
    model = cfg.str("model", ("walk", "itn"), "walk")
    if n_paths < 0:
        raise ConfigError("--paths must be nonnegative")
    if model == "walk":
        ap = AsymParams(cfg.num("alpha0"), cfg.num("beta0"), cfg.num("c0", 0.0), cfg.num("c1", 0.0), cfg.num("r", 1.0))
        dx = cfg.num("dx", 0.0)
        wp = limits.build_pi_delta(ap, dx, cfg.sign("y0"))
        steps = [int(s) for s in cfg.nums("steps")]
        if any(s < 0 for s in steps):
            raise ConfigError("steps must be nonnegative")
        columns = ("path", "step", "x")
        if n_paths == 0:
            return columns, [], []
        ens = walk.order1_ensemble(wp, max(steps), steps, n_paths, seed)
        rows = [(i, s, ens.x[i, j]) for i in range(n_paths) for j, s in enumerate(steps)]
        return columns, rows, [f"alpha = {_fmt(wp.alpha)}, beta = {_fmt(wp.beta)}"]
    params = ItnParams(cfg.num("c0"), cfg.num("c1"))
    ts = cfg.nums("t")
    columns = ("path", "t", "z", "n")
    if n_paths == 0:
        return columns, [], []
    ens = itn_ensemble(params, ts, n_paths, seed)
    rows = [(i, t, ens.z[i, j], ens.n[i, j]) for i in range(n_paths) for j, t in enumerate(ts)]
    means = ", ".join(f"E[Z_{_fmt(t)}] = {_fmt(laws.mean_z(params, t))}" for t in ts)
    return columns, rows, [means]


def _regime_report(cfg: Cfg, seed: int, n_paths: int) -> limits.RegimeReport:
    regime = cfg.str("regime", limits.REGIMES + ("ORDER2_MARKOV",))
    level = cfg.num("level", limits.DEFAULT_LEVEL)
    if not (0 < level < 1):
        raise ConfigError("level must lie in (0, 1)")
    if regime == "ITN":
        return limits.run_itn_regime(
            cfg.num("c0", 1.0), cfg.num("c1", 2.0), cfg.num("dx", 0.005), cfg.nums("t_grid", [0.5, 1.0]), n_paths, seed,
            y0=cfg.sign("y0"), level=level,
        )
    if regime in ("LLN", "CLT"):
        defaults = {"LLN": (0.2, 0.6, 0.01), "CLT": (0.5, 0.5, 0.01)}[regime]
        ap = AsymParams(cfg.num("alpha0", defaults[0]), cfg.num("beta0", defaults[1]), cfg.num("c0", 0.0), cfg.num("c1", 0.0), cfg.num("r", 1.0))
        common = dict(y0=cfg.sign("y0"), dx_ladder=tuple(cfg.nums("dx_ladder", [0.04, 0.02, 0.01])), level=level)
        dx, t_grid = cfg.num("dx", defaults[2]), cfg.nums("t_grid", [0.5, 1.0])
        if regime == "LLN":
            return limits.run_lln_regime(ap, dx, t_grid, n_paths, seed, **common)
        scale = cfg.num("reference_variance_scale", 1.0)
        if not scale > 0:
            raise ConfigError("reference_variance_scale must be positive")
        return limits.run_clt_regime(ap, dx, t_grid, n_paths, seed, reference_variance_scale=scale, **common)
    if regime == "CUBIC":
        t_grid = cfg.nums("t_grid", [0.5, 1.0, 2.0])
        return limits.run_cubic_regime(
            cfg.num("c0", -1.0), cfg.num("r", 1.0), cfg.num("dx", 0.05), t_grid, n_paths, seed,
            y0=cfg.sign("y0"), ks_times=cfg.nums("ks_times", [1.0] if 1.0 in t_grid else t_grid), level=level,
        )
    if regime == "KSTATE":
        kp = walk.KStateParams(
            tuple(cfg.nums("values", [-1.0, 0.0, 1.0])),
            cfg.raw("c", [[0.0, 1.0, 0.5], [0.8, 0.0, 1.2], [0.5, 1.5, 0.0]]),
            cfg.num("delta_t", 0.005),
        )
        return limits.run_kstate_regime(kp, cfg.nums("t_grid", [0.5, 1.0]), n_paths, seed, start=cfg.int("start", 0), level=level)
    c0, c1, dt = cfg.num("c0", 1.0), cfg.num("c1", 2.0), cfg.num("delta_t", 0.005)
    t_grid = cfg.nums("t_grid", [0.5, 1.0])
    if regime == "ORDER2_MARKOV":
        return limits.run_order2_markov_control(c0, c1, dt, t_grid, n_paths, seed, level=level)
    op = walk.Order2Params(c0, c1, cfg.num("p0", 0.7), cfg.num("p1", 0.4), dt)
    start = [int(v) for v in cfg.nums("start", [-1, -1])]
    if len(start) != 2 or any(v not in (-1, 1) for v in start):
        raise ConfigError("start must be a pair of -1/+1 values")
    return limits.run_order2_regime(op, start, t_grid, n_paths, seed, level=level)


def cmd_telegraph(cfg: Cfg, seed: int, n_paths: int):
    mode = cfg.str("mode", ("compare", "convergence"), "compare")
    k, a, c = cfg.num("k", 2.0), cfg.num("a", 1.0), cfg.num("c", 1.5)
    if mode == "convergence":
        t_end = cfg.num("t", 1.0)
        sizes = [int(v) for v in cfg.nums("nx", [32, 64, 128, 256])]
        errs = [telegraph.fd_plane_wave_error(k, a, c, t_end, n) for n in sizes]
        order = telegraph.observed_order(errs, sizes)
        return ("nx", "max_error"), list(zip(sizes, errs)), [f"observed order: {_fmt(order)}"]
    t = cfg.num("t", 1.0)
    xs = cfg.nums("x", [0.0, 0.25, 0.5, 0.75, 1.0])
    f = telegraph.InitialData.plane_wave(k, a)
    if n_paths < 2:
        raise ConfigError("--paths must be at least 2 for the Monte Carlo column")
    est, se = telegraph.mc_telegraph(f, a, c, np.array(xs), t, n_paths, seed)
    g = telegraph.plane_wave_oracle(k, a, c, t)
    nx = cfg.int("fd_nx", 256)
    length = 2.0 * math.pi / abs(k) if k != 0 else 1.0
    if t > 0:
        dxg = length / nx
        nt = max(1, int(math.ceil(t / (cfg.num("courant", 0.5) * dxg / a))))
        sol = telegraph.fd_telegraph(f, a, c, telegraph.FdGrid(0.0, length, nx, t / nt, nt))
        fd = np.interp(np.mod(xs, length), np.append(sol.x, length), np.append(sol.w[-1], sol.w[-1][0]))
    else:
        fd = f(np.array(xs))
    rows = [(x, f(x), est[i], se[i], math.cos(k * x) * g, fd[i]) for i, x in enumerate(xs)]
    return ("x", "f", "mc", "mc_se", "closed_form", "fd"), rows, [f"temporal factor g(t) = {_fmt(g)}"]


# --- entry point ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="persistwalk", description="Persistent random walks, telegraph noise and their scaling limits.")
    p.add_argument("--version", action="version", version=f"persistwalk {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "laws": "tabulate densities, transforms, parity masses or walk generating functions",
        "simulate": "write walk or telegraph-noise samples",
        "verify": "run a scaling-regime check and write its report",
        "telegraph": "compare Monte Carlo, closed-form and finite-difference telegraph solutions",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text, description=text)
        sp.add_argument("--config", metavar="PATH", help="flat JSON config file")
        sp.add_argument("--seed", type=int, default=None, help="master seed (unsigned 64-bit)")
        sp.add_argument("--paths", type=int, default=None, help="number of sample paths")
        sp.add_argument("--out", metavar="PATH", default=None, help="output file (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default=None)
        sp.add_argument("overrides", nargs="*", metavar="key=value", help="config overrides (values parsed as JSON)")
    return p


_DEFAULT_PATHS = {"laws": 0, "simulate": 1000, "verify": 10_000, "telegraph": 100_000}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        raw = load_config(args.config, args.overrides)
        # flags win over config keys of the same name
        seed = args.seed if args.seed is not None else raw.pop("seed", 20260114)
        n_paths = args.paths if args.paths is not None else raw.pop("paths", _DEFAULT_PATHS[args.command])
        fmt = args.format or raw.pop("format", "json" if args.command == "verify" else "csv")
        raw.pop("seed", None), raw.pop("paths", None), raw.pop("format", None)
        if isinstance(seed, bool) or not isinstance(seed, int) or not (0 <= seed < 2**64):
            raise ConfigError("seed must be an integer in [0, 2^64)")
        if isinstance(n_paths, bool) or not isinstance(n_paths, int):
            raise ConfigError("paths must be an integer")
        if fmt not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        cfg = Cfg(raw)
        status = EXIT_OK
        if args.command == "verify":
            report = _regime_report(cfg, seed, n_paths)
            config = cfg.finish()
            meta = {"config": config, "seed": seed, "n_paths": n_paths}
            if fmt == "json":
                text = render_json("verify", meta, report.to_dict())
            else:
                rows = [(t.name, "" if t.t is None else t.t, t.kind, t.statistic, "" if t.p_value is None else t.p_value, t.threshold, t.passed, t.reference) for t in report.tests]
                text = render_csv("verify", meta, ("test", "t", "kind", "statistic", "p_value", "threshold", "passed", "reference"), rows)
            if not report.passed:
                status = EXIT_REJECTED
                print("rejected: " + ", ".join(report.failing()), file=sys.stderr)
        else:
            if args.command == "laws":
                columns, rows, notes = cmd_laws(cfg)
            elif args.command == "simulate":
                columns, rows, notes = cmd_simulate(cfg, seed, n_paths)
            else:
                columns, rows, notes = cmd_telegraph(cfg, seed, n_paths)
            config = cfg.finish()
            meta = {"config": config, "seed": seed, "n_paths": n_paths, "notes": notes}
            if fmt == "json":
                text = render_json(args.command, meta, _table_payload(columns, rows))
            else:
                text = render_csv(args.command, meta, columns, rows)
        emit(text, args.out)
        return status
    except (ConfigError, ParameterError, HorizonError, StabilityError, QuadratureError) as exc:
        print(f"persistwalk: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
