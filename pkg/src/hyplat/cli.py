"""Command-line experiments.

Usage:
    hyplat enumerate --X 1.5                         orbit CSV for SL(2,Z) at i
    hyplat equidist --config exp.json                 equidistribution report
    hyplat theorem3 --z0 0,2 --z1 0,1 --w 0,1 --X 1e5 --bins 8
    hyplat qdist --z1 1,1

Every subcommand reads an optional JSON config; command-line flags override
its fields.  Exit codes: 2 invalid configuration, 3 element budget exceeded,
1 any other failure.  Output files are written atomically.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import angular, density, lattice
from .halfplane import GeometryError, Point

EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    """17 significant digits; integers verbatim."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


@dataclass
class ExperimentConfig:
    group: dict = field(default_factory=lambda: {"kind": "SL2Z", "N": None})
    points: dict = field(default_factory=lambda: {"z0": [0.0, 1.0], "z1": [0.0, 1.0], "w": [0.0, 1.0]})
    thresholds: list = field(default_factory=lambda: [1000.0])
    interval: dict = field(default_factory=lambda: {"start": 0.0, "length": 0.25})
    bins: int = 8
    n_max: int = 3
    M: int = 50
    budget: int = lattice.DEFAULT_BUDGET
    threads: int = 0
    s_values: list = field(default_factory=lambda: [1.1])
    radii: list = field(default_factory=lambda: [5.0, 10.0, 15.0, 20.0])
    n_angles: int = 16
    samples: int = 64
    output: dict = field(default_factory=lambda: {"format": "json", "path": None})

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        base = cls()
        merged = {}
        for k, v in data.items():
            default = getattr(base, k)
            merged[k] = {**default, **v} if isinstance(default, dict) and isinstance(v, dict) else v
        cfg = replace(base, **merged)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    # ------------------------------------------------------------------

    def point(self, name: str) -> Point:
        try:
            x, y = self.points[name]
            return Point(float(x), float(y))
        except (GeometryError, TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"invalid point {name}: {exc}") from exc

    def group_spec(self) -> lattice.GroupSpec:
        try:
            return lattice.make_group(self.group.get("kind", "SL2Z"), self.group.get("N"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def angle_interval(self) -> angular.AngleInterval:
        try:
            return angular.AngleInterval(float(self.interval["start"]), float(self.interval["length"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid interval: {exc}") from exc

    @property
    def workers(self) -> int:
        return self.threads if self.threads > 0 else (os.cpu_count() or 1)

    def validate(self):
        for name in ("z0", "z1", "w"):
            self.point(name)
        self.group_spec()
        self.angle_interval()
        if not self.thresholds or any(not isinstance(X, (int, float)) or not X >= 1 for X in self.thresholds):
            raise ConfigError(f"thresholds must be numbers >= 1, got {self.thresholds}")
        for name in ("bins", "n_max", "M", "budget", "n_angles", "samples"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < (0 if name == "n_max" else 1):
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if not isinstance(self.threads, int) or self.threads < 0:
            raise ConfigError(f"threads must be >= 0, got {self.threads!r}")
        if any(not s > 1 for s in self.s_values):
            raise ConfigError(f"s values must exceed 1, got {self.s_values}")
        if self.output.get("format") not in ("csv", "json"):
            raise ConfigError(f"output format must be csv or json, got {self.output.get('format')!r}")


# --------------------------------------------------------------------------
# output helpers


def _table_text(header: list[str], rows: list[list], fmt_kind: str) -> str:
    if fmt_kind == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
        return buf.getvalue()
    recs = [dict(zip(header, r)) for r in rows]
    return _json_text({"columns": header, "rows": recs})


def _json_value(o, indent: int) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(o, dict):
        if not o:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_value(v, indent + 1)}" for k, v in o.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(o, (list, tuple)):
        if not o:
            return "[]"
        items = [f"{pad}{_json_value(v, indent + 1)}" for v in o]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if o is None or isinstance(o, (bool, str)):
        return json.dumps(o)
    if isinstance(o, (int, np.integer)):
        return str(int(o))
    f = float(o)
    if not math.isfinite(f):
        return "null"
    return fmt(f)


def _json_text(obj) -> str:
    """JSON with every float at 17 significant digits."""
    return _json_value(obj, 0) + "\n"


class _Sink:
    """Collects output in a temp file next to the target; renamed only on success."""

    def __init__(self, path):
        self.path = path
        self._tmp = None
        self.fh = None

    def __enter__(self):
        if self.path in (None, "-"):
            self.fh = sys.stdout
            return self.fh
        d = os.path.dirname(os.path.abspath(self.path))
        fd, self._tmp = tempfile.mkstemp(prefix=".hyplat-", dir=d)
        self.fh = os.fdopen(fd, "w", newline="")
        return self.fh

    def __exit__(self, exc_type, exc, tb):
        if self._tmp is None:
            return False
        self.fh.close()
        if exc_type is None:
            os.replace(self._tmp, self.path)
        else:
            os.unlink(self._tmp)
        return False


# --------------------------------------------------------------------------
# commands


def _lattice_query(cfg: ExperimentConfig, X: float) -> lattice.BallQuery:
    return lattice.BallQuery.lattice(cfg.group_spec(), cfg.point("z0"), cfg.point("z1"), X)


def cmd_enumerate(cfg: ExperimentConfig, out):
    q = _lattice_query(cfg, max(cfg.thresholds))
    out.write("a,b,c,d,cosh_dist,omega\n")
    n = 0
    for batch in lattice.iter_batches(q, budget=cfg.budget, threads=cfg.workers):
        lines = [
            f"{a},{b},{c},{d},{fmt(ch)},{fmt(om)}\n"
            for a, b, c, d, ch, om in zip(batch.a.tolist(), batch.b.tolist(), batch.c.tolist(),
                                          batch.d.tolist(), batch.cosh_dist.tolist(), batch.omega.tolist())
        ]
        out.write("".join(lines))
        n += len(batch)
    mt = lattice.main_term(q)
    print(f"N={n} main_term={fmt(mt)} ratio={fmt(n / mt)}", file=sys.stderr)


def cmd_equidist(cfg: ExperimentConfig, out):
    q = _lattice_query(cfg, max(cfg.thresholds))
    batches = lattice.iter_batches(q, budget=cfg.budget, threads=cfg.workers)
    report = angular.equidistribution_report(batches, cfg.thresholds, cfg.angle_interval(), q.group,
                                             q.center.as_tuple(), q.base.as_tuple())
    out.write(_json_text(report.to_dict()))


def cmd_density(cfg: ExperimentConfig, out):
    p = density.DensityParams(cfg.point("z0"), cfg.point("z1"))
    grid = np.arange(cfg.samples) / cfg.samples
    rows = [[float(w), float(density.rho(p, w)), float(density.eta(p, 2 * math.pi * w)),
             float(density.k_theta(p, w))] for w in grid]
    out.write(_table_text(["omega", "rho", "eta", "k"], rows, cfg.output["format"]))


def cmd_theorem3(cfg: ExperimentConfig, out):
    rep = density.theorem3_report(cfg.group_spec(), cfg.point("z0"), cfg.point("z1"), cfg.point("w"),
                                  max(cfg.thresholds), cfg.bins, budget=cfg.budget, threads=cfg.workers)
    out.write(_json_text(rep.to_dict()))


def cmd_theorem2(cfg: ExperimentConfig, out):
    rep = density.theorem2_report(cfg.group_spec(), cfg.point("z0"), cfg.point("z1"),
                                  max(cfg.thresholds), cfg.bins, budget=cfg.budget, threads=cfg.workers)
    out.write(_json_text(rep.to_dict()))


def _nested_sums(cfg: ExperimentConfig, n_values, weight=None):
    """Per threshold: (N, sums) where sums[n] folds e(n*omega)*weight over the X-ball."""
    thresholds = sorted(cfg.thresholds)
    q = _lattice_query(cfg, thresholds[-1])
    acc = {X: [0, np.zeros(len(n_values), dtype=complex)] for X in thresholds}
    for batch in lattice.iter_batches(q, budget=cfg.budget, threads=cfg.workers):
        for X in thresholds:
            sub = batch.take(lattice.inside_mask(q, X, batch.a, batch.b, batch.c, batch.d, batch.cosh_dist))
            if not len(sub):
                continue
            acc[X][0] += len(sub)
            for j, n in enumerate(n_values):
                acc[X][1][j] += weight(sub, n) if weight else angular.exponential_sum(sub, n)
    return q, acc


def cmd_expsum(cfg: ExperimentConfig, out):
    ns = list(range(cfg.n_max + 1))
    _, acc = _nested_sums(cfg, ns)
    rows = []
    for X, (N, sums) in acc.items():
        for n, S in zip(ns, sums):
            rows.append([X, n, N, abs(S), abs(S) / N if N else 0.0])
    out.write(_table_text(["X", "n", "N", "abs_S", "ratio"], rows, cfg.output["format"]))


def cmd_gseries(cfg: ExperimentConfig, out):
    ns = list(range(cfg.n_max + 1))
    group = cfg.group_spec()
    rows = []
    for s in cfg.s_values:
        def weight(sub, n, s=s):
            return angular.g_series_partial(sub, n, s, 1.0, group, tail=False)
        _, acc = _nested_sums(cfg, ns, weight)
        for X, (N, sums) in acc.items():
            for n, G in zip(ns, sums):
                if n == 0:
                    G += group.kappa * 2 * math.pi / group.covolume * X ** (1.0 - s) / (s - 1.0)
                rows.append([s, n, X, G.real, G.imag, (s - 1.0) * abs(G)])
    out.write(_table_text(["s", "n", "X", "re_G", "im_G", "scaled_abs"], rows, cfg.output["format"]))


def cmd_qdist(cfg: ExperimentConfig, out):
    p = density.DensityParams(cfg.point("z0"), cfg.point("z1"))
    z1 = p.z1_conj
    rows = []
    for R in cfg.radii:
        for j in range(cfg.n_angles):
            t = -math.pi + 2 * math.pi * j / cfg.n_angles
            try:
                qe = density.sector_radius_exact(z1, t, R)
            except GeometryError as exc:
                raise ConfigError(str(exc)) from exc
            qa = density.sector_radius_asymptotic(p, t, R)
            rows.append([R, t, qe, qa, abs(math.exp(qe) - math.exp(qa))])
    out.write(_table_text(["R", "t", "Q_exact", "Q_asymptotic", "gap"], rows, cfg.output["format"]))


COMMANDS = {
    "enumerate": (cmd_enumerate, "stream the orbit ball as CSV"),
    "equidist": (cmd_equidist, "sector-count equidistribution report"),
    "density": (cmd_density, "sample rho, eta and k on an omega grid"),
    "theorem3": (cmd_theorem3, "directed angle histogram against rho"),
    "theorem2": (cmd_theorem2, "line-angle histogram against eta"),
    "expsum": (cmd_expsum, "exponential sums |S_n| per threshold"),
    "gseries": (cmd_gseries, "tail-corrected (s-1) G_n"),
    "qdist": (cmd_qdist, "exact vs asymptotic sector-boundary distance"),
}


def _pair(text: str) -> list[float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected x,y but got {text!r}")
    return [float(v) for v in parts]


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyplat", description="Angular statistics of hyperbolic lattices.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--group", choices=["SL2Z", "GammaN"])
        p.add_argument("--N", type=int, help="level of Gamma(N)")
        p.add_argument("--z0", type=_pair)
        p.add_argument("--z1", type=_pair)
        p.add_argument("--w", type=_pair)
        p.add_argument("--X", type=_floats, help="cosh thresholds, comma separated")
        p.add_argument("--interval", type=_pair, help="start,length")
        p.add_argument("--bins", type=int)
        p.add_argument("--n-max", type=int, dest="n_max")
        p.add_argument("--M", type=int)
        p.add_argument("--budget", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--s", type=_floats, dest="s_values")
        p.add_argument("--radii", type=_floats)
        p.add_argument("--n-angles", type=int, dest="n_angles")
        p.add_argument("--samples", type=int)
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--out", help="output path (default stdout)")
    return parser


def config_from_args(args) -> ExperimentConfig:
    data: dict = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
    data = dict(data)
    group = dict(data.get("group", {}))
    if args.group:
        group["kind"] = args.group
    if args.N is not None:
        group["N"] = args.N
        group.setdefault("kind", "GammaN")
    if group:
        data["group"] = group
    points = dict(data.get("points", {}))
    for name in ("z0", "z1", "w"):
        if getattr(args, name) is not None:
            points[name] = getattr(args, name)
    if points:
        data["points"] = points
    if args.X is not None:
        data["thresholds"] = args.X
    if args.interval is not None:
        data["interval"] = {"start": args.interval[0], "length": args.interval[1]}
    for name in ("bins", "n_max", "M", "budget", "threads", "s_values", "radii", "n_angles", "samples"):
        if getattr(args, name) is not None:
            data[name] = getattr(args, name)
    output = dict(data.get("output", {}))
    if args.format:
        output["format"] = args.format
    elif args.command in ("enumerate",):
        output["format"] = "csv"
    if args.out:
        output["path"] = args.out
    if output:
        data["output"] = output
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ConfigError, GeometryError, ValueError, TypeError) as exc:
        print(f"hyplat: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"hyplat: {exc}", file=sys.stderr)
        return EXIT_IO
    func = COMMANDS[args.command][0]
    try:
        with _Sink(cfg.output.get("path")) as out:
            func(cfg, out)
    except lattice.BudgetExceeded as exc:
        print(f"hyplat: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, GeometryError) as exc:
        print(f"hyplat: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"hyplat: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
