"""Command-line entry point.

Every output file starts with a header holding the schema tag, the package
version and the full resolved configuration, so a run can be repeated from
its own output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import subprocess
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

EXIT_OK, EXIT_GATE, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3
OUTPUT_ENV = "CUSPFLOW_OUTPUT_DIR"
SCHEMA_VERSION = 1
COMMANDS = ("verify", "eisenstein", "loglaw", "dm", "orbit", "borel-cantelli")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    n: int = 2
    seed: int = 0
    exact: bool = False
    s: float = 2.5
    N: int = 20
    quad_points: int = 64
    window: float = 1.5
    max_terms: int = 10_000
    m: list[int] = field(default_factory=lambda: [0, 1, 2])
    samples: int = 200
    T: float = 1e5
    stride: float = 1.0
    eps: float = 0.1
    L: int = 10
    output: str | None = None
    format: str = "json"
    threads: int = 1
    stamp_time: bool = False

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.n < 2:
            raise UsageError("n must be at least 2")
        if self.command == "verify" and self.n > 5:
            raise UsageError("verify supports 2 <= n <= 5")
        if self.command != "verify" and self.n != 2:
            raise UsageError("lattice computations are implemented for n = 2 (PSL(2, Z[i]))")
        if not 0 <= self.seed < 2**64:
            raise UsageError("seed must be a 64-bit unsigned integer")
        if self.format not in ("json", "csv"):
            raise UsageError("format must be json or csv")
        if self.samples < 1 or self.T < 10 or self.stride <= 0 or self.threads < 1:
            raise UsageError("samples >= 1, T >= 10, stride > 0 and threads >= 1 are required")
        if not 0 < self.eps < 1:
            raise UsageError("eps must lie in (0, 1)")
        if self.command == "eisenstein" and not 2 < self.s <= 3:
            raise UsageError("s must lie in (2, 3]")


def version_string() -> str:
    """git-describe output when run from a checkout, else the package version."""
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=here,
            capture_output=True,
            text=True,
            timeout=5,
            check=True,
        )
        return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        return __version__


# ----------------------------------------------------------------------------
# argument handling


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float(text: str) -> float:
    return float(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cuspflow", description="Hyperbolic lattice computations and cusp-excursion statistics.")
    parser.add_argument("--version", action="version", version=f"cuspflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
        p.add_argument("--seed", type=int)
        p.add_argument("--output", "-o", help="output file (default: stdout)")
        p.add_argument("--format", choices=["json", "csv"])
        p.add_argument("--threads", type=int)
        p.add_argument("--stamp-time", action="store_true", default=None, help="embed wall-clock time (breaks byte identity)")
        p.add_argument("--n", type=int)

    p = sub.add_parser("verify", help="exact and numeric identity batteries")
    common(p)
    p.add_argument("--exact", action="store_true", default=None, help="rational arithmetic only")

    p = sub.add_parser("eisenstein", help="constant terms and C(s) cross-check")
    common(p)
    p.add_argument("--s", type=_float)
    p.add_argument("--N", type=int)
    p.add_argument("--m", type=_int_list)
    p.add_argument("--quad-points", type=int, dest="quad_points")
    p.add_argument("--window", type=_float)
    p.add_argument("--max-terms", type=int, dest="max_terms")

    p = sub.add_parser("loglaw", help="log-law statistic over Haar samples")
    common(p)
    p.add_argument("--samples", type=int)
    p.add_argument("--T", type=_float)
    p.add_argument("--stride", type=_float)

    p = sub.add_parser("dm", help="membership rates for the sets D_m")
    common(p)
    p.add_argument("--m", type=_int_list)
    p.add_argument("--samples", type=int)
    p.add_argument("--eps", type=_float)

    p = sub.add_parser("orbit", help="cusp-distance trajectory of one Haar sample")
    common(p)
    p.add_argument("--T", type=_float)
    p.add_argument("--stride", type=_float)

    p = sub.add_parser("borel-cantelli", help="shrinking-target hit counters")
    common(p)
    p.add_argument("--samples", type=int)
    p.add_argument("--T", type=_float)
    p.add_argument("--eps", type=_float)
    p.add_argument("--L", type=int)
    return parser


DEFAULTS = {
    "dm": {"m": [10, 20, 40, 80], "samples": 4000, "eps": 0.1},
    "orbit": {"T": 1000.0, "format": "csv"},
    "borel-cantelli": {"samples": 100, "eps": 0.5},
    "loglaw": {"samples": 200, "T": 1e5},
}


def resolve_config(argv: list[str] | None) -> RunConfig:
    parser = build_parser()
    ns = parser.parse_args(argv)  # SystemExit(2) on bad flags, handled in main
    values = dict(DEFAULTS.get(ns.command, {}))
    if ns.config:
        try:
            loaded = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        known = set(RunConfig.__dataclass_fields__)
        unknown = set(loaded) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        values.update(loaded)
    for key, val in vars(ns).items():
        if key in ("config",) or val is None:
            continue
        values[key] = val
    values["command"] = ns.command
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


# ----------------------------------------------------------------------------
# commands


def cmd_verify(cfg: RunConfig) -> tuple[int, dict]:
    from . import lie

    reports = [lie.verify_commutator_table(cfg.n), lie.verify_root_spaces(cfg.n), lie.verify_raising_weights(cfg.n)]
    out = {"exact": [{"name": r.name, "n": r.n, "checked": r.checked, "violations": len(r.violations), "passed": r.passed} for r in reports]}
    ok = all(r.passed for r in reports)
    if not cfg.exact:
        numeric = _numeric_battery(cfg)
        out["numeric"] = numeric
        ok = ok and all(item["passed"] for item in numeric)
    out["passed"] = ok
    return (EXIT_OK if ok else EXIT_GATE), out


def _numeric_battery(cfg: RunConfig) -> list[dict]:
    from . import harmonics, lie, vahlen

    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    worst = 0.0
    for _ in range(10):
        theta = np.concatenate([rng.uniform(0.3, math.pi - 0.3, n - 1), rng.uniform(0.3, 2 * math.pi - 0.3, 1)])
        g = vahlen.vahlen_mul(vahlen.make_u(n, list(rng.normal(size=n))), vahlen.make_a(n, float(rng.normal())))
        g = vahlen.vahlen_mul(g, vahlen.k_from_sphere(vahlen.cartesian_from_angles(theta)))
        got = lie.numeric_coefficients(g)
        want = lie.closed_form_coefficients(lie.theta_coords(g))
        for key in want:
            for a, b in zip(got[key], want[key]):
                worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    quad = harmonics.quadrature_for(n, 4)
    x = quad.points
    norms = harmonics.degree_projection_norms(x[:, 0] ** 2, 4, quad)
    total = float(quad.integrate(x[:, 0] ** 4))
    return [
        {"name": "derivative coefficients", "max_rel_err": worst, "passed": worst <= 1e-5},
        {"name": "Parseval closure", "defect": abs(norms.sum() - total), "passed": abs(norms.sum() - total) <= 1e-10},
    ]


def cmd_eisenstein(cfg: RunConfig) -> tuple[int, dict]:
    from . import eisenstein as eis

    trunc = eis.TruncationParams(N=cfg.N, quad_points=cfg.quad_points, window=cfg.window, max_terms=cfg.max_terms)
    cosets = eis.coset_count(cfg.N)
    if cosets > cfg.max_terms:
        raise eis.BudgetExceeded(f"{cosets} cosets exceed max_terms = {cfg.max_terms}")
    records = [eis.estimate_C(cfg.s, m, trunc).to_record() for m in cfg.m]
    vals = [r["C_truncated"] for r in records]
    spread = max(abs(a - b) / max(abs(a), abs(b)) for a in vals for b in vals) if vals else 0.0
    ok = spread <= 0.02 and all(r["fit_residual"] <= 1e-3 for r in records)
    return (EXIT_OK if ok else EXIT_GATE), {
        "records": records,
        "pairwise_max_rel_diff": spread,
        "C_closed_form": eis.scattering_exact(cfg.s),
        "cosets": cosets,
        "passed": ok,
    }


def cmd_loglaw(cfg: RunConfig) -> tuple[int, dict]:
    from .excursion import loglaw_statistic

    summary = loglaw_statistic(cfg.samples, cfg.T, cfg.seed, cfg.stride)
    rec = summary.to_record()
    rec["target"] = 1 / cfg.n
    return EXIT_OK, {"summary": rec, "values": [float(v) for v in summary.values]}


def cmd_dm(cfg: RunConfig) -> tuple[int, dict]:
    from .excursion import DmSpec, estimate_sigma_Ym
    from .picard import haar_batch

    lifts = haar_batch(np.random.default_rng(cfg.seed), cfg.samples).g
    rows = []
    for m in cfg.m:
        spec = DmSpec(m, cfg.eps)
        est = estimate_sigma_Ym(spec, cfg.samples, cfg.seed, lifts=lifts).to_record()
        est["volume_closed_form"] = spec.volume()
        rows.append(est)
    return EXIT_OK, {"estimates": rows}


def cmd_borel_cantelli(cfg: RunConfig) -> tuple[int, dict]:
    from .excursion import borel_cantelli_counts
    from .picard import haar_batch

    T = int(cfg.T)
    horizons = sorted({max(cfg.L, T // 10), max(cfg.L, T // 2), T})
    g = haar_batch(np.random.default_rng(cfg.seed), cfg.samples).g
    out = {"horizons": horizons}
    for sign, label in ((1, "plus"), (-1, "minus")):
        counts = borel_cantelli_counts(g, cfg.eps, sign, cfg.L, horizons)
        out[label] = counts.tolist()
    return EXIT_OK, out


def cmd_orbit(cfg: RunConfig) -> tuple[int, list]:
    from .excursion import haar_sample, orbit_excursion

    x0 = haar_sample(cfg.seed)
    series = orbit_excursion(x0, cfg.T, cfg.stride)
    return EXIT_OK, list(series.rows(0, cfg.seed))


HANDLERS = {
    "verify": cmd_verify,
    "eisenstein": cmd_eisenstein,
    "loglaw": cmd_loglaw,
    "dm": cmd_dm,
    "orbit": cmd_orbit,
    "borel-cantelli": cmd_borel_cantelli,
}


# ----------------------------------------------------------------------------
# output


def _header(cfg: RunConfig) -> dict:
    head = {"schema": f"cuspflow/{cfg.command}/{SCHEMA_VERSION}", "version": version_string(), "config": asdict(cfg)}
    if cfg.stamp_time:
        head["wall_clock"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    return head


def render(cfg: RunConfig, result) -> str:
    head = _header(cfg)
    if cfg.format == "json":
        return json.dumps({**head, "result": result}, indent=2, sort_keys=True, default=_plain) + "\n"
    buf = io.StringIO()
    buf.write(f"# {json.dumps(head, sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    if isinstance(result, list):
        writer.writerow(["sample_id", "seed", "t", "cusp_dist", "running_ratio"])
        writer.writerows(result)
    else:
        writer.writerow(["key", "value"])
        for key, val in sorted(_flatten(result).items()):
            writer.writerow([key, val])
    return buf.getvalue()


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _flatten(obj, prefix=""):
    out = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            out.update(_flatten(v, f"{prefix}{k}."))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            out.update(_flatten(v, f"{prefix}{i}."))
    else:
        out[prefix.rstrip(".")] = obj
    return out


def output_path(cfg: RunConfig) -> Path | None:
    if cfg.output is None:
        return None
    path = Path(cfg.output)
    override = os.environ.get(OUTPUT_ENV)
    if override and not path.is_absolute():
        path = Path(override) / path
    return path


def main(argv: list[str] | None = None) -> int:
    from .eisenstein import BudgetExceeded

    try:
        cfg = resolve_config(argv)
    except UsageError as exc:
        print(f"cuspflow: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse: --help, --version or bad flags
        return EXIT_USAGE if exc.code else EXIT_OK
    except TypeError as exc:  # malformed config value
        print(f"cuspflow: bad config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        code, result = HANDLERS[cfg.command](cfg)
    except BudgetExceeded as exc:
        print(f"cuspflow: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    text = render(cfg, result)
    path = output_path(cfg)
    if path is None:
        sys.stdout.write(text)
    else:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
        except OSError as exc:
            print(f"cuspflow: cannot write {path}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    return code


if __name__ == "__main__":
    raise SystemExit(main())
