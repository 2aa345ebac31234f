"""
Command-line interface: ``ndr-stats {pdf,moments,sample,validate,figures}``.

Exit codes: 0 success, 1 validation failure, 2 domain or usage error,
3 special-function convergence failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import __version__, dist, validate
from .dist import FieldParams, GammaPairParams
from .sampling import KINDS, SampleSizeError, SeedSpec, iter_batches
from .specfun import ConvergenceError, DomainError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CONVERGENCE, EXIT_IO = 0, 1, 2, 3, 4

PDF_TARGETS = ("joint-exp", "joint-gamma", "ratio", "ndr")
FIGURES = tuple(range(1, 9))
# default parameters for the figure data
DEFAULT_FIELD = FieldParams(0.7, 0.8)
DEFAULT_K = 12


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    params: GammaPairParams
    parameterization: str
    n: int
    seed: SeedSpec
    bins: int
    output_path: str | None
    output_format: str

    def metadata(self) -> dict:
        p = self.params
        fp = p.field()
        return {
            "version": __version__,
            "parameterization": self.parameterization,
            "k": _num(p.k),
            "sigma": p.sigma,
            "rho": p.rho,
            "sigma_z": fp.sigma_z,
            "rho_z": fp.rho_z,
            "seed": self.seed.seed,
            "stream_id": self.seed.stream_id,
        }


def _num(v):
    return int(v) if float(v).is_integer() else float(v)


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------

def _param_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    g = parent.add_argument_group("model parameters (give sigma/rho or sigma-z/rho-z, not both)")
    g.add_argument("--k", type=float, default=None, help="Gamma shape parameter (default 1)")
    g.add_argument("--sigma", type=float, default=None, help="intensity scale sigma (default 1)")
    g.add_argument("--rho", type=float, default=None, help="intensity correlation rho (default 0)")
    g.add_argument("--sigma-z", type=float, default=None, help="field component std sigma_z")
    g.add_argument("--rho-z", type=float, default=None, help="field correlation rho_z")
    o = parent.add_argument_group("run options")
    o.add_argument("-n", "--n", type=int, default=None, help="sample count")
    o.add_argument("--seed", type=int, default=0, help="root seed (unsigned 64-bit)")
    o.add_argument("--stream-id", type=int, default=0, help="stream identifier")
    o.add_argument("--bins", type=int, default=100, help="histogram bins")
    o.add_argument("--format", choices=("csv", "json"), default="csv", dest="output_format")
    o.add_argument("--out", default=None, help="output path (default stdout)")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parent = _param_parent()
    parser = argparse.ArgumentParser(
        prog="ndr-stats",
        description="Distribution and moments of the normalised dissimilarity ratio |X-Y|/(X+Y) "
                    "for correlated Gamma intensities.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pdf", parents=[parent], help="evaluate a density on a grid")
    p.add_argument("target", choices=PDF_TARGETS)
    p.add_argument("--lo", type=float, default=None, help="grid start (per axis)")
    p.add_argument("--hi", type=float, default=None, help="grid end (per axis)")
    p.add_argument("--points", type=int, default=None, help="grid points (per axis)")

    p = sub.add_parser("moments", parents=[parent], help="NDR moments in all three formulations")
    p.add_argument("--orders", default="0,1,2,3,4", help="comma-separated moment orders")
    p.add_argument("--mc", action="store_true", help="add Monte-Carlo columns")

    p = sub.add_parser("sample", parents=[parent], help="draw seeded samples")
    p.add_argument("kind", choices=KINDS)

    p = sub.add_parser("validate", parents=[parent], help="run the validation suite")
    p.add_argument("--quick", action="store_true", help="N=1e5 with looser thresholds")
    p.add_argument("--perturb-pdf", type=float, default=0.0,
                   help="scale analytic densities by (1 + value) in the fits")

    p = sub.add_parser("figures", parents=[parent], help="write figure data as CSV")
    p.add_argument("which", nargs="*", type=int, help="figure numbers 1-8 (default all)")
    return parser


def resolve_params(args, default_k: float = 1) -> tuple[GammaPairParams, str]:
    intensity = args.sigma is not None or args.rho is not None
    field = args.sigma_z is not None or args.rho_z is not None
    if intensity and field:
        raise UsageError("give either --sigma/--rho or --sigma-z/--rho-z, not both")
    k = args.k if args.k is not None else default_k
    k = _num(k)
    if field:
        fp = FieldParams(args.sigma_z if args.sigma_z is not None else math.sqrt(0.5),
                         args.rho_z if args.rho_z is not None else 0.0)
        return fp.to_gamma(k), "field"
    return GammaPairParams(args.sigma if args.sigma is not None else 1.0,
                           args.rho if args.rho is not None else 0.0, k), "intensity"


def make_config(args, default_k: float = 1, default_n: int = 1_000_000) -> RunConfig:
    params, how = resolve_params(args, default_k)
    n = args.n if args.n is not None else default_n
    if n < 1:
        raise UsageError("--n must be positive")
    return RunConfig(params, how, n, SeedSpec(args.seed, args.stream_id), args.bins, args.out, args.output_format)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


@contextmanager
def _open_out(path: str | None):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def write_table(columns, rows, meta: dict, fmt: str, fh) -> None:
    if fmt == "json":
        doc = {"metadata": meta, "columns": list(columns),
               "rows": [[_jsonable(v) for v in r] for r in rows]}
        json.dump(doc, fh, indent=1)
        fh.write("\n")
        return
    for key, val in meta.items():
        fh.write(f"# {key}: {_fmt(val)}\n")
    fh.write(",".join(columns) + "\n")
    for r in rows:
        fh.write(",".join(_fmt(v) for v in r) + "\n")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_pdf(args) -> int:
    cfg = make_config(args)
    p = cfg.params
    target = args.target
    if target == "ndr":
        lo, hi, pts = 0.0, 1.0, 101
    elif target == "ratio":
        lo, hi, pts = 0.125, 8.0, 64
    else:
        lo, hi, pts = (*validate.joint_range(p), 50)
    lo = args.lo if args.lo is not None else lo
    hi = args.hi if args.hi is not None else hi
    pts = args.points if args.points is not None else pts
    if pts < 1 or not lo <= hi:
        raise UsageError("grid needs --points >= 1 and --lo <= --hi")
    grid = np.linspace(lo, hi, pts)
    meta = cfg.metadata() | {"command": f"pdf {target}", "lo": lo, "hi": hi, "points": pts}
    if target in ("joint-exp", "joint-gamma"):
        fn = dist.joint_pdf_exponential if target == "joint-exp" else dist.joint_pdf_gamma
        x1, x2 = np.meshgrid(grid, grid, indexing="ij")
        f = np.asarray(fn(p, x1, x2))
        rows = list(zip(x1.ravel().tolist(), x2.ravel().tolist(), f.ravel().tolist()))
        columns = ("x1", "x2", "density")
    else:
        fn = dist.ndr_pdf if target == "ndr" else dist.ratio_pdf
        f = np.atleast_1d(fn(p, grid))
        rows = list(zip(grid.tolist(), f.tolist()))
        columns = ("r" if target == "ndr" else "z", "density")
    with _open_out(cfg.output_path) as fh:
        write_table(columns, rows, meta, cfg.output_format, fh)
    return EXIT_OK


def _parse_orders(text: str) -> list[int]:
    try:
        orders = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"--orders must be comma-separated integers, got {text!r}") from None
    if not orders or any(m < 0 for m in orders):
        raise UsageError("--orders needs at least one non-negative integer")
    return orders


def cmd_moments(args) -> int:
    cfg = make_config(args)
    p = cfg.params
    orders = _parse_orders(args.orders)
    meta = cfg.metadata() | {"command": "moments"}
    if args.mc:
        meta["n"] = cfg.n
        reports = validate.moment_table(p, orders, cfg.n, cfg.seed)
        columns = ("m", "analytic_f1", "analytic_f2", "analytic_f3", "mc_estimate", "mc_std_error",
                   "within_4se")
        rows = [(r.m, r.analytic_f1, r.analytic_f2, r.analytic_f3, r.mc_estimate, r.mc_std_error,
                 r.within_tolerance) for r in reports]
    else:
        columns = ("m", "analytic_f1", "analytic_f2", "analytic_f3")
        rows = []
        for m in orders:
            vals = dist.ndr_moments_all(p, m)
            rows.append((m, *(vals[f] for f in dist.Formulation)))
    with _open_out(cfg.output_path) as fh:
        write_table(columns, rows, meta, cfg.output_format, fh)
    return EXIT_OK


SAMPLE_COLUMNS = {
    "complex": ("z1_re", "z1_im", "z2_re", "z2_im"),
    "intensity": ("x1", "x2"),
    "gamma": ("x1", "x2"),
    "ndr": ("d",),
}


def cmd_sample(args) -> int:
    cfg = make_config(args)
    kind = args.kind
    meta = cfg.metadata() | {"command": f"sample {kind}", "n": cfg.n}
    columns = SAMPLE_COLUMNS[kind]
    batches = iter_batches(cfg.params, cfg.n, cfg.seed, kind)
    with _open_out(cfg.output_path) as fh:
        if cfg.output_format == "json":
            fh.write('{"metadata": ' + json.dumps(meta) + ', "columns": ' + json.dumps(list(columns))
                     + ', "rows": [')
            first = True
            for chunk in batches:
                block = np.column_stack(chunk if kind != "ndr" else (chunk,))
                for row in block.tolist():
                    fh.write(("" if first else ",") + json.dumps(row))
                    first = False
            fh.write("]}\n")
        else:
            for key, val in meta.items():
                fh.write(f"# {key}: {_fmt(val)}\n")
            fh.write(",".join(columns) + "\n")
            for chunk in batches:
                block = np.column_stack(chunk if kind != "ndr" else (chunk,))
                np.savetxt(fh, block, fmt="%.17g", delimiter=",")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = make_config(args, default_n=100_000 if args.quick else 1_000_000)
    report = validate.run_validation(n=cfg.n, seed=cfg.seed.seed, quick=args.quick,
                                     perturb_pdf=args.perturb_pdf, bins=cfg.bins)
    doc = report.as_dict()
    doc["metadata"] = {"version": __version__, "command": "validate"}
    with _open_out(cfg.output_path) as fh:
        json.dump(doc, fh, indent=1, default=_jsonable)
        fh.write("\n")
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


def _figure_tables(which, cfg: RunConfig, args) -> dict:
    """Build the tables for the requested figures; shared work is cached."""
    k_gamma = _num(args.k) if args.k is not None else DEFAULT_K
    explicit = any(v is not None for v in (args.sigma, args.rho, args.sigma_z, args.rho_z))
    base = cfg.params if explicit else DEFAULT_FIELD.to_gamma(1)
    seed = cfg.seed
    joint_cache = {}

    def joint(k):
        if k not in joint_cache:
            p = GammaPairParams(base.sigma, base.rho, k)
            joint_cache[k] = validate.joint_density_check(p, 50, cfg.n, SeedSpec(seed.seed, seed.stream_id + 10 + k))
        return joint_cache[k]

    def joint_table(k):
        jc = joint(k)
        xc, yc = jc.x_centers, jc.y_centers
        emp = jc.histogram.counts / (jc.histogram.n_total * jc.histogram.cell_areas)
        rows = [(float(xc[i]), float(yc[j]), float(emp[i, j]), float(jc.analytic[i, j]))
                for i in range(len(xc)) for j in range(len(yc))]
        return validate.Table(("x", "y", "empirical_density", "analytic_density"), rows,
                              {"k": k, "sigma": base.sigma, "rho": base.rho, "n": cfg.n})

    out = {}
    for fig in which:
        if fig == 1:
            t = validate.figure_corr_curve(n=cfg.n, seed=seed, sigma_z=base.field().sigma_z)
        elif fig == 2:
            t = joint_table(1)
        elif fig == 3:
            t = joint_table(k_gamma)
        elif fig == 4:
            rows = []
            for k in (1, k_gamma):
                rows += [(k, *r) for r in joint(k).marginal_x.rows]
            t = validate.Table(("k",) + joint(1).marginal_x.columns, rows,
                               {"sigma": base.sigma, "rho": base.rho, "n": cfg.n})
        elif fig == 5:
            p = GammaPairParams(base.sigma, base.rho, k_gamma)
            fits = validate.histogram_fits(p, cfg.n, SeedSpec(seed.seed, seed.stream_id + 5), cfg.bins)
            rows = []
            for panel, fn in (("ratio", dist.ratio_pdf), ("ndr", dist.ndr_pdf)):
                h, rep = fits[panel]
                centre = np.atleast_1d(fn(p, h.centers))
                rows += [(panel, float(a), float(b), float(c), float(e), float(f))
                         for a, b, c, e, f in zip(h.edges[:-1], h.edges[1:], h.centers, h.density, centre)]
            t = validate.Table(("panel", "bin_lo", "bin_hi", "bin_center", "empirical_density",
                                "analytic_density"), rows, {"k": k_gamma, "sigma": base.sigma, "rho": base.rho,
                                                            "n": cfg.n})
        elif fig == 6:
            band = validate.figure_ndr_vs_rho()
            t = validate.Table(("k", "rho", "mean"), [r[:3] for r in band.rows])
        elif fig == 7:
            t = validate.figure_ndr_vs_rho()
        else:
            t = validate.figure_moments_vs_k()
        out[fig] = t
    return out


FIGURE_NAMES = {
    1: "fig1_correlation",
    2: "fig2_joint_exponential",
    3: "fig3_joint_gamma",
    4: "fig4_marginals",
    5: "fig5_ratio_ndr_hist",
    6: "fig6_ndr_mean_vs_rho",
    7: "fig7_ndr_band_vs_rho",
    8: "fig8_moments_vs_k",
}


def cmd_figures(args) -> int:
    which = args.which or list(FIGURES)
    bad = [w for w in which if w not in FIGURES]
    if bad:
        raise UsageError(f"unknown figure id(s) {bad}; choose from 1-8")
    cfg = make_config(args)
    out_dir = cfg.output_path or "."
    os.makedirs(out_dir, exist_ok=True)
    tables = _figure_tables(sorted(set(which)), cfg, args)
    ext = "json" if cfg.output_format == "json" else "csv"
    for fig, table in tables.items():
        meta = {"version": __version__, "command": f"figures {fig}", "seed": cfg.seed.seed,
                "stream_id": cfg.seed.stream_id} | table.meta
        path = os.path.join(out_dir, f"{FIGURE_NAMES[fig]}.{ext}")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            write_table(table.columns, table.rows, meta, cfg.output_format, fh)
        print(path)
    return EXIT_OK


COMMANDS = {
    "pdf": cmd_pdf,
    "moments": cmd_moments,
    "sample": cmd_sample,
    "validate": cmd_validate,
    "figures": cmd_figures,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConvergenceError as err:
        print(f"error: convergence failure: {err}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except OSError as err:
        print(f"error: I/O failure: {err}", file=sys.stderr)
        return EXIT_IO
    except ValueError as err:
        # DomainError, UsageError, SampleSizeError and invalid seeds
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
