"""Command-line entry point: ``brownmeasure <command> [options]``.

Every command writes CSV with a header row (floats with 17 significant
digits) to ``--out`` or stdout. ``BROWNMEASURE_THREADS`` caps the BLAS
thread count; it must be set before numpy is first imported, which is why
it is read at the top of this module.
"""
from __future__ import annotations

import os

_threads = os.environ.get("BROWNMEASURE_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse  # noqa: E402
import csv  # noqa: E402
import json  # noqa: E402
import sys  # noqa: E402
from contextlib import contextmanager  # noqa: E402

import numpy as np  # noqa: E402

from . import closed_forms as cf  # noqa: E402
from . import matrixlab as ml  # noqa: E402
from .errors import BrownMeasureError  # noqa: E402
from .measures import (  # noqa: E402
    AtomicMeasure,
    NamedDensity,
    fk_determinant,
    lambda_bounds,
    log_fk_determinant,
    log_plus_integral,
    measure_to_json,
    moment,
    parse_measure,
    quantile_discretize,
)

FLOAT_FMT = "%.17g"
DEFAULT_ATOMS = 10_000


def _fmt(v) -> str:
    if isinstance(v, (complex, np.complexfloating)):
        return f"{FLOAT_FMT % v.real}{'+' if v.imag >= 0 else '-'}{FLOAT_FMT % abs(v.imag)}j"
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % v
    return str(v)


@contextmanager
def _sink(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _write_csv(fh, header, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])


def parse_grid(spec: str) -> np.ndarray:
    """``a,b,c`` (list), ``a:b:n`` (linear) or ``log:a:b:n`` (geometric)."""
    spec = spec.strip()
    if spec.startswith("log:"):
        a, b, n = spec[4:].split(":")
        return np.geomspace(float(a), float(b), int(n))
    if ":" in spec:
        a, b, n = spec.split(":")
        return np.linspace(float(a), float(b), int(n))
    return np.array([float(v) for v in spec.split(",") if v.strip()])


def _complex_list(spec: str) -> np.ndarray:
    return np.array([complex(v.strip().replace(" ", "")) for v in spec.split(",") if v.strip()])


def _load_measure(args, need_atomic: bool = False):
    mu = parse_measure(args.measure)
    if need_atomic and isinstance(mu, NamedDensity):
        mu = quantile_discretize(mu, args.atoms)
    return mu


# -- commands -------------------------------------------------------------------


def cmd_measure(args) -> int:
    mu = _load_measure(args, need_atomic=args.discretize)
    with _sink(args.out) as fh:
        if args.atoms_csv:
            if not isinstance(mu, AtomicMeasure):
                mu = quantile_discretize(mu, args.atoms)
            _write_csv(fh, ["t", "weight"], zip(mu.nodes, mu.weights))
            return 0
        b = lambda_bounds(mu)
        rows = [
            ("kernel_mass", mu.kernel_mass),
            ("lambda1", b.lambda1),
            ("lambda2", b.lambda2),
            ("fk_determinant", fk_determinant(mu)),
            ("log_plus_integral", log_plus_integral(mu)),
        ]
        for k in parse_grid(args.moments) if args.moments else []:
            rows.append((f"moment[{k:g}]", moment(mu, k)))
        if args.json:
            fh.write(json.dumps(measure_to_json(mu)) + "\n")
            return 0
        _write_csv(fh, ["quantity", "value"], rows)
    return 0


def cmd_transform(args) -> int:
    from .transforms import evaluate

    mu = _load_measure(args, need_atomic=args.discretize)
    pts = _complex_list(args.at) if args.kind == "cauchy" else parse_grid(args.at)
    res = evaluate(args.kind, mu, pts)
    with _sink(args.out) as fh:
        _write_csv(fh, ["argument", "value", "domain_tag"], [(p.argument, p.value, p.domain_tag) for p in res])
    return 0


def cmd_brown(args) -> int:
    from .rdiag import SubordinationContext, radial_cdf, radial_density

    mu = parse_measure(args.measure)
    if isinstance(mu, NamedDensity) and (args.discretize or mu.family != "abs_z_pow_n"):
        mu = quantile_discretize(mu, args.atoms)
    ctx = SubordinationContext(mu)
    rbm = radial_cdf(ctx)
    radii = parse_grid(args.r) if args.r else np.geomspace(0.01, 100.0, 41)
    header = {
        "kernel_mass": rbm.kernel_mass,
        "inner_radius": rbm.inner_radius,
        "outer_radius": rbm.outer_radius,
        "fk_determinant": fk_determinant(mu),
    }
    rows = []
    for r in radii:
        pdf, planar = radial_density(rbm, r)
        rows.append((r, rbm.cdf(r), pdf, planar))
    with _sink(args.out) as fh:
        fh.write("# " + json.dumps({k: float(v) for k, v in header.items()}) + "\n")
        _write_csv(fh, ["r", "F", "radial_pdf", "planar_density"], rows)
    return 0


def cmd_fkdet(args) -> int:
    from .rdiag import SubordinationContext, log_delta_shifted

    mu = _load_measure(args, need_atomic=args.discretize)
    with _sink(args.out) as fh:
        if not args.lam:
            _write_csv(fh, ["fk_determinant", "log_fk_determinant"], [(fk_determinant(mu), log_fk_determinant(mu))])
            return 0
        ctx = SubordinationContext(mu)
        rows = []
        for lam in _complex_list(args.lam):
            a = abs(lam)
            regime = "ii" if a <= ctx.lambda1 else ("iii" if a >= ctx.lambda2 else "i")
            ld = log_delta_shifted(ctx, lam)
            rows.append((lam, regime, float(np.exp(ld)) if ld > -np.inf else 0.0, ld))
        _write_csv(fh, ["lambda", "regime", "delta", "log_delta"], rows)
    return 0


def cmd_closed(args) -> int:
    n = args.n
    with _sink(args.out) as fh:
        if args.what == "lp":
            ps = parse_grid(args.p) if args.p else np.array([0.5 * 2.0 / (n + 1)])
            _write_csv(fh, ["p", "norm_pow_p", "norm"], [(p, cf.lp_norm_zn_pow(n, p), cf.lp_norm_zn(n, p)) for p in ps])
            return 0
        if args.what == "cauchy":
            lam = _complex_list(args.grid or "-1")
            _write_csv(fh, ["lambda", "G"], [(v, complex(cf.g_abs_zn_sq(v, n))) for v in lam])
            return 0
        x = parse_grid(args.grid or "log:0.01:100:41")
        if args.what == "density":
            _write_csv(fh, ["t", "density", "cdf"], zip(x, cf.abs_zn_density(x, n), cf.abs_zn_cdf(x, n)))
        elif args.what == "brown":
            _write_csv(fh, ["r", "planar_density", "radial_cdf"], zip(x, cf.brown_zn_density(x, n), cf.brown_zn_radial_cdf(x, n)))
        elif args.what == "h":
            _write_csv(fh, ["s", "h"], zip(x, cf.h_n(x, n)))
    return 0


def cmd_simulate(args) -> int:
    rows = []
    for trial in range(args.trials):
        if args.ensemble == "ginibre":
            a = ml.ginibre(args.n, args.seed, trial)
            ev = ml.eigenvalues(a).values
            sv = ml.singular_values(a).values
        else:
            x, y = ml.spherical_matrix(args.n, args.seed, trial)
            import scipy.linalg as sla

            ev = sla.eigvals(x, y)
            sv = sla.svdvals(sla.solve(y.T, x.T).T)
        ev = ev[np.lexsort((ev.imag, ev.real))]
        rows += [(trial, "eig_re", v) for v in ev.real]
        rows += [(trial, "eig_im", v) for v in ev.imag]
        rows += [(trial, "singular", v) for v in sv]
    with _sink(args.out) as fh:
        _write_csv(fh, ["trial", "kind", "value"], rows)
    return 0


def _load_matrix(path: str) -> np.ndarray:
    with open(path) as fh:
        obj = json.load(fh)
    if isinstance(obj, dict):
        re = np.asarray(obj["real"], dtype=float)
        im = np.asarray(obj.get("imag", np.zeros_like(re)), dtype=float)
        return re + 1j * im
    arr = np.asarray(obj, dtype=float)
    if arr.ndim == 3 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    return arr.astype(complex)


def cmd_brown_matrix(args) -> int:
    a = _load_matrix(args.matrix)
    box = tuple(float(v) for v in args.box.split(",")) if args.box else None
    grid = ml.brown_laplacian(a, box, args.resolution, args.eps, negative_tolerance=args.neg_tol)
    xs, ys = grid.centers()
    rows = ((x, y, grid.masses[j, i]) for j, y in enumerate(ys) for i, x in enumerate(xs))
    with _sink(args.out) as fh:
        _write_csv(fh, ["x", "y", "mass"], rows)
    print(
        f"total mass {grid.total_mass:.6f}, eps {grid.eps:.3g}, "
        f"clipped {grid.clipped} cells ({grid.clipped_mass:.2e})",
        file=sys.stderr,
    )
    return 0


def cmd_verify(args) -> int:
    from .acceptance import run_all

    tier = "full" if args.full else "quick"
    only = {int(v) for v in args.only.split(",")} if args.only else None
    print(f"acceptance suite, tier={tier}")
    results = run_all(tier, only=only, echo=print)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed" + (f"; failed: {failed}" if failed else ""))
    return 1 if failed else 0


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="brownmeasure", description="Brown measures of R-diagonal operators.")
    sub = p.add_subparsers(dest="command", required=True)

    def add_measure(sp):
        sp.add_argument("--measure", required=True, help="named:<family>[:n], inline JSON, or a JSON file")
        sp.add_argument("--atoms", type=int, default=DEFAULT_ATOMS, help="atoms used to discretise a named density")
        sp.add_argument("--discretize", action="store_true", help="discretise named densities by quantiles")

    def add_out(sp):
        sp.add_argument("--out", default=None, help="output file (default stdout)")

    sp = sub.add_parser("measure", help="summary quantities of a measure on [0, inf)")
    add_measure(sp)
    add_out(sp)
    sp.add_argument("--moments", default=None, help="moment exponents (grid spec)")
    sp.add_argument("--atoms-csv", action="store_true", help="write the (discretised) atoms instead")
    sp.add_argument("--json", action="store_true", help="write the measure as JSON")
    sp.set_defaults(func=cmd_measure)

    sp = sub.add_parser("transform", help="psi, chi, S or Cauchy transform")
    add_measure(sp)
    add_out(sp)
    sp.add_argument("--kind", choices=["psi", "chi", "s", "cauchy"], required=True)
    sp.add_argument("--at", required=True, help="arguments (grid spec; complex list for cauchy); write --at=-0.5 for negatives")
    sp.set_defaults(func=cmd_transform)

    sp = sub.add_parser("brown", help="radial Brown measure of the R-diagonal T with given |T|")
    add_measure(sp)
    add_out(sp)
    sp.add_argument("--r", default=None, help="radii (grid spec)")
    sp.set_defaults(func=cmd_brown)

    sp = sub.add_parser("fkdet", help="Fuglede-Kadison determinant, optionally of T - lambda")
    add_measure(sp)
    add_out(sp)
    sp.add_argument("--lam", default=None, help="comma-separated complex shifts")
    sp.set_defaults(func=cmd_fkdet)

    sp = sub.add_parser("closed", help="closed forms for z^n, z = x y^-1")
    add_out(sp)
    sp.add_argument("--family", choices=["zn"], default="zn")
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--what", choices=["density", "brown", "lp", "cauchy", "h"], required=True)
    sp.add_argument("--grid", default=None, help="evaluation points (grid spec; complex list for cauchy)")
    sp.add_argument("--p", default=None, help="exponents for --what lp")
    sp.set_defaults(func=cmd_closed)

    sp = sub.add_parser("simulate", help="sample Ginibre or spherical matrices")
    add_out(sp)
    sp.add_argument("--ensemble", choices=["ginibre", "spherical"], required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("brown-matrix", help="Brown measure of a matrix on a grid")
    add_out(sp)
    sp.add_argument("--matrix", required=True, help="JSON: nested [re, im] pairs or {'real': .., 'imag': ..}")
    sp.add_argument("--box", default=None, help="x0,x1,y0,y1 (write --box=-2,2,-2,2)")
    sp.add_argument("--resolution", type=int, default=256)
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--neg-tol", type=float, default=ml.NEGATIVE_MASS_TOL)
    sp.set_defaults(func=cmd_brown_matrix)

    sp = sub.add_parser("verify", help="run the acceptance criteria")
    tier = sp.add_mutually_exclusive_group()
    tier.add_argument("--quick", action="store_true", help="N <= 128 (default)")
    tier.add_argument("--full", action="store_true", help="stated sizes, N <= 512")
    sp.add_argument("--only", default=None, help="comma-separated criterion numbers")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = args.func(args)
        sys.stdout.flush()
        return code
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    except (BrownMeasureError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
