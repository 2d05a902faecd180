"""Command line runner for the verification suites.

Exit status: 0 all checks pass, 1 some check failed, 2 configuration error,
3 numerical machinery failure (convergence, conditioning, sampling).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from . import identities as ids
from .errors import ConfigError, NumericalError
from .indexing import composition_count
from .params import (check_alpha, check_generic, check_restricted, jackson_ratios, load, sample_generic,
                     sample_restricted, sample_zone_template, to_dict, to_json)
from .qseries import PRECISION_ENV, Truncation, default_precision, phi_series_with_bound, qpoch_inf

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
SUITES = ids.SUITES
MAX_COMPOSITIONS = 20
SUITE_TOL = {"asymptotics": 1e-3, "onedim": 1e-8, "biorthogonality": 1e-8}

_COMPLEX = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?([+-](\d+\.?\d*|\.\d+)([eE][+-]?\d+)?i)?$|"
                      r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?i$")


def parse_complex(text: str) -> complex:
    """Parse "re", "re+imi", "re-imi" or "imi"."""
    s = text.strip()
    if not _COMPLEX.match(s):
        raise ConfigError(f"malformed complex literal {text!r}; use re+imi, e.g. 0.5-0.25i")
    return complex(s[:-1] + "j") if s.endswith("i") else complex(float(s))


def _complex_arg(text):
    try:
        return parse_complex(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _bounds_arg(text):
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bounds must be comma-separated integers, got {text!r}") from None


@dataclass
class RunConfig:
    suites: list[str]
    ns: list[int]
    ells: list[int]
    seeds: list[int]
    tol: float | None = None
    shell_max: int = 80
    tail_tol: float = 1e-15
    precision: str = field(default_factory=default_precision)
    fmt: str = "json"
    out: str | None = None
    params_path: str | None = None
    bounds: tuple | None = None
    draws: int = 100
    workers: int = 1
    max_compositions: int = MAX_COMPOSITIONS

    def __post_init__(self):
        for s in self.suites:
            if s not in SUITES:
                raise ConfigError(f"unknown suite {s!r}; choose from {', '.join(SUITES)} or all")
        if self.fmt not in ("json", "csv"):
            raise ConfigError("format must be json or csv")
        for n in self.ns:
            for ell in self.ells:
                if n < 1 or ell < 0:
                    raise ConfigError(f"need n >= 1 and ell >= 0, got ({n}, {ell})")
                if composition_count(n, ell) > self.max_compositions:
                    raise ConfigError(f"(n, ell) = ({n}, {ell}) has {composition_count(n, ell)} compositions, "
                                      f"cap is {self.max_compositions}")

    def truncation(self) -> Truncation:
        return Truncation(series_tail_tol=self.tail_tol, jackson_shell_max=self.shell_max, precision=self.precision)


def _default_bounds(n, ell):
    return tuple([max(ell - 1, 1)] + [ell] * (n - 1))


def _params_for(suite, n, ell, seed, cfg: RunConfig):
    if cfg.params_path:
        return load(cfg.params_path)
    if suite == "asymptotics":
        return sample_zone_template(n, ell, seed)
    if suite == "restricted":
        return sample_restricted(n, ell, cfg.bounds or _default_bounds(n, ell), seed)
    if suite == "onedim":
        return sample_generic(n, 1, seed)
    return sample_generic(n, ell, seed)


def _run_one(task):
    suite, n, ell, seed, cfg = task
    trunc = cfg.truncation()
    tol = cfg.tol if cfg.tol is not None else SUITE_TOL.get(suite, ids.DEFAULT_TOL)
    record = {"suite": suite, "n": n, "ell": ell, "seed": seed}
    try:
        ps = _params_for(suite, n, ell, seed, cfg)
    except NumericalError as exc:
        rep = ids.CheckReport(suite, "-", float("inf"), float("inf"), tol, error=f"{type(exc).__name__}: {exc}")
        record.update(rep.to_dict(), parameters=None)
        return record
    record.update(n=ps.n, ell=ps.ell)
    if suite == "riemann":
        rep = ids.verify_riemann(ps, trunc, tol=tol)
    elif suite == "biorthogonality":
        rep = ids.verify_biorthogonality(ps, trunc, tol=tol)
    elif suite == "determinants":
        rep = ids.verify_determinants(ps, trunc, tol=tol, seed=seed)
    elif suite == "qkz":
        rep = ids.verify_qkz(ps, trunc, tol=tol, seed=seed)
    elif suite == "asymptotics":
        rep = ids.verify_asymptotics(ps, trunc=trunc, tol=tol)
    elif suite == "restricted":
        bounds = ps.restricted_bounds or cfg.bounds or _default_bounds(ps.n, ps.ell)
        rep = ids.verify_restricted(ps, bounds, trunc, tol=tol)
    else:
        rep = ids.verify_onedim(ps, trunc, tol=tol, series_draws=cfg.draws, seed=seed)
    record.update(rep.to_dict())
    record["parameters"] = to_dict(ps)
    return record


def _tasks(cfg: RunConfig):
    out = []
    for suite in cfg.suites:
        ells = [1] if suite == "onedim" else cfg.ells
        for n in cfg.ns:
            for ell in ells:
                if suite == "restricted" and ell < 2 and cfg.bounds is None and not cfg.params_path:
                    continue
                if suite == "onedim" and cfg.params_path is None and n < 2:
                    continue
                for seed in cfg.seeds:
                    out.append((suite, n, ell, seed, cfg))
    if cfg.params_path:
        # loaded parameters fix n and ell, so one task per suite and seed
        seen, uniq = set(), []
        for t in out:
            if (t[0], t[3]) not in seen:
                seen.add((t[0], t[3]))
                uniq.append(t)
        out = uniq
    return out


def run(cfg: RunConfig) -> tuple[int, list[dict]]:
    tasks = _tasks(cfg)
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            records = list(pool.map(_run_one, tasks))
    else:
        records = [_run_one(t) for t in tasks]
    records.sort(key=lambda r: (r["check_name"], r["n"], r["ell"], r["seed"]))
    if any(r.get("error") for r in records):
        status = EXIT_NUMERIC
    elif all(r["pass"] for r in records):
        status = EXIT_OK
    else:
        status = EXIT_FAIL
    return status, records


CSV_FIELDS = ["check_name", "suite", "n", "ell", "seed", "parameters_digest", "max_abs_residual", "max_rel_residual",
              "tol", "pass", "skipped", "elapsed", "error", "details", "per_entry_residuals", "parameters"]
_NESTED = ("details", "per_entry_residuals", "parameters")


def render(records: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(records, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in records:
        row = {k: r.get(k) for k in CSV_FIELDS}
        for k in _NESTED:
            row[k] = json.dumps(row[k], sort_keys=True)
        w.writerow(row)
    return buf.getvalue()


def read_csv_records(text: str) -> list[dict]:
    """Inverse of the CSV rendering, used to check that both formats carry the same content."""
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        r = dict(row)
        for k in _NESTED:
            r[k] = json.loads(r[k])
        for k in ("n", "ell", "seed"):
            r[k] = int(r[k])
        for k in ("max_abs_residual", "max_rel_residual", "tol", "elapsed"):
            r[k] = float(r[k])
        for k in ("pass", "skipped"):
            r[k] = r[k] == "True"
        r["error"] = r["error"] or None
        out.append(r)
    return out


# ---------------------------------------------------------------- subcommands


def _cmd_verify(args) -> int:
    suites = list(SUITES) if args.suite == "all" else [args.suite]
    cfg = RunConfig(suites, args.n, args.ell, args.seed, args.tol, args.shell_max, args.tail_tol,
                    args.precision or default_precision(), args.format, args.out, args.params, args.bounds,
                    args.draws, args.workers)
    status, records = run(cfg)
    text = render(records, cfg.fmt)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
        npass = sum(r["pass"] for r in records)
        print(f"{npass}/{len(records)} checks passed; report written to {cfg.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return status


def _cmd_eval_phi(args) -> int:
    trunc = Truncation(series_tail_tol=args.tail_tol, precision=args.precision or default_precision())
    val, bound = phi_series_with_bound(args.a, args.b or [], args.p, args.z, trunc)
    val = complex(val)
    print(f"value {val.real:.17g}{val.imag:+.17g}i")
    print(f"tail_estimate {bound:.3g}")
    if len(args.a) == 1 and not args.b:
        # 1phi0(a;;z) = (a z)_inf / (z)_inf
        ref = complex(qpoch_inf(args.a[0] * args.z, args.p, trunc) / qpoch_inf(args.z, args.p, trunc))
        print(f"pochhammer_ratio {ref.real:.17g}{ref.imag:+.17g}i")
        print(f"difference {abs(ref - val):.3g}")
    return EXIT_OK


def _cmd_sample(args) -> int:
    if args.restricted:
        ps = sample_restricted(args.n, args.ell, args.restricted, args.seed)
    elif args.zone:
        ps = sample_zone_template(args.n, args.ell, args.seed)
    else:
        ps = sample_generic(args.n, args.ell, args.seed)
    text = to_json(ps) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_check(args) -> int:
    ps = load(args.params)
    bounds = ps.restricted_bounds
    viol = check_restricted(ps, bounds) if bounds else check_generic(ps)
    viol += check_alpha(ps)
    out = {
        "digest": ps.digest(),
        "mode": "restricted" if bounds else "generic",
        "violations": [{"condition": v.condition, "value": [v.value.real, v.value.imag], "distance": v.distance}
                       for v in viol],
        "jackson_ratios": jackson_ratios(ps) if ps.ell > 0 else {},
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK if not viol else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qhyper", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def trunc_flags(p):
        p.add_argument("--shell-max", type=int, default=80, help="cap on total Jackson shift")
        p.add_argument("--tail-tol", type=float, default=1e-15, help="relative tail tolerance of series and sums")
        p.add_argument("--precision", choices=["double", "extended"], default=None,
                       help=f"arithmetic precision (default from ${PRECISION_ENV}, else double)")

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("--suite", choices=list(SUITES) + ["all"], default="all")
    v.add_argument("--n", type=int, nargs="+", default=[2])
    v.add_argument("--ell", type=int, nargs="+", default=[1])
    v.add_argument("--seed", type=int, nargs="+", default=[0])
    v.add_argument("--tol", type=float, default=None, help="tolerance (default depends on the suite)")
    v.add_argument("--format", choices=["json", "csv"], default="json")
    v.add_argument("--out", default=None)
    v.add_argument("--params", default=None, help="parameter file used verbatim instead of sampling")
    v.add_argument("--bounds", type=_bounds_arg, default=None, help="restricted bounds, e.g. 1,2")
    v.add_argument("--draws", type=int, default=100, help="random draws for the series identities")
    v.add_argument("--workers", type=int, default=1)
    trunc_flags(v)
    v.set_defaults(func=_cmd_verify)

    e = sub.add_parser("eval-phi", help="evaluate a basic hypergeometric series")
    e.add_argument("--a", type=_complex_arg, nargs="+", required=True)
    e.add_argument("--b", type=_complex_arg, nargs="*", default=[])
    e.add_argument("--p", type=_complex_arg, required=True)
    e.add_argument("--z", type=_complex_arg, required=True)
    trunc_flags(e)
    e.set_defaults(func=_cmd_eval_phi)

    s = sub.add_parser("sample-params", help="draw a parameter set and print it as JSON")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--ell", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--restricted", type=_bounds_arg, default=None, help="bounds l_1,...,l_n")
    g.add_argument("--zone", action="store_true", help="coefficients for the asymptotic path")
    s.add_argument("--out", default=None)
    s.set_defaults(func=_cmd_sample)

    c = sub.add_parser("check-params", help="list violated conditions of a parameter file")
    c.add_argument("--params", required=True)
    c.set_defaults(func=_cmd_check)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"qhyper: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"qhyper: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
