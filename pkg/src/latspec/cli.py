"""Command-line front end.

Exit codes: 0 success, 1 internal error or failed check, 2 hypotheses not
met (an expected negative result), 64 usage error, 65 malformed
specification (the JSON pointer of the offending field goes to stderr).
"""
from __future__ import annotations

import argparse
import copy
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import HypothesisError, InsufficientSpectrumError, SpecError

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_HYPOTHESIS = 2
EXIT_USAGE = 64
EXIT_SPEC = 65

COMMANDS = {
    "spectrum": "Eigenvalues outside the band [-2nu, 2nu] of a finite truncation "
                "(exact counting behind the bound-state theorems).",
    "oscillate": "Bound-state counts by sign changes of the band-edge solution "
                 "(oscillation theorem); --lambda-grid sweeps the coupling.",
    "certify": "Positive-Delta certificates from the variational trial pair; with "
               "--essential-a, certificates at the edge of the essential spectrum.",
    "compare-v2": "V^2 comparison theorem: bound states of H0 + V^2/(4nu) force bound states of H0 + V.",
    "bargmann": "Bargmann-type bound: sum n|V(n)| <= 1 forbids bound states on the half-line.",
    "infinitude": "Criteria for infinitely many bound states under slow decay, "
                  "with counts along a truncation ladder.",
    "moments": "Divergence of eigenvalue moments sum (|E| - 2)^gamma for V ~ C n^-alpha.",
    "greens": "Lattice Green function table at the band edge (build, cache, export).",
    "bs": "Birman-Schwinger counterexample: a sparse positive potential without bound "
          "states in three or more dimensions.",
    "examples": "Closed-form examples: single-site and dipole thresholds, the staircase "
                "potential, the alternating borderline potential.",
    "scoreboard": "Every quantitative check in one report.",
}

EXAMPLES = {"single-site": "single_site", "dipole": "dipole", "example-5.4": "staircase",
            "altex": "alternating"}

SWEEP_PARAMS = {"single-site": "lambda", "dipole": "lambda", "alternating": "beta", "power-law": "C",
                "periodic-sites": "a"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass
class RunConfig:
    """Validated description of one CLI invocation."""

    command: str
    potential_spec: object = None  # path, inline JSON text, or mapping
    truncations: list = field(default_factory=list)
    tolerance: float = 1e-8
    output: str = "-"
    format: str | None = None
    seed: int = 0
    workers: int = 1
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: v for k, v in d.items() if v is not None}

    def validate(self) -> None:
        from .schemas import validate

        validate(self.to_dict(), "run_config")
        if any(b <= a for a, b in zip(self.truncations, self.truncations[1:])):
            raise SpecError("truncations must be increasing", "/truncations")

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise SpecError(f"cannot read config: {exc}", "") from None
        except json.JSONDecodeError as exc:
            raise SpecError(f"config is not JSON: {exc}", "") from None
        from .schemas import validate

        validate(data, "run_config")
        return cls(**data)


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("potential")
    g.add_argument("--spec", help="potential specification: a JSON file path or inline JSON")
    g.add_argument("--family", help="potential family (alternative to --spec)")
    g.add_argument("--domain", help="half_line:N, whole_line:N, whole_line:N1:N2 or box:AxB[xC]")
    g.add_argument("--n0", help="site of a single-site or dipole potential (comma separated in nu > 1)")
    g.add_argument("--lambda", dest="lam", type=float, help="coupling")
    g.add_argument("--beta", type=float)
    g.add_argument("--C", dest="C", type=float, help="amplitude of a power law")
    g.add_argument("--alpha", type=float, help="decay exponent")
    g.add_argument("--alternate", action="store_true", help="alternate the sign of a power law")
    g.add_argument("--N", dest="N", type=int, help="base of the staircase potential")
    g.add_argument("--k-max", type=int)
    g.add_argument("--a", dest="a", type=float, help="value at the periodic sites")
    g.add_argument("--period", type=int)
    g.add_argument("--values-file", help="CSV of index,value rows ('none' for V = 0)")
    g.add_argument("--nu", type=int, help="dimension (sparse-3d, greens, bs)")
    g.add_argument("--site-count", type=int)
    g.add_argument("--resolution", type=int, help="Green function quadrature resolution")
    r = p.add_argument_group("run")
    r.add_argument("--truncations", help="comma separated increasing window sizes")
    r.add_argument("--tolerance", type=float)
    r.add_argument("--output", "-o", help="output file ('-' for stdout)")
    r.add_argument("--format", choices=("json", "csv"))
    r.add_argument("--seed", type=int)
    r.add_argument("--workers", type=int)
    r.add_argument("--config", help="RunConfig JSON file; command-line flags override it")
    r.add_argument("--boundary", choices=("free", "dirichlet"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="latspec", description="Spectral toolkit for discrete Schroedinger operators "
                                                 "and Jacobi matrices.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, text in COMMANDS.items():
        p = sub.add_parser(name, help=text.split(":")[0].split(".")[0], description=text)
        _add_common(p)
        if name == "oscillate":
            p.add_argument("--lambda-grid", help="start:stop:step (inclusive) for the coupling sweep")
        if name in ("certify", "compare-v2"):
            p.add_argument("--m", type=int, default=None, help="number of certificates")
        if name == "certify":
            p.add_argument("--essential-a", type=float, help="threshold a with |V| >= a on many sites")
        if name == "infinitude":
            p.add_argument("--criterion", choices=("Thm5.5", "Thm5.6", "Thm5.7"), default="Thm5.7",
                           help="Thm5.5: averaged lower bound (V >= 0); Thm5.6: averaged V^2; "
                                "Thm5.7: |V(n)| >= beta/n with beta > 1")
        if name == "moments":
            p.add_argument("--gamma", type=float, default=0.3)
            p.add_argument("--growth-factor", type=float, default=2.0)
        if name == "greens":
            p.add_argument("--radius", type=int, default=0, help="fill the l1 ball of this radius")
            p.add_argument("--axis-length", type=int, default=0, help="fill offsets (k,0,..) up to this k")
        if name == "examples":
            p.add_argument("--example", choices=sorted(EXAMPLES), default="single-site")
        if name in ("examples", "scoreboard"):
            p.add_argument("--quick", action="store_true", help="smaller suites and ladders")
    return parser


def _domain_dict(text: str) -> dict:
    kind, _, rest = text.partition(":")
    parts = rest.split(":") if rest else []
    try:
        if kind == "half_line" and len(parts) == 1:
            return {"kind": "half_line", "N": int(parts[0])}
        if kind == "whole_line" and len(parts) == 1:
            return {"kind": "whole_line", "N": int(parts[0])}
        if kind == "whole_line" and len(parts) == 2:
            return {"kind": "whole_line", "N1": int(parts[0]), "N2": int(parts[1])}
        if kind == "box" and len(parts) == 1:
            return {"kind": "box", "half_widths": [int(x) for x in parts[0].split("x")]}
    except ValueError:
        pass
    raise SpecError(f"cannot parse domain {text!r}", "/domain")


def _spec_from_flags(ns) -> dict | None:
    if ns.family is None:
        return None
    params = {}
    if ns.n0 is not None:
        try:
            vals = [int(x) for x in ns.n0.split(",")]
        except ValueError:
            raise SpecError("n0 must be integers", "/params/n0") from None
        params["n0"] = vals[0] if len(vals) == 1 else vals
    for key, attr in (("lambda", "lam"), ("beta", "beta"), ("C", "C"), ("alpha", "alpha"), ("N", "N"),
                      ("k_max", "k_max"), ("a", "a"), ("period", "period"), ("values_file", "values_file"),
                      ("nu", "nu"), ("site_count", "site_count"), ("resolution", "resolution")):
        v = getattr(ns, attr, None)
        if v is not None:
            params[key] = v
    if ns.alternate:
        params["alternate"] = True
    spec = {"family": ns.family, "params": params}
    if ns.domain is not None:
        spec["domain"] = _domain_dict(ns.domain)
    elif ns.family not in ("example-5.4", "sparse-3d"):
        spec["domain"] = {"kind": "half_line", "N": 1000}
    return spec


def config_from_args(ns) -> RunConfig:
    base = RunConfig.from_file(ns.config) if getattr(ns, "config", None) else RunConfig(command=ns.command)
    base.command = ns.command
    spec = ns.spec if ns.spec is not None else _spec_from_flags(ns)
    if spec is not None:
        base.potential_spec = spec
    if ns.truncations:
        try:
            base.truncations = [int(float(x)) for x in ns.truncations.split(",")]
        except ValueError:
            raise UsageError("--truncations must be comma separated integers") from None
    for attr in ("tolerance", "output", "format", "seed", "workers"):
        v = getattr(ns, attr)
        if v is not None:
            setattr(base, attr, v)
    opts = dict(base.options)
    for key in ("lambda_grid", "m", "essential_a", "criterion", "gamma", "growth_factor", "radius",
                "axis_length", "example", "quick", "boundary", "nu", "site_count", "lam", "resolution"):
        v = getattr(ns, key, None)
        if v is not None and v is not False:
            opts[key] = v
    base.options = opts
    return base


# ---------------------------------------------------------------------------
# execution


def resolve_spec(spec) -> dict:
    """Mapping form of a potential spec given as mapping, inline JSON or file path."""
    if spec is None:
        raise SpecError("no potential given (use --spec or --family)", "/potential_spec")
    if isinstance(spec, dict):
        return copy.deepcopy(spec)
    text = str(spec).strip()
    if not text.startswith("{"):
        try:
            text = Path(text).read_text()
        except OSError as exc:
            raise SpecError(f"cannot read spec file: {exc}", "/potential_spec") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"spec is not valid JSON: {exc.msg}", "/potential_spec") from None
    if not isinstance(data, dict):
        raise SpecError("spec must be a JSON object", "")
    return data


def _potential(cfg: RunConfig):
    from .lattice import make_potential

    return make_potential(resolve_spec(cfg.potential_spec))


def _truncated(V, N):
    return V if N is None or V.domain.shape[0] == N else V.resize(N)


def parse_grid(text: str) -> list:
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError("--lambda-grid must be start:stop:step") from None
    if step <= 0 or stop < start:
        raise UsageError("--lambda-grid needs step > 0 and stop >= start")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    # rounding keeps grid values such as 0.33 exact to the printed digits
    digits = max(0, -int(np.floor(np.log10(step))) + 2)
    return [round(start + i * step, digits) for i in range(n)]


def _sweep_cell(args):
    from .lattice import make_potential
    from .oscillation import count_bound_states

    spec, key, value, N, boundary = args
    s = copy.deepcopy(spec)
    s.setdefault("params", {})[key] = value
    V = make_potential(s)
    c = count_bound_states(V, N, boundary=boundary)
    return [value, c.above, c.below, c.stable]


def cmd_spectrum(cfg: RunConfig):
    from .eigen import eigenvalues_outside_band
    from .lattice import LatticeOperator

    V = _potential(cfg)
    V = _truncated(V, cfg.truncations[-1] if cfg.truncations else None)
    return eigenvalues_outside_band(LatticeOperator(V.domain, V), cfg.tolerance), EXIT_OK


def cmd_oscillate(cfg: RunConfig):
    from .oscillation import count_bound_states
    from .parallel import ordered_map
    from .report import Table

    boundary = cfg.options.get("boundary", "free")
    grid = cfg.options.get("lambda_grid")
    if grid:
        spec = resolve_spec(cfg.potential_spec)
        key = SWEEP_PARAMS.get(spec.get("family"))
        if key is None:
            raise UsageError(f"--lambda-grid is not supported for family {spec.get('family')!r}")
        N = cfg.truncations[-1] if cfg.truncations else None
        rows = ordered_map(_sweep_cell, [(spec, key, g, N, boundary) for g in parse_grid(grid)], cfg.workers)
        return Table("oscillation_sweep", [key, "above", "below", "stable"], rows, {"parameter": key}), EXIT_OK
    V = _potential(cfg)
    Ns = cfg.truncations or [V.domain.shape[0]]
    counts = [count_bound_states(V, N, boundary=boundary) for N in Ns]
    rows = [[c.N, c.above, c.below, c.stable] for c in counts]
    rep = Table("oscillation_report", ["N", "above", "below", "stable"], rows)
    rep.meta["counts"] = [c.to_dict() for c in counts]
    rep.meta["spec"] = resolve_spec(cfg.potential_spec)
    return rep, EXIT_OK


def _certificate_list(certs, meta=None):
    from .report import Table

    rows = [[i, c.delta, c.lower_bound_rhs, c.witness, c.witness_gap] for i, c in enumerate(certs)]
    t = Table("certificate_list", ["index", "delta", "lower_bound", "witness", "witness_gap"], rows, meta)
    t.meta["certificates"] = [c.to_dict() for c in certs]
    return t


def cmd_certify(cfg: RunConfig):
    from .theorems import essential_spectrum_certificates, v_squared_comparison

    V = _potential(cfg)
    m = int(cfg.options.get("m", 1))
    a = cfg.options.get("essential_a")
    if a is not None:
        try:
            certs = essential_spectrum_certificates(V, float(a), m)
        except InsufficientSpectrumError as exc:
            raise HypothesisError(str(exc)) from None
    else:
        certs = v_squared_comparison(V, m=m).certificates
    ok = len(certs) >= m and all(c.delta > 0 for c in certs)
    return _certificate_list(certs, {"requested": m}), EXIT_OK if ok else EXIT_HYPOTHESIS


def cmd_compare_v2(cfg: RunConfig):
    from .theorems import v_squared_comparison

    V = _potential(cfg)
    v = v_squared_comparison(V, m=int(cfg.options.get("m", 1)), boundary=cfg.options.get("boundary", "free"))
    code = {"pass": EXIT_OK, "fail": EXIT_FAIL, "unstable": EXIT_HYPOTHESIS}[v.status]
    return v, code


def cmd_bargmann(cfg: RunConfig):
    from .theorems import bargmann_check

    V = _potential(cfg)
    r = bargmann_check(V)
    if not r.consistent:
        return r, EXIT_FAIL
    return r, EXIT_OK if r.predicts_no_bound_states else EXIT_HYPOTHESIS


def cmd_infinitude(cfg: RunConfig):
    from .theorems import infinitude_check

    V = _potential(cfg)
    Ns = cfg.truncations or [1000, 10_000, 100_000, 1_000_000]
    ev = infinitude_check(V, cfg.options.get("criterion", "Thm5.7"), Ns,
                          boundary=cfg.options.get("boundary", "free"), workers=cfg.workers)
    return ev, {"pass": EXIT_OK, "fail": EXIT_FAIL, "hypotheses-fail": EXIT_HYPOTHESIS}[ev.status]


def cmd_moments(cfg: RunConfig):
    from .theorems import moment_divergence_experiment

    V = None
    C, alpha = 1.0, 0.5
    if cfg.potential_spec is not None:
        spec = resolve_spec(cfg.potential_spec)
        params = spec.get("params", {})
        C = float(params.get("C", C))
        alpha = float(params.get("alpha", alpha))
        if spec.get("family") != "power-law":
            from .lattice import make_potential

            V = make_potential(spec)
    Ns = cfg.truncations or [1000, 10_000, 100_000, 1_000_000]
    ex = moment_divergence_experiment(C, alpha, float(cfg.options.get("gamma", 0.3)), Ns,
                                      growth_factor=float(cfg.options.get("growth_factor", 2.0)), V=V,
                                      tolerance=cfg.tolerance, workers=cfg.workers)
    if ex.passed is None:
        return ex, EXIT_HYPOTHESIS
    return ex, EXIT_OK if ex.passed else EXIT_FAIL


def cmd_greens(cfg: RunConfig):
    from .greens import GreenTable

    nu = int(cfg.options.get("nu", 3))
    if nu < 3:
        raise SpecError("the band-edge Green function is finite only for nu >= 3", "/options/nu")
    t = GreenTable.load_or_create(nu, cfg.options.get("resolution"), radius=int(cfg.options.get("radius", 0)),
                                  axis_length=int(cfg.options.get("axis_length", 0)))
    return t, EXIT_OK


def cmd_bs(cfg: RunConfig):
    from .greens import GreenTable, green_zero_random_walk, operator_norm_power_iteration, sparse_counterexample
    from .lattice import LatticeOperator
    from .report import Table

    nu = int(cfg.options.get("nu", 3))
    count = int(cfg.options.get("site_count", 5))
    lam = float(cfg.options.get("lam", 1.0))
    if nu < 3:
        raise HypothesisError("no sparse counterexample exists for nu < 3")
    table = GreenTable.load_or_create(nu, cfg.options.get("resolution"))
    ce = sparse_counterexample(nu, count, lam, table)
    pi = operator_norm_power_iteration(LatticeOperator(ce.potential.domain, ce.potential))
    edge = 2.0 * nu
    ver = {"schur_below_one": ce.bs.schur_bound < 1, "power_iteration_top": pi.estimate,
           "power_iteration_converged": pi.converged, "band_edge": edge,
           "top_within_band": pi.estimate <= edge + 1e-6,
           "box_shape": list(ce.potential.domain.shape), "G0_quadrature": table((0,) * nu)}
    if nu == 3:
        ver["G0_random_walk"] = green_zero_random_walk(3)
    ok = ver["schur_below_one"] and ver["top_within_band"]
    rep = Table("bs_report", ["quantity", "value"],
                [["schur_bound", ce.bs.schur_bound], ["power_iteration_top", pi.estimate]],
                {"counterexample": ce.to_dict(), "verification": ver})
    return rep, EXIT_OK if ok else EXIT_FAIL


def cmd_examples(cfg: RunConfig):
    from . import scoreboard
    from .report import Table

    name = cfg.options.get("example", "single-site")
    fn = getattr(scoreboard, "check_" + EXAMPLES[name])
    c = fn(bool(cfg.options.get("quick", False)), cfg.seed, cfg.workers)
    rep = Table("examples_report", ["name", "status"], [[c.name, c.status]],
                {"example": name, "checks": [c.to_dict()]})
    return rep, EXIT_OK if c.status == "pass" else EXIT_FAIL


def cmd_scoreboard(cfg: RunConfig):
    from .scoreboard import run_scoreboard

    sb = run_scoreboard(bool(cfg.options.get("quick", False)), cfg.seed, cfg.workers)
    return sb, EXIT_OK if sb.all_pass else EXIT_FAIL


HANDLERS = {"spectrum": cmd_spectrum, "oscillate": cmd_oscillate, "certify": cmd_certify,
            "compare-v2": cmd_compare_v2, "bargmann": cmd_bargmann, "infinitude": cmd_infinitude,
            "moments": cmd_moments, "greens": cmd_greens, "bs": cmd_bs, "examples": cmd_examples,
            "scoreboard": cmd_scoreboard}

CSV_DEFAULT = {"oscillate"}


def run(config: RunConfig) -> int:
    """Execute a configuration, write its report and return the exit status."""
    from .report import report_write, validate_report

    try:
        config.validate()
        report, code = HANDLERS[config.command](config)
        validate_report(report)
        fmt = config.format or ("csv" if config.command in CSV_DEFAULT and config.options.get("lambda_grid")
                                else "json")
        report_write(report, config.output, fmt)
        return code
    except SpecError as exc:
        print(f"latspec: malformed specification at {exc.pointer or '/'}: {exc.detail}", file=sys.stderr)
        return EXIT_SPEC
    except UsageError as exc:
        print(f"latspec: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (HypothesisError, InsufficientSpectrumError) as exc:
        print(f"latspec: hypotheses not satisfied: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except Exception as exc:  # noqa: BLE001 - any other failure is an internal error
        print(f"latspec: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        cfg = config_from_args(ns)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SpecError as exc:
        print(f"latspec: malformed specification at {exc.pointer or '/'}: {exc.detail}", file=sys.stderr)
        return EXIT_SPEC
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
