"""Batch front-end: parse system specification files, dispatch
verification pipelines, emit machine-readable reports.

Spec files are sectioned plain text: ``[kind "name"]`` headers followed
by ``key = "value"`` entries, expressions always quoted strings in the
engine grammar.  Reports are emitted one JSON record per line and are
byte-identical across runs with the same seed (wall times go to the
console, never into the report).
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
import zlib
from dataclasses import dataclass, field
from typing import Optional

from . import __version__
from .errors import (
    DegenerateLagrangianError, DegenerateOmegaError, GeomechError,
    NotPoissonError, ParseError, SpecFormatError, UnknownCheckError,
    UnresolvedReferenceError,
)
from .geomcalc import (
    Bivector, Chart, Diffeo, DiffForm, Tensor11, VectorField, chart,
    form_is_zero, jacobiator_check, lie_derivative, pushforward,
)
from .hamiltonian import (
    HamiltonianSystem, hamiltonian_vf, invariance_check, magri_compatible,
)
from .lagrangian import LagrangianSystem, el_residual, el_solve
from .results import CheckResult
from .symexpr import (
    DEFAULT_SAMPLES, DEFAULT_TOL, Expr, FunctionBindings, ZERO, equal,
    parse as parse_expr, to_text,
)
from .tangentstruct import (
    CurveSpec, TangentStructure, canonical_structure_on, check_integral_curve,
    is_sode, verify_axioms,
)
from .tulczyjew import el_submanifold, isotropy_check, tangent_lift_symplectic_form
from .weylnum import clock_shift, truncated_fock, weyl_commutation_check

_HEADER = re.compile(r'^\[(?P<kind>[a-z]+)(?:\s+"(?P<name>[^"]+)")?\]$')
_ENTRY = re.compile(r'^(?P<key>[A-Za-z_][A-Za-z0-9_^]*)\s*=\s*"(?P<value>[^"]*)"$')


@dataclass
class CheckSpec:
    check_id: str
    kind: str
    options: dict


@dataclass
class SystemSpec:
    """Fully resolved contents of a specification file."""

    path: str
    charts: dict = field(default_factory=dict)
    params: tuple = ()
    functions: dict = field(default_factory=dict)   # name -> sample Expr or None
    fields: dict = field(default_factory=dict)
    forms: dict = field(default_factory=dict)
    tensors: dict = field(default_factory=dict)
    bivectors: dict = field(default_factory=dict)
    diffeos: dict = field(default_factory=dict)
    structures: dict = field(default_factory=dict)
    lagrangians: dict = field(default_factory=dict)
    hamiltonians: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)
    weyl_tasks: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)      # insertion-ordered

    def function_bindings(self) -> Optional[FunctionBindings]:
        bound = {n: e for n, e in self.functions.items() if e is not None}
        return FunctionBindings(bound) if bound else None


def _split_list(value: str):
    return [part.strip() for part in value.split(",")] if value.strip() else []


def _read_sections(path: str):
    sections = []
    current = None
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            header = _HEADER.match(line)
            if header:
                current = {"kind": header.group("kind"),
                           "name": header.group("name"),
                           "line": lineno, "entries": {}}
                sections.append(current)
                continue
            entry = _ENTRY.match(line)
            if entry:
                if current is None:
                    raise SpecFormatError("entry before any section header", lineno)
                current["entries"][entry.group("key")] = (entry.group("value"), lineno)
                continue
            raise SpecFormatError(f"unparseable line: {line!r}", lineno)
    return sections


def load_spec(path: str) -> SystemSpec:
    """Parse and fully resolve a system specification file."""
    spec = SystemSpec(path=path)
    sections = _read_sections(path)

    def entry(section, key, default=None, required=False):
        if key in section["entries"]:
            return section["entries"][key][0]
        if required:
            raise SpecFormatError(f"section [{section['kind']}] misses '{key}'",
                                  section["line"])
        return default

    # two passes: declarations first so later expressions can resolve
    for section in sections:
        kind, name = section["kind"], section["name"]
        if kind == "chart":
            spec.charts[name] = chart(name, tuple(_split_list(entry(section, "coords", required=True))))
        elif kind == "params":
            spec.params = spec.params + tuple(_split_list(entry(section, "names", required=True)))
        elif kind == "function":
            sample = entry(section, "sample")
            spec.functions[name] = None if sample is None else \
                _parse_in(sample, ("u",), spec, section["line"])

    for section in sections:
        kind, name = section["kind"], section["name"]
        line = section["line"]
        if kind in ("chart", "params", "function"):
            continue
        if kind == "vectorfield":
            c = _chart_of(spec, entry(section, "chart", required=True))
            comps = [_parse_in(t, c.coords, spec, line)
                     for t in _split_list(entry(section, "components", required=True))]
            spec.fields[name] = VectorField(c, comps)
        elif kind == "form":
            spec.forms[name] = _load_form(spec, section)
        elif kind == "tensor":
            c = _chart_of(spec, entry(section, "chart", required=True))
            rows = [[_parse_in(t, c.coords, spec, line) for t in _split_list(row)]
                    for row in entry(section, "rows", required=True).split(";")]
            spec.tensors[name] = Tensor11(c, rows)
        elif kind == "bivector":
            spec.bivectors[name] = _load_bivector(spec, section)
        elif kind == "diffeo":
            src = _chart_of(spec, entry(section, "src", required=True))
            dst = _chart_of(spec, entry(section, "dst", required=True))
            fwd = [_parse_in(t, src.coords, spec, line)
                   for t in _split_list(entry(section, "forward", required=True))]
            inv = [_parse_in(t, dst.coords, spec, line)
                   for t in _split_list(entry(section, "inverse", required=True))]
            spec.diffeos[name] = Diffeo(src, dst, tuple(fwd), tuple(inv))
        elif kind == "structure":
            c = _chart_of(spec, entry(section, "chart", required=True))
            tensor_name = entry(section, "tensor")
            if tensor_name is None:
                spec.structures[name] = canonical_structure_on(c)
            else:
                delta_name = entry(section, "delta", required=True)
                spec.structures[name] = TangentStructure(
                    c, _lookup(spec.tensors, tensor_name),
                    _lookup(spec.fields, delta_name))
        elif kind == "lagrangian":
            c = _chart_of(spec, entry(section, "chart", required=True))
            structure_name = entry(section, "structure")
            ts = canonical_structure_on(c) if structure_name is None else \
                _lookup(spec.structures, structure_name)
            spec.lagrangians[name] = LagrangianSystem(
                ts, _parse_in(entry(section, "L", required=True), c.coords, spec, line))
        elif kind == "hamiltonian":
            c = _chart_of(spec, entry(section, "chart", required=True))
            omega_name = entry(section, "omega")
            lambda_name = entry(section, "lambda")
            spec.hamiltonians[name] = HamiltonianSystem(
                c, _parse_in(entry(section, "H", required=True), c.coords, spec, line),
                omega=None if omega_name is None else _lookup(spec.forms, omega_name),
                Lambda=None if lambda_name is None else _lookup(spec.bivectors, lambda_name))
        elif kind == "curve":
            c = _chart_of(spec, entry(section, "chart", required=True))
            tsym = entry(section, "time", default="t")
            comps = [_parse_in(t, (tsym,), spec, line)
                     for t in _split_list(entry(section, "components", required=True))]
            spec.curves[name] = CurveSpec(c, tsym, tuple(comps))
        elif kind == "weyl":
            spec.weyl_tasks[name] = {k: v for k, (v, _) in section["entries"].items()}
        elif kind == "check":
            options = {k: v for k, (v, _) in section["entries"].items()}
            check_kind = options.pop("kind", None)
            if check_kind is None:
                raise SpecFormatError("check section misses 'kind'", line)
            spec.checks[name] = CheckSpec(name, check_kind, options)
        else:
            raise SpecFormatError(f"unknown section kind '{kind}'", line)
    return spec


def _parse_in(text: str, coords, spec: SystemSpec, line: int) -> Expr:
    try:
        return parse_expr(text, tuple(coords) + tuple(spec.params),
                          functions=tuple(spec.functions))
    except ParseError as exc:
        raise SpecFormatError(f"{exc} in expression {text!r}", line) from None


def _chart_of(spec: SystemSpec, name: str) -> Chart:
    return _lookup(spec.charts, name)


def _lookup(table: dict, name: str):
    if name not in table:
        raise UnresolvedReferenceError(name)
    return table[name]


def _load_form(spec: SystemSpec, section) -> DiffForm:
    c = _chart_of(spec, section["entries"]["chart"][0]) \
        if "chart" in section["entries"] else None
    if c is None:
        raise SpecFormatError("form section misses 'chart'", section["line"])
    comps = {}
    degree = None
    for key, (value, line) in section["entries"].items():
        if key == "chart":
            continue
        if key == "value":   # 0-form
            comps[()] = _parse_in(value, c.coords, spec, line)
            degree = 0
            continue
        idx = []
        for part in key.split("^"):
            if not part.startswith("d") or part[1:] not in c.coords:
                raise SpecFormatError(f"bad form component key '{key}'", line)
            idx.append(c.index(part[1:]))
        if degree is None:
            degree = len(idx)
        elif degree != len(idx):
            raise SpecFormatError("mixed degrees in one form section", line)
        comps[tuple(idx)] = _parse_in(value, c.coords, spec, line)
    if degree is None:
        raise SpecFormatError("form section has no components", section["line"])
    return DiffForm(c, degree, comps)


def _load_bivector(spec: SystemSpec, section) -> Bivector:
    if "chart" not in section["entries"]:
        raise SpecFormatError("bivector section misses 'chart'", section["line"])
    c = _chart_of(spec, section["entries"]["chart"][0])
    upper = {}
    for key, (value, line) in section["entries"].items():
        if key == "chart":
            continue
        parts = key.split("^")
        if len(parts) != 2 or any(p not in c.coords for p in parts):
            raise SpecFormatError(f"bad bivector component key '{key}'", line)
        upper[(c.index(parts[0]), c.index(parts[1]))] = \
            _parse_in(value, c.coords, spec, line)
    return Bivector.from_upper(c, upper)


# --- check dispatch ------------------------------------------------------------

def _check_seed(root_seed: int, check_id: str) -> int:
    return zlib.crc32(f"{root_seed}:{check_id}".encode()) & 0x7FFFFFFF


def _result_record(check: CheckSpec, result: CheckResult, residual=None) -> dict:
    witness = None
    if result.witness is not None:
        witness = {k: round(v, 12) for k, v in sorted(result.witness.bindings.items())}
    record = {
        "record": "check",
        "id": check.check_id,
        "kind": check.kind,
        "status": result.status,
        "witness": witness,
        "component": result.component,
        "detail": result.detail or None,
        "residual": residual,
    }
    return record


def run(spec: SystemSpec, check_ids=None, seed: int = 0,
        n_samples: int = DEFAULT_SAMPLES, tol: float = DEFAULT_TOL) -> dict:
    """Execute the requested checks; deterministic for a fixed seed.

    Per-check sampling seeds derive from the root seed and the check id,
    so execution order can never change results.
    """
    if check_ids is None:
        check_ids = list(spec.checks)
    for cid in check_ids:
        if cid not in spec.checks:
            raise UnknownCheckError(cid)
    funcs = spec.function_bindings()
    header = {
        "record": "header",
        "engine": "geomech",
        "version": __version__,
        "spec": os.path.basename(spec.path),
        "seed": seed,
        "samples": n_samples,
        "tol": tol,
        "checks": len(check_ids),
    }
    records = []
    timings = []
    for cid in check_ids:
        check = spec.checks[cid]
        eq_opts = dict(funcs=funcs, seed=_check_seed(seed, cid),
                       n_samples=n_samples, tol=tol)
        started = time.perf_counter()
        try:
            records.append(_dispatch(spec, check, eq_opts))
        except (DegenerateLagrangianError, DegenerateOmegaError) as exc:
            records.append(_result_record(
                check, CheckResult("degenerate", detail=str(exc))))
        except NotPoissonError as exc:
            records.append(_result_record(
                check, CheckResult("fail", component=exc.which, detail=str(exc))))
        timings.append((cid, time.perf_counter() - started))
    return {"header": header, "records": records, "timings": timings}


def _dispatch(spec: SystemSpec, check: CheckSpec, eq_opts) -> dict:
    kind = check.kind
    options = check.options
    funcs = eq_opts["funcs"]
    seed = eq_opts["seed"]

    if kind == "diffeo-valid":
        phi = _lookup(spec.diffeos, options["diffeo"])
        return _result_record(check, phi.validate(**eq_opts))

    if kind == "axioms":
        ts = _lookup(spec.structures, options["structure"])
        report = verify_axioms(ts, **eq_opts)
        failures = report.failures()
        if not failures:
            return _result_record(check, CheckResult("pass"))
        axiom, worst = next(iter(failures.items()))
        return _result_record(check, CheckResult(
            worst.status, component=f"{axiom}: {worst.component}",
            witness=worst.witness, detail=worst.detail))

    if kind == "sode":
        gamma = _lookup(spec.fields, options["field"])
        ts = _lookup(spec.structures, options["structure"])
        return _result_record(check, is_sode(gamma, ts, **eq_opts))

    if kind == "sode-transport":
        gamma = _lookup(spec.fields, options["field"])
        phi = _lookup(spec.diffeos, options["diffeo"])
        moved = pushforward(phi, gamma)
        target = canonical_structure_on(phi.dst)
        result = is_sode(moved, target, **eq_opts)
        return _result_record(check, result, residual=str(moved))

    if kind == "el-solve":
        sys_ = _lookup(spec.lagrangians, options["lagrangian"])
        gamma = el_solve(sys_, funcs=funcs, seed=seed)
        sode = is_sode(gamma, sys_.ts, **eq_opts)
        residual_zero = form_is_zero(el_residual(sys_, gamma), **eq_opts)
        combined = sode if not sode.passed else residual_zero
        return _result_record(check, combined, residual=str(gamma))

    if kind == "el-residual":
        sys_ = _lookup(spec.lagrangians, options["lagrangian"])
        gamma = _lookup(spec.fields, options["field"])
        residual = el_residual(sys_, gamma)
        return _result_record(check, form_is_zero(residual, **eq_opts),
                              residual=str(residual))

    if kind == "ham-vf":
        sys_ = _lookup(spec.hamiltonians, options["hamiltonian"])
        X = hamiltonian_vf(sys_, funcs=funcs, seed=seed)
        checks = [invariance_check(X, sys_.omega, **eq_opts),
                  invariance_check(X, sys_.H, **eq_opts)]
        for res in checks:
            if not res.passed:
                return _result_record(check, res, residual=str(X))
        return _result_record(check, CheckResult("pass"), residual=str(X))

    if kind == "jacobi":
        lam = _lookup(spec.bivectors, options["bivector"])
        result = jacobiator_check(lam, **eq_opts)
        residual = None
        if not result.passed:
            from .geomcalc import jacobiator
            names = lam.chart.coords
            residual = "; ".join(
                f"J^{{{names[i]},{names[j]},{names[k]}}} = {to_text(v)}"
                for (i, j, k), v in jacobiator(lam).items() if v != ZERO)
        return _result_record(check, result, residual=residual)

    if kind == "magri":
        lam1 = _lookup(spec.bivectors, options["first"])
        lam2 = _lookup(spec.bivectors, options["second"])
        return _result_record(check, magri_compatible(lam1, lam2, **eq_opts))

    if kind == "isotropy":
        sys_ = _lookup(spec.lagrangians, options["lagrangian"])
        sigma = el_submanifold(sys_.L, sys_.chart)
        m = sys_.chart.dim // 2
        result = isotropy_check(sigma, tangent_lift_symplectic_form(m), **eq_opts)
        return _result_record(check, result)

    if kind == "invariance":
        gamma = _lookup(spec.fields, options["field"])
        if "form" in options:
            target = _lookup(spec.forms, options["form"])
        elif "tensor" in options:
            target = _lookup(spec.tensors, options["tensor"])
        else:
            target = _parse_in(options["function"], gamma.chart.coords, spec, 0)
        return _result_record(check, invariance_check(gamma, target, **eq_opts))

    if kind == "integral-curve":
        curve = _lookup(spec.curves, options["curve"])
        gamma = _lookup(spec.fields, options["field"])
        result = check_integral_curve(curve, gamma,
                                      t_samples=eq_opts["n_samples"],
                                      tol=eq_opts["tol"], seed=seed)
        return _result_record(check, result)

    if kind == "weyl-commutation":
        task = _lookup(spec.weyl_tasks, options["weyl"])
        d = int(task["d"])
        ops = clock_shift(d)
        result = weyl_commutation_check(ops["U"], ops["V"], ops["zeta"])
        return _result_record(check, result)

    if kind == "fock-commutator":
        task = _lookup(spec.weyl_tasks, options["weyl"])
        n_max = int(task["n_max"])
        ops = truncated_fock(n_max)
        import numpy as np
        comm = (ops["a"] @ ops["a_dag"] - ops["a_dag"] @ ops["a"]).entries
        expected = np.eye(n_max, dtype=complex)
        expected[-1, -1] = 1 - n_max
        deviation = float(abs(comm - expected).max())
        status = "pass" if deviation <= 1e-12 else "fail"
        return _result_record(check, CheckResult(
            status, detail=f"corner {comm[-1, -1].real:.0f}, deviation {deviation:.3e}"))

    raise UnknownCheckError(f"{check.check_id} (kind '{kind}')")


def render_report(outcome: dict) -> str:
    lines = [json.dumps(outcome["header"], sort_keys=True, separators=(",", ":"))]
    for record in outcome["records"]:
        lines.append(json.dumps(record, sort_keys=True, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="geomech",
                                     description="verify geometric structures of dynamics")
    sub = parser.add_subparsers(dest="command", required=True)
    check = sub.add_parser("check", help="run the checks declared in a spec file")
    check.add_argument("spec_file")
    check.add_argument("--only", help="comma-separated check ids")
    check.add_argument("--seed", type=int, default=0)
    check.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    check.add_argument("--tol", type=float, default=DEFAULT_TOL)
    check.add_argument("--report", help="write the JSONL report here")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    seed = args.seed
    env_seed = os.environ.get("GEOMECH_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError:
            print(f"geomech: bad GEOMECH_SEED {env_seed!r}", file=sys.stderr)
            return 2

    try:
        spec = load_spec(args.spec_file)
        only = _split_list(args.only) if args.only else None
        outcome = run(spec, only, seed=seed, n_samples=args.samples, tol=args.tol)
    except (OSError, SpecFormatError, UnresolvedReferenceError,
            UnknownCheckError) as exc:
        print(f"geomech: {exc}", file=sys.stderr)
        return 2
    except GeomechError as exc:
        print(f"geomech: {exc}", file=sys.stderr)
        return 2

    for record, (cid, elapsed) in zip(outcome["records"], outcome["timings"]):
        print(f"{cid}: {record['status']} ({elapsed * 1000.0:.1f} ms)")

    text = render_report(outcome)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)

    return 0 if all(r["status"] == "pass" for r in outcome["records"]) else 1


if __name__ == "__main__":
    sys.exit(main())
