"""Command-line front end: job loading, dispatch and JSON reports.

A job is a JSON object (file path or inline text).  Reports are canonical JSON
(sorted keys, fixed float formatting) so identical inputs give identical bytes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__
from .exact_base import KronError, PrecisionExhausted, base_field, precision
from .gi_norms import Norm, lattice_discriminant, log_abs_det, norm_eval, orthogonalize_lattice, to_local_matrix
from .global_ext import FIXTURE_DIR, ExtensionData, SchemaError, ValidationFailed, ext_validate
from .lattice_enum import ModuleY

JOB_SCHEMA = "job-v1"
COMMANDS = {
    "norm": ("eval", "disc", "orth"),
    "eisenstein": ("germ", "numeric"),
    "limit-check": ("first", "second"),
    "multi": ("key-check", "limit"),
    "zeta": (),
    "lfunc": ("ring", "ray"),
    "oracle": ("ideals",),
    "selftest": (),
}


@dataclass
class Job:
    command: str
    action: str | None
    inputs: dict
    options: dict = field(default_factory=dict)
    fixtures: dict = field(default_factory=dict)

    def fixture(self, key: str = "fixture") -> ExtensionData:
        return self.fixtures[key]

    def hash(self) -> str:
        payload = {"command": self.command, "action": self.action, "inputs": self.inputs,
                   "fixtures": {k: v.source for k, v in sorted(self.fixtures.items())}, "options": self.options}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


# ---------------------------------------------------------------------------
# loading


def _read_json(text_or_path) -> dict:
    if isinstance(text_or_path, dict):
        return text_or_path
    text = str(text_or_path)
    if text.lstrip().startswith("{"):
        return json.loads(text)
    path = Path(text)
    if path.exists():
        return json.loads(path.read_text())
    if (FIXTURE_DIR / f"{text}.json").exists():
        return {"fixture": text}
    raise FileNotFoundError(f"no job file {text!r}")


def load_fixture_checked(ref) -> ExtensionData:
    """Load a fixture by name, path or inline object and run every consistency check."""
    ext = ExtensionData.from_json(ref)
    ext_validate(ext, strict=True)
    return ext


def load_config(source, command: str | None = None, action: str | None = None, options: dict | None = None) -> Job:
    data = _read_json(source) if source is not None else {}
    schema = data.get("schema", JOB_SCHEMA)
    if schema != JOB_SCHEMA:
        raise SchemaError(f"unknown job schema {schema!r}")
    command = command or data.get("command")
    if command not in COMMANDS:
        raise SchemaError(f"unknown command {command!r}")
    if data.get("command", command) != command:
        raise SchemaError(f"job is for {data['command']!r}, not {command!r}")
    action = action or data.get("action")
    if COMMANDS[command] and action not in COMMANDS[command]:
        raise SchemaError(f"{command} needs one of {', '.join(COMMANDS[command])}")
    inputs = {k: v for k, v in data.items() if k not in ("schema", "command", "action")}
    job = Job(command, action, inputs, dict(options or {}))
    if "fixture" in inputs:
        job.fixtures["fixture"] = load_fixture_checked(inputs["fixture"])
    if command in ("norm", "eisenstein", "limit-check"):
        # validate norm and module inputs up front
        _module_and_norm(job)
    return job


def _q_of(job: Job) -> int:
    Y = job.inputs.get("Y", {})
    return int(job.inputs.get("q", Y.get("q", 2) if isinstance(Y, dict) else 2))


def _module(job: Job) -> ModuleY | None:
    Y = job.inputs.get("Y")
    if Y is None:
        return None
    return ModuleY.from_json(Y, _q_of(job))


def _norm(job: Job, rank: int | None) -> Norm:
    nu = job.inputs.get("nu", "standard")
    if nu == "standard":
        if rank is None:
            raise SchemaError("a standard norm needs Y or a rank")
        return Norm.standard(base_field(_q_of(job)), rank)
    if not isinstance(nu, dict):
        raise SchemaError("nu must be \"standard\" or a norm object")
    nu = dict(nu)
    nu.setdefault("field", {"q": _q_of(job)})
    if rank is not None:
        nu.setdefault("rank", rank)
    return Norm.from_json(nu)


def _module_and_norm(job: Job):
    Y = _module(job)
    rank = Y.rank if Y is not None else job.inputs.get("rank")
    nu = _norm(job, rank)
    if Y is not None and nu.rank != Y.rank:
        raise SchemaError("norm rank differs from module rank")
    if Y is not None and nu.field.q != Y.q:
        raise SchemaError("norm field and module disagree on q")
    return Y, nu


# ---------------------------------------------------------------------------
# results


@dataclass
class Result:
    exact: dict = field(default_factory=dict)
    numeric: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.get("equal", c.get("within", False)) for c in self.checks)


def _canon(x):
    if isinstance(x, float):
        return float(repr(x))
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _canon(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_canon(v) for v in x]
    if x is None or isinstance(x, (bool, int, str)):
        return x
    if hasattr(x, "to_json"):
        return _canon(x.to_json())
    return str(x)


def emit_report(job: Job, result: Result | None = None, *, error: dict | None = None, seed: int = 0,
                timings: dict | None = None) -> dict:
    report = {
        "command": " ".join(p for p in (job.command, job.action) if p),
        "inputs": job.inputs,
        "inputs_hash": job.hash(),
        "version": __version__,
        "seed": seed,
    }
    if result is not None:
        report.update(exact=result.exact, numeric=result.numeric, checks=result.checks, ok=result.ok)
        if result.notes:
            report["notes"] = result.notes
    if error is not None:
        report["error"] = error
        report["ok"] = False
    if timings is not None:
        report["timings"] = timings
    return _canon(report)


def report_text(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_atomic(path: str, text: str):
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# command handlers


def _tol(job: Job, default: float) -> float:
    return float(job.options.get("tol") or job.inputs.get("tol", default))


def run_norm(job: Job) -> Result:
    Y, nu = _module_and_norm(job)
    res = Result()
    if job.action == "eval":
        res.exact["value"] = norm_eval(nu, job.inputs["x"]).to_json()
        return res
    lattice = job.inputs.get("lattice")
    disc = lattice_discriminant(nu, lattice)
    res.exact["discriminant"] = disc.to_json()
    if job.action == "disc" and lattice is None:
        return res
    rows = lattice if lattice is not None else [[("1" if i == j else "0") for j in range(nu.rank)]
                                                for i in range(nu.rank)]
    orth = orthogonalize_lattice(nu, rows)
    total = sum(orth.epsilons, Fraction(0))
    res.exact["epsilons"] = [str(e) for e in orth.epsilons]
    if job.action == "orth":
        res.exact["change_of_basis"] = [[x.to_json() for x in row] for row in orth.change_of_basis]
        res.exact["row_values"] = list(orth.row_values)
        unimodular = log_abs_det(to_local_matrix(orth.change_of_basis, nu.K), nu.n) == 0
        res.checks.append({"name": "unimodular change of basis", "lhs": "0", "rhs": "0" if unimodular else "nonzero",
                           "equal": unimodular})
    res.checks.append({"name": "discriminant from orthogonal basis", "lhs": str(total), "rhs": str(disc.value),
                       "equal": total == disc.value})
    return res


def run_eisenstein(job: Job) -> Result:
    from .eisenstein_one import eisenstein_expansion, eisenstein_numeric, jacobi_expansion, jacobi_numeric

    Y, nu = _module_and_norm(job)
    a = job.inputs.get("a", "T")
    w = job.inputs.get("w")
    germ = jacobi_expansion(Y, nu, w, a) if w is not None else eisenstein_expansion(Y, nu, a)
    res = Result()
    res.exact["germ"] = germ.to_json()
    if job.action == "germ":
        expected = "0" if w is not None else "-1"
        res.checks.append({"name": "value at 0", "lhs": str(germ.value_at_0), "rhs": expected,
                           "equal": str(germ.value_at_0) == expected})
        return res
    s = float(job.inputs.get("s", 2.0))
    tol = _tol(job, 1e-10)
    direct = jacobi_numeric(Y, nu, w, s, tol) if w is not None else eisenstein_numeric(Y, nu, s, tol)
    closed = germ.evaluate(s)
    res.numeric.update(s=s, direct_sum=direct, continuation=closed, tolerance=tol)
    res.checks.append({"name": "direct sum vs continuation", "lhs": direct, "rhs": closed,
                       "within": abs(direct - closed) <= 10 * tol * max(1.0, abs(closed))})
    return res


def run_limit_check(job: Job) -> Result:
    from .eisenstein_one import limit_check_first, limit_check_second

    Y, nu = _module_and_norm(job)
    a = job.inputs.get("a", "T")
    if job.action == "first":
        rep, name = limit_check_first(Y, nu, a), "KLF-1"
    else:
        if "w" not in job.inputs:
            raise SchemaError("limit-check second needs w")
        rep, name = limit_check_second(Y, nu, job.inputs["w"], a), "KLF-2"
    data = rep.to_json()
    res = Result()
    res.checks.append({"name": name, "lhs": data["lhs_text"], "rhs": data["rhs_text"], "equal": data["equal"]})
    res.exact.update({k: v for k, v in data.items() if k not in ("equal",)})
    return res


def run_multi(job: Job) -> Result:
    from .eisenstein_multi import (
        finite_difference_derivative,
        integral_representation,
        multi_eisenstein_numeric,
        multi_jacobi_integral,
        multi_jacobi_numeric,
        multi_limit_first,
        multi_limit_second,
        rhs_normalized,
    )

    ext = job.fixture()
    L = job.inputs.get("L")
    w = job.inputs.get("w")
    r = int(job.inputs.get("r", 1))
    res = Result()
    if job.action == "key-check":
        tol = _tol(job, 1e-6)
        for s in job.inputs.get("s", [1.5, 2.0]):
            s = float(s)
            if w is None:
                lhs, err = integral_representation(ext, L, None, s, r=r)
                rhs = rhs_normalized(ext, multi_eisenstein_numeric(ext, L, None, s, 1e-12, r=r), s, r)
            else:
                lhs, err = multi_jacobi_integral(ext, L, w, None, s, r=r)
                rhs = rhs_normalized(ext, multi_jacobi_numeric(ext, L, w, None, s, 1e-12, r=r), s, r)
            res.numeric[f"s={s!r}"] = {"integral": lhs, "direct": rhs, "quadrature_error": err}
            res.checks.append({"name": f"integral representation at s={s!r}", "lhs": lhs, "rhs": rhs,
                               "within": abs(lhs - rhs) <= tol})
        return res
    rep = multi_limit_first(ext, L, r=r) if w is None else multi_limit_second(ext, L, w, r=r)
    res.checks.extend(rep.checks)
    res.exact.update(germ=rep.germ.to_json(), **{k: v for k, v in rep.details.items()})
    if ext.m == 2 and job.inputs.get("finite_difference", True):
        import math

        fd = finite_difference_derivative(ext, L, w=w, r=r)
        exact = rep.germ.derivative_at_0.evaluate(ext.q)
        bound = 1e-5 * math.log(ext.q)
        res.numeric.update(finite_difference=fd, germ_derivative=exact)
        res.checks.append({"name": "derivative vs finite difference", "lhs": exact, "rhs": fd,
                           "within": abs(fd - exact) < bound})
    return res


def run_zeta(job: Job) -> Result:
    from .lfunc import oracle_zeta_check, zeta_order

    ext = job.fixture()
    rep = zeta_order(ext)
    res = Result()
    res.checks.extend(rep.checks)
    res.exact.update(value_at_0=str(rep.germ.rational_part(0)), derivative_at_0=str(rep.germ.rational_part(1)),
                     germ=rep.germ.to_json(), class_number=rep.details["class_number"],
                     regulator=rep.details["regulator"])
    if "s" in job.inputs:
        s = float(job.inputs["s"])
        res.numeric["zeta"] = {"s": s, "value": zeta_order(ext, s, _tol(job, 1e-10))}
    if "oracle_degree" in job.inputs:
        check = oracle_zeta_check(ext, float(job.inputs.get("s", 2.0)), int(job.inputs["oracle_degree"]))
        res.numeric["oracle"] = check
        res.checks.append({"name": check["name"], "lhs": check["pipeline"], "rhs": check["partial_sum"],
                           "tail_bound": check["tail_bound"], "within": check["within"]})
    return res


def _selected(items: list, choice):
    if choice is None:
        return list(enumerate(items))
    idx = int(choice)
    return [(idx, items[idx])]


def run_lfunc(job: Job) -> Result:
    from .lfunc import (
        dirichlet_ray,
        dirichlet_ray_numeric,
        dirichlet_ring,
        euler_removed_zeta,
        pic_characters,
        prime_divisor_degrees,
        ray_data,
    )

    ext = job.fixture()
    res = Result()
    choice = job.inputs.get("character")
    if job.action == "ring":
        chars = pic_characters(ext)
        for idx, chi in _selected(chars, choice):
            rep = dirichlet_ring(ext, chi)
            res.exact[f"character {idx}"] = rep.to_json()
            res.checks.extend(dict(c, character=idx) for c in rep.checks)
        return res
    ray_idx = int(job.inputs.get("ray", 0))
    ray = ray_data(ext, ray_idx)
    res.notes.append("normalization uses the discriminant of the maximal order O_K over A")
    for idx, chi in _selected(ray.characters, choice):
        rep = dirichlet_ray(ext, ray, chi)
        res.exact[f"character {idx}"] = rep.to_json()
        res.checks.extend(dict(c, character=idx) for c in rep.checks)
        if "s" in job.inputs:
            s = float(job.inputs["s"])
            res.numeric[f"character {idx}"] = {"s": s, "value": dirichlet_ray_numeric(ext, ray, chi, s)}
    if ext.n == 1 and job.inputs.get("euler_check", True):
        s = float(job.inputs.get("s", 2.0))
        trivial = next(c for c in ray.characters if c.is_trivial)
        num = dirichlet_ray_numeric(ext, ray, trivial, s)
        closed = euler_removed_zeta(ext.q, prime_divisor_degrees(ray.modulus.split()[0]), s)
        res.checks.append({"name": "Euler factor removal", "lhs": num.real, "rhs": closed,
                           "within": abs(num - closed) < 1e-9})
    return res


def run_oracle(job: Job) -> Result:
    from .lfunc import ideal_count_oracle

    ext = job.fixture()
    bound = Fraction(str(job.inputs.get("bound", 2)))
    out = ideal_count_oracle(ext, bound, by_class=bool(job.inputs.get("by_class", False)))
    return Result(exact=out.to_json())


def run_selftest(job: Job) -> Result:
    from .acceptance import run_all

    results = run_all(quick=bool(job.options.get("quick")), seed=int(job.options.get("seed", 0)))
    res = Result()
    for r in results:
        res.checks.append({"name": f"criterion {r.number}: {r.title}", "equal": r.passed})
        res.exact[f"criterion {r.number}"] = r.to_json()
    return res


HANDLERS = {
    "norm": run_norm,
    "eisenstein": run_eisenstein,
    "limit-check": run_limit_check,
    "multi": run_multi,
    "zeta": run_zeta,
    "lfunc": run_lfunc,
    "oracle": run_oracle,
    "selftest": run_selftest,
}


def run_job(job: Job) -> Result:
    terms = job.options.get("precision")
    if terms:
        with precision(int(terms)):
            return HANDLERS[job.command](job)
    return HANDLERS[job.command](job)


# ---------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser):
    p.add_argument("--precision", type=int, help="Laurent truncation length (terms)")
    p.add_argument("--tol", type=float, help="numeric tolerance")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (accepted; jobs run serially)")
    p.add_argument("--out", help="write the report here (atomically) instead of stdout")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized batteries")
    p.add_argument("--timings", action="store_true", help="include wall-clock timings (breaks byte equality)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kron", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, actions in COMMANDS.items():
        p = sub.add_parser(name)
        if actions:
            p.add_argument("action", choices=actions)
        if name == "selftest":
            p.add_argument("--quick", action="store_true", help="smaller random batteries")
            p.add_argument("job", nargs="?", help=argparse.SUPPRESS)
        else:
            p.add_argument("job", help="job JSON file, inline JSON, or a bundled fixture name")
        _common(p)
    return parser


def _error_object(exc: BaseException) -> dict:
    out = {"type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ValidationFailed):
        out["check"] = exc.check
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    options = {"precision": args.precision, "tol": args.tol, "seed": args.seed}
    if args.command == "selftest":
        options["quick"] = args.quick
    options = {k: v for k, v in options.items() if v is not None}
    start = time.perf_counter()
    job = Job(args.command, getattr(args, "action", None), {"job": args.job} if args.job else {}, options)
    try:
        job = load_config(args.job, args.command, getattr(args, "action", None), options)
        result = run_job(job)
        error = None
    except (KronError, ValueError, KeyError, IndexError, FileNotFoundError, json.JSONDecodeError) as exc:
        result, error = None, _error_object(exc)
    timings = {"total_seconds": round(time.perf_counter() - start, 3)} if args.timings else None
    report = emit_report(job, result, error=error, seed=args.seed, timings=timings)
    text = report_text(report)
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    if error is not None:
        return 3 if isinstance(error, dict) and error["type"] == PrecisionExhausted.__name__ else 2
    return 0 if result.ok else 1


if __name__ == "__main__":
    sys.exit(main())
