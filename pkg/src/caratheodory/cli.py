"""Command-line driver.

Exit codes: 0 PASS, 1 FAIL (a mathematical check failed), 2 ERROR (I/O,
format or precondition).  Every run emits a JSON report; reports contain no
timestamps so identical inputs and seed give identical reports.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from . import serialize as ser
from .herglotz import NotCaratheodoryError, RecoveryError, default_radii, evaluate as h_evaluate, recover, trig_moments
from .kernels import (FunctionDomainError, IndefiniteKernelError, SampleSet, certify_positive_kernel,
                      negative_squares_estimate, random_sample_set)
from .operators import spectral_norm
from .realization import RelationDefectError, holdout_points, synthesize
from .selftest import SUITES, run_suite

EXIT = {"PASS": 0, "FAIL": 1, "ERROR": 2}


@dataclass
class RunReport:
    command: str
    inputs_digest: str
    outcome: str = "PASS"
    metrics: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    version: str = __version__
    seed: int | None = None
    witness: object = None
    message: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return _jsonable_array(x)
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    raise TypeError(f"not serializable: {type(x).__name__}")


def _jsonable_array(a):
    if np.iscomplexobj(a):
        return np.stack([a.real, a.imag], axis=-1).tolist()
    return a.tolist()


def _digest(args, paths):
    h = hashlib.sha256()
    for p in paths:
        if p is None:
            continue
        try:
            with open(p, "rb") as fh:
                h.update(fh.read())
        except OSError:
            h.update(str(p).encode())
    skip = {"func", "report", "out", "json"}
    h.update(json.dumps({k: v for k, v in sorted(vars(args).items()) if k not in skip},
                        sort_keys=True, default=str).encode())
    return h.hexdigest()


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# commands


def cmd_check_kernel(args, rep: RunReport):
    phi = ser.function_from_json(ser.load(args.spec), "spec")
    if args.samples:
        family = [ser.samples_from_json(ser.load(args.samples), "samples")]
    else:
        rng = np.random.default_rng(args.seed)
        family = [random_sample_set(rng, args.random, radius=args.radius) for _ in range(args.sets)]
    if getattr(phi, "analytic", True) is False:
        # a table is only known at its nodes: add them to every sample set
        nodes = phi.points
        family = [SampleSet.from_points(np.union1d(S.points, nodes), include_origin=S.include_origin)
                  for S in family]
    kr = certify_positive_kernel(phi, family, tol=args.tol)
    rep.metrics.update(worst_eigenvalue=kr.worst_eigenvalue, worst_relative=kr.worst_relative,
                       n_negative=negative_squares_estimate(phi, family), n_sets=kr.n_sets)
    if not kr.passed:
        rep.outcome = "FAIL"
        rep.witness = {"sample_set": kr.worst_set, "vector": kr.witness,
                       "points": family[kr.worst_set].points}
        rep.message = f"kernel has {rep.metrics['n_negative']} negative square(s)"


def cmd_realize(args, rep: RunReport):
    S = ser.samples_from_json(ser.load(args.samples), "samples")
    if S.values is None:
        raise ser.FormatError("samples carry no function values", "samples")
    if not S.include_origin:
        raise ser.FormatError("sample set must contain the origin z = 0", "samples")
    try:
        R, info = synthesize(S, defect_tol=args.defect_tol, full_output=True)
    except IndefiniteKernelError as e:
        rep.outcome = "FAIL"
        rep.metrics["n_negative"] = e.n_negative
        rep.witness = {"vector": e.witness}
        rep.message = str(e)
        return
    except RelationDefectError as e:
        rep.outcome = "FAIL"
        rep.metrics["relation_defect"] = e.defect
        rep.witness = {"relation_defect": e.defect}
        rep.message = str(e)
        return
    rep.metrics.update(state_dim=R.state_dim, isometry_defect=R.isometry_defect, skew_defect=R.skew_defect,
                       relation_defect=info.relation.defect, gram_condition=info.gram_condition)
    if args.holdout:
        H = ser.samples_from_json(ser.load(args.holdout), "holdout")
        if H.values is None:
            raise ser.FormatError("holdout samples carry no values", "holdout")
        pts, ref = H.points, H.values
    elif args.function:
        phi = ser.function_from_json(ser.load(args.function), "function")
        pts = holdout_points(S.points)
        ref = phi(pts)
    else:
        pts, ref = np.zeros(0, complex), None
    if pts.size:
        errs = np.array([spectral_norm(a - b) / max(1.0, spectral_norm(b)) for a, b in zip(R(pts), ref)])
        rep.metrics["holdout_max_relative_error"] = float(errs.max())
        if errs.max() > args.holdout_tol:
            rep.outcome = "FAIL"
            k = int(np.argmax(errs))
            rep.witness = {"z": complex(pts[k]), "relative_error": float(errs[k])}
            rep.message = "held-out values not reproduced"
    if R.isometry_defect > 1e-8 or R.skew_defect > 1e-10:
        rep.outcome = "FAIL"
        rep.witness = {"isometry_defect": R.isometry_defect, "skew_defect": R.skew_defect}
    if args.out:
        _write(args.out, ser.dumps(ser.realization_to_json(R)))
        rep.artifacts.append(args.out)


def _radii(args):
    if args.radii:
        return np.array([float(x) for x in args.radii.split(",")])
    return default_radii()


def _moment_table(moments):
    return [{"k": k, "moment": m} for k, m in enumerate(moments)]


def cmd_herglotz(args, rep: RunReport):
    if args.action == "eval":
        mu = ser.measure_from_json(ser.load(args.input), "measure")
        z = np.array([ser.dec_complex(_parse_complex(s), "--z") for s in args.z or ["0"]])
        vals = h_evaluate(mu, z)
        rep.metrics["values"] = [{"z": zz, "value": v} for zz, v in zip(z, vals)]
        for zz, v in zip(z, vals):
            print(f"phi({zz:.6g}) = {_fmt_matrix(v)}")
        return
    if args.action == "recover":
        phi = ser.function_from_json(ser.load(args.input), "function")
        source = phi
    else:
        source = ser.measure_from_json(ser.load(args.input), "measure")
    try:
        mu, info = recover(source, radii=_radii(args), depth=args.grid, full_output=True)
    except NotCaratheodoryError as e:
        rep.outcome = "FAIL"
        rep.witness = {"radius": e.radius, "angle": e.angle, "min_eigenvalue": e.min_eigenvalue}
        rep.message = str(e)
        return
    except RecoveryError as e:
        rep.outcome = "FAIL"
        rep.message = str(e)
        return
    moments = trig_moments(mu, args.kmax)
    rep.metrics.update(atoms=info.atom_count, validation_error=info.validation_error,
                       selected=[int(i) for i in info.selection.indices],
                       helly_residual=info.selection.residual)
    rep.metrics["moments"] = _moment_table(moments)
    if args.action == "roundtrip":
        ref = trig_moments(source, args.kmax)
        dev = np.linalg.norm(moments - ref, 2, axis=(1, 2))
        rep.metrics["moment_deviation"] = dev.tolist()
        rep.metrics["max_moment_deviation"] = float(dev.max())
        if dev.max() > args.tol:
            rep.outcome = "FAIL"
            k = int(np.argmax(dev))
            rep.witness = {"k": k, "recovered": moments[k], "original": ref[k]}
    for k, m in enumerate(moments):
        print(f"c_{k} = {_fmt_matrix(m)}")
    if args.out:
        _write(args.out, ser.dumps(ser.measure_to_json(mu)))
        rep.artifacts.append(args.out)


def cmd_selftest(args, rep: RunReport):
    results = run_suite(args.suite, args.seed)
    rep.metrics["checks"] = [asdict(r) for r in results]
    rep.metrics["passed"] = sum(r.passed for r in results)
    rep.metrics["total"] = len(results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<40s} {r.metric:.3e}")
    print(f"{rep.metrics['passed']}/{rep.metrics['total']} checks passed")
    failed = [r.name for r in results if not r.passed]
    if failed:
        rep.outcome = "FAIL"
        rep.witness = {"failed": failed}


def _parse_complex(s):
    try:
        return [complex(s.replace(" ", "")).real, complex(s.replace(" ", "")).imag]
    except ValueError:
        raise ser.FormatError(f"cannot parse complex number {s!r}", "--z") from None


def _fmt_matrix(A):
    A = np.atleast_2d(A)
    if A.shape == (1, 1):
        return f"{A[0, 0]:.12g}"
    return np.array2string(A, precision=10, suppress_small=True).replace("\n", "")


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="caratheodory", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--report", help="write the JSON report here (default: stdout with --json)")
        sp.add_argument("--json", action="store_true", help="print the JSON report to stdout")
        sp.add_argument("--seed", type=int, default=0)

    ck = sub.add_parser("check-kernel", help="certify positivity of k_phi on sample sets")
    ck.add_argument("spec")
    ck.add_argument("--samples")
    ck.add_argument("--random", type=int, default=8, metavar="N")
    ck.add_argument("--sets", type=int, default=10)
    ck.add_argument("--radius", type=float, default=0.9)
    ck.add_argument("--tol", type=float, default=1e-10)
    common(ck)
    ck.set_defaults(func=cmd_check_kernel, paths=("spec", "samples"))

    rz = sub.add_parser("realize", help="build an isometric colligation from samples")
    rz.add_argument("samples")
    rz.add_argument("--holdout")
    rz.add_argument("--function", help="function spec used to generate rotated held-out values")
    rz.add_argument("--holdout-tol", type=float, default=1e-6)
    rz.add_argument("--defect-tol", type=float, default=1e-6)
    rz.add_argument("--out")
    common(rz)
    rz.set_defaults(func=cmd_realize, paths=("samples", "holdout", "function"))

    hg = sub.add_parser("herglotz", help="Herglotz integral: eval, recover, roundtrip")
    hg.add_argument("action", choices=("recover", "eval", "roundtrip"))
    hg.add_argument("input")
    hg.add_argument("--z", action="append")
    hg.add_argument("--radii", help="comma-separated radii schedule")
    hg.add_argument("--grid", type=int, default=10, help="dyadic depth of the angle grid")
    hg.add_argument("--kmax", type=int, default=8)
    hg.add_argument("--tol", type=float, default=1e-3)
    hg.add_argument("--out")
    common(hg)
    hg.set_defaults(func=cmd_herglotz, paths=("input",))

    st = sub.add_parser("selftest", help="run property suites")
    st.add_argument("--suite", choices=SUITES, default="core")
    common(st)
    st.set_defaults(func=cmd_selftest, paths=())
    return p


def _thread_limit():
    n = os.environ.get("CARATHEODORY_NUM_THREADS")
    if not n:
        return None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(n))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    rep = RunReport(args.command if args.command != "herglotz" else f"herglotz {args.action}",
                    _digest(args, [getattr(args, k, None) for k in args.paths]), seed=args.seed)
    limiter = _thread_limit()
    # with --json, stdout carries only the report
    chatter = contextlib.redirect_stdout(sys.stderr) if args.json else contextlib.nullcontext()
    try:
        with chatter:
            args.func(args, rep)
    except (ser.FormatError, FunctionDomainError, ValueError, OSError) as e:
        rep.outcome = "ERROR"
        rep.message = str(e)
    finally:
        if limiter is not None:
            limiter.restore_original_limits()
    text = rep.to_json()
    if args.report:
        _write(args.report, text)
    if args.json:
        sys.stdout.write(text)
    else:
        line = f"{rep.outcome}: {rep.command}"
        if rep.message:
            line += f" ({rep.message})"
        print(line, file=sys.stderr if rep.outcome != "PASS" else sys.stdout)
    return EXIT[rep.outcome]


if __name__ == "__main__":
    sys.exit(main())
