"""Command-line harness: fixtures in, JSON run reports out.

Exit codes: 0 all checks pass, 1 a verification failed, 2 usage error,
3 fixture could not be loaded or validated.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .continuity import (
    STAR_NORM_NOTE,
    ContinuityQuery,
    find_delta,
    probe_continuity,
    product_star_norm,
)
from .core import (
    Frame,
    InnerProductSpace,
    Vector,
    as_index,
    check_frame_independent,
    check_inner_axioms,
    check_norm_axioms,
    derived_norm,
    frame_conditioning,
    random_spd_metric,
)
from .estimation import (
    EstimatorConfig,
    estimate_inf_norm_ratio,
    estimate_sup_norm,
    verify_corollary,
    verify_fact,
    verify_lemma_equality,
    verify_sandwich,
)
from .functionals import (
    AnchoredFunctional,
    FrameFunctional,
    ProductDomain,
    TensorFunctional,
    closed_form_norm,
    evaluate,
    dense_values,
    to_tensor,
)
from .report import CheckRecord, VerificationReport, _num

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_FIXTURE = 0, 1, 2, 3
KINDS = ("frame-sum", "anchored", "tensor")
FUZZ_CONDITIONING = 1e-4


class FixtureError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Fixture:
    functional: object
    digest: str
    point: tuple | None = None
    p_values: tuple = ()

    @property
    def domain(self) -> ProductDomain:
        return self.functional.domain


@dataclass
class RunReport:
    command: str
    seed: int
    reports: list
    fixture_digest: str | None = None
    duration: float = 0.0
    tool: str = "nnorms"
    version: str = __version__
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def to_dict(self) -> dict:
        d = {
            "tool": self.tool,
            "version": self.version,
            "command": self.command,
            "fixture_sha256": self.fixture_digest,
            "seed": self.seed,
            "pass": self.passed,
            "reports": [r.to_dict() for r in self.reports],
        }
        d.update(self.extra)
        d["duration_s"] = self.duration
        return d

    def to_json(self) -> str:
        # json writes floats with repr, which round-trips exactly
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------- fixtures


def _matrix(value, dim, where):
    a = np.asarray(value, dtype=float)
    if a.shape == (dim * dim,):
        a = a.reshape(dim, dim)
    if a.shape != (dim, dim):
        raise FixtureError(f"{where}: expected {dim}x{dim} entries, got shape {a.shape}")
    return a


def _vectors(rows, space, where):
    out = []
    for j, row in enumerate(rows):
        a = np.asarray(row, dtype=float)
        if a.shape != (space.dim,):
            raise FixtureError(f"{where}[{j}]: expected {space.dim} coordinates, got shape {a.shape}")
        out.append(Vector(a, space))
    return out


def _require(doc, key, where="fixture"):
    if key not in doc:
        raise FixtureError(f"{where}: missing field '{key}'")
    return doc[key]


def parse_fixture(doc: dict, digest: str = "") -> Fixture:
    """Validate a decoded fixture document; every error names the offending field."""
    if not isinstance(doc, dict):
        raise FixtureError("fixture: top level must be an object")
    try:
        k = int(_require(doc, "k"))
        n = int(_require(doc, "n"))
    except (TypeError, ValueError) as exc:
        raise FixtureError(f"n/k: {exc}") from None
    if k < 1 or n < 1:
        raise FixtureError("n/k: must be positive integers")

    spaces_doc = _require(doc, "spaces")
    if not isinstance(spaces_doc, list) or len(spaces_doc) not in (1, k):
        raise FixtureError(f"spaces: expected a list of 1 or {k} entries")
    spaces = []
    for i, sd in enumerate(spaces_doc):
        where = f"spaces[{i}]"
        dim = int(_require(sd, "dim", where))
        metric = sd.get("metric")
        try:
            metric = np.eye(dim) if metric is None else _matrix(metric, dim, f"{where}.metric")
            spaces.append(InnerProductSpace(metric))
        except FixtureError:
            raise
        except ValueError as exc:
            raise FixtureError(f"{where}.metric: {exc}") from None
    if len(spaces) == 1:
        spaces = spaces * k

    frames_doc = _require(doc, "frames")
    if not isinstance(frames_doc, list) or len(frames_doc) != k:
        raise FixtureError(f"frames: expected {k} frames")
    frames = []
    for i, (rows, s) in enumerate(zip(frames_doc, spaces)):
        where = f"frames[{i}]"
        if not isinstance(rows, list) or len(rows) != n:
            raise FixtureError(f"{where}: expected {n} vectors")
        if n > s.dim:
            raise FixtureError(f"{where}: n={n} exceeds dimension {s.dim}")
        fr = Frame(tuple(_vectors(rows, s, where)))
        if not check_frame_independent(fr):
            raise FixtureError(f"{where}: frame not linearly independent")
        frames.append(fr)
    domain = ProductDomain(tuple(frames))

    fdoc = _require(doc, "functional")
    kind = _require(fdoc, "kind", "functional")
    if kind == "frame-sum":
        f = FrameFunctional(domain)
    elif kind == "anchored":
        anchors = _require(fdoc, "anchors", "functional")
        if not isinstance(anchors, list) or len(anchors) != k:
            raise FixtureError(f"functional.anchors: expected {k} vectors")
        ws = [_vectors([a], s, f"functional.anchors[{i}]")[0] for i, (a, s) in enumerate(zip(anchors, spaces))]
        f = AnchoredFunctional(domain, tuple(ws))
    elif kind == "tensor":
        coeffs = np.asarray(_require(fdoc, "coefficients", "functional"), dtype=float).ravel()
        if coeffs.size != int(np.prod(domain.dims)):
            raise FixtureError(
                f"functional.coefficients: expected {int(np.prod(domain.dims))} entries, got {coeffs.size}"
            )
        f = TensorFunctional(domain, coeffs)
    else:
        raise FixtureError(f"functional.kind: unknown kind {kind!r}; expected one of {KINDS}")

    point = None
    if "point" in doc:
        rows = doc["point"]
        if not isinstance(rows, list) or len(rows) != k:
            raise FixtureError(f"point: expected {k} vectors")
        point = tuple(_vectors([r], s, f"point[{i}]")[0] for i, (r, s) in enumerate(zip(rows, spaces)))

    p_values = ()
    if "p" in doc:
        raw = doc["p"] if isinstance(doc["p"], list) else [doc["p"]]
        try:
            p_values = tuple(as_index(p) for p in raw)
        except (TypeError, ValueError) as exc:
            raise FixtureError(f"p: {exc}") from None
    return Fixture(f, digest, point, p_values)


def load_fixture(path) -> Fixture:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise FixtureError(f"{path}: cannot read ({exc.strerror})") from None
    digest = hashlib.sha256(raw).hexdigest()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise FixtureError(f"{path}: parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    except UnicodeDecodeError:
        raise FixtureError(f"{path}: not UTF-8 text") from None
    return parse_fixture(doc, digest)


def fixture_document(f, point=None, p_values=()) -> dict:
    """Inverse of :func:`parse_fixture` for functionals built in code."""
    dom = f.domain
    doc = {
        "spaces": [{"dim": s.dim, "metric": s.metric.ravel().tolist()} for s in dom.spaces],
        "n": dom.n,
        "k": dom.k,
        "frames": [[v.coords.tolist() for v in fr.vectors] for fr in dom.frames],
        "functional": {"kind": f.kind},
    }
    if isinstance(f, AnchoredFunctional):
        doc["functional"]["anchors"] = [w.coords.tolist() for w in f.anchors]
    elif isinstance(f, TensorFunctional):
        doc["functional"]["coefficients"] = f.coefficients.ravel().tolist()
    if point is not None:
        doc["point"] = [x.coords.tolist() for x in point]
    if p_values:
        doc["p"] = [_num(as_index(p).p) for p in p_values]
    return doc


# ---------------------------------------------------------------- random instances


def random_frame(space: InnerProductSpace, n: int, rng: np.random.Generator) -> Frame:
    while True:
        fr = Frame.from_coords(space, rng.standard_normal((n, space.dim)))
        if frame_conditioning(fr) > FUZZ_CONDITIONING:
            return fr


def random_instance(rng: np.random.Generator, dims=(3, 4), n=(2, 2), k=(1, 2), kind=None):
    """A random functional on random SPD spaces; ranges are inclusive ``(lo, hi)``."""
    kk = int(rng.integers(k[0], k[1] + 1))
    ds = [int(rng.integers(dims[0], dims[1] + 1)) for _ in range(kk)]
    nn = int(rng.integers(n[0], min(n[1], *ds) + 1))
    spaces = [InnerProductSpace(random_spd_metric(d, rng)) for d in ds]
    domain = ProductDomain(tuple(random_frame(s, nn, rng) for s in spaces))
    kind = kind or KINDS[int(rng.integers(len(KINDS)))]
    if kind == "frame-sum":
        return FrameFunctional(domain)
    if kind == "anchored":
        return AnchoredFunctional(domain, tuple(Vector(rng.standard_normal(s.dim), s) for s in spaces))
    if kind == "tensor":
        return TensorFunctional(domain, rng.standard_normal(domain.dims))
    if kind == "zero":
        return TensorFunctional.zero(domain)
    raise ValueError(f"unknown kind {kind!r}")


def fuzz(
    trials: int = 25,
    seed: int = 0,
    dims=(3, 4),
    n=(2, 2),
    k=(1, 2),
    p_set=(1, 1.5, 2, "inf"),
    restarts: int = 64,
    tol: float = 0.05,
    kind: str | None = None,
) -> RunReport:
    """Lemma, sandwich and corollary checks on random instances; reproducible from ``seed``.

    Trial ``t`` draws everything from ``SeedSequence(seed, spawn_key=(t,))``.
    The sandwich runs at every p in ``p_set``; the lemma at one random p and
    the corollary at one random pair.
    """
    if dims[0] > dims[1] or n[0] > n[1] or k[0] > k[1] or not p_set:
        raise ValueError("ranges must be nonempty")
    if n[0] > dims[0]:
        raise ValueError("dims must be >= n")
    ps = [as_index(p) for p in p_set]
    start = time.perf_counter()
    reports = []
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(t,)))
        f = random_instance(rng, dims, n, k, kind)
        cfg = EstimatorConfig(restarts=restarts, seed=int(rng.integers(2**31)))
        tag = f"trial {t} ({f.kind}, k={f.domain.k}, n={f.domain.n}, dims={list(f.domain.dims)})"
        p = ps[int(rng.integers(len(ps)))]
        p1, p2 = (ps[int(i)] for i in rng.integers(len(ps), size=2))
        batch = [verify_lemma_equality(f, p, cfg, tol)]
        batch += [verify_sandwich(f, q, cfg, tol) for q in ps]
        batch.append(verify_corollary(f, p1, p2, cfg, tol))
        for r in batch:
            reports.append(VerificationReport.from_checks(
                f"{r.claim} / {tag}", r.details, r.lhs, r.rhs, r.tolerance, r.notes
            ))
    return RunReport("fuzz", seed, reports, duration=time.perf_counter() - start)


# ---------------------------------------------------------------- commands


def _cfg(args) -> EstimatorConfig:
    return EstimatorConfig(restarts=args.restarts, seed=args.seed)


def _p_list(arg, fx: Fixture, default):
    if arg is not None:
        return [as_index(arg)]
    return list(fx.p_values) or [as_index(default)]


def _cmd_axioms(args, fx):
    tol = args.tol
    out = []
    for i, s in enumerate(dict.fromkeys(fx.domain.spaces)):
        for check in (check_norm_axioms, check_inner_axioms):
            r = check(s, fx.domain.n, args.trials, args.seed + i, tol)
            out.append(r)
    return out


def _point(fx):
    return fx.point if fx.point is not None else tuple(fr.vectors[0] for fr in fx.domain.frames)


def _cmd_eval(args, fx):
    f = fx.functional
    xs = _point(fx)
    value = evaluate(f, xs)
    dense = float(dense_values(to_tensor(f).coefficients, [x.coords[None, :] for x in xs])[0])
    err = abs(value - dense) / max(abs(value), abs(dense), 1e-300)
    tol = 1e-10 if args.tol is None else args.tol
    rec = CheckRecord("evaluate vs dense form", value, dense, tol, err <= tol or value == dense)
    star = product_star_norm(xs, fx.domain)
    return [VerificationReport.from_checks(
        "evaluate", [rec], value, dense, tol, [f"kind={f.kind}", f"star_norm={star!r}", STAR_NORM_NOTE]
    )]


def _cmd_norm(args, fx):
    f = fx.functional
    out = []
    for p in _p_list(args.p, fx, 1):
        try:
            closed = closed_form_norm(f, p)
        except ValueError:
            closed = None
        if args.method == "closed":
            if closed is None:
                raise ValueError(f"no closed form for kind {f.kind!r} at p={p}")
            rec = CheckRecord("closed form finite", closed, closed, 0.0, np.isfinite(closed))
            out.append(VerificationReport.from_checks(f"norm p={p} (closed)", [rec], closed, closed, 0.0))
            continue
        estimator = estimate_sup_norm if args.method == "sup" else estimate_inf_norm_ratio
        est = estimator(f, p, _cfg(args))
        feas = max(derived_norm(x, fr, p) for x, fr in zip(est.argmax, f.domain.frames))
        checks = [CheckRecord("argmax feasibility", feas, 1 + 1e-9, 1e-9, feas <= 1 + 1e-9)]
        if closed is not None:
            checks.append(CheckRecord(
                "estimate <= closed form", est.value, closed * (1 + 1e-9), 1e-9, est.value <= closed * (1 + 1e-9)
            ))
        out.append(VerificationReport.from_checks(
            f"norm p={p} ({args.method})", checks, est.value, closed if closed is not None else est.value, 1e-9,
            [f"restarts_used={est.restarts_used}", f"converged={est.converged}",
             "argmax=" + json.dumps([x.coords.tolist() for x in est.argmax])],
        ))
    return out


def _cmd_fact(args, fx):
    tol = 0.02 if args.tol is None else args.tol
    ps = [args.p] if args.p is not None else (list(fx.p_values) or [None])
    return [verify_fact(fx.functional, args.id, p, _cfg(args), tol) for p in ps]


def _cmd_lemma(args, fx):
    tol = 0.02 if args.tol is None else args.tol
    return [verify_lemma_equality(fx.functional, p, _cfg(args), tol) for p in _p_list(args.p, fx, 1)]


def _cmd_sandwich(args, fx):
    return [verify_sandwich(fx.functional, p, _cfg(args), args.slack) for p in _p_list(args.p, fx, 2)]


def _cmd_corollary(args, fx):
    return [verify_corollary(fx.functional, args.p1, args.p2, _cfg(args), args.slack)]


def _cmd_continuity(args, fx):
    f = fx.functional
    xs = _point(fx)
    try:
        C = closed_form_norm(f, 1)
        how = "C = closed-form first-index norm"
    except ValueError:
        C = 1.05 * estimate_sup_norm(f, 1, _cfg(args)).value
        how = "C = 1.05 x first-index norm estimate"
    if args.delta is not None:
        cert = probe_continuity(f, xs, args.delta, args.epsilon, args.trials, args.seed)
    else:
        cert = find_delta(f, C, ContinuityQuery(xs, args.epsilon, args.trials, args.radius_cap), args.seed)
    rec = CheckRecord("empirical_max < epsilon", cert.empirical_max, cert.epsilon, 0.0, cert.passed)
    notes = [f"delta={cert.delta!r}", f"modulus={_num(cert.modulus)!r}", how, *cert.notes]
    return [VerificationReport.from_checks("k-continuity", [rec], notes=notes)]


def _range(text):
    parts = text.replace("..", "-").split("-")
    try:
        lo, hi = (int(parts[0]), int(parts[-1]))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or range like 3..4, got {text!r}") from None
    if len(parts) > 2 or lo > hi:
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return lo, hi


def _index(text):
    try:
        return as_index(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _p_set(text):
    return [_index(t) for t in text.split(",") if t]


COMMANDS = {
    "axioms": _cmd_axioms,
    "eval": _cmd_eval,
    "norm": _cmd_norm,
    "fact": _cmd_fact,
    "lemma": _cmd_lemma,
    "sandwich": _cmd_sandwich,
    "corollary": _cmd_corollary,
    "continuity": _cmd_continuity,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--fixture", type=Path, help="fixture JSON file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--restarts", type=int, default=64)
    common.add_argument("--tol", type=float, default=None, help="override the command's tolerance")
    common.add_argument("--out", type=Path, default=None, help="write the report here instead of stdout")

    parser = argparse.ArgumentParser(prog="nnorms", description="Verify n-norm and dual-norm identities.")
    parser.add_argument("--version", action="version", version=f"nnorms {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("axioms", parents=[common], help="n-norm and n-inner product axioms")
    p.add_argument("--trials", type=int, default=500)
    sub.add_parser("eval", parents=[common], help="evaluate the functional at the fixture point")
    p = sub.add_parser("norm", parents=[common], help="dual norm by closed form or estimation")
    p.add_argument("--p", type=_index, default=None)
    p.add_argument("--method", choices=("closed", "sup", "inf"), default="sup")
    p = sub.add_parser("fact", parents=[common], help="closed-form norm and its witness")
    p.add_argument("--id", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--p", type=_index, default=None)
    p = sub.add_parser("lemma", parents=[common], help="sup and best-ratio estimators agree")
    p.add_argument("--p", type=_index, default=None)
    p = sub.add_parser("sandwich", parents=[common], help="index-1 vs index-p norm equivalence")
    p.add_argument("--p", type=_index, default=None)
    p.add_argument("--slack", type=float, default=0.05)
    p = sub.add_parser("corollary", parents=[common], help="two-index norm chain")
    p.add_argument("--p1", type=_index, default=as_index(1))
    p.add_argument("--p2", type=_index, default=as_index(2))
    p.add_argument("--slack", type=float, default=0.05)
    p = sub.add_parser("continuity", parents=[common], help="delta for an epsilon, checked by probing")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--delta", type=float, default=None, help="probe this delta instead of deriving one")
    p.add_argument("--radius-cap", type=float, default=1.0)
    p = sub.add_parser("fuzz", parents=[common], help="random instances through the lemma/sandwich/corollary checks")
    p.add_argument("--trials", type=int, default=25)
    p.add_argument("--dims", type=_range, default=(3, 4))
    p.add_argument("--n", type=_range, default=(2, 2))
    p.add_argument("--k", type=_range, default=(1, 2))
    p.add_argument("--p-set", type=_p_set, default=[as_index(1), as_index(1.5), as_index(2), as_index("inf")])
    p.add_argument("--kind", choices=(*KINDS, "zero"), default=None)
    return parser


def _emit(report: RunReport, out: Path | None):
    text = report.to_json()
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def run_command(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    start = time.perf_counter()
    try:
        if args.command == "fuzz":
            tol = 0.05 if args.tol is None else args.tol
            report = fuzz(args.trials, args.seed, args.dims, args.n, args.k, args.p_set,
                          args.restarts, tol, args.kind)
        else:
            if args.fixture is None:
                parser.print_usage(sys.stderr)
                print(f"nnorms {args.command}: --fixture is required", file=sys.stderr)
                return EXIT_USAGE
            fx = load_fixture(args.fixture)
            reports = COMMANDS[args.command](args, fx)
            report = RunReport(args.command, args.seed, reports, fx.digest)
    except FixtureError as exc:
        print(f"fixture error: {exc}", file=sys.stderr)
        return EXIT_FIXTURE
    except ValueError as exc:
        print(f"nnorms {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report.duration = time.perf_counter() - start
    _emit(report, args.out)
    return EXIT_PASS if report.passed else EXIT_FAIL


def main(argv=None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
