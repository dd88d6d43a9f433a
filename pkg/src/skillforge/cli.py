"""Command-line interface.

Every subcommand takes the same flags (``--input``/``--manifest``,
``--model``, ``--out``, ``--params key=val,...``, ``--seed``, ``--format``),
writes its artifact atomically and drops a ``<out>.report.json`` run report
next to it. List-valued parameters use ``;`` between items, and pins are
written ``node:x1:x2``, e.g. ``pins=0:0:0;19:1:0.5`` (negative nodes count
from the end). ``gen-corpus`` takes perturbations the same way, as
``perturb=rotation:0.2;time_warp:0.5`` (family and maximum magnitude).

Exit status: 0 on success, 2 on usage errors, 1 on numerical or data
failures (the error's module and name are printed to stderr).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, baselines, constrained, corpus, elastic_map, failure_aware, metrics
from .errors import SkillforgeError
from .fileio import (atomic_write, dumps, load_manifest, load_model, load_trajectory,
                     model_document, save_model, sha256, trajectory_from_dict, trajectory_to_csv,
                     trajectory_to_dict)
from .framework import REPRESENTATIONS, RegionSpec, build_region
from .trajectory import DemoSet, align

COMMANDS = ("fit", "reproduce", "confidence", "sweep", "prune", "failaware", "similarity",
            "bias-report", "region", "gen-corpus", "convert")


class UsageError(Exception):
    pass


def parse_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    return text


def parse_params(text) -> dict:
    if not text:
        return {}
    out = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise UsageError(f"malformed parameter {item!r} (expected key=value)")
        k, v = item.split("=", 1)
        out[k.strip()] = parse_value(v.strip())
    return out


def parse_vector(v):
    if isinstance(v, (int, float)):
        return [float(v)]
    return [float(x) for x in str(v).split(":")]


def parse_list(v, cast=str):
    if v is None:
        return []
    if isinstance(v, (int, float)):
        return [cast(v)]
    return [cast(x) for x in str(v).split(";") if x != ""]


def parse_pins(v, K, kappa=1.0) -> constrained.ConstraintSet:
    pins = []
    for item in parse_list(v):
        fields = item.split(":")
        node = int(fields[0])
        node = node + K if node < 0 else node
        kind = "initial" if node == 0 else "final" if node == K - 1 else "via"
        pins.append(constrained.Pin(node, [float(x) for x in fields[1:]], kind))
    return constrained.ConstraintSet(pins, kappa)


class Run:
    """Parsed arguments plus the bookkeeping for the run report."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = argv
        self.params = parse_params(args.params)
        self.used = set()
        self.inputs = {}
        self.outputs = {}
        self.results = {}
        self.t0 = time.perf_counter()

    def get(self, key, default=None, cast=None):
        self.used.add(key)
        v = self.params.get(key, default)
        if cast is not None and v is not None:
            try:
                v = cast(v)
            except (TypeError, ValueError):
                raise UsageError(f"parameter {key}={v!r} has the wrong type") from None
        return v

    def need(self, attr):
        v = getattr(self.args, attr)
        if not v:
            raise UsageError(f"--{attr} is required for '{self.args.command}'")
        return v

    def record_input(self, path):
        self.inputs[str(Path(path).resolve())] = sha256(path)

    def demos(self) -> DemoSet:
        if self.args.manifest:
            self.record_input(self.args.manifest)
            ds = load_manifest(self.args.manifest)
            for p in json.loads(Path(self.args.manifest).read_text())["entries"]:
                self.record_input(Path(self.args.manifest).parent / p["path"])
            return ds
        paths = self.need("input")
        for p in paths:
            self.record_input(p)
        return DemoSet([load_trajectory(p) for p in paths])

    def model(self):
        path = self.need("model")
        self.record_input(path)
        return load_model(path)

    def check_params(self):
        unknown = sorted(set(self.params) - self.used)
        if unknown:
            raise UsageError(f"unknown parameters for '{self.args.command}': {unknown}")

    def write(self, text, suffix=None):
        self.check_params()
        out = Path(self.need("out"))
        if suffix:
            out = out.with_suffix(suffix)
        atomic_write(out, text)
        self.outputs[str(out.resolve())] = sha256(out)
        return out

    def write_trajectory(self, traj):
        if self.args.format == "json":
            return self.write(dumps(trajectory_to_dict(traj)))
        return self.write(trajectory_to_csv(traj))

    def finish(self):
        self.check_params()
        out = Path(self.args.out)
        report = {
            "command": self.args.command,
            "argv": self.argv,
            "cwd": os.getcwd(),
            "params": self.params,
            "seed": self.args.seed,
            "format": self.args.format,
            "tool_version": __version__,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "results": self.results,
            "timings": {"total_seconds": time.perf_counter() - self.t0},
        }
        atomic_write(report_path(out), dumps(_jsonable(report)))


def report_path(out) -> Path:
    out = Path(out)
    return out.parent / (out.name + ".report.json")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else repr(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _elastic(run):
    kind, obj, doc = run.model()
    if kind != "elastic_map":
        raise UsageError(f"'{run.args.command}' needs an elastic_map model, got {kind}")
    emap, demos = obj
    if run.args.input or run.args.manifest:
        demos = run.demos()
    return emap, demos


# ------------------------------------------------------------------ commands

def cmd_fit(run):
    kind = run.get("model", "elastic_map")
    if kind in ("dmp", "lte"):
        return _fit_baseline(run, kind)
    if kind != "elastic_map":
        raise UsageError(f"'fit' builds elastic_map, dmp or lte models, not {kind!r}")
    demos = run.demos()
    T = run.get("T", None, int)
    if T is not None:
        demos = align(demos, T)
    K = run.get("K", 20, int)
    emap, trace = elastic_map.fit_demos(
        demos, K=K, strategy=run.get("strategy"),
        init=run.get("init", "time"), weighting=run.get("weighting", "uniform"),
        lam=run.get("lam", None, float), mu=run.get("mu", None, float),
        max_iters=run.get("max_iters", 200, int), tol=run.get("tol", 1e-12, float))
    points, w = elastic_map.pooled_data(demos, emap.weighting)
    e = elastic_map.energy(emap, points, elastic_map.Assignment(
        elastic_map.assign(emap.nodes, points), w))
    prov = {"inputs": run.inputs, "parameters": run.params, "command": "fit"}
    run.write(dumps(model_document(emap, demos, _jsonable(prov))))
    run.results.update(energy=e._asdict(), trace=trace, iterations=len(trace),
                       lam=emap.lam, mu=emap.mu, strategy=emap.strategy)


def _fit_baseline(run, kind):
    demos = run.demos()
    if len(demos.demos) != 1:
        raise UsageError(f"a {kind} model is trained from exactly one demonstration")
    demo = demos.demos[0]
    if kind == "dmp":
        model = baselines.dmp_train(demo, run.get("n_basis", 30, int),
                                    alpha_z=run.get("alpha_z", 25.0, float),
                                    alpha_x=run.get("alpha_x", 4.0, float),
                                    n_steps=run.get("n_steps", None, int))
    else:
        model = baselines.lte_train(demo, run.get("n", None, int))
    prov = {"inputs": run.inputs, "parameters": run.params, "command": "fit"}
    run.write(dumps(model_document(model, None, _jsonable(prov))))
    run.results["kind"] = kind


def cmd_reproduce(run):
    kind, obj, _ = run.model()
    n = run.get("n", None, int)
    if kind == "elastic_map":
        emap, demos = obj
        if run.args.input or run.args.manifest:
            demos = run.demos()
        kappa = run.get("kappa", 1.0, float)
        cons = parse_pins(run.get("pins"), emap.K, kappa)
        start, goal = run.get("start"), run.get("goal")
        if start is not None or goal is not None:
            ends = constrained.ConstraintSet.endpoints(
                emap.K, None if start is None else parse_vector(start),
                None if goal is None else parse_vector(goal), kappa)
            cons = constrained.ConstraintSet(list(ends.pins) + list(cons.pins), kappa)
        traj, rep = constrained.reproduce_constrained(emap, demos, cons, n=n)
        run.results.update(kappa=rep.kappa, duals=rep.duals,
                           value_constrained=rep.value_constrained,
                           value_unconstrained=rep.value_unconstrained)
    elif kind in ("dmp", "lte"):
        start = run.get("start")
        goal = run.get("goal")
        start = None if start is None else parse_vector(start)
        goal = None if goal is None else parse_vector(goal)
        fn = baselines.dmp_reproduce if kind == "dmp" else baselines.lte_reproduce
        traj = fn(obj, start, goal, n=n)
    else:
        raise UsageError("use 'failaware' for failure-aware models")
    run.write_trajectory(traj)


def cmd_confidence(run):
    emap, demos = _elastic(run)
    cons = parse_pins(run.get("pins"), emap.K, run.get("kappa", 1.0, float))
    _, rep = constrained.reproduce_constrained(emap, demos, cons)
    doc = {"kappa": rep.kappa, "duals": rep.duals.tolist(), "nodes": list(rep.nodes),
           "value_constrained": rep.value_constrained,
           "value_unconstrained": rep.value_unconstrained}
    run.write(dumps(doc))
    run.results.update(doc)


def cmd_sweep(run):
    emap, demos = _elastic(run)
    kappas = parse_list(run.get("kappas", "0.1;0.2;0.3;0.4;0.5;0.6;0.7;0.8;0.9;1.0"), float)
    cons = parse_pins(run.get("pins"), emap.K)
    entries = constrained.confidence_sweep(emap, demos, cons, kappas, n=run.get("n", None, int))
    if run.args.format == "json":
        run.write(dumps([{"kappa": e.kappa, "achieved": e.achieved, "violation": e.violation,
                          "trajectory": trajectory_to_dict(e.trajectory)} for e in entries]))
    else:
        lines = ["kappa,achieved,violation"]
        lines += [f"{e.kappa!r},{e.achieved!r},{e.violation!r}" for e in entries]
        run.write("\n".join(lines) + "\n")
    run.results["violations"] = [e.violation for e in entries]


def cmd_prune(run):
    emap, demos = _elastic(run)
    cons = parse_pins(run.get("pins"), emap.K)
    res = constrained.prune(emap, demos, cons, run.get("threshold", 0.1, float),
                            iterative=run.get("iterative", False, bool))
    doc = {"removed": res.removed, "change": res.change,
           "kept": [{"node": p.node, "target": list(p.target), "kind": p.kind}
                    for p in res.constraints.pins]}
    run.write(dumps(doc))
    run.results.update(doc)


def cmd_failaware(run):
    if run.args.model:
        kind, model, _ = run.model()
        if kind != "failure_aware":
            raise UsageError(f"'failaware' needs a failure_aware model, got {kind}")
    else:
        demos = run.demos()
        demos = align(demos, run.get("T", max(len(d) for d in demos.demos), int))
        model = failure_aware.encode(demos, run.get("eps_reg", failure_aware.DEFAULT_EPS_REG, float))
    beta = run.get("beta")
    if beta is None:
        raise UsageError("'failaware' requires the beta parameter")
    beta = float(beta)
    smooth = (run.get("lam", 0.0, float), run.get("mu", 0.0, float))
    pins = run.get("pins")
    cons = parse_pins(pins, model.T) if pins else None
    if model.mu_s is None:
        rho = run.get("rho", None, float)
        if rho is None:
            raise UsageError("only failed demonstrations: the rho parameter is required")
        traj = failure_aware.solve_failed_only(model, rho, None, beta, smooth, cons)
        run.results.update(mode="failed_only", beta_used=beta, rho=rho)
    else:
        traj, used = failure_aware.solve_repro(model, beta, smooth, cons)
        run.results.update(mode="mixed", beta_used=used)
    if run.get("save_model", False, bool):
        save_model(model, Path(run.args.out).with_suffix(".model.json"))
    run.write_trajectory(traj)


def cmd_similarity(run):
    paths = run.need("input")
    if len(paths) < 2:
        raise UsageError("'similarity' needs a reference and at least one candidate --input")
    trajs = []
    for p in paths:
        run.record_input(p)
        trajs.append(load_trajectory(p))
    ref = trajs[0]
    which = run.get("metric", "frechet")
    ids = metrics.METRICS if which == "all" else parse_list(which)
    sigma = run.get("sigma", None, float)
    sigma = metrics.default_sigma(ref) if sigma is None else sigma
    lines = ["candidate,metric,distance,similarity"]
    rows = []
    for p, cand in zip(paths[1:], trajs[1:]):
        for m in ids:
            d = metrics.distance(m, cand, ref)
            s = float(np.exp(-d / sigma))
            lines.append(f"{Path(p).name},{m},{d!r},{s!r}")
            rows.append({"candidate": Path(p).name, "metric": m, "distance": d, "similarity": s})
    if run.args.format == "json":
        run.write(dumps(rows))
    else:
        run.write("\n".join(lines) + "\n")
    run.results.update(sigma=sigma, rows=rows)


def cmd_bias_report(run):
    mags = {f: run.get(f, corpus.DEFAULT_MAGNITUDES[f], float) for f in corpus.PERTURBATIONS}
    pairs = corpus.pair_corpus(run.args.seed, run.get("pairs", 10, int), mags,
                               run.get("n", 60, int))
    rep = metrics.bias_report(pairs)
    run.write(rep.to_csv())
    run.results["invariant"] = {f"{m}/{f}": bool(v) for (m, f), v in rep.invariant.items()}


def cmd_region(run):
    demos = run.demos()
    demo = demos.demos[0]
    he = parse_list(run.get("half", 0.1), float)
    center = run.get("center")
    spec = RegionSpec(
        half_extents=tuple(he), poi_kind=run.get("poi", "initial"),
        center=None if center is None else tuple(parse_vector(center)),
        resolution=run.get("resolution", 5, int), metric=run.get("metric", "frechet"),
        sigma=run.get("sigma", None, float), threshold=run.get("threshold", 0.5, float),
        representations=tuple(parse_list(run.get("reps", ";".join(REPRESENTATIONS)))),
        K=run.get("K", 20, int), strategy=run.get("strategy", "init1xweight1"),
        n_basis=run.get("n_basis", 30, int))
    region = build_region(demo, spec)
    run.write(region.to_csv())
    run.results.update(inside=int(region.inside.sum()), points=len(region.points),
                       diagnostics=[list(d) for d in region.diagnostics])


def cmd_gen_corpus(run):
    out = run.need("out")
    perturb = {}
    for item in parse_list(run.get("perturb")):
        name, _, mag = item.partition(":")
        try:
            perturb[name] = float(mag)
        except ValueError:
            raise UsageError(f"perturbation {item!r} should read family:max_magnitude") from None
    manifest = corpus.gen_corpus(
        out, run.args.seed, run.get("family", "line"), n_demos=run.get("n_demos", 5, int),
        n_samples=run.get("n_samples", 100, int), noise=run.get("noise", 0.0, float),
        perturbations=perturb or None, n_failed=run.get("n_failed", None, int))
    for p in sorted(Path(out).iterdir()):
        if p.is_file() and not p.name.endswith(".report.json") and not p.name.startswith("."):
            run.outputs[str(p.resolve())] = sha256(p)
    run.results["manifest"] = str(manifest)


def cmd_convert(run):
    if run.args.model:
        run.record_input(run.args.model)
        kind, obj, doc = load_model(run.args.model)
        demos = None
        if kind == "elastic_map":
            obj, demos = obj
        prov = {k: v for k, v in doc["provenance"].items() if k != "tool_version"}
        run.write(dumps(model_document(obj, demos, prov)))
        return
    paths = run.need("input")
    src = Path(paths[0])
    run.record_input(src)
    if src.suffix == ".json":
        traj = trajectory_from_dict(json.loads(src.read_text()))
    else:
        traj = load_trajectory(src)
    run.write_trajectory(traj)


HANDLERS = {
    "fit": cmd_fit, "reproduce": cmd_reproduce, "confidence": cmd_confidence,
    "sweep": cmd_sweep, "prune": cmd_prune, "failaware": cmd_failaware,
    "similarity": cmd_similarity, "bias-report": cmd_bias_report, "region": cmd_region,
    "gen-corpus": cmd_gen_corpus, "convert": cmd_convert,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="skillforge", description="Learn, reproduce and compare point-to-point skills.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--input", nargs="+")
        s.add_argument("--manifest")
        s.add_argument("--model")
        s.add_argument("--out", required=True)
        s.add_argument("--params", default="")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--format", choices=("csv", "json"), default="csv")
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        run = Run(args, argv)
        HANDLERS[args.command](run)
        run.finish()
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except SkillforgeError as exc:
        print(f"{exc.module}: {exc.name}: {exc}", file=sys.stderr)
        return 1
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        # unreadable inputs or unwritable outputs are a problem with the invocation
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    return 0


def replay(report, out=None) -> bool:
    """Re-run the command recorded in a run report.

    Returns ``True`` when every recorded output is reproduced bit for bit.
    With ``out`` the replay writes there instead of the original location.
    """
    doc = json.loads(Path(report).read_text())
    argv = list(doc["argv"])
    cwd = os.getcwd()
    os.chdir(doc["cwd"])
    try:
        targets = {p: Path(p) for p in doc["outputs"]}
        if out is not None:
            i = argv.index("--out")
            orig = Path(argv[i + 1]).resolve()
            new = Path(out).resolve()
            argv[i + 1] = str(new)
            targets = {p: new if Path(p) == orig else new / Path(p).relative_to(orig)
                       for p in doc["outputs"]}
        if main(argv) != 0:
            return False
        return all(sha256(targets[p]) == digest for p, digest in doc["outputs"].items())
    finally:
        os.chdir(cwd)


if __name__ == "__main__":
    sys.exit(main())
