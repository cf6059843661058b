"""Experiment harness: run the sampler over models and splits, combine
runs into ensembles, and report benchmark-style tables.

Subcommands::

    evidencenet run      --data housing.data --models "br" "lh sv (2)" ...
    evidencenet ensemble --out DIR MEMBER_DIR [MEMBER_DIR ...]
    evidencenet report   RUN_DIR [RUN_DIR ...]
    evidencenet oracle   br --data housing.data
    evidencenet verify   [--data housing.data] [--full]

The data path defaults to the ``EVIDENCENET_DATA`` environment variable.
Every run directory is self-describing: a config snapshot, the dead-point
CSV, a summary JSON (with content checksum), and a predictions CSV.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import data as data_mod
from . import ensemble as ensemble_mod
from . import oracle as oracle_mod
from . import posterior as posterior_mod
from . import sampler as sampler_mod
from .model import (benchmark_grid, desk_grid, grid_sort_key, parse_name,
                    total_dim)

DATA_ENV = "EVIDENCENET_DATA"
DESK_N_LIVE = 200
PAPER_N_LIVE = 1000


def model_slug(name: str) -> str:
    slug = name.replace(",", "-").replace(" ", "_")
    return "".join(c for c in slug if c.isalnum() or c in "_-")


def run_seed(master_seed: int, model_name: str, split_index: int) -> int:
    """Per-run seed derived stably from the master seed and run identity."""
    digest = hashlib.sha256(
        f"{master_seed}\x00{model_name}\x00{split_index}".encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2 ** 63)


def load_dataset(path) -> data_mod.Dataset:
    return data_mod.whiten(data_mod.load_table(path))


def _data_path(args) -> str:
    path = args.data or os.environ.get(DATA_ENV)
    if not path:
        raise SystemExit(f"no data file given: pass --data or set {DATA_ENV}")
    if not os.path.exists(path):
        raise SystemExit(f"data file not found: {path} "
                         f"(pass --data or set {DATA_ENV} to the housing table)")
    return path


# --------------------------------------------------------------------------
# run

def _one_run(job):
    """Execute a single (model, split) sampler run and persist artifacts."""
    (name, split_index, data_path, master_seed, n_splits, n_live, n_repeats,
     termination_frac, max_iters, run_dir, config_hash) = job
    dataset = load_dataset(data_path)
    spec = parse_name(name)
    split = data_mod.make_splits(dataset.n_rows, master_seed, n_splits)[split_index]
    train = dataset.subset(split.train_idx)
    test = dataset.subset(split.test_idx)

    cfg = sampler_mod.SamplerConfig(
        n_live=n_live, n_repeats=n_repeats, seed=run_seed(master_seed, name, split_index),
        termination_frac=termination_frac, max_iters=max_iters)
    nsrun = sampler_mod.run(spec, train, cfg, model_name=name, split_index=split_index)

    samples = posterior_mod.posterior_samples(nsrun, spec)
    summary_stats = posterior_mod.predictive_summary(samples, test.features, test.targets)

    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    sampler_mod.write_dead_points(nsrun, run_dir / "dead.csv")
    posterior_mod.write_predictions(run_dir / "predictions.csv", test.targets,
                                    summary_stats.y_hat, summary_stats.y_sd)
    summary = sampler_mod.run_summary(
        nsrun,
        test_loss=summary_stats.test_loss,
        test_loss_err=summary_stats.test_loss_err,
        dim=total_dim(spec),
        config_hash=config_hash,
        ess=samples.ess)
    sampler_mod.write_summary(summary, run_dir / "summary.json")
    return name, split_index, nsrun.converged, nsrun.log_z


def cmd_run(args) -> int:
    data_path = _data_path(args)
    names = args.models or (benchmark_grid() if args.paper_scale else desk_grid())
    specs = {}
    for name in names:
        try:
            specs[name] = parse_name(name)
        except Exception as err:
            print(f"error: bad model name {name!r}: {err}", file=sys.stderr)
            return 2
    offgrid = [n for n, s in specs.items() if not s.on_grid()]
    if offgrid and not args.allow_offgrid:
        print(f"error: models outside the standard grid (use --allow-offgrid): {offgrid}",
              file=sys.stderr)
        return 2

    n_live = args.n_live or (PAPER_N_LIVE if args.paper_scale else DESK_N_LIVE)
    if args.paper_scale:
        print("note: paper-scale settings; the largest models can take hours per run")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = {
        "data": os.path.abspath(data_path),
        "models": list(names),
        "master_seed": args.seed,
        "n_splits": args.n_splits,
        "n_live": n_live,
        "n_repeats": args.n_repeats,
        "termination_frac": args.termination_frac,
        "max_iters": args.max_iters,
    }
    config_text = json.dumps(config, sort_keys=True, indent=2) + "\n"
    (out / "config.json").write_text(config_text)
    config_hash = hashlib.sha256(config_text.encode()).hexdigest()

    jobs = []
    for name in names:
        for split_index in range(args.n_splits):
            run_dir = out / model_slug(name) / f"split{split_index}"
            jobs.append((name, split_index, data_path, args.seed, args.n_splits,
                         n_live, args.n_repeats, args.termination_frac,
                         args.max_iters, str(run_dir), config_hash))

    results = []
    if args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            for res in pool.map(_one_run, jobs):
                results.append(res)
                _announce(res)
    else:
        for job in jobs:
            res = _one_run(job)
            results.append(res)
            _announce(res)

    _write_report(out, collect_rows(_find_summaries([out]), force=True))
    bad = [(n, s) for n, s, converged, _ in results if not converged]
    if bad:
        print(f"error: {len(bad)} run(s) hit max_iters without converging: {bad}",
              file=sys.stderr)
        return 1
    return 0


def _announce(res):
    name, split_index, converged, log_z = res
    state = "ok" if converged else "NOT CONVERGED"
    print(f"[{state}] {name} split{split_index}: log_z = {log_z:.3f}")


# --------------------------------------------------------------------------
# report

def _find_summaries(dirs):
    found = []
    for d in dirs:
        found.extend(sorted(Path(d).rglob("summary.json")))
    return found


def collect_rows(summary_paths, force: bool = False):
    """Aggregate per-split summaries into one table row per model name."""
    by_model = {}
    hashes = set()
    for path in summary_paths:
        summary = sampler_mod.read_summary(path)
        hashes.add(summary.get("config_hash"))
        by_model.setdefault(summary["model_name"], []).append(summary)
    if len(hashes) > 1 and not force:
        raise SystemExit(
            f"refusing to mix runs from {len(hashes)} different config snapshots "
            "(rerun with --force to override)")
    rows = []
    for name in sorted(by_model, key=grid_sort_key):
        summaries = sorted(by_model[name], key=lambda s: s["split_index"] or 0)
        agg = posterior_mod.aggregate_splits(
            log_zs=[s["log_z"] for s in summaries],
            losses=[s["test_loss"] for s in summaries],
            log_z_errs=[s["log_z_err"] for s in summaries],
            loss_errs=[s["test_loss_err"] for s in summaries])
        rows.append({"name": name, "test_loss": agg.test_loss,
                     "test_loss_err": agg.test_loss_err,
                     "test_loss_err_prop": agg.test_loss_err_prop,
                     "log_z": agg.log_z, "log_z_err": agg.log_z_err,
                     "dim": summaries[0]["dim"], "n_splits": agg.n_splits})
    return rows


def _fmt(value, spec_str="{:.4f}") -> str:
    return "" if value is None else spec_str.format(value)


def report_csv(rows) -> str:
    lines = ["name,test_loss,test_loss_err,log_z,log_z_err,dim"]
    for r in rows:
        lines.append(",".join([
            f'"{r["name"]}"', _fmt(r["test_loss"]), _fmt(r["test_loss_err"]),
            _fmt(r["log_z"], "{:.2f}"), _fmt(r["log_z_err"], "{:.2f}"),
            str(r["dim"])]))
    return "\n".join(lines) + "\n"


def report_text(rows) -> str:
    header = f"{'name':<22} {'test loss':>12} {'loss err':>9} {'log Z':>10} {'Z err':>7} {'dim':>5}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(f"{r['name']:<22} {_fmt(r['test_loss']):>12} "
                     f"{_fmt(r['test_loss_err']):>9} {_fmt(r['log_z'], '{:.2f}'):>10} "
                     f"{_fmt(r['log_z_err'], '{:.2f}'):>7} {r['dim']:>5}")
    return "\n".join(lines) + "\n"


def _write_report(out_dir: Path, rows) -> None:
    (out_dir / "report.csv").write_text(report_csv(rows))


def cmd_report(args) -> int:
    paths = _find_summaries(args.dirs)
    rows = collect_rows(paths, force=args.force)
    text = report_text(rows)
    sys.stdout.write(text)
    if args.csv:
        Path(args.csv).write_text(report_csv(rows))
    return 0


# --------------------------------------------------------------------------
# ensemble

def _member_split_dirs(member_dir: Path):
    return {int(p.name.removeprefix("split")): p
            for p in member_dir.glob("split*") if (p / "summary.json").exists()}


def cmd_ensemble(args) -> int:
    members = [Path(d) for d in args.members]
    per_member = [_member_split_dirs(m) for m in members]
    split_sets = [set(d) for d in per_member]
    if not split_sets or not split_sets[0]:
        print("error: no member runs found", file=sys.stderr)
        return 2
    common = set.intersection(*split_sets)
    if any(s != common for s in split_sets):
        print(f"error: members disagree on split structure: "
              f"{[sorted(s) for s in split_sets]}", file=sys.stderr)
        return 2

    prior = np.asarray(args.prior, dtype=float) if args.prior else None
    if prior is not None:
        prior = prior / prior.sum()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    member_names = None
    log_zs_agg, losses_agg, z_errs_agg, loss_errs_agg = [], [], [], []
    for split_index in sorted(common):
        summaries = [sampler_mod.read_summary(d[split_index] / "summary.json")
                     for d in per_member]
        member_names = [s["model_name"] for s in summaries]
        log_zs = np.array([s["log_z"] for s in summaries])
        z_errs = np.array([s["log_z_err"] for s in summaries])
        post = ensemble_mod.model_posterior(log_zs, prior)
        log_z_comb = ensemble_mod.combined_evidence(log_zs, prior)
        z_err_comb = float(np.sqrt(np.sum((post.post * z_errs) ** 2)))

        means, sds, y_true = [], [], None
        for d in per_member:
            y_true, y_hat, y_sd = posterior_mod.read_predictions(
                d[split_index] / "predictions.csv")
            means.append(y_hat)
            sds.append(y_sd)
        y_comb, sd_comb = ensemble_mod.mixture_moments(means, sds, post.post)
        loss, loss_err = posterior_mod.test_loss(y_true, y_comb, sd_comb)

        summary = {
            "log_z": float(log_z_comb), "log_z_err": z_err_comb,
            "test_loss": loss, "test_loss_err": loss_err,
            "split_index": split_index, "model_name": args.name,
            "members": member_names,
            "member_log_zs": [float(z) for z in log_zs],
            "model_posterior": [float(p) for p in post.post],
            "dim": 0, "converged": True,
        }
        summary["checksum"] = sampler_mod.summary_checksum(summary)
        split_dir = out / f"split{split_index}"
        split_dir.mkdir(parents=True, exist_ok=True)
        sampler_mod.write_summary(summary, split_dir / "summary.json")
        posterior_mod.write_predictions(split_dir / "predictions.csv",
                                        y_true, y_comb, sd_comb)
        log_zs_agg.append(log_z_comb)
        losses_agg.append(loss)
        z_errs_agg.append(z_err_comb)
        loss_errs_agg.append(loss_err)

    agg = posterior_mod.aggregate_splits(log_zs_agg, losses_agg, z_errs_agg, loss_errs_agg)
    aggregate = {
        "model_name": args.name, "members": member_names,
        "log_z": agg.log_z, "log_z_err": agg.log_z_err,
        "test_loss": agg.test_loss, "test_loss_err": agg.test_loss_err,
        "test_loss_err_prop": agg.test_loss_err_prop,
        "n_splits": agg.n_splits,
    }
    aggregate["checksum"] = sampler_mod.summary_checksum(aggregate)
    sampler_mod.write_summary(aggregate, out / "ensemble.json")
    print(f"{args.name}: log_z = {agg.log_z:.2f}, test_loss = {agg.test_loss:.4f} "
          f"over {agg.n_splits} split(s)")
    return 0


# --------------------------------------------------------------------------
# oracle

def cmd_oracle(args) -> int:
    if args.model != "br":
        print("error: only the 'br' oracle is available", file=sys.stderr)
        return 2
    dataset = load_dataset(_data_path(args))
    splits = data_mod.make_splits(dataset.n_rows, args.seed, args.n_splits)
    log_zs, losses = [], []
    for split in splits:
        train = dataset.subset(split.train_idx)
        test = dataset.subset(split.test_idx)
        blr = oracle_mod.blr_for_split(train)
        y_hat, _ = blr.predict(oracle_mod.blr_design(test))
        loss = float(np.mean((test.targets - y_hat) ** 2))
        log_zs.append(blr.log_evidence())
        losses.append(loss)
        print(f"split {split.split_index}: log_z = {log_zs[-1]:.3f}, test_loss = {loss:.4f}")
    agg = posterior_mod.aggregate_splits(log_zs, losses)
    print(f"mean(log_z) = {np.mean(log_zs):.3f}   log(mean Z) = {agg.log_z:.3f}   "
          f"mean loss = {agg.test_loss:.4f}")
    return 0


# --------------------------------------------------------------------------
# verify

def _scorecard(checks) -> int:
    width = max(len(name) for name, _, _ in checks)
    failures = 0
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}")
        failures += 0 if ok else 1
    print(f"{len(checks) - failures}/{len(checks)} checks passed")
    return 1 if failures else 0


def _verify_checks(data_path, full: bool):
    from . import verify as verify_mod
    checks = list(verify_mod.fast_checks(data_path))
    if full:
        checks.extend(verify_mod.slow_checks(data_path))
    return checks


def cmd_verify(args) -> int:
    checks = []
    if args.runs:
        checks.extend(_verify_run_dirs(args.runs))
    data_path = _data_path(args)
    checks.extend(_verify_checks(data_path, args.full))
    return _scorecard(checks)


def _verify_run_dirs(dirs):
    checks = []
    for path in _find_summaries(dirs):
        try:
            sampler_mod.read_summary(path)
            checks.append((f"checksum {path}", True, "intact"))
        except ValueError as err:
            checks.append((f"checksum {path}", False, str(err)))
    return checks


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evidencenet",
        description="Nested-sampled Bayesian neural networks with evidences and ensembles.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="sample models over data splits")
    run_p.add_argument("--data", help=f"housing table path (default ${DATA_ENV})")
    run_p.add_argument("--models", nargs="+", metavar="NAME",
                       help="model names; default is the desk-scale grid")
    run_p.add_argument("--out", default="runs", help="output directory")
    run_p.add_argument("--seed", type=int, default=38, help="master seed")
    run_p.add_argument("--n-splits", type=int, default=10)
    run_p.add_argument("--n-live", type=int, default=0,
                       help=f"live points (default {DESK_N_LIVE}, "
                            f"{PAPER_N_LIVE} with --paper-scale)")
    run_p.add_argument("--n-repeats", type=int, default=0,
                       help="slice updates per replacement (default 5 x dim)")
    run_p.add_argument("--termination-frac", type=float, default=1e-3)
    run_p.add_argument("--max-iters", type=int, default=2_000_000)
    run_p.add_argument("--threads", type=int, default=1,
                       help="parallel (model, split) workers")
    run_p.add_argument("--paper-scale", action="store_true",
                       help="full grid and 1000 live points (slow)")
    run_p.add_argument("--allow-offgrid", action="store_true",
                       help="permit model combinations outside the standard grid")
    run_p.set_defaults(func=cmd_run)

    ens_p = sub.add_parser("ensemble", help="combine member runs by evidence")
    ens_p.add_argument("members", nargs="+", help="member model run directories")
    ens_p.add_argument("--out", required=True, help="ensemble output directory")
    ens_p.add_argument("--name", default="ensemble", help="label for the ensemble row")
    ens_p.add_argument("--prior", nargs="+", type=float,
                       help="per-member prior weights (default uniform)")
    ens_p.set_defaults(func=cmd_ensemble)

    rep_p = sub.add_parser("report", help="tabulate run/ensemble directories")
    rep_p.add_argument("dirs", nargs="+")
    rep_p.add_argument("--csv", help="also write the table as CSV here")
    rep_p.add_argument("--force", action="store_true",
                       help="mix summaries from different config snapshots")
    rep_p.set_defaults(func=cmd_report)

    ora_p = sub.add_parser("oracle", help="closed-form reference results")
    ora_p.add_argument("model", choices=["br"])
    ora_p.add_argument("--data", help=f"housing table path (default ${DATA_ENV})")
    ora_p.add_argument("--seed", type=int, default=38)
    ora_p.add_argument("--n-splits", type=int, default=10)
    ora_p.set_defaults(func=cmd_oracle)

    ver_p = sub.add_parser("verify", help="acceptance scorecard")
    ver_p.add_argument("--data", help=f"housing table path (default ${DATA_ENV})")
    ver_p.add_argument("--runs", nargs="*", help="run directories to checksum")
    ver_p.add_argument("--full", action="store_true",
                       help="include the slow sampler-vs-oracle checks (minutes)")
    ver_p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
