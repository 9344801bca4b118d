"""Command-line interface: fit, simulate, eval and benchmark.

Every run directory receives a config echo and the seeds that produced it,
so results can be reproduced exactly.  Wall-clock runtime lives in the
metadata file; trace and summary files are byte-stable for a fixed seed.

Exit codes: 0 success, 2 usage error, 3 data error.
"""

from __future__ import annotations

import itertools
import sys
import time
from pathlib import Path

import click
import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from . import __version__
from . import io as bio
from .core import CovariateSet, DataError, Hyperparams, Network, num_clusters
from .metrics import bic_approx, bic_exact, nmi
from .sampler import FitResult, run_chain
from .simulate import DESIGNS, make_dataset, replicate_seed


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.ClickException:
            raise
        except (DataError, ValueError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)


@click.group(cls=_Group)
@click.version_option(__version__)
def main():
    """Bayesian community detection for networks with node covariates."""


def _hyper_options(fn):
    for args, kwargs in reversed(
        [
            (("--alpha",), dict(default=10.0, show_default=True, help="partition concentration")),
            (("--beta",), dict(default=1.0, show_default=True, help="Beta prior for edge probabilities")),
            (("--s2",), dict(default=1.0, show_default=True, help="Gaussian kernel variance")),
            (("--tau2",), dict(default=1.0, show_default=True, help="center prior variance")),
            (("--gamma",), dict(default=1.0, show_default=True, help="Dirichlet concentration")),
        ]
    ):
        fn = click.option(*args, type=float, **kwargs)(fn)
    return fn


def _chain_options(fn):
    for args, kwargs in reversed(
        [
            (("--iters",), dict(default=1000, show_default=True, help="Gibbs sweeps")),
            (("--burnin",), dict(default=None, help="discarded sweeps [default: iters/2]")),
            (("--thin",), dict(default=1, show_default=True, help="keep every k-th sample")),
            (("--seed",), dict(default=0, show_default=True)),
            (("--chains",), dict(default=1, show_default=True, help="independent chains")),
        ]
    ):
        fn = click.option(*args, type=int, **kwargs)(fn)
    return click.option(
        "--jobs",
        type=int,
        default=1,
        envvar="BCDC_JOBS",
        show_default=True,
        help="max concurrent chains/replicates",
    )(fn)


def _parallel(jobs: int, tasks):
    if jobs == 1:
        return [t() for t in tasks]
    return Parallel(n_jobs=jobs)(delayed(t)() for t in tasks)


def _fit_one(net, x, hp, iters, burnin, thin, seed):
    start = time.perf_counter()
    result = run_chain(net, x, hp, iters, burn_in=burnin, thin=thin, seed=seed)
    return result, time.perf_counter() - start


@main.command()
@click.argument("edges", type=click.Path(exists=True, dir_okay=False))
@click.argument("covariates", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option("--types", "types_path", type=click.Path(exists=True, dir_okay=False),
              help="column typing sidecar [default: COVARIATES.types]")
@click.option("--no-covariates", is_flag=True, help="ignore covariates (network-only model)")
@click.option("--mask", "mask_path", type=click.Path(exists=True, dir_okay=False),
              help="edge-status observation mask (pair list)")
@click.option("--truth", "truth_path", type=click.Path(exists=True, dir_okay=False),
              help="reference labels; reported as NMI in the summary")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@_hyper_options
@_chain_options
def fit(edges, covariates, types_path, no_covariates, mask_path, truth_path, out,
        alpha, beta, s2, tau2, gamma, iters, burnin, thin, seed, chains, jobs):
    """Fit the model to an edge list plus optional covariates."""
    hp = Hyperparams(alpha=alpha, beta=beta, s2=s2, tau2=tau2, gamma=gamma)
    if covariates and not no_covariates:
        types = bio.read_column_types(types_path or covariates + ".types")
        x = bio.read_covariates(covariates, types)
        net = bio.read_edge_list(edges, n=x.n)
    elif no_covariates:
        net = bio.read_edge_list(edges)
        x = CovariateSet.empty(net.n)
    else:
        raise click.UsageError("provide a covariate file or pass --no-covariates")
    if mask_path:
        net = Network(net.adj, mask=bio.read_mask(mask_path, net.n))
    truth = bio.read_labels(truth_path) if truth_path else None
    if truth is not None and truth.shape[0] != net.n:
        raise DataError("truth labels disagree with the network on n")

    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    chain_seeds = [replicate_seed(seed, c) for c in range(chains)]
    started = time.perf_counter()
    fits = _parallel(
        jobs,
        [
            (lambda s=s: _fit_one(net, x, hp, iters, burnin, thin, s))
            for s in chain_seeds
        ],
    )
    elapsed = time.perf_counter() - started

    best_chain = int(np.argmax([f.trace.log_joint[f.best_index] for f, _ in fits]))
    result: FitResult = fits[best_chain][0]
    for c, (f, _) in enumerate(fits):
        bio.write_trace(outdir / f"trace_chain{c}.csv", f.trace)
    bio.write_labels(outdir / "labels.csv", result.point_estimate)

    config = {
        "alpha": alpha, "beta": beta, "s2": s2, "tau2": tau2, "gamma": gamma,
        "iters": iters, "burnin": iters // 2 if burnin is None else burnin,
        "thin": thin, "seed": seed, "chains": chains,
        "no_covariates": bool(no_covariates or not covariates),
        "masked": mask_path is not None,
    }
    summary = {
        "config": config,
        "n": net.n,
        "chain_seeds": chain_seeds,
        "best_chain": best_chain,
        "best_log_joint": float(result.trace.log_joint[result.best_index]),
        "point_estimate_L": num_clusters(result.point_estimate),
        "L_histogram": {str(k): v for k, v in sorted(result.cluster_histogram.items())},
    }
    if truth is not None:
        summary["nmi_vs_truth"] = nmi(result.point_estimate, truth)
    if net.mask is None:
        summary["bic_exact"] = bic_exact(net, result.point_estimate)
        summary["bic_approx"] = bic_approx(net, result.point_estimate)
    bio.write_summary(outdir / "summary.json", summary)
    meta = {
        "artifact_version": f"bcdc {__version__}",
        "command": "fit",
        "edges": edges,
        "covariates": covariates or "",
        "runtime_seconds": f"{elapsed:.3f}",
        **{k: str(v) for k, v in config.items()},
    }
    bio.write_metadata(outdir / "meta.txt", meta)
    click.echo(f"fit: L={summary['point_estimate_L']} "
               f"log_joint={summary['best_log_joint']:.3f} -> {outdir}")


_DESIGN_PARAM_KEYS = ("n", "K", "p", "r", "mu", "beta", "scale")


@main.command()
@click.argument("design", type=click.Choice(DESIGNS))
@click.option("--replicates", default=1, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--n", type=int, help="node count")
@click.option("--k", "K", type=int, help="planted block count (mixed design)")
@click.option("--p", type=float, help="within-block edge probability")
@click.option("--r", type=float, help="between/within connectivity ratio")
@click.option("--mu", type=float, help="covariate signal strength (continuous design)")
@click.option("--beta", type=float, help="homophily effect size")
@click.option("--scale", type=float, help="size scale of the sparse design")
def simulate(design, replicates, seed, out, **params):
    """Write synthetic replicates of one experiment design."""
    params = {k: v for k, v in params.items() if v is not None}
    outdir = Path(out)
    for rep in range(replicates):
        rep_dir = outdir / f"rep{rep:04d}"
        rep_dir.mkdir(parents=True, exist_ok=True)
        ds = make_dataset(design, replicate_seed(seed, rep), **params)
        bio.write_edge_list(rep_dir / "edges.txt", ds.network)
        if ds.covariates is not None and not ds.covariates.is_empty:
            bio.write_covariates(rep_dir / "covariates.csv", ds.covariates)
        bio.write_labels(rep_dir / "truth.csv", ds.truth)
        bio.write_metadata(
            rep_dir / "meta.txt",
            {
                "artifact_version": f"bcdc {__version__}",
                "replicate": rep,
                "base_seed": seed,
                **{k: str(v) for k, v in ds.meta.items()},
            },
        )
    click.echo(f"simulate: {replicates} replicate(s) of {design} -> {outdir}")


@main.command(name="eval")
@click.option("--labels", "labels_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--ref", "ref_path", type=click.Path(exists=True, dir_okay=False),
              help="reference labels for NMI")
@click.option("--network", "network_path", type=click.Path(exists=True, dir_okay=False),
              help="edge list for BIC")
@click.option("--out", type=click.Path(dir_okay=False), help="also write the row here")
def eval_cmd(labels_path, ref_path, network_path, out):
    """Score a labelling: NMI against a reference and/or block-model BIC."""
    if not ref_path and not network_path:
        raise click.UsageError("need --ref and/or --network")
    labels = bio.read_labels(labels_path)
    cols, vals = [], []
    if ref_path:
        ref = bio.read_labels(ref_path)
        cols.append("nmi")
        vals.append(f"{nmi(labels, ref):.17g}")
    if network_path:
        net = bio.read_edge_list(network_path, n=labels.shape[0])
        cols += ["bic_exact", "bic_approx"]
        vals += [f"{bic_exact(net, labels):.17g}", f"{bic_approx(net, labels):.17g}"]
    text = ",".join(cols) + "\n" + ",".join(vals) + "\n"
    click.echo(text, nl=False)
    if out:
        Path(out).write_text(text)


def _parse_grid(specs) -> list[dict]:
    axes = {}
    for spec in specs:
        key, _, vals = spec.partition("=")
        key = key.strip()
        if not vals or key not in _DESIGN_PARAM_KEYS:
            raise click.UsageError(
                f"bad grid spec {spec!r}; use e.g. --grid r=0.1,0.3 "
                f"with keys from {_DESIGN_PARAM_KEYS}"
            )
        axes[key] = [float(v) for v in vals.split(",")]
    if not axes:
        return [{}]
    keys = sorted(axes)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(axes[k] for k in keys))]


def _benchmark_task(design, point, rep, method, hp, iters, burnin, thin, data_seed, fit_seed):
    params = dict(point)
    if "n" in params:
        params["n"] = int(params["n"])
    if "K" in params:
        params["K"] = int(params["K"])
    row = {
        "design": design,
        **{f"grid_{k}": v for k, v in point.items()},
        "replicate": rep,
        "method": method,
        "nmi": np.nan,
        "runtime_seconds": np.nan,
        "L_est": np.nan,
        "status": "ok",
    }
    try:
        ds = make_dataset(design, data_seed, **params)
        x = ds.covariates if method == "bcdc" else CovariateSet.empty(ds.network.n)
        result, elapsed = _fit_one(ds.network, x, hp, iters, burnin, thin, fit_seed)
        hist = result.cluster_histogram
        row["nmi"] = nmi(result.point_estimate, ds.truth)
        row["runtime_seconds"] = elapsed
        row["L_est"] = int(max(hist, key=lambda k: (hist[k], -k)))
    except Exception as exc:  # keep the sweep alive; the row records the failure
        row["status"] = f"failed: {exc}"
    return row


@main.command()
@click.option("--design", "designs", multiple=True, required=True,
              type=click.Choice(DESIGNS))
@click.option("--grid", "grids", multiple=True,
              help="axis of design parameters, e.g. r=0.1,0.3 (repeatable)")
@click.option("--replicates", default=20, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--figures/--no-figures", default=True, show_default=True,
              help="render NMI/runtime figures next to the CSVs")
@_hyper_options
@_chain_options
def benchmark(designs, grids, replicates, out, figures,
              alpha, beta, s2, tau2, gamma, iters, burnin, thin, seed, chains, jobs):
    """Compare the covariate model against the network-only baseline."""
    del chains  # benchmark runs one chain per method and replicate
    hp = Hyperparams(alpha=alpha, beta=beta, s2=s2, tau2=tau2, gamma=gamma)
    points = _parse_grid(grids)
    tasks = []
    for di, design in enumerate(designs):
        for gi, point in enumerate(points):
            for rep in range(replicates):
                for mi, method in enumerate(("bcdc", "bsbm")):
                    tasks.append(
                        lambda d=design, pt=point, rp=rep, m=method,
                               ds_seed=replicate_seed(seed, di, gi, rep, 0),
                               ft_seed=replicate_seed(seed, di, gi, rep, 1 + mi):
                        _benchmark_task(d, pt, rp, m, hp, iters, burnin, thin, ds_seed, ft_seed)
                    )
    rows = _parallel(jobs, tasks)
    results = pd.DataFrame(rows)

    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    results.to_csv(outdir / "results.csv", index=False)
    group_cols = ["design", *[c for c in results.columns if c.startswith("grid_")], "method"]
    ok = results[results["status"] == "ok"]
    summary = (
        ok.groupby(group_cols)
        .agg(
            nmi_mean=("nmi", "mean"),
            nmi_q25=("nmi", lambda s: s.quantile(0.25)),
            nmi_q75=("nmi", lambda s: s.quantile(0.75)),
            runtime_mean=("runtime_seconds", "mean"),
            replicates=("nmi", "size"),
        )
        .reset_index()
    )
    summary.to_csv(outdir / "summary.csv", index=False)
    bio.write_metadata(
        outdir / "meta.txt",
        {
            "artifact_version": f"bcdc {__version__}",
            "command": "benchmark",
            "designs": ",".join(designs),
            "grid": ";".join(grids) if grids else "",
            "replicates": replicates,
            "iters": iters,
            "seed": seed,
            "failed_rows": int((results["status"] != "ok").sum()),
        },
    )
    if figures:
        from .report import render_benchmark_figures

        render_benchmark_figures(results, outdir)
    click.echo(f"benchmark: {len(results)} fits -> {outdir}")


if __name__ == "__main__":
    main()
