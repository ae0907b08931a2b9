"""Command-line entry points: generate, infer, summarize.

Exit codes: 0 success, 2 configuration or validation error, 3 sampler
failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import beam, exact, io
from .config import SamplerConfig
from .diagnostics import summarize_posterior
from .generate import generate
from .model import EdhmmError, Priors

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edhmm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a synthetic trajectory to CSV")
    g.add_argument("--params", required=True, help="model parameter JSON")
    g.add_argument("--T", type=int, required=True, help="sequence length")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output trajectory CSV")
    g.set_defaults(func=_cmd_generate)

    f = sub.add_parser("infer", help="run MCMC on a trajectory CSV")
    f.add_argument("--data", required=True, help="input trajectory CSV (y column is used)")
    f.add_argument("--K", type=int, required=True, help="number of states")
    f.add_argument("--priors", help="priors JSON; defaults to broad priors")
    f.add_argument("--burnin", type=int, default=500)
    f.add_argument("--samples", type=int, default=1000)
    f.add_argument("--thin", type=int, default=1)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--d-cap", type=int, default=None, help="duration safety cap (default: T)")
    f.add_argument("--engine", choices=("beam", "exact"), default="beam")
    f.add_argument("--init", choices=("greedy", "small-u"), default="greedy")
    f.add_argument("--chains", type=int, default=1,
                   help="independent chains run sequentially with seeds seed+i")
    f.add_argument("--latent-every", type=int, default=0,
                   help="attach the latent path to every n-th retained sample")
    f.add_argument("--chain-out", required=True, help="output chain JSON-lines")
    f.add_argument("--diag-out", help="output per-sweep diagnostics CSV")
    f.set_defaults(func=_cmd_infer)

    s = sub.add_parser("summarize", help="posterior summaries from a chain file")
    s.add_argument("--chain", required=True, help="chain JSON-lines file")
    s.add_argument("--out", required=True, help="output summary JSON")
    s.add_argument("--hist-dir", help="directory for per-parameter histogram CSVs")
    s.add_argument("--relabel", choices=("none", "mu", "mu_lambda"), default="none")
    s.add_argument("--bins", type=int, default=40)
    s.set_defaults(func=_cmd_summarize)
    return parser


def _cmd_generate(args) -> None:
    params, _ = io.read_params_json(args.params)
    traj = generate(params, args.T, args.seed)
    io.write_trajectory_csv(args.out, traj)


def _chain_path(base: str, index: int, n_chains: int) -> Path:
    p = Path(base)
    if n_chains == 1:
        return p
    return p.with_name(f"{p.stem}.{index}{p.suffix}")


def _progress(i: int, total: int) -> None:
    step = max(1, total // 20)
    if i % step == 0 or i == total:
        print(f"sweep {i}/{total}", file=sys.stderr, flush=True)


def _cmd_infer(args) -> None:
    y = io.read_observations_csv(args.data)
    priors = io.read_priors_json(args.priors) if args.priors else Priors.default(args.K)
    if args.chains < 1:
        raise ValueError("chains must be at least 1")
    for c in range(args.chains):
        config = SamplerConfig(
            K=args.K,
            n_burnin=args.burnin,
            n_samples=args.samples,
            thin=args.thin,
            seed=args.seed + c,
            d_cap=args.d_cap,
            init=args.init,
            store_latent_every=args.latent_every,
        )
        runner = beam.run if args.engine == "beam" else exact.run_exact_gibbs
        result = runner(y, priors, config, progress=_progress)
        io.write_chain_jsonl(_chain_path(args.chain_out, c, args.chains), result.samples)
        if args.diag_out:
            io.write_diagnostics_csv(_chain_path(args.diag_out, c, args.chains),
                                     result.diagnostics)


def _cmd_summarize(args) -> None:
    records = io.read_chain_jsonl(args.chain)
    relabel = None if args.relabel == "none" else args.relabel
    summary = summarize_posterior(records, relabel=relabel, bins=args.bins)
    io.write_summary_json(args.out, summary)
    if args.hist_dir:
        io.write_histogram_csvs(args.hist_dir, summary)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except io.FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EdhmmError as exc:
        print(f"sampler failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    return 0
