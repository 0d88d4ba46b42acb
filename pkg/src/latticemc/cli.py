"""Command-line harness for the sampling experiments.

Every subcommand accepts ``--config FILE``; explicit flags override file
values. Outputs are CSV files written atomically, each starting with
``# key=value`` lines that record the full effective configuration.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import statistics
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from .config import ConfigError, ExperimentConfig, validate_config
from .densities import (
    IsotropicGaussianPotential,
    PerfectSecurityPotential,
    PullbackGaussianPotential,
    SigmoidTarget,
    perfect_security_rho_for_unit_variance,
)
from .lattice import GeneratorMatrix, InvalidInputError, leech_generator, load_generator
from .samplers import (
    ChainState,
    HMCParams,
    KleinParams,
    RadialRejectionBackend,
    exact_gaussian_backend,
    hmc_backend,
    imhr_run,
    imhr_step,
    klein_sample,
    rwm_marginal_oracle,
    write_lsmp,
    write_samples_csv,
)
from .seeding import stream_seed, worker_count
from .special import DomainError

log = logging.getLogger("latticemc")

# per-iteration timings at d = 50 reported alongside benchmark output, never compared against
REFERENCE_TIMINGS_US = {"reference_imhr_us_at_d50": 46, "reference_klein_us_at_d50": 798}


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv_atomic(path, header, rows, metadata):
    """Write to a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            for k, v in metadata:
                fh.write(f"# {k}={v}\n")
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(fmt(v) for v in row) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def resolve_lattice(name: str, d: int) -> GeneratorMatrix | None:
    """``None`` for ``zd`` (identity basis), otherwise the requested generator."""
    if name == "zd":
        return None
    if name == "leech":
        return leech_generator()
    if name.startswith("file:"):
        return load_generator(name[len("file:") :])
    raise ConfigError(f"unknown lattice {name!r}")


def hmc_params(cfg: ExperimentConfig, d: int) -> HMCParams:
    base = HMCParams.for_dimension(d)
    return HMCParams(
        leapfrog_steps=cfg.leapfrog_steps or base.leapfrog_steps,
        step_size=cfg.step_size or base.step_size,
        momentum_variance=cfg.momentum_variance,
        inner_iterations=cfg.inner_iterations,
    )


def gaussian_setup(cfg: ExperimentConfig, sigma2: float, d: int | None = None):
    basis = resolve_lattice(cfg.lattice, d or cfg.d)
    if basis is None:
        pot = IsotropicGaussianPotential(d or cfg.d, sigma2)
    else:
        pot = PullbackGaussianPotential(basis, sigma2)
    if cfg.backend == "exact":
        backend = exact_gaussian_backend(pot)
    else:
        backend = hmc_backend(pot, hmc_params(cfg, pot.dim))
    return pot, SigmoidTarget(pot), backend


def _oracle_window(sigma2: float) -> int:
    return max(10, math.ceil(8 * math.sqrt(sigma2)) + 1)


def run_iso_gaussian(cfg):
    if cfg.lattice != "zd":
        raise ConfigError("iso-gaussian uses lattice=zd; use leech-gaussian for other lattices")
    pot, target, backend = gaussian_setup(cfg, cfg.sigma2)
    oracle = [dg.exact_marginal_isotropic(cfg.sigma2, _oracle_window(cfg.sigma2))] * cfg.d
    curve = dg.tvd_m_curve(target, backend, np.zeros(cfg.d), cfg.replicas, cfg.t_values, oracle, seed=cfg.seed)
    extra = [
        ("noise_floor", fmt(dg.noise_floor(oracle, cfg.replicas))),
        ("out_of_window", curve.out_of_window),
        ("flagged_proposals", backend.flagged),
    ]
    return ["t", "tvd_m"], list(zip(curve.iterations.tolist(), curve.values.tolist())), extra


def _rwm_oracle(cfg, pot, cov, index):
    samples = rwm_marginal_oracle(
        pot,
        cov,
        np.zeros(pot.dim),
        n_samples=cfg.oracle_samples,
        seed=stream_seed(cfg.seed, 1_000_003 + index),
        iterations=cfg.oracle_iterations,
    )
    return dg.marginals_from_samples(samples)


def run_leech_gaussian(cfg):
    if cfg.lattice == "zd":
        raise ConfigError("leech-gaussian needs lattice=leech or lattice=file:<path>")
    rows, extra = [], []
    for k, s2 in enumerate(cfg.sigma2_values):
        pot, target, backend = gaussian_setup(cfg, s2)
        oracle = _rwm_oracle(cfg, pot, pot.covariance(), k)
        curve = dg.tvd_m_curve(
            target, backend, np.zeros(pot.dim), cfg.replicas, cfg.t_values, oracle, seed=stream_seed(cfg.seed, k)
        )
        rows += [(s2, t, v) for t, v in zip(curve.iterations.tolist(), curve.values.tolist())]
        extra.append((f"noise_floor_sigma2_{fmt(s2)}", fmt(dg.noise_floor(oracle, cfg.replicas))))
        extra.append((f"flagged_proposals_sigma2_{fmt(s2)}", backend.flagged))
    return ["sigma2", "t", "tvd_m"], rows, extra


def perfect_security_setup(cfg):
    """``backend=hmc`` is the short HMC run from 0; ``exact`` is the rejection sampler."""
    rho = perfect_security_rho_for_unit_variance(cfg.d)
    pot = PerfectSecurityPotential(cfg.d, rho)
    if cfg.backend == "hmc":
        backend = hmc_backend(pot, hmc_params(cfg, cfg.d), np.zeros(cfg.d))
    else:
        backend = RadialRejectionBackend(pot)
    return pot, SigmoidTarget(pot), backend, rho


def run_perfect_security(cfg):
    pot, target, backend, rho = perfect_security_setup(cfg)
    oracle = _rwm_oracle(cfg, pot, pot.covariance(), 0)
    curve = dg.tvd_m_curve(target, backend, np.zeros(cfg.d), cfg.replicas, cfg.t_values, oracle, seed=cfg.seed)
    extra = [
        ("rho", fmt(rho)),
        ("noise_floor", fmt(dg.noise_floor(oracle, cfg.replicas))),
        ("flagged_proposals", backend.flagged),
    ]
    return ["t", "tvd_m"], list(zip(curve.iterations.tolist(), curve.values.tolist())), extra


def run_acf(cfg):
    _, target, backend = gaussian_setup(cfg, cfg.sigma2)
    d = target.dim
    run = imhr_run(target, backend, np.zeros(d), cfg.burn_in, cfg.n_samples, seed=stream_seed(cfg.seed, 0))
    values = dg.acf(run.samples, cfg.max_lag)
    extra = [("average_acceptance", fmt(run.state.accepts / run.state.steps))]
    return ["tau", "acf"], list(enumerate(values.tolist())), extra


def run_acceptance_vs_dim(cfg):
    rows = []
    for k, d in enumerate(cfg.d_values):
        sub = ExperimentConfig(**{**vars(cfg), "d": d, "lattice": "zd"})
        _, target, backend = gaussian_setup(sub, cfg.sigma2, d)
        run = imhr_run(target, backend, np.zeros(d), cfg.burn_in, cfg.n_samples, seed=stream_seed(cfg.seed, k))
        rows.append((d, run.state.accepts / run.state.steps))
    return ["d", "average_acceptance"], rows, []


def _median_us(fn, warmup: int, iterations: int) -> float:
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(iterations):
        t0 = time.perf_counter_ns()
        fn()
        times.append(time.perf_counter_ns() - t0)
    return statistics.median(times) / 1000.0


def bench_point(d: int, sigma2: float, seed: int, warmup: int, iterations: int):
    """Median per-iteration wall time (microseconds) of one IMHR step and one Klein sample."""
    pot = IsotropicGaussianPotential(d, sigma2)
    target = SigmoidTarget(pot)
    backend = exact_gaussian_backend(pot)
    holder = [ChainState.start(np.zeros(d), stream_seed(seed, 2 * d))]

    def step():
        holder[0] = imhr_step(holder[0], backend, target)[0]

    params = KleinParams(GeneratorMatrix.identity(d), math.sqrt(sigma2))
    krng = np.random.default_rng(stream_seed(seed, 2 * d + 1))
    imhr_us = _median_us(step, warmup, iterations)
    klein_us = _median_us(lambda: klein_sample(params, krng), warmup, iterations)
    return imhr_us, klein_us


def run_bench(cfg):
    rows = []
    for d in cfg.d_values:
        imhr_us, klein_us = bench_point(d, cfg.sigma2, cfg.seed, cfg.warmup, cfg.bench_iterations)
        rows.append((d, imhr_us, klein_us, klein_us / imhr_us))
    extra = list(REFERENCE_TIMINGS_US.items())
    return ["d", "imhr_us", "klein_us", "ratio"], rows, extra


def run_appendix_a(cfg):
    values = dg.appendix_a_degeneracy_probe(cfg.sigma2, cfg.window_max)
    return ["m", "inf_ratio"], list(enumerate(values.tolist())), []


RUNNERS = {
    "iso-gaussian": run_iso_gaussian,
    "leech-gaussian": run_leech_gaussian,
    "perfect-security": run_perfect_security,
    "bench-runtime": run_bench,
    "acceptance-vs-dim": run_acceptance_vs_dim,
    "acf": run_acf,
    "appendix-a": run_appendix_a,
}


def run_experiment(cfg: ExperimentConfig) -> int:
    """Run one experiment and write its CSV to ``cfg.output_path``. Returns the exit status."""
    cfg.validate()
    header, rows, extra = RUNNERS[cfg.experiment](cfg)
    write_csv_atomic(cfg.output_path, header, rows, list(cfg.items()) + list(extra))
    log.info("wrote %d rows to %s", len(rows), cfg.output_path)
    return 0


# ---------------------------------------------------------------- argparse


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value configuration file; flags override it")
    p.add_argument("--d", type=int)
    p.add_argument("--sigma2", type=float)
    p.add_argument("--replicas", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--t-values", type=_int_list, dest="t_values")
    p.add_argument("--out", dest="output_path")
    p.add_argument("--backend", choices=("exact", "hmc"))
    p.add_argument("--lattice", help="zd, leech or file:<path>")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latticemc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw IMHR samples and write CSV or LSMP")
    _common(p)
    p.add_argument("--family", choices=("gaussian", "perfect-security"), default="gaussian")
    p.add_argument("--n-samples", type=int, dest="n_samples")
    p.add_argument("--burn-in", type=int, dest="burn_in")
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--format", choices=("csv", "lsmp"), help="default: from the --out extension")

    p = sub.add_parser("tvd-curve", help="TVD_m against iteration count")
    _common(p)
    p.add_argument("--family", choices=("gaussian", "perfect-security"), default="gaussian")
    p.add_argument("--sigma2-values", type=_float_list, dest="sigma2_values")
    p.add_argument("--oracle-samples", type=int, dest="oracle_samples")

    p = sub.add_parser("acf", help="autocorrelation of one IMHR chain")
    _common(p)
    p.add_argument("--n-samples", type=int, dest="n_samples")
    p.add_argument("--burn-in", type=int, dest="burn_in")
    p.add_argument("--max-lag", type=int, dest="max_lag")

    p = sub.add_parser("bench", help="IMHR vs Klein runtime, or acceptance against dimension")
    _common(p)
    p.add_argument("--kind", choices=("runtime", "acceptance"), default="runtime")
    p.add_argument("--d-values", type=_int_list, dest="d_values")
    p.add_argument("--iterations", type=int, dest="bench_iterations")
    p.add_argument("--n-samples", type=int, dest="n_samples")

    p = sub.add_parser("bound", help="uniform-ergodicity bound, optionally with an inexact proposal")
    _common(p)
    p.add_argument("--z-over-k", type=float, help="override the lattice-sum/integral ratio")
    p.add_argument("--V", type=float, help="inexact-proposal constant V")
    p.add_argument("--rho", type=float, help="inexact-proposal contraction rate")
    p.add_argument("--alg-steps", type=int, help="steps n of the inexact proposal sampler")

    p = sub.add_parser("probe-appendix-a", help="infimum of pi / pi([x]) per unit cell")
    _common(p)
    p.add_argument("--window-max", type=int, dest="window_max")

    p = sub.add_parser("run", help="run the experiment named in --config")
    _common(p)
    return parser


_FLAG_KEYS = (
    "d",
    "sigma2",
    "replicas",
    "seed",
    "t_values",
    "output_path",
    "backend",
    "lattice",
    "n_samples",
    "burn_in",
    "max_lag",
    "sigma2_values",
    "oracle_samples",
    "d_values",
    "bench_iterations",
    "window_max",
)


def config_from_args(args, experiment: str | None) -> ExperimentConfig:
    overrides = {k: getattr(args, k, None) for k in _FLAG_KEYS}
    if experiment is not None:
        overrides["experiment"] = experiment
    if args.sigma2 is not None and getattr(args, "sigma2_values", None) is None and experiment == "leech-gaussian":
        overrides["sigma2_values"] = [args.sigma2]
    if experiment == "perfect-security" and args.backend is None:
        overrides["backend"] = "hmc"
    if experiment == "appendix-a" and args.sigma2 is None and args.config is None:
        overrides["sigma2"] = 0.5
    return validate_config(args.config, overrides)


def _curve_experiment(args) -> str:
    if args.family == "perfect-security":
        return "perfect-security"
    lattice = args.lattice
    if lattice is None and args.config:
        lattice = validate_config(args.config).lattice
    return "iso-gaussian" if lattice in (None, "zd") else "leech-gaussian"


def cmd_sample(args) -> int:
    exp = "perfect-security" if args.family == "perfect-security" else "iso-gaussian"
    cfg = config_from_args(args, exp)
    if args.thin < 1:
        raise ConfigError("--thin must be positive")
    if args.family == "perfect-security":
        _, target, backend, _ = perfect_security_setup(cfg)
    else:
        _, target, backend = gaussian_setup(cfg, cfg.sigma2)
    run = imhr_run(target, backend, np.zeros(target.dim), cfg.burn_in, cfg.n_samples, args.thin, seed=cfg.seed)
    fmt_name = args.format or ("lsmp" if cfg.output_path.endswith(".lsmp") else "csv")
    out = Path(cfg.output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=out.parent, prefix=f".{out.name}.", suffix=".tmp")
    try:
        if fmt_name == "lsmp":
            with os.fdopen(fd, "wb") as fh:
                write_lsmp(fh, run.samples)
        else:
            meta = dict(cfg.items())
            meta.update(family=args.family, thin=args.thin, average_acceptance=fmt(run.state.accepts / run.state.steps))
            with os.fdopen(fd, "w", newline="") as fh:
                write_samples_csv(fh, run.samples, meta)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return 0


def cmd_bound(args) -> int:
    cfg = config_from_args(args, None)
    basis = resolve_lattice(cfg.lattice, cfg.d)
    d = cfg.d if basis is None else basis.dim
    L = (1.0 if basis is None else basis.gram_max_eigenvalue()) / cfg.sigma2
    if args.z_over_k is not None:
        zk = args.z_over_k
    elif basis is None:
        zk = dg.isotropic_z_over_k(cfg.sigma2, d, _oracle_window(cfg.sigma2))
    else:
        raise ConfigError("--z-over-k is required for lattices other than zd")
    delta = zk * math.exp(-d * L / 8.0)
    meta = list(cfg.items()) + [("L", fmt(L)), ("z_over_k", fmt(zk)), ("delta", fmt(delta))]
    inexact = (args.V, args.rho, args.alg_steps)
    if all(v is None for v in inexact):
        rows = [(t, dg.uniform_ergodicity_bound(L, d, zk, t)) for t in cfg.t_values]
        header = ["t", "bound"]
    elif any(v is None for v in inexact):
        raise ConfigError("--V, --rho and --alg-steps must be given together")
    else:
        rows = [(t, *dg.inexact_alg_bound(args.V, args.rho, args.alg_steps, delta, t)) for t in cfg.t_values]
        header = ["t", "lower", "upper"]
        meta += [("V", fmt(args.V)), ("rho", fmt(args.rho)), ("alg_steps", args.alg_steps)]
    write_csv_atomic(cfg.output_path, header, rows, meta)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        try:
            worker_count()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if args.command == "sample":
            return cmd_sample(args)
        if args.command == "bound":
            return cmd_bound(args)
        if args.command == "run":
            if not args.config:
                raise ConfigError("run needs --config")
            return run_experiment(config_from_args(args, None))
        experiment = {
            "tvd-curve": lambda: _curve_experiment(args),
            "acf": lambda: "acf",
            "bench": lambda: "bench-runtime" if args.kind == "runtime" else "acceptance-vs-dim",
            "probe-appendix-a": lambda: "appendix-a",
        }[args.command]()
        return run_experiment(config_from_args(args, experiment))
    except (ConfigError, InvalidInputError, DomainError, OSError) as exc:
        print(f"latticemc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
