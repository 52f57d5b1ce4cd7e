"""Command-line driver: every estimator and experiment behind one entry point.

Each subcommand maps onto one library operation, reads its parameters from
flags (optionally seeded by a TOML/JSON config file selected with
``--config``; flags override file values; unknown file keys are rejected),
writes CSV when ``--out`` is given, and prints a one-line summary. Exit
codes: 0 success, 1 runtime numerical failure, 2 configuration failure.

The experiment configuration is realized as the parsed argument namespace;
its invariants (parameter ranges, unknown-key rejection) are enforced by the
argument parser and the config loader.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Callable

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError, ItersimError, NumericsError, UnsupportedOperationError
from .feynman_kac import (
    QuadratureRule,
    _fill_parallel,
    beam_estimate,
    fk_estimate,
    fk_oracle,
    half_derivative_transform,
    intertwine_check,
    two_sided_fk_estimate,
    write_estimate_csv,
)
from .functions import bump, gauss, linear, linear_cosh
from .iterated import simulate_iterated, write_iterated_csv
from .processes import parse_process
from .rng import path_streams
from .stats import (
    density_compare,
    fit_order,
    strong_error,
    variation_estimate,
    write_density_csv,
    write_error_curve_csv,
    write_histogram_csv,
)

__all__ = ["run", "main"]

_SCALAR_F: dict[str, Callable] = {"gauss": gauss, "bump": bump, "linear": linear}
_PAIR_F: dict[str, Callable] = {"linear-cosh": linear_cosh}


def _env_seed() -> int:
    raw = os.environ.get("ITERSIM_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"ITERSIM_SEED is not an integer: {raw!r}") from None


def _resolve_seed(ns: argparse.Namespace) -> int:
    return int(ns.seed) if ns.seed is not None else _env_seed()


def _resolve_threads(ns: argparse.Namespace) -> int:
    if ns.threads is not None:
        if int(ns.threads) < 1:
            raise ConfigError("threads must be >= 1")
        return int(ns.threads)
    return os.cpu_count() or 1


def _parse_levels(raw) -> list[int]:
    if isinstance(raw, (list, tuple)):
        return [int(v) for v in raw]
    try:
        return [int(tok) for tok in str(raw).split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"levels is not a comma-separated integer list: {raw!r}") from None


def _parse_float_list(raw) -> list[float]:
    if isinstance(raw, (list, tuple)):
        return [float(v) for v in raw]
    try:
        return [float(tok) for tok in str(raw).split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"x is not a comma-separated number list: {raw!r}") from None


def _write(path: str, writer: Callable) -> None:
    with open(path, "w", newline="") as handle:
        writer(handle)


def _cmd_simulate(ns: argparse.Namespace) -> int:
    seed = _resolve_seed(ns)
    position = parse_process(ns.position)
    time_proc = parse_process(ns.time)
    path = simulate_iterated(
        position, time_proc, ns.x0, ns.y0, ns.T, ns.steps, path_streams(seed, 0)
    )
    if ns.out:
        _write(ns.out, lambda h: write_iterated_csv(path, h))
        print(f"wrote {ns.out} ({path.n + 1} knots, m_n={path.m_n:.6g})")
    else:
        print(
            f"simulated {path.n + 1} knots on [0, {path.T:g}]: "
            f"terminal z={path.knots[-1]:.6g}, m_n={path.m_n:.6g}"
        )
    return 0


def _cmd_density(ns: argparse.Namespace) -> int:
    seed = _resolve_seed(ns)
    threads = _resolve_threads(ns)
    position = parse_process(ns.position)
    time_proc = parse_process(ns.time)
    if ns.paths < 1:
        raise ConfigError("paths must be >= 1")
    samples = np.empty(ns.paths)

    def fill(lo: int, hi: int) -> None:
        for k in range(lo, hi):
            p = simulate_iterated(
                position, time_proc, ns.x0, 0.0, ns.t, ns.steps, path_streams(seed, k)
            )
            samples[k] = p.knots[-1]

    _fill_parallel(ns.paths, threads, fill)
    z_grid = np.linspace(ns.zlo, ns.zhi, ns.zpoints)
    quad = QuadratureRule(nodes=ns.nodes)
    comp = density_compare(position, time_proc, ns.t, samples, z_grid, quad, x0=ns.x0)
    if ns.out and comp.oracle_density is not None:
        _write(ns.out, lambda h: write_density_csv(comp.z_grid, comp.oracle_density, h))
    if ns.hist_out:
        _write(ns.hist_out, lambda h: write_histogram_csv(comp.histogram, h))
    if comp.ks_distance is None:
        print(f"histogram of {ns.paths} samples (no closed-form oracle for this pair)")
    else:
        print(f"KS distance {comp.ks_distance:.4f} over {ns.paths} samples")
    return 0


def _cmd_variations(ns: argparse.Namespace) -> int:
    seed = _resolve_seed(ns)
    threads = _resolve_threads(ns)
    est = variation_estimate(
        parse_process(ns.position),
        parse_process(ns.time),
        ns.order,
        ns.t,
        ns.paths,
        ns.steps,
        seed,
        x0=ns.x0,
        threads=threads,
    )
    if ns.out:
        _write(ns.out, lambda h: write_estimate_csv([(ns.t, ns.x0, est)], h))
    print(
        f"order-{ns.order} variation estimate {est.mean:.6g} +/- {est.stderr:.3g} "
        f"(n_paths={est.n_paths})"
    )
    return 0


def _cmd_fk(ns: argparse.Namespace) -> int:
    seed = _resolve_seed(ns)
    threads = _resolve_threads(ns)
    position = parse_process(ns.position)
    time_proc = parse_process(ns.time)
    f = _SCALAR_F[ns.f]
    est = fk_estimate(
        position, time_proc, f, ns.t, ns.x, ns.paths, ns.steps, seed, threads=threads
    )
    if ns.out:
        _write(ns.out, lambda h: write_estimate_csv([(ns.t, ns.x, est)], h))
    line = f"fk estimate {est.mean:.6g} +/- {est.stderr:.3g} (n_paths={est.n_paths})"
    if ns.oracle:
        val = fk_oracle(position, time_proc, f, ns.t, ns.x, QuadratureRule(nodes=ns.nodes))
        ratio = abs(est.mean - val) / est.stderr if est.stderr > 0 else math.inf
        line += f" | oracle {val:.6g} | diff/stderr {ratio:.2f}"
    print(line)
    return 0


def _constant_rate(v: float) -> Callable:
    return lambda z, _v=float(v): np.full_like(np.asarray(z, dtype=float), _v)


def _cmd_two_sided(ns: argparse.Namespace) -> int:
    seed = _resolve_seed(ns)
    threads = _resolve_threads(ns)
    est = two_sided_fk_estimate(
        parse_process(ns.xplus),
        parse_process(ns.xminus),
        _PAIR_F[ns.f],
        parse_process(ns.time),
        ns.t,
        ns.x,
        ns.paths,
        ns.steps,
        seed,
        c_plus=_constant_rate(ns.c_plus) if ns.c_plus is not None else None,
        c_minus=_constant_rate(ns.c_minus) if ns.c_minus is not None else None,
        threads=threads,
    )
    if ns.out:
        _write(ns.out, lambda h: write_estimate_csv([(ns.t, ns.x, est)], h))
    print(
        f"two-sided estimate {est.mean:.6g} +/- {est.stderr:.3g} "
        f"(n_paths={est.n_paths})"
    )
    return 0


def _cmd_beam(ns: argparse.Namespace) -> int:
    seed = _resolve_seed(ns)
    threads = _resolve_threads(ns)
    est = beam_estimate(
        ns.gm,
        _PAIR_F[ns.f],
        parse_process(ns.xplus),
        parse_process(ns.xminus),
        ns.t,
        ns.x,
        ns.paths,
        ns.steps,
        seed,
        threads=threads,
    )
    if ns.out:
        _write(ns.out, lambda h: write_estimate_csv([(ns.t, ns.x, est)], h))
    note = "" if est.stable else " [UNSTABLE: batch means did not stabilize]"
    print(
        f"beam estimate {est.mean:.6g} +/- {est.stderr:.3g} "
        f"(n_paths={est.n_paths}){note}"
    )
    return 0


def _cmd_intertwine(ns: argparse.Namespace) -> int:
    seed = _resolve_seed(ns)
    threads = _resolve_threads(ns)
    x_grid = _parse_float_list(ns.x)
    reports = intertwine_check(
        _SCALAR_F[ns.f],
        ns.alpha,
        ns.beta,
        ns.t,
        x_grid,
        ns.paths,
        ns.steps,
        QuadratureRule(nodes=ns.nodes),
        seed,
        rho_nodes=ns.rho_nodes,
        node_paths=ns.node_paths,
        threads=threads,
    )
    if ns.out:
        def writer(h):
            h.write("x,h_mean,h_stderr,transported_mean,transported_stderr,combined_stderr\n")
            for r in reports:
                h.write(
                    f"{r.x:.17g},{r.h_estimate.mean:.17g},{r.h_estimate.stderr:.17g},"
                    f"{r.transported_mean:.17g},{r.transported_stderr:.17g},"
                    f"{r.combined_stderr:.17g}\n"
                )

        _write(ns.out, writer)
    worst = max(
        (r.discrepancy / r.combined_stderr if r.combined_stderr > 0 else math.inf)
        for r in reports
    )
    print(
        f"intertwining check over {len(reports)} points: "
        f"max |h - transported| / stderr = {worst:.2f}"
    )
    return 0


def _cmd_convergence(ns: argparse.Namespace) -> int:
    seed = _resolve_seed(ns)
    threads = _resolve_threads(ns)
    curve = strong_error(
        parse_process(ns.position),
        parse_process(ns.time),
        ns.T,
        _parse_levels(ns.levels),
        ns.ref_multiplier,
        ns.paths,
        ns.p,
        seed,
        threads=threads,
    )
    if ns.out:
        _write(ns.out, lambda h: write_error_curve_csv(curve, h))
    alpha, _ = fit_order(curve)
    print(
        f"fitted pathwise order alpha={alpha:.4f} over levels "
        f"{','.join(str(int(n)) for n in curve.levels)}"
    )
    return 0


def _cmd_transform(ns: argparse.Namespace) -> int:
    val = half_derivative_transform(
        _SCALAR_F[ns.f], ns.t, QuadratureRule(nodes=ns.nodes)
    )
    if ns.out:
        def writer(h):
            h.write("t,value\n")
            h.write(f"{ns.t:.17g},{val:.17g}\n")

        _write(ns.out, writer)
    print(f"half-derivative transform of {ns.f} at t={ns.t:g}: {val:.12g}")
    return 0


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", default=None, help="TOML or JSON file of key = value defaults")
    sub.add_argument("--seed", type=int, default=None, help="master seed (default: ITERSIM_SEED or 0)")
    sub.add_argument("--threads", type=int, default=None, help="worker threads (output-independent)")
    sub.add_argument("--out", default=None, help="CSV output path")


def _build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="itersim",
        description="Simulation and estimation for iterated stochastic processes.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    table: dict[str, argparse.ArgumentParser] = {}

    sim = subs.add_parser("simulate", help="simulate one composed path, write knots CSV")
    sim.add_argument("--position", default="bm(sigma=1)")
    sim.add_argument("--time", default="bm(sigma=1)")
    sim.add_argument("--x0", type=float, default=0.0)
    sim.add_argument("--y0", type=float, default=0.0)
    sim.add_argument("--T", type=float, default=1.0)
    sim.add_argument("--steps", type=int, default=1000)
    _add_common(sim)
    sim.set_defaults(handler=_cmd_simulate)
    table["simulate"] = sim

    den = subs.add_parser("density", help="scheme samples vs quadrature density")
    den.add_argument("--position", default="bm(sigma=1)")
    den.add_argument("--time", default="bm(sigma=1)")
    den.add_argument("--t", type=float, default=1.0)
    den.add_argument("--x0", type=float, default=0.0)
    den.add_argument("--paths", type=int, default=20000)
    den.add_argument("--steps", type=int, default=1000)
    den.add_argument("--zlo", type=float, default=-4.0)
    den.add_argument("--zhi", type=float, default=4.0)
    den.add_argument("--zpoints", type=int, default=201)
    den.add_argument("--nodes", type=int, default=256)
    den.add_argument("--hist-out", default=None)
    _add_common(den)
    den.set_defaults(handler=_cmd_density)
    table["density"] = den

    var = subs.add_parser("variations", help="order-q variation of the scheme")
    var.add_argument("--position", default="bm(sigma=1)")
    var.add_argument("--time", default="bm(sigma=1)")
    var.add_argument("--order", type=int, default=4)
    var.add_argument("--t", type=float, default=1.0)
    var.add_argument("--x0", type=float, default=0.0)
    var.add_argument("--paths", type=int, default=2000)
    var.add_argument("--steps", type=int, default=1000)
    _add_common(var)
    var.set_defaults(handler=_cmd_variations)
    table["variations"] = var

    fk = subs.add_parser("fk", help="Monte Carlo estimate of E[f(X(|Y_t|))]")
    fk.add_argument("--position", default="bm(sigma=1)")
    fk.add_argument("--time", default="bm(sigma=1)")
    fk.add_argument("--f", choices=sorted(_SCALAR_F), default="gauss")
    fk.add_argument("--t", type=float, default=1.0)
    fk.add_argument("--x", type=float, default=0.0)
    fk.add_argument("--paths", type=int, default=200000)
    fk.add_argument("--steps", type=int, default=1000)
    fk.add_argument("--nodes", type=int, default=256)
    fk.add_argument("--oracle", action="store_true", help="also print the quadrature oracle")
    _add_common(fk)
    fk.set_defaults(handler=_cmd_fk)
    table["fk"] = fk

    two = subs.add_parser("two-sided", help="pair-process estimate with optional killing")
    two.add_argument("--xplus", default="ou")
    two.add_argument("--xminus", default="bm(sigma=1)")
    two.add_argument("--time", default="bm(sigma=1)")
    two.add_argument("--f", choices=sorted(_PAIR_F), default="linear-cosh")
    two.add_argument("--t", type=float, default=1.0)
    two.add_argument("--x", type=float, default=1.0)
    two.add_argument("--paths", type=int, default=200000)
    two.add_argument("--steps", type=int, default=1000)
    two.add_argument("--c-plus", type=float, default=None, help="constant killing rate, positive side")
    two.add_argument("--c-minus", type=float, default=None, help="constant killing rate, negative side")
    _add_common(two)
    two.set_defaults(handler=_cmd_two_sided)
    table["two-sided"] = two

    beam = subs.add_parser("beam", help="Cauchy-time pair estimate at scale t/sqrt(gm)")
    beam.add_argument("--gm", type=float, default=1.0, help="stiffness-mass product at x")
    beam.add_argument("--xplus", default="ou")
    beam.add_argument("--xminus", default="bm(sigma=1)")
    beam.add_argument("--f", choices=sorted(_PAIR_F), default="linear-cosh")
    beam.add_argument("--t", type=float, default=1.0)
    beam.add_argument("--x", type=float, default=1.0)
    beam.add_argument("--paths", type=int, default=100000)
    beam.add_argument("--steps", type=int, default=500)
    _add_common(beam)
    beam.set_defaults(handler=_cmd_beam)
    table["beam"] = beam

    inter = subs.add_parser("intertwine", help="transport identity check on a grid")
    inter.add_argument("--alpha", type=float, default=1.0)
    inter.add_argument("--beta", type=float, default=1.0)
    inter.add_argument("--f", choices=sorted(_SCALAR_F), default="bump")
    inter.add_argument("--t", type=float, default=0.25)
    inter.add_argument("--x", default="1.5,2.0,3.0", help="comma-separated evaluation points")
    inter.add_argument("--paths", type=int, default=20000)
    inter.add_argument("--node-paths", type=int, default=4000)
    inter.add_argument("--rho-nodes", type=int, default=24)
    inter.add_argument("--steps", type=int, default=600)
    inter.add_argument("--nodes", type=int, default=256)
    _add_common(inter)
    inter.set_defaults(handler=_cmd_intertwine)
    table["intertwine"] = inter

    conv = subs.add_parser("convergence", help="coupled strong-error curve and fitted order")
    conv.add_argument("--position", default="bm(sigma=1)")
    conv.add_argument("--time", default="bm(sigma=1)")
    conv.add_argument("--T", type=float, default=1.0)
    conv.add_argument("--levels", default="16,32,64,128,256")
    conv.add_argument("--ref-multiplier", type=int, default=16)
    conv.add_argument("--paths", type=int, default=200)
    conv.add_argument("--p", type=int, default=1)
    _add_common(conv)
    conv.set_defaults(handler=_cmd_convergence)
    table["convergence"] = conv

    tra = subs.add_parser("transform", help="Gaussian-kernel half-derivative transform")
    tra.add_argument("--f", choices=sorted(_SCALAR_F), default="linear")
    tra.add_argument("--t", type=float, default=1.0)
    tra.add_argument("--nodes", type=int, default=256)
    _add_common(tra)
    tra.set_defaults(handler=_cmd_transform)
    table["transform"] = tra

    return parser, table


def _load_config(path: str) -> dict:
    try:
        if path.endswith(".json"):
            with open(path, encoding="utf-8") as handle:
                data = json.load(handle)
        else:
            with open(path, "rb") as handle:
                data = tomllib.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from None
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config file {path!r}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path!r} must be a table of key = value pairs")
    return data


def _apply_config(ns: argparse.Namespace, sub: argparse.ArgumentParser, argv: list[str], parser) -> argparse.Namespace:
    data = _load_config(ns.config)
    actions = {
        action.dest: action
        for action in sub._actions
        if action.dest not in ("help", "handler")
    }
    mapped: dict = {}
    for key, value in data.items():
        dest = str(key).replace("-", "_")
        if dest not in actions:
            raise ConfigError(f"unknown config key: {key!r}")
        converter = actions[dest].type
        if converter is not None and value is not None:
            try:
                value = converter(value)
            except (TypeError, ValueError):
                raise ConfigError(
                    f"config key {key!r} has an invalid value: {data[key]!r}"
                ) from None
        mapped[dest] = value
    sub.set_defaults(**mapped)
    return parser.parse_args(argv)


def run(argv: list[str]) -> int:
    """Execute one CLI invocation; returns the process exit code."""
    parser, table = _build_parser()
    try:
        ns = parser.parse_args(argv)
        if getattr(ns, "config", None):
            ns = _apply_config(ns, table[ns.command], argv, parser)
        return ns.handler(ns)
    except SystemExit as exc:  # argparse's own usage errors
        code = exc.code
        return code if isinstance(code, int) else 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (UnsupportedOperationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except ItersimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
