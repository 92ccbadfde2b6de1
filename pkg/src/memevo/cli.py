"""Scenario-driven command line front end.

A scenario is a YAML file with sections kernel / operator / initial / run /
stability / output. Exactly one initial source is given: a past history
(closed form), a state-function CSV, or a proper-state form. Whatever the
chosen formulation needs is derived through the structural maps.

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import json
import pathlib
import sys

import click
import numpy as np
import yaml

from . import _accel
from .history import (
    ExtendedHistoryVector,
    evolve_history,
    history_grid,
    history_source_samples,
)
from .kernel import KernelError, KernelSpec, build_kernel, load_tabulated_csv
from .maps import gamma_map, pi_map, proper_initial_state, read_state_function_csv
from .spectral import WeightedField, build_operator
from .state import ExtendedStateVector, evolve_state, state_grid
from .stability import StabilityConfig, decay_study
from .trajectory import write_energy_csv, write_trajectory_csv
from . import gallery as gallery_mod

__all__ = ["main", "load_config", "dump_config", "run_scenario", "ConfigError"]


class ConfigError(ValueError):
    """Raised when a scenario file fails validation."""


FORMULATIONS = ("direct", "history", "state", "compare-all")
_DEFAULTS = {
    "run": {"formulation": "compare-all", "T": 1.0, "dt": 1e-3, "stride": 1,
            "snapshots": []},
    "output": {"trajectory": True, "energy": True},
}


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such config file: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    return _normalize(raw)


def dump_config(cfg: dict) -> str:
    return yaml.safe_dump(cfg, sort_keys=True, default_flow_style=False)


def _require(cfg, key, section="config"):
    if key not in cfg:
        raise ConfigError(f"{section} is missing required key {key!r}")
    return cfg[key]


def _normalize(raw: dict) -> dict:
    cfg = {}
    kern = dict(_require(raw, "kernel"))
    if "family" not in kern:
        raise ConfigError("kernel section needs a family")
    from .kernel import FAMILIES

    if kern["family"] not in FAMILIES:
        raise ConfigError(f"kernel family must be one of {FAMILIES}")
    cfg["kernel"] = kern
    opr = dict(_require(raw, "operator"))
    opr.setdefault("domain", "dirichlet-laplacian-interval")
    if "N" not in opr:
        raise ConfigError("operator section needs a mode count N")
    cfg["operator"] = opr
    init = dict(_require(raw, "initial"))
    src = _require(init, "source", "initial")
    src_keys = set(src) & {"history", "state_function", "proper_state"}
    if len(src_keys) != 1:
        raise ConfigError("exactly one initial source must be given")
    cfg["initial"] = init
    run = {**_DEFAULTS["run"], **raw.get("run", {})}
    if run["formulation"] not in FORMULATIONS:
        raise ConfigError(f"formulation must be one of {FORMULATIONS}")
    T, dt = float(run["T"]), float(run["dt"])
    if dt <= 0 or T <= 0:
        raise ConfigError("T and dt must be positive")
    if abs(round(T / dt) * dt - T) > 1e-9 * T:
        raise ConfigError("dt must divide T")
    cfg["run"] = run
    if "stability" in raw and raw["stability"]:
        st = dict(raw["stability"])
        if "delta" not in st:
            raise ConfigError("stability section needs delta")
        cfg["stability"] = st
    cfg["output"] = {**_DEFAULTS["output"], **raw.get("output", {})}
    if "seed" in raw:
        cfg["seed"] = int(raw["seed"])
    return cfg


def _build_kernel(cfg: dict):
    kc = cfg["kernel"]
    fam = kc["family"]
    try:
        if fam == "tabulated" and "table" in kc:
            spec = load_tabulated_csv(
                kc["table"],
                alpha_mode=kc.get("alpha_mode", "normalized"),
                alpha=kc.get("alpha"),
            )
        else:
            spec = KernelSpec(
                family=fam,
                a=kc.get("a"),
                kappa=kc.get("kappa"),
                table_s=kc.get("table_s"),
                table_mu=kc.get("table_mu"),
                alpha_mode=kc.get("alpha_mode", "normalized"),
                alpha=kc.get("alpha"),
            )
        return build_kernel(spec, eps_tail=float(kc.get("eps_tail", 1e-8)))
    except KernelError as exc:
        raise ConfigError(f"kernel: {exc}")


def _build_operator(cfg: dict):
    oc = cfg["operator"]
    try:
        return build_operator(oc["domain"], int(oc["N"]), lambdas=oc.get("lambdas"))
    except ValueError as exc:
        raise ConfigError(f"operator: {exc}")


def _modal_vector(entry, N: int, rng, what: str) -> np.ndarray:
    if isinstance(entry, dict) and "random" in entry:
        spec = entry["random"] or {}
        scale = float(spec.get("scale", 1.0))
        return scale * rng.standard_normal(N)
    vec = np.asarray(entry, dtype=float)
    if vec.shape != (N,):
        raise ConfigError(f"{what} must have one entry per mode")
    return vec


def _phi0_on_nodes(src: dict, s: np.ndarray, u0: np.ndarray) -> np.ndarray:
    """Past history samples phi0(s) per mode; s may include the origin."""
    form = src.get("form", "zero")
    if form == "exponential":
        prof = np.exp(-float(src.get("rate", 1.0)) * s)
    elif form == "constant":
        prof = np.full_like(s, float(src.get("value", 1.0)))
    elif form == "zero":
        prof = np.zeros_like(s)
    else:
        raise ConfigError(f"unknown history form {form!r}")
    return u0[:, None] * prof[None, :]


def run_scenario(cfg: dict, outdir) -> dict:
    """Build everything, run the configured formulation(s), write artifacts.

    Returns a summary dict; raises ConfigError for bad input and
    FloatingPointError-like RuntimeError on numerical blow-up."""
    outdir = pathlib.Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    k = _build_kernel(cfg)
    op = _build_operator(cfg)
    rng = np.random.default_rng(cfg.get("seed", 0))
    init = cfg["initial"]
    u0 = _modal_vector(_require(init, "u0", "initial"), op.N, rng, "u0")
    v0 = _modal_vector(_require(init, "v0", "initial"), op.N, rng, "v0")
    run = cfg["run"]
    T, dt, stride = float(run["T"]), float(run["dt"]), int(run["stride"])
    J = int(round(T / dt))
    src = init["source"]
    formulation = run["formulation"]
    wanted = ["direct", "history", "state"] if formulation == "compare-all" else [formulation]

    hgrid = history_grid(k, T, dt)
    sgrid = state_grid(k, T, dt)
    eta0 = xi0 = F0 = None
    if "history" in src:
        s_nodes = np.concatenate([[0.0], hgrid.points])
        phi_nodes = _phi0_on_nodes(src["history"], s_nodes, u0)
        eta0 = WeightedField(u0[:, None] - phi_nodes[:, 1:], hgrid, "mu")
        if "direct" in wanted:
            F0 = history_source_samples(phi_nodes, hgrid, k, J)
        if "state" in wanted:
            xi0 = pi_map(eta0, k, op, tau_grid=sgrid, check_contraction=False).xi
    elif "state_function" in src:
        sf = read_state_function_csv(_require(src["state_function"], "csv", "state_function"))
        if sf.F.shape[0] != op.N:
            raise ConfigError("state-function CSV mode count must match the operator")
        if "history" in wanted:
            raise ConfigError(
                "a state function does not determine a past history; "
                "run the direct or state formulation"
            )
        if "direct" in wanted:
            times = np.arange(J + 1) * dt
            F0 = np.vstack([np.interp(times, sf.t_grid, row, right=0.0) for row in sf.F])
        if "state" in wanted:
            xi0 = proper_initial_state(u0, sf, k, sgrid, op=op)
    else:
        form = src["proper_state"].get("form", "zero")
        if form == "kernel":
            vals = k.mu(sgrid.points)[None, :] * u0[:, None]
        elif form == "zero":
            vals = np.zeros((op.N, sgrid.n))
        else:
            raise ConfigError(f"unknown proper-state form {form!r}")
        xi0 = WeightedField(vals, sgrid, "nu")
        if "history" in wanted:
            raise ConfigError(
                "a proper state does not determine a past history; "
                "run the direct or state formulation"
            )
        if "direct" in wanted:
            times = np.arange(J + 1) * dt
            # the direct drive is int mu(t+s)phi0(s)ds = M(t)u0 - int_t xi0
            F0 = k.tailmass(times)[None, :] * u0[:, None] + gamma_map(xi0, times).F

    from .volterra import InitialState, solve_direct

    trajectories = {}
    summary = {"formulations": wanted, "backend": _accel.backend(),
               "config_echo": dump_config(cfg)}
    snapshots = tuple(float(t) for t in run.get("snapshots", []))
    for name in wanted:
        if name == "direct":
            traj = solve_direct(InitialState(u0, v0, F0), op, k, T, dt)
        elif name == "history":
            traj, _ = evolve_history(
                ExtendedHistoryVector(u0, v0, eta0), op, k, T, dt,
                stride=stride, snapshot_times=snapshots,
            )
        else:
            traj, _ = evolve_state(
                ExtendedStateVector(u0, v0, xi0), op, k, T, dt,
                stride=stride, snapshot_times=snapshots,
            )
        if not np.all(np.isfinite(traj.u[:, -1])):
            good = np.nonzero(~np.isfinite(np.sum(traj.u, axis=0)))[0]
            last = int(good[0]) - 1 if good.size else 0
            raise RuntimeError(
                f"{name} run blew up; last finite step {last} (t = {last * dt:.6g})"
            )
        trajectories[name] = traj
        hdr = [f"formulation: {name}", f"T: {T}", f"dt: {dt}"]
        if cfg["output"].get("trajectory", True):
            write_trajectory_csv(outdir / f"trajectory_{name}.csv", traj, op, hdr)
        if cfg["output"].get("energy", True):
            d = traj.diagnostics
            if "E" in d:
                E = np.asarray(d["E"])
                tt = np.asarray(d["energy_times"])
                rq = d.get("rate_quad")
                rfd = np.full(E.size, np.nan)
                if E.size > 2:
                    rfd[1:-1] = (E[2:] - E[:-2]) / (tt[2] - tt[0])
                write_energy_csv(outdir / f"energy_{name}.csv", tt, E, rq, rfd, hdr)
            else:
                write_energy_csv(
                    outdir / f"energy_{name}.csv",
                    traj.times, d["wave_energy"], None, None, hdr,
                )

    if len(wanted) > 1:
        scale = max(np.max(np.abs(t.u)) for t in trajectories.values())
        gaps = {}
        names = list(trajectories)
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                gaps[f"{a}-vs-{b}"] = float(
                    np.max(np.abs(trajectories[a].u - trajectories[b].u)) / scale
                )
        summary["pairwise_gap_rel"] = gaps
        with open(outdir / "comparison.json", "w") as fh:
            json.dump({"pairwise_gap_rel": gaps, "T": T, "dt": dt}, fh, indent=2)
    return summary


def _set_threads(n):
    if n and _accel.backend() == "numba":
        import numba

        numba.set_num_threads(int(n))


@click.group()
def main():
    """Memory-evolution simulator: three equivalent formulations of a wave
    equation with fading memory, plus verification suites."""


_config_opt = click.option("--config", "config_path", required=True,
                           type=click.Path(), help="scenario YAML file")
_out_opt = click.option("--out", "outdir", default=".", type=click.Path(),
                        help="output directory")
_threads_opt = click.option("--threads", default=None, type=int,
                            help="compute threads (numba backend only)")


@main.command()
@_config_opt
@_out_opt
@_threads_opt
def simulate(config_path, outdir, threads):
    """Run the formulation configured in the scenario file."""
    _run_cli(config_path, outdir, threads, None)


@main.command()
@_config_opt
@_out_opt
@_threads_opt
def compare(config_path, outdir, threads):
    """Run all three formulations and report pairwise trajectory gaps."""
    _run_cli(config_path, outdir, threads, "compare-all")


def _run_cli(config_path, outdir, threads, force_formulation):
    try:
        cfg = load_config(config_path)
        if force_formulation:
            cfg["run"]["formulation"] = force_formulation
        _set_threads(threads)
        summary = run_scenario(cfg, outdir)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    except RuntimeError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(1)
    gaps = summary.get("pairwise_gap_rel")
    if gaps:
        for pair, g in gaps.items():
            click.echo(f"{pair}: {g:.3e}")
    click.echo("ok")


@main.command()
@_config_opt
@_out_opt
@_threads_opt
def decay(config_path, outdir, threads):
    """Verify the Lyapunov inequalities and fit the exponential decay rate."""
    try:
        cfg = load_config(config_path)
        if "stability" not in cfg:
            raise ConfigError("decay needs a stability section with delta")
        _set_threads(threads)
        out = pathlib.Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        k = _build_kernel(cfg)
        op = _build_operator(cfg)
        rng = np.random.default_rng(cfg.get("seed", 0))
        init = cfg["initial"]
        u0 = _modal_vector(init["u0"], op.N, rng, "u0")
        v0 = _modal_vector(init["v0"], op.N, rng, "v0")
        run = cfg["run"]
        T, dt = float(run["T"]), float(run["dt"])
        sgrid = state_grid(k, T, dt)
        src = init["source"]
        if "history" in src:
            hgrid = history_grid(k, T, dt)
            phi = _phi0_on_nodes(src["history"], hgrid.points, u0)
            eta0 = WeightedField(u0[:, None] - phi, hgrid, "mu")
            xi0 = pi_map(eta0, k, op, tau_grid=sgrid, check_contraction=False).xi
        elif "proper_state" in src and src["proper_state"].get("form") == "kernel":
            xi0 = WeightedField(k.mu(sgrid.points)[None, :] * u0[:, None], sgrid, "nu")
        else:
            raise ConfigError("decay supports history or kernel proper-state sources")
        st = cfg["stability"]
        scfg = StabilityConfig(delta=float(st["delta"]), beta=st.get("beta"))
        report, ineq, traj = decay_study(
            ExtendedStateVector(u0, v0, xi0), op, k, scfg, T, dt,
            stride=int(run.get("stride", 1)),
            margins_csv=str(out / "margins.csv"),
        )
        with open(out / "decay.json", "w") as fh:
            fh.write(report.to_json())
        d = traj.diagnostics
        write_energy_csv(out / "energy_state.csv", d["energy_times"], d["E"],
                         d.get("rate_quad"))
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    except (RuntimeError, ValueError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(1)
    click.echo(f"omega_fit: {report.omega_fit:.6g}  K_fit: {report.K_fit:.4g}")
    if not (report.decaying and ineq.all_hold):
        click.echo("decay verification failed", err=True)
        sys.exit(1)
    click.echo("ok")


_GALLERY = {
    "twin-histories": lambda: gallery_mod.exnn_verify(
        gallery_mod.exnn_build(2, (1.0, 1.0), (1.0, 2.0))
    ),
    "twin-dynamics": lambda: gallery_mod.exnn_dynamics(
        gallery_mod.exnn_build(2, (1.0, 1.0), (1.0, 2.0))
    ),
    "oscillatory-constant": lambda: {
        "value": (v := gallery_mod.kappa_constant(1e-8)),
        "pass": 0.27 <= v <= 0.29,
    },
    "cantor-sequence": gallery_mod.cantor_sequence,
    "trichotomy": gallery_mod.exinj_suite,
    "membership-witness": gallery_mod.membership_witness,
    "all": gallery_mod.run_all,
}


@main.command()
@click.argument("name", type=click.Choice(sorted(_GALLERY)))
@_out_opt
def gallery(name, outdir):
    """Run one named worked scenario and emit its JSON verdict."""
    verdict = _GALLERY[name]()
    out = pathlib.Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    text = json.dumps(verdict, indent=2, default=float)
    with open(out / f"gallery_{name}.json", "w") as fh:
        fh.write(text)
    click.echo(text)
    if not verdict.get("pass", False):
        sys.exit(1)


@main.command()
@click.argument("suite", type=click.Choice(["kernel", "exnn", "decay-quick"]))
@_out_opt
def verify(suite, outdir):
    """Run a named invariant suite; nonzero exit on any failure."""
    verdicts = []
    if suite == "kernel":
        for fam, kw in (
            ("exponential", {"a": 1.0, "kappa": 2.0}),
            ("prony", {"a": [1.0, 0.5], "kappa": [1.0, 3.0]}),
            ("linear", {}),
            ("sqrt_singular", {}),
        ):
            try:
                k = _build_kernel({"kernel": {"family": fam, **kw}})
                s = np.linspace(0.05, 0.95 * k.ell_eff, 64)
                gap = float(np.max(np.abs(k.nu(s) * k.mu(s) - 1.0)))
                verdicts.append({"name": fam, "pass": gap < 1e-12, "nu_mu_gap": gap})
            except ConfigError as exc:
                verdicts.append({"name": fam, "pass": False, "error": str(exc)})
    elif suite == "exnn":
        scen = gallery_mod.exnn_build(2, (1.0, 1.0), (1.0, 2.0))
        verdicts.append({"name": "twin-histories", **gallery_mod.exnn_verify(scen)})
    else:
        k = _build_kernel({"kernel": {"family": "exponential", "a": 1.0, "kappa": 1.0}})
        op = build_operator("explicit-list", 4, lambdas=[1.0, 4.0, 9.0, 16.0])
        rng = np.random.default_rng(1)
        dt, T = 1e-3, 10.0
        sgrid = state_grid(k, T, dt)
        u0 = rng.standard_normal(4)
        xi0 = WeightedField(k.mu(sgrid.points)[None, :] * u0[:, None], sgrid, "nu")
        rep, ineq, _ = decay_study(
            ExtendedStateVector(u0, rng.standard_normal(4), xi0),
            op, k, StabilityConfig(delta=1.0), T, dt, stride=10,
        )
        verdicts.append({
            "name": "decay-quick",
            "pass": rep.decaying and rep.omega_fit > 0,
            "omega_fit": rep.omega_fit,
        })
    text = json.dumps(verdicts, indent=2, default=float)
    out = pathlib.Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"verify_{suite}.json", "w") as fh:
        fh.write(text)
    click.echo(text)
    if not all(v["pass"] for v in verdicts):
        sys.exit(1)


if __name__ == "__main__":
    main()
