"""Scenario-driven command line front end.

Example::

    cqed-spectra poles --scenario scenarios/hybrid_poles_strong.json --out out/poles

Every command reads a JSON scenario, validates it against the packaged schema
(unknown keys are rejected), and writes ``<command>.csv``,
``<command>.json`` (diagnostics and convergence data) and ``manifest.json``
(scenario hash, tool version, output hashes) into the output directory.
Outputs carry no timestamps, so an identical scenario gives byte-identical
files.

Exit codes: 0 ok, 2 invalid scenario or inputs, 3 solver failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path
from typing import Callable

import jsonschema
import numpy as np

from . import __version__
from .circuit import CircuitParams, derive_params
from .dispersive import lamb_dispersive, purcell_dispersive
from .errors import CqedError, InputError, IoError, SchemaError, SolverError
from .greens import gf_exact, gf_spectral, kernel_coefficients, kernel_ik1, kernel_k2
from .linear import (characteristic_model, find_poles, pole_convergence, purcell_lamb_sweep, residues,
                     trajectory_linear)
from .mspt import corrected_poles, fourier_magnitude, hybridize, identity_basis, trajectory_mspt
from .rabi import GFunctionParams, rabi_levels
from .spectra import coupling_g, quasi_modes
from .transmon import ChargeBasisHamiltonian, charge_dispersion, diagonalize, trk_check
from .volterra import IntegratorConfig, converged_expectation

EXIT_OK, EXIT_SCHEMA, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4
THREADS_ENV = "CQED_SPECTRA_THREADS"
DEFAULT_STATE = [[1.0, 0.0], [1.0, 0.0]]


# ---------------------------------------------------------------------------
# Scenario handling
# ---------------------------------------------------------------------------

def load_schema() -> dict:
    return json.loads(resources.files("cqed_spectra").joinpath("scenario.schema.json").read_text("utf-8"))


def load_scenario(path: str | os.PathLike) -> tuple[dict, bytes]:
    """Read and validate a scenario file; returns the parsed object and the raw bytes."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read scenario {path}: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"scenario is not valid JSON: {exc}") from exc
    validate_scenario(data)
    return data, raw


def validate_scenario(data: dict) -> None:
    try:
        jsonschema.validate(data, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"{where}: {exc.message}") from exc


def _block(scenario: dict, name: str) -> dict:
    if name not in scenario:
        raise SchemaError(f"this command needs a '{name}' block in the scenario")
    return scenario[name]


def build_params(scenario: dict) -> CircuitParams:
    c = dict(scenario["circuit"])
    Ec, Ej = c.pop("Ec", 1.0), c.pop("Ej", 50.0)
    omega_j, rel = c.pop("omega_j", None), c.pop("omega_j_over_nu1", None)
    params = derive_params(Ec=Ec, Ej=Ej, **c)
    if omega_j is not None:
        params = params.with_omega_j(omega_j)
    elif rel is not None:
        params = params.with_omega_j(rel * quasi_modes(params, 1).nu[0])
    return params


def _state(spec) -> np.ndarray:
    s = np.array([complex(re, im) for re, im in spec])
    norm = np.linalg.norm(s)
    if norm == 0:
        raise InputError("qubit_state must not vanish")
    return s / norm


def _n_modes(scenario: dict, args, default: int = 40) -> int:
    if args.modes is not None:
        return int(args.modes)
    return int(scenario.get("n_modes", default))


def _parallel_map(fn: Callable, items, threads: int) -> list:
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _chunks(seq, k: int) -> list:
    seq = list(seq)
    k = max(1, min(k, len(seq)))
    bounds = np.linspace(0, len(seq), k + 1).astype(int)
    return [seq[a:b] for a, b in zip(bounds[:-1], bounds[1:])]


# ---------------------------------------------------------------------------
# Commands: each returns (header, rows, sidecar)
# ---------------------------------------------------------------------------

def cmd_modes(sc, params, args):
    m = quasi_modes(params, _n_modes(sc, args, 100))
    rows = [(n + 1, nu, ka, abs(ph), float(np.angle(ph)))
            for n, (nu, ka, ph) in enumerate(zip(m.nu, m.kappa, m.phi_at_x0))]
    side = {"n_modes": len(m), "chi_s": params.chi_s, "max_relative_residual": float(np.max(m.residuals()))}
    return ["n", "k_n", "kappa_n", "abs_phi_x0", "arg_phi_x0"], rows, side


def cmd_kernel(sc, params, args):
    blk = _block(sc, "kernel")
    m = quasi_modes(params, _n_modes(sc, args, 100))
    coeffs = kernel_coefficients(params, m)
    tau = np.linspace(blk.get("tau_min", 0.0), blk["tau_max"], blk["n_points"])
    rows = list(zip(tau, kernel_k2(tau, coeffs)))
    side = {"iK1_0": kernel_ik1(coeffs), "static_weight": coeffs.static_weight, "eta": coeffs.eta,
            "n_modes": len(m)}
    return ["tau", "K2"], rows, side


def cmd_gf(sc, params, args):
    blk = _block(sc, "gf")
    m = quasi_modes(params, _n_modes(sc, args, 100))
    x, xp = blk.get("x", params.x0), blk.get("xp", params.x0)
    w = np.linspace(blk["omega_min"], blk["omega_max"], blk["n_points"]) + 1j * blk.get("imag_offset", 0.0)
    ge = gf_exact(x, xp, w, params)
    gs = gf_spectral(x, xp, w, m)
    rows = [(wi.real, wi.imag, a.real, a.imag, b.real, b.imag) for wi, a, b in zip(w, ge, gs)]
    side = {"x": x, "xp": xp, "n_modes": len(m),
            "max_relative_difference": float(np.max(np.abs(ge - gs) / np.maximum(np.abs(ge), 1e-300)))}
    return ["re_omega", "im_omega", "re_G_exact", "im_G_exact", "re_G_spectral", "im_G_spectral"], rows, side


def cmd_poles(sc, params, args):
    n = _n_modes(sc, args)
    model = characteristic_model(params, n)
    P = find_poles(model)
    R = residues(model, P)
    labels = ["qubit"] + [f"mode_{k + 1}" for k in range(P.p_n.size)]
    rows = [(lab, p.real, p.imag, ax.real, ax.imag, ay.real, ay.imag)
            for lab, p, ax, ay in zip(labels, P.all, R.AX, R.AY)]
    side = {"alpha_j": P.purcell, "beta_j": P.beta_j, "lamb": P.lamb, "lamb_loaded": P.lamb_loaded,
            "q_factor": P.q_factor, "residue_sum_rule": R.sum_rule(), "omega_j": params.omega_j,
            "convergence": pole_convergence(params, n, P).as_dict()}
    return ["pole", "re_p", "im_p", "re_AX", "im_AX", "re_AY", "im_AY"], rows, side


def _sweep(sc, params, args):
    blk = _block(sc, "sweep")
    n = _n_modes(sc, args, 20)
    grid = np.linspace(blk["omega_min"], blk["omega_max"], blk["n_points"])
    modes = quasi_modes(params, n)
    if blk.get("relative_to_nu1", False):
        grid = grid * modes.nu[0]
    static = blk.get("include_static", True)
    parts = _parallel_map(lambda g: purcell_lamb_sweep(params, g, n, static), _chunks(grid, args.threads),
                          args.threads)
    return [r for part in parts for r in part], modes, n


def cmd_purcell_sweep(sc, params, args):
    rows_in, modes, n = _sweep(sc, params, args)
    rows = []
    for r in rows_in:
        g = coupling_g(params.with_omega_j(r.omega_j), modes)
        rows.append((r.omega_j, r.alpha_j, -r.p_j.imag, purcell_dispersive(modes, g, r.omega_j, n).gamma_p))
    return ["omega_j", "alpha_j", "beta_j", "gamma_P_dispersive"], rows, {"n_modes": n, "points": len(rows)}


def cmd_lamb_sweep(sc, params, args):
    rows_in, modes, n = _sweep(sc, params, args)
    rows = []
    for r in rows_in:
        g = coupling_g(params.with_omega_j(r.omega_j), modes)
        rows.append((r.omega_j, r.lamb, r.lamb_loaded, lamb_dispersive(modes, g, r.omega_j, n)[-1]))
    return ["omega_j", "lamb", "lamb_loaded", "lamb_dispersive"], rows, {"n_modes": n, "points": len(rows)}


def _mspt_run(sc, params, args):
    blk = _block(sc, "trajectory")
    n = _n_modes(sc, args)
    modes = quasi_modes(params, n)
    model = characteristic_model(params, n, modes=modes)
    P = find_poles(model)
    R = residues(model, P)
    psi = _state(blk.get("qubit_state", DEFAULT_STATE))
    basis = hybridize(params, modes, P) if params.chi_g > 0 else identity_basis(params.omega_j, params.eps_d, P)
    corr = corrected_poles(basis, psi)
    t = np.linspace(0.0, blk["T"], blk["n_points"])
    rho = np.outer(psi, psi.conj())
    X0, Y0 = 2.0 * rho[1, 0].real, 2.0 * rho[1, 0].imag
    lin = trajectory_linear(P, R, X0, Y0, t)
    ms = trajectory_mspt(basis, corr, R, t, psi, blk.get("qubit_dim", 4))
    side = {"u_j": float(basis.u_j), "beta_j": P.beta_j, "alpha_j": P.purcell, "eps_d": params.eps_d,
            "kerr_strength": corr.strength, "n_modes": n}
    return t, lin, ms, side


def cmd_mspt_traj(sc, params, args):
    t, lin, ms, side = _mspt_run(sc, params, args)
    return ["t", "X_linear", "X_mspt"], list(zip(t, lin, ms)), side


def cmd_mspt_spectrum(sc, params, args):
    blk = _block(sc, "spectrum")
    t, lin, ms, side = _mspt_run(sc, params, args)
    f = np.linspace(blk["freq_min"], blk["freq_max"], blk["n_points"])
    a, b = fourier_magnitude(t, lin, f), fourier_magnitude(t, ms, f)
    rows = list(zip(f, a / a.max(), b / b.max()))
    return ["freq", "F_linear", "F_mspt"], rows, side


def cmd_volterra_traj(sc, params, args):
    blk = sc.get("volterra", {})
    n = _n_modes(sc, args)
    model = characteristic_model(params, n)
    cfg = IntegratorConfig(dt=blk.get("dt", 5e-4), d=blk.get("d", 5), memory_rule=blk.get("memory_rule", "trapezoid"),
                           T=blk.get("T", 20.0), save_every=blk.get("save_every", 20))
    psi = _state(blk.get("qubit_state", DEFAULT_STATE))
    eps = blk.get("eps_d", params.eps_d)
    series = converged_expectation(params.omega_j, params.gamma, model.coeffs, cfg, psi, eps_d=eps,
                                   halvings=blk.get("halvings", 2))
    side = {"convergence": series.as_dict(), "eps_d": eps, "d": cfg.d, "n_modes": n}
    return ["t", "re_X"], list(zip(series.t, series.x)), side


def cmd_rabi_spectrum(sc, params, args):
    blk = _block(sc, "rabi")
    gs = np.linspace(blk["g_min"], blk["g_max"], blk["n_g"])
    spectra = _parallel_map(lambda g: rabi_levels(GFunctionParams(blk["omega_c"], blk["omega_q"], float(g)),
                                                  blk["n_levels"]), gs, args.threads)
    rows = []
    for g, sp in zip(gs, spectra):
        for parity in (1, -1):
            for k, E in enumerate(sp.energies(parity)):
                rows.append((g, parity, k, E))
    return ["g", "parity", "level_index", "E"], rows, {"n_g": len(gs), "n_levels": blk["n_levels"]}


def cmd_transmon_spectrum(sc, params, args):
    blk = _block(sc, "transmon")
    nmax, n_levels = blk.get("nmax", 30), blk.get("n_levels", 5)
    ngs = np.linspace(blk.get("ng_min", 0.0), blk.get("ng_max", 1.0), blk.get("ng_points", 21))
    rows = []
    for ng in ngs:
        sp = diagonalize(ChargeBasisHamiltonian(blk["Ec"], blk["Ej"], float(ng), nmax), n_levels)
        rows.extend((ng, k, E) for k, E in enumerate(sp.levels[:n_levels]))
    h = ChargeBasisHamiltonian(blk["Ec"], blk["Ej"], 0.0, nmax)
    sp = diagonalize(h, n_levels)
    lhs, rhs, bound = trk_check(sp)
    disp = {str(k): dict(zip(("numeric", "asymptotic"), charge_dispersion(h, k))) for k in range(min(3, n_levels))}
    side = {"E01": sp.transition, "anharmonicity": sp.anharmonicity(),
            "trk": {"lhs": lhs, "rhs": rhs, "bound": bound}, "charge_dispersion": disp}
    return ["ng", "level", "E"], rows, side


def cmd_dispersive_compare(sc, params, args):
    blk = sc.get("dispersive", {})
    n = _n_modes(sc, args, 2000)
    m = quasi_modes(params, n)
    if blk.get("coupling", "circuit") == "circuit":
        g = coupling_g(params, m)
    else:
        g = np.sqrt(m.nu) * np.abs(m.phi_at_x0)
    fr = tuple(blk["fit_range"]) if "fit_range" in blk else None
    rep = purcell_dispersive(m, g, params.omega_j, n, fit_range=fr)
    rows = list(zip(rep.n, rep.gamma_partial, rep.lamb_partial, rep.terms))
    return ["N", "gamma_P_partial", "lamb_partial", "term_n"], rows, rep.as_dict()


COMMANDS: dict[str, Callable] = {
    "modes": cmd_modes,
    "kernel": cmd_kernel,
    "gf": cmd_gf,
    "poles": cmd_poles,
    "purcell-sweep": cmd_purcell_sweep,
    "lamb-sweep": cmd_lamb_sweep,
    "mspt-traj": cmd_mspt_traj,
    "mspt-spectrum": cmd_mspt_spectrum,
    "volterra-traj": cmd_volterra_traj,
    "rabi-spectrum": cmd_rabi_spectrum,
    "transmon-spectrum": cmd_transmon_spectrum,
    "dispersive-compare": cmd_dispersive_compare,
}


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_, str)):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v) + 0.0, ".17g")


def render_csv(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue().encode("utf-8")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else str(f)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def render_json(obj) -> bytes:
    return (json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n").encode("utf-8")


def run(command: str, scenario_path: str | os.PathLike, out_dir: str | os.PathLike,
        modes: int | None = None, threads: int = 1) -> dict[str, Path]:
    """Execute one command and write its artifacts; returns the written paths."""
    if command not in COMMANDS:
        raise InputError(f"unknown command {command!r}")
    scenario, raw = load_scenario(scenario_path)
    params = build_params(scenario)
    args = argparse.Namespace(modes=modes, threads=max(1, int(threads)))
    header, rows, side = COMMANDS[command](scenario, params, args)
    blobs = {f"{command}.csv": render_csv(header, rows), f"{command}.json": render_json(side)}
    manifest = {"tool": "cqed-spectra", "version": __version__, "command": command,
                "scenario": Path(scenario_path).name, "scenario_sha256": hashlib.sha256(raw).hexdigest(),
                "modes_override": modes,
                "outputs": {name: hashlib.sha256(b).hexdigest() for name, b in blobs.items()}}
    blobs["manifest.json"] = render_json(manifest)
    out = Path(out_dir)
    written = {}
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, b in blobs.items():
            (out / name).write_bytes(b)
            written[name] = out / name
    except OSError as exc:
        raise IoError(f"cannot write to {out}: {exc}") from exc
    return written


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cqed-spectra", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--scenario", required=True, help="scenario JSON file")
    ap.add_argument("--out", default="out", help="output directory (default: out)")
    ap.add_argument("--modes", type=int, default=None, help="override the number of resonator modes")
    ap.add_argument("--threads", type=int, default=None,
                    help=f"worker threads for sweeps (default: ${THREADS_ENV} or 1)")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    threads = args.threads if args.threads is not None else _default_threads()
    try:
        written = run(args.command, args.scenario, args.out, args.modes, threads)
    except IoError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InputError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (SolverError, CqedError) as exc:
        print(f"solver error in {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    for path in written.values():
        print("wrote", path)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
