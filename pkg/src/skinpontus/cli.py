"""Command-line front end: ``skinpontus spectrum|relax|sweep|oracle``.

Each command turns a config file into a payload of named tables and writes
them to the output directory, one CSV per table (or a single JSON file).
Exit codes: 0 success, 1 usage/config/numerical error, 2 tolerance violation.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import classical, dynamics, spectral
from .config import FORMATS, TREL_MODES, ConfigError, RunConfig, load_config
from .errors import SkinPontusError
from .model import build_liouvillian, site_state
from .numerics import eigensystem

log = logging.getLogger("skinpontus")

EXIT_OK, EXIT_ERROR, EXIT_TOLERANCE = 0, 1, 2

# oracle tolerances
EIG_TOL = 1e-10
STATIONARY_TOL = 1e-12
TRAJ_TOL = 1e-8
COHERENCE_TOL = 1e-10
RATIO_REL_TOL = 1e-6


class Table:
    def __init__(self, columns, rows):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]


def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "nan" if math.isnan(x) else format(x, ".12g")


def _json_value(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    return None if not math.isfinite(x) else float(format(x, ".12g"))


def write_payload(command: str, payload: dict, out_dir: Path, fmt: str) -> list[Path]:
    """Write tables deterministically (fixed column order, 12 significant digits)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "json":
        doc = {name: {"columns": t.columns, "rows": [[_json_value(v) for v in r] for r in t.rows]}
               for name, t in payload.items()}
        path = out_dir / f"{command}.json"
        path.write_text(json.dumps(doc, indent=1) + "\n")
        return [path]
    for name, t in payload.items():
        path = out_dir / f"{command}_{name}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(t.columns)
            for r in t.rows:
                w.writerow([_fmt(v) for v in r])
        written.append(path)
    return written


def _grid_table(M):
    L = M.shape[0]
    return Table(["n"] + [str(m) for m in range(1, L + 1)],
                 [[n + 1] + list(M[n]) for n in range(L)])


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_spectrum(cfg: RunConfig):
    superop = build_liouvillian(cfg.chain)
    sd = spectral.decompose(superop, allow_degenerate=True)
    if sd.near_degenerate:
        log.warning("spectrum is near-degenerate; left modes of colliding eigenvalues are not unique")
    rho_E = spectral.stationary_state(sd)
    w = sd.eigenvalues
    R2, L2 = sd.right_modes[1], sd.left_modes[1]
    payload = {
        "eigenvalues": Table(["alpha", "re", "im"], [[a + 1, z.real, z.imag] for a, z in enumerate(w)]),
        "rho_E_abs": _grid_table(np.abs(rho_E)),
        "R2_abs": _grid_table(np.abs(R2)),
        "L2_abs": _grid_table(np.abs(L2)),
        "stationary": Table(["n", "m", "re", "im"],
                            [[n + 1, m + 1, rho_E[n, m].real, rho_E[n, m].imag]
                             for n in range(cfg.chain.L) for m in range(cfg.chain.L)]),
        "summary": Table(["quantity", "value"], [
            ["gap", sd.gap],
            ["near_degenerate", sd.near_degenerate],
            ["biorthonormality_error", spectral.biorthonormality_error(sd)],
            ["R2_edge_weight_left", spectral.edge_weight(R2, "left")],
            ["R2_edge_weight_right", spectral.edge_weight(R2, "right")],
            ["L2_edge_weight_left", spectral.edge_weight(L2, "left")],
            ["L2_edge_weight_right", spectral.edge_weight(L2, "right")],
        ]),
    }
    return payload, EXIT_OK


def _protocol(cfg: RunConfig, kind: str):
    if kind == "direct":
        return dynamics.Protocol.direct(cfg.chain)
    return dynamics.Protocol.pontus(cfg.chain, tau=cfg.tau, eps1=cfg.eps1)


def cmd_relax(cfg: RunConfig):
    payload = {}
    summary = []
    L = cfg.chain.L
    for state in cfg.initial_states:
        rho_i = site_state(L, 1 if state == "first" else L)
        for kind in cfg.kinds:
            proto = _protocol(cfg, kind)
            rec = dynamics.run_protocol(proto, rho_i, cfg.threshold, cfg.horizon, cfg.dt,
                                        cfg.trel_mode, cfg.tol, cfg.method, strict=False)
            status = "ok" if not (math.isnan(rec.t_rel_tr) or math.isnan(rec.t_rel_hs)) else "not-relaxed"
            payload[f"{kind}_{state}"] = Table(["t", "D_tr", "D_HS"],
                                               zip(rec.times, rec.d_tr, rec.d_hs))
            summary.append([kind, state, proto.preparation_time, rec.t_rel_tr, rec.t_rel_hs, status])
    payload["summary"] = Table(["protocol", "initial_state", "tau", "t_rel_tr", "t_rel_hs", "status"], summary)
    return payload, EXIT_OK


def cmd_sweep(cfg: RunConfig):
    grid = cfg.tau_grid or ((cfg.tau,) if cfg.tau else ())
    if not grid:
        raise ConfigError("sweep needs [protocol] tau_grid (or tau)")
    rows = dynamics.sweep_preparation_time(cfg.chain, grid, cfg.threshold, cfg.horizon, cfg.dt,
                                           cfg.trel_mode, workers=cfg.workers, method=cfg.method)
    cols = ["tau", "eps1", "t_rel_direct", "t_rel_pontus", "status"]
    payload = {
        "tr": Table(cols, [[r.tau, r.eps1, r.direct_tr, r.pontus_tr, r.status] for r in rows]),
        "hs": Table(cols, [[r.tau, r.eps1, r.direct_hs, r.pontus_hs, r.status] for r in rows]),
    }
    return payload, EXIT_OK


def cmd_oracle(cfg: RunConfig):
    """Compare the quantum machinery at ``J = eps = 0`` against the exact birth-death results."""
    p = cfg.chain
    if p.J != 0 or p.eps != 0:
        log.warning("oracle uses J = eps = 0; ignoring J=%g, eps=%g from the config", p.J, p.eps)
    p = p.replace(J=0.0, eps=0.0)
    m = classical.BirthDeathModel.from_chain(p)
    checks = []

    def check(name, value, tol):
        checks.append([name, value, tol, bool(value <= tol)])

    # analytic vs numerical spectrum of M over a grid of sizes and skin parameters
    eig_rows = []
    for L in cfg.oracle_L_values:
        for r in cfg.oracle_r_values:
            bm = classical.BirthDeathModel(L, r, 1.0)
            w, _ = eigensystem(classical.build_generator(bm))
            numeric = np.sort(w.real)[::-1]
            resid = float(np.abs(numeric - classical.analytic_eigenvalues(bm)).max())
            resid = max(resid, float(np.abs(w.imag).max()))
            eig_rows.append([L, r, resid])
    check("eigenvalue_residual_max", max(row[2] for row in eig_rows), EIG_TOL)

    # stationary state: kernel of M, and the diagonal of the quantum rho_E
    P_E = classical.stationary_distribution(m)
    M = classical.build_generator(m)
    kernel = float(np.abs(M @ P_E).max())
    sd = spectral.decompose(build_liouvillian(p), allow_degenerate=True)
    rho_E = spectral.stationary_state(sd)
    quantum_diag = float(np.abs(np.diag(rho_E).real - P_E).max())
    quantum_offdiag = float(np.abs(rho_E - np.diag(np.diag(rho_E))).max())
    stat_rows = [["kernel_residual", kernel], ["quantum_diagonal_deviation", quantum_diag],
                 ["quantum_coherence_max", quantum_offdiag]]
    check("stationary_kernel_residual", kernel, STATIONARY_TOL)
    check("stationary_quantum_deviation", quantum_diag, 1e-9)

    # edge coefficient ratios, classical vs quantum, alongside the power laws
    modes = classical.biorthogonal_modes(m)
    c_first = spectral.overlap_coefficients(sd, site_state(p.L, 1))
    c_last = spectral.overlap_coefficients(sd, site_state(p.L, p.L))
    ratio_rows = []
    worst_ratio = 0.0
    for alpha in range(2, p.L + 1):
        lam = modes.eigenvalues[alpha - 1]
        q = int(np.argmin(np.abs(sd.eigenvalues - lam)))
        cl = classical.edge_coefficient_ratio(modes, alpha)
        qu = float(abs(c_first[q] / c_last[q])) if c_last[q] != 0 else math.inf
        dev = abs(qu / cl - 1.0)
        worst_ratio = max(worst_ratio, dev)
        ratio_rows.append([alpha, lam, cl, qu, m.r ** (p.L - 1), m.r ** (p.L / 2), dev])
    check("coefficient_ratio_rel_deviation", worst_ratio, RATIO_REL_TOL)

    # diagonal of the integrated quantum trajectory vs exp(M t) P(0)
    rng = np.random.default_rng(cfg.seed)
    P_rand = rng.random(p.L)
    P_rand /= P_rand.sum()
    times = np.linspace(0.0, cfg.oracle_t_max, cfg.oracle_samples)
    traj_rows = []
    worst_diag = worst_coh = 0.0
    for label, P0 in (("first_site", np.eye(p.L)[0]), ("random", P_rand)):
        states = dynamics.propagate_numeric(p, np.diag(P0).astype(complex), times, tol=cfg.tol)
        exact = classical.evolve_distribution(m, P0, times)
        for t, rho, P in zip(times, states, exact):
            dd = float(np.abs(np.diag(rho).real - P).max())
            coh = float(np.abs(rho - np.diag(np.diag(rho))).max())
            worst_diag, worst_coh = max(worst_diag, dd), max(worst_coh, coh)
            traj_rows.append([label, t, dd, coh])
    check("trajectory_diagonal_deviation", worst_diag, TRAJ_TOL)
    check("trajectory_coherence_max", worst_coh, COHERENCE_TOL)

    payload = {
        "eigenvalues": Table(["L", "r", "max_abs_residual"], eig_rows),
        "stationary": Table(["quantity", "value"], stat_rows),
        "ratios": Table(["alpha", "lambda", "classical_ratio", "quantum_ratio",
                         "r_pow_L_minus_1", "r_pow_L_over_2", "rel_deviation"], ratio_rows),
        "trajectory": Table(["initial", "t", "diag_deviation", "coherence_max"], traj_rows),
        "summary": Table(["check", "value", "tolerance", "pass"], checks),
    }
    ok = all(c[3] for c in checks)
    for c in checks:
        if not c[3]:
            log.error("oracle check %s failed: %.3e > %.1e", c[0], c[1], c[2])
    return payload, EXIT_OK if ok else EXIT_TOLERANCE


COMMANDS = {"spectrum": cmd_spectrum, "relax": cmd_relax, "sweep": cmd_sweep, "oracle": cmd_oracle}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="skinpontus", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, type=Path, help="INI run configuration")
    parser.add_argument("--out", type=Path, help="output directory (overrides [output] dir)")
    parser.add_argument("--format", choices=FORMATS, help="output format (overrides [output] format)")
    parser.add_argument("--threshold", type=float, help="relaxation threshold delta")
    parser.add_argument("--trel-mode", choices=TREL_MODES, help="relaxation-time definition")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config).with_overrides(
            out_dir=args.out, fmt=args.format, threshold=args.threshold, trel_mode=args.trel_mode)
    except ConfigError as exc:
        print(f"skinpontus: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        payload, code = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"skinpontus: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except SkinPontusError as exc:
        print(f"skinpontus: {args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for path in write_payload(args.command, payload, cfg.out_dir, cfg.fmt):
        log.info("wrote %s", path)
    return code


if __name__ == "__main__":
    sys.exit(main())
