"""Command-line entry point.

Usage::

    chlab make-data [--config FILE] [--set key=value ...]
    chlab evolve    [--config FILE] [--set key=value ...]
    chlab check {gronwall,loginterp,kernel,slope-ode} [...]
    chlab sweep     [--config FILE] [--set key=value ...]
    chlab report    [--config FILE] [--set key=value ...]

Each command writes into ``<out_dir>/<command>/``: its artifacts, the echoed
configuration, and ``manifest.txt`` with a SHA-256 per file.  Exit status is 0
when every assertion in scope passes, 1 on failure, 2 when inconclusive; a
``FAILED`` marker file is left next to partial outputs on non-zero exits.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from pathlib import Path

import numpy as np

from chlab import evolution as ev
from chlab import inflation_lab as lab
from chlab.config import ConfigError, RunConfig, parse_config
from chlab.initial_data import SeedSpec, build_ch_seed, build_novikov_seed
from chlab.littlewood_paley import NormSpec, norm_report_row, write_norm_csv
from chlab.plot import emit_plot
from chlab.spectral_core import (
    DomainSpec,
    SpectralField,
    eval_at,
    green_convolve,
    green_kernel,
    helmholtz_inverse,
    save_snapshot,
)

EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2
MANIFEST = "manifest.txt"
FAILED = "FAILED"


class Outcome:
    def __init__(self, status: int = EXIT_OK, reason: str = ""):
        self.status = status
        self.reason = reason


def _log(msg: str):
    print(msg, flush=True)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(folder: Path) -> Path:
    files = sorted(p for p in folder.rglob("*") if p.is_file() and p.name != MANIFEST)
    lines = [f"{_sha256(p)}  {p.relative_to(folder).as_posix()}" for p in files]
    path = folder / MANIFEST
    path.write_text("".join(line + "\n" for line in lines))
    return path


def verify_manifest(folder: Path) -> list[str]:
    """Files whose hash no longer matches (or that vanished)."""
    bad = []
    for line in (folder / MANIFEST).read_text().splitlines():
        digest, name = line.split("  ", 1)
        p = folder / name
        if not p.is_file() or _sha256(p) != digest:
            bad.append(name)
    return bad


# ---------------------------------------------------------------------------
# seeds


def build_seed(cfg: RunConfig):
    """The configured initial datum and its certificate (or ``None``)."""
    exp = cfg.experiment
    domain = exp.domain
    if cfg.seed == "zero":
        return SpectralField.zeros(domain), None
    if cfg.seed == "sine":
        a = cfg.amplitude
        return SpectralField.from_function(domain, lambda x: -a * np.sin(x / domain.M)), None
    if cfg.seed == "novikov":
        return build_novikov_seed(cfg.K, exp.r, domain=domain)
    return build_ch_seed(SeedSpec(exp.eps, exp.p, exp.r, cfg.K), domain=domain)


# ---------------------------------------------------------------------------
# commands


def cmd_make_data(cfg: RunConfig, out: Path) -> Outcome:
    u0, cert = build_seed(cfg)
    exp = cfg.experiment
    save_snapshot(out / "seed.snapshot", u0, 0.0)
    if cert is not None:
        (out / "certificate.txt").write_text(cert.report() + "\n")
    specs = [NormSpec.critical(exp.p, exp.r), NormSpec(1.0, math.inf, math.inf), NormSpec(1.0, 2.0, 2.0)]
    write_norm_csv(out / "norms.csv", [norm_report_row("seed", u0, s) for s in specs])
    _log(f"seed {cfg.seed} K={cfg.K}: u0'(0) = {ev.sample_diagnostics(u0, 0.0, exp.model, specs[0]).g:.6g}")
    return Outcome()


def cmd_evolve(cfg: RunConfig, out: Path) -> Outcome:
    exp = cfg.experiment
    u0, _ = build_seed(cfg)
    traj, rep = ev.integrate(u0, exp.model, exp.solver, NormSpec.critical(exp.p, exp.r))
    traj.to_csv(out / "trajectory.csv")
    (out / "blowup_report.txt").write_text(rep.to_text())
    save_snapshot(out / "seed.snapshot", u0, 0.0)
    t = traj.column("t")
    emit_plot(out / "norms.svg", [("B1_inf_inf", t, traj.column("b1_inf_inf")),
                                  ("|u_x|_inf", t, traj.column("linf_ux"))],
              title=f"{exp.model.name} {cfg.seed} seed", ylabel="norm", logy=True)
    _log(f"T_obs = {rep.T_obs:.6g} trigger = {rep.trigger} bound = {rep.analytic_bound:.6g}")
    if not math.isfinite(rep.analytic_bound):
        return Outcome()
    if rep.trigger != "slope_cap":
        return Outcome(EXIT_INCONCLUSIVE, f"{lab.INCONCLUSIVE}: run ended by {rep.trigger}")
    if rep.T_obs > rep.analytic_bound * (1.0 + exp.margin):
        return Outcome(EXIT_FAIL, f"T_obs {rep.T_obs:.6g} exceeds bound {rep.analytic_bound:.6g}")
    return Outcome()


def cmd_check_gronwall(cfg: RunConfig, out: Path) -> Outcome:
    rows, ok = [], True
    for A0 in (1.0, 10.0):
        for B in (0.5, 1.0, 2.0):
            for T in (1.0, 2.0):
                rep = lab.gronwall_verify(A0, B, T)
                ok &= rep.passed
                rows.append({"A0": A0, "B": B, "T": T, "passed": rep.passed,
                             "inconclusive": rep.inconclusive, "max_log_gap": rep.max_log_ratio})
    lab.write_rows(out / "gronwall.csv", rows, list(rows[0]))
    _log(f"gronwall: {sum(r['passed'] for r in rows)}/{len(rows)} pass")
    if any(r["inconclusive"] for r in rows):
        return Outcome(EXIT_INCONCLUSIVE, "ODE stepper failure")
    return Outcome() if ok else Outcome(EXIT_FAIL, "Gronwall bound violated")


def cmd_check_loginterp(cfg: RunConfig, out: Path) -> Outcome:
    base = lab.log_interp_verify(size=300, seed=0)
    doubled = lab.log_interp_verify(size=600, seed=1)
    rows = [{"kind": r.kind, "label": r.label, "lhs": r.lhs, "b1": r.b1, "h2": r.h2, "C": r.C,
             "split_N": r.split_N, "low_ratio": r.low_ratio, "high_sum": r.high_sum} for r in base.rows]
    lab.write_rows(out / "loginterp.csv", rows, list(rows[0]))
    change = abs(doubled.C_sup - base.C_sup) / base.C_sup
    (out / "loginterp_summary.txt").write_text(
        f"C_sup_300 = {base.C_sup!r}\nC_sup_600 = {doubled.C_sup!r}\nrelative_change = {change!r}\n"
        f"low_ratio_sup = {base.low_ratio_sup!r}\nhigh_sum_sup = {base.high_sum_sup!r}\n")
    _log(f"loginterp: C = {base.C_sup:.4g} (300 fields), {doubled.C_sup:.4g} (600), change {change:.2%}")
    if base.finite and doubled.finite and change <= 0.10:
        return Outcome()
    return Outcome(EXIT_FAIL, "log-interpolation constant unstable")


def kernel_checks(n_fields: int = 100, seed: int = 0, spike_N: int = 2**16):
    """Green-kernel convolution against the Helmholtz multiplier on random
    torus fields, and the spike response against ``e^{-|x|}/2`` on the line."""
    rng = np.random.default_rng(seed)
    domain = DomainSpec.torus(1024)
    worst = 0.0
    for _ in range(n_fields):
        c = rng.standard_normal(domain.xi.size) + 1j * rng.standard_normal(domain.xi.size)
        c[0] = c[0].real
        c[-1] = 0.0
        f = SpectralField(domain, c)
        a = green_convolve(f).values()
        b = helmholtz_inverse(f).values()
        worst = max(worst, float(np.max(np.abs(a - b)) / np.max(np.abs(b))))
    line = DomainSpec.line(spike_N)
    spike = SpectralField(line, np.where(np.arange(line.xi.size) < line.N // 2, 1.0 / line.L, 0.0) + 0j)
    resp = green_convolve(spike).values()
    x = line.x_signed
    away = np.abs(x) >= 1.0
    spike_err = float(np.max(np.abs(resp[away] - green_kernel(x[away]))))
    return worst, spike_err


def cmd_check_kernel(cfg: RunConfig, out: Path) -> Outcome:
    worst, spike_err = kernel_checks()
    (out / "kernel.txt").write_text(f"random_max_rel = {worst!r}\nspike_max_abs_away = {spike_err!r}\n")
    _log(f"kernel: random fields {worst:.2e} (tol 1e-10), spike {spike_err:.2e} (tol 1e-6)")
    return Outcome() if worst <= 1e-10 and spike_err <= 1e-6 else Outcome(EXIT_FAIL, "kernel identity")


def slope_ode_reference(amplitude: float = 50.0, N: int = 4096, model=None):
    """The reference odd run ``u0 = -A sin x`` sampled densely enough for
    centred differences of ``g``."""
    model = model or ev.ModelSpec.ch()
    domain = DomainSpec.torus(N)
    u0 = SpectralField.from_function(domain, lambda x: -amplitude * np.sin(x))
    bound = model.blowup_bound(-amplitude)
    solver = ev.SolverConfig(sample_interval=2e-4 / amplitude, horizon=bound * 1.05)
    return ev.integrate(u0, model, solver)


def cmd_check_slope_ode(cfg: RunConfig, out: Path) -> Outcome:
    exp = cfg.experiment
    if exp.model.is_novikov or exp.geometry != "torus":
        return Outcome(EXIT_FAIL, "slope-ode check needs a b-family model on the torus")
    traj, rep = slope_ode_reference(cfg.amplitude, exp.N, exp.model)
    res = ev.slope_ode_residual(traj, exp.model)
    g0 = traj.samples[0].g
    rel = res.max_abs / g0**2
    riccati_ok = bool(res.gdot.size and res.gdot[0] < -0.5 * g0**2)
    lab.write_rows(out / "slope_residual.csv",
                   [{"t": float(t), "residual": float(r)} for t, r in zip(res.t, res.residual)],
                   ["t", "residual"])
    traj.to_csv(out / "trajectory.csv")
    _log(f"slope-ode: max residual / g0^2 = {rel:.3e} over {res.t.size} samples; "
         f"g'(0) < -g0^2/2: {riccati_ok}")
    if rel <= 1e-4 and riccati_ok:
        return Outcome()
    return Outcome(EXIT_FAIL, f"residual {rel:.3e} or Riccati inequality")


def cmd_sweep(cfg: RunConfig, out: Path) -> Outcome:
    exp = cfg.experiment
    try:
        exp.check_admissible()
    except ValueError as err:
        _log(str(err))
        return Outcome(EXIT_FAIL, str(err))
    exp.out_dir = out
    verdict, trajs = lab.run_norm_inflation(exp, keep_trajectories=True)
    emit_plot(out / "inflation.svg",
              [(f"K={K}", tr.column("t"), tr.column("b1_inf_inf")) for K, tr in trajs.items()],
              title="B1_inf_inf along the K-sweep", ylabel="B1_inf_inf", logy=True)
    for row in verdict.rows:
        _log(f"K={row['K']}: T_obs={row['T_obs']:.6g} inflation={row['inflation']:.4g} "
             f"{'included' if row['included'] else 'excluded: ' + row['reason']}")
    for name, ok in verdict.checks.items():
        _log(f"  {name}: {'pass' if ok else 'FAIL'}")
    (out / "verdict.txt").write_text(
        f"verdict = {verdict.verdict}\n" + "".join(f"{k} = {v}\n" for k, v in verdict.checks.items()))
    if verdict.verdict == lab.PASS:
        return Outcome()
    return Outcome(EXIT_FAIL, "inflation verdict FAIL")


def cmd_report(cfg: RunConfig, out: Path) -> Outcome:
    root = out.parent
    lines, status = [], EXIT_OK
    for folder in sorted(p for p in root.iterdir() if p.is_dir() and p != out):
        if not (folder / MANIFEST).is_file():
            continue
        bad = verify_manifest(folder)
        failed = (folder / FAILED).is_file()
        state = "FAILED" if failed else "ok"
        if bad:
            state += f" (hash mismatch: {', '.join(bad)})"
            status = EXIT_FAIL
        lines.append(f"{folder.name}: {state}")
    (out / "summary.txt").write_text("".join(line + "\n" for line in lines))
    for line in lines:
        _log(line)
    return Outcome(status, "manifest mismatch" if status else "")


COMMANDS = {
    "make-data": cmd_make_data,
    "evolve": cmd_evolve,
    "sweep": cmd_sweep,
    "report": cmd_report,
}
CHECKS = {
    "gronwall": cmd_check_gronwall,
    "loginterp": cmd_check_loginterp,
    "kernel": cmd_check_kernel,
    "slope-ode": cmd_check_slope_ode,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chlab", description=__doc__.split("\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key=value config file")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a config entry (repeatable)")
    common.add_argument("--out", type=Path, help="output root (same as --set out_dir=...)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    check = sub.add_parser("check", parents=[common])
    check.add_argument("which", choices=sorted(CHECKS))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = list(args.overrides)
    if args.out is not None:
        overrides.append(f"out_dir={args.out}")
    try:
        cfg = parse_config(args.config, overrides)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_FAIL
    name = args.command if args.command != "check" else f"check-{args.which}"
    func = COMMANDS.get(args.command) or CHECKS[args.which]
    out = Path(cfg.values["out_dir"]) / name
    out.mkdir(parents=True, exist_ok=True)
    (out / FAILED).unlink(missing_ok=True)
    (out / "config.echo.txt").write_text(cfg.echo())
    for line in cfg.echo().splitlines():
        _log(f"  {line}")
    try:
        outcome = func(cfg, out)
    except ValueError as err:
        outcome = Outcome(EXIT_FAIL, str(err))
        _log(f"error: {err}")
    if outcome.status != EXIT_OK:
        (out / FAILED).write_text(outcome.reason + "\n")
    write_manifest(out)
    _log(f"{name}: exit {outcome.status}")
    return outcome.status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
