"""Command-line interface: config parsing, subcommands, CSV output.

Subcommands: spectrum, gram-scan, wronskian-check, oracle, convergence.
Exit codes: 0 success, 2 validation failure, 3 numerical non-convergence.
All numeric CSV fields use the shortest round-trip decimal representation,
so identical configs produce byte-identical output.
"""

from __future__ import annotations

import argparse
import configparser
import io
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import wronlab
from .oracle import OracleConfig, OracleError, oracle_spectrum
from .orbit import ConvergenceError, OrbitError
from .quantize import (QuantizeError, attach_oracle, bs_solve,
                       convergence_fit, gram_scan)
from .symbols import EnergyWindow, SymbolError, from_potential, validate_well

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NONCONVERGENCE = 3


class ConfigError(Exception):
    pass


def _unquote(s):
    s = s.strip()
    if len(s) >= 2 and s[0] == s[-1] and s[0] in "\"'":
        return s[1:-1]
    return s


@dataclass
class RunConfig:
    potential: str = "x^2"
    p1: str = "0"
    p2: str = "0"
    hbar: list = field(default_factory=lambda: [0.1])
    energy_min: float = 0.05
    energy_max: float = 1.0
    order: int = 2
    quad_tol: float = 1e-10
    ode_tol: float = 1e-10
    root_tol: float = 1e-10
    eta: float | None = None  # default 0.02 * window span
    halfwidth_factor: float = 2.0
    shoot_tol: float = 1e-10
    grid_points_per_oscillation: int = 12
    cutoff_r1: float | None = None
    cutoff_r2: float | None = None

    def validate(self):
        if self.order not in (0, 1, 2):
            raise ConfigError(f"order must be 0, 1 or 2, got {self.order}")
        if not self.energy_min < self.energy_max:
            raise ConfigError("energy_min must be below energy_max")
        for name in ("quad_tol", "ode_tol", "root_tol", "shoot_tol"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.eta is not None and self.eta <= 0:
            raise ConfigError("eta must be positive")
        if not self.hbar or any(h <= 0 for h in self.hbar):
            raise ConfigError("hbar values must be positive")
        if self.halfwidth_factor < 1.5:
            raise ConfigError("halfwidth_factor must be >= 1.5")
        if self.grid_points_per_oscillation < 4:
            raise ConfigError("grid_points_per_oscillation must be >= 4")
        return self

    @property
    def eta_value(self):
        if self.eta is not None:
            return self.eta
        return 0.02 * (self.energy_max - self.energy_min)

    @property
    def window(self):
        return EnergyWindow(self.energy_min, self.energy_max)

    def symbol(self):
        return from_potential(self.potential, self.p1, self.p2)

    def dump(self, stream):
        """Emit the effective configuration; re-parses to an equal config."""
        cp = configparser.ConfigParser()
        cp["problem"] = {
            "potential": f'"{self.potential}"',
            "p1": f'"{self.p1}"',
            "p2": f'"{self.p2}"',
            "hbar": ",".join(repr(h) for h in self.hbar),
            "energy_min": repr(self.energy_min),
            "energy_max": repr(self.energy_max),
        }
        cp["solver"] = {
            "order": str(self.order),
            "quad_tol": repr(self.quad_tol),
            "ode_tol": repr(self.ode_tol),
            "root_tol": repr(self.root_tol),
            "eta": repr(self.eta_value),
        }
        cp["oracle"] = {
            "halfwidth_factor": repr(self.halfwidth_factor),
            "shoot_tol": repr(self.shoot_tol),
        }
        wsec = {"grid_points_per_oscillation":
                str(self.grid_points_per_oscillation)}
        if self.cutoff_r1 is not None:
            wsec["cutoff_r1"] = repr(self.cutoff_r1)
        if self.cutoff_r2 is not None:
            wsec["cutoff_r2"] = repr(self.cutoff_r2)
        cp["wronlab"] = wsec
        cp.write(stream)


def parse_config(text):
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config does not parse: {exc}") from exc
    cfg = RunConfig()

    def get(section, key, cast, default):
        if cp.has_option(section, key):
            raw = _unquote(cp.get(section, key))
            try:
                return cast(raw)
            except ValueError as exc:
                raise ConfigError(
                    f"bad value for [{section}] {key}: {raw!r}") from exc
        return default

    def parse_hbar(raw):
        return [float(tok) for tok in raw.split(",") if tok.strip()]

    cfg.potential = get("problem", "potential", str, cfg.potential)
    cfg.p1 = get("problem", "p1", str, cfg.p1)
    cfg.p2 = get("problem", "p2", str, cfg.p2)
    cfg.hbar = get("problem", "hbar", parse_hbar, cfg.hbar)
    cfg.energy_min = get("problem", "energy_min", float, cfg.energy_min)
    cfg.energy_max = get("problem", "energy_max", float, cfg.energy_max)
    cfg.order = get("solver", "order", int, cfg.order)
    cfg.quad_tol = get("solver", "quad_tol", float, cfg.quad_tol)
    cfg.ode_tol = get("solver", "ode_tol", float, cfg.ode_tol)
    cfg.root_tol = get("solver", "root_tol", float, cfg.root_tol)
    cfg.eta = get("solver", "eta", float, cfg.eta)
    cfg.halfwidth_factor = get("oracle", "halfwidth_factor", float,
                               cfg.halfwidth_factor)
    cfg.shoot_tol = get("oracle", "shoot_tol", float, cfg.shoot_tol)
    cfg.grid_points_per_oscillation = get(
        "wronlab", "grid_points_per_oscillation", int,
        cfg.grid_points_per_oscillation)
    cfg.cutoff_r1 = get("wronlab", "cutoff_r1", float, cfg.cutoff_r1)
    cfg.cutoff_r2 = get("wronlab", "cutoff_r2", float, cfg.cutoff_r2)
    return cfg.validate()


def load_config(path):
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc


def _fmt(x):
    if x is None:
        return ""
    return repr(float(x))


def _validated_symbol(cfg):
    sym = cfg.symbol()
    report = validate_well(sym, cfg.window)
    if not report.ok:
        raise ConfigError("well hypotheses failed: "
                          + "; ".join(report.failures))
    return sym


def _oracle_cfg(cfg):
    return OracleConfig(halfwidth_factor=cfg.halfwidth_factor,
                        shoot_tol=cfg.shoot_tol)


def cmd_spectrum(cfg, out):
    sym = _validated_symbol(cfg)
    h = cfg.hbar[0]
    table = bs_solve(sym, h, cfg.window, order=cfg.order, eta=cfg.eta_value,
                     quad_tol=cfg.quad_tol, ode_tol=cfg.ode_tol,
                     root_tol=cfg.root_tol)
    if sym.schrodinger:
        attach_oracle(table, oracle_spectrum(sym, h, cfg.window,
                                             _oracle_cfg(cfg)))
    out.write("n,E_bs0,E_bs1,E_bs2,E_oracle,err0,err2\n")
    for row in table.rows:
        out.write(",".join([str(row.n), _fmt(row.e_order0),
                            _fmt(row.e_order1), _fmt(row.e_order2),
                            _fmt(row.e_oracle), _fmt(row.err0),
                            _fmt(row.err2)]) + "\n")
    return EXIT_OK


def cmd_gram_scan(cfg, out, steps=200):
    sym = _validated_symbol(cfg)
    h = cfg.hbar[0]
    evals, zeros = gram_scan(sym, cfg.window, h, steps=steps,
                             order=cfg.order, eta=cfg.eta_value,
                             quad_tol=cfg.quad_tol, ode_tol=cfg.ode_tol)
    es = np.array([g.e for g in evals])
    flagged = set()
    for z in zeros:
        flagged.add(int(np.argmin(np.abs(es - z))))
    out.write("E,det,zero_flag\n")
    for i, g in enumerate(evals):
        out.write(f"{_fmt(g.e)},{_fmt(g.det)},{1 if i in flagged else 0}\n")
    return EXIT_OK


def cmd_oracle(cfg, out):
    sym = _validated_symbol(cfg)
    if not sym.schrodinger:
        raise ConfigError("the oracle requires a Schrodinger symbol")
    h = cfg.hbar[0]
    energies = oracle_spectrum(sym, h, cfg.window, _oracle_cfg(cfg))
    out.write("n,E\n")
    for n, e in enumerate(energies):
        out.write(f"{n},{_fmt(e)}\n")
    return EXIT_OK


def cmd_convergence(cfg, out):
    sym = _validated_symbol(cfg)
    if len(cfg.hbar) < 3:
        raise ConfigError("convergence requires at least 3 hbar values")
    rows = []
    for h in cfg.hbar:
        table = bs_solve(sym, h, cfg.window, order=2, eta=cfg.eta_value,
                         quad_tol=cfg.quad_tol, ode_tol=cfg.ode_tol,
                         root_tol=cfg.root_tol)
        ref = oracle_spectrum(sym, h, cfg.window, _oracle_cfg(cfg))
        n = min(len(ref), len(table.rows))
        err0 = max(abs(a - b) for a, b in zip(table.energies(0)[:n], ref[:n]))
        err2 = max(abs(a - b) for a, b in zip(table.energies(2)[:n], ref[:n]))
        rows.append((h, err0, err2))
    out.write("h,max_err_order0,max_err_order2\n")
    for h, e0, e2 in rows:
        out.write(f"{_fmt(h)},{_fmt(e0)},{_fmt(e2)}\n")
    s0, _, _ = convergence_fit([(h, e0) for h, e0, _ in rows])
    s2, _, _ = convergence_fit([(h, e2) for h, _, e2 in rows])
    out.write(f"# slope_order0={_fmt(s0)},slope_order2={_fmt(s2)}\n")
    return EXIT_OK


def cmd_wronskian_check(cfg, out):
    sym = _validated_symbol(cfg)
    h = cfg.hbar[0]
    e = 0.5 * (cfg.energy_min + cfg.energy_max)
    ppo = max(cfg.grid_points_per_oscillation, 63)
    xs = wronlab.default_grid(sym, e, h, points_per_oscillation=ppo)

    def cutoff(basepoint):
        if cfg.cutoff_r1 is not None and cfg.cutoff_r2 is not None:
            from .orbit import turning_points
            xl, xr = turning_points(sym, e)
            center = xr if basepoint == "a" else xl
            return wronlab.CutoffSpec(center=center, r1=cfg.cutoff_r1,
                                      r2=cfg.cutoff_r2)
        return wronlab.default_cutoff(sym, e, h, basepoint)

    # the grid must resolve the cutoff transitions as well as the phase
    width = min(c.r2 - c.r1 for c in (cutoff("a"), cutoff("a'")))
    dx_needed = width / 64.0
    if xs[1] - xs[0] > dx_needed:
        n = int(math.ceil((xs[-1] - xs[0]) / dx_needed)) + 1
        xs = np.linspace(xs[0], xs[-1], n)

    checks = []
    rep_a = wronlab.flux_norm_check(sym, e, h, "a", chi=cutoff("a"), xs=xs)
    checks.append(("flux_norm_a", rep_a.residual, 0.1))
    rep_ap = wronlab.flux_norm_check(sym, e, h, "a'", chi=cutoff("a'"), xs=xs)
    checks.append(("flux_norm_a_prime", rep_ap.residual, 0.1))
    checks.append(("mixed_term", abs(rep_a.mixed_pm),
                   1e-4 * max(rep_a.norm_sq, 1.0)))
    chi_rep = wronlab.chi_independence_check(sym, e, h, "a",
                                             chi_1=cutoff("a"), xs=xs)
    checks.append(("chi_independence", chi_rep.difference, chi_rep.bound))
    checks.append(("sum_identity", abs(chi_rep.sum_identity),
                   1e-4 * max(chi_rep.norm_sq, 1.0)))
    gram = wronlab.gram_numeric(sym, e, h, xs=xs)
    checks.append(("gram_det_vs_analytic",
                   abs(gram.det - gram.analytic_det), 0.05))
    checks.append(("gram_off_diagonal",
                   abs(gram.matrix[1, 0] - gram.off_diag_expected), 0.05))
    span = float(xs[-1] - xs[0])
    chi_id = wronlab.CutoffSpec(center=float(xs[-1]) + 0.3 * span,
                                r1=0.45 * span, r2=0.9 * span)
    lhs, rhs = wronlab.commutator_wronskian_identity(sym, e, 1.0, chi_id, xs)
    checks.append(("wronskian_identity", abs(lhs - rhs), 1e-8))

    out.write("check,value,bound,pass\n")
    failed = False
    for name, value, bound in checks:
        ok = value <= bound
        failed = failed or not ok
        out.write(f"{name},{_fmt(value)},{_fmt(bound)},"
                  f"{'1' if ok else '0'}\n")
    return EXIT_NONCONVERGENCE if failed else EXIT_OK


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "gram-scan": cmd_gram_scan,
    "wronskian-check": cmd_wronskian_check,
    "oracle": cmd_oracle,
    "convergence": cmd_convergence,
}


def _build_parser():
    p = argparse.ArgumentParser(
        prog="semibs",
        description="Semiclassical spectra of one-dimensional wells")
    p.add_argument("subcommand", choices=sorted(_COMMANDS))
    p.add_argument("--config", help="path to the run configuration")
    p.add_argument("--order", type=int, help="override the series order")
    p.add_argument("--hbar", help="override hbar (single value or list)")
    p.add_argument("--out", help="write CSV to this path instead of stdout")
    p.add_argument("--dump-config",
                   help="also write the effective configuration here")
    return p


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.order is not None:
            cfg.order = args.order
        if args.hbar is not None:
            cfg.hbar = [float(tok) for tok in args.hbar.split(",")
                        if tok.strip()]
        cfg.validate()
        buf = io.StringIO()
        code = _COMMANDS[args.subcommand](cfg, buf)
        if args.dump_config:
            with open(args.dump_config, "w") as fh:
                cfg.dump(fh)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(buf.getvalue())
        else:
            sys.stdout.write(buf.getvalue())
        return code
    except (ConfigError, SymbolError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConvergenceError, OrbitError, OracleError, QuantizeError,
            wronlab.WronlabError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
