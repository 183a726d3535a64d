"""Experiment runner.

Usage: python -m inviscid_damping {spectrum,evolve,compare,decay,scatter,validate}
           --config PATH [--out DIR] [--threads N]

The config is an INI file; see README.md for the schema.  Outputs are CSV
files with a versioned schema comment on the first line and a JSON summary.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (BadParams, ConfigError, DampingError, DiscreteSpectrumPresent,
                     EmbeddingEigenvalue, NonMonotone)
from .evolution import (SHAPES, Representation, decay_metrics, fd_derivative,
                        mode_norms, mu_for_mode, mu_norm_diagnostics, norm_l2,
                        scattering_profile, shape_mode, table_mode)
from .oracle import elliptic_solve, evolve_to, make_state
from .profile import IDENTICALLY_ZERO, inflection_points, make_profile
from .rayleigh import build_field
from .spectrum import (alpha_max_checked, default_embedding_tol, embedding_scan,
                       spectral_data, winding_number)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_EMBEDDING, EXIT_DISCRETE = 0, 1, 2, 3, 4
SUBCOMMANDS = ("spectrum", "evolve", "compare", "decay", "scatter", "validate")


@dataclass
class ExperimentConfig:
    kind: str
    params: tuple
    table: str | None
    alphas: list
    shapes: dict
    tables: dict
    ny: int = 257
    levels: int = 24
    tgrid: list = field(default_factory=lambda: [0.0] + [2.0**k for k in range(9)])
    fit_window: tuple = (16.0, 256.0)
    fit_samples: int = 9
    scatter_T: list = field(default_factory=lambda: [16.0, 32.0, 64.0, 128.0])
    compare_tmax: float = 20.0
    compare_dt: float = 1.0
    series_tol: float = 1e-14
    embedding_tol: float | None = None
    oracle_tol: float = 1e-8
    oracle_order: int = 4
    winding: bool = True
    out: str = "out"


def _floats(text):
    return [float(v) for v in text.replace(",", " ").split()]


def load_config(path) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        base = Path(path).parent
        prof = cp["profile"]
        kind = prof.get("kind", "couette")
        params = tuple(_floats(prof.get("params", "")))
        table = prof.get("table")
        if table:
            table = str(base / table)
        modes = cp["modes"]
        alphas = [int(a) for a in _floats(modes.get("alphas", "1"))]
        default_shape = modes.get("shape", "sine")
        shapes, tables = {}, {}
        for a in alphas:
            shapes[a] = modes.get(f"shape_{a}", default_shape)
            if modes.get(f"table_{a}"):
                tables[a] = str(base / modes.get(f"table_{a}"))
        cfg = ExperimentConfig(kind, params, table, alphas, shapes, tables)
        if cp.has_section("grid"):
            g = cp["grid"]
            cfg.ny = g.getint("ny", cfg.ny)
            cfg.levels = g.getint("levels", cfg.levels)
        if cp.has_section("time"):
            t = cp["time"]
            if "tgrid" in t:
                cfg.tgrid = _floats(t["tgrid"])
            if "fit_window" in t:
                cfg.fit_window = tuple(_floats(t["fit_window"]))
            cfg.fit_samples = t.getint("fit_samples", cfg.fit_samples)
            if "scatter_T" in t:
                cfg.scatter_T = _floats(t["scatter_T"])
            cfg.compare_tmax = t.getfloat("compare_tmax", cfg.compare_tmax)
            cfg.compare_dt = t.getfloat("compare_dt", cfg.compare_dt)
        if cp.has_section("tolerances"):
            tl = cp["tolerances"]
            cfg.series_tol = tl.getfloat("series_tol", cfg.series_tol)
            if "embedding_tol" in tl:
                cfg.embedding_tol = tl.getfloat("embedding_tol")
            cfg.oracle_tol = tl.getfloat("oracle_tol", cfg.oracle_tol)
            cfg.oracle_order = tl.getint("oracle_order", cfg.oracle_order)
        if cp.has_section("spectrum"):
            cfg.winding = cp["spectrum"].getboolean("winding", cfg.winding)
        if cp.has_section("output"):
            cfg.out = str(base / cp["output"].get("dir", cfg.out))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    if cfg.ny < 65:
        raise ConfigError("ny must be at least 65")
    if not cfg.alphas:
        raise ConfigError("at least one wavenumber is required")
    if any(a == 0 for a in cfg.alphas):
        raise ConfigError("alpha = 0 is excluded (zero x-mean convention)")
    if any(a < 0 for a in cfg.alphas):
        raise ConfigError("list positive wavenumbers; negative ones are their conjugates")
    for a, s in cfg.shapes.items():
        if a not in cfg.tables and s not in SHAPES:
            raise ConfigError(f"unknown initial shape {s!r} for alpha={a}")
    if any(v <= 0 for v in (cfg.series_tol, cfg.oracle_tol)):
        raise ConfigError("tolerances must be positive")
    if cfg.embedding_tol is not None and cfg.embedding_tol <= 0:
        raise ConfigError("embedding_tol must be positive")
    if any(t < 0 for t in cfg.tgrid):
        raise ConfigError("times must be non-negative")
    if cfg.levels < 0:
        raise ConfigError("levels must be non-negative")


def _profile(cfg):
    try:
        return make_profile(cfg.kind, cfg.params, table=cfg.table)
    except (BadParams, NonMonotone) as exc:
        raise ConfigError(str(exc)) from exc


def _mode(cfg, a):
    if a in cfg.tables:
        data = np.loadtxt(cfg.tables[a], ndmin=2)
        vals = data[:, 1] + (1j * data[:, 2] if data.shape[1] > 2 else 0.0)
        return table_mode(a, data[:, 0], vals)
    return shape_mode(a, cfg.shapes[a])


def _fmt(v):
    return f"{v:.15e}"


def write_csv(path, schema, header, rows):
    with open(path, "w") as fh:
        fh.write(f"# schema: {schema} v1 (inviscid_damping {__version__})\n")
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(float(v)) if not isinstance(v, str) else v for v in r) + "\n")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(f"{float(obj):.12e}")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, sort_keys=True, indent=2)
        fh.write("\n")


class Pipeline:
    """Per-alpha field, spectral data and spectral guards, built lazily."""

    def __init__(self, cfg, threads=1):
        self.cfg = cfg
        self.p = _profile(cfg)
        self.threads = max(1, threads)
        self._cache = {}

    def map(self, fn, items):
        if self.threads == 1:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(self.threads) as ex:
            return list(ex.map(fn, items))

    def spectral(self, a):
        if a not in self._cache:
            fld = build_field(self.p, a, self.cfg.ny, tol=self.cfg.series_tol)
            sd = spectral_data(self.p, fld)
            tol = self.cfg.embedding_tol or default_embedding_tol(self.p)
            sd.embedding_flags = embedding_scan(sd, tol)
            if self.cfg.winding:
                sd.winding = winding_number(self.p, a)
            self._cache[a] = (fld, sd)
        return self._cache[a]

    def guarded(self, a):
        fld, sd = self.spectral(a)
        if np.any(sd.embedding_flags[1:-1]):
            raise EmbeddingEigenvalue(
                f"alpha={a}: {int(sd.embedding_flags[1:-1].sum())} c-nodes flagged as embedding eigenvalues")
        if sd.winding:
            raise DiscreteSpectrumPresent(f"alpha={a}: winding number {sd.winding}")
        return fld, sd

    def representation(self, a):
        fld, sd = self.guarded(a)
        data = _mode(self.cfg, a)
        mu = mu_for_mode(self.p, fld, sd, data)
        return Representation(self.p, fld, sd, data, mu=mu, levels=self.cfg.levels)


def cmd_spectrum(pl, out):
    p = pl.p
    summary = {"profile": p.kind, "params": list(p.params), "alphas": {}}
    try:
        am, info = alpha_max_checked(p)
        summary["alpha_max_sq"] = am
        summary["alpha_max_stable"] = info["stable"]
    except DampingError:
        summary["alpha_max_sq"] = None
    for a, (fld, sd) in zip(pl.cfg.alphas, pl.map(pl.spectral, pl.cfg.alphas)):
        rows = [(c, r, i2, i3, A, B, A * A + B * B, float(f))
                for c, r, i2, i3, A, B, f in zip(sd.cgrid.nodes, sd.rho, sd.ii2, sd.ii3,
                                                  sd.A, sd.B, sd.embedding_flags)]
        write_csv(out / f"spectrum_alpha{a}.csv", "spectrum",
                  ["c", "rho", "ii2", "ii3", "A", "B", "A2B2", "embedding_flag"], rows)
        summary["alphas"][str(a)] = {"winding": sd.winding,
                                     "flags_count": int(sd.embedding_flags[1:-1].sum())}
    write_json(out / "spectrum.json", summary)
    return EXIT_OK


def _series(pl, a, tgrid):
    rep = pl.representation(a)
    y = rep.y
    rho_y = pl.p.rho(rep.u_y)
    rows = []
    for t in tgrid:
        ps, dps, w = rep.psi_hat(t), rep.dpsi_hat(t), rep.w_hat(t)
        v, v2 = mode_norms(a, y, ps, dps)
        rows.append((t, v, v2, norm_l2(y, w), norm_l2(y, fd_derivative(y, w)),
                     norm_l2(y, rho_y * fd_derivative(y, w, 2))))
    return rep, np.array(rows)


def _sum_modes(per_mode):
    tot = per_mode[0].copy()
    tot[:, 1:3] = np.sqrt(sum(m[:, 1:3] for m in per_mode))
    for col in (3, 4, 5):
        tot[:, col] = np.sqrt(sum(m[:, col] ** 2 for m in per_mode))
    return tot


_SERIES_HEADER = ["t", "V", "V2", "W_L2", "dW_L2", "rho_d2W_L2"]


def cmd_evolve(pl, out):
    tgrid = sorted(pl.cfg.tgrid)
    res = pl.map(lambda a: _series(pl, a, tgrid), pl.cfg.alphas)
    tot = _sum_modes([r[1] for r in res])
    write_csv(out / "evolve.csv", "evolve", _SERIES_HEADER, tot)
    summary = {"alphas": pl.cfg.alphas, "mu": {}}
    for a, (rep, _) in zip(pl.cfg.alphas, res):
        summary["mu"][str(a)] = mu_norm_diagnostics(pl.p, rep.fld.cgrid, rep.mu, rep.data)
        summary["mu"][str(a)]["identity_error"] = rep.mu.identity_error
    summary["sup_W_L2"] = float(tot[:, 3].max())
    write_json(out / "evolve.json", summary)
    return EXIT_OK


def _fit_times(cfg):
    lo, hi = cfg.fit_window
    n = max(cfg.fit_samples, 2)
    return list(lo * (hi / lo) ** (np.arange(n) / (n - 1)))


def cmd_decay(pl, out):
    tgrid = _fit_times(pl.cfg)
    res = pl.map(lambda a: _series(pl, a, tgrid), pl.cfg.alphas)
    tot = _sum_modes([r[1] for r in res])
    write_csv(out / "decay.csv", "decay", _SERIES_HEADER, tot)
    metrics = decay_metrics(tot[:, 0], tot[:, 1], tot[:, 2], pl.cfg.fit_window)
    write_json(out / "decay.json", {"alphas": pl.cfg.alphas, "window": list(pl.cfg.fit_window),
                                    **metrics})
    return EXIT_OK


def cmd_compare(pl, out):
    cfg = pl.cfg
    times = list(np.arange(0.0, cfg.compare_tmax + 0.5 * cfg.compare_dt, cfg.compare_dt))
    summary = {}
    for a in cfg.alphas:
        rep = pl.representation(a)
        y = rep.y
        st = make_state(pl.p, a, rep.omega0, order=cfg.oracle_order)
        _, traj = evolve_to(st, times[-1], tol=cfg.oracle_tol, samples=times)
        rows = []
        for t, w, ps in traj:
            r_ps = norm_l2(y, rep.psi_hat(t) - ps) / max(norm_l2(y, ps), 1e-300)
            wo = np.exp(1j * a * t * rep.u_y) * w
            r_w = norm_l2(y, rep.w_hat(t) - wo) / max(norm_l2(y, wo), 1e-300)
            rows.append((t, r_ps, r_w))
        write_csv(out / f"compare_alpha{a}.csv", "compare", ["t", "relerr_psi", "relerr_W"], rows)
        arr = np.array(rows)
        summary[str(a)] = {"max_relerr_psi": float(arr[:, 1].max()),
                           "max_relerr_W": float(arr[:, 2].max())}
    write_json(out / "compare.json", summary)
    return EXIT_OK


def cmd_scatter(pl, out):
    summary = {}
    for a in pl.cfg.alphas:
        rep = pl.representation(a)
        sc = scattering_profile(rep, pl.cfg.scatter_T)
        write_csv(out / f"scatter_alpha{a}.csv", "scatter", ["T", "residual"],
                  list(zip(sc["T"], sc["residuals"])))
        write_csv(out / f"w_inf_alpha{a}.csv", "w_inf", ["y", "re", "im", "re_hist", "im_hist"],
                  list(zip(rep.y, sc["w_inf"].real, sc["w_inf"].imag,
                           sc["w_inf_history"].real, sc["w_inf_history"].imag)))
        summary[str(a)] = {"residuals": sc["residuals"], "cross_rel": sc["cross_rel"],
                           "omega0_L2": norm_l2(rep.y, rep.omega0), "Tmax": sc["Tmax"]}
    write_json(out / "scatter.json", summary)
    return EXIT_OK


def cmd_validate(pl, out):
    """Quick invariant suite on the configured profile; nonzero exit if any check fails."""
    p = pl.p
    checks = {}
    y = np.linspace(0.0, 1.0, 10001)
    checks["monotone"] = bool(np.all(p.du(y) >= p.c0))
    ys = np.linspace(0.0, 1.0, 1000)
    checks["inverse_roundtrip"] = bool(np.max(np.abs(p.inverse(p.u(ys)) - ys)) <= 1e-12)
    for a in pl.cfg.alphas:
        fld, sd = pl.spectral(a)
        phi1 = fld.phi1
        checks[f"phi1_ge_1[{a}]"] = bool(np.nanmin(phi1) >= 1 - 1e-12)
        yy = fld.ygrid.nodes
        w = yy[:, None] - yy[None, :]
        rel = np.abs(phi1 - 1 - a**2 * w**2 * fld.tfac) / phi1
        checks[f"tfac_identity[{a}]"] = bool(np.nanmax(rel) <= 1e-10)
        dplus = np.diff(fld.plus["phi1"], axis=0)
        dminus = np.diff(fld.minus["phi1"], axis=0)
        checks[f"phi1_monotone[{a}]"] = bool(np.nanmin(dplus) >= -1e-12 and np.nanmax(dminus) <= 1e-12)
        checks[f"ii3_nonpositive[{a}]"] = bool(np.all(sd.ii3[1:-1] <= 0))
        checks[f"no_embedding[{a}]"] = not bool(np.any(sd.embedding_flags[1:-1]))
        if pl.cfg.winding:
            checks[f"winding_zero[{a}]"] = sd.winding == 0
        if inflection_points(p) == IDENTICALLY_ZERO:
            checks[f"B_zero[{a}]"] = bool(np.all(sd.B == 0))
        if checks[f"no_embedding[{a}]"] and checks.get(f"winding_zero[{a}]", True):
            rep = pl.representation(a)
            checks[f"mu_identity[{a}]"] = rep.mu.identity_error <= 1e-10
            ex = elliptic_solve(a, rep.omega0, order=4)
            err = norm_l2(rep.y, rep.psi_hat(0.0) - ex) / max(norm_l2(rep.y, ex), 1e-300)
            checks[f"t0_resolution[{a}]"] = err <= 1e-3
    write_json(out / "validate.json", checks)
    return EXIT_OK if all(checks.values()) else EXIT_FAIL


COMMANDS = {"spectrum": cmd_spectrum, "evolve": cmd_evolve, "compare": cmd_compare,
            "decay": cmd_decay, "scatter": cmd_scatter, "validate": cmd_validate}


def run(cfg, subcommand, out=None, threads=1):
    out = Path(out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    pl = Pipeline(cfg, threads)
    return COMMANDS[subcommand](pl, out)


def main(argv=None):
    ap = argparse.ArgumentParser(prog="inviscid_damping", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", required=True)
    ap.add_argument("--out")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
        return run(cfg, args.subcommand, args.out, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmbeddingEigenvalue as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_EMBEDDING
    except DiscreteSpectrumPresent as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_DISCRETE


if __name__ == "__main__":
    sys.exit(main())
