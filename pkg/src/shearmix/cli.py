"""Experiment runner: deterministic CSV/JSON artifacts per subcommand.

Every artifact embeds the full resolved configuration, the seed, and a
sha256 of the canonical config JSON; a CSV's first two lines are comments
carrying the config and its hash, so any table can be traced back to the
exact invocation that produced it.  Identical configurations produce
byte-identical outputs: floats are serialized with repr (shortest
round-trip), JSON keys are sorted, and nothing records wall-clock state.

Exit codes: 0 for success including statistical non-findings (a hypothesis
witness not found is a reported outcome), 2 for configuration errors, 3
for numerical-integrity failures.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import ergodicity, lie, lyapunov, mixing, rng, steering
from .errors import ConfigError, NumericsError
from .flow import sample_schedule, step_positions
from .profiles import (CircleIdentity, ShearModel, TrigPoly, check_h1,
                       chirikov, distortion_constant, pierrehumbert)

SUBCOMMANDS = ("simulate", "lyapunov", "hypotheses", "drift", "correlations",
               "steer", "mix")
DEFAULT_SEED = 1729

_HALF_PI = math.pi / 2.0


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration; field names double as config-file keys."""
    subcommand: str
    model: str
    f1: str | None
    f1_cos: tuple | None
    f1_sin: tuple | None
    f2: str | None
    f2_cos: tuple | None
    f2_sin: tuple | None
    T: float
    seed: int
    m: int
    samples: int
    grid: int
    beta: float
    h: float
    radii: tuple | None
    observable: str
    u0: str
    center_q: float
    center_p: float
    radius: float
    start_q: float
    start_p: float
    target_q: float
    target_p: float
    t_cap: float
    out: str

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @staticmethod
    def from_dict(d: dict) -> "RunConfig":
        kw = dict(d)
        for k, v in kw.items():
            if isinstance(v, list):
                kw[k] = tuple(v)
        return RunConfig(**kw)


def _floats(text, field):
    try:
        return tuple(float(tok) for tok in str(text).split(",") if tok.strip())
    except ValueError:
        raise ConfigError("%s: expected comma-separated reals, got %r"
                          % (field, text))


def _coerce(key, value, field):
    if isinstance(value, str):
        value = value.strip()
    kind = _KEY_KINDS[key]
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        if kind == "floats":
            return _floats(value, field)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError("%s: expected %s, got %r" % (field, kind, value))


_KEY_KINDS = {
    "model": "str", "f1": "str", "f2": "str",
    "f1_cos": "floats", "f1_sin": "floats",
    "f2_cos": "floats", "f2_sin": "floats",
    "T": "float", "seed": "int", "m": "int", "samples": "int",
    "grid": "int", "beta": "float", "h": "float", "radii": "floats",
    "observable": "str", "u0": "str",
    "center_q": "float", "center_p": "float", "radius": "float",
    "start_q": "float", "start_p": "float",
    "target_q": "float", "target_p": "float",
    "t_cap": "float", "out": "str",
}

_M_DEFAULTS = {"simulate": 100, "lyapunov": 2000, "hypotheses": 1,
               "drift": 1, "correlations": 30, "steer": 1, "mix": 12}
_SAMPLE_DEFAULTS = {"simulate": 8, "lyapunov": 400, "hypotheses": 10000,
                    "drift": 4000, "correlations": 20000, "steer": 1,
                    "mix": 1}


def load_config_file(path: str) -> dict:
    """key = value lines; blank lines and # comments ignored."""
    raw = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for ln, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError("%s:%d: expected key = value" % (path, ln))
                key, _, value = line.partition("=")
                key = key.strip()
                if key not in _KEY_KINDS:
                    raise ConfigError("%s:%d: unknown key %r" % (path, ln, key))
                raw[key] = _coerce(key, value.strip(), "%s:%d %s" % (path, ln, key))
    except OSError as exc:
        raise ConfigError("cannot read config file %s: %s" % (path, exc))
    return raw


def build_config(subcommand: str, args: argparse.Namespace) -> RunConfig:
    merged = {
        "model": "pierrehumbert", "f1": None, "f1_cos": None, "f1_sin": None,
        "f2": None, "f2_cos": None, "f2_sin": None,
        "T": 10.0, "seed": DEFAULT_SEED,
        "m": _M_DEFAULTS[subcommand], "samples": _SAMPLE_DEFAULTS[subcommand],
        "grid": 256, "beta": 0.2, "h": 0.25, "radii": None,
        "observable": "two_sin_q", "u0": "two_sin_q",
        "center_q": _HALF_PI, "center_p": _HALF_PI, "radius": 0.5,
        "start_q": 1.0, "start_p": _HALF_PI,
        "target_q": 2.0, "target_p": _HALF_PI,
        "t_cap": None, "out": os.path.join("runs", subcommand),
    }
    if args.config is not None:
        merged.update(load_config_file(args.config))
    for key in ("model", "T", "seed", "m", "samples", "grid", "beta", "h",
                "out"):
        val = getattr(args, key)
        if val is not None:
            merged[key] = val
    if args.radii is not None:
        merged["radii"] = _floats(args.radii, "--radii")
    if merged["t_cap"] is None:
        merged["t_cap"] = merged["T"]
    if merged["T"] <= 0.0:
        raise ConfigError("T: horizon must be positive")
    if merged["seed"] < 0:
        raise ConfigError("seed: must be non-negative")
    return RunConfig(subcommand=subcommand, **merged)


def _profile_from_config(cfg: RunConfig, which: str):
    marker = getattr(cfg, which)
    if marker is not None:
        if marker != "identity":
            raise ConfigError("%s: only the keyword identity is accepted "
                              "(use %s_cos/%s_sin for coefficients)"
                              % (which, which, which))
        return CircleIdentity()
    cos = getattr(cfg, which + "_cos")
    sin = getattr(cfg, which + "_sin")
    if cos is None or sin is None:
        raise ConfigError("%s_cos/%s_sin: custom model needs both coefficient "
                          "lists (or %s = identity)" % (which, which, which))
    try:
        return TrigPoly(cos_coeffs=cos, sin_coeffs=sin)
    except ValueError as exc:
        raise ConfigError("%s_cos/%s_sin: %s" % (which, which, exc))


def build_model(cfg: RunConfig) -> ShearModel:
    if cfg.model == "pierrehumbert":
        return pierrehumbert()
    if cfg.model == "chirikov":
        return chirikov()
    if cfg.model == "custom":
        return ShearModel(name="custom",
                          f1=_profile_from_config(cfg, "f1"),
                          f2=_profile_from_config(cfg, "f2"))
    raise ConfigError("model: expected pierrehumbert, chirikov or custom, "
                      "got %r" % cfg.model)


def config_json(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(config_json(cfg).encode("utf-8")).hexdigest()


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(cfg: RunConfig, name: str, header, rows) -> str:
    path = os.path.join(cfg.out, name + ".csv")
    lines = ["# config %s" % config_json(cfg),
             "# config_sha256 %s" % config_hash(cfg),
             ",".join(header)]
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_json(cfg: RunConfig, name: str, results: dict) -> str:
    path = os.path.join(cfg.out, name + ".json")
    doc = {"config": cfg.to_dict(), "config_sha256": config_hash(cfg),
           "results": results}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def _require_steps(cfg: RunConfig):
    if cfg.m < 1:
        raise ConfigError("m: at least one step is required")


def cmd_simulate(cfg: RunConfig, model: ShearModel) -> dict:
    _require_steps(cfg)
    if cfg.samples < 1:
        raise ConfigError("samples: at least one trajectory is required")
    n = cfg.samples
    q, p = lyapunov.sample_initial_states(model, n, cfg.seed,
                                          with_direction=False)
    j = np.arange(n, dtype=np.uint64)
    rows = [(s, 0, float(q[s]), float(p[s])) for s in range(n)]
    for k in range(cfg.m):
        t1 = rng.durations(cfg.seed, j, 2 * k, cfg.T)
        t2 = rng.durations(cfg.seed, j, 2 * k + 1, cfg.T)
        q, p = step_positions(q, p, t1, t2, model)
        rows.extend((s, k + 1, float(q[s]), float(p[s])) for s in range(n))
    write_csv(cfg, "simulate", ("sample", "step", "q", "p"), rows)
    return {"n_samples": n, "m": cfg.m}


def cmd_lyapunov(cfg: RunConfig, model: ShearModel) -> dict:
    _require_steps(cfg)
    if cfg.samples < 2:
        raise ConfigError("samples: need at least 2 for a spread estimate")
    est = lyapunov.estimate_lambda1(model, cfg.T, cfg.m, cfg.samples, cfg.seed)
    lsum = lyapunov.estimate_lambda_sum(model, cfg.T, cfg.m, cfg.samples,
                                        cfg.seed)
    rows = [(cfg.T, mk, cfg.samples, lam, se,
             lam - 1.96 * se, lam + 1.96 * se, cfg.seed)
            for mk, lam, se in est.trace]
    write_csv(cfg, "lyapunov",
              ("T", "m", "n_samples", "lambda1", "stderr", "ci_lo", "ci_hi",
               "seed"), rows)
    results = {"lambda1": est.lambda1, "stderr": est.stderr,
               "ci_lo": est.ci_lo, "ci_hi": est.ci_hi,
               "lambda1_per_time": est.lambda1_per_time,
               "lambda_sum_mean": lsum.lambda_sum_mean,
               "lambda_sum_max_abs": lsum.lambda_sum_max_abs}
    write_json(cfg, "lyapunov", results)
    return results


def _hyp_block(result) -> dict:
    out = {"passed": bool(result.passed), "n_tried": result.n_tried}
    if result.passed:
        cert = result.certificate
        out["witness"] = list(result.witness)
        out["rank"] = cert.rank
        out["det"] = cert.det
        out["words"] = [lie.word_label(w) for w in cert.words]
    else:
        out["note"] = result.note
    return out


def _golden_determinants() -> dict:
    pm, cm = pierrehumbert(), chirikov()
    lifted_pt = (math.pi / 3, math.pi / 3, math.sqrt(2) / 2, math.sqrt(2) / 2)
    lifted_words = (1, 2, (1, 2), (1, (1, 2)))
    return {
        "pierrehumbert_lifted": lie.rank_certificate(
            "lifted", lifted_pt, lifted_words, pm).det,
        "pierrehumbert_two_point": lie.rank_certificate(
            "two_point", (math.pi / 3, _HALF_PI, _HALF_PI, math.pi / 3),
            (1, 2, (1, 2), ((1, 2), 1)), pm).det,
        "chirikov_lifted": lie.rank_certificate(
            "lifted", lifted_pt, lifted_words, cm).det,
        "chirikov_two_point": lie.rank_certificate(
            "two_point", (math.pi, _HALF_PI, _HALF_PI, math.pi / 3),
            (1, 2, (1, 2), (1, (1, 2))), cm).det,
    }


def cmd_hypotheses(cfg: RunConfig, model: ShearModel) -> dict:
    if cfg.samples < 1:
        raise ConfigError("samples: need a positive witness-search budget")
    h1_f1 = check_h1(model.f1)
    h1_f2 = check_h1(model.f2)
    h2 = lie.check_hypothesis("lifted", model, n_points=cfg.samples,
                              seed=cfg.seed)
    h3 = lie.check_hypothesis("two_point", model, n_points=cfg.samples,
                              seed=cfg.seed)
    results = {
        "h1": {"f1": {"min_gap": h1_f1.min_gap, "passed": h1_f1.passed},
               "f2": {"min_gap": h1_f2.min_gap, "passed": h1_f2.passed},
               "passed": h1_f1.passed and h1_f2.passed},
        "h2": _hyp_block(h2),
        "h3": _hyp_block(h3),
        "golden_determinants": _golden_determinants(),
    }
    write_json(cfg, "hypotheses", results)
    return results


def cmd_drift(cfg: RunConfig, model: ShearModel) -> dict:
    if cfg.samples < 2:
        raise ConfigError("samples: need at least 2 draws per grid node")
    K = max(distortion_constant(model.f1), distortion_constant(model.f2))
    spec = ergodicity.DriftSpec(beta=cfg.beta, K=K, horizon=cfg.T)
    grid = ergodicity.polar_grid(model, spec)
    scan = ergodicity.drift_scan(model, spec, cfg.samples, cfg.seed)
    rows = []
    for (center, r, ang, x), rec in zip(grid, scan.records):
        if rec.x != x:
            raise NumericsError("drift scan geometry desynchronized")
        rows.append((center[0], center[1], r, ang, x[0], x[1], rec.v_start,
                     rec.ratio, rec.stderr, rec.n, rec.n_clipped))
    write_csv(cfg, "drift",
              ("center_q", "center_p", "radius", "angle", "q", "p", "v_start",
               "ratio", "stderr", "n", "n_clipped"), rows)
    t_star = ergodicity.find_min_T(K, cfg.beta) if cfg.beta < 0.25 else None
    d = 0.1 / math.sqrt(2.0)
    x0 = (0.03, 0.03)
    two = ergodicity.empirical_two_point_drift(
        x0, (x0[0] - d, x0[1] + d), model, spec,
        ergodicity.TwoPointDriftSpec(h=cfg.h), cfg.samples, cfg.seed)
    results = {"beta": cfg.beta, "K": K, "T_star": t_star,
               "empirical_alpha": scan.empirical_alpha,
               "lambda_hat": None, "r2": None,
               "all_contracting_95": scan.all_contracting_95,
               "worst_point": list(scan.worst_point),
               "two_point": {"h": cfg.h, "ratio": two.ratio,
                             "stderr": two.stderr,
                             "v2_start": two.v2_start}}
    write_json(cfg, "drift", results)
    return results


def cmd_correlations(cfg: RunConfig, model: ShearModel) -> dict:
    _require_steps(cfg)
    if cfg.samples < 2:
        raise ConfigError("samples: need at least 2 pairs")
    series = ergodicity.correlation_series(
        model, cfg.observable, (cfg.center_q, cfg.center_p), cfg.radius,
        n_pairs=cfg.samples, m_max=cfg.m, seed=cfg.seed, horizon=cfg.T)
    rows = list(zip(series.m, series.c_m, series.stderr))
    write_csv(cfg, "correlations", ("m", "c_m", "stderr"), rows)
    results = {"beta": None, "K": None, "T_star": None,
               "empirical_alpha": None,
               "lambda_hat": series.lambda_hat, "r2": series.r2,
               "window_len": series.window_len}
    write_json(cfg, "correlations", results)
    return results


def cmd_steer(cfg: RunConfig, model: ShearModel) -> dict:
    plan = steering.steer_to((cfg.start_q, cfg.start_p),
                             (cfg.target_q, cfg.target_p), model,
                             T_cap=cfg.t_cap)
    durations = [float(t) for t in plan.legs.durations]
    results = {"durations": durations, "residual": plan.residual,
               "method": plan.method}
    write_json(cfg, "steer", results)
    print("plan durations: %s" % " ".join(repr(t) for t in durations))
    print("verified residual: %r" % plan.residual)
    return results


def cmd_mix(cfg: RunConfig, model: ShearModel) -> dict:
    _require_steps(cfg)
    schedule = sample_schedule(cfg.seed, cfg.m, cfg.T)
    report = mixing.mix_run(model, cfg.u0, schedule, cfg.m, cfg.grid,
                            radii=cfg.radii)
    rows = list(zip(report.m, report.mix_scale, report.grad_norm_cum,
                    report.eta_running))
    write_csv(cfg, "mix",
              ("m", "mix_scale", "grad_norm_l1_cum", "eta_hat_running"), rows)
    results = {"slope": report.slope, "r2": report.r2,
               "eta_hat": report.eta_hat, "xi_hat": report.xi_hat,
               "no_mixing": report.no_mixing}
    write_json(cfg, "mix", results)
    if report.no_mixing:
        print("no mixing observed: schedule has zero total duration")
    return results


_COMMANDS = {"simulate": cmd_simulate, "lyapunov": cmd_lyapunov,
             "hypotheses": cmd_hypotheses, "drift": cmd_drift,
             "correlations": cmd_correlations, "steer": cmd_steer,
             "mix": cmd_mix}


def run(cfg: RunConfig) -> dict:
    model = build_model(cfg)
    os.makedirs(cfg.out, exist_ok=True)
    return _COMMANDS[cfg.subcommand](cfg, model)


def _parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("config", nargs="?", default=None,
                        help="key = value config file; flags override it")
    shared.add_argument("--model", choices=("pierrehumbert", "chirikov",
                                            "custom"))
    shared.add_argument("--T", type=float, help="duration horizon")
    shared.add_argument("--seed", type=int)
    shared.add_argument("--m", type=int, help="steps (or m_max)")
    shared.add_argument("--samples", type=int,
                        help="trajectories / draws / pairs / search budget")
    shared.add_argument("--grid", type=int, help="advection grid size")
    shared.add_argument("--beta", type=float, help="drift exponent")
    shared.add_argument("--h", type=float, help="two-point drift exponent")
    shared.add_argument("--radii", help="comma-separated ball radii")
    shared.add_argument("--out", help="output directory")
    top = argparse.ArgumentParser(
        prog="shearmix",
        description="random alternating shear flows: simulation and "
                    "certification artifacts")
    sub = top.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[shared])
    return top


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = build_config(args.subcommand, args)
        run(cfg)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except NumericsError as exc:
        print("numerics error: %s" % exc, file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
