"""Command-line entry point.

    fraclab <command> --config <path> [--out <path>] [--workers K] [--seed S]

Exit codes: 0 success, 2 configuration or domain error, 3 torsion solver
failure, 4 a point below its threshold failed, 5 a verification check failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import constants as C
from . import discretization as D
from . import variational as V
from .config import ConfigError, RunConfig, parse_config
from .errors import ArgumentError, ConvergenceError, DomainError

EXIT_OK, EXIT_CONFIG, EXIT_TORSION, EXIT_BELOW, EXIT_VERIFY = 0, 2, 3, 4, 5


def fmt(v) -> str:
    """Locale-free text for a table cell; floats get 12 significant digits."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return float(format(v, ".12g")) if math.isfinite(v) else fmt(v)
    return v


def csv_text(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def json_text(columns: list[str], rows: list[dict]) -> str:
    data = [{c: _json_value(row.get(c)) for c in columns} for row in rows]
    return json.dumps(data, indent=2) + "\n"


def _emit(text_csv: str, text_json: str | None, out: str | None):
    if out is None:
        sys.stdout.write(text_csv)
        return
    path = Path(out)
    path.write_text(text_json if (path.suffix == ".json" and text_json is not None) else text_csv,
                    encoding="utf-8")


def _table(columns, rows, out):
    _emit(csv_text(columns, rows), json_text(columns, rows), out)


# ---------------------------------------------------------------------------
# constants


def compute_constants(cfg: RunConfig) -> tuple[C.ThresholdBundle, list[dict]]:
    """Full-precision bundle plus the table rows written by ``constants``."""
    p, d = cfg.params, cfg.domain
    q = cfg.q_exp if (cfg.q_exp is not None and cfg.q_exp < p.crit_exp) else None
    mu = cfg.mu
    if mu is None and cfg.mu_rel is not None and cfg.p_exp is not None:
        mu = cfg.mu_rel * C.mu_star_critical(p, d, cfg.p_exp, cfg.a_p)
    bundle = C.threshold_bundle(p, d, cfg.p_exp, q, cfg.a_p, cfg.a_q, mu)
    rows = [
        {"quantity": "N", "value": p.N},
        {"quantity": "s", "value": p.s},
        {"quantity": "crit_exp", "value": p.crit_exp},
        {"quantity": "measure", "value": d.measure},
    ]
    for k, v in bundle.as_dict().items():
        if v is not None:
            rows.append({"quantity": k, "value": v})
    return bundle, rows


def run_constants(cfg: RunConfig, out: str | None = None) -> int:
    _, rows = compute_constants(cfg)
    _table(["quantity", "value"], rows, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# torsion check


def torsion_rows(s: float, R: float, sizes, kernel_factor: float = 2.0) -> list[dict]:
    """Refinement table for the 1-D torsion problem against the exact profile."""
    l1_exact = C._torsion_lp(1, s, R, 1.0)
    rows = []
    prev = None
    for n in sizes:
        grid = D.build_grid(R, n)
        L = D.assemble_operator(grid, s, kernel_factor)
        u = D.solve_torsion(L)
        exact = D.torsion_profile(grid, s)
        mid = np.abs(grid.nodes) <= 0.5 * R
        sup_err = float(np.max(np.abs(u.values - exact.values)[mid]))
        l1 = D.lp_norm(u, 1.0)
        semi = D.gagliardo_seminorm_sq(u, s)
        row = {
            "n": n,
            "h": grid.h,
            "sup_error": sup_err,
            "sup_ratio": None if prev is None else prev / sup_err,
            "l1_norm": l1,
            "l1_rel_error": (l1 - l1_exact) / l1_exact,
            "seminorm_sq": semi,
            "seminorm_rel_error": (semi - l1_exact) / l1_exact,
            "min_value": float(u.values.min()),
        }
        rows.append(row)
        prev = sup_err
    return rows


TORSION_COLUMNS = ["n", "h", "sup_error", "sup_ratio", "l1_norm", "l1_rel_error",
                   "seminorm_sq", "seminorm_rel_error", "min_value"]


def run_torsion_check(cfg: RunConfig, out: str | None = None) -> int:
    if cfg.N != 1:
        print("torsion-check compares against the exact 1-D profile; needs N = 1", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.operator_only:
        print("N>2s violated; operator-only mode", file=sys.stderr)
    try:
        rows = torsion_rows(cfg.s, cfg.domain.R, cfg.refinement, cfg.kernel_factor)
    except np.linalg.LinAlgError as exc:
        print(f"torsion solver failed: {exc}", file=sys.stderr)
        return EXIT_TORSION
    flag = "N>2s violated; operator-only mode" if cfg.operator_only else ""
    for row in rows:
        row["flags"] = flag
    _table(TORSION_COLUMNS + ["flags"], rows, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# solve / sweep


def _point_thresholds(cfg: RunConfig) -> dict:
    p, d = cfg.params, cfg.domain
    if cfg.mode == "subcritical":
        return {"lambda_star": C.lambda_star_subcritical(p, d, cfg.a_p, cfg.p_exp, cfg.a_q, cfg.q_exp)}
    return {"mu_star": C.mu_star_critical(p, d, cfg.p_exp), "c_star": C.critical_level(p),
            "r_crit": C.radius_critical(p)}


def _resolve(cfg: RunConfig, value: float | None = None, relative: bool = False) -> tuple[float, float]:
    """(lambda, mu) for one run; mu is None-like (nan) in subcritical mode."""
    th = _point_thresholds(cfg)
    if cfg.mode == "subcritical":
        if value is None:
            value, relative = (cfg.lam_rel, True) if cfg.lam_rel is not None else (cfg.lam, False)
        lam = value * th["lambda_star"] if relative else value
        return lam, math.nan
    if value is None:
        value, relative = (cfg.mu_rel, True) if cfg.mu_rel is not None else (cfg.mu, False)
    mu = value * th["mu_star"] if relative else value
    return 1.0, mu


def _reaction(cfg: RunConfig, mu: float) -> C.PowerReaction:
    if cfg.mode == "subcritical":
        return cfg.reaction
    return C.PowerReaction(((mu, cfg.p_exp), (1.0, cfg.params.crit_exp)))


def _run_point(cfg: RunConfig, lam: float, mu: float):
    ps = V.make_problem(cfg.s, _reaction(cfg, mu), lam=lam, R=cfg.domain.R, n=cfg.grid_n)
    return ps, V.two_solution_experiment(ps, path_points=cfg.path_points, seed=cfg.seed)


def _below(cfg: RunConfig, lam: float, mu: float) -> bool:
    th = _point_thresholds(cfg)
    if cfg.mode == "subcritical":
        return lam < th["lambda_star"]
    lam_r = C.lambda_r_star(cfg.params, cfg.domain, cfg.p_exp, 1.0, mu, th["r_crit"])
    return mu < th["mu_star"] and lam_r > 1


def run_solve(cfg: RunConfig, out: str | None = None) -> int:
    lam, mu = _resolve(cfg)
    below = _below(cfg, lam, mu)
    header = [f"mode = {cfg.mode}", f"lambda = {fmt(lam)}"]
    if cfg.mode == "critical":
        header.append(f"mu = {fmt(mu)}")
    header += [f"{k} = {fmt(v)}" for k, v in _point_thresholds(cfg).items()]
    header.append(f"below_threshold = {fmt(below)}")
    try:
        ps, (first, second) = _run_point(cfg, lam, mu)
    except (ConvergenceError, ArgumentError) as exc:
        stage = getattr(exc, "stage", None) or "setup"
        text = "\n".join(header) + f"\nstatus = failed\nstage = {stage}\nerror = {exc}\n"
        _write_text(text, out)
        return EXIT_BELOW if below else EXIT_OK
    checks = V.experiment_checks(first, second)
    ok = all(checks.values())
    lines = header + [f"status = {'ok' if ok else 'failed'}"]
    lines += [f"check.{k} = {fmt(v)}" for k, v in checks.items()]
    lines.append(f"rel_l2_distance = {fmt(V.rel_l2_distance(first.field, second.field))}")
    text = "\n".join(lines) + "\n" + _kv(first, "u.") + _kv(second, "v.")
    _write_text(text, out)
    if out is not None:
        stem = Path(out).with_suffix("")
        Path(f"{stem}_u.csv").write_text(first.field.to_csv(), encoding="utf-8")
        Path(f"{stem}_v.csv").write_text(second.field.to_csv(), encoding="utf-8")
    return EXIT_OK if (ok or not below) else EXIT_BELOW


def _kv(rep: V.CriticalPointReport, prefix: str) -> str:
    lines = []
    for line in rep.to_kv(prefix).splitlines():
        k, _, v = line.partition(" = ")
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"


def _write_text(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


SWEEP_COLUMNS = [
    "param", "value", "lambda", "mu", "threshold", "below_threshold", "status", "stage",
    "energy_u", "energy_v", "grad_u", "grad_v", "min_u", "min_v", "rel_l2_distance",
    "translated_level", "c_star", "below_c_star", "min_gap", "flags",
]


def _sweep_point(args) -> dict:
    cfg, value = args
    rel = cfg.sweep_range.relative
    lam, mu = _resolve(cfg, value, rel)
    th = _point_thresholds(cfg)
    row = {
        "param": cfg.sweep_param + ("_rel" if rel else ""),
        "value": value,
        "lambda": lam,
        "mu": None if math.isnan(mu) else mu,
        "threshold": th["lambda_star"] if cfg.mode == "subcritical" else th["mu_star"],
        "below_threshold": _below(cfg, lam, mu),
    }
    try:
        _, (first, second) = _run_point(cfg, lam, mu)
    except (ConvergenceError, ArgumentError, DomainError) as exc:
        row.update(status="failed", stage=getattr(exc, "stage", None) or "setup")
        return row
    checks = V.experiment_checks(first, second)
    failed = [k for k, v in checks.items() if not v]
    row.update(
        status="ok" if not failed else "failed",
        stage=";".join(failed),
        energy_u=first.energy,
        energy_v=second.energy,
        grad_u=first.grad_norm,
        grad_v=second.grad_norm,
        min_u=first.min_value,
        min_v=second.min_value,
        rel_l2_distance=V.rel_l2_distance(first.field, second.field),
        translated_level=second.extras.get("translated_level"),
        c_star=second.extras.get("c_star"),
        below_c_star=second.extras.get("below_c_star"),
        min_gap=second.extras.get("min_gap"),
        flags=",".join(first.flags),
    )
    return row


def run_sweep(cfg: RunConfig, out: str | None = None, workers: int = 1) -> int:
    values = cfg.sweep_range.values()
    jobs = [(cfg, v) for v in values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    rows.sort(key=lambda r: r["value"])
    _table(SWEEP_COLUMNS, rows, out)
    if cfg.mode == "critical":
        e = [r["energy_u"] for r in rows if r["status"] == "ok" and r["below_threshold"]]
        mono = all(b <= a + 1e-8 for a, b in zip(e, e[1:]))
        print(f"minimiser energy nonincreasing in mu: {fmt(mono)}", file=sys.stderr)
    bad = [r for r in rows if r["below_threshold"] and r["status"] != "ok"]
    return EXIT_BELOW if bad else EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _discrete_s(cfg: RunConfig) -> float:
    # discrete checks live on N = 1; fall back to s = 1/4 when the configured
    # order does not give N > 2s there
    return cfg.s if (cfg.N == 1 and 2 * cfg.s < 1) else 0.25


def verify_checks(cfg: RunConfig, seed: int) -> list[dict]:
    """Run every invariant suite; one row per check with pass flag and worst value."""
    from . import checks as K

    s1 = _discrete_s(cfg)
    n = cfg.grid_n
    rng = np.random.default_rng(seed)
    suite = [
        ("gamma_recurrence", lambda: K.gamma_recurrence()),
        ("gamma_exact_values", lambda: K.gamma_exact_values()),
        ("torsion_identity", lambda: K.torsion_identity()),
        ("torsion_amp_reflection", lambda: K.torsion_amp_reflection()),
        ("lambda_star_homogeneity", lambda: K.lambda_star_homogeneity(rng)),
        ("threshold_equivalence", lambda: K.threshold_equivalence(rng)),
        ("critical_bundle", lambda: K.critical_bundle(rng)),
        ("operator_symmetric_pd", lambda: K.operator_symmetric_pd(s1, n, cfg.kernel_factor)),
        ("torsion_residual", lambda: K.torsion_residual(s1, n, cfg.kernel_factor)),
        ("discrete_embedding", lambda: K.discrete_embedding(s1, n, rng, cfg.kernel_factor)),
        ("gradient_fd", lambda: K.gradient_fd(s1, min(n, 128), rng)),
        ("translated_inequality", lambda: K.translated_inequality(s1, min(n, 128), rng)),
        ("sign_decomposition", lambda: K.sign_decomposition(s1, min(n, 128), rng)),
    ]
    rows = []
    for name, fn in suite:
        ok, worst = fn()
        rows.append({"check": name, "result": "pass" if ok else "fail", "worst": worst})
    return rows


def run_verify(cfg: RunConfig, out: str | None = None, seed: int = 0) -> int:
    rows = verify_checks(cfg, seed)
    _table(["check", "result", "worst"], rows, out)
    return EXIT_OK if all(r["result"] == "pass" for r in rows) else EXIT_VERIFY


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fraclab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=["constants", "torsion-check", "solve", "sweep", "verify"])
    ap.add_argument("--config", required=True, help="key = value configuration file")
    ap.add_argument("--out", default=None, help="output path (.json for a JSON mirror of tables)")
    ap.add_argument("--workers", type=int, default=1, help="parallel sweep points")
    ap.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(text, args.command)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers < 1:
        print("--workers must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    cfg.output_path = args.out
    try:
        if args.command == "constants":
            return run_constants(cfg, args.out)
        if args.command == "torsion-check":
            return run_torsion_check(cfg, args.out)
        if args.command == "solve":
            return run_solve(cfg, args.out)
        if args.command == "sweep":
            return run_sweep(cfg, args.out, args.workers)
        return run_verify(cfg, args.out, cfg.seed)
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
