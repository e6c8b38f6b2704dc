"""Key-value run configuration: ``key = value`` per line, ``#`` starts a comment.

Every problem found while parsing is collected, and a single ConfigError
lists all of them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .constants import DomainSpec, FracParams, PowerReaction
from .errors import ArgumentError, DomainError

COMMANDS = ("constants", "torsion-check", "solve", "sweep", "verify")
GRID_MIN, GRID_MAX = 16, 1024

_FLOAT_KEYS = {"s", "R", "measure", "inradius", "p", "q", "a_p", "a_q", "mu", "lambda",
               "lambda_rel", "mu_rel", "kernel_factor"}
_INT_KEYS = {"N", "grid_n", "seed", "path_points"}
_RANGE_KEYS = {"lambda_range", "lambda_range_rel", "mu_range", "mu_range_rel"}
_TEXT_KEYS = {"domain", "mode", "refinement"}
KNOWN_KEYS = _FLOAT_KEYS | _INT_KEYS | _RANGE_KEYS | _TEXT_KEYS


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {m}" for m in self.problems))


@dataclass(frozen=True)
class SweepRange:
    lo: float
    hi: float
    steps: int
    relative: bool

    def values(self) -> list[float]:
        if self.steps == 1:
            return [self.lo]
        return [self.lo + (self.hi - self.lo) * k / (self.steps - 1) for k in range(self.steps)]


@dataclass
class RunConfig:
    command: str
    params: FracParams | None
    domain: DomainSpec | None
    reaction: PowerReaction | None = None
    mode: str | None = None
    p_exp: float | None = None
    q_exp: float | None = None
    a_p: float = 1.0
    a_q: float = 1.0
    mu: float | None = None
    mu_rel: float | None = None
    lam: float | None = None
    lam_rel: float | None = None
    sweep_param: str | None = None
    sweep_range: SweepRange | None = None
    grid_n: int = 256
    seed: int = 0
    path_points: int = 33
    kernel_factor: float = 2.0
    refinement: tuple = ()
    operator_only: bool = False
    output_path: str | None = None
    raw: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.raw["N"]

    @property
    def s(self) -> float:
        return self.raw["s"]


def _read_pairs(text: str, problems: list) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value'")
            continue
        key, value = (x.strip() for x in line.split("=", 1))
        if key not in KNOWN_KEYS:
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in out:
            problems.append(f"line {lineno}: duplicate key {key!r}")
            continue
        out[key] = value
    return out


def _convert(raw: dict, problems: list) -> dict:
    vals = {}
    for key, text in raw.items():
        try:
            if key in _FLOAT_KEYS:
                v = float(text)
                if not math.isfinite(v):
                    raise ValueError
            elif key in _INT_KEYS:
                v = int(text)
            elif key in _RANGE_KEYS:
                parts = [x.strip() for x in text.split(",")]
                if len(parts) != 3:
                    raise ValueError
                lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
                if not (math.isfinite(lo) and math.isfinite(hi)):
                    raise ValueError
                v = (lo, hi, steps)
            elif key == "refinement":
                v = tuple(int(x) for x in text.split(","))
            else:
                v = text
        except ValueError:
            problems.append(f"{key}: cannot parse {text!r}")
            continue
        vals[key] = v
    return vals


def _domain(vals: dict, N: int | None, problems: list) -> DomainSpec | None:
    kind = vals.get("domain", "interval" if N in (None, 1) else "ball")
    R = vals.get("R", 1.0)
    try:
        if kind == "interval":
            if N not in (None, 1):
                problems.append("domain = interval requires N = 1")
                return None
            d = DomainSpec.interval(R)
        elif kind == "ball":
            if N is None:
                return None
            d = DomainSpec.ball(N, R)
        elif kind == "general":
            if "measure" not in vals:
                problems.append("domain = general requires measure")
                return None
            inr = vals.get("inradius", R)
            return DomainSpec("general", max(R, inr), vals["measure"], inr)
        else:
            problems.append(f"domain: unknown kind {kind!r} (interval, ball, general)")
            return None
    except DomainError as exc:
        problems.append(f"domain: {exc}")
        return None
    for key, want in (("measure", d.measure), ("inradius", d.inradius)):
        if key in vals and abs(vals[key] - want) > 1e-12 * want:
            problems.append(f"{key} = {vals[key]} is inconsistent with {kind} of R = {R} ({want:.12g})")
    return d


def parse_config(text: str, command: str) -> RunConfig:
    """Validate ``text`` for ``command``; raise ConfigError listing every problem."""
    problems: list[str] = []
    if command not in COMMANDS:
        raise ConfigError([f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}"])
    raw = _read_pairs(text, problems)
    vals = _convert(raw, problems)

    for key in ("N", "s"):
        if key not in vals and key not in raw:
            problems.append(f"missing required key {key!r}")
    N, s = vals.get("N"), vals.get("s")
    if N is not None and N < 1:
        problems.append(f"N must be a positive integer, got {N}")
        N = None
    if s is not None and not 0 < s < 1:
        problems.append(f"s must lie in (0, 1), got {s}")
        s = None

    params = None
    operator_only = False
    if N is not None and s is not None:
        if N > 2 * s:
            params = FracParams(N, s)
        elif command == "torsion-check":
            operator_only = True
        else:
            problems.append(f"N > 2s violated (N={N}, s={s})")

    domain = _domain(vals, N, problems)

    grid_n = vals.get("grid_n", 256)
    if not GRID_MIN <= grid_n <= GRID_MAX:
        problems.append(f"grid_n must lie in [{GRID_MIN}, {GRID_MAX}], got {grid_n}")
    path_points = vals.get("path_points", 33)
    if path_points < 16:
        problems.append(f"path_points must be at least 16, got {path_points}")
    kernel_factor = vals.get("kernel_factor", 2.0)
    if not kernel_factor > 0:
        problems.append(f"kernel_factor must be positive, got {kernel_factor}")
    default_ref = tuple(m for m in (grid_n // 8, grid_n // 4, grid_n // 2, grid_n) if m >= GRID_MIN)
    refinement = vals.get("refinement", default_ref)
    if any(not GRID_MIN <= n <= GRID_MAX for n in refinement) or list(refinement) != sorted(set(refinement)):
        problems.append(f"refinement must be increasing sizes in [{GRID_MIN}, {GRID_MAX}]")

    for key in ("a_p", "a_q", "mu", "lambda", "lambda_rel", "mu_rel", "p", "q"):
        if key in vals and not vals[key] > 0:
            problems.append(f"{key} must be positive, got {vals[key]}")

    # reaction and mode
    crit = None if params is None else params.crit_exp
    p_exp, q_exp = vals.get("p"), vals.get("q")
    mode = vals.get("mode")
    if mode not in (None, "subcritical", "critical"):
        problems.append(f"mode must be subcritical or critical, got {mode!r}")
        mode = None
    if crit is not None and q_exp is not None and q_exp > crit * (1 + 1e-12):
        problems.append(
            f"q = {q_exp} exceeds the critical exponent 2*_s = {crit:.12g} (growth bound)"
        )
    if crit is not None and p_exp is not None and not 1 <= p_exp < crit:
        problems.append(f"p must lie in [1, 2*_s) = [1, {crit:.12g}), got {p_exp}")
    if mode is None and p_exp is not None:
        if q_exp is None or (crit is not None and abs(q_exp - crit) <= 1e-12 * crit):
            mode = "critical"
        else:
            mode = "subcritical"
    if mode == "critical" and crit is not None:
        if q_exp is not None and abs(q_exp - crit) > 1e-12 * crit:
            problems.append(f"mode = critical needs q = 2*_s = {crit:.12g} or q omitted")
        q_exp = crit

    sweep_keys = [k for k in _RANGE_KEYS if k in vals]
    sweep_param = sweep_range = None
    if len(sweep_keys) > 1:
        problems.append(f"at most one range key allowed, got {', '.join(sorted(sweep_keys))}")
    elif sweep_keys:
        key = sweep_keys[0]
        lo, hi, steps = vals[key]
        if steps < 1 or not 0 < lo <= hi:
            problems.append(f"{key}: need 0 < lo <= hi and steps >= 1")
        sweep_param = "lambda" if key.startswith("lambda") else "mu"
        sweep_range = SweepRange(lo, hi, steps, key.endswith("_rel"))

    if command in ("solve", "sweep"):
        if N not in (None, 1):
            problems.append("solve/sweep run on N = 1 intervals only")
        if domain is not None and domain.kind != "interval":
            problems.append("solve/sweep need domain = interval")
        if p_exp is None:
            problems.append("solve/sweep need the exponent p")
        if mode == "subcritical" and q_exp is None:
            problems.append("subcritical runs need q")
        if mode == "subcritical" and p_exp is not None and q_exp is not None and not p_exp < 2 < q_exp:
            problems.append(f"subcritical runs need p < 2 < q, got p={p_exp}, q={q_exp}")
        if mode == "critical" and p_exp is not None and not p_exp < 2:
            problems.append(f"critical runs need p < 2, got p={p_exp}")
        if mode == "critical" and "lambda" in vals and vals["lambda"] != 1.0:
            problems.append("critical runs fix lambda = 1")
        if mode == "critical" and sweep_param == "lambda":
            problems.append("critical runs sweep mu, not lambda")
        if mode == "subcritical" and sweep_param == "mu":
            problems.append("subcritical runs sweep lambda, not mu")
    if command == "solve":
        if mode == "subcritical" and ("lambda" in vals) == ("lambda_rel" in vals):
            problems.append("solve (subcritical) needs exactly one of lambda, lambda_rel")
        if mode == "critical" and ("mu" in vals) == ("mu_rel" in vals):
            problems.append("solve (critical) needs exactly one of mu, mu_rel")
    if command == "sweep" and sweep_range is None:
        problems.append(
            "sweep needs a range: lambda_range, lambda_range_rel, mu_range or mu_range_rel"
        )

    if problems:
        raise ConfigError(problems)

    reaction = None
    if p_exp is not None and q_exp is not None:
        if mode == "critical":
            # the coefficient of the p-term is mu; filled in per run
            reaction = None
        else:
            try:
                reaction = PowerReaction(((vals.get("a_p", 1.0), p_exp), (vals.get("a_q", 1.0), q_exp)))
                if params is not None:
                    reaction.check_growth(params)
            except (DomainError, ArgumentError) as exc:
                raise ConfigError([str(exc)]) from None

    return RunConfig(
        command=command,
        params=params,
        domain=domain,
        reaction=reaction,
        mode=mode,
        p_exp=p_exp,
        q_exp=q_exp,
        a_p=vals.get("a_p", 1.0),
        a_q=vals.get("a_q", 1.0),
        mu=vals.get("mu"),
        mu_rel=vals.get("mu_rel"),
        lam=vals.get("lambda"),
        lam_rel=vals.get("lambda_rel"),
        sweep_param=sweep_param,
        sweep_range=sweep_range,
        grid_n=grid_n,
        seed=vals.get("seed", 0),
        path_points=path_points,
        kernel_factor=kernel_factor,
        refinement=tuple(refinement),
        operator_only=operator_only,
        raw=vals,
    )
