"""Command-line experiment runner.

Exit codes: 0 all bounds hold, 1 configuration error, 2 a bound is violated,
3 the threshold construction found no admissible chain (report still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from qiter.adversary import construct_adversary_t1, construct_adversary_t2
from qiter.algorithms import FAMILIES, build_program, random_program
from qiter.metrics import check_lemma1, check_lemma2
from qiter.oracle import LengthPreservingFn, random_full_cycle, random_function
from qiter.state import RegisterLayout, random_state

EXIT_OK, EXIT_CONFIG, EXIT_VIOLATION, EXIT_INFEASIBLE = 0, 1, 2, 3
CSV_COLUMNS = ("instance_id", "n", "T", "t", "lhs", "rhs", "slack", "holds", "seed")
MAX_ORBIT_WIDTH = 6
COMMANDS = ("lemma1", "lemma2", "adversary", "demo")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    n: int | None = None
    T: int | None = None
    t: int | None = None
    theta: float | None = None
    alpha: float | None = None
    trials: int = 100
    seed: int | None = None
    program: str = "undersample"
    format: str = "csv"
    out: str | None = None
    replay: int | None = None

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.n is None or self.n < 1:
            raise ConfigError(f"--n must be >= 1, got {self.n}")
        if self.trials < 1:
            raise ConfigError(f"--trials must be >= 1, got {self.trials}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"--format must be csv or json, got {self.format!r}")
        if self.seed is None:
            raise ConfigError("--seed is required")
        if self.theta is not None and self.alpha is not None:
            raise ConfigError("give at most one of --theta and --alpha")
        if self.command == "lemma2" and self.t is not None and self.t < 1:
            raise ConfigError(f"--t must be >= 1, got {self.t}")
        if self.command in ("adversary", "demo"):
            if self.n > MAX_ORBIT_WIDTH:
                raise ConfigError(f"full-orbit experiments need n <= {MAX_ORBIT_WIDTH}")
            if self.T is None or not 1 <= self.T <= 1 << self.n:
                raise ConfigError(f"--T must lie in [1, 2^n], got {self.T}")
            if self.program not in FAMILIES:
                raise ConfigError(f"--program must be one of {FAMILIES}")
            if self.program == "undersample" or self.command == "demo":
                if self.t is None or not 1 <= self.t < self.T:
                    raise ConfigError(f"--t must satisfy 1 <= t < T, got {self.t}")
            if self.program == "grover" and self.n < 2:
                raise ConfigError("grover needs n >= 2")
        theta = self.threshold
        if theta is not None and not 0 < theta <= 1:
            raise ConfigError(f"threshold must lie in (0, 1], got {theta}")

    @property
    def threshold(self) -> float | None:
        if self.theta is not None:
            return self.theta
        if self.alpha is not None:
            if self.T is None:
                raise ConfigError("--alpha needs --T")
            return float(self.T) ** (-self.alpha)
        return None


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def _csv_cell(value) -> str:
    value = _clean(value)
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def _csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _csv_cell(row.get(k)) for k in CSV_COLUMNS})
    return buf.getvalue()


def _json_text(payload) -> str:
    return json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n"


def _config_echo(cfg: ExperimentConfig) -> dict:
    # the output path is not part of the experiment, keep reports path-independent
    return {k: v for k, v in asdict(cfg).items() if k != "out"}


def _emit(cfg: ExperimentConfig, rows: list[dict], payload) -> None:
    text = _csv_text(rows) if cfg.format == "csv" else _json_text(payload)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _instance_rng(seed: int, instance: int) -> np.random.Generator:
    return np.random.default_rng([seed, instance])


def _mutate_words(f: LengthPreservingFn, count: int, rng: np.random.Generator) -> LengthPreservingFn:
    table = list(f.table)
    for a in rng.choice(f.size, size=count, replace=False).tolist():
        table[a] ^= int(rng.integers(1, f.size))
    return LengthPreservingFn(f.n, tuple(table))


def lemma1_instance(n: int, seed: int, instance: int) -> dict:
    rng = _instance_rng(seed, instance)
    layout = RegisterLayout(int(rng.integers(0, 3)), n)
    kind = int(rng.integers(0, 3))
    if kind == 0:
        support = 1
    elif kind == 1:
        support = int(rng.integers(2, 9))
    else:
        support = None if layout.total <= 10 else 256
    state = random_state(layout, rng, support)
    f = random_full_cycle(n, int(rng.integers(2**31))) if rng.integers(0, 2) else random_function(n, rng)
    g = _mutate_words(f, int(rng.integers(1, f.size + 1)), rng)
    report = check_lemma1(state, f, g)
    return {"instance_id": instance, "n": n, "T": None, "t": 1, "seed": seed, **report.to_dict()}


def lemma2_instance(n: int, max_t: int, seed: int, instance: int) -> dict:
    rng = _instance_rng(seed, instance)
    layout = RegisterLayout(int(rng.integers(0, 3)), n)
    t = int(rng.integers(1, max_t + 1))
    program = random_program(layout, t, rng)
    f = random_function(n, rng)
    a = int(rng.integers(0, f.size))
    to = f.table[a] if rng.random() < 0.25 else int(rng.integers(0, f.size))
    report = check_lemma2(program, f, a, to, int(rng.integers(0, f.size)))
    return {"instance_id": instance, "n": n, "T": None, "t": t, "seed": seed, **report.to_dict()}


def _run_trials(cfg: ExperimentConfig, make) -> int:
    ids = [cfg.replay] if cfg.replay is not None else range(cfg.trials)
    rows = [make(i) for i in ids]
    _emit(cfg, rows, {"command": cfg.command, "config": _config_echo(cfg), "instances": rows})
    bad = [r["instance_id"] for r in rows if not r["holds"]]
    if bad:
        print(f"bound violated at instances {bad}; replay with --seed {cfg.seed} "
              f"--replay {bad[0]}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_lemma1(cfg: ExperimentConfig) -> int:
    return _run_trials(cfg, lambda i: lemma1_instance(cfg.n, cfg.seed, i))


def cmd_lemma2(cfg: ExperimentConfig) -> int:
    max_t = cfg.t if cfg.t is not None else 4
    return _run_trials(cfg, lambda i: lemma2_instance(cfg.n, max_t, cfg.seed, i))


def _adversary(cfg: ExperimentConfig, family: str):
    spec = build_program(family, cfg.n, cfg.T, cfg.t)
    f = random_full_cycle(cfg.n, cfg.seed)
    theta = cfg.threshold
    if theta is None:
        report = construct_adversary_t2(spec.program, f, cfg.T, seed=cfg.seed)
    else:
        report = construct_adversary_t1(spec.program, f, cfg.T, theta, seed=cfg.seed)
    return spec, report


def _summary_row(spec, report, instance: int, cfg: ExperimentConfig) -> dict:
    return {
        "instance_id": instance, "n": cfg.n, "T": report.T, "t": report.t,
        "lhs": report.lhs, "rhs": report.rhs, "slack": report.rhs - report.lhs,
        "holds": report.holds, "seed": cfg.seed,
        "program": spec.family, "params": spec.params,
    }


def cmd_adversary(cfg: ExperimentConfig) -> int:
    spec, report = _adversary(cfg, cfg.program)
    payload = {"command": "adversary", "config": _config_echo(cfg), "program": spec.family,
               "params": spec.params, "report": report.to_dict()}
    _emit(cfg, [_summary_row(spec, report, 0, cfg)], payload)
    if not report.feasible:
        print(f"threshold construction infeasible at {report.failing_step}", file=sys.stderr)
        return EXIT_INFEASIBLE
    if not report.holds:
        failed = [k for k, ok in report.checks.items() if not ok]
        print(f"adversary checks failed: {failed}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_demo(cfg: ExperimentConfig) -> int:
    rows = []
    for i, family in enumerate(FAMILIES):
        spec, report = _adversary(cfg, family)
        row = _summary_row(spec, report, i, cfg)
        row.update({"success_f": report.success_f, "success_g": report.success_g,
                    "bound": 2 * report.t / math.sqrt(report.T)})
        rows.append(row)
    header = f"{'program':<12} {'t':>3} {'T':>4} {'success_f':>10} {'success_g':>10} " \
             f"{'distance':>9} {'lemma2':>8} {'2t/sqrtT':>9}"
    print(header, file=sys.stderr)
    for r in rows:
        print(f"{r['program']:<12} {r['t']:>3} {r['T']:>4} {r['success_f']:>10.4f} "
              f"{r['success_g']:>10.4f} {r['lhs']:>9.4f} {r['rhs']:>8.4f} {r['bound']:>9.4f}",
              file=sys.stderr)
    _emit(cfg, rows, {"command": "demo", "config": _config_echo(cfg), "rows": rows})
    return EXIT_OK if all(r["holds"] for r in rows) else EXIT_VIOLATION


HANDLERS = {"lemma1": cmd_lemma1, "lemma2": cmd_lemma2,
            "adversary": cmd_adversary, "demo": cmd_demo}

DEFAULTS = {
    "demo": {"n": 4, "T": 16, "t": 2, "seed": 0},
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qiter", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON file with the same keys as the flags")
    parser.add_argument("--n", type=int)
    parser.add_argument("--T", type=int)
    parser.add_argument("--t", type=int)
    parser.add_argument("--theta", type=float)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--trials", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--program", choices=FAMILIES)
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--out")
    parser.add_argument("--replay", type=int, help="rerun a single instance id")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    values = dict(DEFAULTS.get(args.command, {}))
    if args.config:
        try:
            values.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
    for f in fields(ExperimentConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    values["command"] = args.command
    unknown = set(values) - {f.name for f in fields(ExperimentConfig)}
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except (ConfigError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return HANDLERS[cfg.command](cfg)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
