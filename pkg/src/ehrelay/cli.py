"""Command line sweep runner.

Runs outage sweeps over SNR grids and writes one CSV row per
(snr, pairs, strategy, metric, method) combination.  Methods:

* ``mc``: Monte Carlo estimate with standard error,
* ``exact``: closed-form value (where one exists),
* ``asymptotic`` / ``asymptotic-lower`` / ``asymptotic-upper``: high-SNR
  approximations (the water-filling worst case only has a sandwich),
* ``bound-lower`` / ``bound-upper-integral`` / ``bound-upper-closed``:
  water-filling worst-case bounds.

Sweeps are configured by flat ``key = value`` files, a named preset, or
flags; flags override the file/preset.  Output is byte-deterministic for
a fixed sweep: rows are ordered snr, then pairs, then strategy, then
metric, then method, floats are written with ``repr``, and the Monte
Carlo engine itself is reproducible for any worker count.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from .analytic import asymptotic_outage, outage_equal, outage_individual, outage_wf_best, wf_worst_bounds
from .engine import run_experiment
from .model import SystemConfig, power_from_snr_db
from .strategies import STRATEGY_NAMES

__all__ = [
    "CLIError",
    "SweepSpec",
    "PRESETS",
    "parse_config",
    "dump_config",
    "run_sweep",
    "write_csv",
    "main",
]

METRIC_NAMES = ("average", "best", "worst", "success")
MODES = ("mc", "exact", "asymptotic", "bounds", "all")
CSV_COLUMNS = ("snr_db", "pairs", "strategy", "metric", "method", "value", "stderr", "trials", "seed")

_EXACT_COMBOS = {
    ("individual", "average"),
    ("individual", "best"),
    ("individual", "worst"),
    ("equal", "average"),
    ("equal", "best"),
    ("equal", "worst"),
    ("waterfill", "best"),
}
_ASYMPTOTIC_COMBOS = {
    ("individual", "average"),
    ("individual", "best"),
    ("individual", "worst"),
    ("equal", "average"),
    ("equal", "best"),
    ("equal", "worst"),
    ("waterfill", "worst"),
}
_BOUND_COMBOS = {("waterfill", "worst")}


class CLIError(Exception):
    """Configuration or validation failure; maps to exit code 2."""


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: the cartesian product of snr_db x pairs x strategies x
    metrics, evaluated with the methods selected by ``mode``."""

    pairs: tuple[int, ...] = (2,)
    rate: float = 2.0
    eta: float = 1.0
    snr_db: tuple[float, ...] = (30.0,)
    strategies: tuple[str, ...] = ("equal",)
    metrics: tuple[str, ...] = ("average",)
    trials: int = 100_000
    seed: int = 0
    mode: str = "mc"
    h_variance: float = 1.0
    g_variance: float = 1.0
    xi_fraction: float = 0.01
    price_margin: float = 0.05
    price_policy: str = "max-winners"


def _parse_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("must be finite")
    return value


def _parse_int(text: str) -> int:
    return int(text, 10)


def _parse_snr(text: str) -> tuple[float, ...]:
    """Either ``start:stop:step`` (inclusive) or a comma list of dB values."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("expected start:stop:step")
        start, stop, step = (_parse_float(p) for p in parts)
        if step <= 0:
            raise ValueError("step must be positive")
        if stop < start:
            raise ValueError("stop must be >= start")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(start + i * step for i in range(n))
    values = tuple(_parse_float(p) for p in text.split(","))
    if not values:
        raise ValueError("empty grid")
    return values


def _parse_pairs(text: str) -> tuple[int, ...]:
    values = tuple(_parse_int(p) for p in text.split(","))
    for v in values:
        if v < 1:
            raise ValueError("pair counts must be >= 1")
    return values


def _parse_names(valid: tuple[str, ...], kind: str):
    def parse(text: str) -> tuple[str, ...]:
        values = tuple(p.strip() for p in text.split(","))
        for v in values:
            if v not in valid:
                raise ValueError(f"unknown {kind} {v!r}; expected one of {', '.join(valid)}")
        return values

    return parse


def _parse_mode(text: str) -> str:
    if text not in MODES:
        raise ValueError(f"unknown mode {text!r}; expected one of {', '.join(MODES)}")
    return text


PRICE_POLICIES = ("max-winners", "certified")


def _parse_policy(text: str) -> str:
    if text not in PRICE_POLICIES:
        raise ValueError(f"unknown price policy {text!r}; expected one of {', '.join(PRICE_POLICIES)}")
    return text


_PARSERS = {
    "pairs": _parse_pairs,
    "rate": _parse_float,
    "eta": _parse_float,
    "snr_db": _parse_snr,
    "strategies": _parse_names(STRATEGY_NAMES, "strategy"),
    "metrics": _parse_names(METRIC_NAMES, "metric"),
    "trials": _parse_int,
    "seed": _parse_int,
    "mode": _parse_mode,
    "h_variance": _parse_float,
    "g_variance": _parse_float,
    "xi_fraction": _parse_float,
    "price_margin": _parse_float,
    "price_policy": _parse_policy,
    "distance_source_relay": _parse_float,
    "distance_relay_destination": _parse_float,
    "path_loss_exponent": _parse_float,
}
_DISTANCE_KEYS = ("distance_source_relay", "distance_relay_destination")


def parse_config(text: str) -> SweepSpec:
    """Parse flat ``key = value`` config text; errors carry line numbers.

    ``#`` starts a comment.  Link variances may be given directly
    (``h_variance`` / ``g_variance``) or via distances and a path-loss
    exponent (default 3), but not both ways at once.
    """
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise CLIError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, val = key.strip(), val.strip()
        if key not in _PARSERS:
            raise CLIError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise CLIError(f"line {lineno}: duplicate key {key!r} (first set on line {lines[key]})")
        try:
            values[key] = _PARSERS[key](val)
        except ValueError as exc:
            raise CLIError(f"line {lineno}: invalid value for {key}: {val!r} ({exc})") from None
        lines[key] = lineno

    has_distance = any(k in values for k in _DISTANCE_KEYS)
    if has_distance:
        missing = [k for k in _DISTANCE_KEYS if k not in values]
        if missing:
            raise CLIError(f"line {lines[next(k for k in _DISTANCE_KEYS if k in values)]}: "
                           f"{missing[0]} is required when the other distance is given")
        for vk in ("h_variance", "g_variance"):
            if vk in values:
                raise CLIError(f"line {lines[vk]}: {vk} conflicts with distance-based variances")
        alpha = values.pop("path_loss_exponent", 3.0)
        d_sr = values.pop("distance_source_relay")
        d_rd = values.pop("distance_relay_destination")
        if d_sr <= 0 or d_rd <= 0:
            raise CLIError("distances must be positive")
        values["h_variance"] = float(d_sr) ** -alpha
        values["g_variance"] = float(d_rd) ** -alpha
    elif "path_loss_exponent" in values:
        raise CLIError(f"line {lines['path_loss_exponent']}: path_loss_exponent requires distances")

    return SweepSpec(**values)


def dump_config(spec: SweepSpec) -> str:
    """Canonical config text; ``parse_config(dump_config(s)) == s``."""
    out = [
        f"pairs = {','.join(str(p) for p in spec.pairs)}",
        f"rate = {spec.rate!r}",
        f"eta = {spec.eta!r}",
        f"snr_db = {','.join(repr(s) for s in spec.snr_db)}",
        f"strategies = {','.join(spec.strategies)}",
        f"metrics = {','.join(spec.metrics)}",
        f"trials = {spec.trials}",
        f"seed = {spec.seed}",
        f"mode = {spec.mode}",
        f"h_variance = {spec.h_variance!r}",
        f"g_variance = {spec.g_variance!r}",
        f"xi_fraction = {spec.xi_fraction!r}",
        f"price_margin = {spec.price_margin!r}",
        f"price_policy = {spec.price_policy}",
    ]
    return "\n".join(out) + "\n"


# relay and destinations 2 m out, quartic path loss
_SUCCESS_VARIANCE = 2.0**-4.0

PRESETS = {
    "fig-individual-vs-equal": SweepSpec(
        pairs=(2, 3),
        rate=2.0,
        snr_db=tuple(float(s) for s in range(0, 41, 5)),
        strategies=("individual", "equal"),
        metrics=("average", "best", "worst"),
        trials=1_000_000,
        seed=1,
        mode="all",
    ),
    "fig-wf-bounds": SweepSpec(
        pairs=(5,),
        rate=2.0,
        snr_db=tuple(float(s) for s in range(0, 41, 5)),
        strategies=("waterfill",),
        metrics=("worst",),
        trials=1_000_000,
        seed=1,
        mode="all",
    ),
    "fig-success-count": SweepSpec(
        pairs=(20,),
        rate=0.5,
        snr_db=(10.0, 15.0, 20.0, 25.0),
        strategies=STRATEGY_NAMES,
        metrics=("success",),
        trials=2000,
        seed=1,
        mode="mc",
        h_variance=_SUCCESS_VARIANCE,
        g_variance=_SUCCESS_VARIANCE,
    ),
}


def _validate_spec(spec: SweepSpec) -> None:
    if not spec.pairs or any(p < 1 for p in spec.pairs):
        raise CLIError("pairs must be positive integers")
    if not spec.snr_db:
        raise CLIError("snr_db grid is empty")
    if spec.trials < 1:
        raise CLIError("trials must be >= 1")
    if not (spec.rate > 0 and math.isfinite(spec.rate)):
        raise CLIError("rate must be positive")
    if not (0.0 < spec.eta <= 1.0):
        raise CLIError("eta must lie in (0, 1]")
    if spec.mode not in MODES:
        raise CLIError(f"unknown mode {spec.mode!r}")
    for s in spec.strategies:
        if s not in STRATEGY_NAMES:
            raise CLIError(f"unknown strategy {s!r}")
    for m in spec.metrics:
        if m not in METRIC_NAMES:
            raise CLIError(f"unknown metric {m!r}")
    if spec.h_variance <= 0 or spec.g_variance <= 0:
        raise CLIError("variances must be positive")

    unit = spec.h_variance == 1.0 and spec.g_variance == 1.0
    analytic_modes = {"exact": _EXACT_COMBOS, "asymptotic": _ASYMPTOTIC_COMBOS, "bounds": _BOUND_COMBOS}
    if spec.mode in analytic_modes:
        if not unit:
            raise CLIError(f"mode {spec.mode!r} requires unit link variances")
        combos = analytic_modes[spec.mode]
        for s in spec.strategies:
            for m in spec.metrics:
                if (s, m) not in combos:
                    raise CLIError(f"no {spec.mode} method for strategy {s!r}, metric {m!r}")
    if spec.mode == "asymptotic" and any(p < 2 for p in spec.pairs) and any(
        s != "individual" for s in spec.strategies
    ):
        raise CLIError("pooled asymptotics require at least two pairs")


def _mc_value(report, metric: str) -> tuple[float, float]:
    if metric == "average":
        return report.average, report.average_stderr
    if metric == "best":
        return report.best, report.best_stderr
    if metric == "worst":
        return report.worst, report.worst_stderr
    return report.mean_success, report.mean_success_stderr


def run_sweep(spec: SweepSpec, *, workers: int = 1) -> list[dict]:
    """Evaluate the sweep; returns CSV rows in deterministic order."""
    _validate_spec(spec)
    unit = spec.h_variance == 1.0 and spec.g_variance == 1.0
    want_mc = spec.mode in ("mc", "all")
    want_exact = spec.mode in ("exact", "all") and unit
    want_asym = spec.mode in ("asymptotic", "all") and unit
    want_bounds = spec.mode in ("bounds", "all") and unit

    rows: list[dict] = []

    def add(snr, pairs, strategy, metric, method, value, stderr=None, trials=None):
        rows.append(
            {
                "snr_db": repr(float(snr)),
                "pairs": str(pairs),
                "strategy": strategy,
                "metric": metric,
                "method": method,
                "value": repr(float(value)),
                "stderr": "" if stderr is None else repr(float(stderr)),
                "trials": "" if trials is None else str(trials),
                "seed": str(spec.seed),
            }
        )

    for snr in spec.snr_db:
        for pairs in spec.pairs:
            try:
                config = SystemConfig(
                    pairs=pairs,
                    rate=spec.rate,
                    source_power=power_from_snr_db(snr),
                    eta=spec.eta,
                    h_variance=spec.h_variance,
                    g_variance=spec.g_variance,
                )
            except ValueError as exc:
                raise CLIError(str(exc)) from None
            exact_cache: dict[str, object] = {}
            bounds_cache = None
            for strategy in spec.strategies:
                report = None
                if want_mc:
                    report = run_experiment(
                        config,
                        strategy,
                        spec.trials,
                        spec.seed,
                        workers=workers,
                        auction_opts={
                            "xi_fraction": spec.xi_fraction,
                            "price_margin": spec.price_margin,
                            "price_policy": spec.price_policy,
                        },
                    )
                for metric in spec.metrics:
                    if report is not None:
                        value, stderr = _mc_value(report, metric)
                        add(snr, pairs, strategy, metric, "mc", value, stderr, report.trials)
                    if want_exact and (strategy, metric) in _EXACT_COMBOS:
                        if strategy not in exact_cache:
                            if strategy == "individual":
                                exact_cache[strategy] = outage_individual(config)
                            elif strategy == "equal":
                                exact_cache[strategy] = outage_equal(config)
                            else:
                                exact_cache[strategy] = outage_wf_best(config)
                        summary = exact_cache[strategy]
                        value = summary if isinstance(summary, float) else getattr(summary, metric)
                        add(snr, pairs, strategy, metric, "exact", value)
                    if want_asym and (strategy, metric) in _ASYMPTOTIC_COMBOS:
                        if strategy == "waterfill":
                            if pairs >= 2:
                                lo, hi = asymptotic_outage("waterfill", "worst", config)
                                add(snr, pairs, strategy, metric, "asymptotic-lower", lo)
                                add(snr, pairs, strategy, metric, "asymptotic-upper", hi)
                        elif strategy == "individual" or pairs >= 2:
                            value = asymptotic_outage(strategy, metric, config)
                            add(snr, pairs, strategy, metric, "asymptotic", value)
                    if want_bounds and (strategy, metric) in _BOUND_COMBOS:
                        if bounds_cache is None:
                            bounds_cache = wf_worst_bounds(config)
                        add(snr, pairs, strategy, metric, "bound-lower", bounds_cache.lower)
                        add(snr, pairs, strategy, metric, "bound-upper-integral", bounds_cache.upper_integral)
                        add(snr, pairs, strategy, metric, "bound-upper-closed", bounds_cache.upper_closed)
    return rows


def write_csv(rows: list[dict], stream) -> None:
    stream.write(",".join(CSV_COLUMNS) + "\n")
    for row in rows:
        stream.write(",".join(row[c] for c in CSV_COLUMNS) + "\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ehrelay",
        description="Outage sweeps for an energy-harvesting multi-pair relay.",
    )
    parser.add_argument("--config", type=Path, help="flat key = value sweep file")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="named sweep preset")
    parser.add_argument("--snr", help="SNR grid, start:stop:step or comma list (dB)")
    parser.add_argument("--pairs", help="comma list of pair counts")
    parser.add_argument("--strategy", help="comma list of strategies")
    parser.add_argument("--metric", help="comma list of metrics")
    parser.add_argument("--trials", type=int, help="Monte Carlo trials per point")
    parser.add_argument("--seed", type=int, help="Monte Carlo seed")
    parser.add_argument("--rate", type=float, help="target rate (bits/s/Hz)")
    parser.add_argument("--eta", type=float, help="harvesting efficiency")
    parser.add_argument("--mode", choices=MODES, help="which methods to evaluate")
    parser.add_argument("--out", type=Path, help="CSV output path (default stdout)")
    parser.add_argument("--workers", type=int, default=1, help="worker threads")
    parser.add_argument(
        "--dump-config", action="store_true", help="print the resolved sweep and exit"
    )
    return parser


_FLAG_KEYS = {
    "snr": ("snr_db", _parse_snr),
    "pairs": ("pairs", _parse_pairs),
    "strategy": ("strategies", _parse_names(STRATEGY_NAMES, "strategy")),
    "metric": ("metrics", _parse_names(METRIC_NAMES, "metric")),
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config is not None and args.preset is not None:
            raise CLIError("--config and --preset are mutually exclusive")
        if args.config is not None:
            try:
                text = args.config.read_text()
            except OSError as exc:
                raise CLIError(f"cannot read {args.config}: {exc}") from None
            spec = parse_config(text)
        elif args.preset is not None:
            spec = PRESETS[args.preset]
        else:
            spec = SweepSpec()

        updates: dict[str, object] = {}
        for flag, (field, parse) in _FLAG_KEYS.items():
            raw = getattr(args, flag)
            if raw is not None:
                try:
                    updates[field] = parse(raw)
                except ValueError as exc:
                    raise CLIError(f"invalid --{flag}: {exc}") from None
        for flag in ("trials", "seed", "rate", "eta", "mode"):
            value = getattr(args, flag)
            if value is not None:
                updates[flag] = value
        spec = dataclasses.replace(spec, **updates)

        if args.workers < 1:
            raise CLIError("--workers must be >= 1")
        if args.dump_config:
            _validate_spec(spec)
            sys.stdout.write(dump_config(spec))
            return 0

        rows = run_sweep(spec, workers=args.workers)
        if args.out is not None:
            with open(args.out, "w", newline="") as fh:
                write_csv(rows, fh)
        else:
            write_csv(rows, sys.stdout)
        return 0
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
