"""Command-line interface: ``decompose``, ``symbol-check``, ``toeplitz``, ``verify``.

Exit codes: 0 success, 1 a check failed, 2 an exactness or positivity
contract broke, 3 bad configuration, 4 symbol parse error, 5 inconclusive.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import bergman as bg
from .errors import (
    BoundExceeded,
    DimensionMismatch,
    DivisorBelowBound,
    GramNotPD,
    IndexOutOfRange,
    MultiplicityViolation,
    SymbolSyntaxError,
)
from .matdomain import DomainInfo, RngStream, TAG_HAAR
from .montecarlo import MIN_SAMPLES, MCConfig
from .polyrep import MAX_DEGREE, MAX_N, DominantWeight, cached_decomposition, component, weyl_dim
from .symbols import Group, compile_symbol, invariance_check
from .verify import FAIL, INCONCLUSIVE, PASS, SUITES, SuiteParams, combine, run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONTRACT, EXIT_CONFIG, EXIT_PARSE, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4, 5

DEFAULTS = {"n": 2, "samples": 200_000, "seed": 12345, "shards": 1, "trials": 100}
# config-file keys and the types they parse to
CONFIG_KEYS = {
    "n": int, "dmax": int, "lambda": float, "samples": int, "seed": int, "shards": int, "out": str,
    "symbol": str, "mu": str, "group": str, "suite": str, "trials": int,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    n: int
    d_max: int | None
    lam: float
    nsamples: int
    seed: int
    shards: int
    out_dir: Path | None

    def validate(self):
        if not 1 <= self.n <= MAX_N:
            raise ConfigError(f"n must be between 1 and {MAX_N}")
        if self.d_max is not None and not 0 <= self.d_max <= MAX_DEGREE:
            raise ConfigError(f"dmax must be between 0 and {MAX_DEGREE}")
        info = DomainInfo(self.n)
        if not info.admissible(self.lam):
            raise ConfigError(
                f"lambda={self.lam:g} violates the weight bound lambda > 2n-1 = {info.lambda_min} for n={self.n}"
            )
        if self.nsamples < MIN_SAMPLES:
            raise ConfigError(f"samples must be at least {MIN_SAMPLES}")
        if self.shards < 1:
            raise ConfigError("shards must be at least 1")
        return self

    def to_json(self) -> dict:
        return {"n": self.n, "dmax": self.d_max, "lambda": self.lam, "nsamples": self.nsamples,
                "seed": self.seed, "shards": self.shards}

    @property
    def mc(self) -> MCConfig:
        return MCConfig(self.nsamples, self.seed, self.shards)


def read_config_file(path: str) -> dict:
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise ConfigError(f"cannot read config file: {e}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_").lower()
        if key == "d_max":
            key = "dmax"
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = CONFIG_KEYS[key](val)
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {val!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; command-line flags take precedence")
    common.add_argument("--n", type=int, help="matrix size (1..3)")
    common.add_argument("--dmax", type=int, help="maximum polynomial degree (<= 5)")
    common.add_argument("--lambda", dest="lambda", type=float, help="Bergman weight, must exceed 2n-1")
    common.add_argument("--samples", type=int, help="Monte Carlo sample count")
    common.add_argument("--seed", type=int, help="master random seed")
    common.add_argument("--shards", type=int, help="number of sample shards")
    common.add_argument("--out", help="output directory for report.json and friends")

    p = argparse.ArgumentParser(prog="cartan-toeplitz", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("decompose", parents=[common], help="isotypic decomposition of polynomial spaces")

    sc = sub.add_parser("symbol-check", parents=[common], help="classify a symbol and test its invariance")
    sc.add_argument("--symbol")
    sc.add_argument("--group", choices=["uun", "unl", "unr"], type=str.lower)
    sc.add_argument("--trials", type=int)

    tp = sub.add_parser("toeplitz", parents=[common], help="Toeplitz block on one isotypic component")
    tp.add_argument("--symbol")
    tp.add_argument("--mu", help='dominant weight, e.g. "1,0"')

    vf = sub.add_parser("verify", parents=[common], help="run a named verification suite")
    vf.add_argument("--suite", choices=SUITES + ("all",))
    return p


def merged_options(args: argparse.Namespace) -> tuple[dict, set]:
    """Config-file values overlaid by explicit flags; also the set of keys the user set."""
    opts = read_config_file(args.config) if getattr(args, "config", None) else {}
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            opts[key] = v
    return opts, set(opts)


def run_config(opts: dict) -> RunConfig:
    n = opts.get("n", DEFAULTS["n"])
    lam = opts.get("lambda", bg.DEFAULT_LAMBDA.get(n, 2.0 * n + 1))
    cfg = RunConfig(n, opts.get("dmax"), float(lam), opts.get("samples", DEFAULTS["samples"]),
                    opts.get("seed", DEFAULTS["seed"]), opts.get("shards", DEFAULTS["shards"]),
                    Path(opts["out"]) if opts.get("out") else None)
    return cfg.validate()


# -- commands ---------------------------------------------------------------


def _cplx(M) -> dict:
    M = np.asarray(M)
    return {"re": M.real.tolist(), "im": M.imag.tolist()}


def cmd_decompose(cfg: RunConfig, opts: dict) -> tuple[int, dict, dict]:
    dmax = cfg.d_max if cfg.d_max is not None else 3
    n = cfg.n
    degrees, files = [], {"components": []}
    ok = True
    for d in range(dmax + 1):
        comps = cached_decomposition(n, d)
        total = sum(weyl_dim(c.mu, n) ** 2 for c in comps)
        expected = math.comb(n * n + d - 1, d)
        ok &= total == expected and all(c.dim == c.expected_dim for c in comps)
        degrees.append({
            "d": d,
            "dim": expected,
            "cauchy_sum": total,
            "components": [
                {"mu": list(c.mu.m), "weyl_dim": c.weyl_dim, "dim": c.dim, "hwv": c.hwv.to_json(),
                 "hwv_text": repr(c.hwv)}
                for c in comps
            ],
        })
        files["components"].extend(c.to_json() for c in comps)
    report = {"command": "decompose", "config": cfg.to_json(), "degrees": degrees,
              "verdict": PASS if ok else FAIL}
    return (EXIT_OK if ok else EXIT_FAIL), report, {"components.json": files}


def cmd_symbol_check(cfg: RunConfig, opts: dict) -> tuple[int, dict, dict]:
    text = opts.get("symbol")
    if text is None:
        raise ConfigError("symbol-check needs --symbol")
    sym = compile_symbol(text, cfg.n)
    trials = opts.get("trials", DEFAULTS["trials"])
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    requested = [Group.parse(opts["group"])] if opts.get("group") else list(Group)
    reports = []
    for i, g in enumerate(requested):
        rep = invariance_check(sym, g, RngStream(cfg.seed, i, TAG_HAAR + 2), trials)
        reports.append(dict(rep.to_json(), passed=rep.passed()))
    if opts.get("group"):
        verdict = PASS if reports[0]["passed"] else FAIL
    else:
        verdict = combine(PASS if r["passed"] else FAIL for r in reports if Group(r["group"]) in sym.kind.groups)
    report = {"command": "symbol-check", "config": cfg.to_json(), "symbol": text, "kind": sym.kind.value,
              "sup_bound": sym.sup_bound, "checks": reports, "verdict": verdict}
    return (EXIT_OK if verdict == PASS else EXIT_FAIL), report, {}


def cmd_toeplitz(cfg: RunConfig, opts: dict) -> tuple[int, dict, dict]:
    text, mu_text = opts.get("symbol"), opts.get("mu")
    if text is None or mu_text is None:
        raise ConfigError("toeplitz needs --symbol and --mu")
    sym = compile_symbol(text, cfg.n)
    try:
        mu = DominantWeight.parse(mu_text, cfg.n)
    except ValueError as e:
        raise ConfigError(f"bad --mu: {e}") from None
    dmax = cfg.d_max if cfg.d_max is not None else MAX_DEGREE
    if mu.size > dmax:
        raise ConfigError(f"mu={mu} has degree {mu.size} > dmax={dmax}")
    comp = component(cfg.n, mu)
    B = bg.toeplitz_block(sym, comp, cfg.lam, cfg.mc)
    c = bg.estimate_normalizer(cfg.n, cfg.lam, cfg.mc)
    report = {
        "command": "toeplitz", "config": cfg.to_json(), "symbol": text, "kind": sym.kind.value,
        "lambda": cfg.lam, "mc": {"nsamples": cfg.nsamples, "seed": cfg.seed},
        "component": {"mu": list(mu.m), "dim": comp.dim},
        "compression_only": B.compression_only,
        "block": dict(_cplx(B.matrix), stderr=B.stderr.tolist()),
        "metrics": {
            "scalar_defect": {"value": bg.scalar_defect(B), "stderr_bound": bg.scalar_defect_noise(B)},
            "normality_defect": {"value": bg.normality_defect(B), "stderr_bound": bg.normality_defect_noise(B)},
        },
        "normalizer": {"value": c.value.real, "stderr": c.stderr},
        "verdict": PASS,
    }
    return EXIT_OK, report, {"block.csv": B.to_csv()}


def cmd_verify(cfg: RunConfig, opts: dict, explicit: set) -> tuple[int, dict, dict, dict]:
    suite = opts.get("suite")
    if suite is None:
        raise ConfigError("verify needs --suite")
    if suite not in SUITES + ("all",):
        raise ConfigError(f"unknown suite {suite!r}")
    params = SuiteParams(
        n=cfg.n if "n" in explicit else None,
        dmax=cfg.d_max if "dmax" in explicit else None,
        lam=cfg.lam if "lambda" in explicit else None,
        nsamples=cfg.nsamples if "samples" in explicit else None,
        seed=cfg.seed if "seed" in explicit else None,
        shards=cfg.shards,
    )
    checks, timings = run_suite(suite, params)
    verdict = combine(c.verdict for c in checks)
    report = {"command": "verify", "config": cfg.to_json(), "suite": suite,
              "checks": [c.to_json() for c in checks], "verdict": verdict,
              "summary": {v: sum(c.verdict == v for c in checks) for v in (PASS, FAIL, INCONCLUSIVE)}}
    code = {PASS: EXIT_OK, FAIL: EXIT_FAIL, INCONCLUSIVE: EXIT_INCONCLUSIVE}[verdict]
    return code, report, {}, {"suite_seconds": timings}


# -- output -----------------------------------------------------------------


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"


def _sanitize(obj):
    """Replace non-finite floats (JSON has none) with strings."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    return obj


def emit(out_dir: Path | None, report: dict, extra: dict, meta: dict) -> None:
    report = _sanitize(report)
    if out_dir is None:
        sys.stdout.write(dumps(report))
        return
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(dumps(report))
    (out_dir / "metadata.json").write_text(dumps(meta))
    for name, content in extra.items():
        (out_dir / name).write_text(content if isinstance(content, str) else dumps(content))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    out_dir = None
    meta = {"version": __version__, "started": _dt.datetime.now(_dt.timezone.utc).isoformat()}
    try:
        opts, explicit = merged_options(args)
        out_dir = Path(opts["out"]) if opts.get("out") else None
        cfg = run_config(opts)
        extra_meta = {}
        if args.command == "decompose":
            code, report, extra = cmd_decompose(cfg, opts)
        elif args.command == "symbol-check":
            code, report, extra = cmd_symbol_check(cfg, opts)
        elif args.command == "toeplitz":
            code, report, extra = cmd_toeplitz(cfg, opts)
        else:
            code, report, extra, extra_meta = cmd_verify(cfg, opts, explicit)
        meta.update(extra_meta)
    except (SymbolSyntaxError, IndexOutOfRange) as e:
        return _fail(out_dir, args.command, e, EXIT_PARSE, meta)
    except (ConfigError, DivisorBelowBound, BoundExceeded) as e:
        return _fail(out_dir, args.command, e, EXIT_CONFIG, meta)
    except GramNotPD as e:
        return _fail(out_dir, args.command, e, EXIT_CONTRACT, meta,
                     hint="increase --samples so the Gram matrix is well conditioned")
    except (MultiplicityViolation, DimensionMismatch) as e:
        return _fail(out_dir, args.command, e, EXIT_CONTRACT, meta)
    meta["runtime_seconds"] = round(time.perf_counter() - t0, 3)
    emit(out_dir, report, extra, meta)
    if out_dir is not None:
        print(f"{args.command}: {report['verdict']} (report in {out_dir / 'report.json'})", file=sys.stderr)
    return code


def _fail(out_dir, command, exc, code, meta, hint=None) -> int:
    err = {"type": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, SymbolSyntaxError):
        err["position"] = exc.position
    if hint:
        err["hint"] = hint
    print(f"error: {exc}" + (f"\nhint: {hint}" if hint else ""), file=sys.stderr)
    if out_dir is not None:
        emit(out_dir, {"command": command, "error": err, "verdict": "error"}, {}, meta)
    return code


if __name__ == "__main__":
    sys.exit(main())
