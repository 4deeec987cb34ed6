"""Command line front end: ``confined-growth {analyze,certify,insert,verify}``.

Every command writes one JSON report (stdout or ``--out``).  Exit codes:
0 success, 2 hypothesis not met, 3 input error, 4 resource budget.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import HypothesisNotMet, InputError, ResourceError, SelectionFailure
from .growth import (
    certify_gap,
    estimate_cogrowth,
    estimate_rate,
    free_group_rate,
    negligible_ratio,
    poincare_partial,
    verify_inequalities,
)
from .insertion import (
    DEFAULT_SAMPLED_PAIRS,
    choose_insertions,
    decompose,
    exponential_count_report,
    verify_scheme,
)
from .schreier import (
    DEFAULT_VERTEX_BUDGET,
    CosetGraph,
    bfs_ball,
    confinement_check,
    cyclic_quotient,
    format_vertex,
    from_abelianization,
    from_coset_table,
    from_edge_list_file,
    from_free_product,
    loop_counts,
    trivial_subgroup,
)
from .validation import check_words
from .words import Alphabet, parse_word

log = logging.getLogger("confined_growth")

EXIT_OK = 0
EXIT_HYPOTHESIS = 2
EXIT_INPUT = 3
EXIT_RESOURCE = 4


@dataclass
class RunConfig:
    backend: object = "trivial"
    rank: int = 2
    radius: int = 12
    max_len: int = 18
    p: list = field(default_factory=list)
    g: str | None = None
    piece_len: int = 1
    f_candidates: list | None = None
    s: list = field(default_factory=lambda: [1.0])
    tol: float = 0.05
    budget: int = DEFAULT_VERTEX_BUDGET
    seed: int = 0
    sampled: bool = False
    out: str | None = None
    log2: bool = False

    def validate(self):
        if self.radius < 1:
            raise InputError(f"radius: must be >= 1, got {self.radius}")
        if self.max_len < 4:
            raise InputError(f"max_len: must be >= 4, got {self.max_len}")
        if self.piece_len < 1:
            raise InputError(f"piece_len: must be >= 1, got {self.piece_len}")
        return self

    def echo(self) -> dict:
        out = {}
        for f in fields(self):
            if f.name == "out":
                continue
            out[f.name] = getattr(self, f.name)
        return out


def _split_list(value) -> list:
    if value is None:
        return []
    if isinstance(value, str):
        return [v for v in value.split(",")]
    out = []
    for v in value:
        out.extend(_split_list(v) if isinstance(v, str) else [v])
    return out


def load_config(args) -> RunConfig:
    data: dict = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError:
            raise InputError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        if not isinstance(data, dict):
            raise InputError(f"{path}: top level must be a JSON object")
        known = {f.name for f in fields(RunConfig)}
        data = {k.replace("-", "_"): v for k, v in data.items()}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InputError(f"{path}: unknown field(s) {', '.join(unknown)}")
    cfg = RunConfig(**data)
    overrides = {
        "backend": args.backend, "rank": args.rank, "radius": args.radius, "max_len": args.max_len,
        "g": args.g, "piece_len": args.piece_len, "tol": args.tol, "budget": args.budget,
        "seed": args.seed, "out": args.out,
    }
    for k, v in overrides.items():
        if v is not None:
            setattr(cfg, k, v)
    if args.p is not None:
        cfg.p = _split_list(args.p)
    if args.f_candidates is not None:
        cfg.f_candidates = _split_list(args.f_candidates)
    if args.s is not None:
        cfg.s = [float(x) for x in _split_list(args.s)]
    if args.log2:
        cfg.log2 = True
    if args.sampled:
        cfg.sampled = True
    cfg.p = _split_list(cfg.p)
    if cfg.f_candidates is not None:
        cfg.f_candidates = _split_list(cfg.f_candidates)
    cfg.s = [float(x) for x in cfg.s]
    return cfg.validate()


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"backend: expected comma-separated integers, got {text!r}") from None


def _orders(text: str) -> list:
    out = []
    for x in text.split(","):
        x = x.strip()
        out.append(None if x.lower() in ("inf", "infinity", "oo") else int(x))
    return out


def build_graph(backend, rank: int) -> CosetGraph:
    """Backend from ``KIND[:PARAMS]`` text or a ``{"kind": ...}`` object.

    Text forms: ``trivial``, ``abelian:1;0`` (weight vector per generator,
    separated by ``;``), ``free-product:2,3[:0,1]``, ``cyclic:M[:w1,w2]``,
    ``file:PATH``.
    """
    alphabet = Alphabet(rank)
    if isinstance(backend, dict):
        kind = backend.get("kind")
        if kind in ("trivial", "trivial-subgroup"):
            return trivial_subgroup(alphabet)
        if kind in ("abelian", "abelianization"):
            return from_abelianization(alphabet, backend["weights"])
        if kind == "free-product":
            orders = [None if o in ("inf", None) else o for o in backend["orders"]]
            return from_free_product(alphabet, orders, backend.get("assignment"))
        if kind == "cyclic":
            return cyclic_quotient(alphabet, backend["modulus"], backend.get("weights"))
        if kind == "coset-table":
            rows = backend["table"]
            table = {(v, i + 1): w for v, row in enumerate(rows) for i, w in enumerate(row)}
            return from_coset_table(alphabet, table, backend.get("root", 0))
        if kind in ("file", "explicit-file"):
            return from_edge_list_file(backend["path"])
        raise InputError(f"backend: unknown kind {kind!r}")
    if not isinstance(backend, str):
        raise InputError(f"backend: expected a string or object, got {backend!r}")
    kind, _, params = backend.partition(":")
    if kind in ("trivial", "trivial-subgroup"):
        return trivial_subgroup(alphabet)
    if kind in ("abelian", "abelianization"):
        return from_abelianization(alphabet, [_ints(w) for w in params.split(";")])
    if kind == "free-product":
        orders, _, assign = params.partition(":")
        try:
            return from_free_product(alphabet, _orders(orders), _ints(assign) if assign else None)
        except ValueError as exc:
            raise InputError(f"backend: {exc}") from None
    if kind == "cyclic":
        mod, _, weights = params.partition(":")
        return cyclic_quotient(alphabet, int(mod), _ints(weights) if weights else None)
    if kind in ("file", "explicit-file"):
        return from_edge_list_file(params)
    raise InputError(f"backend: unknown kind {kind!r}")


def _clean(obj):
    """Round floats to 12 significant digits so reports are byte-stable."""
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return str(obj)
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):
        return _clean(obj.item())
    return obj


def dump_report(report: dict, out: str | None) -> str:
    text = json.dumps(_clean(report), indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return text


def _log2_view(rates: dict) -> dict:
    return {k: (None if v is None else v / math.log(2)) for k, v in rates.items()}


def _header(command: str, cfg: RunConfig, g: CosetGraph) -> dict:
    return {"command": command, "config": cfg.echo(), "graph": g.describe()}


def _analysis(cfg: RunConfig, g: CosetGraph):
    ball = bfs_ball(g, cfg.radius, cfg.budget)
    quot = estimate_rate(ball.counts)
    closed = loop_counts(g, cfg.max_len, cfg.budget)
    cog = estimate_cogrowth(closed)
    return ball, quot, closed, cog


def cmd_analyze(cfg: RunConfig) -> tuple[dict, int]:
    g = build_graph(cfg.backend, cfg.rank)
    ball, quot, closed, cog = _analysis(cfg, g)
    omega_G = free_group_rate(g.rank)
    ratios = negligible_ratio(ball.counts, g.rank)
    tail = ratios[2:]
    report = _header("analyze", cfg, g)
    report.update({
        "sphere_counts": list(ball.counts),
        "ball_counts": ball.ball_counts(),
        "omega_G": omega_G.rate,
        "omega_quot": quot.to_dict(),
        "omega_H": cog.to_dict(),
        "poincare_partial": [{"s": s, "depth": cfg.radius, "value": poincare_partial(ball.counts, s)}
                             for s in cfg.s],
        "negligible_ratio": ratios,
        "negligible_ratio_nonincreasing_from_2": all(b <= a for a, b in zip(tail, tail[1:])),
    })
    if cfg.log2:
        report["log2"] = _log2_view({"omega_G": omega_G.rate, "omega_quot": quot.rate, "omega_H": cog.rate})
    return report, EXIT_OK


def _confinement(cfg: RunConfig, g: CosetGraph, ball=None):
    if not cfg.p:
        raise InputError("p: a confining set is required (--p)")
    P = check_words(cfg.p, g.rank, "p")
    return confinement_check(g, P, cfg.radius, ball)


def cmd_certify(cfg: RunConfig) -> tuple[dict, int]:
    g = build_graph(cfg.backend, cfg.rank)
    report = _header("certify", cfg, g)
    ball = bfs_ball(g, cfg.radius, cfg.budget)
    conf = _confinement(cfg, g, ball)
    report["confinement"] = conf.to_dict()
    if not conf.holds:
        report["status"] = "hypothesis-not-met"
        report["reason"] = f"not confined: no element of P closes at vertex {format_vertex(conf.failing_vertex)!r}"
        return report, EXIT_HYPOTHESIS
    cert = certify_gap(g, cfg.radius, budget=cfg.budget)
    report["certificate"] = cert.to_dict()
    report["status"] = cert.status
    if cfg.log2 and cert.bound is not None:
        report["log2"] = _log2_view({"bound": cert.bound, "omega_free": cert.omega_free,
                                     "empirical_rate": cert.empirical_rate.rate})
    return report, EXIT_OK if cert.certified else EXIT_HYPOTHESIS


def cmd_insert(cfg: RunConfig) -> tuple[dict, int]:
    g = build_graph(cfg.backend, cfg.rank)
    if cfg.g is None:
        raise InputError("g: a coset representative is required (--g)")
    if not cfg.p:
        raise InputError("p: a confining set is required (--p)")
    word = parse_word(cfg.g, g.rank)
    P = check_words(cfg.p, g.rank, "p")
    F = check_words(cfg.f_candidates, g.rank, "f_candidates") if cfg.f_candidates else None
    report = _header("insert", cfg, g)
    d = decompose(word, cfg.piece_len)
    try:
        scheme = choose_insertions(d, g, P, F)
    except SelectionFailure as exc:
        report["status"] = "selection-failure"
        report["position"] = exc.position
        report["reason"] = str(exc)
        return report, EXIT_HYPOTHESIS
    verification = verify_scheme(scheme, sampled=cfg.sampled, n_pairs=DEFAULT_SAMPLED_PAIRS, seed=cfg.seed)
    report["scheme"] = scheme.to_dict()
    report["verification"] = verification.to_dict()
    if verification.coset and verification.injective:
        report["counts"] = exponential_count_report(scheme, verification, cfg.s[0])
    report["status"] = "verified" if verification.ok else "verification-failed"
    return report, EXIT_OK if verification.ok else EXIT_HYPOTHESIS


def cmd_verify(cfg: RunConfig) -> tuple[dict, int]:
    g = build_graph(cfg.backend, cfg.rank)
    ball, quot, closed, cog = _analysis(cfg, g)
    omega_G = free_group_rate(g.rank)
    report = _header("verify", cfg, g)
    conf = _confinement(cfg, g, ball) if cfg.p else None
    cert = certify_gap(g, cfg.radius, budget=cfg.budget) if g.rank >= 2 else None
    reason = ""
    if conf is not None and not conf.holds:
        reason = "hypothesis not met: not confined"
    elif cert is None or not cert.certified:
        reason = "hypothesis not met: not confined (no certified tree-ball bound)"
    gap = cert.gap if not reason else None
    result = verify_inequalities(omega_G, quot, cog, cfg.tol, gap=gap, gap_reason=reason)
    if conf is not None:
        report["confinement"] = conf.to_dict()
    report["certificate"] = cert.to_dict() if cert is not None else None
    report["inequalities"] = result
    report["status"] = "all-hold" if result["all_hold"] else "hypothesis-not-met"
    return report, EXIT_OK if result["all_hold"] else EXIT_HYPOTHESIS


COMMANDS = {"analyze": cmd_analyze, "certify": cmd_certify, "insert": cmd_insert, "verify": cmd_verify}


class _Parser(argparse.ArgumentParser):
    # argparse's own exit code 2 would read as "hypothesis not met"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="confined-growth", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file; flags override its fields")
        p.add_argument("--backend", help="trivial | abelian:W;W | free-product:O,O | cyclic:M | file:PATH")
        p.add_argument("--rank", type=int)
        p.add_argument("--radius", type=int)
        p.add_argument("--max-len", type=int, help="longest closed walk counted for omega_H")
        p.add_argument("--p", action="append", help="confining word(s), comma separated or repeated")
        p.add_argument("--g", help="coset representative word literal")
        p.add_argument("--piece-len", type=int)
        p.add_argument("--f-candidates", action="append")
        p.add_argument("--s", action="append", help="Poincare exponent(s)")
        p.add_argument("--tol", type=float)
        p.add_argument("--budget", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--sampled", action="store_true", help="sampled injectivity check for large m")
        p.add_argument("--out")
        p.add_argument("--log2", action="store_true", help="also report rates in bits")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        report, code = COMMANDS[args.command](cfg)
    except ResourceError as exc:
        log.error("%s", exc)
        dump_report({"command": args.command, "status": "resource-budget", "error": str(exc)}, args.out)
        return EXIT_RESOURCE
    except HypothesisNotMet as exc:
        log.error("%s", exc)
        return EXIT_HYPOTHESIS
    except (InputError, KeyError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    dump_report(report, cfg.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
