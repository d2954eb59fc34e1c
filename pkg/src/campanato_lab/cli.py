"""Experiment runner: JSON configs in, JSON reports and CSV tables out.

Exit codes: 0 all requested verifications passed, 1 a verification
failed, 2 the config (or command line) was invalid.  Identical config
and seed give byte-identical report content; the ISO-8601 timestamp is
excluded from the report's content hash.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import phi as phimod
from .constructions import (extremal_chain_function, h_function,
                            sin_h_multiplier)
from .filtration import TreeSpecError, chain_to_root, parse_tree_config
from .functions import LeafFunction, indicator, random_functions
from .norms import campanato_norm, campanato_seminorm
from .report import canonical_json, content_hash
from .verify import VerifyContext, run_multiplier_suite, run_verify_suites

ALL_SUITES = ("norms", "phi_report", "verify", "multiplier")


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the offending key."""


def parse_phi_config(cfg, where="phi"):
    if not isinstance(cfg, dict) or "family" not in cfg:
        raise ConfigError(f"{where}: expected a dict with a 'family' key")
    family = cfg["family"]
    if family == "one":
        return phimod.one()
    if family == "psi":
        return phimod.psi()
    if family in ("powerlog", "power"):
        return phimod.powerlog(cfg.get("alpha", 0.0), cfg.get("beta", 0.0),
                               cfg.get("gamma", 0.0))
    if family == "table":
        points = cfg.get("points")
        if not points:
            raise ConfigError(f"{where}.points: table weight needs points")
        try:
            return phimod.table(points)
        except ValueError as exc:
            raise ConfigError(f"{where}.points: {exc}")
    if family == "quotient":
        return phimod.quotient_phi(parse_phi_config(cfg.get("base"),
                                                    f"{where}.base"))
    raise ConfigError(f"{where}.family: unknown weight family {family!r}")


class ExperimentConfig:
    """Parsed and validated experiment description."""

    def __init__(self, raw, seed_override=None, depth_override=None):
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        self.raw = raw
        tree_cfg = raw.get("tree")
        if tree_cfg is None:
            raise ConfigError("tree: missing")
        if depth_override is not None:
            if tree_cfg.get("type") != "dyadic":
                raise ConfigError("--depth override only applies to dyadic trees")
            tree_cfg = dict(tree_cfg, depth=depth_override)
        try:
            self.tree = parse_tree_config(tree_cfg)
        except TreeSpecError as exc:
            raise ConfigError(f"tree: {exc}")

        phi_cfg = raw.get("phi", {"family": "one"})
        if isinstance(phi_cfg, list):
            self.phis = [parse_phi_config(c, f"phi[{i}]")
                         for i, c in enumerate(phi_cfg)]
        else:
            self.phis = [parse_phi_config(phi_cfg)]

        p_cfg = raw.get("p", 1)
        self.ps = [float(p) for p in (p_cfg if isinstance(p_cfg, list) else [p_cfg])]
        for p in self.ps:
            if p < 1:
                raise ConfigError(f"p: must be >= 1, got {p}")

        seed = raw.get("seed") if seed_override is None else seed_override
        self.seed = int(seed) if seed is not None else None

        self.function_specs = raw.get("functions",
                                      [{"kind": "sin_h", "leaf": 0}])
        if not isinstance(self.function_specs, list):
            raise ConfigError("functions: expected a list")
        for i, spec in enumerate(self.function_specs):
            if spec.get("kind") == "random" and self.seed is None \
                    and spec.get("seed") is None:
                raise ConfigError(
                    f"functions[{i}]: random functions need a seed")

        self.suites = raw.get("suites", ["verify"])
        for s in self.suites:
            if s not in ALL_SUITES:
                raise ConfigError(f"suites: unknown suite {s!r}")
        self.out = raw.get("out", "reports")

    def build_functions(self, phi_spec):
        """Instantiate the configured functions for one weight."""
        tree = self.tree
        out = []
        for i, spec in enumerate(self.function_specs):
            kind = spec.get("kind")
            where = f"functions[{i}]"
            if kind == "indicator":
                level, index = spec.get("level"), spec.get("index", 0)
                if level is None:
                    raise ConfigError(f"{where}: indicator needs 'level'")
                try:
                    atom = tree.atom(level, index)
                except ValueError as exc:
                    raise ConfigError(f"{where}: {exc}")
                out.append((f"indicator:{level},{index}", indicator(tree, atom)))
            elif kind in ("extremal", "h", "sin_h"):
                leaf = spec.get("leaf", 0)
                if not 0 <= leaf < tree.leaf_count:
                    raise ConfigError(f"{where}: leaf {leaf} out of range "
                                      f"[0, {tree.leaf_count})")
                chain = chain_to_root(tree, tree.leaves[leaf])
                if kind == "extremal":
                    f = extremal_chain_function(tree, chain, phi_spec).f
                elif kind == "h":
                    f = h_function(tree, chain, phi_spec)
                else:
                    f = sin_h_multiplier(tree, chain, phi_spec)
                out.append((f"{kind}:leaf={leaf}", f))
            elif kind == "random":
                count = int(spec.get("count", 1))
                seed = spec.get("seed", self.seed)
                for k, f in enumerate(random_functions(tree, count, seed)):
                    out.append((f"random:{seed}:{k}", f))
            elif kind == "leaf_values":
                values = spec.get("values")
                if not isinstance(values, list) \
                        or len(values) != tree.leaf_count:
                    raise ConfigError(
                        f"{where}: 'values' must list {tree.leaf_count} numbers")
                out.append((f"leaf_values:{i}", LeafFunction(tree, values)))
            else:
                raise ConfigError(f"{where}: unknown function kind {kind!r}")
        return out


# -- suite execution -------------------------------------------------------------


def _norm_rows(config):
    rows = []
    for spec in config.phis:
        functions = config.build_functions(spec)
        for p in config.ps:
            for label, f in functions:
                sem = campanato_seminorm(f, p, spec, exact=False)
                norm = campanato_norm(f, p, spec, exact=False)
                rows.append({
                    "function": label,
                    "phi": spec.describe(),
                    "p": p,
                    "seminorm": float(sem.value),
                    "norm": float(norm.value),
                    "mean_abs": float(norm.mean_abs),
                    "witness_level": sem.witness[0] if sem.witness else None,
                    "witness_atom": sem.witness[1] if sem.witness else None,
                })
    return rows


def _phi_rows(config, grid=None):
    if grid is None:
        grid = [r for r in phimod.default_grid(k_max=30) if r >= 2.0 ** -30]
    rows = []
    for spec in config.phis:
        for r in sorted(grid, reverse=True):
            star = phimod.phi_star(spec, r)
            val = float(phimod.eval_phi(spec, r))
            rows.append({"phi": spec.describe(), "r": r, "phi_r": val,
                         "phi_star_r": star, "quotient_r": val / star})
    return rows


def execute(config):
    """Run the configured suites; returns (report dict, csv tables dict)."""
    report = {
        "config": config.raw,
        "arithmetic_mode": config.tree.mode,
        "tree": {"depth": config.tree.depth, "leaves": config.tree.leaf_count},
        "seed": config.seed,
        "suites": [],
    }
    tables = {}
    passed = True
    for suite in config.suites:
        if suite == "norms":
            rows = _norm_rows(config)
            tables["norms"] = rows
            report["suites"].append({"suite": "norms", "passed": True,
                                     "rows": len(rows)})
        elif suite == "phi_report":
            rows = _phi_rows(config)
            tables["phi"] = rows
            entries = [phimod.phi_report(spec, ps=tuple(config.ps)).to_dict()
                       for spec in config.phis]
            report["suites"].append({"suite": "phi_report", "passed": True,
                                     "reports": entries})
        elif suite == "verify":
            for spec in config.phis:
                for p in config.ps:
                    ctx = VerifyContext(tree=config.tree, spec=spec, p=p,
                                        seed=config.seed or 0)
                    for rep in run_verify_suites(ctx):
                        entry = rep.to_dict()
                        entry["phi"] = spec.describe()
                        entry["p"] = p
                        report["suites"].append(entry)
                        passed = passed and rep.passed
        elif suite == "multiplier":
            for spec in config.phis:
                for p in config.ps:
                    ctx = VerifyContext(tree=config.tree, spec=spec, p=p,
                                        seed=config.seed or 0)
                    functions = config.build_functions(spec)
                    label, g = functions[0]
                    cert, reps = run_multiplier_suite(ctx, g, g_label=label)
                    entry = {"suite": "multiplier", "phi": spec.describe(),
                             "p": p, "certificate": cert.to_dict(),
                             "passed": cert.passed}
                    report["suites"].append(entry)
                    passed = passed and cert.passed
                    for rep in reps:
                        sub = rep.to_dict()
                        sub["phi"] = spec.describe()
                        sub["p"] = p
                        report["suites"].append(sub)
                        passed = passed and rep.passed
    report["passed"] = passed
    return report, tables


def write_outputs(report, tables, out_dir, fmt="both"):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in ("json", "both"):
        report = dict(report)
        report["generated_at"] = datetime.now(timezone.utc).isoformat()
        report["content_hash"] = content_hash(report)
        path = out / "report.json"
        path.write_text(canonical_json(report) + "\n", encoding="utf-8")
        written.append(path)
    if fmt in ("csv", "both"):
        for name, rows in tables.items():
            if not rows:
                continue
            path = out / f"{name}.csv"
            with path.open("w", newline="", encoding="utf-8") as fh:
                writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
                writer.writeheader()
                for row in rows:
                    writer.writerow({k: _csv_cell(v) for k, v in row.items()})
            written.append(path)
    return written


def _csv_cell(v):
    if isinstance(v, float):
        return repr(v)
    return v


# -- entry points -----------------------------------------------------------------


def load_config(path, seed_override=None, depth_override=None):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}")
    return ExperimentConfig(raw, seed_override=seed_override,
                            depth_override=depth_override)


def run(config_path, out_dir=None, fmt="both", seed=None, depth=None,
        suites=None):
    """Execute a config file end to end; returns the process exit code."""
    try:
        config = load_config(config_path, seed_override=seed,
                             depth_override=depth)
        if suites is not None:
            config.suites = list(suites)
        report, tables = execute(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    write_outputs(report, tables, out_dir or config.out, fmt)
    for entry in report["suites"]:
        name = entry.get("suite")
        status = "pass" if entry.get("passed", True) else "FAIL"
        extra = ""
        if "phi" in entry:
            extra = f" [phi={entry['phi']} p={entry.get('p')}]"
        print(f"{status:4s}  {name}{extra}")
    print(f"overall: {'pass' if report['passed'] else 'FAIL'}")
    return 0 if report["passed"] else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="campanato-lab",
        description="Weighted mean-oscillation norms on atom-tree "
                    "filtrations: norm tables, weight reports, and "
                    "inequality verification suites.")
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "norms": "compute norm tables for the configured functions",
        "verify": "run the inequality verification suites",
        "phi": "report weight-function condition constants",
        "multiplier": "run the multiplier certificate",
        "run": "run the suites listed in the config",
    }
    for name, help_text in specs.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True, help="JSON config path")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
        sp.add_argument("--depth", type=int, default=None,
                        help="override dyadic tree depth")
        sp.add_argument("--format", choices=("json", "csv", "both"),
                        default="both", help="which outputs to write")
    args = parser.parse_args(argv)
    suites = {
        "norms": ["norms"],
        "verify": ["verify"],
        "phi": ["phi_report"],
        "multiplier": ["multiplier"],
        "run": None,
    }[args.command]
    return run(args.config, out_dir=args.out, fmt=args.format,
               seed=args.seed, depth=args.depth, suites=suites)


if __name__ == "__main__":
    sys.exit(main())
