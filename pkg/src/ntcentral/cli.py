"""Command-line frontend: validated JSON configs, presets, CSV emission.

Config documents mirror :class:`~ntcentral.harness.Experiment`; a preset is
the same document with an ``experiments`` list so one file can describe, for
example, one study per kernel.  All artifacts are CSV files written
atomically with shortest round-trip float formatting, so repeated runs of
the same config produce byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from importlib import resources

import jsonschema

from .errors import (
    CflViolationError,
    ConfigurationError,
    InputDataError,
    KernelDefinitionError,
    ModelDefinitionError,
    NumericsError,
    SolverError,
)
from .harness import (
    Experiment,
    MonitorLog,
    SchemeSpec,
    _atomic_write,
    compute_reference,
    convergence_study,
    resolve_profiles,
    resolve_time_ratio,
    restrict_values,
    run_simulation,
    snapshot_columns,
)
from .kernels import build_weights
from .limiters import NO_CLIP, ClipConfig
from .models import MODEL_FACTORIES, make_model

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

DEFAULT_INITIAL_DATA = {
    "keyfitz-kranzer": "kk-sine",
    "arrhenius": "arrhenius-sine",
    "multilane": "multilane-sine",
    "nonlocal-euler": "euler-sine",
    "garz": "garz-sine",
}

_SCHEME_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["scheme"],
    "properties": {
        "scheme": {"enum": ["nt", "lxf1", "lxf2"]},
        "slope_variant": {"enum": ["v1", "v2"]},
        "theta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "label": {"type": "string", "minLength": 1},
    },
}

_EXPERIMENT_PROPERTIES = {
    "label": {"type": "string"},
    "model": {"enum": sorted(MODEL_FACTORIES)},
    "eta": {"type": "number", "exclusiveMinimum": 0},
    "kernel": {"type": "string"},
    "model_params": {"type": "object"},
    "T": {"type": "number", "minimum": 0},
    "initial_data": {
        "anyOf": [
            {"type": "string"},
            {"type": "array", "items": {"type": "string"}, "minItems": 1},
        ]
    },
    "domain": {
        "type": "array",
        "items": {"type": "number"},
        "minItems": 2,
        "maxItems": 2,
    },
    "bc": {"enum": ["periodic", "constant", "zero"]},
    "base_dx": {"type": "number", "exclusiveMinimum": 0},
    "level": {"type": "integer", "minimum": 0},
    "levels": {
        "type": "array",
        "items": {"type": "integer", "minimum": 0},
        "minItems": 1,
    },
    "reference_level": {"type": "integer", "minimum": 1},
    "reference_variant": {"enum": ["v1", "v2"]},
    "time_ratio": {"type": "number", "exclusiveMinimum": 0},
    "schemes": {"type": "array", "items": _SCHEME_SCHEMA, "minItems": 1},
    "clip": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "enabled": {"type": "boolean"},
            "C": {"type": "number", "exclusiveMinimum": 0},
            "delta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        },
    },
    "positivity": {"type": "boolean"},
    "safety": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
}

_TOP_LEVEL_EXTRA = {
    "name": {"type": "string"},
    "out": {"type": "string"},
    "verbose": {"type": "boolean"},
}

_SINGLE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["model", "T"],
    "properties": {**_EXPERIMENT_PROPERTIES, **_TOP_LEVEL_EXTRA},
}

_PRESET_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["experiments"],
    "properties": {
        **_TOP_LEVEL_EXTRA,
        "kind": {"enum": ["run", "converge", "compare"]},
        "experiments": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["model", "T"],
                "properties": _EXPERIMENT_PROPERTIES,
            },
        },
    },
}


@dataclass
class RunConfig:
    """Validated, default-filled description of what to execute."""

    name: str
    out_dir: str
    verbose: bool
    experiments: tuple[Experiment, ...]


def _schema_path(error: jsonschema.ValidationError) -> str:
    parts = ["$"]
    for p in error.absolute_path:
        parts.append(f"[{p}]" if isinstance(p, int) else f".{p}")
    return "".join(parts)


def _experiment_from_doc(doc: dict, source: str) -> Experiment:
    params = dict(doc.get("model_params", {}))
    if "eta" in doc:
        params["eta"] = doc["eta"]
    if "kernel" in doc:
        params["kernel"] = doc["kernel"]
    model = make_model(doc["model"], **params)

    data = doc.get("initial_data", DEFAULT_INITIAL_DATA[doc["model"]])
    if not isinstance(data, str):
        data = tuple(data)
    profiles = resolve_profiles(data)
    if len(profiles) != model.n_species:
        raise ConfigurationError(
            f"{source}: initial data has {len(profiles)} species but model "
            f"{doc['model']!r} expects {model.n_species}"
        )

    if "schemes" in doc:
        schemes = tuple(
            SchemeSpec(
                scheme=s["scheme"],
                slope_variant=s.get("slope_variant", "v1"),
                theta=s.get("theta"),
                label=s.get("label"),
            )
            for s in doc["schemes"]
        )
    else:
        schemes = (
            SchemeSpec("lxf1"),
            SchemeSpec("lxf2"),
            SchemeSpec("nt", "v1"),
        )
        if model.supports_v2:
            schemes = schemes + (SchemeSpec("nt", "v2"),)

    clip = NO_CLIP
    if "clip" in doc:
        c = doc["clip"]
        clip = ClipConfig(
            enabled=c.get("enabled", True),
            C=c.get("C", 1.0),
            delta=c.get("delta", 0.5),
        )

    if "levels" in doc:
        levels = tuple(doc["levels"])
    else:
        levels = (doc.get("level", 0),)

    exp = Experiment(
        model=doc["model"],
        model_params=params,
        t_final=doc["T"],
        initial_data=data,
        domain=tuple(doc.get("domain", (-1.0, 1.0))),
        bc=doc.get("bc", "periodic"),
        schemes=schemes,
        base_dx=doc.get("base_dx", 0.05),
        levels=levels,
        reference_level=doc.get("reference_level", 9),
        reference_variant=doc.get("reference_variant"),
        time_ratio=doc.get("time_ratio"),
        clip=clip,
        positivity=doc.get("positivity", False),
        safety=doc.get("safety", 1.0),
        name=doc.get("label", ""),
    )
    # surface the kernel/grid integer-ratio requirement at parse time
    coarse_dx = exp.grid_at(min(exp.levels)).dx
    for kernel in model.kernels:
        build_weights(kernel, coarse_dx)
    exp.cells_at(exp.reference_level)
    return exp


def parse_config(doc, source: str = "<config>") -> RunConfig:
    """Validate a config document (dict or JSON text) and fill defaults."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{source}: not valid JSON: {exc}") from None
    schema = _PRESET_SCHEMA if "experiments" in doc else _SINGLE_SCHEMA
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        raise ConfigurationError(
            f"{source}: {_schema_path(exc)}: {exc.message}"
        ) from None

    if "experiments" in doc:
        exp_docs = doc["experiments"]
    else:
        exp_docs = [{k: v for k, v in doc.items() if k in _EXPERIMENT_PROPERTIES}]
    experiments = tuple(_experiment_from_doc(d, source) for d in exp_docs)
    labels = [e.name for e in experiments]
    if len(experiments) > 1 and len(set(labels)) != len(labels):
        raise ConfigurationError(
            f"{source}: experiments need distinct labels, got {labels}"
        )
    name = doc.get("name") or experiments[0].model
    return RunConfig(
        name=name,
        out_dir=doc.get("out", "."),
        verbose=doc.get("verbose", False),
        experiments=experiments,
    )


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------


def preset_names() -> list[str]:
    root = resources.files("ntcentral").joinpath("presets")
    return sorted(
        entry.name[: -len(".json")]
        for entry in root.iterdir()
        if entry.name.endswith(".json")
    )


def load_preset(name: str) -> dict:
    root = resources.files("ntcentral").joinpath("presets")
    entry = root.joinpath(f"{name}.json")
    if not entry.is_file():
        raise ConfigurationError(
            f"unknown preset {name!r}; available: {preset_names()}"
        )
    return json.loads(entry.read_text())


# ---------------------------------------------------------------------------
# CSV helpers
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    return repr(float(x))


def _monitor_csv(species, log: MonitorLog) -> str:
    header = ["t"]
    for sp in species:
        header += [f"mass:{sp}", f"min:{sp}", f"max:{sp}", f"tv:{sp}"]
    lines = [",".join(header)]
    times, mass, vmin, vmax, tv = log.times, log.mass, log.vmin, log.vmax, log.tv
    for i in range(log.n_records):
        row = [_fmt(times[i])]
        for k in range(len(species)):
            row += [_fmt(mass[i, k]), _fmt(vmin[i, k]), _fmt(vmax[i, k]), _fmt(tv[i, k])]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _table_csv(columns: "list[tuple[str, object]]", n_rows: int) -> str:
    lines = [",".join(name for name, _ in columns)]
    for i in range(n_rows):
        lines.append(",".join(_fmt(col[i]) for _, col in columns))
    return "\n".join(lines) + "\n"


def _out_path(cfg: RunConfig, *parts: str) -> str:
    stem = "-".join(p for p in parts if p)
    return os.path.join(cfg.out_dir, f"{stem}.csv")


def _emit(path: str, text: str, verbose: bool):
    _atomic_write(path, text)
    print(path)
    if verbose:
        print(f"  wrote {len(text)} bytes", file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_run(cfg: RunConfig, strict_cfl: bool = False, threads: int | None = None) -> int:
    for exp in cfg.experiments:
        model = exp.build_model()
        lam = resolve_time_ratio(exp, model)
        level = exp.levels[0]
        grid = exp.grid_at(level)
        for spec in exp.schemes:
            state, log = run_simulation(
                exp, level, spec, strict_cfl=strict_cfl, record=True, time_ratio=lam
            )
            header, cols = snapshot_columns(model, grid, state.values)
            text = _table_csv(list(zip(header, cols)), grid.cells)
            _emit(_out_path(cfg, cfg.name, exp.name, spec.name), text, cfg.verbose)
            _emit(
                _out_path(cfg, cfg.name, exp.name, spec.name, "monitor"),
                _monitor_csv(model.species, log),
                cfg.verbose,
            )
    return EXIT_OK


def cmd_converge(
    cfg: RunConfig, strict_cfl: bool = False, threads: int | None = None
) -> int:
    lines = ["scheme,n,dx,l1_error,rate"]
    for exp in cfg.experiments:
        report = convergence_study(
            exp, threads=threads, strict_cfl=strict_cfl
        )
        prefix = f"{exp.name}:" if exp.name else ""
        for scheme, rows in report.rows.items():
            for n, dx, err, rate in rows:
                tail = "" if rate is None else _fmt(rate)
                lines.append(f"{prefix}{scheme},{n},{_fmt(dx)},{_fmt(err)},{tail}")
        if cfg.verbose:
            print(f"  {exp.name or exp.model}: dt/dx={report.time_ratio}", file=sys.stderr)
    _emit(_out_path(cfg, cfg.name), "\n".join(lines) + "\n", cfg.verbose)
    return EXIT_OK


def cmd_compare(
    cfg: RunConfig, strict_cfl: bool = False, threads: int | None = None
) -> int:
    for exp in cfg.experiments:
        model = exp.build_model()
        lam = resolve_time_ratio(exp, model)
        level = exp.levels[0]
        grid = exp.grid_at(level)
        columns: list[tuple[str, object]] = [("x", grid.centers)]
        for spec in exp.schemes:
            state, _ = run_simulation(
                exp, level, spec, strict_cfl=strict_cfl, record=False, time_ratio=lam
            )
            header, cols = snapshot_columns(model, grid, state.values)
            columns += [
                (f"{spec.name}:{h}", c) for h, c in zip(header[1:], cols[1:])
            ]
        reference = compute_reference(exp, lam)
        factor = 2 ** (exp.reference_level - level)
        ref_coarse = restrict_values(reference, factor)
        header, cols = snapshot_columns(model, grid, ref_coarse)
        columns += [(f"reference:{h}", c) for h, c in zip(header[1:], cols[1:])]
        _emit(
            _out_path(cfg, cfg.name, exp.name),
            _table_csv(columns, grid.cells),
            cfg.verbose,
        )
    return EXIT_OK


def cmd_list_models() -> int:
    for name in sorted(MODEL_FACTORIES):
        model = make_model(name)
        kernels = ", ".join(k.name for k in model.kernels)
        print(f"{name}: species {', '.join(model.species)}; kernels {kernels}")
    return EXIT_OK


def cmd_list_presets() -> int:
    for name in preset_names():
        doc = load_preset(name)
        models = sorted({e["model"] for e in doc["experiments"]})
        print(f"{name} ({doc.get('kind', '?')}): {', '.join(models)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ntcentral",
        description="Central-scheme solver for 1-D systems of nonlocal balance laws.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("run", "run each configured scheme once and write snapshots + monitors"),
        ("converge", "run a refinement study and write the error/rate table"),
        ("compare", "run all schemes at one level and write an overlay table"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="path to a JSON config document")
        p.add_argument("--preset", help="name of a packaged preset")
        p.add_argument("--out", help="output directory (default: config or '.')")
        p.add_argument("--strict-cfl", action="store_true",
                       help="abort when the runtime CFL estimate is exceeded")
        p.add_argument("--threads", type=int, default=None,
                       help="parallel (scheme, level) runs in studies")
    sub.add_parser("list-models", help="list the model zoo")
    sub.add_parser("list-presets", help="list packaged presets")
    return parser


def _load_config(args) -> RunConfig:
    if bool(args.config) == bool(args.preset):
        raise ConfigurationError("exactly one of --config or --preset is required")
    if args.preset:
        doc = load_preset(args.preset)
        source = f"preset {args.preset}"
    else:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read {args.config}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(
                f"{args.config}: not valid JSON: {exc}"
            ) from None
        source = args.config
    cfg = parse_config(doc, source)
    if args.out:
        cfg.out_dir = args.out
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "list-models":
            return cmd_list_models()
        if args.command == "list-presets":
            return cmd_list_presets()
        cfg = _load_config(args)
        handler = {"run": cmd_run, "converge": cmd_converge, "compare": cmd_compare}[
            args.command
        ]
        return handler(cfg, strict_cfl=args.strict_cfl, threads=args.threads)
    except (NumericsError, CflViolationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
