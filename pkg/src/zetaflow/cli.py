"""Config-driven batch runner and regression harness.

``zetaflow run config.json`` executes declared tasks against declared models
and emits a JSON or CSV report; ``zetaflow selftest`` runs the built-in
acceptance catalog; ``zetaflow list-models`` documents the config schema.
Exit codes: 0 all tasks pass, 1 any task fails or errors, 2 config error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction

from . import __version__, czeta, flow, invariants, symbols
from .reports import AnomalyReport
from .spectra import (SpectralModelError, Spectrum, circle_dirac, drop_kernel,
                      kernel_adjust, lambda_weight, asymmetric_weight,
                      torus_laplacian_shifted, transform)


class ConfigError(ValueError):
    """Malformed configuration document."""


MODEL_KINDS = {
    "circle_dirac": {"a": float},
    "abs_circle_dirac": {"a": float},
    "lambda": {"power": float, "scale": float},
    "asymmetric": {"plus": float, "minus": float, "fill": (float, type(None))},
    "torus": {"d": int, "m2": float, "kernel": str},
}

FAMILY_KINDS = {
    "dirac_shift": {"a0": float, "rate": float},
    "scale": {"base": str, "rate": float},
    "power": {"base": str},
}

TASK_KINDS = (
    "invariants", "anomaly.mult", "anomaly.pfaffian", "anomaly.okikiolu",
    "anomaly.jacobian", "flow", "eta_variation", "phase_difference", "radul",
    "gamma_check", "log_det_variation",
)


def build_model(desc: dict) -> Spectrum:
    if not isinstance(desc, dict) or "kind" not in desc:
        raise ConfigError("model descriptor must be an object with a 'kind'")
    kind = desc["kind"]
    if kind not in MODEL_KINDS:
        raise ConfigError(f"unknown model kind {kind!r}")
    extra = set(desc) - set(MODEL_KINDS[kind]) - {"kind"}
    if extra:
        raise ConfigError(f"unknown keys {sorted(extra)} for model kind {kind!r}")
    try:
        if kind == "circle_dirac":
            return circle_dirac(float(desc["a"]))
        if kind == "abs_circle_dirac":
            return transform(circle_dirac(float(desc["a"])), "abs")
        if kind == "lambda":
            return lambda_weight(power=float(desc.get("power", 1.0)),
                                 scale=float(desc.get("scale", 1.0)))
        if kind == "asymmetric":
            fill = desc.get("fill", 1.0)
            return asymmetric_weight(float(desc.get("plus", 1.0)),
                                     float(desc.get("minus", 2.0)),
                                     None if fill is None else float(fill))
        spec = torus_laplacian_shifted(int(desc["d"]), float(desc.get("m2", 0.0)))
        kernel = desc.get("kernel", "keep")
        if kernel == "drop":
            return drop_kernel(spec)
        if kernel == "adjust":
            return kernel_adjust(spec)
        if kernel != "keep":
            raise ConfigError(f"unknown kernel policy {kernel!r}")
        return spec
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed model parameters for kind {kind!r}: {exc}")


def build_family(desc: dict, models: dict[str, Spectrum]) -> flow.OperatorFamily:
    if not isinstance(desc, dict) or "kind" not in desc:
        raise ConfigError("family descriptor must be an object with a 'kind'")
    kind = desc["kind"]
    if kind not in FAMILY_KINDS:
        raise ConfigError(f"unknown family kind {kind!r}")
    extra = set(desc) - set(FAMILY_KINDS[kind]) - {"kind"}
    if extra:
        raise ConfigError(f"unknown keys {sorted(extra)} for family kind {kind!r}")
    if kind == "dirac_shift":
        return flow.dirac_shift_family(float(desc["a0"]), float(desc.get("rate", 1.0)))
    base_name = desc.get("base")
    if base_name not in models:
        raise ConfigError(f"family references undeclared model {base_name!r}")
    if kind == "scale":
        return flow.scale_family(models[base_name], float(desc.get("rate", 1.0)))
    return flow.power_family(models[base_name])


@dataclass
class TaskConfig:
    index: int
    kind: str
    params: dict
    tolerance: float | None = None


@dataclass
class RunConfig:
    models: dict[str, Spectrum]
    families: dict[str, flow.OperatorFamily]
    tasks: list[TaskConfig]
    output_format: str = "json"
    output_path: str | None = None


def parse_config(text: str) -> RunConfig:
    """Validate a JSON config document; unknown keys are rejected."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    unknown = set(doc) - {"models", "families", "tasks", "output"}
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    models = {}
    for name, desc in (doc.get("models") or {}).items():
        models[name] = build_model(desc)
    families = {}
    for name, desc in (doc.get("families") or {}).items():
        families[name] = build_family(desc, models)
    tasks = []
    for i, tdesc in enumerate(doc.get("tasks") or []):
        if not isinstance(tdesc, dict) or "kind" not in tdesc:
            raise ConfigError(f"task {i} must be an object with a 'kind'")
        kind = tdesc["kind"]
        if kind not in TASK_KINDS:
            raise ConfigError(f"task {i}: unknown task kind {kind!r}")
        tol = tdesc.get("tolerance")
        if tol is not None:
            tol = float(tol)
            if tol <= 0:
                raise ConfigError(f"task {i}: tolerance must be positive")
        params = {k: v for k, v in tdesc.items() if k not in ("kind", "tolerance")}
        tasks.append(TaskConfig(i, kind, params, tol))
    out = doc.get("output") or {}
    unknown = set(out) - {"format", "path"}
    if unknown:
        raise ConfigError(f"unknown output keys {sorted(unknown)}")
    fmt = out.get("format", "json")
    if fmt not in ("json", "csv"):
        raise ConfigError(f"unknown output format {fmt!r}")
    cfg = RunConfig(models, families, tasks, fmt, out.get("path"))
    _validate_task_refs(cfg)
    return cfg


def _validate_task_refs(cfg: RunConfig) -> None:
    for task in cfg.tasks:
        for key, value in task.params.items():
            if key in ("model", "a", "b", "q", "q1", "q2", "c", "c_star_c") \
                    and isinstance(value, str) and value not in cfg.models:
                raise ConfigError(
                    f"task {task.index} references undeclared model {value!r}")
            if key == "family" and value not in cfg.families:
                raise ConfigError(
                    f"task {task.index} references undeclared family {value!r}")


# -- task execution ---------------------------------------------------------------


def _entry(report: AnomalyReport) -> dict:
    return report.to_json()


def _value_entry(identity: str, value: complex, reference: complex | None,
                 tolerance: float, inputs: dict) -> dict:
    rhs = value if reference is None else reference
    rep = AnomalyReport(identity=identity, lhs=value, rhs=rhs, tolerance=tolerance,
                        inputs=inputs,
                        details={} if reference is not None else {"informational": True})
    return rep.to_json()


def _closed_forms(model_desc_kind: str, spec: Spectrum, params: dict) -> dict:
    """Reference values for catalog models, where a closed form exists."""
    refs = {}
    if model_desc_kind == "circle_dirac":
        a = params["a"]
        frac = a - math.floor(a)
        if frac != 0.0:
            refs["eta"] = 1.0 - 2.0 * frac
            refs["zeta_abs0"] = 0.0
            refs["det_modulus"] = 2.0 * math.sin(math.pi * frac)
            refs["det_phase"] = 0.5 * math.pi * (1.0 - 2.0 * frac)
    elif model_desc_kind == "abs_circle_dirac":
        a = params["a"]
        frac = a - math.floor(a)
        if frac != 0.0:
            refs["eta"] = 0.0
            refs["zeta_abs0"] = 0.0
            refs["det_modulus"] = 2.0 * math.sin(math.pi * frac)
            refs["det_phase"] = 0.0
    elif model_desc_kind == "lambda":
        p = params.get("power", 1.0)
        c = params.get("scale", 1.0)
        refs["eta"] = -1.0
        refs["zeta_abs0"] = -1.0
        refs["det_modulus"] = (2.0 * math.pi) ** p / c
        refs["det_phase"] = 0.0
    return refs


def run_task(task: TaskConfig, cfg: RunConfig, tol_scale: float) -> list[dict]:
    p = task.params
    scale = tol_scale

    def tol(default: float) -> float:
        return (task.tolerance if task.tolerance is not None else default) * scale

    def model(key: str) -> Spectrum:
        name = p.get(key)
        if name is None:
            raise ConfigError(f"task {task.index} ({task.kind}) needs parameter {key!r}")
        return cfg.models[name]

    if task.kind == "invariants":
        spec = model("model")
        desc_kind = p.get("model_kind", "")
        refs = _closed_forms(desc_kind, spec, p.get("model_params", {}))
        t = tol(1e-8)
        inputs = {"model": spec.label}
        entries = []
        eta_val = invariants.eta(spec) if spec.self_adjoint else None
        if eta_val is not None:
            entries.append(_value_entry("eta", eta_val, refs.get("eta"), t, inputs))
            entries.append(_value_entry("zeta_abs0", invariants.zeta_abs_at_zero(spec),
                                        refs.get("zeta_abs0"), max(t, 1e-10), inputs))
        det = invariants.det_zeta(spec)
        entries.append(_value_entry("det_modulus", det.modulus,
                                    refs.get("det_modulus"),
                                    t * max(1.0, abs(refs.get("det_modulus", 1.0))),
                                    inputs))
        entries.append(_value_entry("det_phase", det.phase, refs.get("det_phase"),
                                    t, inputs))
        return entries
    if task.kind == "anomaly.mult":
        rep = invariants.mult_anomaly(model("a"), model("b"),
                                      tolerance=tol(invariants._default_tol(
                                          model("a"), model("b"))))
        return [_entry(rep)]
    if task.kind == "anomaly.pfaffian":
        return [_entry(invariants.pfaffian_anomaly(model("model"), tolerance=tol(1e-8)))]
    if task.kind == "anomaly.okikiolu":
        rep = invariants.okikiolu_diff(model("a"), model("q1"), model("q2"),
                                       tolerance=tol(1e-8))
        return [_entry(rep)]
    if task.kind == "anomaly.jacobian":
        c_spec = cfg.models[p["c"]] if "c" in p else None
        cc_spec = cfg.models[p["c_star_c"]] if "c_star_c" in p else None
        rep = invariants.jacobian_anomaly(model("q"), c_spec, c_star_c=cc_spec,
                                          tolerance=task.tolerance and tol(1.0))
        return [_entry(rep)]
    if task.kind == "flow":
        fam = cfg.families[p["family"]]
        result = flow.spectral_flow(fam)
        doubled = flow.spectral_flow(fam, samples=2 * flow.GRID_SAMPLES)
        entries = [_value_entry("spectral_flow_grid_independence", result.sf,
                                doubled.sf, 0.5, {"family": fam.label})]
        if "expect_sf" in p:
            entries.append(_value_entry("spectral_flow", result.sf,
                                        float(p["expect_sf"]), 0.5,
                                        {"family": fam.label}))
        if "shift_alpha" in p:
            entries.append(_entry(flow.shift_check(fam, float(p["shift_alpha"]))))
        return entries
    if task.kind == "eta_variation":
        return [_entry(flow.eta_variation_report(cfg.families[p["family"]],
                                                 tolerance=tol(1e-6)))]
    if task.kind == "phase_difference":
        return [_entry(flow.phase_difference(cfg.families[p["family"]],
                                             tolerance=tol(1e-6)))]
    if task.kind == "radul":
        return [e.to_json() for e in residue_anomaly_suite(tol(1e-8))]
    if task.kind == "gamma_check":
        q = model("q")
        a_power = p.get("a_power")
        mult = czeta.identity_multiplier(q) if a_power is None else \
            czeta.power_multiplier(q, float(a_power))
        return [_entry(czeta.gamma_relation_check(mult, q, tolerance=tol(1e-6)))]
    if task.kind == "log_det_variation":
        rep = invariants.log_det_variation(cfg.families[p["family"]],
                                           float(p.get("t", 0.0)),
                                           tolerance=tol(1e-6))
        return [_entry(rep)]
    raise ConfigError(f"unhandled task kind {task.kind!r}")


def residue_anomaly_suite(tolerance: float = 1e-8) -> list[AnomalyReport]:
    """Dual-path residue-anomaly checks: cocycle, weight dependence, dtr."""
    from .spectra import asymmetric_weight, lambda_weight

    reports = []
    a_sym = symbols.oscillation_symbol(1, Fraction(1))
    b_sym = symbols.oscillation_symbol(-1, Fraction(0))
    q_sym = symbols.xi_power_symbol(Fraction(1), Fraction(1), Fraction(2))
    symbol_val = symbols.radul_cocycle(a_sym, b_sym, q_sym)
    q_spec = asymmetric_weight(1.0, 2.0, fill=1.0)
    germ = czeta.weighted_trace_germ(
        czeta.constant_ray_multiplier(q_spec, [-1.0, 1.0], [1.0]), q_spec)
    reports.append(AnomalyReport(
        identity="radul_cocycle", lhs=complex(float(symbol_val)),
        rhs=germ.finite_part, tolerance=tolerance,
        inputs={"A": "e^{ix}|xi|", "B": "e^{-ix}", "Q": q_spec.label},
        details={"antisymmetry_defect": float(abs(
            symbols.radul_cocycle(a_sym, b_sym, q_sym)
            + symbols.radul_cocycle(b_sym, a_sym, q_sym)))}))
    # symmetric weight: residue path equals the kernel-filled mode sum
    q_sym2 = symbols.xi_power_symbol(Fraction(1))
    q_spec2 = asymmetric_weight(1.0, 1.0, fill=1.0)
    germ2 = czeta.weighted_trace_germ(
        czeta.constant_ray_multiplier(q_spec2, [-1.0, 1.0], [1.0]), q_spec2)
    reports.append(AnomalyReport(
        identity="radul_cocycle_symmetric", lhs=complex(float(
            symbols.radul_cocycle(a_sym, b_sym, q_sym2))),
        rhs=germ2.finite_part, tolerance=tolerance,
        inputs={"Q": q_spec2.label}))
    # Eq.-(5)-style weight dependence, residue vs direct mode sums
    lam = lambda_weight()
    lam2 = transform(lam, "scale", 2.0)
    inv_mult = czeta.power_multiplier(lam, -1.0)
    direct = czeta.weighted_trace_germ(inv_mult, lam).finite_part \
        - czeta.weighted_trace_germ(inv_mult, lam2).finite_part
    res_path = symbols.weight_dependence(
        symbols.xi_power_symbol(Fraction(-1)),
        symbols.multiplier_to_symbol(lam), symbols.multiplier_to_symbol(lam2))
    reports.append(AnomalyReport(
        identity="weight_dependence", lhs=direct, rhs=complex(float(res_path)),
        tolerance=tolerance, inputs={"A": "Lambda^-1", "Q1": "Lambda", "Q2": "2*Lambda"},
        details={"closed_form": 2.0 * math.log(2.0)}))
    # Eq.-(7)-style variation: residue vs finite difference of tr^{(1+t)Lambda}
    dtr_res = symbols.dtr_family(symbols.xi_power_symbol(Fraction(-1)),
                                 symbols.identity_symbol(), Fraction(1))
    h = 1e-5
    fd = (czeta.weighted_trace_germ(
        inv_mult, transform(lam, "scale", 1.0 + h)).finite_part
        - czeta.weighted_trace_germ(
            inv_mult, transform(lam, "scale", 1.0 - h)).finite_part) / (2 * h)
    reports.append(AnomalyReport(
        identity="dtr_family", lhs=fd, rhs=complex(float(dtr_res)),
        tolerance=max(tolerance, 1e-6),
        inputs={"A": "Lambda^-1", "Q_t": "(1+t)*Lambda"}))
    return reports


# -- report assembly ---------------------------------------------------------------


def run(cfg: RunConfig, jobs: int = 1, tolerance_scale: float = 1.0,
        with_timing: bool = True) -> dict:
    """Execute the config; failures are captured per task, never fatal."""

    def execute(task: TaskConfig) -> dict:
        started = time.perf_counter()
        out = {"index": task.index, "kind": task.kind}
        try:
            entries = run_task(task, cfg, tolerance_scale)
            out["status"] = "ok"
            out["entries"] = entries
            out["pass"] = all(e.get("pass", True) for e in entries)
        except Exception as exc:  # noqa: BLE001 - reported, not fatal
            out["status"] = "error"
            out["error"] = f"{type(exc).__name__}: {exc}"
            out["entries"] = []
            out["pass"] = False
        if with_timing:
            out["elapsed_s"] = round(time.perf_counter() - started, 6)
        return out

    if jobs > 1 and len(cfg.tasks) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(execute, cfg.tasks))
    else:
        results = [execute(t) for t in cfg.tasks]
    results.sort(key=lambda r: r["index"])
    doc = {
        "tool": "zetaflow",
        "version": __version__,
        "tasks": results,
        "aggregate_pass": all(r["pass"] for r in results),
    }
    if with_timing:
        doc["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    return doc


def emit(doc: dict, fmt: str = "json") -> bytes:
    """Serialize a report document with stable field ordering."""
    if fmt == "json":
        return (json.dumps(doc, sort_keys=True, separators=(",", ": "),
                           indent=1) + "\n").encode()
    if fmt != "csv":
        raise ConfigError(f"unknown output format {fmt!r}")
    buf = io.StringIO()
    buf.write("task,identity,lhs_re,lhs_im,rhs_re,rhs_im,discrepancy,pass\n")
    for tres in doc["tasks"]:
        if tres["status"] != "ok":
            buf.write(f"{tres['index']},<{tres['kind']} error>,,,,,,"
                      f"{str(False).lower()}\n")
            continue
        for e in tres["entries"]:
            buf.write(",".join([
                str(tres["index"]), e["identity"],
                repr(e["lhs"]["re"]), repr(e["lhs"]["im"]),
                repr(e["rhs"]["re"]), repr(e["rhs"]["im"]),
                repr(e["discrepancy"]), str(bool(e["pass"])).lower(),
            ]) + "\n")
    return buf.getvalue().encode()


def parse_report(blob: bytes) -> dict:
    """Inverse of emit(json): structural round-trip for stored reports."""
    return json.loads(blob.decode())


# -- built-in acceptance catalog ------------------------------------------------


def selftest_config() -> RunConfig:
    """The acceptance catalog: every identity the package certifies, end to end."""
    doc = {
        "models": {
            "D01": {"kind": "circle_dirac", "a": 0.1},
            "D025": {"kind": "circle_dirac", "a": 0.25},
            "D04": {"kind": "circle_dirac", "a": 0.4},
            "D05": {"kind": "circle_dirac", "a": 0.5},
            "absD025": {"kind": "abs_circle_dirac", "a": 0.25},
            "L": {"kind": "lambda"},
            "L2": {"kind": "lambda", "power": 2.0},
            "Lhalf": {"kind": "lambda", "power": 0.5},
            "La": {"kind": "lambda", "power": 0.7},
            "Lb": {"kind": "lambda", "power": 1.3},
            "asym0": {"kind": "asymmetric", "plus": 1.0, "minus": 2.0, "fill": None},
            "L2x": {"kind": "lambda", "scale": 2.0},
            "T1": {"kind": "torus", "d": 4, "m2": 1.0},
            "T2": {"kind": "torus", "d": 4, "m2": 2.0},
        },
        "families": {
            "crossing": {"kind": "dirac_shift", "a0": 0.25, "rate": 1.0},
            "invertible": {"kind": "dirac_shift", "a0": 0.25, "rate": 0.25},
            "scaleL": {"kind": "scale", "base": "L", "rate": 1.0},
            "powerL": {"kind": "power", "base": "L"},
        },
        "tasks": [
            {"kind": "invariants", "model": "D01",
             "model_kind": "circle_dirac", "model_params": {"a": 0.1}},
            {"kind": "invariants", "model": "D025",
             "model_kind": "circle_dirac", "model_params": {"a": 0.25}},
            {"kind": "invariants", "model": "D04",
             "model_kind": "circle_dirac", "model_params": {"a": 0.4}},
            {"kind": "invariants", "model": "L",
             "model_kind": "lambda", "model_params": {}},
            {"kind": "invariants", "model": "L2",
             "model_kind": "lambda", "model_params": {"power": 2.0}},
            {"kind": "invariants", "model": "absD025",
             "model_kind": "abs_circle_dirac", "model_params": {"a": 0.25}},
            {"kind": "anomaly.pfaffian", "model": "D01"},
            {"kind": "anomaly.pfaffian", "model": "D025"},
            {"kind": "anomaly.pfaffian", "model": "D05"},
            {"kind": "anomaly.mult", "a": "La", "b": "Lb", "tolerance": 1e-9},
            {"kind": "anomaly.mult", "a": "absD025", "b": "absD025",
             "tolerance": 1e-9},
            {"kind": "anomaly.mult", "a": "T1", "b": "T2", "tolerance": 1e-5},
            {"kind": "anomaly.okikiolu", "a": "asym0", "q1": "L", "q2": "L2x"},
            {"kind": "radul"},
            {"kind": "flow", "family": "crossing", "expect_sf": 1,
             "shift_alpha": 0.5},
            {"kind": "eta_variation", "family": "crossing"},
            {"kind": "eta_variation", "family": "invertible"},
            {"kind": "phase_difference", "family": "invertible"},
            {"kind": "gamma_check", "q": "L", "a_power": -1.0},
            {"kind": "gamma_check", "q": "L"},
            {"kind": "gamma_check", "q": "L2", "a_power": -0.5},
            {"kind": "log_det_variation", "family": "scaleL", "t": 0.0},
            {"kind": "log_det_variation", "family": "powerL", "t": 0.0},
            {"kind": "anomaly.jacobian", "q": "L", "c": "Lhalf",
             "tolerance": 1e-9},
            {"kind": "anomaly.jacobian", "q": "T1", "c_star_c": "T2",
             "tolerance": 1e-5},
        ],
    }
    return parse_config(json.dumps(doc))


# -- entry point -----------------------------------------------------------------


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="zetaflow",
        description="zeta-regularized spectral invariants and tracial anomaly checks")
    parser.add_argument("--jobs", type=int, default=1, metavar="N",
                        help="run tasks concurrently with N workers")
    parser.add_argument("--tolerance-scale", type=float, default=1.0, metavar="F",
                        help="multiply every task tolerance by F")
    parser.add_argument("--no-timestamp", action="store_true",
                        help="omit timestamp and timing fields (deterministic output)")
    parser.add_argument("--format", choices=("json", "csv"), default=None)
    parser.add_argument("--output", metavar="PATH", default=None)
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="execute a JSON task configuration")
    run_p.add_argument("config", help="path to the config document")
    sub.add_parser("selftest", help="run the built-in acceptance catalog")
    sub.add_parser("list-models", help="print the model/family/task schema")
    args = parser.parse_args(argv)

    if args.command == "list-models":
        schema = {
            "models": {k: sorted(v) for k, v in MODEL_KINDS.items()},
            "families": {k: sorted(v) for k, v in FAMILY_KINDS.items()},
            "tasks": list(TASK_KINDS),
        }
        sys.stdout.write(json.dumps(schema, indent=1, sort_keys=True) + "\n")
        return 0

    try:
        if args.command == "run":
            with open(args.config, "r", encoding="utf-8") as fh:
                cfg = parse_config(fh.read())
        else:
            cfg = selftest_config()
    except (ConfigError, OSError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2

    doc = run(cfg, jobs=max(1, args.jobs), tolerance_scale=args.tolerance_scale,
              with_timing=not args.no_timestamp)
    fmt = args.format or cfg.output_format
    blob = emit(doc, fmt)
    path = args.output or cfg.output_path
    if path:
        with open(path, "wb") as fh:
            fh.write(blob)
    else:
        sys.stdout.buffer.write(blob)
    return 0 if doc["aggregate_pass"] else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
