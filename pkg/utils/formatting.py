"""Text formatting for CLI output and the metrics log."""

from collections.abc import Iterable, Mapping

from models import EpochMetrics, EvalReport, ModelDescriptor, PropertyResult

METRIC_FIELDS = ("epoch", "train_loss", "val_loss", "mse_id", "mse_conjugated", "invariance_error", "seconds")


def _value(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, (list, tuple)):
        return ", ".join(_value(v) for v in value) or "-"
    if value is None:
        return "-"
    return str(value)


def format_config(title: str, values: Mapping[str, object]) -> str:
    """Resolved configuration, one ``key: value`` per line, keys sorted."""
    lines = [f"# {title}"]
    width = max((len(key) for key in values), default=0)
    for key in sorted(values):
        lines.append(f"{key.ljust(width)} : {_value(values[key])}")
    return "\n".join(lines)


def format_metrics_line(metrics: EpochMetrics) -> str:
    """One tab-separated record of the metrics log; floats use ``repr`` so they round-trip."""
    return "\t".join(repr(getattr(metrics, name)) for name in METRIC_FIELDS)


def parse_metrics_line(line: str) -> EpochMetrics:
    fields = line.rstrip("\n").split("\t")
    if len(fields) != len(METRIC_FIELDS):
        raise ValueError(f"expected {len(METRIC_FIELDS)} tab-separated fields, got {len(fields)}")
    return EpochMetrics(**dict(zip(METRIC_FIELDS, fields)))


def format_eval_report(report: EvalReport) -> str:
    return "\n".join(
        [
            "# Evaluation",
            f"mse_id           : {report.mse_id:.6e}",
            f"mse_conjugated   : {report.mse_conjugated:.6e}  (M={report.M}, sigma={report.group_sigma:g})",
            f"invariance_error : {report.invariance_error:.3e}",
            f"wall_time        : {report.wall_time:.2f}s",
        ]
    )


def format_audit_report(results: Iterable[PropertyResult]) -> str:
    """Per-property max deviation against its tolerance."""
    results = list(results)
    lines = ["# Audit"]
    if not results:
        lines.append("(no properties checked)")
        return "\n".join(lines)
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        detail = f"  {r.detail}" if r.detail else ""
        lines.append(f"{status}  {r.name.ljust(width)}  {r.deviation:.3e} <= {r.tolerance:.1e}{detail}")
    failed = sum(1 for r in results if not r.passed)
    lines.append(f"{len(results) - failed}/{len(results)} properties passed")
    return "\n".join(lines)


def format_gradcheck(per_layer: Mapping[str, float], max_rel_err: float) -> str:
    lines = ["# Gradient check"]
    for name, err in per_layer.items():
        lines.append(f"{name:<10} {err:.3e}")
    lines.append(f"max_rel_err {max_rel_err:.3e}")
    return "\n".join(lines)


def format_model_header(descriptor: ModelDescriptor) -> str:
    values: dict[str, object] = {
        "kind": descriptor.kind,
        "algebra": descriptor.algebra,
        "n": descriptor.n,
        "form": descriptor.form,
        "layers": [f"{s.kind}({s.in_channels}->{s.out_channels})" for s in descriptor.layers],
        "head_widths": descriptor.head_widths,
    }
    if descriptor.state is not None:
        values["epoch"] = descriptor.state.epoch
        values["adam_step"] = descriptor.state.adam_step
        values["best_val"] = descriptor.state.best_val
    return format_config("RLNM model", values)
