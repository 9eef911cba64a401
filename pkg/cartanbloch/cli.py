# File: cartanbloch/cli.py
import functools
import json
import logging
import time

import click
import numpy as np

from cartanbloch import __version__
from cartanbloch.automorphisms import identity_battery
from cartanbloch.compactness import (
    SamplerSpec,
    probe_df,
    profile_df,
    ratio_profile,
    sequence_probe,
)
from cartanbloch.constants import (
    DEFAULT_A_PARAM,
    DEFAULT_DELTAS,
    DEFAULT_EPSILONS,
    DEFAULT_WORKERS,
    IDENTITY_TOL,
    LOG_LEVEL,
    REPORT_TIMINGS,
)
from cartanbloch.errors import CartanError, DescriptorError
from cartanbloch.geometry.domains import (
    Kind,
    as_point,
    as_tangent,
    boundary_distance,
    dimension,
    svd_normal_form,
    type_i,
)
from cartanbloch.geometry.metrics import bergman_form, metric_matrix
from cartanbloch.io.config import RunConfig, load_config, parse_array
from cartanbloch.io.report import (
    TESTFN_COLUMNS,
    Report,
    df_from_records,
    write_report,
)
from cartanbloch.testfns import (
    Case,
    build_general,
    case1_lower_bound,
    decay_on_compact,
    ratio_at,
    sampled_bloch_norm,
)

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Report builders
# ---------------------------------------------------------------------------


def _meta(cfg: RunConfig, seed=None) -> dict:
    return {
        "config_hash": cfg.hash,
        "seed": seed,
        "tool_version": __version__,
    }


def _unit(dim: int) -> np.ndarray:
    e = np.zeros(dim, dtype=complex)
    e[0] = 1.0
    return e


def cmd_metric(cfg: RunConfig) -> Report:
    """Metric matrix, eigenvalue range and ``H_z(u, u)`` at one point."""
    d = cfg.domain
    if d is None:
        raise DescriptorError("metric needs a domain")
    dim = dimension(d)
    z_raw = cfg.get("z")
    z = as_point(
        d, parse_array(z_raw) if z_raw is not None else np.zeros(dim)
    )
    u_raw = cfg.get("u")
    u = parse_array(u_raw) if u_raw is not None else _unit(dim)
    metric = metric_matrix(d, z)
    low, high = metric.eigenvalue_range()
    records = [
        {"row": i, "col": j, "re": v.real, "im": v.imag}
        for (i, j), v in np.ndenumerate(metric.gram)
    ]
    return Report(
        command="metric",
        meta=_meta(cfg),
        summary={
            "domain": d.to_dict(),
            "boundary_distance": boundary_distance(d, z),
            "eigenvalue_min": low,
            "eigenvalue_max": high,
            "H": bergman_form(d, z, u),
        },
        tables={
            "gram": df_from_records(records, ["row", "col", "re", "im"])
        },
    )


def cmd_check_identities(cfg: RunConfig) -> Report:
    """Möbius identity battery; exit code 1 when a residual is too large."""
    seed = cfg.require_seed()
    m = int(cfg.get("m", 2))
    n = int(cfg.get("n", 3))
    samples = int(cfg.get("samples", 100))
    table = identity_battery(m, n, samples, seed, tol=IDENTITY_TOL)
    failed = table.loc[~table["passed"], "identity"].tolist()
    if failed:
        log.error("identities above %.1e: %s", IDENTITY_TOL, failed)
    return Report(
        command="check-identities",
        meta=_meta(cfg, seed),
        summary={
            "domain": type_i(m, n).to_dict(),
            "tolerance": IDENTITY_TOL,
            "failed": failed,
        },
        tables={"identities": table},
        exit_code=1 if failed else 0,
    )


def _sampler(cfg: RunConfig) -> SamplerSpec:
    default = SamplerSpec()
    return SamplerSpec(
        deltas=tuple(float(x) for x in cfg.get("deltas", DEFAULT_DELTAS)),
        epsilons=tuple(
            float(x) for x in cfg.get("epsilons", DEFAULT_EPSILONS)
        ),
        n_starts=int(cfg.get("n_starts", default.n_starts)),
        n_rays=int(cfg.get("n_rays", default.n_rays)),
        n_uniform=int(cfg.get("n_uniform", default.n_uniform)),
        workers=int(cfg.get("workers", DEFAULT_WORKERS)),
    )


def cmd_ratio_profile(cfg: RunConfig) -> Report:
    """Distortion-ratio profile and its evidence verdict."""
    seed = cfg.require_seed()
    holo = cfg.holo_map()
    spec = _sampler(cfg)
    profile = ratio_profile(holo, spec, seed)
    table = profile_df(profile)
    return Report(
        command="ratio-profile",
        meta=_meta(cfg, seed),
        summary={
            "domain": holo.source.to_dict(),
            "family": holo.family,
            "verdict": profile.verdict.value,
            "scope": "evidence at sampled scale",
            "samples": len(profile.samples),
            "deltas": list(spec.deltas),
            "epsilons": list(spec.epsilons),
        },
        tables={"profile": table},
    )


def _scaled(A: np.ndarray, r: float) -> np.ndarray:
    top = svd_normal_form(A).lambdas[0]
    return A * (r / top)


def cmd_testfn(cfg: RunConfig) -> Report:
    """Boundedness, decay and non-vanishing checks for one test function."""
    seed = cfg.require_seed()
    d = cfg.domain or type_i(2, 2)
    if d.kind is not Kind.I:
        raise DescriptorError("test functions are built on R_I")
    m, n = d.matrix_shape
    a_param = float(cfg.get("a_param", DEFAULT_A_PARAM))
    samples = int(cfg.get("samples", 200))
    rho = float(cfg.get("rho", 0.5))
    if cfg.get("a_point") is not None:
        A = as_point(d, parse_array(cfg.get("a_point"))).matrix
    else:
        A = np.zeros((m, n), dtype=complex)
        A[0, 0] = 0.99
    w_raw = cfg.get("w")
    w = (
        as_tangent(d, parse_array(w_raw)).coords
        if w_raw is not None
        else _unit(dimension(d))
    )
    a_point = as_point(d, A)
    f = build_general(a_point, w, a_param, domain=d)

    rows = []
    seminorm = sampled_bloch_norm(f, samples, seed)
    bound = 4.0 / np.sqrt(m + n) if f.case is Case.LOG_1 else None
    rows.append(
        {
            "check": "bounded_seminorm",
            "value": seminorm,
            "bound": bound,
            "passed": bool(
                np.isfinite(seminorm)
                and (bound is None or seminorm <= bound * (1 + 1e-9))
            ),
        }
    )
    decays = []
    for r in cfg.get("r_grid", [0.9, 0.99, 0.999]):
        f_r = build_general(as_point(d, _scaled(A, float(r))), w, a_param)
        previous = decays[-1] if decays else None
        decays.append(decay_on_compact(f_r, rho, samples, seed))
        rows.append(
            {
                "check": f"decay_r={float(r):g}",
                "value": decays[-1],
                "bound": previous,
                "passed": bool(previous is None or decays[-1] <= previous),
            }
        )
    rows.append(
        {
            "check": "decay_trend",
            "value": decays[-1] if decays else None,
            "bound": decays[0] if decays else None,
            "passed": bool(len(decays) < 2 or decays[-1] < decays[0]),
        }
    )
    ratio = ratio_at(f, a_point, w)
    lower = (
        case1_lower_bound(f.r, a_param, m, n) if f.case is Case.LOG_1 else 0.0
    )
    rows.append(
        {
            "check": "ratio_nonvanishing",
            "value": ratio,
            "bound": lower,
            "passed": bool(ratio > 0 and ratio >= lower * (1 - 1e-9)),
        }
    )
    table = df_from_records(rows, TESTFN_COLUMNS)
    return Report(
        command="testfn",
        meta=_meta(cfg, seed),
        summary={
            "domain": d.to_dict(),
            "case": f.case.value,
            "r": f.r,
            "a_param": a_param,
            "all_passed": bool(table["passed"].all()),
        },
        tables={"checks": table},
    )


def cmd_sequence_probe(cfg: RunConfig) -> Report:
    """Bloch-seminorm estimates of pulled-back test functions along r."""
    seed = cfg.require_seed()
    holo = cfg.holo_map()
    r_grid = [float(r) for r in cfg.get("r_grid", [0.9, 0.99, 0.999])]
    rows = sequence_probe(
        holo,
        r_grid,
        a_param=float(cfg.get("a_param", DEFAULT_A_PARAM)),
        samples=int(cfg.get("samples", 200)),
        seed=seed,
    )
    return Report(
        command="sequence-probe",
        meta=_meta(cfg, seed),
        summary={
            "domain": holo.source.to_dict(),
            "family": holo.family,
            "bounded_away": not rows,
        },
        tables={"probe": probe_df(rows)},
    )


# ---------------------------------------------------------------------------
# Command line
# ---------------------------------------------------------------------------


def _run_options(func):
    @click.option(
        "--config",
        "config_path",
        type=click.Path(exists=True, dir_okay=False),
        default=None,
        help="JSON run configuration",
    )
    @click.option("--out", "out_path", type=click.Path(), default=None)
    @click.option(
        "--format",
        "fmt",
        type=click.Choice(["json", "csv", "xlsx"]),
        default=None,
        help="Report format (default from config, else json)",
    )
    @click.option("--seed", type=int, default=None, help="Overrides config")
    @click.option("--samples", type=int, default=None)
    @click.option("--workers", type=int, default=None)
    @functools.wraps(func)
    def wrapper(config_path, out_path, fmt, seed, samples, workers):
        return _execute(
            func, config_path, out_path, fmt, seed, samples, workers
        )

    return wrapper


def _execute(builder, config_path, out_path, fmt, seed, samples, workers):
    ctx = click.get_current_context()
    started = time.perf_counter()
    try:
        cfg = load_config(config_path)
        if seed is not None:
            cfg.seed = seed
        if samples is not None:
            cfg.analysis["samples"] = samples
        if workers is not None:
            cfg.analysis["workers"] = workers
        report = builder(cfg)
        if REPORT_TIMINGS:
            report.meta["elapsed_s"] = time.perf_counter() - started
        text = write_report(
            report,
            out_path or cfg.output_path,
            fmt or cfg.output_format,
        )
    except CartanError as exc:
        log.error("%s", exc)
        click.echo(json.dumps(exc.as_record(), sort_keys=True))
        ctx.exit(2)
    except (ImportError, KeyError, TypeError, ValueError) as exc:
        log.error("invalid input: %s", exc)
        record = DescriptorError(str(exc)).as_record()
        click.echo(json.dumps(record, sort_keys=True))
        ctx.exit(2)
    if text is not None:
        click.echo(text, nl=False)
    ctx.exit(report.exit_code)


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Debug logging")
@click.version_option(__version__)
def main(verbose):
    """cartanbloch – Bergman metrics and composition-operator diagnostics."""
    level = logging.DEBUG if verbose else getattr(logging, LOG_LEVEL, 20)
    logging.basicConfig(level=level)


@main.command()
@_run_options
def metric(cfg):
    """Metric matrix of the configured domain at a point."""
    return cmd_metric(cfg)


@main.command(name="check-identities")
@_run_options
def check_identities(cfg):
    """Run the Möbius automorphism identity battery."""
    return cmd_check_identities(cfg)


@main.command(name="ratio-profile")
@_run_options
def ratio_profile_cmd(cfg):
    """Distortion-ratio profile and compactness evidence."""
    return cmd_ratio_profile(cfg)


@main.command()
@_run_options
def testfn(cfg):
    """Check a test function against its three defining conditions."""
    return cmd_testfn(cfg)


@main.command(name="sequence-probe")
@_run_options
def sequence_probe_cmd(cfg):
    """Probe seminorms of pulled-back test functions."""
    return cmd_sequence_probe(cfg)


if __name__ == "__main__":
    main()
