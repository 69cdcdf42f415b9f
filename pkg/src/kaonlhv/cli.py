"""Command-line front end.  Every analysis is a subcommand with
machine-readable CSV or JSON output and a run manifest for provenance.

    lhv constants            show the physical inputs with provenance
    lhv entropy-surface      entanglement entropy over the admixture plane (CSV)
    lhv fig2                 contamination histogram (CSV)
    lhv budget               misidentification budget for a window (JSON)
    lhv thresholds           the two minimum-efficiency thresholds (JSON)
    lhv probabilities        measured Hardy-set rates, margin, thresholds (JSON)
    lhv simulate             Monte Carlo events plus verdict
    lhv verdict              re-score an existing event file

JSON outputs embed the manifest under a "manifest" key; CSV outputs carry it
as a single leading "# manifest ..." comment line.  Event files are pure
record streams (no manifest) so identical seeds give byte-identical files.
All numbers are emitted locale-independently with 12 significant digits.
"""

from __future__ import annotations

import json
import sys
from datetime import datetime, timezone

import click

from . import __version__
from .constants import PhysicalConstants, default_constants, load_constants
from .decay import TaggingWindow, contamination_histogram, misid_budget
from .lhv import build_evading_ensemble
from .pairs import build_regenerated_pair_strangeness, entropy_surface
from .predictions import (
    DetectionModel,
    ch_margin,
    measured_probabilities,
    min_efficiency_ch,
    min_efficiency_direct,
)
from .simulate import (
    TAG_NAMES,
    falsification_verdict,
    monte_carlo_run,
    write_events,
)

# canonical misidentification budget for the default (10, 21) window
_DEFAULT_KS_MISID = 7.3e-4
_DEFAULT_KL_MISID = 5.7e-5
_DEFAULT_WINDOW = "10:21"


def _fmt(x: float) -> str:
    return f"{float(x):.12g}"


def _round12(obj):
    if isinstance(obj, float):
        return float(_fmt(obj))
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    return obj


def _manifest(ctx: click.Context, constants: PhysicalConstants, **parameters) -> dict:
    seed = parameters.get("seed")
    return {
        "subcommand": ctx.command.name,
        "parameters": _round12(parameters),
        "constants_fingerprint": constants.fingerprint(),
        "version": __version__,
        "seed": seed,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def _open_out(out: str | None):
    if out is None or out == "-":
        return sys.stdout, False
    return open(out, "w", encoding="utf-8"), True


def _emit_json(payload: dict, out: str | None) -> None:
    stream, close = _open_out(out)
    try:
        json.dump(_round12(payload), stream, indent=2)
        stream.write("\n")
    finally:
        if close:
            stream.close()


def _emit_csv(header: str, rows, manifest: dict, out: str | None) -> None:
    stream, close = _open_out(out)
    try:
        stream.write("# manifest " + json.dumps(_round12(manifest)) + "\n")
        stream.write(header + "\n")
        for row in rows:
            stream.write(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row) + "\n")
    finally:
        if close:
            stream.close()


def _load(constants_path: str | None) -> PhysicalConstants:
    if constants_path is None:
        return default_constants()
    return load_constants(constants_path)


def common_options(command):
    for decorator in (
        click.option("--constants", "constants_path", type=click.Path(), default=None,
                     help="Constants file overriding the shipped default."),
        click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=None,
                     help="Output format (commands have a natural default)."),
        click.option("--out", "out", type=click.Path(), default=None,
                     help="Output path (default: stdout)."),
        click.option("--seed", "seed", type=int, default=0, show_default=True,
                     help="Random seed where applicable."),
    ):
        command = decorator(command)
    return command


def _fail(exc: BaseException) -> "click.exceptions.Exit":
    click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
    return click.exceptions.Exit(1)


@click.group()
@click.version_option(version=__version__, prog_name="lhv")
def cli():
    """Entangled neutral-kaon pair analysis toolkit."""


@cli.command("constants")
@common_options
@click.pass_context
def cmd_constants(ctx, constants_path, fmt, out, seed):
    """Print the physical constants with their provenance."""
    try:
        c = _load(constants_path)
    except Exception as exc:
        raise _fail(exc)
    manifest = _manifest(ctx, c, constants_file=constants_path)
    scalars = {
        "lifetime_unit": c.lifetime_unit,
        "tau_S": c.tau_S,
        "tau_L": c.tau_L,
        "gamma_S": c.gamma_S,
        "gamma_L": c.gamma_L,
        "delta_m": c.delta_m,
        "ks_kl_overlap": c.ks_kl_overlap,
        "lifetime_ratio": c.lifetime_ratio,
    }
    if fmt == "json":
        payload = {
            "manifest": manifest,
            "constants": scalars,
            "provenance": dict(c.provenance),
            "branching_table": [
                {
                    "channel": e.channel,
                    "parent": e.parent.value,
                    "ratio": e.ratio,
                    "tag_class": e.tag_class.value,
                    "provenance": e.provenance,
                }
                for e in c.branching_table
            ],
        }
        _emit_json(payload, out)
    elif fmt == "csv":
        rows = [("constant", k, _fmt(v) if isinstance(v, float) else v,
                 c.provenance.get(k, "")) for k, v in scalars.items()]
        rows += [
            ("branching", f"{e.parent.value} -> {e.channel}", _fmt(e.ratio),
             f"{e.tag_class.value}; {e.provenance}")
            for e in c.branching_table
        ]
        _emit_csv("kind,name,value,provenance", rows, manifest, out)
    else:
        stream, close = _open_out(out)
        try:
            for k, v in scalars.items():
                value = _fmt(v) if isinstance(v, float) else v
                note = c.provenance.get(k, "")
                stream.write(f"{k:16s} {value:<22} {note}\n")
            stream.write("\nbranching table (channel, parent, ratio, tag class):\n")
            for e in c.branching_table:
                stream.write(
                    f"  {e.channel:12s} {e.parent.value:4s} {_fmt(e.ratio):<12} "
                    f"{e.tag_class.value:10s} {e.provenance}\n"
                )
        finally:
            if close:
                stream.close()


@cli.command("entropy-surface")
@common_options
@click.option("--grid", "grid_n", type=int, default=81, show_default=True,
              help="Points per axis.")
@click.option("--re-min", type=float, default=-2.0, show_default=True)
@click.option("--re-max", type=float, default=2.0, show_default=True)
@click.option("--im-min", type=float, default=-2.0, show_default=True)
@click.option("--im-max", type=float, default=2.0, show_default=True)
@click.pass_context
def cmd_entropy_surface(ctx, constants_path, fmt, out, seed, grid_n, re_min, re_max, im_min, im_max):
    """Entanglement entropy of the regenerated pair over the admixture plane."""
    try:
        c = _load(constants_path)
        table = entropy_surface((re_min, re_max), (im_min, im_max), grid_n)
    except Exception as exc:
        raise _fail(exc)
    manifest = _manifest(ctx, c, grid=grid_n, re_min=re_min, re_max=re_max,
                         im_min=im_min, im_max=im_max)
    if fmt == "json":
        _emit_json({"manifest": manifest,
                    "rows": [[float(a), float(b), float(s)] for a, b, s in table]}, out)
    else:
        _emit_csv("re_R,im_R,entropy", ([float(a), float(b), float(s)] for a, b, s in table),
                  manifest, out)


@cli.command("fig2")
@common_options
@click.option("--bins", "bins_spec", default="18:23:1", show_default=True,
              help="Histogram bins as START:END:WIDTH (tau_S units).")
@click.pass_context
def cmd_fig2(ctx, constants_path, fmt, out, seed, bins_spec):
    """Contamination histogram: CP-violating K_L two-pion decays over genuine
    K_S two-pion decays, per bin, for pairs alive at 10 tau_S."""
    try:
        c = _load(constants_path)
        parts = bins_spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"expected START:END:WIDTH, got {bins_spec!r}")
        rows = contamination_histogram(float(parts[0]), float(parts[1]), float(parts[2]), c)
    except Exception as exc:
        raise _fail(exc)
    manifest = _manifest(ctx, c, bins=bins_spec)
    if fmt == "json":
        _emit_json({"manifest": manifest, "rows": [list(r) for r in rows]}, out)
    else:
        _emit_csv("bin_start,bin_end,ratio", ([a, b, r] for a, b, r in rows), manifest, out)


@cli.command("budget")
@common_options
@click.option("--window", "window_spec", default=_DEFAULT_WINDOW, show_default=True,
              help="Tagging window T0:T1 (tau_S units).")
@click.pass_context
def cmd_budget(ctx, constants_path, fmt, out, seed, window_spec):
    """Misidentification budget for a tagging window."""
    try:
        c = _load(constants_path)
        window = TaggingWindow.parse(window_spec)
        budget = misid_budget(window, c)
    except Exception as exc:
        raise _fail(exc)
    manifest = _manifest(ctx, c, window=window_spec)
    payload = {
        "manifest": manifest,
        "window": {"t0": window.t0, "t1": window.t1},
        "undecayed_fraction": budget.undecayed_fraction,
        "untaggable_fraction": budget.untaggable_fraction,
        "ks_misid": budget.ks_misid,
        "kl_misid": budget.kl_misid,
        "constants_fingerprint": c.fingerprint(),
    }
    if fmt == "csv":
        rows = [(k, _fmt(v)) for k, v in payload.items()
                if isinstance(v, float)]
        _emit_csv("field,value", rows, manifest, out)
    else:
        _emit_json(payload, out)


def _resolve_misid(c, window_spec, m_s, m_l):
    """Explicit --m-s/--m-l win; --window recomputes from the constants; the
    canonical (10, 21) budget otherwise."""
    if window_spec is not None:
        window = TaggingWindow.parse(window_spec)
        budget = misid_budget(window, c)
        return window, (budget.ks_misid if m_s is None else m_s), (
            budget.kl_misid if m_l is None else m_l)
    window = TaggingWindow.parse(_DEFAULT_WINDOW)
    return window, (m_s if m_s is not None else _DEFAULT_KS_MISID), (
        m_l if m_l is not None else _DEFAULT_KL_MISID)


@cli.command("thresholds")
@common_options
@click.option("--m-s", "m_s", type=float, default=None,
              help=f"K_S misidentification probability [default: {_DEFAULT_KS_MISID}].")
@click.option("--m-l", "m_l", type=float, default=None,
              help=f"K_L misidentification probability [default: {_DEFAULT_KL_MISID}].")
@click.option("--window", "window_spec", default=None,
              help="Recompute the budget for this window T0:T1 instead.")
@click.pass_context
def cmd_thresholds(ctx, constants_path, fmt, out, seed, m_s, m_l, window_spec):
    """Minimum identification efficiencies for both falsification routes."""
    try:
        c = _load(constants_path)
        window, ks_misid, kl_misid = _resolve_misid(c, window_spec, m_s, m_l)
        direct = min_efficiency_direct(ks_misid) if ks_misid > 0 else 0.0
        ch = min_efficiency_ch(ks_misid, kl_misid)
    except Exception as exc:
        raise _fail(exc)
    manifest = _manifest(ctx, c, m_s=m_s, m_l=m_l, window=window_spec)
    payload = {
        "manifest": manifest,
        "inputs": {"ks_misid": ks_misid, "kl_misid": kl_misid,
                   "window": {"t0": window.t0, "t1": window.t1}},
        "min_efficiency_direct": direct,
        "min_efficiency_ch": ch,
    }
    if fmt == "csv":
        rows = [("min_efficiency_direct", _fmt(direct)), ("min_efficiency_ch", _fmt(ch))]
        _emit_csv("field,value", rows, manifest, out)
    else:
        _emit_json(payload, out)


@cli.command("probabilities")
@common_options
@click.option("--eta", type=float, default=1.0, show_default=True,
              help="K0 identification efficiency.")
@click.option("--eta-prime", type=float, default=1.0, show_default=True,
              help="K0bar identification efficiency.")
@click.option("--m-s", "m_s", type=float, default=None,
              help=f"K_S misidentification probability [default: {_DEFAULT_KS_MISID}].")
@click.option("--m-l", "m_l", type=float, default=None,
              help=f"K_L misidentification probability [default: {_DEFAULT_KL_MISID}].")
@click.option("--window", "window_spec", default=None,
              help="Recompute the budget for this window T0:T1 instead.")
@click.pass_context
def cmd_probabilities(ctx, constants_path, fmt, out, seed, eta, eta_prime, m_s, m_l, window_spec):
    """Measured Hardy-set probabilities, margin, and thresholds."""
    try:
        c = _load(constants_path)
        window, ks_misid, kl_misid = _resolve_misid(c, window_spec, m_s, m_l)
        d = DetectionModel(eta=eta, eta_prime=eta_prime, ks_misid=ks_misid,
                           kl_misid=kl_misid, window=window)
        measured = measured_probabilities(d)
    except Exception as exc:
        raise _fail(exc)
    manifest = _manifest(ctx, c, eta=eta, eta_prime=eta_prime, m_s=m_s, m_l=m_l,
                         window=window_spec)
    payload = {
        "manifest": manifest,
        "inputs": {"eta": eta, "eta_prime": eta_prime, "ks_misid": ks_misid,
                   "kl_misid": kl_misid, "window": {"t0": window.t0, "t1": window.t1}},
        "probabilities": measured.as_dict(),
        "ch_margin": ch_margin(measured),
        "min_efficiency_direct": min_efficiency_direct(ks_misid) if ks_misid > 0 else 0.0,
        "min_efficiency_ch": min_efficiency_ch(ks_misid, kl_misid),
    }
    if fmt == "csv":
        rows = [(k, _fmt(v)) for k, v in measured.as_dict().items()]
        rows.append(("ch_margin", _fmt(payload["ch_margin"])))
        _emit_csv("field,value", rows, manifest, out)
    else:
        _emit_json(payload, out)


@cli.command("simulate")
@common_options
@click.option("--source", type=click.Choice(["qm", "evading"]), required=True,
              help="Quantum state or the evading hidden-variable ensemble.")
@click.option("--eta", type=float, required=True, help="K0 identification efficiency.")
@click.option("--eta-prime", type=float, default=None,
              help="K0bar identification efficiency [default: same as --eta].")
@click.option("--window", "window_spec", default=_DEFAULT_WINDOW, show_default=True,
              help="Tagging window T0:T1 (tau_S units).")
@click.option("--events", "n_events", type=float, required=True,
              help="Number of events (scientific notation accepted).")
@click.option("--m-s", "m_s", type=float, default=_DEFAULT_KS_MISID, show_default=True,
              help="K_S misidentification probability.")
@click.option("--m-l", "m_l", type=float, default=_DEFAULT_KL_MISID, show_default=True,
              help="K_L misidentification probability.")
@click.option("--ll-real", type=float, default=-1.0, show_default=True,
              help="Re of the K_L K_L admixture for the qm source.")
@click.option("--ll-imag", type=float, default=0.0, show_default=True,
              help="Im of the K_L K_L admixture for the qm source.")
@click.option("--workers", type=int, default=1, show_default=True,
              help="Worker threads (identical output for any value).")
@click.pass_context
def cmd_simulate(ctx, constants_path, fmt, out, seed, source, eta, eta_prime, window_spec,
                 n_events, m_s, m_l, ll_real, ll_imag, workers):
    """Generate Monte Carlo events and score the falsification verdict.

    Events stream to --out (or stdout); the verdict JSON goes to stdout when
    events are written to a file, to stderr otherwise.
    """
    try:
        c = _load(constants_path)
        eta_prime = eta if eta_prime is None else eta_prime
        window = TaggingWindow.parse(window_spec)
        d = DetectionModel(eta=eta, eta_prime=eta_prime, ks_misid=m_s, kl_misid=m_l,
                           window=window)
        n = int(n_events)
        if source == "qm":
            src = build_regenerated_pair_strangeness(complex(ll_real, ll_imag))
        else:
            src = build_evading_ensemble(d, c)
        events, verdict = monte_carlo_run(src, d, n, seed, workers=workers, constants=c)
    except Exception as exc:
        raise _fail(exc)

    manifest = _manifest(ctx, c, source=source, eta=eta, eta_prime=eta_prime,
                         window=window_spec, events=n, seed=seed, m_s=m_s, m_l=m_l,
                         ll_real=ll_real, ll_imag=ll_imag, workers=workers)
    stream, close = _open_out(out)
    try:
        write_events(events, stream)
    finally:
        if close:
            stream.close()
    payload = {"manifest": manifest, "verdict": verdict.as_dict()}
    if close:
        _emit_json(payload, None)
    else:
        json.dump(_round12(payload), sys.stderr, indent=2)
        sys.stderr.write("\n")


@cli.command("verdict")
@common_options
@click.option("--events", "events_path", type=click.Path(exists=True), required=True,
              help="Event file produced by `lhv simulate`.")
@click.option("--eta", type=float, required=True, help="K0 identification efficiency.")
@click.option("--eta-prime", type=float, default=None,
              help="K0bar identification efficiency [default: same as --eta].")
@click.option("--window", "window_spec", default=_DEFAULT_WINDOW, show_default=True)
@click.option("--m-s", "m_s", type=float, default=_DEFAULT_KS_MISID, show_default=True)
@click.option("--m-l", "m_l", type=float, default=_DEFAULT_KL_MISID, show_default=True)
@click.pass_context
def cmd_verdict(ctx, constants_path, fmt, out, seed, events_path, eta, eta_prime,
                window_spec, m_s, m_l):
    """Re-score an event file against both falsification conditions."""
    try:
        c = _load(constants_path)
        eta_prime = eta if eta_prime is None else eta_prime
        d = DetectionModel(eta=eta, eta_prime=eta_prime, ks_misid=m_s, kl_misid=m_l,
                           window=TaggingWindow.parse(window_spec))
        tag_index = {name: i for i, name in enumerate(TAG_NAMES)}
        counts = {"k0_k0bar": 0, "k0_kl": 0, "kl_k0bar": 0, "ks_ks": 0}
        n = 0
        with open(events_path, encoding="utf-8") as f:
            header = f.readline().strip()
            if header != "event_id,left_tag,right_tag,left_t,right_t,truth":
                raise ValueError(f"unrecognized event file header: {header!r}")
            for line in f:
                fields = line.rstrip("\n").split(",")
                lt, rt = tag_index[fields[1]], tag_index[fields[2]]
                n += 1
                if lt == 1 and rt == 2:
                    counts["k0_k0bar"] += 1
                elif lt == 1 and rt == 4:
                    counts["k0_kl"] += 1
                elif lt == 4 and rt == 2:
                    counts["kl_k0bar"] += 1
                elif lt == 3 and rt == 3:
                    counts["ks_ks"] += 1
        report = falsification_verdict(counts, n, d)
    except Exception as exc:
        raise _fail(exc)
    manifest = _manifest(ctx, c, events=events_path, eta=eta, eta_prime=eta_prime,
                         window=window_spec, m_s=m_s, m_l=m_l)
    _emit_json({"manifest": manifest, "verdict": report.as_dict()}, out)


def main():
    cli()


if __name__ == "__main__":
    main()
