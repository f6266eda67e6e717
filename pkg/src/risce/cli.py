"""Command-line front end.

Subcommands run the three sweeps, inspect a single greedy partition, or
just validate a config file.  Configs are flat key=value files; later
`key=value` arguments override file entries.  Sweep axes are given as
comma-separated lists on the relevant key (b for the pilot sweep, l_rb /
l_ur for the scatterer sweep, q for the group sweep).
"""

import argparse
import dataclasses
import json
import logging
import os
import sys
import tempfile

from . import __version__
from . import grouping
from . import sim
from .channel import Geometry, LinearArraySpec, PlanarArraySpec
from .sim import SimConfig

logger = logging.getLogger("risce.cli")

CSV_HEADER = ("sweep,point,method,T,Q,B,L_rb,L_ur,snr_db,trials,"
              "mean_nmse,median_nmse,mean_worst_cond,mean_est_seconds,"
              "seed,partition_hash")

_SCALAR_INT = ("n", "m", "trials", "seed")
_LIST_INT = ("q", "b", "l_rb", "l_ur")
_SCALAR_FLOAT = ("snr_db", "f_hat_rel_error")
_GEO_FLOAT = ("user_region_radius", "carrier_frequency", "bs_spacing_wl",
              "ris_spacing_wl", "los_kappa")
_GEO_VEC = ("bs_position", "ris_position", "user_region_center")
_GEO_INT = ("ris_rows",)


class ConfigError(Exception):
    pass


def _parse_int(key, raw):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"key {key}: expected integer, got {raw!r}")


def _parse_float(key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"key {key}: expected number, got {raw!r}")


def _parse_entry(key, raw):
    """One config entry -> typed value; unknown keys are rejected."""
    raw = raw.strip()
    if key in _SCALAR_INT:
        return _parse_int(key, raw)
    if key in _LIST_INT:
        return [_parse_int(key, part) for part in raw.split(",")]
    if key in _SCALAR_FLOAT:
        return _parse_float(key, raw)
    if key == "methods":
        return tuple(part.strip() for part in raw.split(",") if part.strip())
    if key.startswith("geometry."):
        sub = key[len("geometry."):]
        if sub in _GEO_FLOAT:
            return _parse_float(key, raw)
        if sub in _GEO_INT:
            return _parse_int(key, raw)
        if sub in _GEO_VEC:
            parts = raw.split(",")
            if len(parts) != 3:
                raise ConfigError(f"key {key}: expected x,y,z triple")
            return tuple(_parse_float(key, p) for p in parts)
        raise ConfigError(f"unknown geometry key: {key}")
    raise ConfigError(f"unknown config key: {key}")


def _read_pairs(path):
    try:
        text = open(path, "r", encoding="utf-8").read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}")
    pairs = []
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        pairs.append((key.strip(), raw))
    return pairs


def _pick_rows(m, explicit):
    """Panel row count: explicit if given, else the squarest 2^k split."""
    if explicit is not None:
        if explicit < 1 or m % explicit:
            raise ConfigError(
                f"geometry.ris_rows={explicit} does not divide m={m}")
        return explicit
    k = m.bit_length() - 1
    if 2 ** k != m:
        raise ConfigError(f"m={m} must be a power of two")
    return 2 ** (k // 2)


def parse_config(path, overrides=()):
    """Config file plus overrides -> (SimConfig, sweep-axis lists).

    Keys that accept comma lists (q, b, l_rb, l_ur) land in the axis dict
    when given as lists; the SimConfig carries their first element.
    Defaulted fields are logged.
    """
    entries = {}
    pairs = _read_pairs(path) if path is not None else []
    for ov in overrides:
        if "=" not in ov:
            raise ConfigError(f"override {ov!r} is not key=value")
        key, _, raw = ov.partition("=")
        pairs.append((key.strip(), raw))
    for key, raw in pairs:
        entries[key] = _parse_entry(key, raw)

    axes = {}
    scalars = {}
    for key in _LIST_INT:
        if key in entries:
            vals = entries.pop(key)
            scalars[key] = vals[0]
            if len(vals) > 1:
                axes[key] = vals

    geo_kwargs = {k[len("geometry."):]: v for k, v in entries.items()
                  if k.startswith("geometry.")}
    for k in list(entries):
        if k.startswith("geometry."):
            entries.pop(k)

    n = entries.pop("n", None)
    m = entries.pop("m", None)
    defaults = SimConfig()
    n = defaults.N if n is None else n
    m = defaults.M if m is None else m
    q_first = scalars.get("q", defaults.Q)
    if m % q_first:
        raise ConfigError(f"m={m} is not divisible by q={q_first}")
    rows = _pick_rows(m, geo_kwargs.pop("ris_rows", None))
    geo_fields = {
        "bs_array": LinearArraySpec(
            n, geo_kwargs.pop("bs_spacing_wl", 0.5)),
        "ris_array": PlanarArraySpec(
            rows, m // rows, geo_kwargs.pop("ris_spacing_wl", 0.5)),
    }
    base_geo = Geometry()
    for name in ("bs_position", "ris_position", "user_region_center",
                 "user_region_radius", "carrier_frequency", "los_kappa"):
        geo_fields[name] = geo_kwargs.pop(name, getattr(base_geo, name))
    if geo_kwargs:
        raise ConfigError(f"unknown geometry keys: {sorted(geo_kwargs)}")

    kwargs = {
        "N": n, "M": m,
        "Q": scalars.get("q", defaults.Q),
        "B": scalars.get("b", defaults.B),
        "snr_db": entries.pop("snr_db", defaults.snr_db),
        "L_rb": scalars.get("l_rb", defaults.L_rb),
        "L_ur": scalars.get("l_ur", defaults.L_ur),
        "trials": entries.pop("trials", defaults.trials),
        "master_seed": entries.pop("seed", defaults.master_seed),
        "methods": entries.pop("methods", defaults.methods),
        "f_hat_rel_error": entries.pop("f_hat_rel_error",
                                       defaults.f_hat_rel_error),
        "geometry": Geometry(**geo_fields),
    }
    if entries:
        raise ConfigError(f"unknown config keys: {sorted(entries)}")

    given = {k for k, _ in pairs}
    for key in (_SCALAR_INT + _LIST_INT + _SCALAR_FLOAT + ("methods",)):
        if key not in given:
            logger.info("defaulted %s", key)

    cfg = SimConfig(**kwargs)
    try:
        cfg.validate()
    except ValueError as e:
        raise ConfigError(str(e))
    return cfg, axes


def _fmt(x):
    return f"{x:.5e}"


def _rows(result, mask_timing):
    for r in result.records:
        secs = 0.0 if mask_timing else r.mean_est_seconds
        yield (r.sweep, r.point, r.method, str(r.T), str(r.Q), str(r.B),
               str(r.L_rb), str(r.L_ur), str(r.snr_db), str(r.trials),
               _fmt(r.mean_nmse), _fmt(r.median_nmse),
               _fmt(r.mean_worst_cond), _fmt(secs),
               str(r.seed), r.partition_hash)


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".risce-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _serialize(result, fmt, mask_timing):
    header = CSV_HEADER.split(",")
    if fmt == "csv":
        lines = [CSV_HEADER]
        lines += [",".join(row) for row in _rows(result, mask_timing)]
        return "\n".join(lines) + "\n"
    rows = [dict(zip(header, row)) for row in _rows(result, mask_timing)]
    return json.dumps(rows, indent=2, sort_keys=True) + "\n"


def _write_outputs(args, cfg, axes, result):
    payload = _serialize(result, args.format, args.deterministic_timing)
    _atomic_write(args.output, payload)
    meta = {
        "version": __version__,
        "subcommand": args.command,
        "format": args.format,
        "deterministic_timing": args.deterministic_timing,
        "config": dataclasses.asdict(cfg),
        "axes": axes,
    }
    _atomic_write(args.output + ".meta.json",
                  json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _summarize(result):
    by_point = {}
    for r in result.records:
        by_point.setdefault((r.sweep, r.point), []).append(r)
    for (sweep, point), recs in by_point.items():
        parts = ", ".join(f"{r.method}={r.mean_nmse:.3e}" for r in recs)
        print(f"{sweep} point {point}: {parts}")


def _cmd_sweep_pilots(args, cfg, axes):
    b_list = axes.get("b", [cfg.B])
    t_values = [cfg.Q * b for b in b_list]
    result = sim.sweep_pilot_overhead(cfg, t_values)
    _write_outputs(args, cfg, axes, result)
    _summarize(result)
    return 0


def _cmd_sweep_scatterers(args, cfg, axes):
    l_list = axes.get("l_ur") or axes.get("l_rb")
    if "l_ur" in axes and "l_rb" in axes and axes["l_ur"] != axes["l_rb"]:
        raise ConfigError("l_rb and l_ur sweep lists must agree")
    if l_list is None:
        l_list = [cfg.L_ur]
    result = sim.sweep_scatterers(cfg, l_list)
    _write_outputs(args, cfg, axes, result)
    _summarize(result)
    return 0


def _cmd_sweep_groups(args, cfg, axes):
    if "b" in axes:
        raise ConfigError("sweep-groups needs a scalar b")
    q_list = axes.get("q", [cfg.Q])
    # b counts subframes at the largest group count; T is fixed across arms
    T = max(q_list) * cfg.B
    result = sim.sweep_groups(cfg, q_list, T)
    _write_outputs(args, cfg, axes, result)
    _summarize(result)
    return 0


def _cmd_partition(args, cfg, axes):
    F_hat = sim.channel_estimate_for_trial(cfg, args.trial)
    W = grouping.correlation_weights(F_hat)
    part = grouping.greedy_partition(W, cfg.Q, cfg.M // cfg.Q)
    contig = grouping.contiguous_partition(cfg.M, cfg.Q)
    for name, p in (("greedy", part), ("contiguous", contig)):
        wc = grouping.worst_condition(F_hat, p, cfg.B)
        surr = grouping.surrogate_objective(W, p)
        print(f"{name}: worst condition {wc:.6e}, surrogate {surr:.6e}")
        for q, members in enumerate(p.groups):
            print(f"  group {q}: {list(members)}")
    return 0


def _cmd_validate(args, cfg, axes):
    resolved = dataclasses.asdict(cfg)
    print(json.dumps({"config": resolved, "axes": axes},
                     indent=2, sort_keys=True))
    return 0


_COMMANDS = {
    "sweep-pilots": _cmd_sweep_pilots,
    "sweep-scatterers": _cmd_sweep_scatterers,
    "sweep-groups": _cmd_sweep_groups,
    "partition": _cmd_partition,
    "validate-config": _cmd_validate,
}


def _build_parser():
    p = argparse.ArgumentParser(
        prog="risce",
        description="Channel-estimation benchmark sweeps",
        epilog=f"Thread count is read from ${sim.THREADS_ENV} (default 1).")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("config", help="key=value config file")
        sp.add_argument("overrides", nargs="*", metavar="key=value",
                        help="config overrides applied after the file")
        if name.startswith("sweep-"):
            sp.add_argument("-o", "--output", required=True,
                            help="result file (written atomically)")
            sp.add_argument("--format", choices=("csv", "json"),
                            default="csv")
            sp.add_argument("--deterministic-timing", action="store_true",
                            help="write 0.0 wall-times for "
                                 "byte-reproducible output")
        if name == "partition":
            sp.add_argument("--trial", type=int, default=0)
    return p


def main(argv=None):
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=os.environ.get("RISCE_LOG", "INFO"),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg, axes = parse_config(args.config, args.overrides)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args, cfg, axes)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - CLI boundary
        logger.exception("run failed")
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
