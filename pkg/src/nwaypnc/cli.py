"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 input error,
3 non-removable constraint.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from nwaypnc import __version__
from nwaypnc.constellation import delta_from_complex
from nwaypnc.distance import d_min_fade, min_cluster_distance
from nwaypnc.errors import GuardExceeded, InvalidParameter, MapParseError, NonRemovableConstraint
from nwaypnc.fadespace import (
    canonicalize,
    count_formula,
    enumerate_subspaces,
    is_removable,
    removable_count_formula,
    sorted_subspaces,
)
from nwaypnc.hypercube import build_map_for_subspace, first_violation, parse_map, removal_constraints, serialize_map
from nwaypnc.simulator import ADAPTIVE, NON_ADAPTIVE, SCHEMES, ConfigError, SimConfig, run_simulation

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NONREMOVABLE = 0, 1, 2, 3

CSV_COLUMNS = ["snr_db", "scheme", "n", "M", "frames", "bits_total", "bit_errors", "ber", "seed"]

PRESETS = {
    "three-way-4psk": dict(n=3, M=4, snr_db_list=tuple(range(0, 50, 5)), frames_per_point=10_000),
    "four-way-bpsk": dict(n=4, M=2, snr_db_list=tuple(range(0, 50, 5)), frames_per_point=10_000),
    "five-way-bpsk": dict(n=5, M=2, snr_db_list=tuple(range(0, 50, 5)), frames_per_point=10_000),
    # experimental: the full candidate set (7936 maps) is beyond desk scale
    "five-way-4psk": dict(n=5, M=4, snr_db_list=tuple(range(0, 50, 5)), frames_per_point=200, max_candidates=64),
}

CONFIG_KEYS = {
    "n",
    "M",
    "scheme",
    "snr_db_list",
    "rician_K_db",
    "frame_bits",
    "frames_per_point",
    "seed",
    "max_candidates",
    "workers",
}


class InputError(Exception):
    pass


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def parse_complex_list(text):
    try:
        return [complex(tok.strip().replace(" ", "").replace("i", "j")) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse complex list {text!r}: {exc}") from None


def parse_snr_list(text):
    """``"0:45:5"`` (inclusive range) or ``"0,10,20"``."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ValueError("step must be positive")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(start + i * step for i in range(count))
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise InputError(f"cannot parse SNR list {text!r}: {exc}") from None


def parse_schemes(text):
    text = text.strip().lower()
    if text in ("both", "all"):
        return SCHEMES
    out = tuple(s.strip() for s in text.split(",") if s.strip())
    for s in out:
        if s not in SCHEMES:
            raise InputError(f"unknown scheme {s!r}; choose from {', '.join(SCHEMES)} or both")
    return out


def _parse_max_candidates(text):
    text = str(text).strip().lower()
    if text in ("", "none", "unlimited", "all"):
        return None
    return int(text)


_CONVERTERS = {
    "n": int,
    "M": int,
    "scheme": parse_schemes,
    "snr_db_list": parse_snr_list,
    "rician_K_db": float,
    "frame_bits": int,
    "frames_per_point": int,
    "seed": int,
    "max_candidates": _parse_max_candidates,
    "workers": int,
}


def read_config_file(path):
    """Flat ``key = value`` file; ``#`` starts a comment."""
    values = {}
    problems = {}
    for no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems[f"line {no}"] = f"expected 'key = value', got {raw.strip()!r}"
            continue
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            problems[key] = "unknown key"
            continue
        try:
            values[key] = _CONVERTERS[key](val)
        except (ValueError, InputError) as exc:
            problems[key] = str(exc)
    if problems:
        raise ConfigError(problems)
    return values


def _emit(line=""):
    print(line)


def cmd_enumerate(args):
    n, M = args.n, args.M
    total = count_formula(n, M)
    removable, non_removable = removable_count_formula(n, M)
    _emit(f"n={n} M={M}")
    _emit(f"formula   total={total} removable={removable} non_removable={non_removable}")
    if not args.brute:
        return EXIT_OK
    keys = enumerate_subspaces(n, M)
    b_rem = sum(1 for k in keys if is_removable(k))
    b_total = len(keys)
    _emit(f"brute     total={b_total} removable={b_rem} non_removable={b_total - b_rem}")
    if (b_total, b_rem) != (total, removable):
        _emit("MISMATCH between formula and enumeration")
        return EXIT_FAIL
    _emit("formula == brute")
    return EXIT_OK


def _select_key(args):
    n, M = args.n, args.M
    if args.vector is not None:
        zs = parse_complex_list(args.vector)
        if len(zs) != n:
            raise InputError(f"vector has {len(zs)} components, n={n}")
        return canonicalize([delta_from_complex(z, M) for z in zs], M)
    keys = sorted_subspaces(n, M)
    if not 0 <= args.index < len(keys):
        raise InputError(f"key index {args.index} out of range [0, {len(keys)})")
    return keys[args.index]


def cmd_build_map(args):
    key = _select_key(args)
    _emit(f"subspace  {key}")
    if not is_removable(key):
        _emit("non-removable: a zero difference component forces two tuples that agree in one user's symbol into one cluster")
        return EXIT_NONREMOVABLE
    constraints = removal_constraints(key)
    cmap = build_map_for_subspace(key)
    text = serialize_map(cmap, comment=f"removes {key}")
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    _emit(f"t={cmap.t} constraint_groups={len(constraints)}")
    return EXIT_OK


def cmd_verify(args):
    try:
        cmap = parse_map(Path(args.map).read_text())
    except OSError as exc:
        raise InputError(str(exc)) from None
    bad = first_violation(cmap)
    if bad is None:
        _emit(f"PASS exclusive law (n={cmap.n} M={cmap.M} t={cmap.t})")
        return EXIT_OK
    k, v, label = bad
    _emit(f"FAIL exclusive law: label {label} repeats in the slice where user {k + 1} sends symbol {v}")
    return EXIT_FAIL


def cmd_mindist(args):
    H = np.array(parse_complex_list(args.H))
    n = H.size
    rep = d_min_fade(H, n, args.M)
    _emit(f"d_min_fade={rep.value!r} pair={rep.argmin_pair}")
    if args.map:
        cmap = parse_map(Path(args.map).read_text())
        if cmap.n != n or cmap.M != args.M:
            raise InputError(f"map is n={cmap.n} M={cmap.M}, query is n={n} M={args.M}")
        crep = min_cluster_distance(cmap, H)
        _emit(f"min_cluster_distance={crep.value!r} pair={crep.argmin_pair}")
    return EXIT_OK


def _sim_config(args):
    values = {}
    if args.preset:
        values.update(PRESETS[args.preset])
    if args.config:
        file_vals = read_config_file(args.config)
        if "scheme" in file_vals:
            file_vals["schemes"] = file_vals.pop("scheme")
        values.update(file_vals)
    flags = {
        "n": args.n,
        "M": args.M,
        "schemes": args.scheme,
        "snr_db_list": args.snr,
        "rician_K_db": args.k_db,
        "frame_bits": args.frame_bits,
        "frames_per_point": args.frames,
        "seed": args.seed,
        "max_candidates": args.max_candidates,
        "workers": args.workers,
    }
    values.update({k: v for k, v in flags.items() if v is not None})
    missing = [k for k in ("n", "M", "snr_db_list", "frames_per_point") if k not in values]
    if missing:
        raise ConfigError({k: "required (flag, config file or preset)" for k in missing})
    return SimConfig(**values)


def format_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in records:
        w.writerow([repr(r.snr_db), r.scheme, r.n, r.M, r.frames, r.bits_total, r.bit_errors, repr(r.ber), r.seed])
    return buf.getvalue()


def cmd_simulate(args):
    cfg = _sim_config(args)
    started = _now()
    t0 = time.perf_counter()
    records = run_simulation(cfg)
    elapsed = time.perf_counter() - t0
    out = Path(args.out)
    body = format_csv(records)
    if args.append and out.exists() and out.stat().st_size:
        with out.open("a") as fh:
            fh.write(body)
    else:
        out.write_text(",".join(CSV_COLUMNS) + "\n" + body)
    manifest = {
        "subcommand": "simulate",
        "version": __version__,
        "seed": cfg.seed,
        "config": {
            "n": cfg.n,
            "M": cfg.M,
            "scheme": list(cfg.schemes),
            "snr_db_list": list(cfg.snr_db_list),
            "rician_K_db": cfg.rician_K_db,
            "frame_bits": cfg.frame_bits,
            "frames_per_point": cfg.frames_per_point,
            "max_candidates": cfg.max_candidates,
            "workers": cfg.workers,
        },
        "started": started,
        "finished": _now(),
        "elapsed_s": round(elapsed, 3),
    }
    Path(str(out) + ".manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    for r in records:
        _emit(f"{r.snr_db:6.1f} dB  {r.scheme:<12} ber={r.ber:.3e}  ({r.bit_errors}/{r.bits_total})")
    _emit(f"wrote {out}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="nwaypnc", description="Adaptive network coding for the n-way relay channel")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("enumerate", help="count singular fade subspaces")
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--M", type=int, required=True)
    e.add_argument("--brute", action="store_true", help="also enumerate exhaustively and compare")
    e.set_defaults(func=cmd_enumerate)

    b = sub.add_parser("build-map", help="construct a Latin hyper-cube removing one subspace")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--M", type=int, required=True)
    sel = b.add_mutually_exclusive_group(required=True)
    sel.add_argument("--index", type=int, help="position in the canonical ordering of all subspaces")
    sel.add_argument("--vector", help="difference vector, e.g. '-1-1j,-2j,-2j,1-1j,1+1j'")
    b.add_argument("--out", required=True, help="map file path, '-' for stdout")
    b.set_defaults(func=cmd_build_map)

    v = sub.add_parser("verify", help="check a map file against the exclusive law")
    v.add_argument("map")
    v.set_defaults(func=cmd_verify)

    m = sub.add_parser("mindist", help="relay minimum distance (and cluster distance of a map)")
    m.add_argument("--M", type=int, required=True)
    m.add_argument("--H", required=True, help="fade state, e.g. '1,0.5+0.2j'")
    m.add_argument("--map", help="map file for the minimum cluster distance")
    m.set_defaults(func=cmd_mindist)

    s = sub.add_parser("simulate", help="BER vs SNR Monte-Carlo run")
    s.add_argument("--config", help="flat 'key = value' config file")
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--n", type=int)
    s.add_argument("--M", type=int)
    s.add_argument("--scheme", type=parse_schemes, help=f"{ADAPTIVE}, {NON_ADAPTIVE} or both")
    s.add_argument("--snr", type=parse_snr_list, help="'start:stop:step' (inclusive) or comma list, dB")
    s.add_argument("--k-db", type=float, help="Rician K-factor in dB")
    s.add_argument("--frame-bits", type=int)
    s.add_argument("--frames", type=int, help="frames per SNR point")
    s.add_argument("--seed", type=int)
    s.add_argument("--max-candidates", type=_parse_max_candidates)
    s.add_argument("--workers", type=int)
    s.add_argument("--out", default="ber.csv")
    s.add_argument("--append", action="store_true", help="append rows to an existing CSV")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except NonRemovableConstraint as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONREMOVABLE
    except ConfigError as exc:
        for key, msg in exc.problems.items():
            print(f"error: config {key}: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, InvalidParameter, MapParseError, GuardExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
