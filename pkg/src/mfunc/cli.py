"""mfunc command line: density, sample, compare, satotate, decay, cache.

Settings resolve as built-in defaults < JSON config file (--config) < flags.
Every file written gets a JSON sidecar with the resolved config, its sha256,
the seed and library versions; no timestamps, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import platform
import shutil
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .arith import cache_dir, cached_files, first_primes, hecke_table
from .charfun import decay_profile, product_charfn
from .density import Rectangle, auto_rectangle, invert
from .empirical import build_histogram, discrepancy, truncation_bound
from .errors import (AccuracyError, DataError, DomainError, MFuncError, ResourceError)
from .euler import local_curve, parse_spec, taylor_table
from .satotate import pf_epsilon_density, record

log = logging.getLogger("mfunc")

DEFAULTS = {
    "spec": "zeta",
    "sigma": 1.2,
    "N": 1000,
    "sampler_cutoff": 10000,
    "w_max": 60.0,
    "w_nodes": 513,
    "resolution": 256,
    "z_rect": None,
    "T": 1.0e4,
    "samples": 200000,
    "seed": 0,
    "out": "mfunc-out",
    "prime_limit": 10**6,
    "cache_dir": None,
    "threads": None,
    "norm_tol": 0.01,
    "tail_tol": 1e-3,
    "preflight_threshold": 0.3,
    "sup_tol": 0.02,
    "l1_tol": 0.05,
    "rectangles": 100,
    "l1_block": None,
    "gamma": 3,
    "xi": math.pi / 6,
    "x": 10**6,
    "eps": None,
    "prime": 2,
    "radii": [100.0, 1000.0, 10000.0],
}

# keys that change results (and therefore the config hash)
_RESULT_KEYS = {"spec", "sigma", "N", "sampler_cutoff", "w_max", "w_nodes", "resolution",
                "z_rect", "T", "samples", "seed", "norm_tol", "tail_tol",
                "preflight_threshold", "sup_tol", "l1_tol", "rectangles", "l1_block",
                "gamma", "xi", "x", "eps", "prime", "radii", "prime_limit"}


# --------------------------------------------------------------------------
# config plumbing


def _add_common(p):
    p.add_argument("--config", help="JSON file with settings; flags override it")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="worker cap (also MFUNC_THREADS)")
    p.add_argument("--cache-dir", dest="cache_dir", help="tau/Hecke cache (also MFUNC_CACHE_DIR)")
    p.add_argument("--prime-limit", dest="prime_limit", type=int,
                   help="Hecke table covers primes up to this bound")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _add_spec(p):
    p.add_argument("--spec", help="zeta | modular | sympow:G")
    p.add_argument("--sigma", type=float)


def _add_density(p):
    p.add_argument("--N", dest="N", type=int, help="number of primes in Lambda_N")
    p.add_argument("--w-max", dest="w_max", type=float)
    p.add_argument("--w-nodes", dest="w_nodes", type=int)
    p.add_argument("--resolution", type=int, help="density cells per axis")
    p.add_argument("--z-rect", dest="z_rect", type=float, nargs=4,
                   metavar=("X0", "X1", "Y0", "Y1"))
    p.add_argument("--norm-tol", dest="norm_tol", type=float)
    p.add_argument("--tail-tol", dest="tail_tol", type=float)
    p.add_argument("--preflight-threshold", dest="preflight_threshold", type=float)


def _add_sample(p):
    p.add_argument("--T", dest="T", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--sampler-cutoff", dest="sampler_cutoff", type=int,
                   help="number of primes in the sampled Euler product")


def build_parser():
    ap = argparse.ArgumentParser(prog="mfunc", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"mfunc {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density", help="characteristic function grid and M-function density")
    _add_common(p), _add_spec(p), _add_density(p)

    p = sub.add_parser("sample", help="histogram of log phi(sigma + it) over [-T, T]")
    _add_common(p), _add_spec(p), _add_density(p), _add_sample(p)

    p = sub.add_parser("compare", help="density vs empirical histogram")
    _add_common(p), _add_spec(p), _add_density(p), _add_sample(p)
    p.add_argument("--sup-tol", dest="sup_tol", type=float)
    p.add_argument("--l1-tol", dest="l1_tol", type=float)
    p.add_argument("--rectangles", type=int)
    p.add_argument("--l1-block", dest="l1_block", type=int)

    p = sub.add_parser("satotate", help="prime-angle fraction in the symmetric-power intervals")
    _add_common(p)
    p.add_argument("--gamma", type=int)
    p.add_argument("--xi", type=float)
    p.add_argument("--x", dest="x", type=int)
    p.add_argument("--eps", type=float, help="also report the |lambda| > sqrt 2 - eps density")

    p = sub.add_parser("decay", help="normalised sup |K_n| against radius for one prime")
    _add_common(p), _add_spec(p)
    p.add_argument("--prime", type=int)
    p.add_argument("--radii", type=float, nargs="+")

    p = sub.add_parser("cache", help="inspect, build or clear the tau/Hecke cache")
    _add_common(p)
    p.add_argument("action", choices=["list", "build", "clear"])
    return ap


def resolve(args):
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise DomainError(f"cannot read config {args.config}: {e}") from e
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for k, v in vars(args).items():
        if k in DEFAULTS and v is not None:
            cfg[k] = v
    if cfg["threads"] is None and os.environ.get("MFUNC_THREADS"):
        cfg["threads"] = int(os.environ["MFUNC_THREADS"])
    _validate(cfg)
    return cfg


def _validate(cfg):
    if not cfg["sigma"] > 0:
        raise DomainError("sigma must be > 0")
    for k in ("N", "sampler_cutoff", "w_nodes", "resolution", "samples", "rectangles",
              "prime_limit"):
        if int(cfg[k]) < 1:
            raise DomainError(f"{k} must be positive")
    if cfg["w_max"] <= 0 or cfg["T"] <= 0:
        raise DomainError("w_max and T must be positive")
    if cfg["threads"] is not None and cfg["threads"] < 1:
        raise DomainError("threads must be >= 1")


def config_hash(cfg):
    blob = json.dumps({k: cfg[k] for k in sorted(_RESULT_KEYS)}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def provenance(cfg, command):
    import scipy

    vers = {"mfunc": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version(), "backend": kernels.BACKEND}
    try:
        import numba

        vers["numba"] = numba.__version__
    except ImportError:
        pass
    return {"command": command, "config": {k: cfg[k] for k in sorted(_RESULT_KEYS)},
            "config_sha256": config_hash(cfg), "seed": cfg["seed"], "versions": vers}


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serialisable: {type(o)}")


def _emit(obj):
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


# --------------------------------------------------------------------------
# pipeline pieces


def _spec(cfg):
    return parse_spec(cfg["spec"], lambda: hecke_table(cfg["prime_limit"], cfg["cache_dir"]))


def _check_sigma(spec, cfg):
    sigma = cfg["sigma"]
    if sigma <= 0.5:
        raise DomainError(
            f"sigma = {sigma} <= 1/2: the truncation tail sum_p p^(-2 sigma) diverges, "
            f"so no error control is possible (validity needs sigma > {spec.sigma0:.4g})"
        )
    heuristic = sigma <= spec.sigma0
    if heuristic:
        log.warning("sigma = %g is at or below sigma0 = %.4g for %s; output is heuristic",
                    sigma, spec.sigma0, spec.name)
    return heuristic


def _z_rect(spec, cfg):
    if cfg["z_rect"] is not None:
        return Rectangle(*map(float, cfg["z_rect"]))
    return auto_rectangle(taylor_table(spec, cfg["sigma"], int(cfg["N"])).component_variance())


def _density(spec, cfg, out, prov):
    grid = product_charfn(spec, cfg["sigma"], int(cfg["N"]), w_max=float(cfg["w_max"]),
                          nodes=int(cfg["w_nodes"]), tail_tol=float(cfg["tail_tol"]),
                          preflight_threshold=float(cfg["preflight_threshold"]))
    dens = invert(grid, _z_rect(spec, cfg), int(cfg["resolution"]),
                  norm_tol=float(cfg["norm_tol"]))
    dens.meta["heuristic"] = bool(grid.heuristic)
    if out is not None:
        grid.to_csv(out / "charfn.csv", {"provenance": prov})
        dens.to_csv(out / "density.csv", {"provenance": prov})
    diag = {"spec": spec.name, "sigma": cfg["sigma"], "N": int(cfg["N"]),
            "heuristic": bool(grid.heuristic), "tail_bound": grid.tail_bound,
            "norm_defect": dens.norm_defect, "clip_mass": dens.clip_mass,
            "imag_residue": dens.imag_residue, "variance": grid.variance,
            "rect": list(dens.rect.as_tuple()), "decaying_primes": list(grid.decaying_primes),
            "max_quadrature_nodes": grid.meta.get("max_quadrature_nodes")}
    return grid, dens, diag


def _histogram(spec, cfg, geometry, out, prov):
    hist = build_histogram(spec, cfg["sigma"], float(cfg["T"]), int(cfg["samples"]),
                           int(cfg["sampler_cutoff"]), geometry, seed=int(cfg["seed"]))
    bound = truncation_bound(spec, cfg["sigma"], int(cfg["sampler_cutoff"]))
    hist.meta["truncation_bound"] = bound if math.isfinite(bound) else None
    p_max = float(spec.primes(int(cfg["sampler_cutoff"]))[-1])
    dt = 2.0 * float(cfg["T"]) / (int(cfg["samples"]) - 1)
    hist.meta["stride"] = dt
    hist.meta["stride_decorrelation_min"] = 10.0 / math.log(p_max)
    hist.meta["stride_decorrelated"] = bool(dt >= 10.0 / math.log(p_max))
    if out is not None:
        hist.to_csv(out / "histogram.csv", {"provenance": prov})
    return hist


def _prepare_out(cfg):
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------
# commands


def cmd_density(cfg):
    spec = _spec(cfg)
    _check_sigma(spec, cfg)
    out = _prepare_out(cfg)
    prov = provenance(cfg, "density")
    _, _, diag = _density(spec, cfg, out, prov)
    diag["provenance"] = prov
    _write_json(out / "diagnostics.json", diag)
    _emit(diag)
    return 0


def cmd_sample(cfg):
    spec = _spec(cfg)
    _check_sigma(spec, cfg)
    out = _prepare_out(cfg)
    prov = provenance(cfg, "sample")
    rect = _z_rect(spec, cfg)
    n = int(cfg["resolution"])
    geom = (rect.x0, (rect.x1 - rect.x0) / n, n, rect.y0, (rect.y1 - rect.y0) / n, n)
    hist = _histogram(spec, cfg, geom, out, prov)
    summary = hist.sidecar()
    summary["provenance"] = prov
    _emit(summary)
    return 0


def cmd_compare(cfg):
    from .empirical import rectangle_family

    spec = _spec(cfg)
    _check_sigma(spec, cfg)
    out = _prepare_out(cfg)
    prov = provenance(cfg, "compare")
    _, dens, diag = _density(spec, cfg, out, prov)
    hist = _histogram(spec, cfg, dens, out, prov)
    rects = rectangle_family(dens.geometry(), int(cfg["rectangles"]), int(cfg["seed"]))
    rep = discrepancy(hist, dens, rects, block=cfg["l1_block"])
    passed = rep.sup_rect < cfg["sup_tol"] and rep.l1 < cfg["l1_tol"]
    report = {"spec": spec.name, "sigma": cfg["sigma"], "density": diag,
              "histogram": hist.sidecar(), "discrepancy": rep.as_dict(),
              "sup_tol": cfg["sup_tol"], "l1_tol": cfg["l1_tol"], "passed": bool(passed),
              "heuristic": bool(cfg["sigma"] <= 1.0 or diag["heuristic"]),
              "provenance": prov}
    _write_json(out / "compare.json", report)
    _emit(report)
    return 0 if passed else 3


def cmd_satotate(cfg):
    table = hecke_table(max(int(cfg["prime_limit"]), int(cfg["x"])), cfg["cache_dir"])
    rec = record(table, int(cfg["gamma"]), float(cfg["xi"]), int(cfg["x"]))
    if cfg["eps"] is not None:
        emp, pred = pf_epsilon_density(table, cfg["eps"], int(cfg["x"]))
        rec["pf_epsilon"] = {"epsilon": cfg["eps"], "empirical": emp, "predicted": pred,
                             "abs_error": abs(emp - pred)}
    if cfg["out"] != DEFAULTS["out"]:
        out = _prepare_out(cfg)
        rec_file = dict(rec, provenance=provenance(cfg, "satotate"))
        _write_json(out / "satotate.json", rec_file)
    _emit(rec)
    return 0


def _prime_index(spec, p):
    if spec.max_index is not None:
        ps = spec.primes(spec.max_index)
    else:
        ps = first_primes(max(16, int(1.3 * p / max(math.log(p), 1.0)) + 16))
    i = int(np.searchsorted(ps, p))
    if i >= ps.size or ps[i] != p:
        raise DomainError(f"{p} is not a prime covered by {spec.name}")
    return i + 1


def cmd_decay(cfg):
    spec = _spec(cfg)
    n = _prime_index(spec, int(cfg["prime"]))
    curve = local_curve(spec, n, cfg["sigma"])
    prof = decay_profile(curve, np.asarray(cfg["radii"], dtype=np.float64))
    rows = prof.rows()
    print("radius\tsup_fixed\tsup_shell\tnormalized")
    for r in rows:
        print(f"{r['radius']:.6g}\t{r['sup_fixed']:.6e}\t{r['sup_shell']:.6e}\t"
              f"{r['normalized']:.6f}")
    print(f"# p={curve.p} sigma={cfg['sigma']} r1={abs(prof.r1):.4f} "
          f"spread={prof.spread:.4f} bounded={prof.bounded()}"
          + (" degenerate(r1=0)" if prof.degenerate else ""))
    if cfg["out"] != DEFAULTS["out"]:
        out = _prepare_out(cfg)
        _write_json(out / f"decay-p{curve.p}.json",
                    {"p": curve.p, "sigma": cfg["sigma"], "rows": rows, "spread": prof.spread,
                     "provenance": provenance(cfg, "decay")})
    return 0


def cmd_cache(cfg, action):
    d = cache_dir(cfg["cache_dir"])
    if action == "list":
        for f in cached_files(cfg["cache_dir"]):
            print(f"{f.stat().st_size:>12d}  {f.name}")
        return 0
    if action == "build":
        t = hecke_table(int(cfg["prime_limit"]), cfg["cache_dir"])
        print(f"{len(t)} primes <= {t.bound} cached in {d}")
        return 0
    if d.exists():
        shutil.rmtree(d)
    print(f"removed {d}")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
        if cfg["threads"]:
            kernels.set_threads(int(cfg["threads"]))
        if args.command == "cache":
            return cmd_cache(cfg, args.action)
        return {"density": cmd_density, "sample": cmd_sample, "compare": cmd_compare,
                "satotate": cmd_satotate, "decay": cmd_decay}[args.command](cfg)
    except DomainError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (AccuracyError, DataError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (ResourceError, MemoryError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 4
    except MFuncError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
