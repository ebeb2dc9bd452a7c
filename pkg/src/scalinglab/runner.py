"""Experiment orchestration and the command line interface.

A single JSON config document drives every subcommand; all randomness flows
from config["seed"] through numpy Generators, so identical (config, seed)
pairs produce byte-identical report entries.  Exit codes: 0 all margins
pass, 1 a margin failed, 2 configuration error.

Subcommands
-----------
verify-lemma {esti|disc|ball|final}   lemma suites
kobayashi-eval                        metric/distance against ball oracles
scale-run                             scaling pipeline + diagnostics + CSVs
theorem-replay                        full replay on the ball

Flags: --config <path> --seed <u64> --out <dir> --jobs <int>.  Artifact
CSV schemas: scaling stages use the header
j,r_j,theta_j,eps_j,est_lo_margin,est_hi_margin,hausdorff_dev; boundary
clouds use j,re_w1,norm_wprime_sq,deviation.
"""

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import kobayashi, lemmas, scaling
from .domains import make_domain, normalize_at
from .errors import ConfigError, ScalingLabError
from .report import Report, write_csv
from .sampling import as_rng, ball_points, unit_vectors

DEFAULTS = {
    "dimension": 8,
    "domain": {"tag": "ball"},
    "orbit": {"rate": 0.5, "count": 16},
    "j_max": 16,
    "seed": 0,
    "samples": 200,
    "tolerances": {"metric_rel": 0.01, "margin": 1e-6},
    "lemma": {},
}


def load_config(path=None, overrides=None):
    cfg = json.loads(json.dumps(DEFAULTS))
    if path is not None:
        with open(path) as fh:
            user = json.load(fh)
        _deep_update(cfg, user)
    if overrides:
        _deep_update(cfg, overrides)
    validate_config(cfg)
    return cfg


def _deep_update(dst, src):
    for k, v in src.items():
        if isinstance(v, dict) and isinstance(dst.get(k), dict):
            _deep_update(dst[k], v)
        else:
            dst[k] = v


def validate_config(cfg):
    n = cfg.get("dimension")
    if not isinstance(n, int) or n < 2:
        raise ConfigError("dimension", "must be an integer >= 2")
    tag = cfg.get("domain", {}).get("tag")
    if tag not in ("ball", "ellipsoid", "siegel", "perturbed-ball"):
        raise ConfigError("domain.tag", f"unknown catalog tag {tag!r}")
    rate = cfg.get("orbit", {}).get("rate", 0.5)
    if not 0 < rate < 1:
        raise ConfigError("orbit.rate", "must lie in (0, 1)")
    for key, val in cfg.get("tolerances", {}).items():
        if val <= 0:
            raise ConfigError(f"tolerances.{key}", "must be positive")
    if cfg.get("j_max", 2) < 2:
        raise ConfigError("j_max", "must be >= 2")
    seed = cfg.get("seed")
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed", "must be a nonnegative integer")
    lemma = cfg.get("lemma", {})
    if "a" in lemma and "b" in lemma and lemma["b"] <= lemma["a"]:
        raise ConfigError("lemma.b", "localization needs b > a")
    return cfg


def config_hash(cfg):
    return hashlib.sha256(
        json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def _domain_from(cfg):
    spec = cfg["domain"]
    params = {k: v for k, v in spec.items() if k != "tag"}
    return make_domain(spec["tag"], cfg["dimension"], **params)


def run(cfg, command, out_dir=None):
    """Dispatch one experiment; returns the Report."""
    validate_config(cfg)
    rng = as_rng(cfg["seed"])
    t0 = time.monotonic()
    if command == "verify-lemma-esti":
        rep = _run_esti(cfg, rng)
    elif command == "verify-lemma-disc":
        rep = _run_disc(cfg, rng)
    elif command == "verify-lemma-ball":
        rep = _run_ball_lemma(cfg, rng)
    elif command == "verify-lemma-final":
        rep = _run_final_lemma(cfg, rng)
    elif command == "kobayashi-eval":
        rep = _run_kobayashi(cfg, rng)
    elif command == "scale-run":
        rep = _run_scaling(cfg, rng, out_dir)
    elif command == "theorem-replay":
        rep = _run_replay(cfg, rng, out_dir)
    else:
        raise ConfigError("command", f"unknown command {command!r}")
    rep.metadata.update({
        "command": command,
        "config_hash": config_hash(cfg),
        "seed": cfg["seed"],
        "runtime_seconds": round(time.monotonic() - t0, 3),
    })
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rep.to_json(out / f"{command}.json")
        rep.entries_to_csv(out / f"{command}-entries.csv")
    return rep


def _run_esti(cfg, rng):
    n = cfg["dimension"]
    domain = make_domain("ball", n)
    lemma = cfg.get("lemma", {})
    count = lemma.get("configs", cfg["samples"])
    rep = Report(title="localization-suite")
    worst_d, worst_k = np.inf, np.inf
    from .domains import ellipsoid_domain

    for _ in range(count):
        b = float(rng.uniform(0.5, 3.0))
        a = float(rng.uniform(0.05, b - 0.05))
        sub = ellipsoid_domain(n, axes=[1.0 / np.tanh(b) ** 2] * n)
        x_dir = unit_vectors(rng, 1, n)[0]
        x = np.tanh(a) * x_dir
        sub_rep = kobayashi.localization_check(
            domain, sub, np.zeros(n, dtype=complex), x, b, rng=rng,
            v_samples=lemma.get("v_samples", 8))
        worst_d = min(worst_d, sub_rep.entry("distance_bound").margin)
        worst_k = min(worst_k, sub_rep.entry("metric_bound_rel").margin)
    rep.add("distance_margin_worst", worst_d, margin=worst_d, tol=1e-6)
    rep.add("metric_margin_worst", worst_k, margin=worst_k, tol=1e-6)
    return rep


def _run_disc(cfg, rng):
    lemma = cfg.get("lemma", {})
    eps_list = lemma.get("eps_values", [0.5, 0.2, 0.1])
    rep = Report(title="disc-rigidity-suite")
    deltas = []
    for eps in eps_list:
        d = lemmas.empirical_delta(eps, budget=lemma.get("budget", 128))
        deltas.append(d)
        rep.add(f"delta_at_eps_{eps}", d, margin=d - 1e-7, tol=0.0)
    mono = all(deltas[i] >= deltas[i + 1] for i in range(len(deltas) - 1))
    rep.add("delta_monotone_in_eps", float(mono),
            margin=1.0 if mono else -1.0, tol=0.0)
    return rep


def _run_ball_lemma(cfg, rng):
    n = cfg["dimension"]
    lemma = cfg.get("lemma", {})
    family = lemmas.linear_contraction_family(n)
    return lemmas.ball_convergence_check(
        family, lemma.get("radius", 0.9), lemma.get("j_max", 50),
        samples=lemma.get("samples", 2000), rng=rng)


def _run_final_lemma(cfg, rng):
    n = cfg["dimension"]
    lemma = cfg.get("lemma", {})
    gamma = lemma.get("gamma", 0.05)
    from .holomap import HoloMap

    def evaluate(z):
        return z + gamma * z ** 2

    def jacobian(z):
        return np.eye(n, dtype=complex) + 2 * gamma * np.diag(z)

    psi = HoloMap(evaluate, jacobian=jacobian, tag="quadratic-perturbation")
    return lemmas.surjectivity_radius(
        psi, lemma.get("radius", 0.8), lemma.get("eps", 0.1),
        samples=cfg["samples"], rng=rng, dim=n)


def _run_kobayashi(cfg, rng):
    n = cfg["dimension"]
    domain = _domain_from(cfg)
    count = cfg["samples"]
    rep = Report(title="kobayashi-eval")
    if domain.tag != "ball":
        raise ConfigError("domain.tag", "kobayashi-eval compares against the "
                                        "ball oracle; use tag 'ball'")
    metric_err, dist_err = 0.0, 0.0
    for _ in range(count):
        x = ball_points(rng, 1, n, radius=0.95)[0]
        v = unit_vectors(rng, 1, n)[0]
        est = kobayashi.metric_upper(domain, x, v, budget=0, rng=rng)
        exact = float(kobayashi.ball_metric(x, v))
        metric_err = max(metric_err, abs(est.upper - exact) / exact)
        q = ball_points(rng, 1, n, radius=0.95)[0]
        dest = kobayashi.distance(domain, x, q, rng=rng)
        dexact = float(kobayashi.ball_distance(x, q))
        if dexact > 1e-9:
            dist_err = max(dist_err, abs(dest.upper - dexact) / dexact)
    tol = cfg["tolerances"]["metric_rel"]
    rep.add("metric_rel_err_max", metric_err, margin=tol - metric_err, tol=0.0)
    rep.add("distance_rel_err_max", dist_err, margin=tol - dist_err, tol=0.0)
    return rep


def _stage_csv_rows(state, hausdorff_devs, diag):
    est_lo = diag.data.get("est_lo_margin", [np.nan] * len(state.stages))
    est_hi = diag.data.get("est_hi_margin", [np.nan] * len(state.stages))
    rows = []
    for i, stage in enumerate(state.stages):
        dev = hausdorff_devs[i] if i < len(hausdorff_devs) else np.nan
        rows.append((stage.j, stage.r_j, stage.theta_j, state.eps[i],
                     est_lo[i], est_hi[i], dev))
    return rows


def _run_scaling(cfg, rng, out_dir):
    n = cfg["dimension"]
    domain = _domain_from(cfg)
    orbit_cfg = cfg["orbit"]
    j_values = list(range(2, cfg["j_max"] + 1))
    if domain.tag in ("ball",):
        q = np.zeros(n, dtype=complex)
        p = np.zeros(n, dtype=complex)
        p[0] = 1.0
        state = scaling.run_ball_pipeline(
            domain, q, p, rate=orbit_cfg.get("rate", 0.5),
            j_values=j_values, rng=rng)
    else:
        p = _default_boundary_point(domain)
        normalized = normalize_at(domain, p, rng=rng)
        q_list = _synthetic_points(normalized, orbit_cfg, j_values, rng)
        state = scaling.run_synthetic_pipeline(normalized, q_list,
                                               j_values=j_values, rng=rng)
    diag = scaling.scaling_diagnostics(state, rng=rng)
    hd = scaling.hausdorff_to_siegel(state.normalized, state.stages, rng=rng)
    rep = Report(title="scale-run")
    rep.extend(diag)
    rep.extend(hd, prefix="hausdorff_")
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rows = _stage_csv_rows(state, hd.data.get("deviation", []), diag)
        path = out / "scaling-stages.csv"
        write_csv(path, ["j", "r_j", "theta_j", "eps_j", "est_lo_margin",
                         "est_hi_margin", "hausdorff_dev"], rows)
        rep.artifacts.append(str(path))
        cloud_rows = _boundary_cloud_rows(state, rng)
        cpath = out / "boundary-cloud.csv"
        write_csv(cpath, ["j", "re_w1", "norm_wprime_sq", "deviation"],
                  cloud_rows)
        rep.artifacts.append(str(cpath))
    return rep


def _default_boundary_point(domain):
    n = domain.dimension
    p = np.zeros(n, dtype=complex)
    if domain.tag == "siegel":
        return p
    from .domains import ray_boundary_point

    p_b, _ = ray_boundary_point(domain, domain.basepoint)
    return p_b


def _synthetic_points(normalized, orbit_cfg, j_values, rng,
                      height=2.0, tangent=0.5):
    rate = orbit_cfg.get("rate", 0.5)
    n = normalized.dimension
    pts = []
    for j in j_values:
        r = rate ** j
        w = np.zeros(n, dtype=complex)
        w[0] = height * r
        w[1] = tangent * np.sqrt(r)
        base = normalized.psi2(w[1:])
        w[0] = base + height * r
        pts.append(w)
    return pts


def _boundary_cloud_rows(state, rng, per_stage=32):
    rng = as_rng(rng)
    rows = []
    nd = state.normalized
    n = nd.dimension
    for stage in state.stages:
        r = stage.r_j
        for _ in range(per_stage):
            t = r * (2 * rng.random() - 1)
            wp = np.sqrt(r) * 0.5 * (
                rng.standard_normal(n - 1) + 1j * rng.standard_normal(n - 1)
            ) / np.sqrt(max(1, n - 1))
            try:
                z = nd.boundary_sample(stage.p_j, t, wp)
            except ScalingLabError:
                continue
            w = stage.L(stage.H(z))
            wp2 = float(np.sum(np.abs(w[1:]) ** 2))
            dev = abs(float(np.real(w[0])) - nd.psi2(w[1:]))
            rows.append((stage.j, float(np.real(w[0])), wp2, dev))
    return rows


def _run_replay(cfg, rng, out_dir):
    n = cfg["dimension"]
    domain = make_domain("ball", n)
    rep = lemmas.main_theorem_pipeline(
        domain, j_max=cfg["j_max"], rate=cfg["orbit"].get("rate", 0.5),
        rng=rng)
    state = rep.data.pop("state", None)
    if out_dir is not None and state is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rows = [(s.j, s.r_j, s.theta_j, state.eps[i],
                 rep.data["c_margin"][i], rep.data["sup_closure"][i],
                 rep.data["qa_margin"][i])
                for i, s in enumerate(state.stages)]
        path = out / "replay-stages.csv"
        write_csv(path, ["j", "r_j", "theta_j", "eps_j", "c_margin",
                         "sup_closure", "qa_margin"], rows)
        rep.artifacts.append(str(path))
    return rep


COMMANDS = ("verify-lemma", "kobayashi-eval", "scale-run", "theorem-replay")


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="scalinglab",
        description="Numerical laboratory for Kobayashi geometry and the "
                    "scaling method")
    parser.add_argument("--config", type=str, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", type=str, default=None)
    parser.add_argument("--jobs", type=int, default=1,
                        help="parallelism cap (runs are single-process; "
                             "results are independent of this value)")
    sub = parser.add_subparsers(dest="command", required=True)
    lemma_p = sub.add_parser("verify-lemma")
    lemma_p.add_argument("which", choices=["esti", "disc", "ball", "final"])
    for name in ("kobayashi-eval", "scale-run", "theorem-replay"):
        sub.add_parser(name)
    args = parser.parse_args(argv)

    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    try:
        cfg = load_config(args.config, overrides)
        command = args.command
        if command == "verify-lemma":
            command = f"verify-lemma-{args.which}"
        rep = run(cfg, command, out_dir=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ScalingLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for entry in rep.entries:
        status = "PASS" if entry.passed else "FAIL"
        print(f"{status} {entry.name}: value={entry.value:.6g} "
              f"margin={entry.margin:.3e}")
    print(f"report: {'pass' if rep.all_pass else 'FAIL'} "
          f"({len(rep.entries)} entries)")
    return 0 if rep.all_pass else 1


if __name__ == "__main__":
    sys.exit(main())
