"""Command-line front end: config ingestion, experiment orchestration, and
artifact emission (report.json, samples.csv, spectrum.svg).

Exit codes: 0 success, 2 config error, 3 spike/annulus violation,
4 statistical-test failure under --check. Output files are written only after
a run completes, so failures never leave partial artifacts.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import elliptic_law, experiments, spike as spike_mod, weingarten
from .ensembles import EnsembleSpec, ParameterError, make_rng, sample
from .linalg import eigenvalues_lapack
from .spike import AnnulusError, SpecError
from .symgroup import Permutation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SPEC = 3
EXIT_CHECK = 4


def parse_complex(text: str) -> complex:
    cleaned = text.strip().replace(" ", "")
    try:
        return complex(cleaned)
    except ValueError:
        return complex(cleaned.replace("i", "j"))


# ---------------------------------------------------------------------------
# SVG emission (hand-rolled: the figure is points plus one ellipse)

def _svg_scatter(rho: float, layers: list[tuple[np.ndarray, str]], size: int = 640) -> str:
    """Scatter plot of complex points over the limit ellipse.

    layers: (points, style) with style one of 'dot' (bulk), 'cross'
    (outliers), 'disc' (predictions).
    """
    a, b = 1.0 + rho, 1.0 - rho
    xs = [a, -a]
    ys = [b, -b]
    for pts, _ in layers:
        if len(pts):
            xs += [float(np.max(pts.real)), float(np.min(pts.real))]
            ys += [float(np.max(pts.imag)), float(np.min(pts.imag))]
    span = 1.15 * max(max(map(abs, xs)), max(map(abs, ys)), 1e-9)
    scale = size / (2.0 * span)

    def sx(x: float) -> float:
        return (x + span) * scale

    def sy(y: float) -> float:
        return (span - y) * scale  # svg y axis points down

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<ellipse cx="{sx(0):.2f}" cy="{sy(0):.2f}" rx="{a * scale:.2f}" '
        f'ry="{b * scale:.2f}" fill="none" stroke="black" stroke-width="1"/>',
    ]
    for pts, style in layers:
        for w in pts:
            x, y = sx(float(w.real)), sy(float(w.imag))
            if style == "dot":
                parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="1.2" fill="#555555"/>')
            elif style == "cross":
                parts.append(
                    f'<path d="M {x - 4:.2f} {y - 4:.2f} L {x + 4:.2f} {y + 4:.2f} '
                    f'M {x - 4:.2f} {y + 4:.2f} L {x + 4:.2f} {y - 4:.2f}" '
                    f'stroke="blue" stroke-width="1.5" fill="none"/>'
                )
            else:
                parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="4" fill="red"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# shared helpers

def _resolve_spec(args) -> spike_mod.JordanSpec:
    if getattr(args, "spec_json", None):
        text = Path(args.spec_json).read_text()
        spec, rho, seed = spike_mod.spec_from_json(text)
        # file payload carries rho and seed; explicit flags win
        if args.rho is None:
            args.rho = rho
        if args.seed is None:
            args.seed = seed
        return spec
    preset = getattr(args, "preset", None)
    if not preset:
        raise ParameterError("need --preset or --spec-json")
    if preset not in spike_mod.PRESETS:
        raise ParameterError(f"unknown preset {preset!r}; choose from {sorted(spike_mod.PRESETS)}")
    return spike_mod.PRESETS[preset]()


def _finish(args, report: experiments.ExperimentReport, svg: str | None = None) -> None:
    out = Path(args.out) if getattr(args, "out", None) else None
    if out is None:
        print(report.json())
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.json())
    (out / "samples.csv").write_text(report.csv())
    if svg is not None:
        (out / "spectrum.svg").write_text(svg)


def _config_echo(args, **extra) -> dict:
    # the output directory is environment, not configuration: reports stay
    # byte-identical no matter where they land
    skip = {"func", "out"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None}
    for k, v in cfg.items():
        if isinstance(v, complex):
            cfg[k] = [v.real, v.imag]
    cfg.update(extra)
    return cfg


def _scalar_or_pair(value: complex) -> float | list[float]:
    value = complex(value)
    if abs(value.imag) < 1e-15:
        return value.real
    return [value.real, value.imag]


# ---------------------------------------------------------------------------
# subcommands

def cmd_weingarten(args) -> int:
    table = weingarten.weingarten_table(args.n, args.N)
    payload = {
        str(list(ctype)).replace(" ", ""): f"{frac.numerator}/{frac.denominator}"
        for ctype, frac in table.values.items()
    }
    text = json.dumps(payload, sort_keys=True, indent=2)
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "weingarten.json").write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_phi(args) -> int:
    z = parse_complex(args.z)
    zp = parse_complex(args.zprime)
    theta = elliptic_law.theta_of(z, args.rho)
    theta_p = elliptic_law.theta_of(zp, args.rho)
    payload = {
        "phi": _scalar_or_pair(elliptic_law.phi(z, zp, args.rho)),
        "phi_same": _scalar_or_pair(elliptic_law.phi_same(theta, theta_p, args.rho)),
    }
    print(json.dumps(payload, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_sample(args) -> int:
    watch = experiments.Stopwatch()
    spec = EnsembleSpec(
        kind=args.kind, dim=args.N, rho=args.rho if args.kind == "elliptic" else None,
        seed=args.seed, stream=args.stream,
    )
    draw = sample(spec)
    watch.lap("sampling")
    rows = []
    stats: dict = {"kind": args.kind, "dim": args.N}
    if isinstance(draw, Permutation):
        for i, img in enumerate(draw.images):
            rows.append((0, args.N, i, img, 1.0, 0.0))
        from .ensembles import cycle_counts

        stats["cycle_counts"] = {str(d): c for d, c in sorted(cycle_counts(draw).items())}
    else:
        for i in range(draw.shape[0]):
            for j in range(draw.shape[1]):
                rows.append((0, args.N, i, j, float(draw[i, j].real), float(draw[i, j].imag)))
        stats["trace"] = _scalar_or_pair(complex(np.trace(draw)))
        stats["frobenius_sq_over_n"] = float((np.abs(draw) ** 2).sum() / args.N)
    report = experiments.ExperimentReport(
        command="sample",
        config=_config_echo(args),
        statistics=stats,
        samples=rows,
        timings=watch.marks,
    )
    _finish(args, report)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    watch = experiments.Stopwatch()
    spec = _resolve_spec(args)
    rho = args.rho or 0.0
    seed = args.seed if args.seed is not None else 0
    eps = args.eps if args.eps is not None else spike_mod.default_eps(spec, rho)
    predictions = spike_mod.predicted_outliers(spec, rho, eps)

    rng = make_rng(seed, 0)
    from .ensembles import sample_elliptic

    X = sample_elliptic(args.N, rho, rng)
    X /= np.sqrt(args.N)
    d = spec.core_dim
    X[:d, :d] += spike_mod.core_matrix(spec)
    eigs = eigenvalues_lapack(X).eigenvalues
    watch.lap("sampling_and_spectrum")

    outliers = experiments.detect_outliers(eigs, rho, eps)
    bulk = eigs[np.abs(eigs) <= 1.0 + abs(rho) + 2.0 * eps]
    rows = [(0, args.N, -1, -1, float(w.real), float(w.imag)) for w in bulk]
    rows += [(0, args.N, -2, -1, float(w.real), float(w.imag)) for w in outliers]
    rows += [(-1, args.N, i, -1, float(h.real), float(h.imag)) for i, (h, _) in enumerate(predictions)]
    stats = {
        "eps": eps,
        "n_eigenvalues": len(eigs),
        "n_outliers": len(outliers),
        "predictions": [
            {"hat_theta": _scalar_or_pair(h), "count": c} for h, c in predictions
        ],
        "spectral_radius": float(np.abs(eigs).max()),
    }
    watch.lap("statistics")
    report = experiments.ExperimentReport(
        command="spectrum", config=_config_echo(args, derived_eps=eps),
        statistics=stats, samples=rows, timings=watch.marks,
    )
    svg = None
    if args.plot:
        svg = _svg_scatter(
            rho,
            [
                (bulk, "dot"),
                (outliers, "cross"),
                (np.array([h for h, _ in predictions]), "disc"),
            ],
        )
    _finish(args, report, svg)
    return EXIT_OK


def cmd_outliers(args) -> int:
    watch = experiments.Stopwatch()
    spec = _resolve_spec(args)
    rho = args.rho or 0.0
    seed = args.seed if args.seed is not None else 0
    eps = args.eps if args.eps is not None else spike_mod.default_eps(spec, rho)
    predictions = spike_mod.predicted_outliers(spec, rho, eps)
    expected = sum(c for _, c in predictions)

    samples = experiments.collect_fluctuations(
        spec, rho, args.N, args.replicas, seed, eps=eps
    )
    watch.lap("replicas")

    count_ok = float((samples.counts == expected).mean()) if args.replicas else 0.0
    spacing: dict[str, dict] = {}
    spacing_ok = 0
    spacing_total = 0
    srng = make_rng(seed, 10**6)
    for key, block in samples.blocks.items():
        if block.beta != 1 or block.p < 2:
            continue
        devs = [float(experiments.max_gap_deviation(row, block.p)) for row in block.scaled]
        ok = [dev <= 0.25 for dev in devs]
        spacing_ok += sum(ok)
        spacing_total += len(ok)
        pvals = [
            experiments.spacing_pvalue(row, block.p, srng, n_mc=400)
            for row in block.scaled[: min(len(block.scaled), 20)]
        ]
        spacing[f"spike{key[0]}_block{key[1]}"] = {
            "p": block.p,
            "max_gap_deviation_median": float(np.median(devs)),
            "gap_ok_fraction": float(np.mean(ok)),
            "spacing_pvalue_median": float(np.median(pvals)),
        }
    watch.lap("statistics")

    rows = []
    for key, block in samples.blocks.items():
        for row_idx, replica in enumerate(samples.kept_replicas):
            for w in block.scaled[row_idx]:
                rows.append((replica, args.N, key[0], key[1], float(w.real), float(w.imag)))

    stats = {
        "eps": eps,
        "expected_outliers": expected,
        "fraction_exact_count": count_ok,
        "discarded": samples.discarded,
        "count_histogram": {
            str(v): int((samples.counts == v).sum()) for v in sorted(set(samples.counts))
        },
        "polygons": spacing,
    }
    report = experiments.ExperimentReport(
        command="outliers", config=_config_echo(args, derived_eps=eps),
        statistics=stats, samples=rows, timings=watch.marks,
    )

    svg = None
    if args.plot:
        rng = make_rng(seed, 0)
        from .ensembles import sample_elliptic

        X = sample_elliptic(args.N, rho, rng)
        X /= np.sqrt(args.N)
        d = spec.core_dim
        X[:d, :d] += spike_mod.core_matrix(spec)
        eigs = eigenvalues_lapack(X).eigenvalues
        outs = experiments.detect_outliers(eigs, rho, eps)
        bulk = eigs[np.abs(eigs) <= 1.0 + abs(rho) + 2.0 * eps]
        report.samples += [(0, args.N, -1, -1, float(w.real), float(w.imag)) for w in bulk]
        svg = _svg_scatter(
            rho,
            [
                (bulk, "dot"),
                (outs, "cross"),
                (np.array([h for h, _ in predictions]), "disc"),
            ],
        )
        watch.lap("plot")
    _finish(args, report, svg)

    if args.check:
        polygon_ok = all(v["max_gap_deviation_median"] <= 0.25 for v in spacing.values())
        if count_ok < 0.95 or not polygon_ok:
            return EXIT_CHECK
    return EXIT_OK


def cmd_fluctuations(args) -> int:
    watch = experiments.Stopwatch()
    spec = _resolve_spec(args)
    rho = args.rho or 0.0
    seed = args.seed if args.seed is not None else 0
    eps = args.eps if args.eps is not None else spike_mod.default_eps(spec, rho)

    samples = experiments.collect_fluctuations(spec, rho, args.N, args.replicas, seed, eps=eps)
    watch.lap("replicas")
    model = spike_mod.limit_gaussian_covariance(spec, rho)
    predicted = spike_mod.predicted_scalar_variances(model)
    test_rng = make_rng(seed, 10**6)

    stats: dict = {"eps": eps, "discarded": samples.discarded, "blocks": {}}
    all_pass = True
    for key, block in samples.blocks.items():
        mom = experiments.complex_moments(block.scaled.ravel())
        entry: dict = {
            "p": block.p,
            "beta": block.beta,
            "n": mom.n,
            "variance": mom.variance,
            "variance_se": mom.variance_se,
        }
        if key in predicted:
            pred = predicted[key]
            entry["predicted_variance"] = pred
            entry["variance_rel_err"] = abs(mom.variance - pred) / pred
        if len(samples.kept_replicas):
            test = experiments.fluctuation_test(
                block, model, test_rng, limit_draws=min(2000, max(200, args.replicas))
            )
            entry["energy_pvalue"] = test.p_value
            entry["energy_statistic"] = test.statistic
            if test.p_value <= 0.01:
                all_pass = False
        stats["blocks"][f"spike{key[0]}_block{key[1]}"] = entry

    # cross-spike coupling of scalar outlier clouds (nonzero for non-unitary Q)
    scalar_keys = [k for k, b in samples.blocks.items() if b.p == 1 and b.beta == 1]
    if len(scalar_keys) >= 2 and len(samples.kept_replicas):
        idx = model.coord_index()
        pos_of = {sid: pos for pos, sid in enumerate(model.spike_ids)}
        cross = {}
        for a in range(len(scalar_keys)):
            for b in range(a + 1, len(scalar_keys)):
                ka, kb = scalar_keys[a], scalar_keys[b]
                cov, se = experiments.cross_moment(
                    samples.blocks[ka].scaled.ravel(), samples.blocks[kb].scaled.ravel()
                )
                pa, pb = pos_of[ka[0]], pos_of[kb[0]]
                lay_a, lay_b = model.layouts[pa], model.layouts[pb]
                ca = spike_mod.block_scale(model.thetas[pa], rho, 1)
                cb = spike_mod.block_scale(model.thetas[pb], rho, 1)
                pred = (
                    ca * np.conj(cb)
                    * model.C[idx[(pa, lay_a.last_cols[0], lay_a.first_cols[0])],
                              idx[(pb, lay_b.last_cols[0], lay_b.first_cols[0])]]
                )
                cross[f"spike{ka[0]}_x_spike{kb[0]}"] = {
                    "covariance": _scalar_or_pair(complex(cov)),
                    "se": se,
                    "predicted": _scalar_or_pair(complex(pred)),
                }
        stats["cross_spike_covariance"] = cross
    watch.lap("statistics")

    rows = []
    for key, block in samples.blocks.items():
        for row_idx, replica in enumerate(samples.kept_replicas):
            for w in block.scaled[row_idx]:
                rows.append((replica, args.N, key[0], key[1], float(w.real), float(w.imag)))
    report = experiments.ExperimentReport(
        command="fluctuations", config=_config_echo(args, derived_eps=eps),
        statistics=stats, samples=rows, timings=watch.marks,
    )
    _finish(args, report)
    if args.check and not all_pass:
        return EXIT_CHECK
    return EXIT_OK


def cmd_rates(args) -> int:
    watch = experiments.Stopwatch()
    spec = _resolve_spec(args)
    rho = args.rho or 0.0
    seed = args.seed if args.seed is not None else 0
    Ns = [int(v) for v in args.Ns.split(",")]
    fits = experiments.rate_regression(spec, rho, Ns, args.replicas, seed, eps=args.eps)
    watch.lap("replicas")

    stats: dict = {"Ns": Ns, "blocks": {}}
    rows = []
    all_ok = True
    for key, fit in fits.items():
        p = spec.spikes[key[0]].blocks[key[1]][0]
        expected = -1.0 / (2.0 * p)
        ok = abs(fit.slope - expected) <= (0.1 if p == 1 else 0.15)
        all_ok &= ok
        stats["blocks"][f"spike{key[0]}_block{key[1]}"] = {
            "p": p,
            "slope": fit.slope,
            "stderr": fit.stderr,
            "expected_slope": expected,
            "within_tolerance": bool(ok),
        }
        for logn, logm in zip(fit.log_n, fit.log_median):
            rows.append((-1, int(round(np.exp(logn))), key[0], key[1], float(logm), 0.0))
    report = experiments.ExperimentReport(
        command="rates", config=_config_echo(args),
        statistics=stats, samples=rows, timings=watch.marks,
    )
    _finish(args, report)
    if args.check and not all_ok:
        return EXIT_CHECK
    return EXIT_OK


def cmd_clt(args) -> int:
    watch = experiments.Stopwatch()
    seed = args.seed if args.seed is not None else 0
    rho = args.rho or 0.0
    rows = []
    stats: dict = {}
    ok = True
    if args.kind == "resolvent":
        z = parse_complex(args.z)
        res = experiments.resolvent_entry_clt(
            rho, z, args.N, args.replicas, seed, collect_trace=args.independence
        )
        watch.lap("replicas")
        mom = experiments.complex_moments(res.G_ij)
        pred = res.predicted_variance
        trans_pseudo, trans_se = experiments.cross_pseudo_moment(res.G_ij, res.G_ji)
        pred_trans = res.predicted_transposed_pseudo
        stats = {
            "z": _scalar_or_pair(z),
            "variance": mom.variance,
            "variance_se": mom.variance_se,
            "predicted_variance": pred,
            "variance_rel_err": abs(mom.variance - pred) / pred,
            "pseudo": _scalar_or_pair(mom.pseudo),
            "pseudo_se": mom.pseudo_se,
            "transposed_pseudo": _scalar_or_pair(trans_pseudo),
            "transposed_pseudo_se": trans_se,
            "predicted_transposed_pseudo": _scalar_or_pair(pred_trans),
        }
        ok = stats["variance_rel_err"] <= 0.10 and abs(mom.pseudo) <= 4.0 * mom.pseudo_se
        if args.independence:
            ind = experiments.independence_check(res.G_ij, res.traces)
            stats["independence"] = {
                "covariance": _scalar_or_pair(ind.covariance),
                "covariance_se": ind.covariance_se,
                "degenerate": ind.degenerate,
            }
            ok = ok and (ind.degenerate or abs(ind.covariance) <= 4.0 * ind.covariance_se)
        rows = [(r, args.N, -1, -1, float(g.real), float(g.imag)) for r, g in enumerate(res.G_ij)]
    else:
        half = args.N // 2
        diag = [1.0] * half + [-1.0] * half + [0.0] * (args.N - 2 * half)
        B = np.diag(diag).astype(complex)
        res = experiments.conjugated_clt(B, args.N, args.replicas, seed)
        watch.lap("replicas")
        mom = experiments.complex_moments(res.G)
        pred = res.tau * res.beta
        stats = {
            "tau": res.tau,
            "beta": res.beta,
            "variance": mom.variance,
            "variance_se": mom.variance_se,
            "predicted_variance": pred,
            "variance_rel_err": abs(mom.variance - pred) / pred,
            "pseudo": _scalar_or_pair(mom.pseudo),
            "pseudo_se": mom.pseudo_se,
        }
        ok = stats["variance_rel_err"] <= 0.10 and abs(mom.pseudo) <= 4.0 * mom.pseudo_se
        rows = [(r, args.N, -1, -1, float(g.real), float(g.imag)) for r, g in enumerate(res.G)]
    watch.lap("statistics")
    report = experiments.ExperimentReport(
        command="clt", config=_config_echo(args), statistics=stats,
        samples=rows, timings=watch.marks,
    )
    _finish(args, report)
    if args.check and not ok:
        return EXIT_CHECK
    return EXIT_OK


def cmd_permutation(args) -> int:
    watch = experiments.Stopwatch()
    seed = args.seed if args.seed is not None else 0
    ks = tuple(int(v) for v in args.ks.split(","))
    res = experiments.permutation_clt_experiment(
        args.N, ks, args.replicas, seed, entry=(0, 1) if args.entries else None
    )
    watch.lap("replicas")
    stats: dict = {"ks": list(ks), "traces": {}}
    ok = True
    for k in ks:
        pmf = experiments.compound_poisson_pmf(k, 64)
        stat, p, dof = experiments.chisquare_vs_pmf(res.traces[k], pmf)
        stats["traces"][str(k)] = {"chi2": stat, "p_value": p, "dof": dof,
                                   "mean": float(res.traces[k].mean())}
        if p <= 0.01:
            ok = False
    if args.entries and len(ks) >= 2:
        pairs = {}
        for a in range(len(ks)):
            for b in range(a + 1, len(ks)):
                cov, se = experiments.cross_moment(res.entries[ks[a]], res.entries[ks[b]])
                pairs[f"k{ks[a]}_k{ks[b]}"] = {
                    "covariance": _scalar_or_pair(cov),
                    "se": se,
                    "within_4se": bool(abs(cov) <= 4.0 * se),
                }
                ok = ok and abs(cov) <= 4.0 * se
        pseudo, pse_se = experiments.cross_pseudo_moment(
            res.entries[ks[0]], res.entries[ks[0]]
        )
        stats["entry_pseudo_k%d" % ks[0]] = {
            "value": _scalar_or_pair(pseudo), "se": pse_se,
        }
        stats["entry_cross"] = pairs
    watch.lap("statistics")
    rows = []
    for k in ks:
        for r, t in enumerate(res.traces[k]):
            rows.append((r, args.N, -1, k, float(t), 0.0))
    report = experiments.ExperimentReport(
        command="permutation", config=_config_echo(args), statistics=stats,
        samples=rows, timings=watch.marks,
    )
    _finish(args, report)
    if args.check and not ok:
        return EXIT_CHECK
    return EXIT_OK


def cmd_biinvariant(args) -> int:
    watch = experiments.Stopwatch()
    seed = args.seed if args.seed is not None else 0
    res = experiments.biinvariant_experiment(args.N, args.replicas, seed)
    watch.lap("replicas")
    mom = experiments.complex_moments(res.G)
    stats = {
        "tau": res.tau,
        "variance": mom.variance,
        "variance_se": mom.variance_se,
        "exact_variance": res.exact_variance,
        "variance_rel_err": abs(mom.variance - res.exact_variance) / res.exact_variance,
        "pseudo": _scalar_or_pair(mom.pseudo),
        "pseudo_se": mom.pseudo_se,
    }
    ok = stats["variance_rel_err"] <= 0.10 and abs(mom.pseudo) <= 4.0 * mom.pseudo_se
    rows = [(r, args.N, -1, -1, float(g.real), float(g.imag)) for r, g in enumerate(res.G)]
    report = experiments.ExperimentReport(
        command="biinvariant", config=_config_echo(args), statistics=stats,
        samples=rows, timings=watch.marks,
    )
    _finish(args, report)
    if args.check and not ok:
        return EXIT_CHECK
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ellipticlab",
        description="Spiked Gaussian elliptic ensembles: outliers, fluctuation laws, "
        "and exact Haar-moment oracles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, replicas=True):
        p.add_argument("--seed", type=int, default=None, help="mandatory for runs; no wall-clock seeding")
        p.add_argument("--out", type=str, default=None, help="output directory")
        if replicas:
            p.add_argument("--replicas", type=int, default=100)

    p = sub.add_parser("weingarten", help="exact Weingarten table as JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=cmd_weingarten)

    p = sub.add_parser("phi", help="fluctuation kernels at (z, z')")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--z", type=str, required=True)
    p.add_argument("--zprime", type=str, required=True)
    p.set_defaults(func=cmd_phi)

    p = sub.add_parser("sample", help="draw one matrix from an ensemble")
    p.add_argument("--kind", choices=["gue", "ginibre", "elliptic", "haar_unitary", "permutation"],
                   required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--stream", type=int, default=0)
    add_common(p, replicas=False)
    p.set_defaults(func=cmd_sample)

    for name, fn, with_plot in [
        ("spectrum", cmd_spectrum, True),
        ("outliers", cmd_outliers, True),
        ("fluctuations", cmd_fluctuations, False),
    ]:
        p = sub.add_parser(name)
        p.add_argument("--preset", choices=sorted(spike_mod.PRESETS), default=None)
        p.add_argument("--spec-json", type=str, default=None)
        p.add_argument("--N", type=int, required=True)
        p.add_argument("--rho", type=float, default=None)
        p.add_argument("--eps", type=float, default=None)
        add_common(p, replicas=(name != "spectrum"))
        if with_plot:
            p.add_argument("--plot", action="store_true")
        if name != "spectrum":
            p.add_argument("--check", action="store_true")
        p.set_defaults(func=fn)

    p = sub.add_parser("rates", help="convergence-rate regression over N")
    p.add_argument("--preset", choices=sorted(spike_mod.PRESETS), default=None)
    p.add_argument("--spec-json", type=str, default=None)
    p.add_argument("--Ns", type=str, default="400,800,1600,3200")
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--check", action="store_true")
    add_common(p)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("clt", help="entry CLT for resolvent or conjugated ensembles")
    p.add_argument("--kind", choices=["resolvent", "conjugated"], default="resolvent")
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--z", type=str, default="2")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--independence", action="store_true")
    p.add_argument("--check", action="store_true")
    add_common(p)
    p.set_defaults(func=cmd_clt)

    p = sub.add_parser("permutation", help="conjugated permutation-matrix CLT")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--ks", type=str, default="1,2")
    p.add_argument("--entries", action="store_true")
    p.add_argument("--check", action="store_true")
    add_common(p)
    p.set_defaults(func=cmd_permutation)

    p = sub.add_parser("biinvariant", help="left/right-invariant ensemble CLT")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--check", action="store_true")
    add_common(p)
    p.set_defaults(func=cmd_biinvariant)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except AnnulusError as exc:
        print(f"spec violation: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (SpecError, elliptic_law.DomainError) as exc:
        print(f"spec violation: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (ParameterError, experiments.DomainError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
