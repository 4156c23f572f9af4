"""Command-line front end.

Every command writes JSON (or CSV for ``foils``) to stdout or ``--out``.
Exit status is 0 on success, 1 when a verification fails and 2 on usage
errors or unreadable input.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import cone_foils, mic, qplex, sic
from ._jsonio import dumps
from .operator_core import (
    complex_to_pairs,
    pairs_to_complex,
    random_density,
    random_orthogonal_pair,
    random_povm,
    random_pure_state,
    random_unitary,
)

log = logging.getLogger("qplexkit")

CACHE_ENV = "QPLEXKIT_CACHE_DIR"


class InputError(Exception):
    """Malformed or unreadable input file."""


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _read_state(path) -> np.ndarray:
    data = _read_json(path)
    try:
        if "matrix" in data:
            rho = pairs_to_complex(data["matrix"])
        else:
            psi = pairs_to_complex(data["amplitudes"])
            psi = psi / np.linalg.norm(psi)
            rho = np.outer(psi, psi.conj())
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: expected 'matrix' or 'amplitudes' of [re, im] pairs ({exc})") from exc
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InputError(f"{path}: state matrix is not square")
    return rho


def _read_array(path, key: str) -> np.ndarray:
    data = _read_json(path)
    if isinstance(data, dict):
        data = data.get(key)
    try:
        return np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: expected a numeric array ({exc})") from exc


def get_sic(d: int, seed: int = 0, restarts: int = 10, tol: float = 1e-12, workers: int = 1) -> tuple[sic.Sic, float]:
    """Search for a SIC, reusing a cached fiducial when the cache dir is set."""
    cache = os.environ.get(CACHE_ENV)
    path = Path(cache) / f"fiducial-d{d}-seed{seed}-r{restarts}.json" if cache else None
    if path is not None and path.exists():
        try:
            psi, data = sic.load_fiducial(path)
            return sic.Sic.from_fiducial(psi), float(data["potential"])
        except (ValueError, KeyError) as exc:
            log.warning("ignoring bad cache entry %s: %s", path, exc)
    result = sic.search_fiducial(d, restarts, seed, tol, workers)
    if not result.converged:
        raise RuntimeError(f"SIC search failed for d={d}: best potential {result.potential:.3e}")
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        sic.save_fiducial(result, path)
    return sic.Sic.from_fiducial(result.fiducial), result.potential


def _sic_from_args(args) -> sic.Sic:
    if args.fiducial:
        try:
            psi, _ = sic.load_fiducial(args.fiducial)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read {args.fiducial}: {exc}") from exc
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        return sic.Sic.from_fiducial(psi)
    if args.d is None:
        raise InputError("give --fiducial FILE or --d")
    return get_sic(args.d, args.seed, args.restarts, workers=args.workers)[0]


def _summary(values) -> dict:
    v = np.asarray(values, dtype=float)
    return {"max": float(v.max()), "mean": float(v.mean())}


def report_all(d: int, seed: int = 0, restarts: int = 10, workers: int = 1) -> dict:
    """Run every subsystem check at dimension d and collect the residuals."""
    if not 2 <= d <= 8:
        raise ValueError("report supports 2 <= d <= 8")
    s, potential = get_sic(d, seed, restarts, workers=workers)
    params = qplex.make_params(d, 2)
    trip = sic.triple_products(s)
    streams = np.random.SeedSequence(seed).spawn(5)

    rng = np.random.default_rng(streams[0])
    quad, cubic = [], []
    for _ in range(100):
        psi = random_pure_state(d, rng)
        rq, rc = qplex.qbic_residuals(qplex.state_to_probs(np.outer(psi, psi.conj()), s), trip, d)
        quad.append(rq)
        cubic.append(rc)

    u = random_unitary(d, np.random.default_rng(streams[1]))
    mmd_set = [qplex.state_to_probs(np.outer(u[:, k], u[:, k].conj()), s) for k in range(d)]
    mmd_report = qplex.mmd_verify(mmd_set, params)
    r_mmd = qplex.mmd_to_measurement(mmd_set, params)
    uniform_dev = float(np.max(np.abs(qplex.urgleichung(r_mmd, params.flat, params) - 1 / d)))

    m = mic.mic_from_sic(s)
    biorth = np.einsum("iab,jba->ij", m.duals, m.elements).real
    gram_dual = np.einsum("iab,jba->ij", m.duals, m.duals).real

    cone = cone_foils.build_cone(params)
    rng = np.random.default_rng(streams[2])
    cone_dev = 0.0
    for _ in range(100):
        v = cone.random_normalized_point(rng)
        cone_dev = max(cone_dev, float(np.max(np.abs(cone_foils.f_inverse(cone, cone_foils.f_map(cone, v)) - v))))

    rng = np.random.default_rng(streams[3])
    born_dev = []
    for _ in range(100):
        rho = random_density(d, rng)
        povm = random_povm(d, int(rng.integers(2, d * d + 1)), rng)
        q = qplex.urgleichung(qplex.measurement_matrix(povm, s), qplex.state_to_probs(rho, s), params)
        born = np.einsum("jab,ba->j", povm, rho).real
        born_dev.append(float(np.max(np.abs(q - born))))

    rng = np.random.default_rng(streams[4])
    inner_dev = []
    for _ in range(100):
        a, b = random_orthogonal_pair(d, rng)
        pa = qplex.state_to_probs(np.outer(a, a.conj()), s)
        pb = qplex.state_to_probs(np.outer(b, b.conj()), s)
        inner_dev.append(max(abs(pa @ pa - params.U), abs(pa @ pb - params.L)))

    return {
        "d": d,
        "seed": seed,
        "params": params.to_dict(),
        "sic": {**sic.sic_verify(s.vectors).to_dict(), "potential": potential, "fiducial": complex_to_pairs(s.fiducial)},
        "band": {"samples": 100, "max_deviation": max(inner_dev)},
        "qbic": {
            "samples": 100,
            "quadratic_rhs": 2 / (d * (d + 1)),
            "cubic_rhs": qplex.qbic_rhs(d),
            "quadratic_residual": _summary(quad),
            "cubic_residual": _summary(cubic),
        },
        "mmd": {**mmd_report.to_dict(), "uniform_outcome_deviation": uniform_dev},
        "mic": {
            "self_duality_gap": mic.self_duality_gap(m),
            "biorthogonality_deviation": float(np.max(np.abs(biorth - np.eye(d * d)))),
            "gram_inverse_deviation": float(np.max(np.abs(gram_dual @ m.gram - np.eye(d * d)))),
        },
        "cone": {"q": 2, "samples": 100, "round_trip_deviation": cone_dev},
        "urgleichung": {"samples": 100, "born_deviation": _summary(born_dev)},
    }


def _write(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_search_sic(args) -> int:
    result = sic.search_fiducial(args.d, args.restarts, args.seed, args.tol, args.workers)
    _write(args, dumps(result.to_dict()) + "\n")
    return 0 if result.converged else 1


def cmd_verify_sic(args) -> int:
    try:
        psi, _ = sic.load_fiducial(args.fiducial)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {args.fiducial}: {exc}") from exc
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    report = sic.sic_verify(sic.wh_orbit(psi), args.verify_tol)
    _write(args, dumps(report.to_dict()) + "\n")
    return 0 if report else 1


def cmd_probs(args) -> int:
    s = _sic_from_args(args)
    rho = _read_state(args.state)
    if rho.shape != (s.dim, s.dim):
        raise InputError("state dimension does not match the SIC")
    p = qplex.state_to_probs(rho, s)
    _write(args, dumps({"d": s.dim, "p": p}) + "\n")
    return 0


def cmd_reconstruct(args) -> int:
    s = _sic_from_args(args)
    try:
        rho, psd = qplex.probs_to_state(_read_array(args.probs, "p"), s)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _write(args, dumps({"d": s.dim, "matrix": complex_to_pairs(rho), "psd": psd}) + "\n")
    return 0


def cmd_urgleichung(args) -> int:
    params = qplex.make_params(args.d, args.q)
    try:
        r = _read_array(args.r, "r")
        p = _read_array(args.p, "p")
        q = qplex.urgleichung(r, p, params)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _write(args, dumps({"params": params.to_dict(), "q": q, "negative": bool(q.min() < -1e-12)}) + "\n")
    return 0


def cmd_qbic(args) -> int:
    s = _sic_from_args(args)
    d = s.dim
    trip = sic.triple_products(s)
    if args.probs:
        ps = [_read_array(args.probs, "p")]
    else:
        rng = np.random.default_rng(args.seed)
        ps = []
        for _ in range(args.samples):
            psi = random_pure_state(d, rng)
            ps.append(qplex.state_to_probs(np.outer(psi, psi.conj()), s))
    try:
        res = np.array([qplex.qbic_residuals(p, trip, d) for p in ps])
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    out = {
        "d": d,
        "quadratic_rhs": 2 / (d * (d + 1)),
        "cubic_rhs": qplex.qbic_rhs(d),
        "samples": len(ps),
        "quadratic_residual": _summary(res[:, 0]),
        "cubic_residual": _summary(res[:, 1]),
    }
    _write(args, dumps(out) + "\n")
    return 0 if res.max() <= args.verify_tol else 1


def cmd_mmd(args) -> int:
    s = _sic_from_args(args)
    params = qplex.make_params(s.dim, 2)
    u = random_unitary(s.dim, np.random.default_rng(args.seed))
    vecs = [qplex.state_to_probs(np.outer(u[:, k], u[:, k].conj()), s) for k in range(s.dim)]
    report = qplex.mmd_verify(vecs, params, args.verify_tol)
    out = report.to_dict()
    if report.ok and report.saturated:
        r = qplex.mmd_to_measurement(vecs, params, args.verify_tol)
        out["measurement"] = r
        out["flat_outcomes"] = qplex.urgleichung(r, params.flat, params)
    _write(args, dumps(out) + "\n")
    return 0 if report else 1


def cmd_mic_report(args) -> int:
    if args.mic:
        try:
            m = mic.load_mic(args.mic)
        except (OSError, json.JSONDecodeError, ValueError, np.linalg.LinAlgError) as exc:
            raise InputError(f"{args.mic}: {exc}") from exc
    elif args.random:
        if args.d is None:
            raise InputError("--random needs --d")
        m = mic.random_rank1_mic(args.d, args.seed)
    else:
        m = mic.mic_from_sic(_sic_from_args(args))
    d = m.dim
    verify = mic.mic_verify(m.elements)
    overlap = mic.orthogonal_overlap_check(m, args.trials, args.seed)
    out = {
        "d": d,
        "verify": verify.to_dict(),
        "self_duality_gap": mic.self_duality_gap(m),
        "biorthogonality_deviation": float(
            np.max(np.abs(np.einsum("iab,jba->ij", m.duals, m.elements).real - np.eye(d * d)))
        ),
        "orthogonal_overlap": overlap.to_dict(),
    }
    _write(args, dumps(out) + "\n")
    return 0 if verify and overlap.ok and out["self_duality_gap"] > 0 else 1


def cmd_cone(args) -> int:
    cone = cone_foils.build_cone(qplex.make_params(args.d, args.q))
    _write(args, dumps(cone.to_dict()) + "\n")
    return 0


def cmd_foils(args) -> int:
    _write(args, cone_foils.foil_table(args.dmax))
    return 0


def cmd_report(args) -> int:
    _write(args, dumps(report_all(args.d, args.seed, args.restarts, args.workers)) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qplexkit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--restarts", type=int, default=10)
    common.add_argument("--workers", type=int, default=1)

    def sic_source(p):
        p.add_argument("--fiducial", help="fiducial JSON file")
        p.add_argument("--d", type=int, help="search a SIC in this dimension if no fiducial is given")

    p = sub.add_parser("search-sic", parents=[common], help="numerical SIC fiducial search")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(func=cmd_search_sic)

    p = sub.add_parser("verify-sic", parents=[common], help="check a fiducial file")
    p.add_argument("fiducial")
    p.add_argument("--tol", dest="verify_tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_verify_sic)

    p = sub.add_parser("probs", parents=[common], help="state -> SIC probability vector")
    sic_source(p)
    p.add_argument("--state", required=True, help="JSON with 'matrix' or 'amplitudes'")
    p.set_defaults(func=cmd_probs)

    p = sub.add_parser("reconstruct", parents=[common], help="SIC probability vector -> operator")
    sic_source(p)
    p.add_argument("--probs", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("urgleichung", parents=[common], help="q = r Phi p")
    p.add_argument("--r", required=True, help="JSON M x N conditional matrix")
    p.add_argument("--p", required=True, help="JSON probability vector")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--q", type=int, default=2)
    p.set_defaults(func=cmd_urgleichung)

    p = sub.add_parser("qbic", parents=[common], help="quadratic and cubic pure-state residuals")
    sic_source(p)
    p.add_argument("--probs", help="single probability vector; default samples random pure states")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--tol", dest="verify_tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_qbic)

    p = sub.add_parser("mmd", parents=[common], help="MMD check on a random orthonormal basis image")
    sic_source(p)
    p.add_argument("--tol", dest="verify_tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_mmd)

    p = sub.add_parser("mic-report", parents=[common], help="MIC frame diagnostics")
    sic_source(p)
    p.add_argument("--mic", help="MIC JSON file")
    p.add_argument("--random", action="store_true", help="random rank-1 MIC in dimension --d")
    p.add_argument("--trials", type=int, default=1000)
    p.set_defaults(func=cmd_mic_report)

    p = sub.add_parser("cone", parents=[common], help="dump a qplectic cone theory")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--q", type=int, default=2)
    p.set_defaults(func=cmd_cone)

    p = sub.add_parser("foils", parents=[common], help="CSV of Jordan foil parameter counts")
    p.add_argument("--dmax", type=int, default=5)
    p.set_defaults(func=cmd_foils)

    p = sub.add_parser("report", parents=[common], help="aggregate JSON of every check")
    p.add_argument("--d", type=int, required=True)
    p.set_defaults(func=cmd_report)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"qplexkit: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"qplexkit: error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"qplexkit: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
