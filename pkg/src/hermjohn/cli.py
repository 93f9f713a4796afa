"""Command line: ``hermjohn {solve,certify,contain,geodesic,repro,slice}``.

Exit codes
----------
0   success (``lp_optimal``, certificate passed, inscribed, checks passed)
1   a check failed (certificate, containment, geodesic, repro)
2   ``solve`` stopped at ``max_iters``
3   ``solve`` stalled (line search could not make progress)
64  bad configuration, unknown fixture or degenerate input
65  malformed measure file

Every JSON artifact embeds the run manifest (command, domain, overrides,
seed, outputs, library versions) and is written with sorted keys, so
identical invocations produce identical files.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import platform
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from . import fixtures
from .certificate import SOLVER_TOL, ContactMeasure, certificate_report
from .containment import ContainmentConfig, contacts_from_scan, scan
from .domains import DomainSpec, domain_from_json, grid_signs
from .harness import DEFAULT_GRID, convexity_probe, random_inscribed
from .hermitian import Ellipsoid, ValidationError
from .solver import CENTERED, TRANSLATE, PreconditionError, SolveConfig, solve

log = logging.getLogger("hermjohn")

EXIT_OK, EXIT_FAIL, EXIT_MAX_ITERS, EXIT_STALL = 0, 1, 2, 3
EXIT_CONFIG, EXIT_MEASURE = 64, 65
TERMINATION_CODES = {"lp_optimal": EXIT_OK, "max_iters": EXIT_MAX_ITERS, "step_stall": EXIT_STALL}


class UsageError(Exception):
    """Bad flags or inputs; maps to exit code 64."""


# --- manifest and output ------------------------------------------------------

def _versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("artifact", "numpy", "scipy", "scikit-image"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


@dataclasses.dataclass
class RunManifest:
    command: str
    domain: str | None
    overrides: dict
    seed: int
    outputs: list = dataclasses.field(default_factory=list)
    extra: dict = dataclasses.field(default_factory=dict)

    def to_json(self, cfg: SolveConfig | None = None) -> dict:
        out = {"command": self.command, "domain": self.domain, "overrides": self.overrides,
               "seed": self.seed, "outputs": self.outputs, "versions": _versions()}
        out.update(self.extra)
        if cfg is not None:
            out["config"] = dataclasses.asdict(cfg)
        return out


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _write_json(path: Path, payload: dict, manifest: RunManifest, cfg=None) -> None:
    manifest.outputs.append(path.name)
    payload = dict(payload, manifest=manifest.to_json(cfg))
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _write_text(path: Path, text: str, manifest: RunManifest) -> None:
    manifest.outputs.append(path.name)
    path.write_text(text)


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


# --- parsing helpers ------------------------------------------------------------

def _load_json(path: str, what: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {what} {path}: {exc}") from exc


def load_domain(spec: str, lam: float | None = None) -> tuple[DomainSpec, str | None]:
    """``builtin:<name>`` or a path to a domain JSON file; returns the builtin name too."""
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        try:
            return fixtures.builtin_domain(name, lam), name
        except ValidationError as exc:
            raise UsageError(str(exc)) from exc
    try:
        return domain_from_json(_load_json(spec, "domain")), None
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc


def load_config(text: str | None, mode: str | None, seed: int) -> tuple[SolveConfig, dict]:
    """Solver config from inline JSON or a JSON file of field overrides.

    The nested ``containment`` object overrides scan settings.
    """
    overrides: dict = {}
    if text:
        overrides = _load_json(text, "config") if Path(text).is_file() else _parse_inline(text)
        if not isinstance(overrides, dict):
            raise UsageError("config overrides must be a JSON object")
    fields = {f.name for f in dataclasses.fields(SolveConfig)}
    scan_fields = {f.name for f in dataclasses.fields(ContainmentConfig)}
    unknown = set(overrides) - fields
    scan_over = overrides.get("containment", {})
    if not isinstance(scan_over, dict):
        raise UsageError("'containment' overrides must be a JSON object")
    unknown |= {f"containment.{k}" for k in set(scan_over) - scan_fields}
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    kw = {k: v for k, v in overrides.items() if k != "containment"}
    if mode is not None:
        kw["mode"] = mode
    kw["seed"] = seed
    try:
        cfg = SolveConfig(containment=ContainmentConfig(**scan_over), **kw)
    except (TypeError, ValidationError) as exc:
        raise UsageError(f"bad config: {exc}") from exc
    return cfg, overrides


def _parse_inline(text: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is neither a file nor valid JSON: {exc}") from exc


def load_ellipsoid(path: str) -> Ellipsoid:
    obj = _load_json(path, "ellipsoid")
    obj = obj.get("ellipsoid", obj)  # accept a solve report as well
    try:
        return Ellipsoid.from_json(obj)
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc


def parse_grid(text: str | None) -> tuple:
    if not text:
        return DEFAULT_GRID
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError as exc:
        raise UsageError(f"bad --t-grid {text!r}: {exc}") from exc


# --- commands ---------------------------------------------------------------------

def cmd_solve(args) -> int:
    d, name = load_domain(args.domain, args.lam)
    cfg, over = load_config(args.config, args.mode, args.seed)
    E0 = (load_ellipsoid(args.start) if args.start else
          fixtures.default_start(d, cfg.mode, name, args.seed, cfg.scan_config))
    if E0.n != d.n:
        raise UsageError(f"start ellipsoid has dimension {E0.n}, domain has {d.n}")
    try:
        rep = solve(d, E0, cfg)
    except (PreconditionError, ValidationError) as exc:
        raise UsageError(str(exc)) from exc
    out = _out_dir(args)
    man = RunManifest("solve", args.domain, over, args.seed)
    _write_text(out / "volume_trace.csv", rep.volume_trace_csv(), man)
    _write_json(out / "solve.json", rep.to_json(), man, cfg)
    print(f"termination: {rep.termination} after {rep.iterations} iterations")
    print(f"volume: {rep.volume:.12g}")
    print("H =\n" + np.array2string(rep.ellipsoid.H, precision=8, suppress_small=True))
    if cfg.mode == TRANSLATE:
        print("center = " + np.array2string(rep.ellipsoid.center, precision=8))
        print("note: translate-mode optimality is local only (necessary conditions)")
    if rep.certificate is not None:
        print(f"certificate: {rep.certificate.status}")
    return TERMINATION_CODES.get(rep.termination, EXIT_FAIL)


def _certify_inputs(args) -> tuple[Ellipsoid, ContactMeasure, float, str]:
    if args.fixture:
        if args.fixture == "hyperbola-box":
            return (fixtures.hyperbola_ellipsoid(args.p), fixtures.hyperbola_measure(args.p),
                    1e-10, "hyperbola-box")
        if args.fixture == "disc-union":
            return (fixtures.disc_union_ellipsoid(), fixtures.disc_union_measure(),
                    1e-12, "disc-union")
        raise UsageError(f"unknown certificate fixture {args.fixture!r}")
    if not (args.ellipsoid and args.measure):
        raise UsageError("certify needs --fixture, or both --ellipsoid and --measure")
    E = load_ellipsoid(args.ellipsoid)
    try:
        obj = json.loads(Path(args.measure).read_text())
        obj = obj.get("measure", obj) if isinstance(obj, dict) else obj
        m = ContactMeasure.from_json(obj)
    except OSError as exc:
        raise UsageError(f"cannot read measure {args.measure}: {exc}") from exc
    except (json.JSONDecodeError, ValidationError, AttributeError) as exc:
        raise MalformedMeasure(str(exc)) from exc
    if m.n != E.n:
        raise MalformedMeasure(f"measure points have dimension {m.n}, ellipsoid has {E.n}")
    return E, m, args.threshold, args.ellipsoid


class MalformedMeasure(Exception):
    """Measure file that does not parse; maps to exit code 65."""


def cmd_certify(args) -> int:
    E, m, threshold, source = _certify_inputs(args)
    translate = args.mode == TRANSLATE or not E.centered or args.fixture == "disc-union"
    rep = certificate_report(E.form, m, E.center if translate else None, threshold, args.seed)
    if translate:
        print("warning: necessary-only (translate mode): passing does not prove maximality")
        print(f"first-moment residual:  {rep.vector_residual:.3e}")
        print(f"second-moment residual: {rep.translate_matrix_residual:.3e}")
    else:
        print(f"matrix residual: {rep.matrix_residual:.3e}")
    print(f"total mass: {rep.total_mass:.12g} (n = {E.n})")
    print(f"trace checks: " + ", ".join(f"{t:.2e}" for t in rep.trace_checks))
    print(f"status: {rep.status} (threshold {threshold:g})")
    if args.out:
        out = _out_dir(args)
        man = RunManifest("certify", source, {}, args.seed)
        _write_json(out / "certificate.json", rep.to_json(), man)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_contain(args) -> int:
    d, _ = load_domain(args.domain, args.lam)
    cfg, over = load_config(args.config, None, args.seed)
    scfg = cfg.scan_config
    E = load_ellipsoid(args.ellipsoid) if args.ellipsoid else random_inscribed(
        d, np.random.default_rng(args.seed), scfg)
    if E.n != d.n:
        raise UsageError(f"ellipsoid has dimension {E.n}, domain has {d.n}")
    s = scan(E, d, scfg)
    contacts = contacts_from_scan(E, s, scfg)
    ok = s.value <= scfg.inscribed_tol
    print(f"max rho on boundary: {s.value:.6e}")
    print(f"inscribed: {ok} (margin {-s.value:.6e})")
    print(f"contacts within {scfg.contact_eps:g}: {len(contacts)}")
    if args.out:
        out = _out_dir(args)
        man = RunManifest("contain", args.domain, over, args.seed)
        _write_text(out / "contacts.csv", contacts.to_csv(), man)
        _write_json(out / "contain.json", {"inscribed": ok, "margin": -s.value,
                                           "ellipsoid": E.to_json(),
                                           "contacts": contacts.to_json()}, man, cfg)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_geodesic(args) -> int:
    d, _ = load_domain(args.domain, args.lam)
    cfg, over = load_config(args.config, None, args.seed)
    scfg = cfg.scan_config
    grid = parse_grid(args.t_grid)
    rng = np.random.default_rng(args.seed)
    if args.ellipsoid and len(args.ellipsoid) not in (0, 2):
        raise UsageError("geodesic takes exactly two --ellipsoid paths (or none)")
    if args.ellipsoid:
        E0, E1 = (load_ellipsoid(p) for p in args.ellipsoid)
    else:
        E0, E1 = random_inscribed(d, rng, scfg), random_inscribed(d, rng, scfg)
    try:
        rep = convexity_probe(d, E0, E1, grid, scfg)
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc
    ok = rep.passed(args.tol)
    print(rep.to_csv(), end="")
    print(f"min margin: {rep.min_margin:.6e}  affinity error: {rep.affinity_error:.3e}")
    print(f"all interpolants inscribed: {ok}")
    if args.out:
        out = _out_dir(args)
        man = RunManifest("geodesic", args.domain, over, args.seed)
        _write_text(out / "geodesic.csv", rep.to_csv(), man)
        _write_json(out / "geodesic.json", dict(rep.to_json(), start=E0.to_json(),
                                                end=E1.to_json()), man, cfg)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_repro(args) -> int:
    names = fixtures.REPRO_FIXTURES if "all" in args.fixture else args.fixture
    for name in names:
        if name not in fixtures.REPRO_FIXTURES:
            raise UsageError(f"unknown fixture {name!r}; expected one of "
                             f"{', '.join(fixtures.REPRO_FIXTURES)} or all")
    cfg, over = load_config(args.config, None, args.seed)
    checks = []
    for name in names:
        kw = {}
        if name == "hyperbola-box" and args.seeds is not None:
            kw["n_seeds"] = args.seeds
        if name == "cassini" and args.lam is not None:
            kw["lam"] = args.lam
        checks += fixtures.run_repro(name, cfg, **kw)
    table = fixtures.format_table(checks)
    print(table, end="")
    if "disc-union" in names:
        print("note: the disc-union certificate is necessary-only (translate mode); "
              "the unit disc satisfies it yet D has larger area")
    if args.out:
        out = _out_dir(args)
        man = RunManifest("repro", ",".join(names), over, args.seed)
        _write_text(out / "repro.txt", table, man)
        _write_json(out / "repro.json", {"checks": [c.to_json() for c in checks]}, man, cfg)
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_OK if not failed else EXIT_FAIL


_AXIS_NAMES = ("re", "im")


def _axis(text: str, n: int) -> int:
    """``re0``/``im1``-style name (or a raw index) to a real coordinate index."""
    t = text.strip().lower()
    try:
        k = int(t[2:]) * 2 + _AXIS_NAMES.index(t[:2]) if t[:2] in _AXIS_NAMES else int(t)
    except ValueError as exc:
        raise UsageError(f"bad axis {text!r}") from exc
    if not 0 <= k < 2 * n:
        raise UsageError(f"axis {text!r} out of range for dimension {n}")
    return k


def slice_contours(values: np.ndarray, s: np.ndarray) -> list[np.ndarray]:
    """Zero contours of a grid function, in plane coordinates."""
    from skimage.measure import find_contours

    step = s[1] - s[0]
    return [s[0] + c * step for c in find_contours(values, 0.0)]


def svg_overlay(domain: list, ellipse: list, extent: float, size: int = 480) -> str:
    """Standalone SVG: domain contours in black, ellipsoid section in red."""
    def path(c):
        px = (c[:, 0] + extent) / (2 * extent) * size
        py = (extent - c[:, 1]) / (2 * extent) * size
        return "M " + " L ".join(f"{x:.2f},{y:.2f}" for x, y in zip(px, py))

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">',
             f'<rect width="{size}" height="{size}" fill="white"/>',
             f'<line x1="0" y1="{size / 2}" x2="{size}" y2="{size / 2}" stroke="#ccc"/>',
             f'<line x1="{size / 2}" y1="0" x2="{size / 2}" y2="{size}" stroke="#ccc"/>']
    parts += [f'<path d="{path(c)}" fill="none" stroke="black" stroke-width="1.5"/>'
              for c in domain]
    parts += [f'<path d="{path(c)}" fill="none" stroke="red" stroke-width="1.5"/>'
              for c in ellipse]
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_slice(args) -> int:
    d, _ = load_domain(args.domain, args.lam)
    axes = tuple(_axis(a, d.n) for a in args.axes.split(","))
    if len(axes) != 2 or axes[0] == axes[1]:
        raise UsageError("--axes must name two distinct real coordinates, e.g. re0,im0")
    base = np.zeros(2 * d.n)
    if args.base:
        try:
            base = np.array([float(b) for b in args.base.split(",")])
        except ValueError as exc:
            raise UsageError(f"bad --base: {exc}") from exc
        if base.size != 2 * d.n:
            raise UsageError(f"--base needs {2 * d.n} real coordinates")
    if args.num < 3 or (args.extent is not None and args.extent <= 0):
        raise UsageError("--num must be >= 3 and --extent positive")
    extent = args.extent or d.radius
    s, vals = grid_signs(d, axes, extent, args.num, base)
    domain = slice_contours(vals, s)
    ellipse = []
    if args.ellipsoid:
        E = load_ellipsoid(args.ellipsoid)
        if E.n != d.n:
            raise UsageError(f"ellipsoid has dimension {E.n}, domain has {d.n}")
        U, V = np.meshgrid(s, s, indexing="ij")
        X = np.tile(base, (U.size, 1))
        X[:, axes[0]], X[:, axes[1]] = U.ravel(), V.ravel()
        ellipse = slice_contours(E.residual(X[:, 0::2] + 1j * X[:, 1::2]).reshape(U.shape), s)
    lines = ["kind,contour,u,v"]
    for kind, cs in (("domain", domain), ("ellipsoid", ellipse)):
        for k, c in enumerate(cs):
            lines += [f"{kind},{k},{u!r},{v!r}" for u, v in c.tolist()]
    out = _out_dir(args)
    man = RunManifest("slice", args.domain, {}, args.seed,
                      extra={"axes": list(axes), "base": base.tolist(), "extent": extent})
    _write_text(out / "slice.csv", "\n".join(lines) + "\n", man)
    _write_text(out / "slice.svg", svg_overlay(domain, ellipse, extent), man)
    _write_json(out / "slice.json", {"domain_contours": len(domain),
                                     "ellipsoid_contours": len(ellipse)}, man)
    print(f"{len(domain)} domain contour(s), {len(ellipse)} ellipsoid contour(s) -> {out}")
    return EXIT_OK


# --- entry point -------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags, which would read as max_iters
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hermjohn", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, domain=True):
        if domain:
            sp.add_argument("--domain", required=True,
                            help="builtin:<name> (" + ", ".join(fixtures.BUILTINS) +
                                 ") or a domain JSON file")
        sp.add_argument("--lambda", dest="lam", type=float, default=None,
                        help="Cassini parameter for builtin:cassini")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--config", default=None,
                        help="JSON object of config overrides, inline or as a file")
        sp.add_argument("--out", default=None, help="output directory")

    sp = sub.add_parser("solve", help="maximize volume from an inscribed start")
    common(sp)
    sp.add_argument("--mode", choices=(CENTERED, TRANSLATE), default=CENTERED)
    sp.add_argument("--start", default=None, help="start ellipsoid JSON")
    sp.set_defaults(func=cmd_solve, out_default="out/solve")

    sp = sub.add_parser("certify", help="check a contact measure against an ellipsoid")
    common(sp, domain=False)
    sp.add_argument("--fixture", choices=("hyperbola-box", "disc-union"), default=None)
    sp.add_argument("--p", type=float, default=1.0, help="member of the hyperbola-box family")
    sp.add_argument("--ellipsoid", default=None)
    sp.add_argument("--measure", default=None)
    sp.add_argument("--mode", choices=(CENTERED, TRANSLATE), default=CENTERED)
    sp.add_argument("--threshold", type=float, default=SOLVER_TOL)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("contain", help="boundary scan: max rho and contact points")
    common(sp)
    sp.add_argument("--ellipsoid", default=None)
    sp.set_defaults(func=cmd_contain)

    sp = sub.add_parser("geodesic", help="inscription along the geodesic between two ellipsoids")
    common(sp)
    sp.add_argument("--ellipsoid", action="append", default=None,
                    help="endpoint JSON (give twice); random endpoints otherwise")
    sp.add_argument("--t-grid", default=None, help="comma-separated interior times")
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.set_defaults(func=cmd_geodesic)

    sp = sub.add_parser("repro", help="self-checking reproduction of the builtin examples")
    common(sp, domain=False)
    sp.add_argument("fixture", nargs="+", help=", ".join(fixtures.REPRO_FIXTURES) + " or all")
    sp.add_argument("--seeds", type=int, default=None, help="seeds for hyperbola-box")
    sp.set_defaults(func=cmd_repro)

    sp = sub.add_parser("slice", help="CSV + SVG of a real 2-plane section")
    common(sp)
    sp.add_argument("--axes", default="re0,im0", help="two real coordinates, e.g. re0,re1")
    sp.add_argument("--base", default=None, help="2n real coordinates of the plane origin")
    sp.add_argument("--extent", type=float, default=None)
    sp.add_argument("--num", type=int, default=301)
    sp.add_argument("--ellipsoid", default=None)
    sp.set_defaults(func=cmd_slice, out_default="out/slice")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.out is None and hasattr(args, "out_default"):
        args.out = args.out_default
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MalformedMeasure as exc:
        print(f"error: malformed measure: {exc}", file=sys.stderr)
        return EXIT_MEASURE


if __name__ == "__main__":
    sys.exit(main())
