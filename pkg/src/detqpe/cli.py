"""Command-line driver.

    detqpe inspect FCIDUMP
    detqpe run FCIDUMP --ansatz FILE|hf --out DIR [options]
    detqpe run --manifest report.json
    detqpe oracle FCIDUMP [--trotter-steps 1,2,4]

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import oracle, readout
from .determinants import DeterminantSpace
from .hamiltonian import TERM_CLASSES, FcidumpError, expand_and_classify, parse_fcidump
from .qpe import (
    MODES,
    Ansatz,
    AnsatzError,
    MemoryBudgetExceeded,
    NumericalBreakdown,
    QpeConfig,
    load_ansatz,
    memory_estimate,
    run_qpe,
)
from .trotter import ORDERINGS, TrotterConfig

log = logging.getLogger("detqpe")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2
CSV_NAME, DIST_JSON_NAME, REPORT_NAME = "distribution.csv", "distribution.json", "report.json"


class InputError(Exception):
    pass


@dataclass
class RunManifest:
    input: str
    ansatz: str
    p: int = 10
    r: int = 1
    t: float = 1.0
    mode: str = "overlap"
    ordering: str = "default"
    threshold: float = readout.DEFAULT_THRESHOLD
    window: list | None = None
    out: str = "."
    outputs: list = field(default_factory=lambda: [CSV_NAME, DIST_JSON_NAME, REPORT_NAME])
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise InputError(f"unknown manifest fields: {sorted(unknown)}")
        return cls(**d)


def _parse_window(text):
    if text is None:
        return None
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must be LO:HI, got {text!r}") from None
    if not lo < hi:
        raise argparse.ArgumentTypeError("window needs LO < HI")
    return [lo, hi]


def _load_hamiltonian(path):
    try:
        ints = parse_fcidump(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return ints, expand_and_classify(ints)


def _memory_rows(space, p):
    rows = {}
    for mode in MODES:
        est = memory_estimate(space, p, mode)
        rows[mode] = {"bytes": est.bytes, "reduction_vs_full_register": est.reduction}
    return rows


def cmd_inspect(args) -> int:
    if args.fcidump is not None:
        ints, H = _load_hamiltonian(args.fcidump)
        n, ka, kb = ints.n_orbitals, ints.n_alpha, ints.n_beta
        info = {
            "n_orbitals": n,
            "n_alpha": ka,
            "n_beta": kb,
            "offset": H.offset,
            "term_counts": H.term_counts(),
        }
    else:
        if None in (args.orbitals, args.alpha, args.beta):
            raise InputError("give an FCIDUMP or all of --orbitals/--alpha/--beta")
        n, ka, kb = args.orbitals, args.alpha, args.beta
        info = {"n_orbitals": n, "n_alpha": ka, "n_beta": kb}
    space = DeterminantSpace(n, ka, kb)
    info["dimension"] = space.dimension
    info["full_register_amplitudes"] = space.naive_amplitudes()
    info["reduction_factor"] = space.naive_amplitudes() / space.dimension
    info["memory_bytes"] = {"p": args.precision_bits, **_memory_rows(space, args.precision_bits)}
    if args.json:
        print(json.dumps(info, indent=2))
        return EXIT_OK
    print(f"orbitals          {n}")
    print(f"electrons         {ka} alpha, {kb} beta")
    if "offset" in info:
        print(f"offset            {info['offset']!r}")
        counts = info["term_counts"]
        print("terms             " + ", ".join(f"{k}={counts[k]}" for k in TERM_CLASSES))
    print(f"dimension         {space.dimension}")
    print(f"reduction         {info['reduction_factor']:.1f}x vs 2^{2 * n} amplitudes")
    for mode in MODES:
        b = info["memory_bytes"][mode]["bytes"]
        print(f"memory {mode:<10} {b} bytes ({b / 1e6:.1f} MB) at p={args.precision_bits}")
    return EXIT_OK


def _write_atomic(outdir: Path, files: dict):
    outdir.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=outdir, prefix=f".{name}.")
            with os.fdopen(fd, "w", newline="\n") as fh:
                fh.write(text)
            staged.append((tmp, outdir / name))
        for tmp, final in staged:
            os.replace(tmp, final)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


def execute(manifest: RunManifest) -> dict:
    """Run one manifest; returns the report dict after writing outputs."""
    ints, H = _load_hamiltonian(manifest.input)
    space = DeterminantSpace(ints.n_orbitals, ints.n_alpha, ints.n_beta)
    if manifest.ansatz.lower() == "hf":
        ansatz = Ansatz.hartree_fock(space)
    else:
        try:
            text = Path(manifest.ansatz).read_text()
        except OSError as exc:
            raise InputError(f"cannot read ansatz {manifest.ansatz}: {exc.strerror}") from None
        ansatz = load_ansatz(text, space)
    try:
        cfg = QpeConfig(
            manifest.p,
            TrotterConfig(manifest.t, manifest.r, manifest.ordering),
            manifest.mode,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    window = tuple(manifest.window) if manifest.window else None
    log.info("running %s QPE: dimension %d, p=%d, r=%d", cfg.mode, space.dimension, cfg.p, cfg.trotter.r)
    dist = run_qpe(H, ansatz, cfg)
    report = readout.build_report(dist, cfg.trotter.r, cfg.trotter.t, H.offset, manifest.threshold, window)
    man = asdict(manifest)
    full = {
        "manifest": man,
        "hamiltonian": {
            "n_orbitals": space.n,
            "n_alpha": space.k_alpha,
            "n_beta": space.k_beta,
            "dimension": space.dimension,
            "offset": H.offset,
            "term_counts": H.term_counts(),
        },
        "memory_bytes": memory_estimate(space, cfg.p, cfg.mode).bytes,
        "readout": report,
    }
    manifest_line = "manifest: " + json.dumps(man, sort_keys=True)
    _write_atomic(Path(manifest.out), {
        CSV_NAME: dist.to_csv([manifest_line]),
        DIST_JSON_NAME: dist.to_json({"manifest": man}, indent=1) + "\n",
        REPORT_NAME: json.dumps(full, indent=2) + "\n",
    })
    return full


def cmd_run(args) -> int:
    if args.manifest:
        try:
            data = json.loads(Path(args.manifest).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot load manifest {args.manifest}: {exc}") from None
        manifest = RunManifest.from_dict(data.get("manifest", data))
        if args.out:
            manifest.out = args.out
    else:
        if args.fcidump is None or args.ansatz is None:
            raise InputError("run needs FCIDUMP and --ansatz (or --manifest)")
        manifest = RunManifest(
            input=args.fcidump,
            ansatz=args.ansatz,
            p=args.precision_bits,
            r=args.trotter_steps,
            t=args.time,
            mode=args.mode,
            ordering=args.ordering,
            threshold=args.threshold,
            window=args.window,
            out=args.out or ".",
            seed=args.seed,
        )
    full = execute(manifest)
    rep = full["readout"]
    print(f"top bin {rep['top_bin']} with probability {rep['top_probability']:.4f}; "
          f"resolution {rep['resolution']:.6g} Eh")
    for pk in rep["peaks"]:
        energies = ", ".join(f"{c['energy']:.6f} (k={c['alias_k']})" for c in pk["candidates"])
        print(f"  m={pk['m']:<8d} prob={pk['probability']:.4f}  E: {energies or 'none in window'}")
    for wa in rep["weighted_averages"]:
        print(f"  weighted average of bins {wa['bins']}: {wa['energy']:.6f}")
    print(f"wrote {CSV_NAME}, {DIST_JSON_NAME}, {REPORT_NAME} to {manifest.out}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    ints, H = _load_hamiltonian(args.fcidump)
    space = DeterminantSpace(ints.n_orbitals, ints.n_alpha, ints.n_beta)
    Hd = oracle.build_dense_hamiltonian(H, space, args.cap)
    w, V = oracle.exact_eigensolve(Hd)
    out = {"dimension": space.dimension, "eigenvalues": [float(x) for x in w[: args.states]]}
    rows = []
    for r in args.trotter_steps:
        cfg = TrotterConfig(args.time, r, args.ordering)
        err = oracle.trotter_error(H, space, cfg, args.cap)
        rows.append({"r": r, "trotter_error": err,
                     "energy_drift_bound": oracle.energy_drift_bound(err, args.time)})
    out["trotter"] = rows
    if args.write_ground_ansatz:
        ans = Ansatz.from_vector(space, V[:, 0], tol=1e-14)
        Path(args.write_ground_ansatz).write_text(ans.dumps())
    if args.json:
        print(json.dumps(out, indent=2))
        return EXIT_OK
    print(f"dimension {space.dimension}")
    for i, e in enumerate(out["eigenvalues"]):
        print(f"E[{i}] = {e:.10f}")
    if rows:
        print(f"{'r':>6} {'||W^r - exp(-iHt)||':>22} {'energy drift':>14}")
        for row in rows:
            print(f"{row['r']:>6d} {row['trotter_error']:>22.6e} {row['energy_drift_bound']:>14.6e}")
    return EXIT_OK


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors (exit 1); exit 2 is reserved for numerics."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _join_window(argv):
    # "--window -2:0" would otherwise read "-2:0" as an option
    out = list(argv)
    for i, tok in enumerate(out[:-1]):
        if tok == "--window":
            out[i:i + 2] = [f"--window={out[i + 1]}"]
            break
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="detqpe", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    pi = sub.add_parser("inspect", help="sizes, term counts and memory estimates")
    pi.add_argument("fcidump", nargs="?")
    pi.add_argument("--orbitals", type=int)
    pi.add_argument("--alpha", type=int)
    pi.add_argument("--beta", type=int)
    pi.add_argument("-p", "--precision-bits", type=int, default=14)
    pi.add_argument("--json", action="store_true")
    pi.set_defaults(func=cmd_inspect)

    pr = sub.add_parser("run", help="emulate QPE and read out energies")
    pr.add_argument("fcidump", nargs="?")
    pr.add_argument("--ansatz", help="ansatz file, or 'hf' for the lowest determinant")
    pr.add_argument("--manifest", help="re-run the manifest embedded in a previous report")
    pr.add_argument("-p", "--precision-bits", type=int, default=10)
    pr.add_argument("-r", "--trotter-steps", type=int, default=1)
    pr.add_argument("-t", "--time", type=float, default=1.0)
    pr.add_argument("--mode", choices=MODES, default="overlap")
    pr.add_argument("--ordering", choices=ORDERINGS, default="default")
    pr.add_argument("--threshold", type=float, default=readout.DEFAULT_THRESHOLD)
    pr.add_argument("--window", type=_parse_window, metavar="LO:HI")
    pr.add_argument("--out")
    pr.add_argument("--seed", type=int, default=0)
    pr.set_defaults(func=cmd_run)

    po = sub.add_parser("oracle", help="exact diagonalisation and Trotter error table")
    po.add_argument("fcidump")
    po.add_argument("--trotter-steps", type=_int_list, default=[])
    po.add_argument("-t", "--time", type=float, default=1.0)
    po.add_argument("--ordering", choices=ORDERINGS, default="default")
    po.add_argument("--states", type=int, default=5)
    po.add_argument("--cap", type=int, default=oracle.DEFAULT_CAP)
    po.add_argument("--write-ground-ansatz", metavar="PATH")
    po.add_argument("--json", action="store_true")
    po.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(_join_window(sys.argv[1:] if argv is None else argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (NumericalBreakdown, np.linalg.LinAlgError) as exc:
        print(f"detqpe: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, FcidumpError, AnsatzError, MemoryBudgetExceeded,
            oracle.DimensionCapExceeded, ValueError, OverflowError, TypeError) as exc:
        print(f"detqpe: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
