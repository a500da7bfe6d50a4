"""``llrs`` command line: sweeps, closed-loop runs, instances, waveforms,
AWG traces and the acceptance suite.

Exit codes: 0 success, 2 acceptance failure, 1 any other error.  When
``--seed`` is omitted the ``LLRS_SEED`` environment variable is used.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

log = logging.getLogger("llrs")

EXIT_OK, EXIT_ERROR, EXIT_ACCEPT_FAIL = 0, 1, 2


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    return int(os.environ.get("LLRS_SEED", "0"))


def _parse_grid(items) -> dict | None:
    if not items:
        return None
    grid = {}
    for it in items:
        key, _, vals = it.partition("=")
        if not vals:
            raise ValueError(f"grid entry {it!r} should look like key=v1,v2")
        grid[key] = [json.loads(v) for v in vals.split(",")]
    return grid


def _write_rows(rows, out) -> None:
    if out:
        from .bench import write_csv

        write_csv(rows, out)
        log.info("wrote %d rows to %s", len(rows), out)
    else:
        w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def cmd_bench(args) -> int:
    from .bench import SweepSpec, fit_rows, run_sweep

    spec = SweepSpec(args.target, _parse_grid(args.grid), args.trials, _seed(args), args.epsilon)
    rows = run_sweep(spec)
    _write_rows(rows, args.out)
    if args.fit:
        fit = fit_rows(rows, args.fit, args.fit_y, args.model)
        print(f"fit {fit.model.value}: coefficients={fit.coefficients} r2={fit.r_squared:.4f}", file=sys.stderr)
    return EXIT_OK


def cmd_run(args) -> int:
    from .pipeline import latency_report, run_from_config, write_report

    cfg = {}
    if args.config:
        with open(args.config) as f:
            cfg = json.load(f)
    if args.seed is not None or "LLRS_SEED" in os.environ:
        s = _seed(args)
        cfg.setdefault("seeds", {"instance": s, "jitter": s, "loss": s})
    rows, ledgers = run_from_config(cfg)
    _write_rows(rows, args.out)
    if args.report:
        write_report(latency_report(ledgers), args.report)
    return EXIT_OK


def cmd_gen_instance(args) -> int:
    from .core import TrapArray, sample_instance

    traps = TrapArray.chain(args.nx) if args.ny == 1 else TrapArray.grid(args.nx, args.ny)
    n_target = args.n_target
    if n_target is None:  # half a chain, or a square block of a grid
        n_target = args.nx // 2 if args.ny == 1 else args.nx * min(args.nx, args.ny)
    inst = sample_instance(traps, args.epsilon, n_target, _seed(args))
    text = inst.to_json()
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        print(text)
    return EXIT_OK


def cmd_synth(args) -> int:
    from . import waveform as wf
    from .core import TrapArray

    spec = wf.TransitionSpec(wf.Shape(args.shape), args.param)
    if args.table:
        nx, ny = args.table
        traps = TrapArray.chain(nx) if ny == 1 else TrapArray.grid(nx, ny)
        table = wf.LookupTable(traps, spec)
        manifest = table.manifest()
        if args.out:
            table.dump_manifest(args.out)
        else:
            print(json.dumps(manifest, indent=2))
        return EXIT_OK
    t0 = wf.Tone(args.alpha, args.nu, args.phi)
    if args.kind == "static":
        w = wf.synth_static([t0])
    elif args.kind == "displace":
        w = wf.synth_displace(t0, wf.Tone(args.alpha, args.nu_to, args.phi_to), spec)
    else:
        w = wf.synth_transfer(t0, args.kind, spec)
    if args.out:
        wf.dump_raw(w, args.out)
    print(json.dumps({"kind": w.kind.value, "samples": w.n_samples, "bytes": w.nbytes,
                      "phase_residual": max(t.residual for t in w.tracks)}))
    return EXIT_OK


def cmd_awg_sim(args) -> int:
    from . import awg

    jitter = awg.JitterModel() if args.jitter else None
    cfg = awg.AwgConfig(waveforms_per_segment=args.per_segment, jitter=jitter)
    if args.trials > 1:
        p = awg.underrun_probability(cfg, args.trials, args.n_waveforms, _seed(args))
        print(json.dumps({"waveforms_per_segment": args.per_segment, "trials": args.trials, "p_underrun": p}))
        return EXIT_OK
    res = awg.run_streaming_script(awg.AwgState(cfg, _seed(args)), args.n_waveforms)
    rows = [{"time_ns": e.time, "event": e.kind.value, "step": e.step, "segment": e.segment} for e in res.events]
    _write_rows(rows, args.out)
    print(json.dumps({"underrun": res.underrun, "makespan_us": res.makespan / 1e3,
                      "first_sample_us": None if res.t_first_sample is None else res.t_first_sample / 1e3}),
          file=sys.stderr)
    return EXIT_OK


def cmd_accept(args) -> int:
    from .acceptance import run_all

    only = [int(x) for x in args.only.split(",")] if args.only else None
    results = run_all(only=only, quick=args.quick, seed=_seed(args))
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_ACCEPT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="llrs", description="Reconfiguration pipeline simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="run a figure/table sweep and write CSV")
    b.add_argument("--target", required=True)
    b.add_argument("--trials", type=int, default=1000)
    b.add_argument("--out")
    b.add_argument("--seed", type=int)
    b.add_argument("--epsilon", type=float, default=0.6)
    b.add_argument("--grid", action="append", help="override a grid axis: key=v1,v2,...")
    b.add_argument("--fit", metavar="X", help="fit y against this column")
    b.add_argument("--fit-y", default="median_us")
    b.add_argument("--model", default="power_law", choices=["power_law", "affine"])
    b.set_defaults(func=cmd_bench)

    r = sub.add_parser("run", help="closed-loop runs from a JSON config")
    r.add_argument("--config")
    r.add_argument("--out", help="per-run outcome CSV")
    r.add_argument("--report", help="per-phase latency CSV")
    r.add_argument("--seed", type=int)
    r.set_defaults(func=cmd_run)

    g = sub.add_parser("gen-instance", help="sample a problem instance as JSON")
    g.add_argument("--nx", type=int, required=True)
    g.add_argument("--ny", type=int, default=1)
    g.add_argument("--epsilon", type=float, default=0.6)
    g.add_argument("--n-target", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen_instance)

    s = sub.add_parser("synth", help="synthesize one waveform or a table manifest")
    s.add_argument("--kind", default="static", choices=["static", "displace", "extract", "implant"])
    s.add_argument("--shape", default="erf", choices=["erf", "tanh", "cubic_spline"])
    s.add_argument("--param", type=float)
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--nu", type=float, default=100e6)
    s.add_argument("--nu-to", type=float, default=100.1e6)
    s.add_argument("--phi", type=float, default=0.0)
    s.add_argument("--phi-to", type=float, default=0.0)
    s.add_argument("--table", type=int, nargs=2, metavar=("NX", "NY"))
    s.add_argument("--out")
    s.set_defaults(func=cmd_synth)

    a = sub.add_parser("awg-sim", help="simulate one streaming cycle or an underrun estimate")
    a.add_argument("--per-segment", type=int, default=32)
    a.add_argument("--n-waveforms", type=int, default=256)
    a.add_argument("--jitter", action="store_true")
    a.add_argument("--trials", type=int, default=1)
    a.add_argument("--seed", type=int)
    a.add_argument("--out")
    a.set_defaults(func=cmd_awg_sim)

    c = sub.add_parser("accept", help="run the acceptance criteria")
    c.add_argument("--only", help="comma-separated criterion numbers")
    c.add_argument("--quick", action="store_true", help="reduced trial counts")
    c.add_argument("--seed", type=int)
    c.set_defaults(func=cmd_accept)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001
        log.error("error: %s", exc)
        if args.verbose:
            raise
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
