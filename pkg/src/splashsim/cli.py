"""Command line entry point: ``splashsim run | check | bench``.

Exit codes: 0 success, 1 scene error, 2 runtime or I/O error, 3 ledger
breach under ``--validate``.
"""

from __future__ import annotations

import argparse
import csv
import os
import queue
import sys
import threading
import time
from pathlib import Path

from . import backend as _backend
from .engine import PHASES, LedgerError, diagnostics_header, run
from .frames import write_frame
from .scene import SceneError, build_state, load_scene

EXIT_OK, EXIT_SCENE, EXIT_RUNTIME, EXIT_LEDGER = 0, 1, 2, 3


class FrameWriter:
    """Encodes and writes frames on a background thread, in submission order."""

    def __init__(self, out: Path, fmt: str, depth: int = 8):
        self.out, self.fmt = out, fmt
        self.suffix = ".splf" if fmt == "bin" else ".txt"
        self.count = 0
        self.error: BaseException | None = None
        self._q: queue.Queue = queue.Queue(maxsize=depth)
        self._t = threading.Thread(target=self._loop, name="frame-writer", daemon=True)
        self._t.start()

    def _loop(self):
        while True:
            frame = self._q.get()
            if frame is None:
                return
            if self.error is not None:
                continue
            try:
                path = self.out / f"frame_{self.count:05d}{self.suffix}"
                path.write_bytes(write_frame(frame, self.fmt))
                self.count += 1
            except OSError as exc:  # surfaced by the next call or close()
                self.error = OSError(exc.errno, f"frame {self.count}: {exc.strerror or exc}", exc.filename)
            except BaseException as exc:
                self.error = RuntimeError(f"frame {self.count}: {exc}")

    def __call__(self, frame):
        if self.error is not None:
            raise self.error
        self._q.put(frame)

    def close(self):
        self._q.put(None)
        self._t.join()
        if self.error is not None:
            raise self.error


def _load(path: str):
    scene = load_scene(path)
    scene.validate()
    return scene


def _cfl_report(scene) -> tuple[str, bool]:
    dt, limit = scene.cfl()
    ok = dt <= limit
    msg = f"dt = {dt:.6g} s, stable-step estimate = {limit:.6g} s"
    return msg, ok


def cmd_check(args) -> int:
    scene = _load(args.scene)
    msg, ok = _cfl_report(scene)
    print(f"scene: {args.scene}")
    print(f"grid: {scene.nx} x {scene.ny} columns, dx = {scene.dx:.6g} m, dy = {scene.dy:.6g} m")
    print(f"steps: {scene.n_steps}, frames: {scene.n_frames} (every {scene.frame_stride} steps)")
    print(f"objects: {len(scene.objects)}")
    print(msg)
    if not ok:
        print("warning: dt exceeds the stable-step estimate; the run may blow up", file=sys.stderr)
    return EXIT_OK


def cmd_run(args) -> int:
    scene = _load(args.scene)
    fmt = args.format or scene.format
    msg, ok = _cfl_report(scene)
    if not ok:
        print(f"warning: {msg}", file=sys.stderr)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    state = build_state(scene, backend=args.backend, workers=args.workers, validate=args.validate)
    writer = FrameWriter(out, fmt)
    t0 = time.perf_counter()
    with open(out / "diagnostics.csv", "w", newline="") as fh:
        diag = csv.writer(fh)
        diag.writerow(diagnostics_header(len(state.objects)))
        try:
            run(state, scene.n_steps, scene.frame_stride, on_frame=writer,
                on_diag=lambda row: diag.writerow([repr(v) if isinstance(v, float) else v for v in row]))
        finally:
            writer.close()
    wall = time.perf_counter() - t0
    print(f"{scene.n_steps} steps, {writer.count} frames in {wall:.2f} s -> {out}")
    print(f"ledger relative error {state.ledger.relative_error:.3e}")
    return EXIT_OK


def cmd_bench(args) -> int:
    scene = _load(args.scene)
    n = args.steps if args.steps is not None else scene.n_steps
    state = build_state(scene, backend=args.backend, workers=args.workers)
    timers: dict[str, float] = {}
    t0 = time.perf_counter()
    run(state, n, scene.frame_stride, timers=timers)
    wall = time.perf_counter() - t0
    rate = n / wall if wall > 0 else float("inf")
    print(f"backend: {state.backend.NAME}, workers: {args.workers}")
    print(f"{n} steps in {wall:.3f} s: {rate:.1f} steps/s, {n * scene.dt / wall:.2f}x real time")
    for name in PHASES:
        spent = timers.get(name, 0.0)
        print(f"  {name:<8} {spent:8.3f} s  {100.0 * spent / wall if wall else 0.0:5.1f}%")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="splashsim", description="Column-and-pipe water with spray and floating objects.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("scene", help="scene file")
        p.add_argument("--backend", choices=_backend.available(), default=None,
                       help="kernel backend (default: fastest available)")
        p.add_argument("--workers", type=int, default=1, help="threads for the compiled kernels")

    r = sub.add_parser("run", help="simulate and write frames plus diagnostics.csv")
    common(r)
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--format", choices=("bin", "text"), default=None, help="frame format (default: scene's)")
    r.add_argument("--validate", action="store_true", help="check the volume ledger after every step")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", help="parse the scene and report the time-step bound")
    c.add_argument("scene", help="scene file")
    c.set_defaults(func=cmd_check)

    b = sub.add_parser("bench", help="time the step phases")
    common(b)
    b.add_argument("--steps", type=int, default=None, help="steps to run (default: scene duration)")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return EXIT_SCENE
    try:
        return args.func(args)
    except SceneError as exc:
        print(f"scene error: {exc}", file=sys.stderr)
        return EXIT_SCENE
    except LedgerError as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_LEDGER
    except (OSError, RuntimeError, ValueError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
