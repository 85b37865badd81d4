"""Runtime orchestration for independent simulation runs."""

from __future__ import annotations

import asyncio
import logging
from pathlib import Path
from typing import List, Optional, Sequence

import config
from workflows.schemas import SimConfig
from workflows.simulation import RunResult, run_config, write_run

logger = logging.getLogger(__name__)


class SimulationRuntime:
    """Runs configs on worker threads, at most ``threads`` at a time.

    Runs share no mutable state, so each one is a plain blocking call handed to
    ``asyncio.to_thread``; numpy and the sparse LU release the GIL for the heavy
    parts.
    """

    def __init__(self, threads: Optional[int] = None) -> None:
        self.threads = max(1, threads if threads is not None else config.THREADS)
        self._semaphore = asyncio.Semaphore(self.threads)

    async def run(
        self,
        cfg: SimConfig,
        force: bool = False,
        capture_times: Sequence[float] = (),
        out_dir: Optional[Path] = None,
    ) -> RunResult:
        async with self._semaphore:
            return await asyncio.to_thread(self._run_sync, cfg, force, tuple(capture_times), out_dir)

    async def run_many(
        self,
        cfgs: Sequence[SimConfig],
        force: bool = False,
        capture_times: Sequence[float] = (),
        out_dirs: Optional[Sequence[Optional[Path]]] = None,
    ) -> List[RunResult]:
        """Run every config; results keep the input order."""
        dirs = list(out_dirs) if out_dirs is not None else [None] * len(cfgs)
        if len(dirs) != len(cfgs):
            raise ValueError("out_dirs must match cfgs in length")
        return await asyncio.gather(*(self.run(cfg, force, capture_times, d) for cfg, d in zip(cfgs, dirs)))

    # ------------------------------------------------------------------
    # Internal helpers
    # ------------------------------------------------------------------
    @staticmethod
    def _run_sync(cfg: SimConfig, force: bool, capture_times: Sequence[float], out_dir: Optional[Path]) -> RunResult:
        result = run_config(cfg, force=force, capture_times=capture_times)
        if out_dir is not None:
            write_run(result, out_dir)
        return result
