"""Verified instance batches with deterministic seed derivation.

Instance ``k`` drawn for a parameter set uses seed
``splitmix64(master_seed ^ splitmix64(k))``; the same master seed therefore
always yields the same instances, independent of how many were rejected for
other parameter sets.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..model import TaskInstance
from ..oracle import SearchBudget, Solved, Unsolvable, solve
from ..serialize import dumps, save_task, task_to_dict
from . import GeneratorParams, generate

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def instance_seed(master_seed: int, index: int) -> int:
    return splitmix64((master_seed & MASK64) ^ splitmix64(index))


@dataclass
class BatchResult:
    tasks: list[TaskInstance] = field(default_factory=list)
    manifest: list[dict] = field(default_factory=list)

    @property
    def shortfall(self) -> int:
        return sum(entry["shortfall"] for entry in self.manifest)


def _verify(params: GeneratorParams, budget: SearchBudget):
    task = generate(params)
    outcome = solve(task, budget)
    return task, outcome


def gen_batch(
    params_list: list[GeneratorParams],
    count_per_params: int,
    budget: SearchBudget | None = None,
    master_seed: int = 0,
    max_draws: int | None = None,
    workers: int = 1,
) -> BatchResult:
    """Draw instances until ``count_per_params`` verified ones exist per params.

    The ``seed`` field of each params object is ignored and replaced by the
    derived instance seed. Instances the oracle cannot solve within budget
    (unsolvable or budget exceeded) are rejected and counted.
    """
    budget = budget or SearchBudget()
    max_draws = max_draws if max_draws is not None else 20 * count_per_params
    result = BatchResult()
    for p_index, params in enumerate(params_list):
        base = instance_seed(master_seed, p_index)
        kept, rejected, draws = [], {"unsolvable": 0, "budget": 0}, 0
        chunk = max(1, workers)
        with ThreadPoolExecutor(max_workers=chunk) as pool:
            while len(kept) < count_per_params and draws < max_draws:
                n = min(chunk, max_draws - draws)
                seeds = [instance_seed(base, draws + j) for j in range(n)]
                outcomes = list(pool.map(lambda s: _verify(replace(params, seed=s), budget), seeds))
                for seed, (task, outcome) in zip(seeds, outcomes):
                    # surplus outcomes of the last chunk are dropped so the
                    # result does not depend on the worker count
                    if len(kept) >= count_per_params:
                        break
                    draws += 1
                    if isinstance(outcome, Solved):
                        task.metadata["seed"] = seed
                        task.metadata["oracle_length"] = outcome.depth
                        kept.append(task)
                    elif isinstance(outcome, Unsolvable):
                        rejected["unsolvable"] += 1
                    else:
                        rejected["budget"] += 1
        for task in kept:
            task.metadata["rejected_before"] = dict(rejected)
        result.tasks.extend(kept)
        result.manifest.append({
            "params": params.to_dict() | {"seed": None},
            "seeds": [t.metadata["seed"] for t in kept],
            "retained": len(kept),
            "rejected": rejected,
            "draws": draws,
            "shortfall": count_per_params - len(kept),
        })
    return result


def write_batch(result: BatchResult, out_dir) -> list[Path]:
    """Write one JSON file per task plus ``manifest.json``; returns the task paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, task in enumerate(result.tasks):
        path = out / f"{i:04d}_{task.task_id}.json"
        save_task(task, path)
        paths.append(path)
    (out / "manifest.json").write_text(dumps({"batches": result.manifest}), encoding="utf-8")
    return paths


def batch_bytes(result: BatchResult) -> bytes:
    """Canonical serialization of a whole batch, for determinism checks."""
    payload = {"tasks": [task_to_dict(t) for t in result.tasks], "manifest": result.manifest}
    return json.dumps(payload, sort_keys=True).encode()
