"""GEMM schedule tuning on a systolic-array accelerator model.

Thin wrappers over the ``_gemmtune`` extension; schedules and reports are plain dicts.
"""

import json

from ._gemmtune import (
    AcceleratorConfig,
    GemmtuneError,
    Workload,
    gemmini16_l2,
    gemmini16_nol2,
    load_config,
    parse_config,
)
from . import _gemmtune as _core

__all__ = [
    "AcceleratorConfig",
    "GemmtuneError",
    "Workload",
    "baseline_params",
    "codegen",
    "count_ops",
    "enumerate_valid",
    "folded_qgemm",
    "gemmini16_l2",
    "gemmini16_nol2",
    "invalid_reasons",
    "load_config",
    "pad_workload",
    "parse_config",
    "reference_qgemm",
    "run_suite",
    "simulate",
    "simulate_listing",
    "tune",
]


def _workload(w):
    if isinstance(w, Workload):
        return w
    m, n, k = w
    return Workload(m, n, k)


def _params(params):
    return "" if params is None else json.dumps(params)


def _scale(s):
    from fractions import Fraction

    return str(Fraction(s).limit_denominator(1 << 20)) if not isinstance(s, str) else s


def count_ops(workload):
    """2*M*N*K + M*N."""
    return _core.count_ops(_workload(workload))


def pad_workload(workload, cfg):
    return _core.pad_workload(_workload(workload), cfg)


def enumerate_valid(workload, cfg):
    """Every valid schedule of the padded workload, in enumeration order."""
    return [json.loads(p) for p in _core.enumerate_valid(_workload(workload), cfg)]


def invalid_reasons(workload, params, cfg):
    """Empty list when ``params`` is valid for the padded workload."""
    return _core.is_valid(_workload(workload), json.dumps(params), cfg)


def baseline_params(workload, cfg):
    return json.loads(_core.baseline_params(_workload(workload), cfg))


def codegen(workload, params, cfg, seed=0):
    """Instruction listing; ``params=None`` selects the baseline schedule."""
    return _core.codegen(_workload(workload), _params(params), cfg, seed)


def simulate(workload, params, cfg, seed=0):
    """Timed run on random operands. Adds ``output_matches`` to the report."""
    report, match = _core.simulate(_workload(workload), _params(params), cfg, seed)
    out = json.loads(report)
    out["output_matches"] = match
    return out


def simulate_listing(listing, cfg):
    return json.loads(_core.simulate_listing(listing, cfg))


def tune(workload, cfg, strategy="model_guided", budget=256, early_stop=500, seed=0, parallelism=8):
    space, history, best, cycles, gops = _core.tune(
        _workload(workload), cfg, strategy, budget, early_stop, seed, parallelism
    )
    return {
        "space_size": space,
        "history": [json.loads(line) for line in history.splitlines()],
        "best": {"params": json.loads(best), "cycles": cycles, "gops": gops},
    }


def reference_qgemm(a, b, d, zp_a, zp_c, s_d, s_c):
    return _core.reference_qgemm(a, b, d, zp_a, zp_c, _scale(s_d), _scale(s_c))


def folded_qgemm(a, b, d, zp_a, zp_c, s_d, s_c):
    return _core.folded_qgemm(a, b, d, zp_a, zp_c, _scale(s_d), _scale(s_c))


def run_suite(suite, out_dir, max_size=512, seed=0):
    return json.loads(_core.run_suite(suite, str(out_dir), max_size, seed))
