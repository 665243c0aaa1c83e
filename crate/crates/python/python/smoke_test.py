"""Smoke test for the pyprovisim extension.

Build it first:

    cargo build -p provisim-py --release

then run `python3 crates/python/python/smoke_test.py`. The script copies
target/release/libpyprovisim.so next to a temporary import path, or imports an
installed `pyprovisim` if one is already on sys.path. PYPROVISIM_LIB overrides
the library path.
"""

import importlib
import math
import os
import pathlib
import shutil
import sys
import tempfile


def import_from(lib):
    tmp = pathlib.Path(tempfile.mkdtemp())
    shutil.copy(lib, tmp / "pyprovisim.so")
    sys.path.insert(0, str(tmp))
    return importlib.import_module("pyprovisim")


def load():
    if os.environ.get("PYPROVISIM_LIB"):
        return import_from(os.environ["PYPROVISIM_LIB"])
    try:
        return importlib.import_module("pyprovisim")
    except ImportError:
        pass
    root = pathlib.Path(__file__).resolve().parents[3]
    for name in ("libpyprovisim.so", "libpyprovisim.dylib"):
        for profile in ("release", "debug"):
            lib = root / "target" / profile / name
            if lib.exists():
                return import_from(lib)
    sys.exit("pyprovisim not built; run `cargo build -p provisim-py --release`")


def main():
    pp = load()

    # Queueing formulas.
    assert abs(pp.erlang_b(1, 1.0) - 0.5) < 1e-12
    assert abs(pp.mmn_expected_wait(0.5, 1.0, 1) - 1.0) < 1e-12
    try:
        pp.erlang_c(2, 3.0)
    except ValueError:
        pass
    else:
        raise AssertionError("unstable M/M/n should raise")
    mean, half = pp.student_t_ci([0.0, 2.0])
    assert mean == 1.0 and abs(half - 12.7062) < 1e-3

    # Presets and configuration.
    names = [n for n, _ in pp.list_presets()]
    assert "table1" in names and "fig6a" in names, names
    cfg = pp.Config.preset("table1")
    assert cfg.servers == 20 and cfg.classes == 4
    cfg.set_param("classes[4].delta", 0.2)
    assert abs(sum(cfg.offered_loads()) - 21.0) < 1e-9
    assert cfg.advisories(), "saturated load should be reported"
    again = pp.Config.from_toml(cfg.to_toml())
    assert again.to_toml() == cfg.to_toml()
    try:
        pp.Config.from_toml("[cluster]\n")
    except ValueError as e:
        assert "cluster.N" in str(e)
    else:
        raise AssertionError("missing N should raise")

    # One run, deterministic per seed.
    cfg = pp.Config.preset("table1")
    cfg.admission = "threshold"
    cfg.duration = 1800.0
    a = pp.run(cfg, seed=7)
    b = pp.run(cfg, seed=7)
    assert a.revenue_total == b.revenue_total and a.events == b.events
    assert a.invariant_violations == []
    assert a.completed + a.rejected + a.in_flight == a.sessions
    assert pp.threshold_search(cfg, 4, 6) is None
    heavy = pp.Config.preset("table1")
    heavy.set_param("classes[4].delta", 0.2)
    assert pp.threshold_search(heavy, 4, 6) == 5

    # Replications and a small sweep, with result files verified.
    cfg.replications = 2
    agg = pp.run_experiment(cfg)
    assert agg.replications == 2 and agg.ci_low <= agg.revenue_mean <= agg.ci_high
    out = pathlib.Path(tempfile.mkdtemp()) / "sweep"
    rows = pp.sweep(cfg, "classes[4].delta", [0.1, 0.02], ["admit_all", "threshold"], out=str(out))
    assert [(r.policy, r.value) for r in rows] == [
        ("admit_all", 0.02),
        ("admit_all", 0.1),
        ("threshold", 0.02),
        ("threshold", 0.1),
    ]
    assert all(math.isfinite(r.revenue_mean) for r in rows)
    assert pp.verify(str(out)) == []

    print(f"pyprovisim {pp.__version__}: ok ({a!r})")


if __name__ == "__main__":
    main()
