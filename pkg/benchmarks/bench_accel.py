"""Benchmark the numba-compiled hot kernels against the numpy fallback.

Run:  python benchmarks/bench_accel.py

The same comparisons run in either mode; set NLDISP_NO_NUMBA=1 to confirm the
package itself falls back cleanly (this script always times both paths
directly, regardless of which one the package selected).
"""

import time

import numpy as np

from nldisp import _accel


def _time(fn, *args, repeat=3):
    best = np.inf
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_kmat_open():
    rng = np.random.default_rng(0)
    rows = []
    for m, dim in ((512, 1), (1024, 1), (1600, 2)):
        nodes = np.sort(rng.uniform(0, 1, m))[:, None] if dim == 1 \
            else rng.uniform(0, 1, (m, 2))
        args = (nodes, 0.35, _accel.PROFILE_BUMP, 2.2522836210435817)
        t_np, ref = _time(_accel.kmat_open_np, *args)
        if _accel.USING_NUMBA:
            _accel.kmat_open_nb(nodes[:4], *args[1:])  # compile
            t_nb, out = _time(_accel.kmat_open_nb, *args)
            assert np.allclose(out, ref)
        else:
            t_nb = float("nan")
        rows.append((f"kmat_open {dim}D m={m}", t_np, t_nb))
    return rows


def bench_kmat_periodic():
    rng = np.random.default_rng(1)
    rows = []
    for m, delta in ((512, 0.4), (512, 5.0)):
        nodes = np.sort(rng.uniform(0, 1, m))[:, None]
        periods = np.array([1.0])
        k = int(np.ceil(delta + 0.5)) + 1
        shifts = (np.arange(-k, k + 1, dtype=float))[:, None]
        args = (nodes, periods, shifts, delta, _accel.PROFILE_BUMP,
                2.2522836210435817)
        t_np, ref = _time(_accel.kmat_periodic_np, *args)
        if _accel.USING_NUMBA:
            _accel.kmat_periodic_nb(nodes[:4], *args[1:])
            t_nb, out = _time(_accel.kmat_periodic_nb, *args)
            assert np.allclose(out, ref)
        else:
            t_nb = float("nan")
        rows.append((f"kmat_periodic m={m} delta={delta}", t_np, t_nb))
    return rows


def bench_rk4():
    rng = np.random.default_rng(2)
    rows = []
    m, nsteps = 256, 4000
    a_mat = rng.normal(size=(m, m)) * (0.1 / m)
    u0 = np.abs(rng.normal(size=m))
    t_np, ref = _time(_accel.rk4_linear_np, a_mat, u0, 0.01, nsteps, repeat=2)
    if _accel.USING_NUMBA:
        _accel.rk4_linear_nb(a_mat, u0, 0.01, 2)
        t_nb, out = _time(_accel.rk4_linear_nb, a_mat, u0, 0.01, nsteps, repeat=2)
        assert np.allclose(out, ref)
    else:
        t_nb = float("nan")
    rows.append((f"rk4_linear m={m} steps={nsteps}", t_np, t_nb))

    kmat_w = np.abs(rng.normal(size=(m, m))) * (0.5 / m)
    bmass = kmat_w.sum(axis=1)
    rvals = 1.0 + 0.2 * rng.normal(size=m)
    v0 = np.abs(rng.normal(size=m))
    args = (kmat_w, bmass, rvals, 0.0, 1.0, u0, v0, 0.005, nsteps)
    t_np, ref = _time(_accel.rk4_competition_np, *args, repeat=2)
    if _accel.USING_NUMBA:
        _accel.rk4_competition_nb(*args[:-1], 2)
        t_nb, out = _time(_accel.rk4_competition_nb, *args, repeat=2)
        assert np.allclose(out[0], ref[0]) and np.allclose(out[1], ref[1])
    else:
        t_nb = float("nan")
    rows.append((f"rk4_competition m={m} steps={nsteps}", t_np, t_nb))
    return rows


def main():
    print(f"numba available and active: {_accel.USING_NUMBA}")
    print(f"{'kernel':40s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s}")
    all_rows = bench_kmat_open() + bench_kmat_periodic() + bench_rk4()
    for name, t_np, t_nb in all_rows:
        speed = t_np / t_nb if t_nb == t_nb and t_nb > 0 else float("nan")
        print(f"{name:40s} {t_np:10.4f} {t_nb:10.4f} {speed:7.1f}x")


if __name__ == "__main__":
    main()
