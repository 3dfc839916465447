"""Time the Lindblad right-hand side with the numba and numpy kernels.

    python3 benchmarks/bench_kernels.py --N 2,4,6 --repeat 50

The package-wide default backend is chosen at import time from the
SROTTO_NUMBA environment variable (0/false/off forces numpy); this script
builds both generators explicitly so it compares them side by side.
"""

import argparse
import time

import numpy as np

from srotto import _kernels
from srotto.hilbert import HilbertSpace
from srotto.lindblad import LindbladGenerator, SystemModel, build_hamiltonian, \
    collapse_operators, system_space


def _random_state(dim, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = x @ x.conj().T
    return rho / np.trace(rho)


def _time(fn, repeat):
    fn()  # warm-up (numba compile)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", default="2,3,4,5,6")
    ap.add_argument("--n-max", type=int, default=40)
    ap.add_argument("--repeat", type=int, default=30)
    args = ap.parse_args()

    print(f"default backend: {_kernels.BACKEND}")
    print(f"{'N':>3} {'dim':>5} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8} {'max diff':>10}")
    model = SystemModel()
    for n in (int(x) for x in args.N.split(",")):
        space = system_space(HilbertSpace.collective(n), args.n_max)
        h = build_hamiltonian(model, space)
        cops = collapse_operators(model, space)
        rho = _random_state(space.dim)
        gen_np = LindbladGenerator(h, cops, backend="numpy")
        t_np = _time(lambda: gen_np(rho, hermitian=True), args.repeat)
        if _kernels.HAVE_NUMBA:
            gen_nb = LindbladGenerator(h, cops, backend="numba")
            t_nb = _time(lambda: gen_nb(rho, hermitian=True), args.repeat)
            diff = np.max(np.abs(gen_nb(rho, hermitian=True) - gen_np(rho, hermitian=True)))
            print(f"{n:>3} {space.dim:>5} {1e3 * t_np:>10.3f} {1e3 * t_nb:>10.3f} "
                  f"{t_np / t_nb:>8.1f} {diff:>10.2e}")
        else:
            print(f"{n:>3} {space.dim:>5} {1e3 * t_np:>10.3f} {'n/a':>10}")


if __name__ == "__main__":
    main()
