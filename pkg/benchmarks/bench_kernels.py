"""Compare the compiled and pure-numpy kernels.

    python benchmarks/bench_kernels.py [--n-max 40] [--repeat 5]

Prints one line per kernel with the best-of-N wall time of each backend
and the speedup, after checking that both backends agree. The numpy
moment integrator jumps ``stride`` steps at a time with a matrix power,
so it is only slow when every step is recorded.
"""
import argparse
import timeit

import numpy as np

from cascade_laser._backend import available_backends, get_backend
from cascade_laser.fock import thermal
from cascade_laser.model import LaserParams, generator_coefficients


def cases(n_max):
    g = generator_coefficients(LaserParams(0.5, 0.2, 1.0, 0.3))
    rates = (g.gain, g.loss, g.squeeze_e, g.squeeze_f)
    rho = thermal(n_max, 1.0).entries

    def liouvillian(k):
        return k.liouvillian(rho, *rates)

    def rk4(k):
        work = rho.copy()
        k.rk4_evolve(work, *rates, 0.01, 200)
        return work

    def moments_dense(k):
        return k.moment_rk4(np.zeros(5), 0.4, 0.066, 0.3, 0.2, 0.01, 20_000, 1)

    def moments_strided(k):
        return k.moment_rk4(np.zeros(5), 0.4, 0.066, 0.3, 0.2, 0.01, 20_000, 100)

    return {
        "liouvillian": liouvillian,
        "rk4_evolve x200": rk4,
        "moment_rk4 stride 1": moments_dense,
        "moment_rk4 stride 100": moments_strided,
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n-max", type=int, default=40)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    names = available_backends()
    if "compiled" not in names:
        print("compiled backend not built; only the numpy fallback is available")
    kernels = {name: get_backend(name) for name in names}
    print(f"n_max={args.n_max}, best of {args.repeat}")
    print(f"{'kernel':<24}" + "".join(f"{n:>14}" for n in names) + f"{'speedup':>10}")
    for label, fn in cases(args.n_max).items():
        outputs = [fn(k) for k in kernels.values()]
        for other in outputs[1:]:
            assert np.allclose(outputs[0], other, rtol=1e-12, atol=1e-14), label
        times = [min(timeit.repeat(lambda k=k: fn(k), number=1, repeat=args.repeat)) for k in kernels.values()]
        speedup = times[-1] / times[0] if len(times) > 1 else 1.0
        print(f"{label:<24}" + "".join(f"{t * 1e3:>12.2f}ms" for t in times) + f"{speedup:>9.1f}x")


if __name__ == "__main__":
    main()
