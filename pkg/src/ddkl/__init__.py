"""Score-based diffusion numerics with isotropic and non-isotropic noise.

Subpackages map one-to-one onto the building blocks:

- :mod:`ddkl.schedules` -- VP/VE noise schedules and their tuning rules
- :mod:`ddkl.odeint` -- fixed-step ODE solvers, adjoint gradients, CNF densities
- :mod:`ddkl.covariance` / :mod:`ddkl.gff` -- covariance operators, Gaussian free fields
- :mod:`ddkl.kernels` -- closed-form forward/score/posterior formulas
- :mod:`ddkl.samplers` -- ancestral, DDIM, annealed Langevin and blockwise drivers
- :mod:`ddkl.multires` -- Haar / unimodular pyramids and likelihood bookkeeping
- :mod:`ddkl.denoiser` -- toy epsilon-predictors, losses and training
"""

import os as _os

_threads = _os.environ.get("DDKL_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

__version__ = "0.1.0"
