"""Tuning sweeps: rCESS threshold, particle count, basis size, smoothing.

Tiny versions of the published sensitivity studies; raise the dataset
counts and particle numbers to reproduce the full tables.
"""

from desmc.experiments import basis_sweep, lambda_sweep, particle_sweep, phi_sweep


def show(tag, results, keys=("theta1", "theta2")):
    print(f"--- {tag} ---")
    for variant, reports in results.items():
        means = {k: sum(r.means[k] for r in reports) / len(reports) for k in keys}
        extra = ""
        if reports[0].rmses:
            rm = sum(r.rmses["x1"] for r in reports) / len(reports)
            extra = f"  rmse(x1) {rm:.3f}"
        print(f"{str(variant):>6s}: " +
              "  ".join(f"{k}={means[k]:.3f}" for k in keys) + extra)


show("rCESS threshold", phi_sweep(phis=(0.8, 0.95), n_datasets=2, n_particles=150))
show("particle count", particle_sweep(counts=(25, 200), n_datasets=2))
show("basis size", basis_sweep(n_basis_levels=(7, 16), n_datasets=1,
                               n_particles=200))
show("fixed vs sampled smoothing",
     lambda_sweep(lambdas=(0.1, 100.0, None), n_datasets=1, n_particles=200))
