"""Find a feasible pooling solution through the mixed-binary restriction.

Each pool splits into tau copies that may each serve one output; solving the
resulting MIP and deriving the pool fractions from the flow ratios gives a
feasible (upper-bounding) solution for the original bilinear problem.
"""

import poolblend as pb
from poolblend.instances import haverly

pq = pb.build_pq(haverly())

for tau in (1, 2):
    rm = pb.install_restriction(pq, pb.RestrictionSpec(tau=tau))
    result = pb.solve_mip(pq.model, pb.GapSpec(rel_tol=1e-9, abs_tol=1e-9))
    solution = pb.derive_fractional_flows(rm, result.incumbent)
    pb.uninstall_restriction(rm)
    feasible = pq.model.is_feasible(solution.values, 1e-6)
    print(f"tau={tau}: restriction optimum {result.objective:.2f}, "
          f"derived solution objective {solution.objective:.2f}, "
          f"feasible for the bilinear model: {bool(feasible)}")

# the one-liner used inside the global solver
solution = pb.initial_primal_search(pq)
print(f"initial primal search: objective {solution.objective:.2f}")
