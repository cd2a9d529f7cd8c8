"""Build the classic single-pool blending network and solve it globally.

Walks through the full pipeline: network -> flow model -> relaxation ->
branch & cut, printing what happens at each stage.
"""

import poolblend as pb

# Three feeds: a cheap dirty one, an expensive clean one, and a mid-range
# stream that can bypass the pool straight to the products.
net = pb.Network("h1")
net.add_node(pb.NodeLayer.INPUT, "i1", cost=6.0, attr={"quality": {"sulfur": 3.0}})
net.add_node(pb.NodeLayer.INPUT, "i2", cost=16.0, attr={"quality": {"sulfur": 1.0}})
net.add_node(pb.NodeLayer.INPUT, "i3", cost=10.0, attr={"quality": {"sulfur": 2.0}})
net.add_node(pb.NodeLayer.POOL, "l1")
net.add_node(pb.NodeLayer.OUTPUT, "j1", capacity_upper=100.0, cost=9.0,
             attr={"quality_upper": {"sulfur": 2.5}})
net.add_node(pb.NodeLayer.OUTPUT, "j2", capacity_upper=200.0, cost=15.0,
             attr={"quality_upper": {"sulfur": 1.5}})
for src, dst in [("i1", "l1"), ("i2", "l1"), ("l1", "j1"), ("l1", "j2"),
                 ("i3", "j1"), ("i3", "j2")]:
    net.add_edge(src, dst)
net.freeze()

pq = pb.build_pq(net)
print(f"model: {len(pq.model.variables)} variables, "
      f"{len(pq.model.constraints)} constraints")
print(f"path triples: {pb.index_set_ilj(net)}")

# The plain envelope relaxation sits well below the true optimum.
rm = pb.relax(pq.model)
root = pb.solve_lp(rm.lp)
print(f"plain relaxation bound: {root.objective:.1f}")

report = pb.branch_and_cut(pq, pb.GapSpec(rel_tol=1e-6), pb.SolveOptions())
print(f"global solve: status={report.status} "
      f"bounds=[{report.lower:.1f}, {report.upper:.1f}] "
      f"nodes={report.nodes} cuts={report.cuts}")
print("report json:", report.to_json())

values = report.incumbent.values
print("optimal pool fractions:",
      {f"q[{i},{l}]": round(values[vid], 4) for (i, l), vid in pq.q.items()})
print("optimal pool flows:",
      {f"y[{l},{j}]": round(values[vid], 2) for (l, j), vid in pq.y_pool.items()})
print("optimal bypass flows:",
      {f"z[{i},{j}]": round(values[vid], 2) for (i, j), vid in pq.y_bypass.items()})
