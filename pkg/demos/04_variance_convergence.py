"""Track the finite-n variance towards the two limiting formulas.

Pure ensembles at level q carry a (2q-1)-fold bulk term; full ensembles
average the level factors, (1 + 3 + ... + (2q-1))/q = q.  Convergence in
n is slow for sharp test functions (roughly log(n)/n here), so the table
also extrapolates each sequence and compares the limit instead.
"""

from polygin import KernelSpec, parse_testfn, predicted_variance, variance_quadrature

g = parse_testfn("bump(0.5,0.2)")
ns = (100, 200, 400, 800, 1600)

for variant in ("pure", "full"):
    print(f"\n{variant} ensembles, g = {g.expr}")
    print("  q  " + "".join(f"  n={n:<6d}" for n in ns) +
          "  extrapolated   predicted")
    for q in (1, 2, 3):
        vals = [variance_quadrature(KernelSpec(n, q, variant), g).value for n in ns]
        pred = predicted_variance(KernelSpec(ns[-1], q, variant), g).total
        extrap = 2 * vals[-1] - vals[-2]  # one Richardson step in 1/n
        row = "".join(f"  {v:8.4f}" for v in vals)
        print(f"  {q}  {row}    {extrap:8.4f}    {pred:8.4f}")
print("\n(each row increases towards its prediction; the extrapolated "
      "column identifies the limit to a few percent)")
