# Reference t statistics and two-sided p-values for the paired t-test tests.
# Usage: python3 ttest_reference.py  (prints Rust tuples)
import random, mpmath
mpmath.mp.dps = 60
random.seed(20261016)
cases = [[0.1, 0.12, 0.08, 0.11, 0.09], [0.05, -0.05], [0.05, 0.1], [0.0, 0.05, 0.1]]
for n in [2,3,4,5,6,8,10,12,15,20,25,30,35,40,45,50]:
    for shift in (0.0, 0.02, 0.1):
        cases.append([round(random.gauss(shift, 0.1), 4) for _ in range(n)])
out = []
for c in cases:
    xs = [mpmath.mpf(repr(x)) for x in c]
    n = len(xs)
    m = sum(xs)/n
    s = mpmath.sqrt(sum((x-m)**2 for x in xs)/(n-1))
    t = m/(s/mpmath.sqrt(n))
    df = n-1
    p = mpmath.betainc(mpmath.mpf(df)/2, mpmath.mpf(1)/2, 0, df/(df+t*t), regularized=True)
    out.append((c, mpmath.nstr(t, 20), mpmath.nstr(p, 20)))
for c, t, p in out:
    print("    (&[%s], %s, %s)," % (", ".join(repr(x) for x in c), t, p))
