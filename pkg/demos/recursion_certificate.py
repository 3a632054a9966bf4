"""Exact certificate for the recursion behind the level-instability example.

Let f_0 be a power series parameter and define

    f_1     = -(1 + x f_0),
    f_{n+1} = n f_{n-1} - x f_n.

Writing f_n = A_n + B_n f_0 with polynomial A_n, B_n, the script verifies by
exact rational arithmetic, for n up to a chosen bound:

  * the closed form (-1)^n f_n = (x^{n-1} + g_n) + (x^n + h_n) f_0 with
    deg g_n < n - 1 and deg h_n < n;
  * the Gauss-norm identity |f_n|_p = max(1, |f_0|_p) over a test set of
    f_0 values with varying p-adic size;
  * that d^n applied to the cyclic generator has leading coefficient x^n
    (checked through the polynomial recursion P_{n+1} = x P_n + P_n').

Run:  python3 demos/recursion_certificate.py [p] [n_max]
"""

import sys

from microdiff import verify_counterexample


def main() -> None:
    p = int(sys.argv[1]) if len(sys.argv) > 1 else 2
    n_max = int(sys.argv[2]) if len(sys.argv) > 2 else 30
    report = verify_counterexample(p, n_max=n_max)
    print(f"p = {p}, n_max = {n_max}\n")
    for check in report["checks"]:
        status = "ok" if check["ok"] else "FAILED"
        extra = {k: v for k, v in check.items() if k not in ("check", "ok")}
        detail = ", ".join(f"{k}={v}" for k, v in sorted(extra.items()))
        print(f"  {check['check']:<24} {status}   {detail}")
    print(f"\nall checks passed: {report['all_ok']}")
    sys.exit(0 if report["all_ok"] else 1)


if __name__ == "__main__":
    main()
