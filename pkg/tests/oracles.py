"""Independent reference implementations used only by the tests.

Nothing here imports the package's numeric code; each oracle is written
directly from the definition so agreement is meaningful.
"""
import json
import math

VALID_TOTALS = (30, 50, 80)


def brute_force_crossings(flows, orderings):
    """O(f^2) count over all flow pairs in the same gap.

    ``flows`` are ((col, slot), (col, slot)) pairs; ``orderings[c]`` lists
    slots top to bottom.
    """
    pos = [{slot: i for i, slot in enumerate(order)} for order in orderings]
    total = 0
    for i in range(len(flows)):
        (sa, ta) = flows[i]
        for j in range(i + 1, len(flows)):
            (sb, tb) = flows[j]
            if sa[0] != sb[0]:
                continue
            ds = pos[sa[0]][sa[1]] - pos[sb[0]][sb[1]]
            dt = pos[ta[0]][ta[1]] - pos[tb[0]][tb[1]]
            if ds * dt < 0:
                total += 1
    return total


def validate_chart_json(text, canvas_height=1080, margin=30, padding=12, min_px=10.0):
    """Re-check every generation control from the serialized chart alone.

    Returns a list of violations. Thickness uses the shared vertical scale:
    the tightest column decides px per unit.
    """
    doc = json.loads(text)
    cols = doc["columns"]
    problems = []
    if not 3 <= len(cols) <= 6:
        problems.append("timesteps")
    for n in cols:
        if not 2 <= n <= 5:
            problems.append("entities")
    out_vals = {}
    in_vals = {}
    for fl in doc["flows"]:
        s, t, v = tuple(fl["source"]), tuple(fl["target"]), fl["value"]
        if t[0] != s[0] + 1:
            problems.append("non-adjacent flow")
        if v != int(v) or v <= 0:
            problems.append("non-integer flow")
        out_vals.setdefault(s, []).append(v)
        in_vals.setdefault(t, []).append(v)
    last = len(cols) - 1
    col_totals = []
    for c, n in enumerate(cols):
        tot = 0
        for k in range(n):
            o = sum(out_vals.get((c, k), []))
            i = sum(in_vals.get((c, k), []))
            if c < last and o == 0 or c > 0 and i == 0:
                problems.append("isolated entity")
            if 0 < c < last and o != i:
                problems.append("conservation")
            tot += o if c < last else i
        col_totals.append(tot)
    if len(set(col_totals)) != 1 or col_totals[0] not in VALID_TOTALS:
        problems.append(f"column totals {col_totals}")
    for (c, k), vals in out_vals.items():
        whole = sum(vals)
        for v in vals:
            if not 0.25 * whole <= v <= 0.5 * whole:
                problems.append("fraction")
    for vals in in_vals.values():
        if len(vals) >= 2:
            a, b = sorted(vals, reverse=True)[:2]
            if a - b < 0.05 * sum(vals) - 1e-9:
                problems.append("margin")
    # px per unit from the tightest column
    total = col_totals[0] if col_totals and col_totals[0] else 1
    ky = min((canvas_height - 2 * margin - (n - 1) * padding) / total for n in cols)
    smallest = min(fl["value"] for fl in doc["flows"])
    if smallest * ky < min_px - 1e-9:
        problems.append("thickness")
    return problems


def normal_equations(y, X):
    """Intercept first, then slopes, via (A'A)^-1 A'y with Gauss-Jordan elimination."""
    n = len(y)
    A = [[1.0] + list(map(float, row)) for row in X]
    p = len(A[0])
    M = [[sum(A[r][i] * A[r][j] for r in range(n)) for j in range(p)] for i in range(p)]
    b = [sum(A[r][i] * y[r] for r in range(n)) for i in range(p)]
    aug = [M[i] + [b[i]] for i in range(p)]
    for col in range(p):
        piv = max(range(col, p), key=lambda r: abs(aug[r][col]))
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [v / pv for v in aug[col]]
        for r in range(p):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * c for a, c in zip(aug[r], aug[col])]
    return [aug[i][p] for i in range(p)]


def jacobi_eigen(S, tol=1e-14, sweeps=100):
    """Eigenvalues and eigenvectors (as columns) of a symmetric matrix by cyclic Jacobi rotations."""
    n = len(S)
    A = [list(map(float, row)) for row in S]
    V = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    for _ in range(sweeps):
        off = sum(A[i][j] ** 2 for i in range(n) for j in range(n) if i != j)
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p][q]) < 1e-300:
                    continue
                theta = (A[q][q] - A[p][p]) / (2 * A[p][q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                for k in range(n):
                    akp, akq = A[k][p], A[k][q]
                    A[k][p] = c * akp - s * akq
                    A[k][q] = s * akp + c * akq
                for k in range(n):
                    apk, aqk = A[p][k], A[q][k]
                    A[p][k] = c * apk - s * aqk
                    A[q][k] = s * apk + c * aqk
                for k in range(n):
                    vkp, vkq = V[k][p], V[k][q]
                    V[k][p] = c * vkp - s * vkq
                    V[k][q] = s * vkp + c * vkq
    vals = [A[i][i] for i in range(n)]
    order = sorted(range(n), key=lambda i: -vals[i])
    return [vals[i] for i in order], [[V[r][i] for i in order] for r in range(n)]


def correlation(X):
    n, p = len(X), len(X[0])
    means = [sum(r[j] for r in X) / n for j in range(p)]
    cov = [[sum((r[i] - means[i]) * (r[j] - means[j]) for r in X) for j in range(p)] for i in range(p)]
    return [[cov[i][j] / math.sqrt(cov[i][i] * cov[j][j]) for j in range(p)] for i in range(p)]


def gaussian_log_posterior(x, means, variances, priors):
    """Per-class normalized log posteriors with math.fsum for each term."""
    logs = []
    for mu, var, pr in zip(means, variances, priors):
        terms = [math.log(pr)]
        for xi, m, v in zip(x, mu, var):
            terms.append(-0.5 * math.log(2 * math.pi * v) - (xi - m) ** 2 / (2 * v))
        logs.append(math.fsum(terms))
    top = max(logs)
    z = top + math.log(math.fsum(math.exp(l - top) for l in logs))
    return [l - z for l in logs]


def kendall_tau(a, b):
    n = len(a)
    conc = disc = 0
    for i in range(n):
        for j in range(i + 1, n):
            s = (a[i] - a[j]) * (b[i] - b[j])
            conc += s > 0
            disc += s < 0
    return (conc - disc) / (n * (n - 1) / 2)
