#!/usr/bin/env python3
"""Solve a sparse SDPA problem with Clarabel and write a CSDP-style solution.

The problem is read in CSDP's primal convention:

    maximize tr(C X)  subject to  tr(A_i X) = a_i,  X >= 0,

where the SDPA file lists a = (a_1..a_m), C as matrix 0 and A_i as matrix i.
The output has the constraint multipliers on the first line, then one
"2 block i j value" line per nonzero upper-triangular entry of X.

Usage: solve_sdpa.py problem.dat-s solution.sol [--tol 1e-9] [--backend clarabel|cvxopt]
"""

import argparse
import sys
from collections import defaultdict

import clarabel
import numpy as np
import scipy.sparse as sp

SQRT2 = np.sqrt(2.0)


def read_sdpa(path):
    with open(path) as fh:
        lines = [l.strip() for l in fh if l.strip() and l.strip()[0] not in '"*']
    tokens = lambda s: s.replace(",", " ").replace("{", " ").replace("}", " ").replace("(", " ").replace(")", " ").split()
    m = int(tokens(lines[0])[0])
    nblocks = int(tokens(lines[1])[0])
    sizes = [int(t) for t in tokens(lines[2])[:nblocks]]
    rhs = np.array([float(t) for t in tokens(lines[3])[:m]])
    entries = defaultdict(list)
    for line in lines[4:]:
        mat, blk, i, j, v = tokens(line)[:5]
        entries[int(mat)].append((int(blk) - 1, int(i) - 1, int(j) - 1, float(v)))
    return m, sizes, rhs, entries


def solve(path, settings):
    """Builds the conic form directly: PSD blocks are variables in Clarabel's
    scaled upper-triangle vectorization, diagonal blocks are non-negative."""
    m, sizes, rhs, entries = read_sdpa(path)
    offsets, n = [], 0
    for s in sizes:
        offsets.append(n)
        n += s * (s + 1) // 2 if s > 0 else -s

    def column(blk, i, j):
        s = sizes[blk]
        if s < 0:
            return offsets[blk] + i, 1.0
        i, j = min(i, j), max(i, j)
        return offsets[blk] + j * (j + 1) // 2 + i, 1.0 if i == j else SQRT2

    c = np.zeros(n)
    for blk, i, j, v in entries.get(0, []):
        col, scale = column(blk, i, j)
        c[col] += v * scale
    rows, cols, vals = [], [], []
    for r in range(m):
        for blk, i, j, v in entries.get(r + 1, []):
            col, scale = column(blk, i, j)
            rows.append(r)
            cols.append(col)
            vals.append(v * scale)
    a_eq = sp.csc_matrix((vals, (rows, cols)), shape=(m, n))
    a = sp.vstack([a_eq, -sp.identity(n, format="csc")], format="csc")
    b = np.concatenate([rhs, np.zeros(n)])
    cones = [clarabel.ZeroConeT(m)]
    for s in sizes:
        cones.append(clarabel.PSDTriangleConeT(s) if s > 0 else clarabel.NonnegativeConeT(-s))
    p = sp.csc_matrix((n, n))
    solver = clarabel.DefaultSolver(p, -c, a, b, cones, settings)
    sol = solver.solve()
    status = str(sol.status)
    if "Solved" not in status:
        sys.exit(f"solver status {status}")
    x = np.array(sol.x)
    blocks = []
    for blk, s in enumerate(sizes):
        if s > 0:
            mat = np.zeros((s, s))
            for j in range(s):
                for i in range(j + 1):
                    col, scale = column(blk, i, j)
                    mat[i, j] = mat[j, i] = x[col] / scale
            blocks.append(mat)
        else:
            blocks.append(x[offsets[blk]:offsets[blk] - s])
    return status, float(c @ x), sizes, blocks, np.array(sol.z[:m])


def solve_cvxopt(path, tol, max_iter):
    """Dual-side formulation for cvxopt.conelp: minimize a^T y subject to
    sum y_i A_i - C >= 0. Its dual variable is X. Memory stays near m^2 plus
    the sparse constraint data, which matters for large blocks."""
    from cvxopt import matrix, spmatrix, solvers

    m, sizes, rhs, entries = read_sdpa(path)
    lin = [b for b, s in enumerate(sizes) if s < 0]
    psd = [b for b, s in enumerate(sizes) if s > 0]
    row_of = {}
    off = 0
    for b in lin:
        row_of[b] = off
        off += -sizes[b]
    nl = off
    for b in psd:
        row_of[b] = off
        off += sizes[b] ** 2
    rows_total = off

    def place(blk, i, j):
        s = sizes[blk]
        if s < 0:
            return [row_of[blk] + i]
        base = row_of[blk]
        return [base + i + j * s] if i == j else [base + i + j * s, base + j + i * s]

    gi, gj, gv = [], [], []
    for r in range(m):
        for blk, i, j, v in entries.get(r + 1, []):
            for row in place(blk, i, j):
                gi.append(row)
                gj.append(r)
                gv.append(-v)
    h = np.zeros(rows_total)
    for blk, i, j, v in entries.get(0, []):
        for row in place(blk, i, j):
            h[row] -= v
    g = spmatrix(gv, gi, gj, (rows_total, m))
    dims = {"l": nl, "q": [], "s": [sizes[b] for b in psd]}
    solvers.options.update({"show_progress": False, "abstol": tol, "reltol": tol, "feastol": tol, "maxiters": max_iter})
    sol = solvers.conelp(matrix(rhs), g, matrix(h), dims)
    if sol["status"] != "optimal":
        sys.exit(f"solver status {sol['status']}")
    z = np.array(sol["z"]).ravel()
    blocks = [None] * len(sizes)
    for b in lin:
        blocks[b] = z[row_of[b]:row_of[b] - sizes[b]]
    for b in psd:
        s = sizes[b]
        mat = z[row_of[b]:row_of[b] + s * s].reshape((s, s), order="F")
        blocks[b] = 0.5 * (mat + mat.T)
    dual = np.array(sol["x"]).ravel()
    return sol["status"], float(sol["dual objective"]), sizes, blocks, dual


def write_solution(path, sizes, blocks, dual):
    with open(path, "w") as out:
        out.write(" ".join(f"{float(v):.17e}" for v in dual) + "\n")
        for b, (s, val) in enumerate(zip(sizes, blocks)):
            if s > 0:
                for i in range(s):
                    for j in range(i, s):
                        if val[i, j] != 0.0:
                            out.write(f"2 {b + 1} {i + 1} {j + 1} {val[i, j]:.17e}\n")
            else:
                for i in range(-s):
                    if val[i] != 0.0:
                        out.write(f"2 {b + 1} {i + 1} {i + 1} {val[i]:.17e}\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("problem")
    ap.add_argument("solution")
    ap.add_argument("--tol", type=float, default=1e-9, help="gap and feasibility tolerance")
    ap.add_argument("--max-iter", type=int, default=200)
    ap.add_argument("--backend", choices=["clarabel", "cvxopt"], default="clarabel")
    args = ap.parse_args()
    if args.backend == "cvxopt":
        status, value, sizes, blocks, dual = solve_cvxopt(args.problem, args.tol, args.max_iter)
        write_solution(args.solution, sizes, blocks, dual)
        print(f"status {status} objective {value:.12f}")
        return
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = args.max_iter
    settings.tol_gap_abs = settings.tol_gap_rel = args.tol
    settings.tol_feas = args.tol
    status, value, sizes, blocks, dual = solve(args.problem, settings)
    write_solution(args.solution, sizes, blocks, dual)
    print(f"status {status} objective {value:.12f}")


if __name__ == "__main__":
    main()
