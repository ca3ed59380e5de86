"""Reference values frozen into the unit tests.

Independent of the C++ code: mpmath tanh-sinh quadrature at 30 digits and
exact sympy arithmetic. Run `python3 derived_values.py` to regenerate.
"""
import mpmath as mp
import sympy as sp

mp.mp.dps = 30


def show(name, value):
    print(f"{name} = {mp.nstr(value, 20)}")


def gamma_79():
    return mp.gamma(mp.mpf("7.9"))


def jacobi_moment():
    # int_{-1}^{1} (1-t)^{mu-1} t^3 dt, mu = 0.4, split at the singular end.
    mu = mp.mpf("0.4")
    return mp.quad(lambda t: (1 - t) ** (mu - 1) * t**3, [-1, 0, 1])


def rl_square():
    # (1/Gamma(mu)) int_0^1 (x-s)^{mu-1} s^2 ds at x = 1.7, mu = 0.4.
    mu, x = mp.mpf("0.4"), mp.mpf("1.7")
    return mp.quad(lambda s: (x - s) ** (mu - 1) * s**2, [0, 0.5, 1]) / mp.gamma(mu)


def caputo_pair(alpha, d2, a, b, x):
    g = mp.gamma(2 - alpha)
    left = mp.quad(lambda s: (x - s) ** (1 - alpha) * d2(s), [a, x]) / g if x > a else mp.mpf(0)
    right = mp.quad(lambda s: (s - x) ** (1 - alpha) * d2(s), [x, b]) / g if x < b else mp.mpf(0)
    return left, right


def riesz(alpha, d2, a, b, x):
    left, right = caputo_pair(alpha, d2, a, b, x)
    return (left + right) / (2 * mp.cos(mp.pi * alpha / 2))


def riesz_square():
    return riesz(mp.mpf("1.5"), lambda s: mp.mpf(2), 0, 1, mp.mpf("0.5"))


def ex2_forcing(alpha):
    alpha = mp.mpf(alpha)
    eps = mp.gamma(12 - alpha) / mp.gamma(12)
    return -1 + eps * riesz(alpha, lambda s: 110 * s**9, 0, 1, mp.mpf(1))


def ex1_caputo_at_zero(alpha):
    # u0 = (x^2-1)^4 on [-1,1]
    alpha = mp.mpf(alpha)
    d2 = lambda s: 8 * (s**2 - 1) ** 2 * (7 * s**2 - 1)
    return caputo_pair(alpha, d2, -1, 1, mp.mpf(0))


def single_cell_b(mu):
    mu = mp.mpf(mu)
    return 1 / (mp.gamma(mu + 2) * mp.cos(mp.pi * mu / 2))


def b_matrix_k2_n1(mu):
    # Cells [0,1/2], [1/2,1]; nodal linear basis; entries
    # int phi_r * c (I_left^mu + I_right^mu) phi_s dx, c = 1/(2 cos(pi mu / 2)).
    mu = mp.mpf(mu)
    c = 1 / (2 * mp.cos(mp.pi * mu / 2))
    cells = [(mp.mpf(0), mp.mpf("0.5")), (mp.mpf("0.5"), mp.mpf(1))]

    def phi(cell, j):
        lo, hi = cells[cell]
        if j == 0:
            return lambda x: (hi - x) / (hi - lo)
        return lambda x: (x - lo) / (hi - lo)

    def frac(cell, j, x):
        # Closed form for a linear f: f(s) = f(x) -/+ f'(s-x) about x.
        lo, hi = cells[cell]
        f = phi(cell, j)
        slope = f(hi) - f(lo)
        slope /= hi - lo
        fx = f(x)
        acc = mp.mpf(0)
        if x > lo:
            m = min(x, hi)
            acc += fx * ((x - lo) ** mu - (x - m) ** mu) / mu
            acc -= slope * ((x - lo) ** (mu + 1) - (x - m) ** (mu + 1)) / (mu + 1)
        if x < hi:
            m = max(x, lo)
            acc += fx * ((hi - x) ** mu - (m - x) ** mu) / mu
            acc += slope * ((hi - x) ** (mu + 1) - (m - x) ** (mu + 1)) / (mu + 1)
        return c * acc / mp.gamma(mu)

    out = []
    for kr in range(2):
        for jr in range(2):
            row = []
            for ks in range(2):
                for js in range(2):
                    lo, hi = cells[kr]
                    pts = [lo, hi] if kr != ks else [lo, (lo + hi) / 2, hi]
                    row.append(mp.quad(lambda x: phi(kr, jr)(x) * frac(ks, js, x), pts))
            out.append(row)
    return out


def ddg_block(N, beta0, beta1, K=2):
    """Exact DDG matrix A on [0,1] with K equal cells and GLL nodal basis.

    a(u,v) = -sum int u'v' - sum_faces ((u_x)* [v] + {v_x}[u])
             + Nitsche terms at both ends with penalty pen/h.
    """
    x = sp.symbols("x")
    h = sp.Rational(1, K)
    pen = max(2 * beta0, 2 * N * N)
    if N == 1:
        ref = [-1, 1]
    elif N == 2:
        ref = [-1, 0, 1]
    else:
        raise ValueError
    funcs = []
    for k in range(K):
        lo = k * h
        nodes = [lo + (r + 1) * h / 2 for r in ref]
        for j in range(N + 1):
            l = sp.Integer(1)
            for m in range(N + 1):
                if m != j:
                    l *= (x - nodes[m]) / (nodes[j] - nodes[m])
            funcs.append((k, sp.expand(l)))

    def trace(f, cell, side, order):
        k, p = f
        if k != cell:
            return sp.Integer(0)
        pt = cell * h if side == "L" else (cell + 1) * h
        return sp.diff(p, x, order).subs(x, pt)

    n = len(funcs)
    A = sp.zeros(n, n)
    for r, v in enumerate(funcs):
        for s, u in enumerate(funcs):
            val = sp.Integer(0)
            if v[0] == u[0]:
                lo = v[0] * h
                val -= sp.integrate(sp.diff(u[1], x) * sp.diff(v[1], x), (x, lo, lo + h))
            for f in range(1, K):
                jump = lambda w, o=0: trace(w, f, "L", o) - trace(w, f - 1, "R", o)
                avg = lambda w, o: (trace(w, f, "L", o) + trace(w, f - 1, "R", o)) / 2
                ux_star = beta0 * jump(u) / h + avg(u, 1) + beta1 * h * jump(u, 2)
                val -= ux_star * jump(v) + avg(v, 1) * jump(u)
            ul, vl = trace(u, 0, "L", 0), trace(v, 0, "L", 0)
            dul, dvl = trace(u, 0, "L", 1), trace(v, 0, "L", 1)
            val -= pen / h * ul * vl + vl * dul + dvl * ul
            ur, vr = trace(u, K - 1, "R", 0), trace(v, K - 1, "R", 0)
            dur, dvr = trace(u, K - 1, "R", 1), trace(v, K - 1, "R", 1)
            val += -pen / h * ur * vr + vr * dur + dvr * ur
            A[r, s] = val
    return A


def projection_error():
    # || f - P_4 f ||_{L2(-1,1)}, f = (x^2-1)^4, K = 16, via exact Legendre moments.
    x = sp.symbols("x")
    f = (x**2 - 1) ** 4
    K, N = 16, 4
    h = sp.Rational(2, K)
    total = sp.Integer(0)
    for k in range(K):
        lo = -1 + k * h
        xi = sp.symbols("xi")
        g = sp.expand(f.subs(x, lo + (xi + 1) * h / 2))
        e2 = sp.integrate(g**2, (xi, -1, 1))
        for j in range(N + 1):
            pj = sp.legendre(j, xi)
            cj = sp.integrate(g * pj, (xi, -1, 1))
            e2 -= cj**2 * sp.Rational(2 * j + 1, 2)
        total += e2 * h / 2
    return mp.sqrt(mp.mpf(sp.Rational(total).p) / mp.mpf(sp.Rational(total).q))


if __name__ == "__main__":
    show("gamma(7.9)", gamma_79())
    show("gauss_jacobi mu=0.4 t^3", jacobi_moment())
    show("rl mu=0.4 s^2 x=1.7", rl_square())
    show("riesz alpha=1.5 x^2 at 0.5", riesz_square())
    show("ex2 g(1,0) alpha=1.1", ex2_forcing("1.1"))
    show("ex2 g(1,0) alpha=1.5", ex2_forcing("1.5"))
    l, r = ex1_caputo_at_zero("1.6")
    show("ex1 caputo left at 0 alpha=1.6", l)
    show("ex1 caputo right at 0 alpha=1.6", r)
    show("single cell B mu=0.5", single_cell_b("0.5"))
    print("B K=2 N=1 mu=0.5 on [0,1]:")
    for row in b_matrix_k2_n1("0.5"):
        print("  {" + ", ".join(mp.nstr(v, 20) for v in row) + "},")
    print("projection error (x^2-1)^4 N=4 K=16 =", mp.nstr(projection_error(), 20))
    print("A K=2 N=1 beta0=1:", ddg_block(1, 1, sp.Rational(1, 12)).tolist())
    print("A K=2 N=2 beta0=2 beta1=1/12:", ddg_block(2, 2, sp.Rational(1, 12)).tolist())
