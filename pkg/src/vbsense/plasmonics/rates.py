"""Decay rates of an oscillating dipole inside a planar layered medium.

The emitter sits in a layer of permittivity eps1 between an upper and a lower
interface (either may be absent). With u = k_par / k1 and l_j the normalized
normal wavevector in medium j (Im l_j >= 0), the rates normalized to the
homogeneous medium eps1 are

    perp: 3/2 Re int u^3/l1 (1 + Ra e_a)(1 + Rb e_b) / (1 - Ra Rb e_ab) du     (p waves)
    par:  3/4 Re int u/l1 [(1 + Ra e_a)(1 + Rb e_b) / (1 - Ra Rb e_ab)]_s
                        + u l1 [(1 - Ra e_a)(1 - Rb e_b) / (1 - Ra Rb e_ab)]_p du

with e_a = exp(2i k1 l1 z_a), e_b = exp(2i k1 l1 z_b), e_ab = exp(2i k1 l1 (z_a + z_b))
and Ra, Rb the (generalized) Fresnel reflection coefficients seen from the
emitter layer. Time dependence is exp(-i w t), so lossy media have Im eps > 0.

The integral runs along a half ellipse in the lower half of the complex u
plane from 0 to u_max, which passes clear of the branch points and of the
guided and surface-plasmon poles, and then along the real axis to infinity.
Each piece uses composite Gauss-Legendre quadrature whose panel count is
doubled until successive results agree.
"""

import numpy as np

from ..errors import QuadratureNotConverged

GL_ORDER = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)


def kz(eps_rel, u):
    """Normalized normal wavevector sqrt(eps_rel - u^2) on the sheet with Im >= 0."""
    l = np.sqrt(np.asarray(eps_rel, dtype=complex) - np.asarray(u, dtype=complex) ** 2)
    return np.where(l.imag < 0, -l, l)


def fresnel(eps_i, eps_j, l_i, l_j):
    """(r_s, r_p) for a wave in medium i reflecting off medium j."""
    rs = (l_i - l_j) / (l_i + l_j)
    rp = (eps_j * l_i - eps_i * l_j) / (eps_j * l_i + eps_i * l_j)
    return rs, rp


def stack_reflection(eps_emit, layers, u, k_emit):
    """Generalized reflection coefficients (r_s, r_p) of a stack seen from the emitter layer.

    ``layers`` lists (eps, thickness_nm) outward from the emitter layer; the
    last entry is semi-infinite (its thickness is ignored). ``u`` is
    normalized to k in the emitter layer; ``k_emit`` is that wavenumber (1/nm).
    Returns zeros when the list is empty.
    """
    u = np.asarray(u, dtype=complex)
    if not layers:
        z = np.zeros_like(u)
        return z, z
    eps_all = [eps_emit] + [complex(e) for e, _ in layers]
    # relative permittivities referenced to the emitter layer
    ls = [kz(e / eps_emit, u) for e in eps_all]
    rs_tot, rp_tot = fresnel(eps_all[-2], eps_all[-1], ls[-2], ls[-1])
    for j in range(len(layers) - 1, 0, -1):
        eps_i, eps_j = eps_all[j - 1], eps_all[j]
        rs, rp = fresnel(eps_i, eps_j, ls[j - 1], ls[j])
        ph = np.exp(2j * k_emit * ls[j] * layers[j - 1][1])
        rs_tot = (rs + rs_tot * ph) / (1 + rs * rs_tot * ph)
        rp_tot = (rp + rp_tot * ph) / (1 + rp * rp_tot * ph)
    return rs_tot, rp_tot


class Geometry:
    """Emitter in a layer with optional stacks above and below.

    ``above`` / ``below``: lists of (eps, thickness_nm) outward from the emitter
    layer, last one semi-infinite. ``z_a`` / ``z_b``: distances (nm) to the
    first interface above / below (ignored when the stack is empty).
    """

    def __init__(self, eps_emit, wavelength_nm, above, z_a, below, z_b):
        self.eps1 = complex(eps_emit)
        if abs(self.eps1.imag) > 0 or self.eps1.real <= 0:
            raise ValueError("emitter medium must be a lossless dielectric")
        self.n1 = np.sqrt(self.eps1.real)
        self.k1 = 2 * np.pi * self.n1 / wavelength_nm
        self.above = list(above)
        self.below = list(below)
        self.z_a = float(z_a) if above else np.inf
        self.z_b = float(z_b) if below else np.inf
        if min(self.z_a, self.z_b) <= 0:
            raise ValueError("emitter must lie strictly inside its layer")

    def coefficients(self, u):
        ra_s, ra_p = stack_reflection(self.eps1, self.above, u, self.k1)
        rb_s, rb_p = stack_reflection(self.eps1, self.below, u, self.k1)
        return ra_s, ra_p, rb_s, rb_p

    def integrands(self, u):
        """Reflected-field integrands (perp, par) at complex ``u``.

        The direct (homogeneous-medium) term is removed; its contribution to
        the real part is exactly 1 for both orientations.
        """
        u = np.asarray(u, dtype=complex)
        l1 = kz(1.0, u)
        ra_s, ra_p, rb_s, rb_p = self.coefficients(u)
        e_a = np.exp(2j * self.k1 * l1 * self.z_a) if np.isfinite(self.z_a) else 0.0
        e_b = np.exp(2j * self.k1 * l1 * self.z_b) if np.isfinite(self.z_b) else 0.0
        e_ab = e_a * e_b
        dp = 1.0 - ra_p * rb_p * e_ab
        ds = 1.0 - ra_s * rb_s * e_ab
        # (1 + a)(1 + b)/(1 - ab) - 1 = (a + b + 2ab)/(1 - ab)
        sp_a, sp_b = ra_p * e_a, rb_p * e_b
        ss_a, ss_b = ra_s * e_a, rb_s * e_b
        perp = 1.5 * u**3 / l1 * (sp_a + sp_b + 2 * sp_a * sp_b) / dp
        par = 0.75 * (u / l1 * (ss_a + ss_b + 2 * ss_a * ss_b) / ds
                      + u * l1 * (-sp_a - sp_b + 2 * sp_a * sp_b) / dp)
        return perp, par

    def pole_scale(self):
        """Upper bound on the normalized in-plane wavevector of bound modes."""
        top = 1.0
        for eps, _ in self.above + self.below:
            eps = complex(eps)
            top = max(top, np.sqrt(max(eps.real, 0.0) / self.eps1.real))
            if eps.real < 0:
                # surface plasmon at a metal interface with the emitter medium
                # or any dielectric of the stack
                for d_eps, _ in [(self.eps1, 0)] + self.above + self.below:
                    d_eps = complex(d_eps)
                    if d_eps.real > 0:
                        spp = np.sqrt(eps * d_eps / (eps + d_eps) / self.eps1)
                        top = max(top, abs(spp.real))
        return top

    def tail_scale(self):
        z = min(self.z_a, self.z_b)
        return 1.0 / (2.0 * self.k1 * z) if np.isfinite(z) else 1.0


def _gauss_panels(f, a, b, n_panels):
    """Composite Gauss-Legendre integral of vector-valued ``f`` over [a, b]."""
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    vals = f(x)
    return [np.sum(v * w) for v in vals]


def _adaptive(f, a, b, rtol, start=8, max_panels=2**13, atol=1e-12):
    n = start
    prev = _gauss_panels(f, a, b, n)
    while n < max_panels:
        n *= 2
        cur = _gauss_panels(f, a, b, n)
        if all(abs(c.real - p.real) <= rtol * abs(c.real) + atol for c, p in zip(cur, prev)):
            return cur, n
        prev = cur
    raise QuadratureNotConverged(f"no convergence to rtol={rtol:g} with {max_panels} panels")


def total_rates(geom, rtol=1e-6):
    """Total decay rates (perp, par) normalized to the homogeneous emitter medium.

    Returns a dict with the two orientations and the panel counts used.
    """
    u_max = 1.5 * geom.pole_scale() + 0.5
    depth = 0.15 * u_max

    def on_ellipse(t):
        u = 0.5 * u_max * (1 - np.cos(t)) - 1j * depth * np.sin(t)
        du = 0.5 * u_max * np.sin(t) - 1j * depth * np.cos(t)
        perp, par = geom.integrands(u)
        return perp * du, par * du

    scale = max(geom.tail_scale(), 1.0)

    def on_tail(x):
        # u = u_max + scale * x / (1 - x), x in [0, 1)
        xm = np.clip(x, 0.0, 1.0 - 1e-15)
        u = u_max + scale * xm / (1 - xm)
        du = scale / (1 - xm) ** 2
        perp, par = geom.integrands(u.astype(complex))
        return perp * du, par * du

    (e_perp, e_par), n_e = _adaptive(on_ellipse, 0.0, np.pi, rtol)
    (t_perp, t_par), n_t = _adaptive(on_tail, 0.0, 1.0, rtol)
    return {
        "perp": 1.0 + float((e_perp + t_perp).real),
        "par": 1.0 + float((e_par + t_par).real),
        "panels": (n_e, n_t),
    }


def radiated_up(geom, eps_out=None, rtol=1e-6):
    """Power (perp, par) escaping upward into the lossless outer medium.

    Either the emitter layer is itself the outer medium (no stack above), or
    the stack above is a single interface to ``eps_out``. The power carried
    across that interface is the incident flux times 1 - |R|^2, so the
    emitter layer and the outer medium must be lossless. Normalized to the
    homogeneous emitter medium, where each half space receives 1/2.
    """
    if len(geom.above) > 1:
        raise ValueError("radiated_up supports at most one upper interface")
    if geom.above:
        eps_out = geom.above[0][0] if eps_out is None else eps_out
        u_c = min(np.sqrt(complex(eps_out).real / geom.eps1.real), 1.0)
    else:
        u_c = 1.0

    def f(u):
        u = np.asarray(u, dtype=complex)
        l1 = kz(1.0, u)
        ra_s, ra_p, rb_s, rb_p = geom.coefficients(u)
        e_a = np.exp(2j * geom.k1 * l1 * geom.z_a) if np.isfinite(geom.z_a) else 0.0
        e_b = np.exp(2j * geom.k1 * l1 * geom.z_b) if np.isfinite(geom.z_b) else 0.0
        e_ab = e_a * e_b
        ta_s = 1 - np.abs(ra_s) ** 2
        ta_p = 1 - np.abs(ra_p) ** 2
        perp = 0.75 * u**3 / l1 * np.abs(1 + rb_p * e_b) ** 2 * ta_p / np.abs(1 - ra_p * rb_p * e_ab) ** 2
        par = 0.375 * (u / l1 * np.abs(1 + rb_s * e_b) ** 2 * ta_s / np.abs(1 - ra_s * rb_s * e_ab) ** 2
                       + u * l1 * np.abs(1 - rb_p * e_b) ** 2 * ta_p / np.abs(1 - ra_p * rb_p * e_ab) ** 2)
        return perp, par

    # u = u_c sin(theta) removes the 1/l1 edge behaviour when u_c = 1
    def g(theta):
        u = u_c * np.sin(theta)
        perp, par = f(u)
        jac = u_c * np.cos(theta)
        return perp * jac, par * jac

    (perp, par), _ = _adaptive(g, 0.0, np.pi / 2, rtol)
    return {"perp": float(np.real(perp)), "par": float(np.real(par))}


def plasmon_pole_rates(eps_emit, eps_metal, wavelength_nm, distance_nm):
    """Rates (perp, par) carried by the surface-plasmon pole of a single interface.

    Emitter in ``eps_emit`` at ``distance_nm`` above a metal half space. The
    pole of r_p sits at u_p = sqrt(e / (e + 1)) with e = eps_metal / eps_emit;
    its contribution to the real-axis integral is Re(i pi Res) = -pi Im(Res).
    Decays as exp(-2 k1 |l1(u_p)| d) away from the surface.
    """
    eps1 = complex(eps_emit).real
    er = complex(eps_metal) / eps1
    if er.real >= -1.0:
        return {"perp": 0.0, "par": 0.0}
    k1 = 2 * np.pi * np.sqrt(eps1) / wavelength_nm
    u_p = np.sqrt(er / (er + 1))
    l1 = kz(1.0, u_p)
    lm = kz(er, u_p)
    # r_p = (er l1 - lm) / (er l1 + lm); derivative of the denominator at the pole
    d_den = -u_p * (er / l1 + 1.0 / lm)
    num = er * l1 - lm
    ph = np.exp(2j * k1 * l1 * distance_nm)
    res_perp = 1.5 * u_p**3 / l1 * num * ph / d_den
    res_par = -0.75 * u_p * l1 * num * ph / d_den
    return {"perp": float(-np.pi * res_perp.imag), "par": float(-np.pi * res_par.imag)}
