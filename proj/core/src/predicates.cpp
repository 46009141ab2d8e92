// Exact-decision planar orientation and in-circle predicates.
//
// Fast floating-point evaluation with a forward error bound; when the bound
// cannot certify the sign, the determinant is re-evaluated exactly with
// nonoverlapping floating-point expansions. Requires strict IEEE double
// arithmetic in this translation unit (built with -ffp-contract=off).

#include "pfem/geometry.hpp"
#include "pfem/error.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace pfem {
namespace {

constexpr double kEps = 1.1102230246251565e-16;  // 2^-53
constexpr double kSplitter = 134217729.0;        // 2^27 + 1

const double kCcwErrBoundA = (3.0 + 16.0 * kEps) * kEps;
const double kIccErrBoundA = (10.0 + 96.0 * kEps) * kEps;

inline void two_sum(double a, double b, double& x, double& y) {
    x = a + b;
    const double bvirt = x - a;
    const double avirt = x - bvirt;
    const double bround = b - bvirt;
    const double around = a - avirt;
    y = around + bround;
}

inline void two_diff(double a, double b, double& x, double& y) {
    x = a - b;
    const double bvirt = a - x;
    const double avirt = x + bvirt;
    const double bround = bvirt - b;
    const double around = a - avirt;
    y = around + bround;
}

inline void split(double a, double& hi, double& lo) {
    const double c = kSplitter * a;
    const double abig = c - a;
    hi = c - abig;
    lo = a - hi;
}

inline void two_product(double a, double b, double& x, double& y) {
    x = a * b;
    double ahi, alo, bhi, blo;
    split(a, ahi, alo);
    split(b, bhi, blo);
    const double err1 = x - (ahi * bhi);
    const double err2 = err1 - (alo * bhi);
    const double err3 = err2 - (ahi * blo);
    y = (alo * blo) - err3;
}

// Expansions are stored in increasing-magnitude order with zero components
// eliminated; the sign of the expansion is the sign of its last component.

// h = e + f, both nonoverlapping and in increasing-magnitude order; h may
// not alias the inputs. Zero components are eliminated. Returns the count.
int expansion_sum(const double* e, int elen, const double* f, int flen, double* h) {
    if (elen == 0 && flen == 0) return 0;
    if (elen == 0) { for (int i = 0; i < flen; ++i) h[i] = f[i]; return flen; }
    if (flen == 0) { for (int i = 0; i < elen; ++i) h[i] = e[i]; return elen; }

    int eindex = 0, findex = 0, hindex = 0;
    double enow = e[0], fnow = f[0];
    double q, qnew, hh;

    auto advance_e = [&] { ++eindex; enow = (eindex < elen) ? e[eindex] : 0.0; };
    auto advance_f = [&] { ++findex; fnow = (findex < flen) ? f[findex] : 0.0; };
    auto e_is_smaller = [&] { return (fnow > enow) == (fnow > -enow); };

    if (e_is_smaller()) { q = enow; advance_e(); }
    else { q = fnow; advance_f(); }

    while (eindex < elen && findex < flen) {
        if (e_is_smaller()) { two_sum(q, enow, qnew, hh); advance_e(); }
        else { two_sum(q, fnow, qnew, hh); advance_f(); }
        q = qnew;
        if (hh != 0.0) h[hindex++] = hh;
    }
    while (eindex < elen) {
        two_sum(q, enow, qnew, hh); advance_e();
        q = qnew;
        if (hh != 0.0) h[hindex++] = hh;
    }
    while (findex < flen) {
        two_sum(q, fnow, qnew, hh); advance_f();
        q = qnew;
        if (hh != 0.0) h[hindex++] = hh;
    }
    if (q != 0.0 || hindex == 0) h[hindex++] = q;
    return hindex;
}

// h = e * b; h may not alias e.
int scale_expansion(const double* e, int elen, double b, double* h) {
    if (elen == 0 || b == 0.0) { h[0] = 0.0; return 0; }
    double q, hh, product1, product0, sum;
    int hindex = 0;
    two_product(e[0], b, q, hh);
    if (hh != 0.0) h[hindex++] = hh;
    for (int eindex = 1; eindex < elen; ++eindex) {
        two_product(e[eindex], b, product1, product0);
        two_sum(q, product0, sum, hh);
        if (hh != 0.0) h[hindex++] = hh;
        two_sum(product1, sum, q, hh);
        if (hh != 0.0) h[hindex++] = hh;
    }
    if (q != 0.0 || hindex == 0) h[hindex++] = q;
    return hindex;
}

int expansion_sign(const double* e, int elen) {
    if (elen == 0) return 0;
    const double top = e[elen - 1];
    return (top > 0.0) - (top < 0.0);
}

// Dynamic expansion for the incircle fallback, where fixed bounds get bulky.
using Exp = std::vector<double>;

Exp exp_from(double hi, double lo) {
    Exp r;
    if (lo != 0.0) r.push_back(lo);
    if (hi != 0.0) r.push_back(hi);
    return r;
}

Exp exp_add(const Exp& e, const Exp& f) {
    Exp h(e.size() + f.size() + 1);
    const int n = expansion_sum(e.data(), static_cast<int>(e.size()),
                                f.data(), static_cast<int>(f.size()), h.data());
    h.resize(static_cast<size_t>(n));
    if (n == 1 && h[0] == 0.0) h.clear();
    return h;
}

Exp exp_neg(Exp e) {
    for (double& v : e) v = -v;
    return e;
}

Exp exp_sub(const Exp& e, const Exp& f) { return exp_add(e, exp_neg(f)); }

Exp exp_scale(const Exp& e, double b) {
    if (e.empty() || b == 0.0) return {};
    Exp h(2 * e.size() + 1);
    const int n = scale_expansion(e.data(), static_cast<int>(e.size()), b, h.data());
    h.resize(static_cast<size_t>(n));
    if (n == 1 && h[0] == 0.0) h.clear();
    return h;
}

Exp exp_mul(const Exp& e, const Exp& f) {
    Exp acc;
    for (double c : f) acc = exp_add(acc, exp_scale(e, c));
    return acc;
}

int exp_sign(const Exp& e) {
    return expansion_sign(e.data(), static_cast<int>(e.size()));
}

int orient2d_exact(Point2 a, Point2 b, Point2 c) {
    // det = ax by - ax cy + ay cx - ay bx + bx cy - by cx, term by term.
    double p1, p0;
    std::array<double, 4> t1{}, t2{}, t3{};
    std::array<double, 2> u{}, v{};

    auto two_two_diff = [](double ah, double al, double bh, double bl,
                           std::array<double, 4>& out) {
        const double e[2] = {al, ah};
        const double f[2] = {-bl, -bh};
        double h[5];
        const int n = expansion_sum(e, 2, f, 2, h);
        out.fill(0.0);
        for (int i = 0; i < n && i < 4; ++i) out[static_cast<size_t>(i)] = h[i];
        return n;
    };

    two_product(a.x, b.y, p1, p0); u = {p0, p1};
    two_product(a.x, c.y, p1, p0); v = {p0, p1};
    int n1 = two_two_diff(u[1], u[0], v[1], v[0], t1);

    two_product(a.y, c.x, p1, p0); u = {p0, p1};
    two_product(a.y, b.x, p1, p0); v = {p0, p1};
    int n2 = two_two_diff(u[1], u[0], v[1], v[0], t2);

    two_product(b.x, c.y, p1, p0); u = {p0, p1};
    two_product(b.y, c.x, p1, p0); v = {p0, p1};
    int n3 = two_two_diff(u[1], u[0], v[1], v[0], t3);

    double s[8], d[12];
    const int ns = expansion_sum(t1.data(), n1, t2.data(), n2, s);
    const int nd = expansion_sum(s, ns, t3.data(), n3, d);
    return expansion_sign(d, nd);
}

int incircle_exact(Point2 a, Point2 b, Point2 c, Point2 d) {
    double hi, lo;
    two_diff(a.x, d.x, hi, lo); const Exp adx = exp_from(hi, lo);
    two_diff(a.y, d.y, hi, lo); const Exp ady = exp_from(hi, lo);
    two_diff(b.x, d.x, hi, lo); const Exp bdx = exp_from(hi, lo);
    two_diff(b.y, d.y, hi, lo); const Exp bdy = exp_from(hi, lo);
    two_diff(c.x, d.x, hi, lo); const Exp cdx = exp_from(hi, lo);
    two_diff(c.y, d.y, hi, lo); const Exp cdy = exp_from(hi, lo);

    const Exp bc = exp_sub(exp_mul(bdx, cdy), exp_mul(cdx, bdy));
    const Exp ca = exp_sub(exp_mul(cdx, ady), exp_mul(adx, cdy));
    const Exp ab = exp_sub(exp_mul(adx, bdy), exp_mul(bdx, ady));

    const Exp alift = exp_add(exp_mul(adx, adx), exp_mul(ady, ady));
    const Exp blift = exp_add(exp_mul(bdx, bdx), exp_mul(bdy, bdy));
    const Exp clift = exp_add(exp_mul(cdx, cdx), exp_mul(cdy, cdy));

    const Exp det = exp_add(exp_add(exp_mul(alift, bc), exp_mul(blift, ca)),
                            exp_mul(clift, ab));
    return exp_sign(det);
}

inline void check_finite(std::initializer_list<Point2> pts, const char* who) {
    for (Point2 p : pts) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw DomainError(std::string(who) + ": non-finite coordinate");
    }
}

} // namespace

int orient2d(Point2 a, Point2 b, Point2 c) {
    check_finite({a, b, c}, "orient2d");

    const double detleft = (a.x - c.x) * (b.y - c.y);
    const double detright = (a.y - c.y) * (b.x - c.x);
    const double det = detleft - detright;
    double detsum;

    if (detleft > 0.0) {
        if (detright <= 0.0) return (det > 0.0) - (det < 0.0);
        detsum = detleft + detright;
    } else if (detleft < 0.0) {
        if (detright >= 0.0) return (det > 0.0) - (det < 0.0);
        detsum = -detleft - detright;
    } else {
        return (det > 0.0) - (det < 0.0);
    }

    const double errbound = kCcwErrBoundA * detsum;
    if (det >= errbound || -det >= errbound) return (det > 0.0) - (det < 0.0);
    return orient2d_exact(a, b, c);
}

int incircle(Point2 a, Point2 b, Point2 c, Point2 d) {
    check_finite({a, b, c, d}, "incircle");

    const double adx = a.x - d.x, ady = a.y - d.y;
    const double bdx = b.x - d.x, bdy = b.y - d.y;
    const double cdx = c.x - d.x, cdy = c.y - d.y;

    const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
    const double alift = adx * adx + ady * ady;
    const double cdxady = cdx * ady, adxcdy = adx * cdy;
    const double blift = bdx * bdx + bdy * bdy;
    const double adxbdy = adx * bdy, bdxady = bdx * ady;
    const double clift = cdx * cdx + cdy * cdy;

    const double det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) +
                       clift * (adxbdy - bdxady);
    const double permanent = (std::abs(bdxcdy) + std::abs(cdxbdy)) * alift +
                             (std::abs(cdxady) + std::abs(adxcdy)) * blift +
                             (std::abs(adxbdy) + std::abs(bdxady)) * clift;
    const double errbound = kIccErrBoundA * permanent;
    if (det > errbound || -det > errbound) return (det > 0.0) - (det < 0.0);
    return incircle_exact(a, b, c, d);
}

} // namespace pfem
