#include "quinv/gauss_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "quinv/errors.hpp"

namespace quinv {

int pair_count(int n_beams) { return n_beams * (n_beams - 1) / 2; }

int pair_index(int n_beams, int j, int k) {
    if (j == k || j < 0 || k < 0 || j >= n_beams || k >= n_beams)
        throw ValidationError("invalid beam pair (" + std::to_string(j) + "," + std::to_string(k) + ")");
    if (j > k) std::swap(j, k);
    // pairs before row j: sum_{r<j} (N-1-r)
    return j * (2 * n_beams - j - 1) / 2 + (k - j - 1);
}

GaussianStateParams GaussianStateParams::vacuum(int n_beams) {
    if (n_beams < 1) throw ValidationError("n_beams must be >= 1");
    GaussianStateParams p;
    p.n_beams = n_beams;
    p.b.assign(n_beams, 0.0);
    p.c.assign(n_beams, cplx{});
    p.d.assign(pair_count(n_beams), cplx{});
    p.d_bar.assign(pair_count(n_beams), cplx{});
    return p;
}

cplx GaussianStateParams::D(int j, int k) const { return d[pair_index(n_beams, j, k)]; }

cplx GaussianStateParams::Dbar(int j, int k) const {
    cplx v = d_bar[pair_index(n_beams, j, k)];
    return j < k ? v : std::conj(v);
}

void GaussianStateParams::set_D(int j, int k, cplx v) { d[pair_index(n_beams, j, k)] = v; }

void GaussianStateParams::set_Dbar(int j, int k, cplx v) {
    d_bar[pair_index(n_beams, j, k)] = j < k ? v : std::conj(v);
}

void GaussianStateParams::validate() const {
    if (n_beams < 1) throw ValidationError("n_beams must be >= 1");
    const auto np = static_cast<std::size_t>(pair_count(n_beams));
    if (b.size() != static_cast<std::size_t>(n_beams) || c.size() != b.size() || d.size() != np ||
        d_bar.size() != np)
        throw ValidationError("parameter arrays do not match n_beams");
    for (int j = 0; j < n_beams; ++j) {
        if (!std::isfinite(b[j]) || !std::isfinite(c[j].real()) || !std::isfinite(c[j].imag()))
            throw ValidationError("non-finite single-beam parameter");
        if (b[j] < 0) throw ValidationError("B_" + std::to_string(j + 1) + " < 0");
    }
    for (std::size_t i = 0; i < np; ++i)
        if (!std::isfinite(std::abs(d[i])) || !std::isfinite(std::abs(d_bar[i])))
            throw ValidationError("non-finite pair parameter");
}

CovarianceMatrix build_covariance(const GaussianStateParams& p) {
    p.validate();
    const int n = p.n_beams;
    CovarianceMatrix cm;
    cm.n_beams = n;
    cm.m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int j = 0; j < n; ++j) {
        const double b = p.b[j];
        const cplx c = p.c[j];
        cm.m(2 * j, 2 * j) = 1 + 2 * b + 2 * c.real();
        cm.m(2 * j, 2 * j + 1) = 2 * c.imag();
        cm.m(2 * j + 1, 2 * j) = 2 * c.imag();
        cm.m(2 * j + 1, 2 * j + 1) = 1 + 2 * b - 2 * c.real();
    }
    for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) {
            const cplx dm = p.D(j, k) - p.Dbar(j, k);
            const cplx dp = p.D(j, k) + p.Dbar(j, k);
            const double e00 = 2 * dm.real(), e01 = 2 * dm.imag();
            const double e10 = 2 * dp.imag(), e11 = -2 * dp.real();
            cm.m(2 * j, 2 * k) = e00;
            cm.m(2 * j, 2 * k + 1) = e01;
            cm.m(2 * j + 1, 2 * k) = e10;
            cm.m(2 * j + 1, 2 * k + 1) = e11;
            cm.m(2 * k, 2 * j) = e00;
            cm.m(2 * k + 1, 2 * j) = e01;
            cm.m(2 * k, 2 * j + 1) = e10;
            cm.m(2 * k + 1, 2 * j + 1) = e11;
        }
    return cm;
}

GaussianStateParams params_from_covariance(const CovarianceMatrix& cm) {
    const int n = cm.n_beams;
    if (cm.m.rows() != 2 * n || cm.m.cols() != 2 * n) throw ValidationError("covariance shape mismatch");
    auto p = GaussianStateParams::vacuum(n);
    const auto& a = cm.m;
    for (int j = 0; j < n; ++j) {
        const double s00 = a(2 * j, 2 * j), s11 = a(2 * j + 1, 2 * j + 1);
        const double s01 = 0.5 * (a(2 * j, 2 * j + 1) + a(2 * j + 1, 2 * j));
        p.b[j] = (s00 + s11 - 2) / 4;
        p.c[j] = cplx((s00 - s11) / 4, s01 / 2);
    }
    for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) {
            const double e00 = a(2 * j, 2 * k), e01 = a(2 * j, 2 * k + 1);
            const double e10 = a(2 * j + 1, 2 * k), e11 = a(2 * j + 1, 2 * k + 1);
            p.set_D(j, k, cplx((e00 - e11) / 4, (e01 + e10) / 4));
            p.set_Dbar(j, k, cplx((-e00 - e11) / 4, (e10 - e01) / 4));
        }
    return p;
}

Eigen::MatrixXd symplectic_form(int n_beams) {
    Eigen::MatrixXd o = Eigen::MatrixXd::Zero(2 * n_beams, 2 * n_beams);
    for (int j = 0; j < n_beams; ++j) {
        o(2 * j, 2 * j + 1) = 1;
        o(2 * j + 1, 2 * j) = -1;
    }
    return o;
}

double principal_minor_sum(const Eigen::MatrixXd& a, int r) {
    const int n = static_cast<int>(a.rows());
    if (r < 0 || r > n) throw ValidationError("minor order out of range");
    if (r == 0) return 1.0;
    double total = 0.0;
    std::vector<int> idx(r);
    Eigen::MatrixXd sub(r, r);
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (__builtin_popcount(mask) != r) continue;
        int t = 0;
        for (int i = 0; i < n; ++i)
            if (mask & (1u << i)) idx[t++] = i;
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) sub(i, j) = a(idx[i], idx[j]);
        total += sub.determinant();
    }
    return total;
}

double qui_from_covariance(const CovarianceMatrix& cm, int k) {
    if (k < 1 || k > cm.n_beams)
        throw ValidationError("QUI order k=" + std::to_string(k) + " outside 1.." + std::to_string(cm.n_beams));
    return principal_minor_sum(symplectic_form(cm.n_beams) * cm.m, 2 * k);
}

std::vector<double> all_quis(const CovarianceMatrix& cm) {
    std::vector<double> out;
    const Eigen::MatrixXd oa = symplectic_form(cm.n_beams) * cm.m;
    for (int k = 1; k <= cm.n_beams; ++k) out.push_back(principal_minor_sum(oa, 2 * k));
    return out;
}

SymplecticSpectrum symplectic_eigenvalues(const CovarianceMatrix& cm) {
    const int n = cm.n_beams;
    // an indefinite matrix can still have an imaginary Omega*A spectrum
    if (Eigen::LLT<Eigen::MatrixXd>(cm.m).info() != Eigen::Success)
        throw ValidationError("covariance matrix is not positive definite");
    const Eigen::MatrixXd oa = symplectic_form(n) * cm.m;
    Eigen::EigenSolver<Eigen::MatrixXd> es(oa, false);
    if (es.info() != Eigen::Success) throw ValidationError("eigen decomposition failed");
    const auto ev = es.eigenvalues();
    const double scale = std::max(1.0, cm.m.cwiseAbs().maxCoeff());
    std::vector<double> mags;
    for (int i = 0; i < ev.size(); ++i) {
        // for a positive definite A the spectrum of Omega*A is purely imaginary
        if (std::abs(ev[i].real()) > 1e-6 * scale)
            throw ValidationError("covariance matrix is not positive definite");
        mags.push_back(std::abs(ev[i]));
    }
    std::sort(mags.begin(), mags.end(), std::greater<>());
    SymplecticSpectrum sp;
    for (int j = 0; j < n; ++j) sp.nu.push_back(0.5 * (mags[2 * j] + mags[2 * j + 1]));

    // polynomial route: x^N - D1 x^{N-1} + D2 x^{N-2} - ... ; roots are nu^2
    const auto q = all_quis(cm);
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1;
    for (int k = 1; k <= n; ++k) comp(0, k - 1) = (k % 2 ? 1.0 : -1.0) * q[k - 1];
    Eigen::EigenSolver<Eigen::MatrixXd> cs(comp, false);
    std::vector<double> roots;
    for (int i = 0; i < n; ++i) roots.push_back(cs.eigenvalues()[i].real());
    std::sort(roots.begin(), roots.end(), std::greater<>());
    for (int j = 0; j < n; ++j) {
        if (roots[j] < -1e-6 * scale * scale) throw ValidationError("negative root of the invariant polynomial");
        sp.poly_route_dev = std::max(sp.poly_route_dev, std::abs(roots[j] - sp.nu[j] * sp.nu[j]));
    }
    return sp;
}

bool is_physical(const CovarianceMatrix& cm, double tol) {
    try {
        const auto sp = symplectic_eigenvalues(cm);
        return sp.nu.back() >= 1.0 - tol;
    } catch (const ValidationError&) {
        return false;
    }
}

CovarianceMatrix partial_transpose(const CovarianceMatrix& cm, int beam) {
    if (beam < 0 || beam >= cm.n_beams) throw ValidationError("beam index out of range");
    CovarianceMatrix out = cm;
    const int r = 2 * beam + 1;
    out.m.row(r) *= -1.0;
    out.m.col(r) *= -1.0;
    return out;
}

double purity_standard(double delta_top) { return 1.0 / std::sqrt(delta_top); }
double purity_inverse_square(double delta_top) { return 1.0 / (delta_top * delta_top); }

}  // namespace quinv
