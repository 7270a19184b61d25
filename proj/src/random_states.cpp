#include "quinv/random_states.hpp"

#include <cmath>
#include <numbers>

#include "quinv/errors.hpp"

namespace quinv {
namespace {

void rotate(Eigen::MatrixXd& s, int j, double th) {
    const double c = std::cos(th), sn = std::sin(th);
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(s.rows(), s.cols());
    r(2 * j, 2 * j) = c;
    r(2 * j, 2 * j + 1) = sn;
    r(2 * j + 1, 2 * j) = -sn;
    r(2 * j + 1, 2 * j + 1) = c;
    s = r * s;
}

void squeeze(Eigen::MatrixXd& s, int j, double r) {
    Eigen::MatrixXd z = Eigen::MatrixXd::Identity(s.rows(), s.cols());
    z(2 * j, 2 * j) = std::exp(r);
    z(2 * j + 1, 2 * j + 1) = std::exp(-r);
    s = z * s;
}

void mix(Eigen::MatrixXd& s, int j, int k, double t) {
    const double c = std::cos(t), sn = std::sin(t);
    Eigen::MatrixXd b = Eigen::MatrixXd::Identity(s.rows(), s.cols());
    for (int q = 0; q < 2; ++q) {
        b(2 * j + q, 2 * j + q) = c;
        b(2 * j + q, 2 * k + q) = sn;
        b(2 * k + q, 2 * j + q) = -sn;
        b(2 * k + q, 2 * k + q) = c;
    }
    s = b * s;
}

}  // namespace

CovarianceMatrix random_physical_covariance(int n, std::mt19937_64& rng, const RandomStateOptions& opt) {
    if (n < 1) throw ValidationError("n_beams must be >= 1");
    std::uniform_real_distribution<double> angle(0.0, 2 * std::numbers::pi);
    std::uniform_real_distribution<double> sq(0.0, opt.max_squeeze);
    std::exponential_distribution<double> exc(1.0 / opt.max_excess);

    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2 * n, 2 * n);
    auto passive = [&] {
        for (int j = 0; j < n; ++j) rotate(s, j, angle(rng));
        for (int j = 0; j < n; ++j)
            for (int k = j + 1; k < n; ++k) mix(s, j, k, angle(rng));
    };
    passive();
    for (int j = 0; j < n; ++j) squeeze(s, j, sq(rng));
    passive();

    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int j = 0; j < n; ++j) {
        const double nu = 1.0 + std::min(exc(rng), 3 * opt.max_excess);
        d(2 * j, 2 * j) = nu;
        d(2 * j + 1, 2 * j + 1) = nu;
    }
    CovarianceMatrix cm;
    cm.n_beams = n;
    cm.m = s * d * s.transpose();
    cm.m = 0.5 * (cm.m + cm.m.transpose()).eval();
    return cm;
}

GaussianStateParams random_physical_params(int n, std::mt19937_64& rng, const RandomStateOptions& opt) {
    return params_from_covariance(random_physical_covariance(n, rng, opt));
}

GaussianStateParams random_symmetric_params(std::mt19937_64& rng, double scale) {
    std::uniform_real_distribution<double> ub(0.0, 1.0);
    std::normal_distribution<double> g(0.0, scale);
    for (int attempt = 0; attempt < 100000; ++attempt) {
        auto p = GaussianStateParams::vacuum(3);
        const double b = ub(rng);
        const cplx c(g(rng), g(rng));
        const cplx d(g(rng), g(rng));
        const double db = g(rng);
        for (int j = 0; j < 3; ++j) {
            p.b[j] = b;
            p.c[j] = c;
        }
        for (std::size_t i = 0; i < p.d.size(); ++i) {
            p.d[i] = d;
            p.d_bar[i] = db;
        }
        if (is_physical(build_covariance(p))) return p;
    }
    throw ValidationError("could not sample a physical symmetric state");
}

}  // namespace quinv
