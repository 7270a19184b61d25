#include "quinv/distribution.hpp"

#include <cmath>

#include "quinv/errors.hpp"
#include "quinv/kernels.hpp"

namespace quinv {

const char* dist_kind_name(DistKind k) {
    return k == DistKind::photocount_histogram ? "photocount_histogram" : "photon_distribution";
}

DistKind parse_dist_kind(const std::string& s) {
    if (s == "photocount_histogram") return DistKind::photocount_histogram;
    if (s == "photon_distribution") return DistKind::photon_distribution;
    throw ValidationError("unknown distribution kind '" + s + "'");
}

JointDistribution::JointDistribution(std::vector<int> shp, DistKind k)
    : n_beams(static_cast<int>(shp.size())), shape(std::move(shp)), kind(k) {
    std::size_t n = 1;
    for (int s : shape) {
        if (s < 1) throw ValidationError("distribution axis size must be >= 1");
        n *= static_cast<std::size_t>(s);
    }
    mass.assign(n, 0.0);
}

std::size_t JointDistribution::stride(int axis) const {
    std::size_t s = 1;
    for (int a = n_beams - 1; a > axis; --a) s *= static_cast<std::size_t>(shape[a]);
    return s;
}

std::size_t JointDistribution::offset(const std::vector<int>& idx) const {
    if (static_cast<int>(idx.size()) != n_beams) throw ValidationError("index rank mismatch");
    std::size_t off = 0;
    for (int a = 0; a < n_beams; ++a) {
        if (idx[a] < 0 || idx[a] >= shape[a]) throw ValidationError("index outside truncation");
        off = off * static_cast<std::size_t>(shape[a]) + static_cast<std::size_t>(idx[a]);
    }
    return off;
}

double JointDistribution::total() const { return kernels::sum(mass.data(), mass.size()); }

void JointDistribution::normalize() {
    const double t = total();
    if (!(t > 0)) throw ValidationError("cannot normalize a distribution with zero mass");
    for (double& v : mass) v /= t;
}

void JointDistribution::validate(bool check_norm, double tol) const {
    if (n_beams < 1 || static_cast<int>(shape.size()) != n_beams) throw ValidationError("bad distribution shape");
    std::size_t n = 1;
    for (int s : shape) n *= static_cast<std::size_t>(s);
    if (n != mass.size()) throw ValidationError("distribution size does not match shape");
    for (double v : mass)
        if (!(v >= 0) || !std::isfinite(v)) throw ValidationError("distribution has negative or non-finite mass");
    if (check_norm && std::abs(total() - 1.0) > tol)
        throw ValidationError("distribution not normalized (total " + std::to_string(total()) + ")");
}

std::vector<double> JointDistribution::marginal(int axis) const {
    std::vector<double> out(shape.at(axis), 0.0);
    const std::size_t st = stride(axis);
    const auto len = static_cast<std::size_t>(shape[axis]);
    for (std::size_t i = 0; i < mass.size(); ++i) out[(i / st) % len] += mass[i];
    return out;
}

double JointDistribution::top_bin_mass() const {
    double top = 0.0;
    for (int a = 0; a < n_beams; ++a) top = std::max(top, marginal(a).back());
    return top;
}

double total_variation(const JointDistribution& a, const JointDistribution& b) {
    if (a.shape != b.shape) throw ValidationError("total variation needs equal shapes");
    double s = 0.0;
    for (std::size_t i = 0; i < a.mass.size(); ++i) s += std::abs(a.mass[i] - b.mass[i]);
    return 0.5 * s;
}

}  // namespace quinv
