#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace quinv {

enum class DistKind { photocount_histogram, photon_distribution };

const char* dist_kind_name(DistKind k);
DistKind parse_dist_kind(const std::string& s);

// Dense truncated N-dimensional probability array, row-major with the last
// axis fastest.
struct JointDistribution {
    int n_beams = 0;
    std::vector<int> shape;
    std::vector<double> mass;
    DistKind kind = DistKind::photon_distribution;

    JointDistribution() = default;
    JointDistribution(std::vector<int> shape, DistKind kind);

    std::size_t size() const { return mass.size(); }
    std::size_t stride(int axis) const;
    std::size_t offset(const std::vector<int>& idx) const;
    double& at(const std::vector<int>& idx) { return mass[offset(idx)]; }
    double at(const std::vector<int>& idx) const { return mass[offset(idx)]; }

    double total() const;
    void normalize();
    // entries >= 0 and, when check_norm, total within tol of 1
    void validate(bool check_norm = true, double tol = 1e-9) const;

    std::vector<double> marginal(int axis) const;
    // largest mass found on the last slice of any axis
    double top_bin_mass() const;
};

double total_variation(const JointDistribution& a, const JointDistribution& b);

}  // namespace quinv
