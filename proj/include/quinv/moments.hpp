#pragma once

#include <map>
#include <string>
#include <vector>

#include "quinv/distribution.hpp"
#include "quinv/gauss_core.hpp"

namespace quinv {

// Powers (l_1,...,l_N) of a mixed moment; total order is the sum.
using MomentIndex = std::vector<int>;

int moment_order(const MomentIndex& idx);
// all indices of n_beams entries with 1 <= order <= max_order, graded then lexicographic
std::vector<MomentIndex> indices_up_to(int n_beams, int max_order);

enum class Provenance { model, measured, reduced };
const char* provenance_name(Provenance p);
Provenance parse_provenance(const std::string& s);

// Normally ordered intensity moments <W_1^l1 ... W_N^lN>.
struct IntensityMoments {
    int n_beams = 0;
    int max_order = 0;
    Provenance provenance = Provenance::model;
    std::map<MomentIndex, double> values;

    bool has(const MomentIndex& idx) const;
    // zero index gives 1; throws MissingMomentError when absent
    double at(const MomentIndex& idx) const;
    // moment addressed by a list of 1-based beam labels, e.g. W({1,1,2}) = <W1^2 W2>
    double W(std::initializer_list<int> beams) const;
    double W(const std::vector<int>& beams) const;
    void set(const MomentIndex& idx, double v);
    // restriction to a subset of beams (0-based, in the given order)
    IntensityMoments restrict(const std::vector<int>& beams) const;
};

// Ordinary photon-number moments <n_1^l1 ...>.
struct PhotonMoments {
    int n_beams = 0;
    int max_order = 0;
    std::map<MomentIndex, double> values;
    std::vector<std::string> warnings;

    double at(const MomentIndex& idx) const;
};

IntensityMoments moments_from_params(const GaussianStateParams& p, int max_order);
// single moment; used where only a few entries are needed
double moment_from_params(const GaussianStateParams& p, const MomentIndex& idx);

IntensityMoments intensity_from_photon_moments(const PhotonMoments& pm);
PhotonMoments photon_from_intensity_moments(const IntensityMoments& im);

PhotonMoments moments_from_distribution(const JointDistribution& dist, int max_order,
                                        double norm_tol = 1e-6);
// factorial moments straight from a distribution (same as composing the two calls above)
IntensityMoments intensity_moments_from_distribution(const JointDistribution& dist, int max_order,
                                                     double norm_tol = 1e-6);

// signed Stirling numbers of the first kind s(n,k) and second kind S(n,k)
double stirling1(int n, int k);
double stirling2(int n, int k);

// Central moments <prod (W_j - <W_j>)^{l_j}> keyed like the raw ones; entries of order 1 are 0.
std::map<MomentIndex, double> raw_to_central(const IntensityMoments& m);
IntensityMoments central_to_raw(const std::map<MomentIndex, double>& central,
                                const std::vector<double>& means, int n_beams, int max_order,
                                Provenance prov);

// Whole-field moments of M independent identical modes from single-mode moments.
IntensityMoments expand_to_multi_mode(const IntensityMoments& single, double modes);
// Inverse of expand_to_multi_mode; M may be non-integer.
IntensityMoments reduce_to_single_mode(const IntensityMoments& whole, double modes);

// average over all permutations of the beam labels
IntensityMoments symmetrize_beams(const IntensityMoments& m);
// max relative deviation of any moment from its beam-permuted partners
double beam_asymmetry(const IntensityMoments& m);

}  // namespace quinv
