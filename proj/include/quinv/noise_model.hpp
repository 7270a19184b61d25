#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "quinv/detection.hpp"
#include "quinv/distribution.hpp"
#include "quinv/gauss_core.hpp"

// Generative twin-beam model: multi-mode thermal statistics for the paired,
// signal-only and idler-only components, composed into symmetric 3-beam states.

namespace quinv {

struct TwbModelParams {
    double m_p = 10, m_s = 10, m_i = 10;        // mode counts
    double b_p = 9.8e-3, b_s = 3.6e-4, b_i = 3.9e-5;  // mean photons per mode
    double eta_s = 0.55, eta_i = 0.55;          // detection efficiencies
    double d_s = 1e-4, d_i = 1e-4;              // dark counts per window

    void validate() const;
};

// multi-mode thermal (Mandel-Rice) probability of n photons in m modes of mean b each
double mandel_rice(int n, double m, double b);
std::vector<double> mandel_rice_pmf(double m, double b, int n_max);
// smallest n_max whose upper tail is below tail
int mandel_rice_cutoff(double m, double b, double tail = 1e-13);

struct ModelBuildOptions {
    double tail_tol = 1e-12;  // mass allowed beyond the truncation, per axis
    double max_tail = 1e-9;   // audit limit; larger discarded mass is an error
};

// joint (signal, idler) photon distribution with all mode counts scaled by w
JointDistribution twb_joint(const TwbModelParams& p, double w, const ModelBuildOptions& opt = {});

// convolution of a 2-beam distribution with its index-swapped copy
JointDistribution symmetrize(const JointDistribution& p);

struct ModelAudit {
    double discarded_mass = 0;    // cut away by truncation, before renormalizing
    double cyclic_asymmetry = 0;  // max |p(a,b,c) - p(c,a,b)|
    double swap_asymmetry = 0;    // max |p(a,b,c) - p(b,a,c)|
    double analytic_mean = 0;     // per-beam mean carried through the composition
    double mean_error = 0;        // max over beams |marginal mean - analytic_mean|
};

// symmetric 3-beam photon distribution from w_p correlated units and w_n noise windows
JointDistribution build_state_distribution(const TwbModelParams& p, int w_p, int w_n,
                                           const ModelBuildOptions& opt = {}, ModelAudit* audit = nullptr);

// per-beam means of the two parts
double correlated_mean(const TwbModelParams& p, int w_p);
double mean_noise(const TwbModelParams& p, int w_n);

// window-by-window clicks of the two APD channels
PhotocountChannels sample_channels(const TwbModelParams& p, std::size_t n_windows, std::uint64_t seed);
// analytic click probability per window of each channel
double click_probability_signal(const TwbModelParams& p);
double click_probability_idler(const TwbModelParams& p);

// Effective single-mode Gaussian parameters of the model state. The model has
// C = 0 and real pair parameters; only |D|^2 + Dbar^2 is fixed by the intensity
// moments, so the split between D and Dbar (Dbar <= 0) is a policy.
enum class DbarPolicy { minimal_physical, zero };
const char* dbar_policy_name(DbarPolicy p);
DbarPolicy parse_dbar_policy(const std::string& s);

struct GaussianFit {
    GaussianStateParams params;
    double pair_cov = 0;   // <W1 W2> - <W1><W2> of the reduced moments
    bool physical = false;
    std::string note;
};
GaussianFit fit_gaussian_params(const TwbModelParams& p, int w_p, int w_n, double modes,
                                DbarPolicy policy = DbarPolicy::minimal_physical);
GaussianStateParams gaussian_params_of_model(const TwbModelParams& p, int w_p, int w_n, double modes,
                                             DbarPolicy policy = DbarPolicy::minimal_physical);

struct SweepConfig {
    int w_p = 2;
    std::vector<int> w_n_list;  // even values

    static SweepConfig standard();  // w_p = 2, w_n = 0, 2, ..., 58
    void validate() const;
};

}  // namespace quinv
