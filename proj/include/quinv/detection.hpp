#pragma once

#include <cstdint>
#include <vector>

#include "quinv/distribution.hpp"

namespace quinv {

// Synchronized signal/idler click records, one entry per detection window.
struct PhotocountChannels {
    std::vector<std::uint8_t> signal;
    std::vector<std::uint8_t> idler;

    std::size_t size() const { return signal.size(); }
    void validate() const;
};

enum class DetectorKind {
    click_array,  // N_d pixels, each either fires or not; dark counts per pixel
    ideal_pnr     // binomial thinning with efficiency eta, no dark counts
};

struct DetectorModel {
    DetectorKind kind = DetectorKind::click_array;
    int n_pixels = 1;        // N_d; for ideal_pnr the largest count reported
    double efficiency = 1.0; // eta
    double dark_total = 0.0; // d, mean dark counts per measurement

    double dark_per_pixel() const { return dark_total / n_pixels; }
    int max_count() const { return n_pixels; }
    void validate() const;

    // How many pixels the per-beam effective detector gets for a compound
    // beam of w_p correlated units and w_n noise windows.
    enum class PixelRule {
        stated,   // 2 w_p + w_n
        windows   // 4 w_p + w_n, the number of windows summed into each beam
    };
    static DetectorModel effective(int w_p, int w_n, double eta_s, double eta_i, double d_s, double d_i,
                                   PixelRule rule = PixelRule::stated);
};

// probability of c counts given n incident photons
double detection_matrix(const DetectorModel& det, int c, int n);

// (max_count+1) x (n_max+1), row-major [c][n]
struct DetectionTable {
    int counts = 0;
    int photons = 0;
    std::vector<double> t;
    double operator()(int c, int n) const { return t[static_cast<std::size_t>(c) * photons + n]; }
};
DetectionTable detection_table(const DetectorModel& det, int n_max);
// Positive-term reference: photons occupy distinct pixels (Markov chain on the
// number of lit pixels), then the remaining pixels fire with the dark probability.
DetectionTable detection_table_occupancy(const DetectorModel& det, int n_max);

// Sum photocounts of compound beams built from the two channels.
struct CompoundOptions {
    bool overlapping = false;  // advance the start window by 1 instead of a full block
    int min_stride = 1000;
};
JointDistribution build_compound_realizations(const PhotocountChannels& ch, int w_p, int w_n,
                                              int noise_offset_stride, const CompoundOptions& opt = {});
// number of realizations the call above would produce
std::size_t compound_realization_count(std::size_t n_windows, int w_p, int w_n, int noise_offset_stride,
                                       const CompoundOptions& opt = {});

JointDistribution forward_map(const JointDistribution& p, const std::vector<DetectorModel>& dets);
JointDistribution forward_map(const JointDistribution& p, const std::vector<DetectionTable>& tables);

enum class EmInit { uniform, given };

struct EmOptions {
    int max_iters = 100000;
    double tol = 1e-10;  // relative log-likelihood change
    EmInit init = EmInit::uniform;
    const JointDistribution* start = nullptr;  // used when init == given
    bool record_history = true;
    double monotone_slack = 1e-13;  // relative decrease tolerated as rounding
};

struct EmResult {
    JointDistribution p;
    int iterations = 0;
    bool converged = false;
    double log_likelihood = 0.0;
    double kl = 0.0;  // KL(f || forward(p))
    std::vector<double> ll_history;
    int monotonicity_violations = 0;
    double max_norm_drift = 0.0;  // max |sum p - 1| over iterations
};

// photon_shape: truncation of the reconstructed distribution per axis
EmResult reconstruct_em(const JointDistribution& f, const std::vector<DetectorModel>& dets,
                        const std::vector<int>& photon_shape, const EmOptions& opt = {});

double log_likelihood(const JointDistribution& f, const JointDistribution& model);
double kl_divergence(const JointDistribution& f, const JointDistribution& model);

}  // namespace quinv
