#pragma once

#include <array>
#include <string>
#include <vector>

#include "quinv/gauss_core.hpp"
#include "quinv/moments.hpp"
#include "quinv/noise_model.hpp"
#include "quinv/qui_formulas.hpp"

namespace quinv {

enum class Verdict { entangled, separable_necessary_condition_met, undecided };
const char* verdict_name(Verdict v);

struct PptOptions {
    double tol = 1e-9;
    FormulaOptions formula;
};

// Separability test for beam-symmetric 3-beam states built from intensity
// moments: lhs >= rhs is necessary for separability, and rhs is only known to
// lie in [rhs_lower, rhs_upper] because of the unmeasurable residues.
struct PptVerdict {
    double lhs = 0;
    double rhs_lower = 0;
    double rhs_upper = 0;
    Verdict verdict = Verdict::undecided;
    // ingredients
    double delta33 = 0, delta32_measurable = 0, delta31_measurable = 0, pair_cov = 0;
    double r31_lower = 0, r31_upper = 0, r32_lower = 0, r32_upper = 0;
    std::vector<std::string> warnings;
};

PptVerdict ppt_from_moments(const IntensityMoments& m, const PptOptions& opt = {});

// Direct test on the covariance matrix, partial transposition on beam 1.
struct PptOracle {
    bool npt = false;               // min symplectic eigenvalue of the transposed matrix < 1
    double min_nu_transposed = 0;
    std::array<double, 3> delta{};        // invariants of the state
    std::array<double, 3> delta_tilde{};  // invariants of the transposed matrix
    // max |delta_tilde - predicted| for the residue relations; only meaningful
    // for beam-symmetric states
    double relation_dev = 0;
};

PptOracle ppt_oracle(const CovarianceMatrix& cm, double tol = 1e-9);
// predicted transposed invariants from the state's parameters
std::array<double, 3> predicted_tilde(const GaussianStateParams& p);

enum class SweepRoute { params, distribution };
const char* sweep_route_name(SweepRoute r);
SweepRoute parse_sweep_route(const std::string& s);

struct SweepOptions {
    SweepRoute route = SweepRoute::params;
    DbarPolicy policy = DbarPolicy::minimal_physical;
    PptOptions ppt;
    int jobs = 1;
};

struct SweepPoint {
    int w_n = 0;
    double mean_noise = 0;
    double delta11 = 0, delta22 = 0, delta33 = 0;
    QuiFromMomentsResult delta21, delta31, delta32;
    // residues evaluated on the fitted parameters
    double r21_true = 0, r31_true = 0, r32_true = 0;
    double ratio31 = 0, ratio32 = 0;  // max |residue bound| / measurable part
    double purity = 0;
    std::vector<double> nu;
    PptVerdict ppt;
    PptOracle oracle;
    GaussianFit fit;
};

std::vector<SweepPoint> noise_sweep_report(const SweepConfig& cfg, const TwbModelParams& model, double modes,
                                           const SweepOptions& opt = {});

}  // namespace quinv
