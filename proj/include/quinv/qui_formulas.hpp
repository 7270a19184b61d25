#pragma once

#include <string>
#include <utility>
#include <vector>

#include "quinv/gauss_core.hpp"
#include "quinv/moments.hpp"

namespace quinv {

// One term of a closed form: coefficient num/den times a product of moments.
// Each factor is written with beam letters, e.g. "aab" = <W_a^2 W_b>.
struct TermSpec {
    long num = 0;
    long den = 1;
    std::vector<std::string> factors;
};

// Terms sharing a letter arity; evaluation sums every term over all ordered
// tuples of distinct beams bound to the letters a, b, c.
struct TermFamily {
    int arity = 1;
    std::vector<TermSpec> terms;
};

struct FormulaTable {
    std::string name;
    double constant = 0.0;
    std::vector<TermFamily> families;
};

// Delta^N_N for N = 1, 2, 3 (the single table restricts itself to the beams given).
const FormulaTable& top_invariant_table();
// measurable parts of Delta^N_1 (constant is N) and Delta^3_2
const FormulaTable& delta_n1_measurable_table();
const FormulaTable& delta32_measurable_table();

// beams are 0-based labels into m; constant is scaled per table rules
double evaluate_table(const FormulaTable& t, const IntensityMoments& m, const std::vector<int>& beams);

struct FormulaOptions {
    bool strict = false;
    double asymmetry_threshold = 0.01;
};

struct QuiFromMomentsResult {
    int k = 0;
    int n_beams = 0;
    double measurable_part = 0.0;
    double residue_lower = 0.0;
    double residue_upper = 0.0;
    bool exact = false;
    std::vector<std::string> warnings;

    // Delta = measurable_part - residue; for exact results this is the value
    double value_lower() const { return measurable_part - residue_upper; }
    double value_upper() const { return measurable_part - residue_lower; }
};

double delta11_from_moments(const IntensityMoments& m, int beam = 0);
double delta22_from_moments(const IntensityMoments& m, int j = 0, int k = 1);
double delta33_from_moments(const IntensityMoments& m);

QuiFromMomentsResult delta21_from_moments(const IntensityMoments& m, int j = 0, int k = 1);
QuiFromMomentsResult delta31_from_moments(const IntensityMoments& m, const FormulaOptions& opt = {});
QuiFromMomentsResult delta32_from_moments(const IntensityMoments& m, const FormulaOptions& opt = {});

// bounds on the Delta^3_2 residue for beam-symmetric moments
struct ResidueBounds {
    double lower = 0.0;
    double upper = 0.0;
    std::vector<std::string> warnings;
};
ResidueBounds residue_bounds_symmetric(const IntensityMoments& m, const FormulaOptions& opt = {});

// Residues as functions of the state parameters, sign convention
// Delta = measurable_part - residue.
double residue21_from_params(const GaussianStateParams& p, int j = 0, int k = 1);
double residue31_from_params(const GaussianStateParams& p);
double residue32_from_params(const GaussianStateParams& p);

// <W_j W_k> - <W_j><W_k>, equal to |D_jk|^2 + |Dbar_jk|^2 for Gaussian states
double pair_covariance(const IntensityMoments& m, int j, int k);

}  // namespace quinv
