#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "quinv/gauss_core.hpp"
#include "quinv/moments.hpp"

// Symbolic derivation of invariants in terms of intensity moments: expand the
// invariant and every candidate moment product as polynomials in the state
// parameters, match coefficients exactly, and collect what cannot be matched.

namespace quinv {

using Rational = boost::multiprecision::cpp_rational;

// Real parameter symbols of the public polynomial basis.
enum class SymKind : std::uint8_t { B, ReC, ImC, ReD, ImD, ReDbar, ImDbar };

struct ParamSymbol {
    SymKind kind;
    int j;  // beam (0-based)
    int k;  // second beam for pair symbols, -1 otherwise
    auto operator<=>(const ParamSymbol&) const = default;
};

std::string symbol_name(const ParamSymbol& s);  // e.g. "ReD12", "B1"

// Polynomial in ParamSymbols with exact rational coefficients. A monomial is
// a sorted list of (symbol, power) pairs.
struct ParamPolynomial {
    using Monomial = std::vector<std::pair<ParamSymbol, int>>;
    std::map<Monomial, Rational> terms;

    bool empty() const { return terms.empty(); }
    double evaluate(const GaussianStateParams& p) const;
    std::string to_string() const;
};

ParamPolynomial expand_qui_symbolic(int n_beams, int k);
ParamPolynomial expand_moment_symbolic(const MomentIndex& idx);

// A product of moments; the empty product is the constant 1.
using MomentProduct = std::vector<MomentIndex>;

struct DerivationResult {
    int n_beams = 0;
    int k = 0;
    std::map<MomentProduct, Rational> coefficients;
    // Delta = sum coefficients * products - residue (residue: the part not
    // reachable from moments, signed so that it adds to the invariant's
    // measurable part with a minus sign)
    ParamPolynomial residue;
    bool solvable = false;
    // diagnostics
    std::size_t equations = 0;
    std::size_t unknowns = 0;
    std::size_t contradictory_rows = 0;
    double seconds = 0.0;
};

DerivationResult derive(int n_beams, int k);

// evaluate the moment combination (the measurable part) on a moment set
double evaluate_combination(const DerivationResult& r, const IntensityMoments& m);

// machine-readable table with stable ordering and an FNV-1a hash over its content
nlohmann::json emit_term_table(const DerivationResult& r);
// inverse of emit_term_table (coefficients and residue)
DerivationResult load_term_table(const nlohmann::json& j);

// hand-coded closed form as an explicit product map, for coefficient comparison
std::map<MomentProduct, Rational> builtin_combination(int n_beams, int k);

}  // namespace quinv
