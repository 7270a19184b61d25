#include "quinv/qui_formulas.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "quinv/errors.hpp"

namespace quinv {
namespace {

// The constant of a table is multiplied by the number of beams (arity 1),
// beam pairs (arity 2) or used as is (arity 0).
struct Constant {
    double value;
    int arity;
};

const std::vector<TermSpec> kTopSingle = {
    {4, 1, {"a"}},
    {-4, 1, {"aa"}},
    {12, 1, {"a", "a"}},
};

const std::vector<TermSpec> kTopPair = {
    {-4, 1, {"ab"}},
    {-4, 1, {"aabb"}},
    {8, 1, {"abb"}},
    {24, 1, {"ab", "ab"}},
    {12, 1, {"a", "b"}},
    {12, 1, {"aa", "bb"}},
    {-24, 1, {"aa", "b"}},
    {-96, 1, {"aa", "b", "b"}},
    {96, 1, {"a", "a", "b"}},
    {240, 1, {"a", "a", "b", "b"}},
    {-48, 1, {"a", "ab"}},
    {48, 1, {"a", "abb"}},
    {-192, 1, {"a", "ab", "b"}},
};

const std::vector<TermSpec> kTopTriple = {
    {8, 3, {"abc"}},
    {-8, 3, {"aabbcc"}},
    {-8, 1, {"abcc"}},
    {8, 1, {"abbcc"}},
    {-24, 1, {"ac", "b"}},
    {-24, 1, {"aacc", "b"}},
    {24, 1, {"aa", "bc"}},
    {24, 1, {"aacc", "bb"}},
    {32, 1, {"abc", "abc"}},
    {32, 1, {"a", "b", "c"}},
    {-32, 1, {"aa", "bb", "cc"}},
    {48, 1, {"a", "abc"}},
    {48, 1, {"a", "abbcc"}},
    {48, 1, {"acc", "b"}},
    {-48, 1, {"aa", "bcc"}},
    {48, 1, {"ab", "ac"}},
    {48, 1, {"abb", "acc"}},
    {-96, 1, {"ac", "b", "b"}},
    {-96, 1, {"ab", "abc"}},
    {-96, 1, {"a", "abcc"}},
    {96, 1, {"ab", "abcc"}},
    {-96, 1, {"aacc", "b", "b"}},
    {-96, 1, {"abb", "ac"}},
    {192, 1, {"ac", "ac", "b"}},
    {192, 1, {"acc", "b", "b"}},
    {-192, 1, {"aa", "bc", "bc"}},
    {960, 1, {"ac", "ac", "b", "b"}},
    {-96, 1, {"aa", "b", "c"}},
    {96, 1, {"aa", "bb", "c"}},
    {384, 1, {"a", "acc", "b"}},
    {384, 1, {"a", "abc", "b"}},
    {-384, 1, {"a", "abcc", "b"}},
    {-384, 1, {"a", "ac", "b"}},
    {384, 1, {"aa", "b", "bc"}},
    {-384, 1, {"aa", "b", "bcc"}},
    {480, 1, {"a", "a", "b", "c"}},
    {480, 1, {"a", "a", "bb", "cc"}},
    {768, 1, {"ab", "ac", "b"}},
    {-768, 1, {"abc", "ac", "b"}},
    {-768, 1, {"ab", "acc", "b"}},
    {-256, 1, {"ab", "ac", "bc"}},
    {-960, 1, {"a", "b", "b", "cc"}},
    {-1920, 1, {"a", "ac", "b", "b"}},
    {1920, 1, {"a", "acc", "b", "b"}},
    {2880, 1, {"a", "a", "b", "c", "c"}},
    {6720, 1, {"a", "a", "b", "b", "c", "c"}},
    {-2880, 1, {"a", "a", "b", "b", "cc"}},
    {1280, 1, {"a", "abc", "b", "c"}},
    {-1920, 1, {"a", "ab", "b", "c"}},
    {1920, 1, {"aa", "b", "bc", "c"}},
    {3840, 1, {"a", "ac", "b", "bc"}},
    {-11520, 1, {"a", "ac", "b", "b", "c"}},
};

const std::vector<TermSpec> kN1Single = {
    {4, 1, {"a"}},
    {12, 1, {"a", "a"}},
    {-4, 1, {"aa"}},
};

const std::vector<TermSpec> k32Single = {
    {8, 1, {"a"}},
    {-8, 1, {"aa"}},
    {24, 1, {"a", "a"}},
};

const std::vector<TermSpec> k32Pair = {
    {-4, 1, {"aabb"}},
    {8, 1, {"abb"}},
    {24, 1, {"ab", "ab"}},
    {8, 1, {"a", "b"}},
    {12, 1, {"aa", "bb"}},
    {-24, 1, {"aa", "b"}},
    {-48, 1, {"a", "ab"}},
    {48, 1, {"a", "abb"}},
    {96, 1, {"a", "a", "b"}},
    {-96, 1, {"aa", "b", "b"}},
    {240, 1, {"a", "a", "b", "b"}},
    {-192, 1, {"a", "ab", "b"}},
};

Constant table_constant(const FormulaTable& t) {
    if (t.name == "delta_n1_measurable") return {1.0, 1};
    if (t.name == "delta32_measurable") return {1.0, 2};
    return {t.constant, 0};
}

// moment whose beam letters are bound by `bind` (letter index -> 0-based beam)
double factor_value(const IntensityMoments& m, const std::string& f, const std::array<int, 3>& bind) {
    MomentIndex idx(m.n_beams, 0);
    for (char ch : f) ++idx.at(bind[ch - 'a']);
    return m.at(idx);
}

void ordered_tuples(const std::vector<int>& beams, int arity, std::vector<std::array<int, 3>>& out) {
    const int n = static_cast<int>(beams.size());
    for (int a = 0; a < n; ++a) {
        if (arity == 1) {
            out.push_back({beams[a], -1, -1});
            continue;
        }
        for (int b = 0; b < n; ++b) {
            if (b == a) continue;
            if (arity == 2) {
                out.push_back({beams[a], beams[b], -1});
                continue;
            }
            for (int c = 0; c < n; ++c)
                if (c != a && c != b) out.push_back({beams[a], beams[b], beams[c]});
        }
    }
}

}  // namespace

const FormulaTable& top_invariant_table() {
    static const FormulaTable t{"top_invariant", 1.0, {{1, kTopSingle}, {2, kTopPair}, {3, kTopTriple}}};
    return t;
}

const FormulaTable& delta_n1_measurable_table() {
    static const FormulaTable t{"delta_n1_measurable", 1.0, {{1, kN1Single}}};
    return t;
}

const FormulaTable& delta32_measurable_table() {
    static const FormulaTable t{"delta32_measurable", 1.0, {{1, k32Single}, {2, k32Pair}}};
    return t;
}

double evaluate_table(const FormulaTable& t, const IntensityMoments& m, const std::vector<int>& beams) {
    for (int b : beams)
        if (b < 0 || b >= m.n_beams) throw ValidationError("beam outside the moment set");
    const auto c = table_constant(t);
    const double nb = static_cast<double>(beams.size());
    double s = c.value * (c.arity == 0 ? 1.0 : c.arity == 1 ? nb : nb * (nb - 1) / 2);
    for (const auto& fam : t.families) {
        std::vector<std::array<int, 3>> tuples;
        ordered_tuples(beams, fam.arity, tuples);
        for (const auto& term : fam.terms) {
            const double coef = static_cast<double>(term.num) / static_cast<double>(term.den);
            double acc = 0.0;
            for (const auto& bind : tuples) {
                double v = 1.0;
                for (const auto& f : term.factors) v *= factor_value(m, f, bind);
                acc += v;
            }
            s += coef * acc;
        }
    }
    return s;
}

double pair_covariance(const IntensityMoments& m, int j, int k) {
    return m.W({j + 1, k + 1}) - m.W({j + 1}) * m.W({k + 1});
}

double delta11_from_moments(const IntensityMoments& m, int beam) {
    return evaluate_table(top_invariant_table(), m, {beam});
}

double delta22_from_moments(const IntensityMoments& m, int j, int k) {
    return evaluate_table(top_invariant_table(), m, {j, k});
}

double delta33_from_moments(const IntensityMoments& m) {
    if (m.n_beams < 3) throw ValidationError("Delta^3_3 needs three beams");
    return evaluate_table(top_invariant_table(), m, {0, 1, 2});
}

QuiFromMomentsResult delta21_from_moments(const IntensityMoments& m, int j, int k) {
    QuiFromMomentsResult r;
    r.k = 1;
    r.n_beams = 2;
    r.measurable_part = evaluate_table(delta_n1_measurable_table(), m, {j, k});
    const double cov = pair_covariance(m, j, k);
    const double d22 = delta22_from_moments(m, j, k);
    r.residue_upper = 8 * cov;
    // Delta^2_2 - Delta^2_1 + 1 >= 0 for physical states
    r.residue_lower = std::max(r.measurable_part - d22 - 1.0, -r.residue_upper);
    if (r.residue_lower > r.residue_upper) {
        r.warnings.push_back("residue bounds crossed; moments inconsistent with a physical state");
        r.residue_lower = r.residue_upper;
    }
    return r;
}

namespace {

IntensityMoments symmetric_view(const IntensityMoments& m, const FormulaOptions& opt,
                                std::vector<std::string>& warnings) {
    const double asym = beam_asymmetry(m);
    if (asym > opt.asymmetry_threshold) {
        const std::string msg = "moments deviate from beam symmetry by " + std::to_string(100 * asym) +
                                "% (threshold " + std::to_string(100 * opt.asymmetry_threshold) + "%)";
        if (opt.strict) throw ValidationError(msg);
        warnings.push_back(msg + "; bounds use beam-averaged moments");
    }
    return symmetrize_beams(m);
}

// term-by-term triangle bound on |residue of Delta^3_2| for symmetric moments
double upper_bound_32(const IntensityMoments& s) {
    auto W = [&](std::initializer_list<int> b) { return s.W(b); };
    const double w1 = W({1});
    const double c = std::max(0.0, W({1, 2}) - w1 * W({2}));
    const double t1 = w1 * w1 * w1 + 3 * w1 * W({1, 2}) - W({1, 2, 3}) - 3 * w1 * w1 * W({2});
    const double big = 4 * W({1, 1, 2, 3}) - 8 * W({1, 2}) * W({1, 3}) - W({1, 1, 3}) * W({2}) -
                       2 * W({1, 1}) * W({2, 3}) - W({1, 1, 2}) * W({3}) + 2 * W({1, 1}) * W({2}) * W({3}) +
                       4 * w1 *
                           (2 * w1 * w1 * w1 + 6 * w1 * W({1, 2}) - 2 * W({1, 2, 3}) + W({1, 3}) * W({2}) -
                            6 * w1 * w1 * W({2}) + W({1, 2}) * W({3}));
    const double last = -W({1, 1, 2}) + 4 * w1 * W({1, 2}) - 4 * w1 * w1 * W({2}) + W({1, 1}) * W({2});
    return 48 * c + 96 * std::abs(w1 + 3 * w1 * w1 - W({1, 1})) * c + 96 * c * c + 96 * w1 * std::abs(t1) +
           48 * std::abs(t1) + 48 * std::abs(big) + 48 * std::sqrt(c) * std::abs(last);
}

struct PairBounds {
    double lower = 0.0, upper = 0.0;
};

PairBounds n1_pair_bounds(const IntensityMoments& m, std::vector<std::string>& warnings) {
    PairBounds pb;
    for (int j = 0; j < m.n_beams; ++j)
        for (int k = j + 1; k < m.n_beams; ++k) {
            auto r = delta21_from_moments(m, j, k);
            pb.lower += r.residue_lower;
            pb.upper += r.residue_upper;
            warnings.insert(warnings.end(), r.warnings.begin(), r.warnings.end());
        }
    return pb;
}

}  // namespace

ResidueBounds residue_bounds_symmetric(const IntensityMoments& m, const FormulaOptions& opt) {
    if (m.n_beams != 3) throw ValidationError("residue bounds need three-beam moments");
    ResidueBounds rb;
    const auto s = symmetric_view(m, opt, rb.warnings);
    rb.upper = upper_bound_32(s);
    // Delta33 - Delta32 + Delta31 - 1 >= 0, with the Delta31 residue bounded below pairwise
    const auto pb = n1_pair_bounds(s, rb.warnings);
    const double rs = -delta33_from_moments(s) + evaluate_table(delta32_measurable_table(), s, {0, 1, 2}) -
                      evaluate_table(delta_n1_measurable_table(), s, {0, 1, 2}) + 1.0 + pb.lower;
    rb.lower = std::max(-rb.upper, rs);
    if (rb.lower > rb.upper) {
        rb.warnings.push_back("residue bounds crossed; moments inconsistent with a physical state");
        rb.lower = rb.upper;
    }
    return rb;
}

QuiFromMomentsResult delta31_from_moments(const IntensityMoments& m, const FormulaOptions& opt) {
    if (m.n_beams != 3) throw ValidationError("Delta^3_1 needs three-beam moments");
    QuiFromMomentsResult r;
    r.k = 1;
    r.n_beams = 3;
    r.measurable_part = evaluate_table(delta_n1_measurable_table(), m, {0, 1, 2});
    const auto pb = n1_pair_bounds(m, r.warnings);
    r.residue_lower = pb.lower;
    r.residue_upper = pb.upper;
    // symmetric inputs: Delta33 - Delta32 + Delta31 - 1 >= 0 also caps the residue from above
    if (beam_asymmetry(m) <= opt.asymmetry_threshold) {
        const auto rb = residue_bounds_symmetric(m, opt);
        const double cap = delta33_from_moments(m) - evaluate_table(delta32_measurable_table(), m, {0, 1, 2}) +
                           r.measurable_part - 1.0 + rb.upper;
        r.residue_upper = std::max(r.residue_lower, std::min(r.residue_upper, cap));
    }
    return r;
}

QuiFromMomentsResult delta32_from_moments(const IntensityMoments& m, const FormulaOptions& opt) {
    if (m.n_beams != 3) throw ValidationError("Delta^3_2 needs three-beam moments");
    QuiFromMomentsResult r;
    r.k = 2;
    r.n_beams = 3;
    r.measurable_part = evaluate_table(delta32_measurable_table(), m, {0, 1, 2});
    const auto rb = residue_bounds_symmetric(m, opt);
    r.residue_lower = rb.lower;
    r.residue_upper = rb.upper;
    r.warnings = rb.warnings;
    return r;
}

double residue21_from_params(const GaussianStateParams& p, int j, int k) {
    return 8 * (std::norm(p.D(j, k)) - std::norm(p.Dbar(j, k)));
}

double residue31_from_params(const GaussianStateParams& p) {
    double s = 0.0;
    for (int j = 0; j < p.n_beams; ++j)
        for (int k = j + 1; k < p.n_beams; ++k) s += residue21_from_params(p, j, k);
    return s;
}

double residue32_from_params(const GaussianStateParams& p) {
    if (p.n_beams != 3) throw ValidationError("Delta^3_2 residue needs three beams");
    auto D = [&](int j, int k) { return p.D(j, k); };
    auto Db = [&](int j, int k) { return p.Dbar(j, k); };
    auto x = [&](int j, int k) { return std::norm(D(j, k)) - std::norm(Db(j, k)); };
    double s = 0.0;
    std::array<int, 3> perm{0, 1, 2};
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            if (a != b) s += 8 * std::norm(D(a, b));
    do {
        const int a = perm[0], b = perm[1], c = perm[2];
        const double Ba = p.b[a], Bb = p.b[b], Bc = p.b[c];
        const cplx Ca = p.c[a], Cb = p.c[b];
        s += 16 * (Ba + Ba * Ba - std::norm(Ca)) * x(b, c);
        s += 16 * (D(a, b) * std::conj(D(a, c)) * Db(b, c)).real();
        s += 32 * (Ba + Bb - Bc) * (Db(a, b) * std::conj(D(b, c)) * D(a, c)).real();
        s -= 16 * (2 * Ba + 1) * (Db(a, b) * std::conj(Db(a, c)) * Db(b, c)).real();
        s -= 16 * x(a, b) * x(a, c);
        s += 32 * ((Ca * std::conj(D(a, b)) * std::conj(D(a, c)) * D(b, c)).real() +
                   (Ca * Db(a, b) * Db(a, c) * std::conj(D(b, c))).real());
        s -= 64 * (Cb * Db(a, c) * std::conj(Db(a, b)) * std::conj(D(b, c))).real();
    } while (std::next_permutation(perm.begin(), perm.end()));
    return s;
}

}  // namespace quinv
