#include "quinv/entanglement.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "quinv/errors.hpp"

namespace quinv {

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::entangled: return "entangled";
        case Verdict::separable_necessary_condition_met: return "separable_necessary_condition_met";
        default: return "undecided";
    }
}

PptVerdict ppt_from_moments(const IntensityMoments& m, const PptOptions& opt) {
    if (m.n_beams != 3) throw ValidationError("separability test needs three-beam moments");
    PptVerdict v;
    IntensityMoments s = m;
    const double asym = beam_asymmetry(m);
    if (asym > opt.formula.asymmetry_threshold) {
        if (opt.formula.strict)
            throw ValidationError("moments are not beam-symmetric (relative asymmetry " + std::to_string(asym) + ")");
        v.warnings.push_back("moments not beam-symmetric (relative asymmetry " + std::to_string(asym) +
                             "); using the beam-symmetrized set");
        s = symmetrize_beams(m);
    }
    const auto d31 = delta31_from_moments(s, opt.formula);
    const auto d32 = delta32_from_moments(s, opt.formula);
    v.delta33 = delta33_from_moments(s);
    v.delta31_measurable = d31.measurable_part;
    v.delta32_measurable = d32.measurable_part;
    v.pair_cov = pair_covariance(s, 0, 1);
    v.r31_lower = d31.residue_lower;
    v.r31_upper = d31.residue_upper;
    v.r32_lower = d32.residue_lower;
    v.r32_upper = d32.residue_upper;
    for (const auto* w : {&d31.warnings, &d32.warnings}) v.warnings.insert(v.warnings.end(), w->begin(), w->end());

    // transposed invariants: tilde31 = D31 + 4/3 r31, tilde32 = D32 + 4/3 r32 - 32 cov, tilde33 = D33;
    // separability needs tilde33 - tilde32 + tilde31 - 1 >= 0, i.e. lhs >= (r32 - r31) / 3
    v.lhs = v.delta33 - v.delta32_measurable + v.delta31_measurable - 1 + 32 * v.pair_cov;
    v.rhs_lower = (v.r32_lower - v.r31_upper) / 3;
    v.rhs_upper = (v.r32_upper - v.r31_lower) / 3;
    if (v.lhs < v.rhs_lower - opt.tol) v.verdict = Verdict::entangled;
    else if (v.lhs >= v.rhs_upper + opt.tol) v.verdict = Verdict::separable_necessary_condition_met;
    else v.verdict = Verdict::undecided;
    return v;
}

std::array<double, 3> predicted_tilde(const GaussianStateParams& p) {
    const auto q = all_quis(build_covariance(p));
    double cov = 0;
    for (int j = 0; j < 3; ++j)
        for (int k = j + 1; k < 3; ++k) cov += (std::norm(p.D(j, k)) + std::norm(p.Dbar(j, k))) / 3;
    return {q[0] + 4.0 / 3 * residue31_from_params(p), q[1] + 4.0 / 3 * residue32_from_params(p) - 32 * cov, q[2]};
}

PptOracle ppt_oracle(const CovarianceMatrix& cm, double tol) {
    if (cm.n_beams != 3) throw ValidationError("PPT oracle expects three beams");
    PptOracle o;
    const auto pt = partial_transpose(cm, 0);
    const auto q = all_quis(cm);
    const auto qt = all_quis(pt);
    for (int k = 0; k < 3; ++k) {
        o.delta[k] = q[k];
        o.delta_tilde[k] = qt[k];
    }
    const auto nu = symplectic_eigenvalues(pt).nu;
    o.min_nu_transposed = *std::min_element(nu.begin(), nu.end());
    o.npt = o.min_nu_transposed < 1 - tol;
    const auto pred = predicted_tilde(params_from_covariance(cm));
    for (int k = 0; k < 3; ++k) o.relation_dev = std::max(o.relation_dev, std::abs(pred[k] - qt[k]));
    return o;
}

const char* sweep_route_name(SweepRoute r) { return r == SweepRoute::params ? "params" : "distribution"; }

SweepRoute parse_sweep_route(const std::string& s) {
    if (s == "params") return SweepRoute::params;
    if (s == "distribution") return SweepRoute::distribution;
    throw ValidationError("unknown sweep route '" + s + "'");
}

namespace {

SweepPoint sweep_point(int w_p, int w_n, const TwbModelParams& model, double modes, const SweepOptions& opt) {
    SweepPoint pt;
    pt.w_n = w_n;
    pt.mean_noise = mean_noise(model, w_n);
    pt.fit = fit_gaussian_params(model, w_p, w_n, modes, opt.policy);
    const auto& g = pt.fit.params;

    IntensityMoments m;
    if (opt.route == SweepRoute::params) {
        m = moments_from_params(g, 6);
    } else {
        const auto dist = build_state_distribution(model, w_p, w_n);
        m = reduce_to_single_mode(intensity_moments_from_distribution(dist, 6), modes);
    }
    pt.delta11 = delta11_from_moments(m);
    pt.delta22 = delta22_from_moments(m);
    pt.delta33 = delta33_from_moments(m);
    pt.delta21 = delta21_from_moments(m);
    pt.delta31 = delta31_from_moments(m, opt.ppt.formula);
    pt.delta32 = delta32_from_moments(m, opt.ppt.formula);
    pt.r21_true = residue21_from_params(g);
    pt.r31_true = residue31_from_params(g);
    pt.r32_true = residue32_from_params(g);
    auto ratio = [](const QuiFromMomentsResult& r) {
        return std::max(std::abs(r.residue_lower), std::abs(r.residue_upper)) / r.measurable_part;
    };
    pt.ratio31 = ratio(pt.delta31);
    pt.ratio32 = ratio(pt.delta32);
    pt.purity = purity_standard(pt.delta33);
    const auto cm = build_covariance(g);
    pt.nu = symplectic_eigenvalues(cm).nu;
    pt.ppt = ppt_from_moments(m, opt.ppt);
    pt.oracle = ppt_oracle(cm, opt.ppt.tol);
    return pt;
}

}  // namespace

std::vector<SweepPoint> noise_sweep_report(const SweepConfig& cfg, const TwbModelParams& model, double modes,
                                           const SweepOptions& opt) {
    cfg.validate();
    model.validate();
    if (!(modes > 0)) throw ValidationError("mode number M must be > 0");
    std::vector<SweepPoint> out(cfg.w_n_list.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;
    auto worker = [&] {
        for (std::size_t i; (i = next++) < out.size();) {
            try {
                out[i] = sweep_point(cfg.w_p, cfg.w_n_list[i], model, modes, opt);
            } catch (...) {
                std::lock_guard<std::mutex> g(failure_lock);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const int jobs = std::clamp(opt.jobs, 1, static_cast<int>(out.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace quinv
