// quinv: command-line front end for the invariant pipeline.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>

#include "quinv/detection.hpp"
#include "quinv/entanglement.hpp"
#include "quinv/errors.hpp"
#include "quinv/io.hpp"
#include "quinv/kernels.hpp"
#include "quinv/noise_model.hpp"
#include "quinv/qui_derive.hpp"
#include "quinv/qui_formulas.hpp"
#include "quinv/random_states.hpp"

using namespace quinv;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { ok = 0, validation = 2, convergence = 3, io_failure = 4 };

struct Settings {
    // global
    std::uint64_t seed = 1;
    int jobs = 1;
    std::string out_dir = ".";
    bool strict = false;
    std::string config_path;
    // model and sweep
    TwbModelParams model;
    int w_p = 2;
    std::vector<int> w_n = SweepConfig::standard().w_n_list;
    double modes = 6.7;
    std::string route = "params";
    std::string policy = "minimal_physical";
    double tol = 1e-9;
    double asymmetry = 0.01;
    // simulate
    long long windows = 0;
    int stride = 1000;
    bool overlapping = false;
    std::string format = "csv";
    // reconstruct
    std::string histogram;
    int pixels = 0;
    double eta = 0.55;
    double dark = 0.0;
    bool effective = false;
    std::string pixel_rule = "stated";
    int truncation = 20;
    int max_iters = 100000;
    double em_tol = 1e-10;
    // inputs
    std::string moments_in, distribution_in, params_in;
    int max_order = 6;
    bool reduce = false;
    // derive
    int n = 3, k = 3;
    int checks = 100;

    json to_json() const {
        return {{"seed", seed},
                {"jobs", jobs},
                {"strict", strict},
                {"model", io::model_to_json(model)},
                {"w_p", w_p},
                {"w_n", w_n},
                {"modes", modes},
                {"route", route},
                {"policy", policy},
                {"tol", tol},
                {"asymmetry", asymmetry},
                {"windows", windows},
                {"stride", stride},
                {"overlapping", overlapping},
                {"format", format},
                {"histogram", histogram},
                {"pixels", pixels},
                {"eta", eta},
                {"dark", dark},
                {"effective", effective},
                {"pixel_rule", pixel_rule},
                {"truncation", truncation},
                {"max_iters", max_iters},
                {"em_tol", em_tol},
                {"moments", moments_in},
                {"distribution", distribution_in},
                {"params", params_in},
                {"max_order", max_order},
                {"reduce", reduce},
                {"n", n},
                {"k", k},
                {"checks", checks}};
    }

    FormulaOptions formula() const { return {strict, asymmetry}; }
};

// Options registered with CLI11 fall back to the --config file when absent
// from the command line.
struct Binder {
    std::vector<std::function<void(const json&)>> fallbacks;

    template <class T>
    CLI::Option* add(CLI::App* app, const std::string& flag, T& var, const std::string& key, const std::string& help) {
        auto* opt = app->add_option(flag, var, help)->capture_default_str();
        fallbacks.push_back([opt, &var, key](const json& cfg) {
            if (opt->count() == 0 && cfg.contains(key)) var = cfg.at(key).get<T>();
        });
        return opt;
    }
    CLI::Option* flag(CLI::App* app, const std::string& name, bool& var, const std::string& key,
                      const std::string& help) {
        auto* opt = app->add_flag(name, var, help);
        fallbacks.push_back([opt, &var, key](const json& cfg) {
            if (opt->count() == 0 && cfg.contains(key)) var = cfg.at(key).get<bool>();
        });
        return opt;
    }
    void apply(const json& cfg) {
        try {
            for (auto& f : fallbacks) f(cfg);
        } catch (const json::exception& e) {
            throw ValidationError(std::string("config file: ") + e.what());
        }
    }
};

fs::path out_path(const Settings& s, const std::string& name) { return fs::path(s.out_dir) / name; }

void write_text(const Settings& s, const std::string& name, const std::string& body) {
    io::write_atomic(out_path(s, name), io::with_header(s.to_json(), body));
}

void write_json(const Settings& s, const std::string& name, json payload) {
    const std::string body = payload.dump(2);
    json doc = {{"config", s.to_json()}, {"hash", io::hex64(io::fnv1a64(body))}, {"data", std::move(payload)}};
    io::write_atomic(out_path(s, name), doc.dump(2) + "\n");
}

void write_binary(const Settings& s, const std::string& name, const std::string& bytes) {
    io::write_atomic(out_path(s, name), bytes);
    json side = {{"config", s.to_json()}, {"hash", io::hex64(io::fnv1a64(bytes))}};
    io::write_atomic(out_path(s, name + ".json"), side.dump(2) + "\n");
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

SweepConfig sweep_of(const Settings& s) {
    SweepConfig c;
    c.w_p = s.w_p;
    c.w_n_list = s.w_n;
    c.validate();
    return c;
}

SweepOptions sweep_options(const Settings& s) {
    SweepOptions o;
    o.route = parse_sweep_route(s.route);
    o.policy = parse_dbar_policy(s.policy);
    o.ppt.tol = s.tol;
    o.ppt.formula = s.formula();
    o.jobs = s.jobs;
    return o;
}

// ------------------------------------------------------------------ simulate

int cmd_simulate(const Settings& s) {
    s.model.validate();
    const auto sweep = sweep_of(s);
    PhotocountChannels ch;
    if (s.windows > 0) {
        ch = sample_channels(s.model, static_cast<std::size_t>(s.windows), s.seed);
        if (s.format == "bin") write_binary(s, "channels.bin", io::channels_to_binary(ch));
        else write_text(s, "channels.csv", io::channels_to_csv(ch));
    }
    for (int wn : sweep.w_n_list) {
        ModelAudit audit;
        const auto dist = build_state_distribution(s.model, s.w_p, wn, {}, &audit);
        const std::string tag = "wp" + std::to_string(s.w_p) + "_wn" + std::to_string(wn);
        if (s.format == "bin") write_binary(s, "state_" + tag + ".bin", io::distribution_to_binary(dist));
        else write_text(s, "state_" + tag + ".csv", io::distribution_to_csv(dist));
        std::string line = "w_n=" + std::to_string(wn) + " mean=" + fmt(audit.analytic_mean) +
                           " discarded=" + fmt(audit.discarded_mass);
        if (s.windows > 0) {
            CompoundOptions co;
            co.overlapping = s.overlapping;
            const auto hist = build_compound_realizations(ch, s.w_p, wn, s.stride, co);
            if (s.format == "bin") write_binary(s, "histogram_" + tag + ".bin", io::distribution_to_binary(hist));
            else write_text(s, "histogram_" + tag + ".csv", io::distribution_to_csv(hist));
            line += " realizations=" + std::to_string(compound_realization_count(ch.size(), s.w_p, wn, s.stride, co));
        }
        std::cout << line << "\n";
    }
    return ok;
}

// ------------------------------------------------------------------ reconstruct

int cmd_reconstruct(const Settings& s) {
    if (s.histogram.empty()) throw ValidationError("reconstruct needs --histogram");
    auto f = io::load_distribution(s.histogram);
    f.kind = DistKind::photocount_histogram;
    f.validate(true, 1e-6);
    f.normalize();
    std::vector<DetectorModel> dets;
    for (int a = 0; a < f.n_beams; ++a) {
        DetectorModel d;
        if (s.effective) {
            if (s.w_n.size() != 1) throw ValidationError("--effective needs exactly one --w-n value");
            d = DetectorModel::effective(s.w_p, s.w_n[0], s.model.eta_s, s.model.eta_i, s.model.d_s, s.model.d_i,
                                         s.pixel_rule == "windows" ? DetectorModel::PixelRule::windows
                                                                   : DetectorModel::PixelRule::stated);
        } else {
            d.kind = DetectorKind::click_array;
            d.n_pixels = s.pixels > 0 ? s.pixels : f.shape[a] - 1;
            d.efficiency = s.eta;
            d.dark_total = s.dark;
        }
        if (d.max_count() + 1 < f.shape[a]) {
            // histogram axes wider than the detector range must be empty there
            auto m = f.marginal(a);
            for (int c = d.max_count() + 1; c < f.shape[a]; ++c)
                if (m[c] > 0)
                    throw ValidationError("histogram axis " + std::to_string(a + 1) + " has counts at " +
                                          std::to_string(c) + ", beyond the detector's " +
                                          std::to_string(d.max_count()) +
                                          (s.effective && s.pixel_rule != "windows"
                                               ? " (--pixel-rule windows counts every summed window)"
                                               : ""));
        }
        dets.push_back(d);
    }
    // reshape the histogram to the detector range
    std::vector<int> shape;
    for (const auto& d : dets) shape.push_back(d.max_count() + 1);
    JointDistribution h(shape, DistKind::photocount_histogram);
    {
        std::vector<int> idx(f.n_beams, 0);
        for (std::size_t i = 0; i < f.size(); ++i) {
            bool inside = true;
            for (int a = 0; a < f.n_beams; ++a) inside = inside && idx[a] < shape[a];
            if (inside) h.at(idx) = f.mass[i];
            for (int a = f.n_beams - 1; a >= 0; --a) {
                if (++idx[a] < f.shape[a]) break;
                idx[a] = 0;
            }
        }
    }
    EmOptions opt;
    opt.max_iters = s.max_iters;
    opt.tol = s.em_tol;
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = reconstruct_em(h, dets, std::vector<int>(h.n_beams, s.truncation + 1), opt);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(s, "photon_distribution.csv", io::distribution_to_csv(r.p));
    std::string log = "iteration,log_likelihood\n";
    for (std::size_t i = 0; i < r.ll_history.size(); ++i) log += std::to_string(i) + "," + fmt(r.ll_history[i]) + "\n";
    write_text(s, "em_log.csv", log);
    std::cout << "iterations=" << r.iterations << " converged=" << (r.converged ? "yes" : "no")
              << " log_likelihood=" << fmt(r.log_likelihood) << " kl=" << fmt(r.kl)
              << " monotonicity_violations=" << r.monotonicity_violations << " seconds=" << secs << "\n";
    if (!r.converged)
        throw ConvergenceError("EM stopped after " + std::to_string(r.iterations) +
                               " iterations without meeting the tolerance");
    return ok;
}

// ------------------------------------------------------------------ moments

IntensityMoments load_moments_input(const Settings& s, int order, bool* from_params = nullptr,
                                    GaussianStateParams* params = nullptr) {
    const int given = !s.moments_in.empty() + !s.distribution_in.empty() + !s.params_in.empty();
    if (given != 1) throw ValidationError("give exactly one of --moments, --distribution, --params");
    if (from_params) *from_params = false;
    if (!s.params_in.empty()) {
        json j;
        try {
            j = json::parse(io::read_file(s.params_in));
        } catch (const json::parse_error& e) {
            throw ValidationError(std::string("parameter file: ") + e.what());
        }
        const auto p = io::params_from_json(j);
        if (from_params) *from_params = true;
        if (params) *params = p;
        return moments_from_params(p, order);
    }
    IntensityMoments m;
    if (!s.moments_in.empty()) {
        m = io::moments_from_csv(io::read_file(s.moments_in));
    } else {
        const auto d = io::load_distribution(s.distribution_in);
        m = intensity_moments_from_distribution(d, order);
        m.provenance = Provenance::measured;
    }
    if (s.reduce && m.provenance != Provenance::reduced) m = reduce_to_single_mode(m, s.modes);
    return m;
}

int cmd_moments(const Settings& s) {
    const auto m = load_moments_input(s, s.max_order);
    write_text(s, "moments.csv", io::moments_to_csv(m));
    std::cout << "moments=" << m.values.size() << " n_beams=" << m.n_beams << " provenance="
              << provenance_name(m.provenance) << "\n";
    return ok;
}

// ------------------------------------------------------------------ invariants

json qui_json(const QuiFromMomentsResult& r) {
    return {{"measurable", r.measurable_part}, {"residue_lower", r.residue_lower}, {"residue_upper", r.residue_upper},
            {"value_lower", r.value_lower()},  {"value_upper", r.value_upper()},   {"exact", r.exact},
            {"ratio", std::max(std::abs(r.residue_lower), std::abs(r.residue_upper)) / r.measurable_part},
            {"warnings", r.warnings}};
}

void write_sweep_csvs(const Settings& s, const std::vector<SweepPoint>& pts) {
    auto table = [&](const std::string& name, auto value, auto lower, auto upper) {
        std::string body = "w_n,mean_noise,value,lower,upper\n";
        for (const auto& p : pts)
            body += std::to_string(p.w_n) + "," + fmt(p.mean_noise) + "," + fmt(value(p)) + "," + fmt(lower(p)) +
                    "," + fmt(upper(p)) + "\n";
        write_text(s, name, body);
    };
    auto d11 = [](const SweepPoint& p) { return p.delta11; };
    auto d22 = [](const SweepPoint& p) { return p.delta22; };
    auto d33 = [](const SweepPoint& p) { return p.delta33; };
    table("sweep_delta11.csv", d11, d11, d11);
    table("sweep_delta22.csv", d22, d22, d22);
    table("sweep_delta33.csv", d33, d33, d33);
    table("sweep_delta21.csv", [](const SweepPoint& p) { return p.delta21.measurable_part - p.r21_true; },
          [](const SweepPoint& p) { return p.delta21.value_lower(); },
          [](const SweepPoint& p) { return p.delta21.value_upper(); });
    table("sweep_delta31.csv", [](const SweepPoint& p) { return p.oracle.delta[0]; },
          [](const SweepPoint& p) { return p.delta31.value_lower(); },
          [](const SweepPoint& p) { return p.delta31.value_upper(); });
    table("sweep_delta32.csv", [](const SweepPoint& p) { return p.oracle.delta[1]; },
          [](const SweepPoint& p) { return p.delta32.value_lower(); },
          [](const SweepPoint& p) { return p.delta32.value_upper(); });
    table("sweep_residue31.csv", [](const SweepPoint& p) { return p.r31_true; },
          [](const SweepPoint& p) { return p.delta31.residue_lower; },
          [](const SweepPoint& p) { return p.delta31.residue_upper; });
    table("sweep_residue32.csv", [](const SweepPoint& p) { return p.r32_true; },
          [](const SweepPoint& p) { return p.delta32.residue_lower; },
          [](const SweepPoint& p) { return p.delta32.residue_upper; });
    auto r31 = [](const SweepPoint& p) { return p.ratio31; };
    auto r32 = [](const SweepPoint& p) { return p.ratio32; };
    table("sweep_ratio31.csv", r31, r31, r31);
    table("sweep_ratio32.csv", r32, r32, r32);
}

json sweep_point_json(const SweepPoint& p) {
    return {{"w_n", p.w_n},
            {"mean_noise", p.mean_noise},
            {"delta11", p.delta11},
            {"delta22", p.delta22},
            {"delta33", p.delta33},
            {"delta21", qui_json(p.delta21)},
            {"delta31", qui_json(p.delta31)},
            {"delta32", qui_json(p.delta32)},
            {"residue_true", {{"r21", p.r21_true}, {"r31", p.r31_true}, {"r32", p.r32_true}}},
            {"purity", p.purity},
            {"symplectic_eigenvalues", p.nu},
            {"fit", {{"params", io::params_to_json(p.fit.params)}, {"physical", p.fit.physical}, {"note", p.fit.note}}}};
}

int cmd_invariants(const Settings& s) {
    const bool sweep = s.moments_in.empty() && s.distribution_in.empty() && s.params_in.empty();
    if (sweep) {
        const auto pts = noise_sweep_report(sweep_of(s), s.model, s.modes, sweep_options(s));
        write_sweep_csvs(s, pts);
        json arr = json::array();
        for (const auto& p : pts) arr.push_back(sweep_point_json(p));
        write_json(s, "invariants.json", arr);
        std::cout << "sweep points=" << pts.size() << "\n";
        return ok;
    }
    bool from_params = false;
    GaussianStateParams params;
    const auto m = load_moments_input(s, 6, &from_params, &params);
    const int N = m.n_beams;
    json out = {{"n_beams", N}};
    std::string csv = "quantity,value,lower,upper\n";
    auto row = [&](const std::string& q, double v, double lo, double hi) {
        csv += q + "," + fmt(v) + "," + fmt(lo) + "," + fmt(hi) + "\n";
    };
    for (int j = 0; j < N; ++j) {
        const double v = delta11_from_moments(m, j);
        out["delta11"].push_back(v);
        row("delta11_" + std::to_string(j + 1), v, v, v);
    }
    for (int j = 0; j < N; ++j)
        for (int k = j + 1; k < N; ++k) {
            const std::string tag = std::to_string(j + 1) + std::to_string(k + 1);
            const double d22 = delta22_from_moments(m, j, k);
            const auto d21 = delta21_from_moments(m, j, k);
            out["delta22_" + tag] = d22;
            out["delta21_" + tag] = qui_json(d21);
            row("delta22_" + tag, d22, d22, d22);
            row("delta21_" + tag, d21.measurable_part, d21.value_lower(), d21.value_upper());
        }
    if (N == 3) {
        const double d33 = delta33_from_moments(m);
        const auto d31 = delta31_from_moments(m, s.formula());
        const auto d32 = delta32_from_moments(m, s.formula());
        out["delta33"] = d33;
        out["delta31"] = qui_json(d31);
        out["delta32"] = qui_json(d32);
        out["purity"] = purity_standard(d33);
        out["purity_alt"] = purity_inverse_square(d33);
        row("delta33", d33, d33, d33);
        row("delta31", d31.measurable_part, d31.value_lower(), d31.value_upper());
        row("delta32", d32.measurable_part, d32.value_lower(), d32.value_upper());
    }
    if (from_params) {
        const auto cm = build_covariance(params);
        out["exact"] = all_quis(cm);
        out["symplectic_eigenvalues"] = symplectic_eigenvalues(cm).nu;
        out["physical"] = is_physical(cm);
        if (N >= 2) out["residue21_true"] = residue21_from_params(params);
        if (N == 3) {
            out["residue31_true"] = residue31_from_params(params);
            out["residue32_true"] = residue32_from_params(params);
        }
    }
    write_json(s, "invariants.json", out);
    write_text(s, "invariants.csv", csv);
    std::cout << out.dump(2) << "\n";
    return ok;
}

// ------------------------------------------------------------------ entangle

json ppt_point_json(const SweepPoint& p) {
    return {{"mean_noise", p.mean_noise},     {"lhs", p.ppt.lhs},
            {"rhs_lower", p.ppt.rhs_lower},   {"rhs_upper", p.ppt.rhs_upper},
            {"verdict", verdict_name(p.ppt.verdict)}, {"npt_oracle", p.oracle.npt}};
}

int cmd_entangle(const Settings& s) {
    if (!s.moments_in.empty() || !s.distribution_in.empty() || !s.params_in.empty()) {
        bool from_params = false;
        GaussianStateParams params;
        const auto m = load_moments_input(s, 6, &from_params, &params);
        PptOptions o;
        o.tol = s.tol;
        o.formula = s.formula();
        const auto v = ppt_from_moments(m, o);
        json out = {{"lhs", v.lhs}, {"rhs_lower", v.rhs_lower}, {"rhs_upper", v.rhs_upper},
                    {"verdict", verdict_name(v.verdict)}, {"warnings", v.warnings}};
        if (from_params) out["npt_oracle"] = ppt_oracle(build_covariance(params), s.tol).npt;
        write_json(s, "ppt.json", out);
        std::cout << out.dump(2) << "\n";
        return ok;
    }
    const auto pts = noise_sweep_report(sweep_of(s), s.model, s.modes, sweep_options(s));
    std::string csv = "w_n,mean_noise,lhs,rhs_lower,rhs_upper,verdict,npt_oracle\n";
    json arr = json::array();
    for (const auto& p : pts) {
        csv += std::to_string(p.w_n) + "," + fmt(p.mean_noise) + "," + fmt(p.ppt.lhs) + "," + fmt(p.ppt.rhs_lower) +
               "," + fmt(p.ppt.rhs_upper) + "," + verdict_name(p.ppt.verdict) + "," + (p.oracle.npt ? "1" : "0") + "\n";
        arr.push_back(ppt_point_json(p));
        std::cout << "mean_noise=" << fmt(p.mean_noise) << " verdict=" << verdict_name(p.ppt.verdict)
                  << " npt_oracle=" << p.oracle.npt << "\n";
    }
    write_text(s, "ppt_sweep.csv", csv);
    write_json(s, "ppt_sweep.json", arr);
    return ok;
}

// ------------------------------------------------------------------ derive

int cmd_derive(const Settings& s) {
    const auto r = derive(s.n, s.k);
    const bool match = r.coefficients == builtin_combination(s.n, s.k);
    std::mt19937_64 rng(s.seed);
    double worst = 0;
    for (int i = 0; i < s.checks; ++i) {
        const auto p = random_physical_params(s.n, rng);
        const double exact = qui_from_covariance(build_covariance(p), s.k);
        const double formula = evaluate_combination(r, moments_from_params(p, 2 * s.n)) - r.residue.evaluate(p);
        worst = std::max(worst, std::abs(formula - exact) / std::max(1.0, std::abs(exact)));
    }
    auto table = emit_term_table(r);
    table["builtin_match"] = match;
    table["numeric_check"] = {{"points", s.checks}, {"max_rel_error", worst}};
    write_json(s, "derive_N" + std::to_string(s.n) + "_k" + std::to_string(s.k) + ".json", table);
    std::cout << "target=(" << s.n << "," << s.k << ") solvable=" << (r.solvable ? "yes" : "no")
              << " equations=" << r.equations << " unknowns=" << r.unknowns << " terms=" << r.coefficients.size()
              << " builtin_match=" << (match ? "yes" : "no") << " max_rel_error=" << worst
              << " seconds=" << r.seconds << "\n";
    if (!r.solvable) std::cout << "residue: " << r.residue.to_string() << "\n";
    if (s.n == 1 && s.k == 1)
        for (const auto& [prod, c] : r.coefficients) {
            std::string name = "1";
            if (!prod.empty()) {
                name.clear();
                for (const auto& idx : prod) name += "<W^" + std::to_string(idx[0]) + ">";
            }
            std::cout << "  " << name << " : " << c.str() << "\n";
        }
    return ok;
}

// ------------------------------------------------------------------ report

int cmd_report(const Settings& s) {
    const auto pts = noise_sweep_report(sweep_of(s), s.model, s.modes, sweep_options(s));
    write_sweep_csvs(s, pts);
    std::string csv = "w_n,mean_noise,lhs,rhs_lower,rhs_upper,verdict,npt_oracle\n";
    json ppt_rows = json::array();
    double last_entangled = -1, first_separable = -1;
    int contradictions = 0;
    for (const auto& p : pts) {
        csv += std::to_string(p.w_n) + "," + fmt(p.mean_noise) + "," + fmt(p.ppt.lhs) + "," + fmt(p.ppt.rhs_lower) +
               "," + fmt(p.ppt.rhs_upper) + "," + verdict_name(p.ppt.verdict) + "," + (p.oracle.npt ? "1" : "0") + "\n";
        ppt_rows.push_back(ppt_point_json(p));
        if (p.ppt.verdict == Verdict::entangled) {
            last_entangled = p.mean_noise;
            if (!p.oracle.npt) ++contradictions;
        }
        if (p.ppt.verdict == Verdict::separable_necessary_condition_met && first_separable < 0)
            first_separable = p.mean_noise;
    }
    write_text(s, "ppt_sweep.csv", csv);
    write_json(s, "ppt_sweep.json", ppt_rows);
    json summary = {{"correlated_mean_per_beam", correlated_mean(s.model, s.w_p)},
                    {"last_entangled_mean_noise", last_entangled},
                    {"first_separable_mean_noise", first_separable},
                    {"moments_vs_oracle_contradictions", contradictions},
                    {"kernel_isa", kernels::isa_name(kernels::active_isa())}};
    write_json(s, "summary.json", summary);
    std::cout << summary.dump(2) << "\n";
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quinv: local invariants of multi-beam Gaussian states from photocount data"};
    app.require_subcommand(1);
    app.fallthrough();
    Settings s;
    Binder b;
    app.add_option("--config", s.config_path, "JSON file with default values for any option")->check(CLI::ExistingFile);
    b.add(&app, "--seed", s.seed, "seed", "random seed");
    b.add(&app, "--jobs", s.jobs, "jobs", "worker threads for sweeps")->check(CLI::PositiveNumber);
    b.add(&app, "--out-dir", s.out_dir, "out_dir", "directory for output files");
    b.flag(&app, "--strict", s.strict, "strict", "treat asymmetric moments as an error");

    auto model_opts = [&](CLI::App* c) {
        b.add(c, "--w-p", s.w_p, "w_p", "correlated units per beam");
        b.add(c, "--w-n", s.w_n, "w_n", "noise windows (even), one or more values")->delimiter(',');
        b.add(c, "--modes", s.modes, "modes", "effective mode number M");
        b.add(c, "--route", s.route, "route", "sweep route: params or distribution");
        b.add(c, "--policy", s.policy, "policy", "Dbar policy: minimal_physical or zero");
        b.add(c, "--tol", s.tol, "tol", "classification tolerance");
        b.add(c, "--asymmetry", s.asymmetry, "asymmetry", "relative beam asymmetry threshold");
    };
    auto input_opts = [&](CLI::App* c) {
        b.add(c, "--moments", s.moments_in, "moments", "intensity moments CSV");
        b.add(c, "--distribution", s.distribution_in, "distribution", "distribution CSV or .bin");
        b.add(c, "--params", s.params_in, "params", "Gaussian parameters JSON");
        b.flag(c, "--reduce", s.reduce, "reduce", "reduce whole-field moments to one mode using --modes");
    };

    auto* sim = app.add_subcommand("simulate", "model distributions, channels and compound histograms");
    model_opts(sim);
    b.add(sim, "--windows", s.windows, "windows", "number of detection windows to sample (0: none)");
    b.add(sim, "--stride", s.stride, "stride", "offset between correlated and noise windows");
    b.flag(sim, "--overlapping", s.overlapping, "overlapping", "advance realizations by one window");
    b.add(sim, "--format", s.format, "format", "csv or bin")->check(CLI::IsMember({"csv", "bin"}));

    auto* rec = app.add_subcommand("reconstruct", "maximum-likelihood photon distribution from a histogram");
    model_opts(rec);
    b.add(rec, "--histogram", s.histogram, "histogram", "photocount histogram CSV or .bin");
    b.add(rec, "--pixels", s.pixels, "pixels", "pixels per detector (0: histogram size - 1)");
    b.add(rec, "--eta", s.eta, "eta", "detection efficiency");
    b.add(rec, "--dark", s.dark, "dark", "mean dark counts per measurement");
    b.flag(rec, "--effective", s.effective, "effective", "use the compound-beam effective detector");
    b.add(rec, "--pixel-rule", s.pixel_rule, "pixel_rule", "stated or windows")
        ->check(CLI::IsMember({"stated", "windows"}));
    b.add(rec, "--truncation", s.truncation, "truncation", "largest photon number per axis");
    b.add(rec, "--max-iters", s.max_iters, "max_iters", "EM iteration cap");
    b.add(rec, "--em-tol", s.em_tol, "em_tol", "relative log-likelihood change to stop");

    auto* mom = app.add_subcommand("moments", "intensity moments from a distribution or parameters");
    model_opts(mom);
    input_opts(mom);
    b.add(mom, "--max-order", s.max_order, "max_order", "largest total order");

    auto* inv = app.add_subcommand("invariants", "invariants, residue bounds and spectra");
    model_opts(inv);
    input_opts(inv);

    auto* ent = app.add_subcommand("entangle", "separability test from moments or over the model sweep");
    model_opts(ent);
    input_opts(ent);

    auto* der = app.add_subcommand("derive", "derive invariant formulas symbolically");
    b.add(der, "--n", s.n, "n", "number of beams (1-3)");
    b.add(der, "--k", s.k, "k", "invariant index (1..n)");
    b.add(der, "--checks", s.checks, "checks", "random states for the numeric cross-check");

    auto* rep = app.add_subcommand("report", "full model sweep: figure data and summary");
    model_opts(rep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : validation;
    }

    try {
        json cfg = json::object();
        if (!s.config_path.empty()) {
            try {
                cfg = json::parse(io::read_file(s.config_path));
            } catch (const json::parse_error& e) {
                throw ValidationError(std::string("config file: ") + e.what());
            }
        }
        b.apply(cfg);
        if (cfg.contains("model")) s.model = io::model_from_json(cfg.at("model"), s.model);
        s.model.validate();

        if (*sim) return cmd_simulate(s);
        if (*rec) return cmd_reconstruct(s);
        if (*mom) return cmd_moments(s);
        if (*inv) return cmd_invariants(s);
        if (*ent) return cmd_entangle(s);
        if (*der) return cmd_derive(s);
        if (*rep) return cmd_report(s);
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence error: " << e.what() << "\n";
        return convergence;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return io_failure;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return io_failure;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return validation;
    }
    return ok;
}
