#include "quinv/noise_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "quinv/errors.hpp"
#include "quinv/moments.hpp"

namespace quinv {

void TwbModelParams::validate() const {
    if (!(m_p > 0 && m_s > 0 && m_i > 0)) throw ValidationError("mode counts must be > 0");
    if (!(b_p >= 0 && b_s >= 0 && b_i >= 0)) throw ValidationError("mean photon numbers per mode must be >= 0");
    if (!(eta_s >= 0 && eta_s <= 1 && eta_i >= 0 && eta_i <= 1)) throw ValidationError("efficiencies outside [0,1]");
    if (!(d_s >= 0 && d_s < 1 && d_i >= 0 && d_i < 1)) throw ValidationError("dark rates per window outside [0,1)");
}

double mandel_rice(int n, double m, double b) {
    if (n < 0) return 0.0;
    if (!(m > 0) || !(b >= 0)) throw ValidationError("Mandel-Rice needs m > 0 and b >= 0");
    if (b == 0) return n == 0 ? 1.0 : 0.0;
    return std::exp(std::lgamma(n + m) - std::lgamma(n + 1.0) - std::lgamma(m) + n * std::log(b) -
                    (n + m) * std::log1p(b));
}

std::vector<double> mandel_rice_pmf(double m, double b, int n_max) {
    std::vector<double> out(n_max + 1);
    for (int n = 0; n <= n_max; ++n) out[n] = mandel_rice(n, m, b);
    return out;
}

int mandel_rice_cutoff(double m, double b, double tail) {
    if (b == 0) return 0;
    const double limit = b / (1 + b);
    // past the mode the term ratio (n+m)/(n+1) * b/(1+b) is bounded by rho < 1,
    // so the tail is at most term * rho / (1 - rho)
    for (int n = 0; n < 100000; ++n) {
        const double ratio = (n + 1 + m) / (n + 2) * limit;
        const double rho = std::max(ratio, limit);
        if (rho < 1 && n + 1 > (m - 1) * b) {
            const double next = mandel_rice(n + 1, m, b);
            if (next / (1 - rho) < tail) return n;
        }
    }
    throw ValidationError("Mandel-Rice tail does not decay within 1e5 photons");
}

// ------------------------------------------------------------------ dense helpers

namespace {

JointDistribution delta(int rank) {
    JointDistribution d(std::vector<int>(rank, 1), DistKind::photon_distribution);
    d.mass[0] = 1.0;
    return d;
}

// full convolution of two equal-rank arrays
JointDistribution convolve(const JointDistribution& a, const JointDistribution& b) {
    if (a.n_beams != b.n_beams) throw ValidationError("convolution rank mismatch");
    std::vector<int> shape(a.n_beams);
    for (int k = 0; k < a.n_beams; ++k) shape[k] = a.shape[k] + b.shape[k] - 1;
    JointDistribution out(shape, a.kind);
    // offsets of each operand's entries in the output layout; the output offset
    // of a sum of indices is the sum of offsets
    auto place = [&](const JointDistribution& x, std::vector<std::size_t>& off, std::vector<double>& val) {
        std::vector<int> idx(x.n_beams, 0);
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x.mass[i] != 0.0) {
                std::size_t o = 0;
                for (int k = 0; k < x.n_beams; ++k) o = o * shape[k] + idx[k];
                off.push_back(o);
                val.push_back(x.mass[i]);
            }
            for (int k = x.n_beams - 1; k >= 0; --k) {
                if (++idx[k] < x.shape[k]) break;
                idx[k] = 0;
            }
        }
    };
    std::vector<std::size_t> oa, ob;
    std::vector<double> va, vb;
    place(a, oa, va);
    place(b, ob, vb);
    for (std::size_t i = 0; i < oa.size(); ++i)
        for (std::size_t j = 0; j < ob.size(); ++j) out.mass[oa[i] + ob[j]] += va[i] * vb[j];
    return out;
}

// cut every axis to a common length beyond which each marginal's tail is below
// tol; returns the discarded mass
double trim(JointDistribution& d, double tol) {
    int len = 1;
    for (int a = 0; a < d.n_beams; ++a) {
        const auto m = d.marginal(a);
        double tail = 0.0;
        int keep = static_cast<int>(m.size());
        while (keep > 1 && tail + m[keep - 1] < tol) tail += m[--keep];
        len = std::max(len, keep);
    }
    const double before = d.total();
    JointDistribution out(std::vector<int>(d.n_beams, len), d.kind);
    std::vector<int> idx(d.n_beams, 0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        bool inside = true;
        std::size_t o = 0;
        for (int k = 0; k < d.n_beams; ++k) {
            inside = inside && idx[k] < len;
            o = o * len + std::min(idx[k], len - 1);
        }
        if (inside) out.mass[o] = d.mass[i];
        for (int k = d.n_beams - 1; k >= 0; --k) {
            if (++idx[k] < d.shape[k]) break;
            idx[k] = 0;
        }
    }
    d = std::move(out);
    return before - d.total();
}

// a 2-beam array placed on two axes of a 3-beam array
JointDistribution embed_pair(const JointDistribution& p, int axis_first, int axis_second) {
    std::vector<int> shape(3, 1);
    shape[axis_first] = p.shape[0];
    shape[axis_second] = p.shape[1];
    JointDistribution out(shape, p.kind);
    for (int x = 0; x < p.shape[0]; ++x)
        for (int y = 0; y < p.shape[1]; ++y) {
            std::vector<int> idx(3, 0);
            idx[axis_first] = x;
            idx[axis_second] = y;
            out.at(idx) = p.mass[static_cast<std::size_t>(x) * p.shape[1] + y];
        }
    return out;
}

JointDistribution embed_axis(const std::vector<double>& v, int axis) {
    std::vector<int> shape(3, 1);
    shape[axis] = static_cast<int>(v.size());
    JointDistribution out(shape, DistKind::photon_distribution);
    out.mass = v;
    return out;
}

double pair_mean(const TwbModelParams& p) { return 2 * p.m_p * p.b_p + p.m_s * p.b_s + p.m_i * p.b_i; }

}  // namespace

JointDistribution twb_joint(const TwbModelParams& p, double w, const ModelBuildOptions& opt) {
    p.validate();
    if (!(w >= 0)) throw ValidationError("mode scale must be >= 0");
    if (w == 0) return delta(2);
    const double tol = opt.tail_tol / 4;
    const int cp = mandel_rice_cutoff(w * p.m_p, p.b_p, tol);
    const int cs = mandel_rice_cutoff(w * p.m_s, p.b_s, tol);
    const int ci = mandel_rice_cutoff(w * p.m_i, p.b_i, tol);
    const auto pp = mandel_rice_pmf(w * p.m_p, p.b_p, cp);
    const auto ps = mandel_rice_pmf(w * p.m_s, p.b_s, cs);
    const auto pi = mandel_rice_pmf(w * p.m_i, p.b_i, ci);
    JointDistribution out({cp + cs + 1, cp + ci + 1}, DistKind::photon_distribution);
    const int cols = cp + ci + 1;
    for (int n = 0; n <= cp; ++n)
        for (int a = 0; a <= cs; ++a)
            for (int b = 0; b <= ci; ++b)
                out.mass[static_cast<std::size_t>(n + a) * cols + n + b] += pp[n] * ps[a] * pi[b];
    const double lost = 1.0 - out.total();
    if (lost > opt.max_tail) throw ValidationError("twin-beam truncation lost " + std::to_string(lost));
    out.normalize();
    return out;
}

JointDistribution symmetrize(const JointDistribution& p) {
    if (p.n_beams != 2) throw ValidationError("symmetrize expects a 2-beam distribution");
    JointDistribution swapped({p.shape[1], p.shape[0]}, p.kind);
    for (int a = 0; a < p.shape[0]; ++a)
        for (int b = 0; b < p.shape[1]; ++b)
            swapped.mass[static_cast<std::size_t>(b) * p.shape[0] + a] =
                p.mass[static_cast<std::size_t>(a) * p.shape[1] + b];
    auto out = convolve(p, swapped);
    // the two sums a+b' and b+a' are added in different orders; copy one triangle
    const int n = out.shape[0];
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) out.mass[static_cast<std::size_t>(b) * n + a] = out.mass[static_cast<std::size_t>(a) * n + b];
    return out;
}

double correlated_mean(const TwbModelParams& p, int w_p) { return 2.0 * w_p * pair_mean(p); }

double mean_noise(const TwbModelParams& p, int w_n) { return 0.5 * w_n * pair_mean(p); }

JointDistribution build_state_distribution(const TwbModelParams& p, int w_p, int w_n, const ModelBuildOptions& opt,
                                           ModelAudit* audit) {
    p.validate();
    if (w_p < 0 || w_n < 0) throw ValidationError("window counts must be >= 0");
    if (w_n % 2) throw ValidationError("w_n must be even");
    const double tol = opt.tail_tol;
    double lost = 0.0;

    JointDistribution state = delta(3);
    if (w_p > 0) {
        auto sym = symmetrize(twb_joint(p, w_p, opt));
        lost += trim(sym, tol);
        // beams (1,2), (2,3) and (3,1) each share one symmetrized pair block
        state = convolve(embed_pair(sym, 0, 1), embed_pair(sym, 1, 2));
        lost += trim(state, tol);
        state = convolve(state, embed_pair(sym, 2, 0));
        lost += trim(state, tol);
    }
    if (w_n > 0) {
        const auto noise2 = twb_joint(p, w_n / 2, opt);
        const auto s = noise2.marginal(0), i = noise2.marginal(1);
        std::vector<double> per_beam(s.size() + i.size() - 1, 0.0);
        for (std::size_t a = 0; a < s.size(); ++a)
            for (std::size_t b = 0; b < i.size(); ++b) per_beam[a + b] += s[a] * i[b];
        for (int axis = 0; axis < 3; ++axis) {
            state = convolve(state, embed_axis(per_beam, axis));
            lost += trim(state, tol);
        }
    }
    if (lost > opt.max_tail) throw ValidationError("state truncation discarded " + std::to_string(lost));
    state.normalize();
    state.kind = DistKind::photon_distribution;

    if (audit) {
        audit->discarded_mass = lost;
        audit->analytic_mean = correlated_mean(p, w_p) + mean_noise(p, w_n);
        const int n = state.shape[0];
        double cyc = 0, swp = 0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c) {
                    const double v = state.at({a, b, c});
                    cyc = std::max(cyc, std::abs(v - state.at({c, a, b})));
                    swp = std::max(swp, std::abs(v - state.at({b, a, c})));
                }
        audit->cyclic_asymmetry = cyc;
        audit->swap_asymmetry = swp;
        double err = 0;
        for (int axis = 0; axis < 3; ++axis) {
            const auto m = state.marginal(axis);
            double mean = 0;
            for (int k = 0; k < n; ++k) mean += k * m[k];
            err = std::max(err, std::abs(mean - audit->analytic_mean));
        }
        audit->mean_error = err;
    }
    return state;
}

// ------------------------------------------------------------------ sampling

namespace {

int draw_mandel_rice(std::mt19937_64& rng, double m, double b) {
    if (b == 0) return 0;
    // negative binomial as a gamma mixture of Poissons; works for real m
    const double lambda = std::gamma_distribution<double>(m, b)(rng);
    if (!(lambda > 0)) return 0;
    return std::poisson_distribution<int>(lambda)(rng);
}

double no_photon_click(const TwbModelParams& p, double eta, double b_own, double m_own) {
    // generating function of the detected-photon number at zero
    return std::pow(1 + eta * p.b_p, -p.m_p) * std::pow(1 + eta * b_own, -m_own);
}

}  // namespace

PhotocountChannels sample_channels(const TwbModelParams& p, std::size_t n_windows, std::uint64_t seed) {
    p.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PhotocountChannels ch;
    ch.signal.resize(n_windows);
    ch.idler.resize(n_windows);
    for (std::size_t w = 0; w < n_windows; ++w) {
        const int pairs = draw_mandel_rice(rng, p.m_p, p.b_p);
        const int ns = pairs + draw_mandel_rice(rng, p.m_s, p.b_s);
        const int ni = pairs + draw_mandel_rice(rng, p.m_i, p.b_i);
        const double qs = (1 - p.d_s) * std::pow(1 - p.eta_s, ns);
        const double qi = (1 - p.d_i) * std::pow(1 - p.eta_i, ni);
        ch.signal[w] = u(rng) >= qs;
        ch.idler[w] = u(rng) >= qi;
    }
    return ch;
}

double click_probability_signal(const TwbModelParams& p) {
    return 1 - (1 - p.d_s) * no_photon_click(p, p.eta_s, p.b_s, p.m_s);
}

double click_probability_idler(const TwbModelParams& p) {
    return 1 - (1 - p.d_i) * no_photon_click(p, p.eta_i, p.b_i, p.m_i);
}

// ------------------------------------------------------------------ Gaussian fit

const char* dbar_policy_name(DbarPolicy p) { return p == DbarPolicy::zero ? "zero" : "minimal_physical"; }

DbarPolicy parse_dbar_policy(const std::string& s) {
    if (s == "minimal_physical") return DbarPolicy::minimal_physical;
    if (s == "zero") return DbarPolicy::zero;
    throw ValidationError("unknown Dbar policy '" + s + "'");
}

namespace {

GaussianStateParams symmetric_real(double b, double pair_cov, double dbar) {
    auto g = GaussianStateParams::vacuum(3);
    const double d = std::sqrt(std::max(pair_cov - dbar * dbar, 0.0));
    for (int j = 0; j < 3; ++j) g.b[j] = b;
    for (int j = 0; j < 3; ++j)
        for (int k = j + 1; k < 3; ++k) {
            g.set_D(j, k, d);
            g.set_Dbar(j, k, dbar);
        }
    return g;
}

bool physical_at(double b, double pair_cov, double dbar) {
    return is_physical(build_covariance(symmetric_real(b, pair_cov, dbar)));
}

}  // namespace

GaussianFit fit_gaussian_params(const TwbModelParams& p, int w_p, int w_n, double modes, DbarPolicy policy) {
    if (!(modes > 0)) throw ValidationError("mode number M must be > 0");
    const auto dist = build_state_distribution(p, w_p, w_n);
    const auto whole = intensity_moments_from_distribution(dist, 2);
    const auto one = reduce_to_single_mode(whole, modes);

    GaussianFit fit;
    double b = 0, cov = 0;
    for (int j = 1; j <= 3; ++j) b += one.W({j}) / 3;
    for (auto [j, k] : {std::pair{1, 2}, {1, 3}, {2, 3}}) cov += (one.W({j, k}) - one.W({j}) * one.W({k})) / 3;
    if (cov < -1e-12) throw ValidationError("model pair covariance is negative; real-D structure does not apply");
    cov = std::max(cov, 0.0);
    fit.pair_cov = cov;

    double dbar = 0.0;
    if (policy == DbarPolicy::minimal_physical && !physical_at(b, cov, 0.0)) {
        // smallest |Dbar| on [-sqrt(cov), 0] giving a physical state: coarse scan, then bisection
        const double span = std::sqrt(cov);
        const int steps = 400;
        int hit = -1;
        for (int s = 1; s <= steps && hit < 0; ++s)
            if (physical_at(b, cov, -span * s / steps)) hit = s;
        if (hit < 0) {
            fit.note = "no physical split of the pair covariance between D and Dbar";
        } else {
            double lo = span * (hit - 1) / steps, hi = span * hit / steps;  // |Dbar|: lo unphysical, hi physical
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                (physical_at(b, cov, -mid) ? hi : lo) = mid;
            }
            dbar = -hi;
        }
    }
    fit.params = symmetric_real(b, cov, dbar);
    fit.physical = is_physical(build_covariance(fit.params));
    if (!fit.physical && fit.note.empty()) fit.note = "fitted covariance is not physical";
    return fit;
}

GaussianStateParams gaussian_params_of_model(const TwbModelParams& p, int w_p, int w_n, double modes,
                                             DbarPolicy policy) {
    return fit_gaussian_params(p, w_p, w_n, modes, policy).params;
}

SweepConfig SweepConfig::standard() {
    SweepConfig c;
    for (int w = 0; w <= 58; w += 2) c.w_n_list.push_back(w);
    return c;
}

void SweepConfig::validate() const {
    if (w_p < 0) throw ValidationError("w_p must be >= 0");
    if (w_n_list.empty()) throw ValidationError("sweep needs at least one w_n");
    for (int w : w_n_list)
        if (w < 0 || w % 2) throw ValidationError("sweep w_n values must be even and >= 0");
}

}  // namespace quinv
