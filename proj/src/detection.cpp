#include "quinv/detection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "quinv/errors.hpp"
#include "quinv/kernels.hpp"

namespace quinv {

namespace mp = boost::multiprecision;
using Big = mp::cpp_bin_float_50;

void PhotocountChannels::validate() const {
    if (signal.size() != idler.size()) throw ValidationError("signal and idler channels differ in length");
}

void DetectorModel::validate() const {
    if (n_pixels < 1) throw ValidationError("detector needs at least one pixel");
    if (!(efficiency >= 0 && efficiency <= 1)) throw ValidationError("detection efficiency outside [0,1]");
    if (!(dark_total >= 0)) throw ValidationError("dark count rate must be >= 0");
    if (kind == DetectorKind::click_array && !(dark_per_pixel() < 1))
        throw ValidationError("dark count probability per pixel must be < 1");
    if (kind == DetectorKind::ideal_pnr && dark_total != 0)
        throw ValidationError("ideal_pnr detector has no dark counts");
}

DetectorModel DetectorModel::effective(int w_p, int w_n, double eta_s, double eta_i, double d_s, double d_i,
                                       PixelRule rule) {
    if (w_p < 0 || w_n < 0 || w_n % 2) throw ValidationError("w_p >= 0 and even w_n >= 0 required");
    DetectorModel d;
    d.kind = DetectorKind::click_array;
    d.n_pixels = rule == PixelRule::stated ? 2 * w_p + w_n : 4 * w_p + w_n;
    d.efficiency = 0.5 * (eta_s + eta_i);
    d.dark_total = (d_s + d_i) * (2.0 * w_p + 0.5 * w_n);
    if (d.n_pixels < 1) d.n_pixels = 1;
    d.validate();
    return d;
}

namespace {

Big big_binom(int n, int k) {
    if (k < 0 || k > n) return Big(0);
    Big r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

double binom_pmf(int n, int k, double p) {
    if (k < 0 || k > n) return 0.0;
    if (p == 0) return k == 0 ? 1.0 : 0.0;
    if (p == 1) return k == n ? 1.0 : 0.0;
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
                    (n - k) * std::log1p(-p));
}

}  // namespace

double detection_matrix(const DetectorModel& det, int c, int n) {
    det.validate();
    if (n < 0 || c < 0) throw ValidationError("negative count or photon number");
    if (c > det.max_count()) return 0.0;
    if (det.kind == DetectorKind::ideal_pnr) return binom_pmf(n, c, det.efficiency);
    const int N = det.n_pixels;
    const Big eta = det.efficiency, D = Big(det.dark_total) / N;
    Big s = 0;
    for (int l = 0; l <= c; ++l) {
        const Big term = big_binom(c, l) * mp::pow(1 - D, N - l) * mp::pow(1 - eta * (N - l) / N, n);
        s += (c - l) % 2 ? -term : term;
    }
    const double v = static_cast<double>(big_binom(N, c) * s);
    return std::max(0.0, v);
}

DetectionTable detection_table(const DetectorModel& det, int n_max) {
    det.validate();
    if (n_max < 0) throw ValidationError("photon truncation must be >= 0");
    DetectionTable tab;
    tab.counts = det.max_count() + 1;
    tab.photons = n_max + 1;
    tab.t.assign(static_cast<std::size_t>(tab.counts) * tab.photons, 0.0);
    if (det.kind == DetectorKind::ideal_pnr) {
        for (int c = 0; c < tab.counts; ++c)
            for (int n = 0; n <= n_max; ++n) tab.t[c * tab.photons + n] = binom_pmf(n, c, det.efficiency);
        return tab;
    }
    // T(c,n) = C(N,c) sum_l C(c,l) (-1)^{c-l} (1-D)^{N-l} (1 - eta (N-l)/N)^n ;
    // the alternating sum cancels badly in double precision, so it runs in 50 digits
    const int N = det.n_pixels;
    const Big eta = det.efficiency, D = Big(det.dark_total) / N;
    std::vector<std::vector<Big>> pw(N + 1, std::vector<Big>(n_max + 1));
    std::vector<Big> dark(N + 1);
    for (int l = 0; l <= N; ++l) {
        const Big base = 1 - eta * (N - l) / N;
        dark[l] = mp::pow(1 - D, N - l);
        pw[l][0] = 1;
        for (int n = 1; n <= n_max; ++n) pw[l][n] = pw[l][n - 1] * base;
    }
    std::vector<Big> acc(n_max + 1);
    for (int c = 0; c <= N; ++c) {
        std::fill(acc.begin(), acc.end(), Big(0));
        for (int l = 0; l <= c; ++l) {
            Big coef = big_binom(c, l) * dark[l];
            if ((c - l) % 2) coef = -coef;
            for (int n = 0; n <= n_max; ++n) acc[n] += coef * pw[l][n];
        }
        const Big outer = big_binom(N, c);
        for (int n = 0; n <= n_max; ++n)
            tab.t[static_cast<std::size_t>(c) * tab.photons + n] = std::max(0.0, static_cast<double>(outer * acc[n]));
    }
    return tab;
}

DetectionTable detection_table_occupancy(const DetectorModel& det, int n_max) {
    det.validate();
    DetectionTable tab;
    tab.counts = det.max_count() + 1;
    tab.photons = n_max + 1;
    tab.t.assign(static_cast<std::size_t>(tab.counts) * tab.photons, 0.0);
    if (det.kind == DetectorKind::ideal_pnr) return detection_table(det, n_max);
    const int N = det.n_pixels;
    const double eta = det.efficiency, D = det.dark_per_pixel();
    std::vector<double> occ(N + 1, 0.0), next(N + 1);
    occ[0] = 1.0;
    for (int n = 0; n <= n_max; ++n) {
        if (n > 0) {
            std::fill(next.begin(), next.end(), 0.0);
            for (int k = 0; k <= N; ++k) {
                if (occ[k] == 0) continue;
                next[k] += occ[k] * (1 - eta + eta * k / N);
                if (k < N) next[k + 1] += occ[k] * eta * (N - k) / N;
            }
            occ.swap(next);
        }
        for (int k = 0; k <= N; ++k)
            for (int c = k; c <= N; ++c)
                tab.t[static_cast<std::size_t>(c) * tab.photons + n] += occ[k] * binom_pmf(N - k, c - k, D);
    }
    return tab;
}

// ------------------------------------------------------------------ compound beams

namespace {

int block_step(int w_p, int w_n, const CompoundOptions& opt) {
    return opt.overlapping ? 1 : std::max({6 * w_p, 3 * w_n, 1});
}

}  // namespace

std::size_t compound_realization_count(std::size_t n_windows, int w_p, int w_n, int stride,
                                       const CompoundOptions& opt) {
    // noise windows start at the stride offset; without noise only the correlated block counts
    const int span = w_n > 0 ? std::max(6 * w_p, stride + 3 * w_n) : 6 * w_p;
    const std::size_t need = static_cast<std::size_t>(std::max(span, 1));
    if (n_windows < need) return 0;
    return (n_windows - need) / static_cast<std::size_t>(block_step(w_p, w_n, opt)) + 1;
}

JointDistribution build_compound_realizations(const PhotocountChannels& ch, int w_p, int w_n, int stride,
                                              const CompoundOptions& opt) {
    ch.validate();
    if (w_p < 0 || w_n < 0 || w_n % 2) throw ValidationError("w_p >= 0 and even w_n >= 0 required");
    if (stride < opt.min_stride)
        throw ValidationError("noise offset stride " + std::to_string(stride) + " below the minimum " +
                              std::to_string(opt.min_stride));
    const std::size_t count = compound_realization_count(ch.size(), w_p, w_n, stride, opt);
    if (count == 0) throw ValidationError("channels too short for a single realization");
    int vmax = 0;
    for (std::size_t i = 0; i < ch.size(); ++i) vmax = std::max({vmax, int(ch.signal[i]), int(ch.idler[i])});
    const int cmax = (4 * w_p + w_n) * std::max(vmax, 1);
    JointDistribution h({cmax + 1, cmax + 1, cmax + 1}, DistKind::photocount_histogram);
    const auto& s = ch.signal;
    const auto& i = ch.idler;
    const std::size_t step = static_cast<std::size_t>(block_step(w_p, w_n, opt));
    for (std::size_t r = 0; r < count; ++r) {
        const std::size_t j = r * step, jn = j + static_cast<std::size_t>(stride);
        int c1 = 0, c2 = 0, c3 = 0;
        for (int k = 0; k < w_p; ++k) {
            const std::size_t b = j + 6 * static_cast<std::size_t>(k);
            c1 += s[b] + i[b + 2] + i[b + 3] + s[b + 5];
            c2 += i[b] + s[b + 1] + s[b + 3] + i[b + 4];
            c3 += i[b + 1] + s[b + 2] + s[b + 4] + i[b + 5];
        }
        for (int k = 0; k < w_n / 2; ++k) {
            const std::size_t b = jn + 6 * static_cast<std::size_t>(k);
            c1 += s[b] + i[b + 3];
            c2 += s[b + 1] + i[b + 4];
            c3 += s[b + 2] + i[b + 5];
        }
        h.at({c1, c2, c3}) += 1.0;
    }
    h.normalize();
    return h;
}

// ------------------------------------------------------------------ forward map and EM

namespace {

// contract one axis of a dense array with T (c x n) or its transpose
std::vector<double> contract_axis(const std::vector<double>& in, const std::vector<int>& shape, int axis,
                                  const DetectionTable& tab, bool adjoint, std::vector<int>& out_shape) {
    const int lin = shape[axis];
    const int lout = adjoint ? tab.photons : tab.counts;
    if (lin != (adjoint ? tab.counts : tab.photons)) throw ValidationError("detection table does not match axis");
    std::size_t outer = 1, inner = 1;
    for (int a = 0; a < axis; ++a) outer *= static_cast<std::size_t>(shape[a]);
    for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= static_cast<std::size_t>(shape[a]);
    out_shape = shape;
    out_shape[axis] = lout;
    std::vector<double> out(outer * lout * inner, 0.0);
    // coefficient matrix as [out][in]
    std::vector<double> m(static_cast<std::size_t>(lout) * lin);
    for (int c = 0; c < tab.counts; ++c)
        for (int n = 0; n < tab.photons; ++n) {
            const double v = tab(c, n);
            if (adjoint) m[static_cast<std::size_t>(n) * lin + c] = v;
            else m[static_cast<std::size_t>(c) * lin + n] = v;
        }
    for (std::size_t o = 0; o < outer; ++o) {
        const double* src = in.data() + o * lin * inner;
        double* dst = out.data() + o * lout * inner;
        if (inner == 1) {
            for (int r = 0; r < lout; ++r) dst[r] = kernels::dot(m.data() + static_cast<std::size_t>(r) * lin, src, lin);
        } else {
            for (int r = 0; r < lout; ++r)
                for (int q = 0; q < lin; ++q) {
                    const double w = m[static_cast<std::size_t>(r) * lin + q];
                    if (w != 0.0) kernels::axpy(w, src + q * inner, dst + r * inner, inner);
                }
        }
    }
    return out;
}

std::vector<double> apply_all(std::vector<double> data, std::vector<int> shape,
                              const std::vector<DetectionTable>& tabs, bool adjoint) {
    for (int a = 0; a < static_cast<int>(shape.size()); ++a) {
        std::vector<int> ns;
        data = contract_axis(data, shape, a, tabs[a], adjoint, ns);
        shape = ns;
    }
    return data;
}

std::vector<DetectionTable> tables_for(const std::vector<DetectorModel>& dets, const std::vector<int>& photon_shape) {
    if (dets.size() != photon_shape.size()) throw ValidationError("one detector per beam required");
    std::vector<DetectionTable> tabs;
    for (std::size_t a = 0; a < dets.size(); ++a) tabs.push_back(detection_table(dets[a], photon_shape[a] - 1));
    return tabs;
}

std::string bin_name(const JointDistribution& d, std::size_t off) {
    std::string s = "(";
    for (int a = 0; a < d.n_beams; ++a) {
        const auto v = (off / d.stride(a)) % static_cast<std::size_t>(d.shape[a]);
        s += (a ? "," : "") + std::to_string(v);
    }
    return s + ")";
}

}  // namespace

JointDistribution forward_map(const JointDistribution& p, const std::vector<DetectionTable>& tabs) {
    if (static_cast<int>(tabs.size()) != p.n_beams) throw ValidationError("one detection table per beam required");
    std::vector<int> shape;
    for (const auto& t : tabs) shape.push_back(t.counts);
    JointDistribution out(shape, DistKind::photocount_histogram);
    out.mass = apply_all(p.mass, p.shape, tabs, false);
    return out;
}

JointDistribution forward_map(const JointDistribution& p, const std::vector<DetectorModel>& dets) {
    p.validate(false);
    return forward_map(p, tables_for(dets, p.shape));
}

double log_likelihood(const JointDistribution& f, const JointDistribution& model) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.mass.size(); ++i)
        if (f.mass[i] > 0) s += f.mass[i] * std::log(model.mass[i]);
    return s;
}

double kl_divergence(const JointDistribution& f, const JointDistribution& model) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.mass.size(); ++i)
        if (f.mass[i] > 0) s += f.mass[i] * std::log(f.mass[i] / model.mass[i]);
    return s;
}

EmResult reconstruct_em(const JointDistribution& f, const std::vector<DetectorModel>& dets,
                        const std::vector<int>& photon_shape, const EmOptions& opt) {
    f.validate(true, 1e-6);
    const auto tabs = tables_for(dets, photon_shape);
    for (int a = 0; a < f.n_beams; ++a)
        if (f.shape[a] != tabs[a].counts)
            throw ValidationError("histogram axis " + std::to_string(a + 1) + " has " + std::to_string(f.shape[a]) +
                                  " count bins, detector reports " + std::to_string(tabs[a].counts));

    EmResult res;
    res.p = JointDistribution(photon_shape, DistKind::photon_distribution);
    if (opt.init == EmInit::given) {
        if (!opt.start || opt.start->shape != photon_shape) throw ValidationError("EM start distribution has wrong shape");
        res.p.mass = opt.start->mass;
        res.p.normalize();
    } else {
        std::fill(res.p.mass.begin(), res.p.mass.end(), 1.0 / static_cast<double>(res.p.size()));
    }

    const std::size_t nf = f.size(), np = res.p.size();
    std::vector<double> model(nf), ratio(nf);
    auto forward = [&] { model = apply_all(res.p.mass, photon_shape, tabs, false); };
    auto ll_of = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < nf; ++i)
            if (f.mass[i] > 0) s += f.mass[i] * std::log(model[i]);
        return s;
    };

    forward();
    for (std::size_t i = 0; i < nf; ++i)
        if (f.mass[i] > 0 && !(model[i] > 0))
            throw ValidationError("histogram bin " + bin_name(f, i) +
                                  " has mass but the detector model cannot produce it (zero denominator)");
    double ll = ll_of();
    if (opt.record_history) res.ll_history.push_back(ll);

    for (int it = 1; it <= opt.max_iters; ++it) {
        kernels::safe_div(f.mass.data(), model.data(), ratio.data(), nf);
        const auto back = apply_all(ratio, f.shape, tabs, true);
        kernels::mul(res.p.mass.data(), back.data(), res.p.mass.data(), np);
        res.iterations = it;
        res.max_norm_drift = std::max(res.max_norm_drift, std::abs(res.p.total() - 1.0));

        forward();
        const double next = ll_of();
        if (opt.record_history) res.ll_history.push_back(next);
        const double scale = std::max(std::abs(ll), 1.0);
        if (next < ll - opt.monotone_slack * scale) ++res.monotonicity_violations;
        const double change = (next - ll) / scale;
        ll = next;
        if (std::abs(change) < opt.tol) {
            res.converged = true;
            break;
        }
    }
    JointDistribution m(f.shape, DistKind::photocount_histogram);
    m.mass = model;
    res.log_likelihood = ll;
    res.kl = kl_divergence(f, m);
    return res;
}

}  // namespace quinv
