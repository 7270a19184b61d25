#include "quinv/moments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "quinv/errors.hpp"
#include "quinv/kernels.hpp"

namespace quinv {

int moment_order(const MomentIndex& idx) { return std::accumulate(idx.begin(), idx.end(), 0); }

std::vector<MomentIndex> indices_up_to(int n_beams, int max_order) {
    std::vector<MomentIndex> out;
    MomentIndex cur(n_beams, 0);
    std::function<void(int, int)> rec = [&](int pos, int left) {
        if (pos == n_beams) {
            if (moment_order(cur) >= 1) out.push_back(cur);
            return;
        }
        for (int v = 0; v <= left; ++v) {
            cur[pos] = v;
            rec(pos + 1, left - v);
        }
        cur[pos] = 0;
    };
    rec(0, max_order);
    std::stable_sort(out.begin(), out.end(), [](const MomentIndex& a, const MomentIndex& b) {
        const int oa = moment_order(a), ob = moment_order(b);
        return oa != ob ? oa < ob : a < b;
    });
    return out;
}

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::model: return "model";
        case Provenance::measured: return "measured";
        case Provenance::reduced: return "reduced";
    }
    return "model";
}

Provenance parse_provenance(const std::string& s) {
    if (s == "model") return Provenance::model;
    if (s == "measured") return Provenance::measured;
    if (s == "reduced") return Provenance::reduced;
    throw ValidationError("unknown provenance '" + s + "'");
}

namespace {

std::string index_str(const MomentIndex& idx) {
    std::string s = "(";
    for (std::size_t i = 0; i < idx.size(); ++i) s += (i ? "," : "") + std::to_string(idx[i]);
    return s + ")";
}

MomentIndex from_labels(int n_beams, const std::vector<int>& beams) {
    MomentIndex idx(n_beams, 0);
    for (int b : beams) {
        if (b < 1 || b > n_beams) throw ValidationError("beam label out of range");
        ++idx[b - 1];
    }
    return idx;
}

}  // namespace

bool IntensityMoments::has(const MomentIndex& idx) const {
    return moment_order(idx) == 0 || values.count(idx) > 0;
}

double IntensityMoments::at(const MomentIndex& idx) const {
    if (static_cast<int>(idx.size()) != n_beams) throw ValidationError("moment index rank mismatch");
    if (moment_order(idx) == 0) return 1.0;
    auto it = values.find(idx);
    if (it == values.end()) throw MissingMomentError("missing intensity moment " + index_str(idx));
    return it->second;
}

double IntensityMoments::W(std::initializer_list<int> beams) const {
    return at(from_labels(n_beams, std::vector<int>(beams)));
}

double IntensityMoments::W(const std::vector<int>& beams) const { return at(from_labels(n_beams, beams)); }

void IntensityMoments::set(const MomentIndex& idx, double v) {
    values[idx] = v;
    max_order = std::max(max_order, moment_order(idx));
}

IntensityMoments IntensityMoments::restrict(const std::vector<int>& beams) const {
    IntensityMoments out;
    out.n_beams = static_cast<int>(beams.size());
    out.provenance = provenance;
    for (const auto& [idx, v] : values) {
        MomentIndex sub(beams.size(), 0);
        int kept = 0;
        for (std::size_t i = 0; i < beams.size(); ++i) kept += (sub[i] = idx.at(beams[i]));
        if (kept == moment_order(idx)) out.set(sub, v);
    }
    return out;
}

double PhotonMoments::at(const MomentIndex& idx) const {
    if (moment_order(idx) == 0) return 1.0;
    auto it = values.find(idx);
    if (it == values.end()) throw MissingMomentError("missing photon-number moment " + index_str(idx));
    return it->second;
}

// ---------------------------------------------------------------- Wick pairing

namespace {

// Operator types: 2j -> a_j^+, 2j+1 -> a_j. Counts packed 5 bits per type.
class WickEvaluator {
public:
    explicit WickEvaluator(const GaussianStateParams& p) : p_(p), types_(2 * p.n_beams) {
        if (types_ > 12) throw ValidationError("Wick evaluator supports at most 6 beams");
        contr_.resize(types_ * types_);
        for (int t = 0; t < types_; ++t)
            for (int u = 0; u < types_; ++u) contr_[t * types_ + u] = contraction(t, u);
    }

    cplx moment(const MomentIndex& idx) {
        std::vector<int> counts(types_, 0);
        for (int j = 0; j < p_.n_beams; ++j) {
            if (idx[j] > 31) throw ValidationError("moment power too large");
            counts[2 * j] = counts[2 * j + 1] = idx[j];
        }
        return eval(counts);
    }

private:
    cplx contraction(int t, int u) const {
        const int j = t / 2, k = u / 2;
        const bool sj = t % 2 == 0, sk = u % 2 == 0;  // true: creation operator
        if (j == k) {
            if (sj != sk) return p_.b[j];
            return sj ? std::conj(p_.c[j]) : p_.c[j];
        }
        if (sj && sk) return std::conj(p_.D(j, k));
        if (!sj && !sk) return p_.D(j, k);
        return sj ? -p_.Dbar(j, k) : -p_.Dbar(k, j);
    }

    static std::uint64_t key(const std::vector<int>& c) {
        std::uint64_t k = 0;
        for (int v : c) k = (k << 5) | static_cast<std::uint64_t>(v);
        return k;
    }

    cplx eval(std::vector<int>& c) {
        int t = 0;
        while (t < types_ && c[t] == 0) ++t;
        if (t == types_) return 1.0;
        const auto k = key(c);
        if (auto it = memo_.find(k); it != memo_.end()) return it->second;
        --c[t];
        cplx s = 0.0;
        for (int u = t; u < types_; ++u) {
            if (c[u] == 0) continue;
            const cplx w = contr_[t * types_ + u];
            const int mult = c[u];
            --c[u];
            if (w != 0.0) s += w * static_cast<double>(mult) * eval(c);
            ++c[u];
        }
        ++c[t];
        memo_.emplace(k, s);
        return s;
    }

    const GaussianStateParams& p_;
    int types_;
    std::vector<cplx> contr_;
    std::unordered_map<std::uint64_t, cplx> memo_;
};

double checked_real(cplx v, const MomentIndex& idx) {
    if (std::abs(v.imag()) > 1e-9 * std::max(1.0, std::abs(v.real())))
        throw std::logic_error("Wick sum for " + index_str(idx) + " has an imaginary part");
    return v.real();
}

}  // namespace

IntensityMoments moments_from_params(const GaussianStateParams& p, int max_order) {
    p.validate();
    if (max_order < 1) throw ValidationError("max_order must be >= 1");
    WickEvaluator w(p);
    IntensityMoments m;
    m.n_beams = p.n_beams;
    m.provenance = Provenance::model;
    for (const auto& idx : indices_up_to(p.n_beams, max_order)) m.set(idx, checked_real(w.moment(idx), idx));
    m.max_order = max_order;
    return m;
}

double moment_from_params(const GaussianStateParams& p, const MomentIndex& idx) {
    p.validate();
    if (static_cast<int>(idx.size()) != p.n_beams) throw ValidationError("moment index rank mismatch");
    WickEvaluator w(p);
    return checked_real(w.moment(idx), idx);
}

// ---------------------------------------------------------------- Stirling conversion

double stirling1(int n, int k) {
    if (n < 0 || k < 0) return 0.0;
    static std::vector<std::vector<double>> t{{1.0}};
    while (static_cast<int>(t.size()) <= n) {
        const int m = static_cast<int>(t.size()) - 1;
        std::vector<double> row(m + 2, 0.0);
        for (int j = 1; j <= m + 1; ++j) row[j] = t[m][j - 1] - (j <= m ? m * t[m][j] : 0.0);
        t.push_back(row);
    }
    return k <= n ? t[n][k] : 0.0;
}

double stirling2(int n, int k) {
    if (n < 0 || k < 0) return 0.0;
    static std::vector<std::vector<double>> t{{1.0}};
    while (static_cast<int>(t.size()) <= n) {
        const int m = static_cast<int>(t.size()) - 1;
        std::vector<double> row(m + 2, 0.0);
        for (int j = 1; j <= m + 1; ++j) row[j] = (j <= m ? j * t[m][j] : 0.0) + t[m][j - 1];
        t.push_back(row);
    }
    return k <= n ? t[n][k] : 0.0;
}

namespace {

// all m with 0 <= m_j <= l_j
void for_each_below(const MomentIndex& l, const std::function<void(const MomentIndex&)>& f) {
    MomentIndex m(l.size(), 0);
    while (true) {
        f(m);
        std::size_t j = 0;
        while (j < l.size() && m[j] == l[j]) m[j++] = 0;
        if (j == l.size()) return;
        ++m[j];
    }
}

template <class Src, class Coef>
std::map<MomentIndex, double> stirling_transform(const std::map<MomentIndex, double>& keys, const Src& src,
                                                 Coef coef) {
    std::map<MomentIndex, double> out;
    for (const auto& [l, unused] : keys) {
        (void)unused;
        double s = 0.0;
        for_each_below(l, [&](const MomentIndex& m) {
            double c = 1.0;
            for (std::size_t j = 0; j < l.size() && c != 0.0; ++j) c *= coef(l[j], m[j]);
            if (c != 0.0) s += c * src(m);
        });
        out[l] = s;
    }
    return out;
}

}  // namespace

IntensityMoments intensity_from_photon_moments(const PhotonMoments& pm) {
    IntensityMoments im;
    im.n_beams = pm.n_beams;
    im.provenance = Provenance::measured;
    im.values = stirling_transform(pm.values, [&](const MomentIndex& m) { return pm.at(m); }, stirling1);
    for (const auto& kv : im.values) im.max_order = std::max(im.max_order, moment_order(kv.first));
    return im;
}

PhotonMoments photon_from_intensity_moments(const IntensityMoments& im) {
    PhotonMoments pm;
    pm.n_beams = im.n_beams;
    pm.values = stirling_transform(im.values, [&](const MomentIndex& m) { return im.at(m); }, stirling2);
    for (const auto& kv : pm.values) pm.max_order = std::max(pm.max_order, moment_order(kv.first));
    return pm;
}

// ---------------------------------------------------------------- distributions

namespace {

// sum_n mass(n) prod_j v_j[l_j][n_j]; contracts the last axis first
double contract(const JointDistribution& d, const std::vector<const std::vector<double>*>& vecs) {
    std::vector<double> cur = d.mass;
    for (int a = d.n_beams - 1; a >= 0; --a) {
        const auto len = static_cast<std::size_t>(d.shape[a]);
        const std::size_t rows = cur.size() / len;
        std::vector<double> next(rows);
        for (std::size_t r = 0; r < rows; ++r) next[r] = kernels::dot(cur.data() + r * len, vecs[a]->data(), len);
        cur.swap(next);
    }
    return cur[0];
}

template <class Table>
std::map<MomentIndex, double> weighted_sums(const JointDistribution& dist, int max_order, const Table& table) {
    std::map<MomentIndex, double> out;
    for (const auto& idx : indices_up_to(dist.n_beams, max_order)) {
        std::vector<const std::vector<double>*> vecs;
        for (int a = 0; a < dist.n_beams; ++a) vecs.push_back(&table[a][idx[a]]);
        out[idx] = contract(dist, vecs);
    }
    return out;
}

// table[a][l][n] = f_l(n) on axis a
template <class F>
std::vector<std::vector<std::vector<double>>> power_table(const JointDistribution& d, int max_order, F f) {
    std::vector<std::vector<std::vector<double>>> t(d.n_beams);
    for (int a = 0; a < d.n_beams; ++a) {
        t[a].resize(max_order + 1);
        for (int l = 0; l <= max_order; ++l) {
            t[a][l].resize(d.shape[a]);
            for (int n = 0; n < d.shape[a]; ++n) t[a][l][n] = f(n, l);
        }
    }
    return t;
}

void check_input(const JointDistribution& dist, int max_order, double tol) {
    dist.validate(false);
    if (max_order < 1) throw ValidationError("max_order must be >= 1");
    if (std::abs(dist.total() - 1.0) > tol)
        throw ValidationError("distribution not normalized (total " + std::to_string(dist.total()) + ")");
}

}  // namespace

PhotonMoments moments_from_distribution(const JointDistribution& dist, int max_order, double norm_tol) {
    check_input(dist, max_order, norm_tol);
    const auto table = power_table(dist, max_order, [](int n, int l) { return std::pow(double(n), l); });
    PhotonMoments pm;
    pm.n_beams = dist.n_beams;
    pm.max_order = max_order;
    pm.values = weighted_sums(dist, max_order, table);
    if (dist.top_bin_mass() > 1e-8)
        pm.warnings.push_back("truncation tail: top-bin mass " + std::to_string(dist.top_bin_mass()) + " > 1e-8");
    return pm;
}

IntensityMoments intensity_moments_from_distribution(const JointDistribution& dist, int max_order,
                                                     double norm_tol) {
    check_input(dist, max_order, norm_tol);
    const auto table = power_table(dist, max_order, [](int n, int l) {
        double f = 1.0;
        for (int i = 0; i < l; ++i) f *= double(n - i);
        return f;
    });
    IntensityMoments im;
    im.n_beams = dist.n_beams;
    im.provenance = Provenance::measured;
    im.values = weighted_sums(dist, max_order, table);
    im.max_order = max_order;
    return im;
}

// ---------------------------------------------------------------- central moments, mode reduction

namespace {

// mode reduction cancels strongly at large M, so the internals run in long double
using Wide = long double;
using WideMap = std::map<MomentIndex, Wide>;

Wide binom(int n, int k) {
    Wide r = 1.0L;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

Wide ipow(Wide x, int e) {
    Wide r = 1.0L;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
}

std::vector<Wide> first_moments(const WideMap& m, int n_beams) {
    std::vector<Wide> mu(n_beams);
    for (int j = 0; j < n_beams; ++j) {
        MomentIndex e(n_beams, 0);
        e[j] = 1;
        auto it = m.find(e);
        if (it == m.end()) throw MissingMomentError("missing moment " + index_str(e));
        mu[j] = it->second;
    }
    return mu;
}

WideMap widen(const IntensityMoments& m) {
    WideMap out;
    for (const auto& [l, v] : m.values) out[l] = v;
    return out;
}

Wide raw_at(const WideMap& m, const MomentIndex& idx) {
    if (moment_order(idx) == 0) return 1.0L;
    auto it = m.find(idx);
    if (it == m.end()) throw MissingMomentError("missing moment " + index_str(idx));
    return it->second;
}

// Set partitions of the positions of an index whose blocks all have size >= 2;
// each partition is returned as the list of its block indices.
std::vector<std::vector<MomentIndex>> partitions_min2(const MomentIndex& l) {
    std::vector<int> label;
    for (std::size_t j = 0; j < l.size(); ++j)
        for (int r = 0; r < l[j]; ++r) label.push_back(static_cast<int>(j));
    const int n = static_cast<int>(label.size());
    std::vector<std::vector<MomentIndex>> out;
    std::vector<int> block(n, 0);
    std::function<void(int, int)> rec = [&](int pos, int used) {
        if (pos == n) {
            std::vector<MomentIndex> blocks(used, MomentIndex(l.size(), 0));
            std::vector<int> sizes(used, 0);
            for (int i = 0; i < n; ++i) {
                ++blocks[block[i]][label[i]];
                ++sizes[block[i]];
            }
            for (int s : sizes)
                if (s < 2) return;
            out.push_back(std::move(blocks));
            return;
        }
        for (int b = 0; b <= used; ++b) {
            block[pos] = b;
            rec(pos + 1, std::max(used, b + 1));
        }
    };
    if (n > 0) rec(0, 0);
    return out;
}

Wide falling(Wide m, int r) {
    Wide f = 1.0L;
    for (int i = 0; i < r; ++i) f *= (m - i);
    return f;
}

Wide central_at(const WideMap& c, const MomentIndex& idx) {
    const int o = moment_order(idx);
    if (o == 0) return 1.0L;
    if (o == 1) return 0.0L;
    auto it = c.find(idx);
    if (it == c.end()) throw MissingMomentError("missing central moment " + index_str(idx));
    return it->second;
}

WideMap to_central(const WideMap& m, int n_beams) {
    const auto mu = first_moments(m, n_beams);
    WideMap out;
    for (const auto& [l, unused] : m) {
        (void)unused;
        Wide s = 0.0L;
        for_each_below(l, [&](const MomentIndex& k) {
            Wide c = 1.0L;
            for (std::size_t j = 0; j < l.size(); ++j) c *= binom(l[j], k[j]) * ipow(-mu[j], l[j] - k[j]);
            s += c * raw_at(m, k);
        });
        out[l] = moment_order(l) == 1 ? 0.0L : s;
    }
    return out;
}

IntensityMoments to_raw(const WideMap& central, const std::vector<Wide>& means, int n_beams, int max_order,
                        Provenance prov) {
    IntensityMoments out;
    out.n_beams = n_beams;
    out.provenance = prov;
    for (const auto& [l, unused] : central) {
        (void)unused;
        if (moment_order(l) > max_order) continue;
        Wide s = 0.0L;
        for_each_below(l, [&](const MomentIndex& k) {
            Wide c = 1.0L;
            for (std::size_t j = 0; j < l.size(); ++j) c *= binom(l[j], k[j]) * ipow(means[j], l[j] - k[j]);
            s += c * central_at(central, k);
        });
        out.set(l, static_cast<double>(s));
    }
    out.max_order = max_order;
    return out;
}

}  // namespace

std::map<MomentIndex, double> raw_to_central(const IntensityMoments& m) {
    std::map<MomentIndex, double> out;
    for (const auto& [l, v] : to_central(widen(m), m.n_beams)) out[l] = static_cast<double>(v);
    return out;
}

IntensityMoments central_to_raw(const std::map<MomentIndex, double>& central, const std::vector<double>& means,
                                int n_beams, int max_order, Provenance prov) {
    WideMap c;
    for (const auto& [l, v] : central) c[l] = v;
    return to_raw(c, std::vector<Wide>(means.begin(), means.end()), n_beams, max_order, prov);
}

IntensityMoments expand_to_multi_mode(const IntensityMoments& single, double modes) {
    if (!(modes > 0)) throw ValidationError("mode number M must be > 0");
    const auto raw = widen(single);
    const auto cs = to_central(raw, single.n_beams);
    WideMap cw;
    for (const auto& [l, unused] : cs) {
        (void)unused;
        if (moment_order(l) < 2) {
            cw[l] = 0.0L;
            continue;
        }
        Wide s = 0.0L;
        for (const auto& pi : partitions_min2(l)) {
            Wide t = falling(modes, static_cast<int>(pi.size()));
            for (const auto& blk : pi) t *= central_at(cs, blk);
            s += t;
        }
        cw[l] = s;
    }
    auto mu = first_moments(raw, single.n_beams);
    for (Wide& v : mu) v *= modes;
    return to_raw(cw, mu, single.n_beams, single.max_order, Provenance::model);
}

IntensityMoments reduce_to_single_mode(const IntensityMoments& whole, double modes) {
    if (!(modes > 0)) throw ValidationError("mode number M must be > 0");
    const auto raw = widen(whole);
    const auto cw = to_central(raw, whole.n_beams);
    std::vector<MomentIndex> order;
    for (const auto& kv : cw) order.push_back(kv.first);
    std::stable_sort(order.begin(), order.end(),
                     [](const MomentIndex& a, const MomentIndex& b) { return moment_order(a) < moment_order(b); });
    WideMap cs;
    for (const auto& l : order) {
        if (moment_order(l) < 2) {
            cs[l] = 0.0L;
            continue;
        }
        Wide rest = 0.0L;
        for (const auto& pi : partitions_min2(l)) {
            if (pi.size() < 2) continue;
            Wide t = falling(modes, static_cast<int>(pi.size()));
            for (const auto& blk : pi) t *= central_at(cs, blk);
            rest += t;
        }
        cs[l] = (cw.at(l) - rest) / modes;
    }
    auto mu = first_moments(raw, whole.n_beams);
    for (Wide& v : mu) v /= modes;
    return to_raw(cs, mu, whole.n_beams, whole.max_order, Provenance::reduced);
}

// ---------------------------------------------------------------- beam symmetry

namespace {

MomentIndex permuted(const MomentIndex& l, const std::vector<int>& perm) {
    MomentIndex out(l.size());
    for (std::size_t j = 0; j < l.size(); ++j) out[perm[j]] = l[j];
    return out;
}

}  // namespace

IntensityMoments symmetrize_beams(const IntensityMoments& m) {
    std::vector<int> perm(m.n_beams);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::vector<int>> perms;
    do perms.push_back(perm);
    while (std::next_permutation(perm.begin(), perm.end()));
    IntensityMoments out = m;
    for (const auto& [l, v] : m.values) {
        (void)v;
        double s = 0.0;
        for (const auto& p : perms) s += m.at(permuted(l, p));
        out.values[l] = s / static_cast<double>(perms.size());
    }
    return out;
}

double beam_asymmetry(const IntensityMoments& m) {
    const auto sym = symmetrize_beams(m);
    double worst = 0.0;
    for (const auto& [l, v] : m.values) {
        const double a = sym.values.at(l);
        const double scale = std::max(std::abs(a), std::abs(v));
        if (scale < 1e-14) continue;
        worst = std::max(worst, std::abs(v - a) / scale);
    }
    return worst;
}

}  // namespace quinv
