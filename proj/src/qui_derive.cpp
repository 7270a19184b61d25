#include "quinv/qui_derive.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <unordered_map>

#include "quinv/errors.hpp"
#include "quinv/io.hpp"
#include "quinv/qui_formulas.hpp"

namespace quinv {

namespace {

// ------------------------------------------------------------------ phase basis
//
// Internally the parameters are B_j, C_j, C_j*, D_p, D_p*, E_p, E_p* with
// E_p = Dbar_jk for the pair p = (j<k). Wick contractions are single symbols
// with coefficient +-1 in this basis, so every moment is a polynomial with
// integer coefficients. Monomials are byte strings of exponents.

struct Layout {
    int n = 0;
    int pairs = 0;
    int size() const { return 3 * n + 4 * pairs; }
    int B(int j) const { return j; }
    int C(int j) const { return n + j; }
    int Cc(int j) const { return 2 * n + j; }
    int D(int p) const { return 3 * n + p; }
    int Dc(int p) const { return 3 * n + pairs + p; }
    int E(int p) const { return 3 * n + 2 * pairs + p; }
    int Ec(int p) const { return 3 * n + 3 * pairs + p; }
};

Layout layout_for(int n) { return Layout{n, pair_count(n)}; }

using Mono = std::string;

struct QC {
    Rational re, im;
    bool zero() const { return re == 0 && im == 0; }
};

QC operator*(const QC& a, const QC& b) { return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re}; }

using RPoly = std::map<Mono, Rational>;
using QPoly = std::map<Mono, QC>;

Mono unit_mono(const Layout& L) { return Mono(static_cast<std::size_t>(L.size()), '\0'); }

Mono mono_mul(const Mono& a, const Mono& b) {
    Mono r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = static_cast<char>(r[i] + b[i]);
    return r;
}

void add_to(RPoly& p, const Mono& m, const Rational& c) {
    if (c == 0) return;
    auto [it, fresh] = p.emplace(m, c);
    if (!fresh) {
        it->second += c;
        if (it->second == 0) p.erase(it);
    }
}

void add_to(QPoly& p, const Mono& m, const QC& c) {
    if (c.zero()) return;
    auto [it, fresh] = p.emplace(m, c);
    if (!fresh) {
        it->second.re += c.re;
        it->second.im += c.im;
        if (it->second.zero()) p.erase(it);
    }
}

RPoly rmul(const RPoly& a, const RPoly& b) {
    RPoly r;
    for (const auto& [ma, ca] : a)
        for (const auto& [mb, cb] : b) add_to(r, mono_mul(ma, mb), ca * cb);
    return r;
}

QPoly qmul(const QPoly& a, const QPoly& b) {
    QPoly r;
    for (const auto& [ma, ca] : a)
        for (const auto& [mb, cb] : b) add_to(r, mono_mul(ma, mb), ca * cb);
    return r;
}

// ------------------------------------------------------------------ symbolic Wick

class SymbolicWick {
public:
    explicit SymbolicWick(int n) : L_(layout_for(n)), types_(2 * n) {}

    const RPoly& moment(const MomentIndex& idx) {
        if (static_cast<int>(idx.size()) != L_.n) throw ValidationError("moment index rank mismatch");
        std::vector<int> c(types_, 0);
        for (int j = 0; j < L_.n; ++j) c[2 * j] = c[2 * j + 1] = idx[j];
        return eval(c);
    }

private:
    // contraction of operator types t <= u as (sign, symbol)
    std::pair<int, int> contraction(int t, int u) const {
        const int j = t / 2, k = u / 2;
        const bool sj = t % 2 == 0, sk = u % 2 == 0;
        if (j == k) {
            if (sj != sk) return {1, L_.B(j)};
            return {1, sj ? L_.Cc(j) : L_.C(j)};
        }
        const int p = pair_index(L_.n, j, k);
        if (sj && sk) return {1, L_.Dc(p)};
        if (!sj && !sk) return {1, L_.D(p)};
        // <a_j^+ a_k> = -Dbar(j,k); Dbar(j,k) = E_p for j<k, conj otherwise
        const int cre = sj ? j : k, ann = sj ? k : j;
        return {-1, cre < ann ? L_.E(p) : L_.Ec(p)};
    }

    std::string key(const std::vector<int>& c) const { return std::string(c.begin(), c.end()); }

    const RPoly& eval(std::vector<int>& c) {
        const auto k = key(c);
        if (auto it = memo_.find(k); it != memo_.end()) return it->second;
        int t = 0;
        while (t < types_ && c[t] == 0) ++t;
        RPoly out;
        if (t == types_) {
            out.emplace(unit_mono(L_), Rational(1));
        } else {
            --c[t];
            for (int u = t; u < types_; ++u) {
                if (c[u] == 0) continue;
                const auto [sign, sym] = contraction(t, u);
                const int mult = c[u];
                --c[u];
                const RPoly sub = eval(c);
                ++c[u];
                for (const auto& [m, coef] : sub) {
                    Mono mm = m;
                    ++mm[sym];
                    add_to(out, mm, coef * (sign * mult));
                }
            }
            ++c[t];
        }
        return memo_.emplace(k, std::move(out)).first->second;
    }

    Layout L_;
    int types_;
    std::unordered_map<std::string, RPoly> memo_;
};

// ------------------------------------------------------------------ symbolic invariant

QPoly lin(const Layout& L, std::initializer_list<std::pair<QC, int>> terms) {
    QPoly p;
    for (const auto& [c, sym] : terms) {
        Mono m = unit_mono(L);
        if (sym >= 0) ++m[sym];
        add_to(p, m, c);
    }
    return p;
}

// entries of Omega*A_S in the phase basis
std::vector<std::vector<QPoly>> symbolic_omega_a(const Layout& L) {
    const int n = L.n, dim = 2 * n;
    std::vector<std::vector<QPoly>> a(dim, std::vector<QPoly>(dim));
    const QC one{1, 0}, two{2, 0}, mone{-1, 0}, i{0, 1}, mi{0, -1};
    for (int j = 0; j < n; ++j) {
        a[2 * j][2 * j] = lin(L, {{one, -1}, {two, L.B(j)}, {one, L.C(j)}, {one, L.Cc(j)}});
        a[2 * j][2 * j + 1] = lin(L, {{mi, L.C(j)}, {i, L.Cc(j)}});
        a[2 * j + 1][2 * j] = a[2 * j][2 * j + 1];
        a[2 * j + 1][2 * j + 1] = lin(L, {{one, -1}, {two, L.B(j)}, {mone, L.C(j)}, {mone, L.Cc(j)}});
    }
    for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) {
            const int p = pair_index(n, j, k);
            const QPoly e00 = lin(L, {{one, L.D(p)}, {one, L.Dc(p)}, {mone, L.E(p)}, {mone, L.Ec(p)}});
            const QPoly e01 = lin(L, {{mi, L.D(p)}, {i, L.Dc(p)}, {i, L.E(p)}, {mi, L.Ec(p)}});
            const QPoly e10 = lin(L, {{mi, L.D(p)}, {i, L.Dc(p)}, {mi, L.E(p)}, {i, L.Ec(p)}});
            const QPoly e11 = lin(L, {{mone, L.D(p)}, {mone, L.Dc(p)}, {mone, L.E(p)}, {mone, L.Ec(p)}});
            a[2 * j][2 * k] = e00;
            a[2 * j][2 * k + 1] = e01;
            a[2 * j + 1][2 * k] = e10;
            a[2 * j + 1][2 * k + 1] = e11;
            a[2 * k][2 * j] = e00;
            a[2 * k + 1][2 * j] = e01;
            a[2 * k][2 * j + 1] = e10;
            a[2 * k + 1][2 * j + 1] = e11;
        }
    // Omega rows: (Omega A)_{2j} = A_{2j+1}, (Omega A)_{2j+1} = -A_{2j}
    std::vector<std::vector<QPoly>> oa(dim, std::vector<QPoly>(dim));
    for (int j = 0; j < n; ++j)
        for (int c = 0; c < dim; ++c) {
            oa[2 * j][c] = a[2 * j + 1][c];
            QPoly neg;
            for (const auto& [m, v] : a[2 * j][c]) neg.emplace(m, QC{-v.re, -v.im});
            oa[2 * j + 1][c] = neg;
        }
    return oa;
}

// determinant of the principal submatrix on `idx` by Laplace expansion with memo over column sets
QPoly principal_det(const std::vector<std::vector<QPoly>>& a, const std::vector<int>& idx, const Layout& L) {
    const int r = static_cast<int>(idx.size());
    std::unordered_map<unsigned, QPoly> memo;
    std::function<QPoly(unsigned)> det = [&](unsigned cols) -> QPoly {
        const int row = r - __builtin_popcount(cols);
        if (cols == 0) {
            QPoly one;
            one.emplace(unit_mono(L), QC{1, 0});
            return one;
        }
        if (auto it = memo.find(cols); it != memo.end()) return it->second;
        QPoly out;
        int pos = 0;
        for (int c = 0; c < r; ++c) {
            if (!(cols & (1u << c))) continue;
            const QPoly& entry = a[idx[row]][idx[c]];
            if (!entry.empty()) {
                const QPoly sub = det(cols & ~(1u << c));
                const bool neg = pos % 2 == 1;
                for (const auto& [m, v] : qmul(entry, sub))
                    add_to(out, m, neg ? QC{-v.re, -v.im} : v);
            }
            ++pos;
        }
        return memo.emplace(cols, std::move(out)).first->second;
    };
    return det((1u << r) - 1);
}

QPoly symbolic_qui_phase(int n, int k) {
    if (n < 1 || n > 4) throw ValidationError("symbolic expansion supports 1 <= N <= 4");
    if (k < 1 || k > n) throw ValidationError("QUI order out of range");
    const Layout L = layout_for(n);
    const auto oa = symbolic_omega_a(L);
    QPoly total;
    const int dim = 2 * n;
    for (unsigned mask = 0; mask < (1u << dim); ++mask) {
        if (__builtin_popcount(mask) != 2 * k) continue;
        std::vector<int> idx;
        for (int i = 0; i < dim; ++i)
            if (mask & (1u << i)) idx.push_back(i);
        for (const auto& [m, v] : principal_det(oa, idx, L)) add_to(total, m, v);
    }
    return total;
}

// ------------------------------------------------------------------ public basis

struct RealLayout {
    Layout L;
    ParamSymbol symbol(int i) const {
        const int n = L.n, P = L.pairs;
        if (i < n) return {SymKind::B, i, -1};
        if (i < 2 * n) return {SymKind::ReC, i - n, -1};
        if (i < 3 * n) return {SymKind::ImC, i - 2 * n, -1};
        static const SymKind pk[4] = {SymKind::ReD, SymKind::ImD, SymKind::ReDbar, SymKind::ImDbar};
        const int r = i - 3 * n;
        const int p = r % P;
        int j = 0, k = 1;
        for (int a = 0, q = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b, ++q)
                if (q == p) {
                    j = a;
                    k = b;
                }
        return {pk[r / P], j, k};
    }
};

ParamPolynomial to_public(const QPoly& q, int n) {
    const Layout L = layout_for(n);
    // phase symbol -> (real index, imaginary index, conjugated)
    struct Map {
        int re, im;
        bool conj;
    };
    std::vector<Map> mp(L.size());
    for (int j = 0; j < n; ++j) {
        mp[L.B(j)] = {j, -1, false};
        mp[L.C(j)] = {n + j, 2 * n + j, false};
        mp[L.Cc(j)] = {n + j, 2 * n + j, true};
    }
    const int P = L.pairs;
    for (int p = 0; p < P; ++p) {
        const int reD = 3 * n + p, imD = 3 * n + P + p, reE = 3 * n + 2 * P + p, imE = 3 * n + 3 * P + p;
        mp[L.D(p)] = {reD, imD, false};
        mp[L.Dc(p)] = {reD, imD, true};
        mp[L.E(p)] = {reE, imE, false};
        mp[L.Ec(p)] = {reE, imE, true};
    }
    QPoly acc;
    for (const auto& [m, c] : q) {
        QPoly cur;
        cur.emplace(unit_mono(L), c);
        for (int s = 0; s < L.size(); ++s) {
            for (int e = 0; e < m[s]; ++e) {
                QPoly f;
                Mono mr = unit_mono(L);
                ++mr[mp[s].re];
                add_to(f, mr, QC{1, 0});
                if (mp[s].im >= 0) {
                    Mono mi = unit_mono(L);
                    ++mi[mp[s].im];
                    add_to(f, mi, QC{0, mp[s].conj ? -1 : 1});
                }
                cur = qmul(cur, f);
            }
        }
        for (const auto& [mm, cc] : cur) add_to(acc, mm, cc);
    }
    ParamPolynomial out;
    const RealLayout rl{L};
    for (const auto& [m, c] : acc) {
        if (c.im != 0) throw std::logic_error("real-basis conversion left an imaginary coefficient");
        ParamPolynomial::Monomial mono;
        for (int s = 0; s < L.size(); ++s)
            if (m[s]) mono.emplace_back(rl.symbol(s), static_cast<int>(m[s]));
        std::sort(mono.begin(), mono.end());
        out.terms[mono] = c.re;
    }
    return out;
}

ParamPolynomial to_public(const RPoly& r, int n) {
    QPoly q;
    for (const auto& [m, c] : r) q.emplace(m, QC{c, 0});
    return to_public(q, n);
}

// ------------------------------------------------------------------ linear system

std::vector<int> op_weight(const Mono& m, const Layout& L) {
    std::vector<int> w(L.n, 0);
    for (int j = 0; j < L.n; ++j) w[j] += 2 * (m[L.B(j)] + m[L.C(j)] + m[L.Cc(j)]);
    for (int j = 0, p = 0; j < L.n; ++j)
        for (int k = j + 1; k < L.n; ++k, ++p) {
            const int e = m[L.D(p)] + m[L.Dc(p)] + m[L.E(p)] + m[L.Ec(p)];
            w[j] += e;
            w[k] += e;
        }
    return w;
}

// all multisets of nonzero indices summing to `target`, parts non-increasing
void vector_partitions(const MomentIndex& target, std::vector<MomentProduct>& out) {
    std::vector<MomentIndex> parts;
    {
        MomentIndex m(target.size(), 0);
        while (true) {
            if (moment_order(m) > 0) parts.push_back(m);
            std::size_t j = 0;
            while (j < m.size() && m[j] == target[j]) m[j++] = 0;
            if (j == m.size()) break;
            ++m[j];
        }
    }
    std::sort(parts.begin(), parts.end(), std::greater<>());
    MomentProduct cur;
    std::function<void(const MomentIndex&, std::size_t)> rec = [&](const MomentIndex& left, std::size_t from) {
        if (moment_order(left) == 0) {
            out.push_back(cur);
            return;
        }
        for (std::size_t i = from; i < parts.size(); ++i) {
            bool fits = true;
            for (std::size_t j = 0; j < left.size(); ++j) fits = fits && parts[i][j] <= left[j];
            if (!fits) continue;
            MomentIndex rest = left;
            for (std::size_t j = 0; j < left.size(); ++j) rest[j] -= parts[i][j];
            cur.push_back(parts[i]);
            rec(rest, i);
            cur.pop_back();
        }
    };
    rec(target, 0);
}

bool column_less(const MomentProduct& a, const MomentProduct& b) {
    int oa = 0, ob = 0;
    for (const auto& f : a) oa += moment_order(f);
    for (const auto& f : b) ob += moment_order(f);
    if (oa != ob) return oa < ob;
    return a < b;
}

struct Group {
    std::vector<MomentProduct> cols;
    std::vector<RPoly> col_polys;
    QPoly target;
};

// incremental row echelon form with consistency checks; rows are dense over cols + rhs
class Echelon {
public:
    explicit Echelon(std::size_t ncols) : n_(ncols) {}

    // returns false (and leaves the basis unchanged) if the row contradicts it
    bool add(std::vector<Rational> row) {
        for (const auto& [pc, prow] : rows_) {
            if (row[pc] == 0) continue;
            const Rational f = row[pc] / prow[pc];
            for (std::size_t c = 0; c <= n_; ++c)
                if (prow[c] != 0) row[c] -= f * prow[c];
        }
        std::size_t pc = 0;
        while (pc < n_ && row[pc] == 0) ++pc;
        if (pc == n_) return row[n_] == 0;
        rows_.emplace_back(pc, std::move(row));
        return true;
    }

    // particular solution with free variables set to zero
    std::vector<Rational> solve() const {
        std::vector<Rational> x(n_, Rational(0));
        for (auto it = rows_.rbegin(); it != rows_.rend(); ++it) {
            const auto& [pc, prow] = *it;
            Rational s = prow[n_];
            for (std::size_t c = pc + 1; c < n_; ++c)
                if (prow[c] != 0) s -= prow[c] * x[c];
            x[pc] = s / prow[pc];
        }
        return x;
    }

private:
    std::size_t n_;
    std::vector<std::pair<std::size_t, std::vector<Rational>>> rows_;
};

}  // namespace

// ------------------------------------------------------------------ public API

std::string symbol_name(const ParamSymbol& s) {
    static const char* names[] = {"B", "ReC", "ImC", "ReD", "ImD", "ReDbar", "ImDbar"};
    std::string out = names[static_cast<int>(s.kind)];
    out += std::to_string(s.j + 1);
    if (s.k >= 0) out += std::to_string(s.k + 1);
    return out;
}

double ParamPolynomial::evaluate(const GaussianStateParams& p) const {
    auto value = [&](const ParamSymbol& s) -> double {
        switch (s.kind) {
            case SymKind::B: return p.b.at(s.j);
            case SymKind::ReC: return p.c.at(s.j).real();
            case SymKind::ImC: return p.c.at(s.j).imag();
            case SymKind::ReD: return p.D(s.j, s.k).real();
            case SymKind::ImD: return p.D(s.j, s.k).imag();
            case SymKind::ReDbar: return p.Dbar(s.j, s.k).real();
            case SymKind::ImDbar: return p.Dbar(s.j, s.k).imag();
        }
        return 0.0;
    };
    double total = 0.0;
    for (const auto& [mono, c] : terms) {
        double v = static_cast<double>(c);
        for (const auto& [sym, e] : mono) v *= std::pow(value(sym), e);
        total += v;
    }
    return total;
}

std::string ParamPolynomial::to_string() const {
    if (terms.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [mono, c] : terms) {
        if (!first) os << (c < 0 ? " - " : " + ");
        else if (c < 0) os << "-";
        first = false;
        const Rational a = abs(c);
        if (a != 1 || mono.empty()) os << a;
        for (std::size_t i = 0; i < mono.size(); ++i) {
            if (a != 1 || i > 0) os << "*";
            os << symbol_name(mono[i].first);
            if (mono[i].second > 1) os << "^" << mono[i].second;
        }
    }
    return os.str();
}

ParamPolynomial expand_qui_symbolic(int n_beams, int k) { return to_public(symbolic_qui_phase(n_beams, k), n_beams); }

ParamPolynomial expand_moment_symbolic(const MomentIndex& idx) {
    const int n = static_cast<int>(idx.size());
    if (n < 1 || n > 4) throw ValidationError("symbolic moments support 1 to 4 beams");
    if (moment_order(idx) > 6) throw ValidationError("symbolic moments are limited to order 6");
    SymbolicWick w(n);
    return to_public(w.moment(idx), n);
}

DerivationResult derive(int n_beams, int k) {
    const auto t0 = std::chrono::steady_clock::now();
    if (n_beams < 1 || n_beams > 3) throw ValidationError("derive supports 1 <= N <= 3");
    const Layout L = layout_for(n_beams);
    const QPoly target = symbolic_qui_phase(n_beams, k);
    SymbolicWick wick(n_beams);

    DerivationResult res;
    res.n_beams = n_beams;
    res.k = k;

    std::map<MomentIndex, Group> groups;
    QPoly residue_phase;  // target - combination, accumulated
    for (const auto& [m, c] : target) {
        const auto w = op_weight(m, L);
        bool even = true;
        for (int x : w) even = even && x % 2 == 0;
        if (!even) {
            add_to(residue_phase, m, c);
            continue;
        }
        MomentIndex half(n_beams);
        for (int j = 0; j < n_beams; ++j) half[j] = w[j] / 2;
        groups[half].target.emplace(m, c);
    }

    for (auto& [half, g] : groups) {
        if (moment_order(half) == 0) {
            g.cols.push_back({});
        } else {
            vector_partitions(half, g.cols);
        }
        std::sort(g.cols.begin(), g.cols.end(), column_less);
        for (const auto& prod : g.cols) {
            RPoly p;
            p.emplace(unit_mono(L), Rational(1));
            for (const auto& f : prod) p = rmul(p, wick.moment(f));
            g.col_polys.push_back(std::move(p));
        }

        // rows: every monomial seen in the target or any column
        std::map<Mono, std::size_t> row_of;
        for (const auto& [m, c] : g.target) row_of.emplace(m, 0);
        for (const auto& p : g.col_polys)
            for (const auto& [m, c] : p) row_of.emplace(m, 0);
        std::vector<Mono> rows;
        for (auto& [m, id] : row_of) {
            id = rows.size();
            rows.push_back(m);
        }
        const std::size_t nc = g.cols.size();
        std::vector<std::vector<Rational>> a(rows.size(), std::vector<Rational>(nc + 1, Rational(0)));
        for (std::size_t c = 0; c < nc; ++c)
            for (const auto& [m, v] : g.col_polys[c]) a[row_of[m]][c] = v;
        std::vector<bool> dropped(rows.size(), false);
        for (const auto& [m, v] : g.target) {
            a[row_of[m]][nc] = v.re;  // imaginary parts are unreachable from real moment products
        }
        res.equations += rows.size();
        res.unknowns += nc;

        // classes of proportional rows whose right-hand sides disagree cannot be satisfied
        // by any combination; they go to the residue as a whole
        std::map<std::vector<std::pair<std::size_t, Rational>>, std::vector<std::size_t>> classes;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            std::vector<std::pair<std::size_t, Rational>> key;
            Rational lead = 0;
            for (std::size_t c = 0; c < nc; ++c)
                if (a[r][c] != 0) {
                    if (lead == 0) lead = a[r][c];
                    key.emplace_back(c, a[r][c] / lead);
                }
            classes[key].push_back(r);
        }
        for (const auto& [key, members] : classes) {
            bool consistent = true;
            if (key.empty()) {
                for (auto r : members) consistent = consistent && a[r][nc] == 0;
            } else {
                const std::size_t c0 = key.front().first;
                const Rational ratio = a[members.front()][nc] / a[members.front()][c0];
                for (auto r : members) consistent = consistent && a[r][nc] / a[r][c0] == ratio;
            }
            if (!consistent)
                for (auto r : members) dropped[r] = true;
        }

        Echelon ech(nc);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (dropped[r]) continue;
            if (!ech.add(a[r])) dropped[r] = true;  // greedy fallback
        }
        for (bool d : dropped) res.contradictory_rows += d;

        const auto x = ech.solve();
        RPoly combination;
        for (std::size_t c = 0; c < nc; ++c) {
            if (x[c] == 0) continue;
            res.coefficients[g.cols[c]] = x[c];
            for (const auto& [m, v] : g.col_polys[c]) add_to(combination, m, v * x[c]);
        }
        for (const auto& [m, v] : g.target) add_to(residue_phase, m, v);
        for (const auto& [m, v] : combination) add_to(residue_phase, m, QC{-v, 0});
    }

    // sign convention: Delta = combination - residue
    QPoly residue;
    for (const auto& [m, v] : residue_phase) residue.emplace(m, QC{-v.re, -v.im});
    res.residue = to_public(residue, n_beams);
    res.solvable = res.residue.empty();
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

double evaluate_combination(const DerivationResult& r, const IntensityMoments& m) {
    double s = 0.0;
    for (const auto& [prod, c] : r.coefficients) {
        double v = static_cast<double>(c);
        for (const auto& f : prod) v *= m.at(f);
        s += v;
    }
    return s;
}

namespace {

nlohmann::json rational_json(const Rational& r) {
    return nlohmann::json::array(
        {boost::multiprecision::numerator(r).str(), boost::multiprecision::denominator(r).str()});
}

Rational rational_from_json(const nlohmann::json& j) {
    auto part = [](const nlohmann::json& v) {
        return v.is_string() ? boost::multiprecision::cpp_int(v.get<std::string>())
                             : boost::multiprecision::cpp_int(v.get<long long>());
    };
    return Rational(part(j.at(0)), part(j.at(1)));
}

}  // namespace

nlohmann::json emit_term_table(const DerivationResult& r) {
    using nlohmann::json;
    json terms = json::array();
    std::vector<std::pair<MomentProduct, Rational>> sorted(r.coefficients.begin(), r.coefficients.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) { return column_less(a.first, b.first); });
    for (const auto& [prod, c] : sorted) {
        json factors = json::array();
        for (const auto& f : prod) factors.push_back(f);
        terms.push_back({{"coefficient", rational_json(c)}, {"factors", factors}});
    }
    json residue = json::array();
    for (const auto& [mono, c] : r.residue.terms) {
        json mj = json::array();
        for (const auto& [sym, e] : mono) mj.push_back(json::array({symbol_name(sym), e}));
        residue.push_back({{"coefficient", rational_json(c)}, {"monomial", mj}});
    }
    json doc = {{"target", {{"N", r.n_beams}, {"k", r.k}}},
                {"solvable", r.solvable},
                {"measurable", terms},
                {"residue", residue},
                {"residue_sign", "Delta = measurable - residue"}};
    doc["content_hash"] = io::hex64(io::fnv1a64(doc.dump()));
    return doc;
}

DerivationResult load_term_table(const nlohmann::json& j) {
    DerivationResult r;
    r.n_beams = j.at("target").at("N").get<int>();
    r.k = j.at("target").at("k").get<int>();
    for (const auto& t : j.at("measurable")) {
        MomentProduct prod;
        for (const auto& f : t.at("factors")) prod.push_back(f.get<MomentIndex>());
        r.coefficients[prod] = rational_from_json(t.at("coefficient"));
    }
    std::map<std::string, ParamSymbol> by_name;
    for (int kind = 0; kind < 7; ++kind)
        for (int a = 0; a < r.n_beams; ++a) {
            if (kind < 3) {
                ParamSymbol s{static_cast<SymKind>(kind), a, -1};
                by_name[symbol_name(s)] = s;
            } else {
                for (int b = a + 1; b < r.n_beams; ++b) {
                    ParamSymbol s{static_cast<SymKind>(kind), a, b};
                    by_name[symbol_name(s)] = s;
                }
            }
        }
    for (const auto& t : j.at("residue")) {
        ParamPolynomial::Monomial mono;
        for (const auto& f : t.at("monomial")) {
            auto it = by_name.find(f.at(0).get<std::string>());
            if (it == by_name.end()) throw ValidationError("unknown residue symbol in term table");
            mono.emplace_back(it->second, f.at(1).get<int>());
        }
        std::sort(mono.begin(), mono.end());
        r.residue.terms[mono] = rational_from_json(t.at("coefficient"));
    }
    r.solvable = r.residue.empty();
    return r;
}

std::map<MomentProduct, Rational> builtin_combination(int n_beams, int k) {
    const FormulaTable* t = nullptr;
    if (k == n_beams) t = &top_invariant_table();
    else if (k == 1) t = &delta_n1_measurable_table();
    else if (n_beams == 3 && k == 2) t = &delta32_measurable_table();
    else throw ValidationError("no built-in closed form for this target");

    std::map<MomentProduct, Rational> out;
    auto add = [&](MomentProduct p, const Rational& c) {
        std::sort(p.begin(), p.end(), std::greater<>());
        out[p] += c;
        if (out[p] == 0) out.erase(p);
    };
    // constant: as in evaluate_table
    Rational c0 = 1;
    if (t == &delta_n1_measurable_table()) c0 = n_beams;
    else if (t == &delta32_measurable_table()) c0 = n_beams * (n_beams - 1) / 2;
    add({}, c0);
    for (const auto& fam : t->families) {
        if (fam.arity > n_beams) continue;
        std::vector<int> beams(n_beams);
        for (int i = 0; i < n_beams; ++i) beams[i] = i;
        std::vector<std::vector<int>> tuples;
        std::function<void(std::vector<int>&)> rec = [&](std::vector<int>& cur) {
            if (static_cast<int>(cur.size()) == fam.arity) {
                tuples.push_back(cur);
                return;
            }
            for (int b : beams)
                if (std::find(cur.begin(), cur.end(), b) == cur.end()) {
                    cur.push_back(b);
                    rec(cur);
                    cur.pop_back();
                }
        };
        std::vector<int> cur;
        rec(cur);
        for (const auto& term : fam.terms)
            for (const auto& tup : tuples) {
                MomentProduct prod;
                for (const auto& f : term.factors) {
                    MomentIndex idx(n_beams, 0);
                    for (char ch : f) ++idx[tup[ch - 'a']];
                    prod.push_back(idx);
                }
                add(prod, Rational(term.num, term.den));
            }
    }
    return out;
}

}  // namespace quinv
