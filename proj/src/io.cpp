#include "quinv/io.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "quinv/errors.hpp"

namespace quinv::io {

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_atomic(const fs::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string with_header(const json& config, const std::string& body) {
    return "# config: " + config.dump() + "\n# hash: " + hex64(fnv1a64(body)) + "\n" + body;
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, int line) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw ValidationError("line " + std::to_string(line) + ": '" + s + "' is not a number");
    return v;
}

int parse_int(const std::string& s, int line) {
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0')
        throw ValidationError("line " + std::to_string(line) + ": '" + s + "' is not an integer");
    return static_cast<int>(v);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r' && c != ' ') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

// '#' lines of the form "# key=value key=value" collected into a map;
// data rows returned with their line numbers, the column-name row skipped
struct CsvText {
    std::map<std::string, std::string> meta;
    std::vector<std::pair<int, std::vector<std::string>>> rows;
};

CsvText parse_csv(const std::string& text) {
    CsvText t;
    std::istringstream in(text);
    std::string line;
    int no = 0;
    bool names_seen = false;
    while (std::getline(in, line)) {
        ++no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream kv(line.substr(1));
            std::string tok;
            while (kv >> tok) {
                const auto eq = tok.find('=');
                if (eq != std::string::npos) t.meta[tok.substr(0, eq)] = tok.substr(eq + 1);
            }
            continue;
        }
        const char c0 = line[0];
        if (!names_seen && !(std::isdigit(static_cast<unsigned char>(c0)) || c0 == '-' || c0 == '+' || c0 == '.')) {
            names_seen = true;
            continue;
        }
        t.rows.emplace_back(no, split(line, ','));
    }
    return t;
}

std::string need_meta(const CsvText& t, const std::string& key) {
    auto it = t.meta.find(key);
    if (it == t.meta.end()) throw ValidationError("missing '# " + key + "=' header line");
    return it->second;
}

void put_u32(std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s += static_cast<char>((v >> (8 * i)) & 0xff);
}
void put_u64(std::string& s, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) s += static_cast<char>((v >> (8 * i)) & 0xff);
}

struct Reader {
    const std::string& b;
    std::size_t pos = 0;
    std::uint64_t take(int bytes) {
        if (pos + bytes > b.size()) throw ValidationError("binary file truncated");
        std::uint64_t v = 0;
        for (int i = 0; i < bytes; ++i) v |= std::uint64_t(static_cast<unsigned char>(b[pos + i])) << (8 * i);
        pos += bytes;
        return v;
    }
};

json cplx_array(const std::vector<cplx>& v) {
    json a = json::array();
    for (auto z : v) a.push_back({z.real(), z.imag()});
    return a;
}

cplx read_one(const json& v, const char* key);

std::vector<cplx> read_cplx(const json& j, const char* key, std::size_t n) {
    std::vector<cplx> out(n, 0.0);
    if (!j.contains(key)) return out;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != n)
        throw ValidationError(std::string("'") + key + "' must hold " + std::to_string(n) + " entries");
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = read_one(a[i], key);
    }
    return out;
}

cplx read_one(const json& v, const char* key) {
    if (v.is_number()) return v.get<double>();
    if (v.is_array() && v.size() == 2) return {v[0].get<double>(), v[1].get<double>()};
    throw ValidationError(std::string("'") + key + "' entries must be numbers or [re, im]");
}

std::vector<cplx> read_pairs(const json& j, const char* key, int n) {
    if (!j.contains(key) || !j.at(key).is_object()) return read_cplx(j, key, pair_count(n));
    std::vector<cplx> out(pair_count(n), 0.0);
    for (const auto& [name, v] : j.at(key).items()) {
        if (name.size() != 2) throw ValidationError(std::string("'") + key + "' keys look like \"12\"");
        const int a = name[0] - '1', b = name[1] - '1';
        if (a < 0 || b < 0 || a >= n || b >= n || a == b)
            throw ValidationError(std::string("'") + key + "' has an invalid pair '" + name + "'");
        cplx z = read_one(v, key);
        // Dbar_kj = conj(Dbar_jk)
        if (a > b && std::string(key) == "Dbar") z = std::conj(z);
        out[pair_index(n, std::min(a, b), std::max(a, b))] = z;
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------- params

json params_to_json(const GaussianStateParams& p) {
    auto pairs = [&](const std::vector<cplx>& v) {
        json o = json::object();
        for (int j = 0; j < p.n_beams; ++j)
            for (int k = j + 1; k < p.n_beams; ++k) {
                const cplx z = v[pair_index(p.n_beams, j, k)];
                o[std::to_string(j + 1) + std::to_string(k + 1)] = {z.real(), z.imag()};
            }
        return o;
    };
    return {{"n_beams", p.n_beams}, {"B", p.b}, {"C", cplx_array(p.c)}, {"D", pairs(p.d)}, {"Dbar", pairs(p.d_bar)}};
}

GaussianStateParams params_from_json(const json& j) {
    try {
        const int n = j.at("n_beams").get<int>();
        if (n < 1 || n > 3) throw ValidationError("n_beams must be 1, 2 or 3");
        if (j.contains("displacement"))
            for (const auto& v : j.at("displacement"))
                if (v.get<double>() != 0.0) throw ValidationError("nonzero displacement is not supported");
        auto p = GaussianStateParams::vacuum(n);
        const auto& b = j.at("B");
        if (!b.is_array() || static_cast<int>(b.size()) != n) throw ValidationError("'B' must hold n_beams entries");
        for (int i = 0; i < n; ++i) p.b[i] = b[i].get<double>();
        p.c = read_cplx(j, "C", n);
        p.d = read_pairs(j, "D", n);
        p.d_bar = read_pairs(j, "Dbar", n);
        p.validate();
        return p;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("parameter file: ") + e.what());
    }
}

json model_to_json(const TwbModelParams& p) {
    return {{"m_p", p.m_p},     {"m_s", p.m_s},     {"m_i", p.m_i}, {"b_p", p.b_p}, {"b_s", p.b_s},
            {"b_i", p.b_i},     {"eta_s", p.eta_s}, {"eta_i", p.eta_i}, {"d_s", p.d_s}, {"d_i", p.d_i}};
}

TwbModelParams model_from_json(const json& j, TwbModelParams p) {
    try {
        auto get = [&](const char* k, double& v) {
            if (j.contains(k)) v = j.at(k).get<double>();
        };
        get("m_p", p.m_p);
        get("m_s", p.m_s);
        get("m_i", p.m_i);
        get("b_p", p.b_p);
        get("b_s", p.b_s);
        get("b_i", p.b_i);
        get("eta_s", p.eta_s);
        get("eta_i", p.eta_i);
        get("d_s", p.d_s);
        get("d_i", p.d_i);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("model parameters: ") + e.what());
    }
    p.validate();
    return p;
}

// ---------------------------------------------------------------- moments

std::string moments_to_csv(const IntensityMoments& m) {
    std::string s = "# n_beams=" + std::to_string(m.n_beams) + " max_order=" + std::to_string(m.max_order) +
                    " provenance=" + provenance_name(m.provenance) + "\n";
    for (int j = 1; j <= m.n_beams; ++j) s += "l" + std::to_string(j) + ",";
    s += "value\n";
    for (const auto& [idx, v] : m.values) {
        for (int l : idx) s += std::to_string(l) + ",";
        s += num(v) + "\n";
    }
    return s;
}

IntensityMoments moments_from_csv(const std::string& text) {
    const auto t = parse_csv(text);
    IntensityMoments m;
    m.n_beams = parse_int(need_meta(t, "n_beams"), 0);
    if (m.n_beams < 1 || m.n_beams > 3) throw ValidationError("moments file: n_beams must be 1, 2 or 3");
    if (t.meta.count("provenance")) m.provenance = parse_provenance(t.meta.at("provenance"));
    for (const auto& [no, cols] : t.rows) {
        if (static_cast<int>(cols.size()) != m.n_beams + 1)
            throw ValidationError("line " + std::to_string(no) + ": expected " + std::to_string(m.n_beams + 1) +
                                  " columns");
        MomentIndex idx(m.n_beams);
        for (int j = 0; j < m.n_beams; ++j) {
            idx[j] = parse_int(cols[j], no);
            if (idx[j] < 0) throw ValidationError("line " + std::to_string(no) + ": negative power");
        }
        m.set(idx, parse_double(cols.back(), no));
        m.max_order = std::max(m.max_order, moment_order(idx));
    }
    if (t.meta.count("max_order")) m.max_order = std::max(m.max_order, parse_int(t.meta.at("max_order"), 0));
    return m;
}

// ---------------------------------------------------------------- distributions

std::string distribution_to_csv(const JointDistribution& d) {
    std::string s = std::string("# kind=") + dist_kind_name(d.kind) + " shape=";
    for (int a = 0; a < d.n_beams; ++a) s += (a ? "," : "") + std::to_string(d.shape[a]);
    s += "\n";
    const char* letter = d.kind == DistKind::photocount_histogram ? "c" : "n";
    for (int a = 1; a <= d.n_beams; ++a) s += letter + std::to_string(a) + ",";
    s += "mass\n";
    std::vector<int> idx(d.n_beams, 0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d.mass[i] != 0.0) {
            for (int v : idx) s += std::to_string(v) + ",";
            s += num(d.mass[i]) + "\n";
        }
        for (int a = d.n_beams - 1; a >= 0; --a) {
            if (++idx[a] < d.shape[a]) break;
            idx[a] = 0;
        }
    }
    return s;
}

JointDistribution distribution_from_csv(const std::string& text) {
    const auto t = parse_csv(text);
    std::vector<int> shape;
    if (t.meta.count("shape")) {
        for (const auto& s : split(t.meta.at("shape"), ',')) shape.push_back(parse_int(s, 0));
    } else {
        // infer from the data
        for (const auto& [no, cols] : t.rows) {
            if (shape.empty()) shape.assign(cols.size() - 1, 1);
            for (std::size_t a = 0; a + 1 < cols.size() && a < shape.size(); ++a)
                shape[a] = std::max(shape[a], parse_int(cols[a], no) + 1);
        }
    }
    if (shape.empty() || shape.size() > 3) throw ValidationError("distribution file: 1 to 3 axes required");
    const DistKind kind =
        t.meta.count("kind") ? parse_dist_kind(t.meta.at("kind")) : DistKind::photocount_histogram;
    JointDistribution d(shape, kind);
    for (const auto& [no, cols] : t.rows) {
        if (cols.size() != shape.size() + 1)
            throw ValidationError("line " + std::to_string(no) + ": expected " + std::to_string(shape.size() + 1) +
                                  " columns");
        std::vector<int> idx(shape.size());
        for (std::size_t a = 0; a < shape.size(); ++a) {
            idx[a] = parse_int(cols[a], no);
            if (idx[a] < 0 || idx[a] >= shape[a])
                throw ValidationError("line " + std::to_string(no) + ": index outside the declared shape");
        }
        const double v = parse_double(cols.back(), no);
        if (!(v >= 0)) throw ValidationError("line " + std::to_string(no) + ": negative mass");
        d.at(idx) += v;
    }
    return d;
}

std::string distribution_to_binary(const JointDistribution& d) {
    std::string s = "QJD1";
    put_u32(s, d.kind == DistKind::photocount_histogram ? 0 : 1);
    put_u32(s, static_cast<std::uint32_t>(d.n_beams));
    for (int v : d.shape) put_u32(s, static_cast<std::uint32_t>(v));
    for (double v : d.mass) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        put_u64(s, bits);
    }
    return s;
}

JointDistribution distribution_from_binary(const std::string& bytes) {
    if (bytes.compare(0, 4, "QJD1") != 0) throw ValidationError("not a QJD1 distribution file");
    Reader r{bytes, 4};
    const auto kind = r.take(4);
    const auto rank = r.take(4);
    if (kind > 1 || rank < 1 || rank > 3) throw ValidationError("QJD1 header out of range");
    std::vector<int> shape(rank);
    std::size_t n = 1;
    for (auto& s : shape) {
        s = static_cast<int>(r.take(4));
        if (s < 1 || s > 100000) throw ValidationError("QJD1 axis size out of range");
        n *= static_cast<std::size_t>(s);
    }
    if (bytes.size() != r.pos + 8 * n) throw ValidationError("QJD1 payload size does not match its shape");
    JointDistribution d(shape, kind == 0 ? DistKind::photocount_histogram : DistKind::photon_distribution);
    for (auto& v : d.mass) {
        const std::uint64_t bits = r.take(8);
        std::memcpy(&v, &bits, 8);
    }
    return d;
}

JointDistribution load_distribution(const fs::path& path) {
    const auto data = read_file(path);
    return path.extension() == ".bin" ? distribution_from_binary(data) : distribution_from_csv(data);
}

// ---------------------------------------------------------------- channels

std::string channels_to_csv(const PhotocountChannels& ch) {
    std::string s = "signal_clicks,idler_clicks\n";
    s.reserve(ch.size() * 4 + 32);
    for (std::size_t i = 0; i < ch.size(); ++i) {
        s += std::to_string(ch.signal[i]);
        s += ',';
        s += std::to_string(ch.idler[i]);
        s += '\n';
    }
    return s;
}

PhotocountChannels channels_from_csv(const std::string& text) {
    const auto t = parse_csv(text);
    PhotocountChannels ch;
    for (const auto& [no, cols] : t.rows) {
        if (cols.size() != 2) throw ValidationError("line " + std::to_string(no) + ": expected 2 columns");
        const int s = parse_int(cols[0], no), i = parse_int(cols[1], no);
        if (s < 0 || s > 255 || i < 0 || i > 255)
            throw ValidationError("line " + std::to_string(no) + ": click count outside 0..255");
        ch.signal.push_back(static_cast<std::uint8_t>(s));
        ch.idler.push_back(static_cast<std::uint8_t>(i));
    }
    return ch;
}

std::string channels_to_binary(const PhotocountChannels& ch) {
    ch.validate();
    std::string s = "QCH1";
    put_u64(s, ch.size());
    for (std::size_t i = 0; i < ch.size(); ++i) {
        s += static_cast<char>(ch.signal[i]);
        s += static_cast<char>(ch.idler[i]);
    }
    return s;
}

PhotocountChannels channels_from_binary(const std::string& bytes) {
    if (bytes.compare(0, 4, "QCH1") != 0) throw ValidationError("not a QCH1 channel file");
    Reader r{bytes, 4};
    const auto n = r.take(8);
    if (bytes.size() != 12 + 2 * n) throw ValidationError("QCH1 payload size does not match its window count");
    PhotocountChannels ch;
    ch.signal.resize(n);
    ch.idler.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ch.signal[i] = static_cast<std::uint8_t>(bytes[12 + 2 * i]);
        ch.idler[i] = static_cast<std::uint8_t>(bytes[13 + 2 * i]);
    }
    return ch;
}

PhotocountChannels load_channels(const fs::path& path) {
    const auto data = read_file(path);
    return path.extension() == ".bin" ? channels_from_binary(data) : channels_from_csv(data);
}

}  // namespace quinv::io
