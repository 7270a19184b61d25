#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "quinv/detection.hpp"
#include "quinv/distribution.hpp"
#include "quinv/gauss_core.hpp"
#include "quinv/moments.hpp"
#include "quinv/noise_model.hpp"

// File formats. Text files start with '#' metadata lines: a "config" line with
// the run configuration as compact JSON and a "hash" line with the FNV-1a-64 of
// everything after the header. Binary files are little-endian.

namespace quinv::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a64(const std::string& data);
std::string hex64(std::uint64_t v);

// write to a sibling temporary, then rename over the target
void write_atomic(const fs::path& path, const std::string& content);
std::string read_file(const fs::path& path);

// header + body for text outputs
std::string with_header(const json& config, const std::string& body);

// ---- Gaussian parameters (JSON)
// {"n_beams":N, "B":[...], "C":[[re,im],...], "D":{"12":[re,im],...}, "Dbar":{...}}
// with 1-based pair keys; plain arrays in pair order are accepted too. An optional "displacement"
// must be all zero since the model is zero-mean
json params_to_json(const GaussianStateParams& p);
GaussianStateParams params_from_json(const json& j);

json model_to_json(const TwbModelParams& p);
TwbModelParams model_from_json(const json& j, TwbModelParams base = {});

// ---- intensity moments (CSV): l1,...,lN,value
std::string moments_to_csv(const IntensityMoments& m);
IntensityMoments moments_from_csv(const std::string& text);

// ---- distributions
// CSV: c1,...,cN,mass over nonzero entries; the header carries kind and shape
std::string distribution_to_csv(const JointDistribution& d);
JointDistribution distribution_from_csv(const std::string& text);
// binary "QJD1": magic, u32 kind, u32 rank, u32 shape[rank], f64 mass[]
std::string distribution_to_binary(const JointDistribution& d);
JointDistribution distribution_from_binary(const std::string& bytes);
// by extension: .bin binary, anything else CSV
JointDistribution load_distribution(const fs::path& path);

// ---- channels
// CSV: signal_clicks,idler_clicks per window
std::string channels_to_csv(const PhotocountChannels& ch);
PhotocountChannels channels_from_csv(const std::string& text);
// binary "QCH1": magic, u64 windows, then (signal, idler) byte pairs
std::string channels_to_binary(const PhotocountChannels& ch);
PhotocountChannels channels_from_binary(const std::string& bytes);
PhotocountChannels load_channels(const fs::path& path);

}  // namespace quinv::io
