#pragma once

// Dataset manifests: content-hashed file lists with a seeded
// train/validation/test split.

#include <algorithm>
#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfwm/common.hpp"
#include "sfwm/image.hpp"
#include "sfwm/image_io.hpp"
#include "sfwm/imageops.hpp"
#include "sfwm/io.hpp"

namespace sfwm {

enum class split { train = 0, val = 1, test = 2 };

inline const char* split_name(split s) {
  switch (s) {
    case split::train: return "train";
    case split::val: return "val";
    case split::test: return "test";
  }
  return "?";
}

inline split split_from_name(const std::string& s) {
  if (s == "train") return split::train;
  if (s == "val") return split::val;
  if (s == "test") return split::test;
  throw format_error("unknown split '" + s + "'");
}

struct manifest_entry {
  std::string path;  // relative to the manifest root
  std::string sha256;
  split part = split::train;
};

struct dataset_manifest {
  std::string root;
  std::uint64_t split_seed = 0;
  std::array<double, 3> fractions = {0.6, 0.2, 0.2};
  std::vector<manifest_entry> files;
  std::vector<std::string> skipped;  // warnings emitted at ingest

  std::vector<const manifest_entry*> part(split s) const {
    std::vector<const manifest_entry*> out;
    for (const auto& f : files)
      if (f.part == s) out.push_back(&f);
    return out;
  }

  // Digest over the file list and split assignment.
  std::string content_hash() const {
    std::string acc = std::to_string(split_seed);
    for (const auto& f : files) acc += "\n" + f.path + " " + f.sha256 + " " + split_name(f.part);
    return io::sha256_hex(acc);
  }
};

// Split sizes for n items: floor each share, then fill any empty split
// (train, val, test order) while items remain, then hand the rest out one
// at a time starting with train.
inline std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<double, 3>& fractions = {0.6, 0.2, 0.2}) {
  std::array<std::size_t, 3> sz{};
  std::size_t used = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    sz[i] = static_cast<std::size_t>(std::floor(fractions[i] * static_cast<double>(n) + 1e-9));
    used += sz[i];
  }
  if (used > n) throw parameter_error("split fractions exceed 1");
  std::size_t rest = n - used;
  for (std::size_t i = 0; i < 3 && rest > 0; ++i)
    if (sz[i] == 0 && fractions[i] > 0) {
      ++sz[i];
      --rest;
    }
  for (std::size_t i = 0; rest > 0; i = (i + 1) % 3)
    if (fractions[i] > 0) {
      ++sz[i];
      --rest;
    }
  return sz;
}

// Seeded assignment: a Fisher-Yates permutation of the sorted list, cut into
// train, val and test in that order.
inline std::vector<split> assign_splits(std::size_t n, std::uint64_t seed,
                                        const std::array<double, 3>& fractions = {0.6, 0.2, 0.2}) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  rng_t rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[uniform_index(rng, i)]);
  const auto sz = split_sizes(n, fractions);
  std::vector<split> out(n);
  for (std::size_t k = 0; k < n; ++k)
    out[perm[k]] = k < sz[0] ? split::train : k < sz[0] + sz[1] ? split::val : split::test;
  return out;
}

inline bool is_image_path(const std::filesystem::path& p) {
  auto e = p.extension().string();
  for (auto& ch : e) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return e == ".png" || e == ".ppm";
}

// Scans `dir` (non-recursive) for PNG/PPM files. Unreadable or undersized
// images are listed in `skipped`; no usable image at all is fatal.
inline dataset_manifest ingest(const std::filesystem::path& dir, std::uint64_t seed) {
  if (!std::filesystem::is_directory(dir)) throw format_error("not a directory: " + dir.string());
  std::vector<std::filesystem::path> paths;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && is_image_path(e.path())) paths.push_back(e.path());
  std::sort(paths.begin(), paths.end());

  dataset_manifest m;
  m.root = std::filesystem::absolute(dir).lexically_normal().string();
  m.split_seed = seed;
  for (const auto& p : paths) {
    const auto name = p.filename().string();
    try {
      const auto bytes = io::read_file(p);
      (void)load_image(p.string());
      m.files.push_back({name, io::sha256_hex(bytes), split::train});
    } catch (const error& e) {
      m.skipped.push_back(name + ": " + e.what());
    }
  }
  if (m.files.empty()) throw format_error("no usable images in " + dir.string());
  const auto parts = assign_splits(m.files.size(), seed, m.fractions);
  for (std::size_t i = 0; i < parts.size(); ++i) m.files[i].part = parts[i];
  return m;
}

inline nlohmann::json to_json(const dataset_manifest& m) {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : m.files) files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"split", split_name(f.part)}});
  const auto sz = m.part(split::train).size(), sv = m.part(split::val).size(), st = m.part(split::test).size();
  return {{"format", "sfwm-manifest"}, {"version", 1},           {"root", m.root},
          {"split_seed", m.split_seed}, {"fractions", m.fractions}, {"sizes", {{"train", sz}, {"val", sv}, {"test", st}}},
          {"manifest_hash", m.content_hash()}, {"files", files},  {"skipped", m.skipped}};
}

inline dataset_manifest manifest_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "sfwm-manifest") throw format_error("not a dataset manifest");
  dataset_manifest m;
  m.root = j.at("root").get<std::string>();
  m.split_seed = j.at("split_seed").get<std::uint64_t>();
  m.fractions = j.at("fractions").get<std::array<double, 3>>();
  for (const auto& f : j.at("files"))
    m.files.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>(),
                       split_from_name(f.at("split").get<std::string>())});
  if (j.contains("skipped")) m.skipped = j.at("skipped").get<std::vector<std::string>>();
  if (j.contains("manifest_hash") && j.at("manifest_hash").get<std::string>() != m.content_hash())
    throw format_error("manifest hash does not match its file list");
  return m;
}

inline void save_manifest(const std::filesystem::path& path, const dataset_manifest& m) {
  io::atomic_write(path, to_json(m).dump(2) + "\n");
}

inline dataset_manifest load_manifest(const std::filesystem::path& path) {
  try {
    return manifest_from_json(nlohmann::json::parse(io::read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw format_error("malformed manifest " + path.string() + ": " + e.what());
  }
}

// Loads one split, verifying content hashes, resized to size x size.
inline std::vector<image> load_split(const dataset_manifest& m, split s, std::size_t size) {
  std::vector<image> out;
  for (const auto* f : m.part(s)) {
    const auto path = std::filesystem::path(m.root) / f->path;
    const auto bytes = io::read_file(path);
    if (io::sha256_hex(bytes) != f->sha256) throw format_error("content hash mismatch for " + path.string());
    auto img = load_image(path.string());
    if (img.height() != size || img.width() != size) img = resize_to(img, size, size);
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace sfwm
