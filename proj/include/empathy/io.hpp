// Copyright 2026 The Empathic Games Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Text helpers shared by the file formats: shortest round-trip number
// formatting, a minimal CSV reader/writer, the key-value config format and a
// stable content hash.

#ifndef EMPATHY_IO_HPP_
#define EMPATHY_IO_HPP_

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "empathy/domain.hpp"

namespace empathy {

class IoError : public Error {
 public:
  using Error::Error;
};

// Shortest decimal representation that parses back to the same double.
inline std::string FormatDouble(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw IoError("cannot format number");
  return std::string(buf, end);
}

inline double ParseDouble(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t'))
    text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' ||
                           text.back() == '\r'))
    text.remove_suffix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw IoError("cannot parse number '" + std::string(text) + "'");
  return value;
}

// 64-bit FNV-1a. Used to address artifacts by content.
inline std::uint64_t Fnv1a(std::string_view data,
                           std::uint64_t hash = 14695981039346656037ull) {
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

inline std::string HexDigest(std::uint64_t hash) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int k = 15; k >= 0; --k) {
    out[static_cast<std::size_t>(k)] = kDigits[hash & 0xf];
    hash >>= 4;
  }
  return out;
}

inline std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void WriteFile(const std::filesystem::path& path, std::string_view data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t Column(std::string_view name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return c;
    throw IoError("missing CSV column '" + std::string(name) + "'");
  }
};

inline std::vector<std::string> SplitCsvLine(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r')
    out.back().pop_back();
  return out;
}

inline CsvTable ParseCsv(std::string_view text) {
  CsvTable table;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    auto fields = SplitCsvLine(line);
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != table.header.size())
        throw IoError("CSV row width does not match header");
      table.rows.push_back(std::move(fields));
    }
  }
  return table;
}

inline void AppendCsvRow(std::string& out, const std::vector<std::string>& cells) {
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (c) out += ',';
    out += cells[c];
  }
  out += '\n';
}

// --- Game config key-value format -------------------------------------------
//
//   # comment
//   collision_penalty = 10000
//   road_length = 70
//
// Keys absent from the file keep their defaults. Unknown keys are an error.

namespace detail {

template <typename Fn>
void ForEachConfigField(GameConfig& cfg, Fn&& fn) {
  fn("collision_penalty", cfg.collision_penalty);
  fn("sigmoid_shape", cfg.sigmoid_shape);
  fn("progress_weight", cfg.progress_weight);
  fn("road_length", cfg.road_length);
  fn("car_length", cfg.car_length);
  fn("car_width", cfg.car_width);
  fn("reference_velocity", cfg.reference_velocity);
  fn("horizon", cfg.horizon);
  fn("dt", cfg.dt);
  fn("action_min", cfg.action_min);
  fn("action_max", cfg.action_max);
  fn("action_step", cfg.action_step);
  fn("epsilon", cfg.epsilon);
}

}  // namespace detail

inline std::string SerializeConfig(const GameConfig& cfg) {
  GameConfig copy = cfg;
  std::string out;
  detail::ForEachConfigField(copy, [&](const char* key, double& value) {
    out += key;
    out += " = ";
    out += FormatDouble(value);
    out += '\n';
  });
  out += "num_agents = " + std::to_string(cfg.num_agents) + "\n";
  return out;
}

inline std::map<std::string, std::string> ParseKeyValues(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline GameConfig ParseConfig(std::string_view text) {
  GameConfig cfg;
  auto kv = ParseKeyValues(text);
  detail::ForEachConfigField(cfg, [&](const char* key, double& value) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    try {
      value = ParseDouble(it->second);
    } catch (const IoError&) {
      throw ConfigError(std::string("bad value for ") + key);
    }
    kv.erase(it);
  });
  if (auto it = kv.find("num_agents"); it != kv.end()) {
    try {
      cfg.num_agents = static_cast<std::size_t>(ParseDouble(it->second));
    } catch (const IoError&) {
      throw ConfigError("bad value for num_agents");
    }
    kv.erase(it);
  }
  if (!kv.empty()) throw ConfigError("unknown config key '" + kv.begin()->first + "'");
  cfg.Validate();
  return cfg;
}

inline std::string ConfigHash(const GameConfig& cfg) {
  return HexDigest(Fnv1a(SerializeConfig(cfg)));
}

}  // namespace empathy

#endif  // EMPATHY_IO_HPP_
