// Copyright 2026 The Stew Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Sectioned key-value text files ("[section]" headers, "key = value" lines,
// ';' or '#' comments).

#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "stew/error.hpp"

namespace stew {

class KeyValueFile {
 public:
  using Tree = boost::property_tree::ptree;

  KeyValueFile() = default;

  static KeyValueFile parse(const std::string& text, const std::string& where = "config") {
    KeyValueFile f;
    std::istringstream in(text);
    try {
      boost::property_tree::ini_parser::read_ini(in, f.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      fail(Errc::kParse, where + ": " + e.message() + " at line " + std::to_string(e.line()));
    }
    return f;
  }

  static KeyValueFile load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::kMissingFile, "cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
  }

  std::string dump() const {
    std::ostringstream out;
    boost::property_tree::ini_parser::write_ini(out, tree_);
    return out.str();
  }

  bool has_section(const std::string& section) const {
    return static_cast<bool>(tree_.get_child_optional(path(section)));
  }

  std::vector<std::string> sections() const {
    std::vector<std::string> out;
    for (const auto& [name, child] : tree_) out.push_back(name);
    return out;
  }

  std::vector<std::string> keys(const std::string& section) const {
    std::vector<std::string> out;
    if (auto child = tree_.get_child_optional(path(section))) {
      for (const auto& [name, value] : *child) out.push_back(name);
    }
    return out;
  }

  std::optional<std::string> find(const std::string& section, const std::string& key) const {
    auto child = tree_.get_child_optional(path(section));
    if (!child) return std::nullopt;
    auto value = child->get_optional<std::string>(path(key));
    if (!value) return std::nullopt;
    return *value;
  }

  template <typename V>
  V get(const std::string& section, const std::string& key, const V& fallback) const {
    auto raw = find(section, key);
    if (!raw) return fallback;
    return convert<V>(*raw, section, key);
  }

  template <typename V>
  V get(const std::string& section, const std::string& key) const {
    auto raw = find(section, key);
    if (!raw) fail(Errc::kParse, "missing key [" + section + "] " + key);
    return convert<V>(*raw, section, key);
  }

  template <typename V>
  void set(const std::string& section, const std::string& key, const V& value) {
    std::ostringstream s;
    s.precision(17);
    if constexpr (std::is_same_v<V, bool>) {
      s << (value ? "true" : "false");
    } else {
      s << value;
    }
    auto child = tree_.get_child_optional(path(section));
    if (!child) {
      tree_.push_back({section, Tree()});
      child = tree_.get_child_optional(path(section));
    }
    child->put(path(key), s.str());
  }

 private:
  static Tree::path_type path(const std::string& s) { return Tree::path_type(s, '\0'); }

  template <typename V>
  static V convert(const std::string& raw, const std::string& section, const std::string& key) {
    if constexpr (std::is_same_v<V, std::string>) {
      return raw;
    } else if constexpr (std::is_same_v<V, bool>) {
      if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
      if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
      fail(Errc::kParse, "[" + section + "] " + key + ": expected a boolean, got '" + raw + "'");
    } else {
      std::istringstream in(raw);
      V v{};
      in >> v;
      if (in.fail() || !(in >> std::ws).eof()) {
        fail(Errc::kParse, "[" + section + "] " + key + ": cannot parse '" + raw + "'");
      }
      return v;
    }
  }

  Tree tree_;
};

inline std::vector<std::string> split_words(const std::string& text, char sep = ' ') {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    const bool is_sep = sep == ' ' ? (c == ' ' || c == '\t' || c == '\n' || c == '\r') : c == sep;
    if (is_sep) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  if (sep != ' ') {
    for (auto& s : out) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    }
  }
  return out;
}

}  // namespace stew
