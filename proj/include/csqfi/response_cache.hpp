#pragma once

// In-memory and on-disk store of response values keyed by the exact bit
// patterns of (component, r_tilde, nu). Keys are exact, so a cached value is
// the very double the quadrature produced and results are bit-identical with
// the cache disabled.
//
// File format (line oriented, UTF-8 text):
//
//   # csqfi response cache
//   # format 1
//   <scheme> <component> <r_tilde> <nu> <value> <dvalue_dnu> <trunc_error>
//       <quad_error> <deriv_error> <has_derivative> <nodes> <modes>
//
// Fields are separated by single spaces, reals are C99 hexadecimal floats
// ("%a"), has_derivative is 0 or 1 and nodes/modes are decimal integers.
// Lines starting with '#' are comments. Rows whose scheme differs from
// kSchemeVersion are skipped on load. Rows are written sorted by key.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>

#include "csqfi/response_types.hpp"

namespace csqfi::response {

class ResponseCache {
 public:
  struct Key {
    Component component;
    std::uint64_t r_bits;
    std::uint64_t nu_bits;

    Key(Component c, double r_tilde, double nu)
        : component(c), r_bits(std::bit_cast<std::uint64_t>(r_tilde)),
          nu_bits(std::bit_cast<std::uint64_t>(nu)) {}

    auto operator<=>(const Key&) const = default;
  };

  std::optional<ResponseValue> lookup(const Key& key) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  // Keeps an existing entry that already carries a derivative.
  void store(const Key& key, const ResponseValue& value) {
    std::unique_lock lock(mutex_);
    auto [it, inserted] = entries_.try_emplace(key, value);
    if (!inserted && (value.has_derivative || !it->second.has_derivative)) it->second = value;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

  // Merges rows from a cache file. A missing file is not an error.
  void load(const std::string& path) {
    std::ifstream in(path);
    if (!in) return;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line.front() == '#') continue;
      std::istringstream fields(line);
      std::string scheme, comp, r, nu, v, dv, te, qe, de;
      int has_d = 0, nodes = 0, modes = 0;
      if (!(fields >> scheme >> comp >> r >> nu >> v >> dv >> te >> qe >> de >> has_d >> nodes >>
            modes)) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed cache row");
      }
      if (scheme != kSchemeVersion) continue;
      auto c = parse_component(comp);
      if (!c) throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad component");
      ResponseValue rv;
      rv.value = parse_hex(v);
      rv.dvalue_dnu = parse_hex(dv);
      rv.trunc_error = parse_hex(te);
      rv.quad_error = parse_hex(qe);
      rv.deriv_error = parse_hex(de);
      rv.has_derivative = has_d != 0;
      rv.nodes = nodes;
      rv.modes = modes;
      store(Key(*c, parse_hex(r), parse_hex(nu)), rv);
    }
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write cache file " + path);
    out << "# csqfi response cache\n# format 1\n";
    std::shared_lock lock(mutex_);
    for (const auto& [key, rv] : entries_) {
      out << kSchemeVersion << ' ' << component_name(key.component) << ' '
          << hex(std::bit_cast<double>(key.r_bits)) << ' '
          << hex(std::bit_cast<double>(key.nu_bits)) << ' ' << hex(rv.value) << ' '
          << hex(rv.dvalue_dnu) << ' ' << hex(rv.trunc_error) << ' ' << hex(rv.quad_error) << ' '
          << hex(rv.deriv_error) << ' ' << (rv.has_derivative ? 1 : 0) << ' ' << rv.nodes << ' '
          << rv.modes << '\n';
    }
  }

 private:
  static std::string hex(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", x);
    return buf;
  }
  static double parse_hex(const std::string& s) {
    char* end = nullptr;
    const double x = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) throw std::runtime_error("bad number in cache: " + s);
    return x;
  }

  mutable std::shared_mutex mutex_;
  std::map<Key, ResponseValue> entries_;
};

}  // namespace csqfi::response
