#pragma once

// INI experiment configuration. Every key is validated; unknown sections and
// keys are rejected with a message naming "section.key".

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mcfault/detector.hpp"
#include "mcfault/error.hpp"
#include "mcfault/mapping.hpp"
#include "mcfault/process.hpp"
#include "mcfault/rng.hpp"
#include "mcfault/transforms.hpp"

namespace mcfault {

struct OutputOptions {
  std::string directory = "mcfault-out";
  bool json = true;
  bool summary_csv = true;
  bool events_csv = false;
};

struct AppConfig {
  ExperimentPlan plan;
  std::vector<MeasurePreservingMap> transforms;  // [transform] names
  bool transform_in_simulation = false;
  std::uint64_t samples = 100'000;  // per-arm sample count for A/B and fix checks
  OutputOptions output;
  bool has_fault_section = false;
  bool has_transform_section = false;
  bool has_fix_section = false;
};

namespace detail {

using boost::property_tree::ptree;

[[noreturn]] inline void bad_key(const std::string& key, const std::string& why) {
  throw ConfigError(key + ": " + why);
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    boost::algorithm::trim(item);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline std::uint64_t parse_u64(const std::string& key, std::string text) {
  boost::algorithm::trim(text);
  std::uint64_t v = 0;
  int base = 10;
  std::string_view sv = text;
  if (sv.starts_with("0x") || sv.starts_with("0X")) {
    base = 16;
    sv.remove_prefix(2);
  }
  const auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v, base);
  if (ec != std::errc{} || ptr != sv.data() + sv.size() || sv.empty()) bad_key(key, "expected an unsigned integer");
  return v;
}

inline double parse_real(const std::string& key, std::string text) {
  boost::algorithm::trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty() || !std::isfinite(v)) {
    bad_key(key, "expected a finite real number");
  }
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  bad_key(key, "expected true or false");
}

inline void check_keys(const std::string& section, const ptree& tree, const std::set<std::string>& allowed) {
  for (const auto& [key, _] : tree) {
    if (!allowed.contains(key)) bad_key(section + "." + key, "unknown key");
  }
}

}  // namespace detail

/// Default seed expansion: seeds mix64(0) .. mix64(count-1).
[[nodiscard]] inline std::vector<Seed> expand_seed_count(std::uint64_t count) {
  std::vector<Seed> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) out.push_back(Seed{mix64(i)});
  return out;
}

[[nodiscard]] inline AppConfig parse_config(std::istream& in) {
  using detail::ptree;
  ptree root;
  try {
    boost::property_tree::ini_parser::read_ini(in, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config: " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  AppConfig cfg;
  auto& plan = cfg.plan;
  plan.seeds = expand_seed_count(20);
  plan.workers = {1, 2, 4};
  plan.mappings = {kAllMappings.begin(), kAllMappings.end()};
  plan.stream_modes = {StreamMode::PerClock, StreamMode::PerWorker};

  static const std::set<std::string> sections{"experiment", "fault", "transform", "fix", "parallel", "output", "diagnostics"};
  for (const auto& [name, section] : root) {
    if (!sections.contains(name)) {
      detail::bad_key(name, section.empty() ? "key outside of any section" : "unknown section");
    }
  }
  auto get = [](const ptree& sec, const std::string& key) -> std::optional<std::string> {
    if (auto v = sec.get_optional<std::string>(key)) return boost::algorithm::trim_copy(*v);
    return std::nullopt;
  };

  if (auto exp = root.get_child_optional("experiment")) {
    detail::check_keys("experiment", *exp,
                       {"seed", "seeds", "seed_count", "n_clocks", "horizon", "alpha", "samples", "fix_samples"});
    const int seed_keys = (get(*exp, "seed") ? 1 : 0) + (get(*exp, "seeds") ? 1 : 0) + (get(*exp, "seed_count") ? 1 : 0);
    if (seed_keys > 1) detail::bad_key("experiment.seed", "give only one of seed, seeds, seed_count");
    if (auto v = get(*exp, "seed")) plan.seeds = {Seed{detail::parse_u64("experiment.seed", *v)}};
    if (auto v = get(*exp, "seeds")) {
      plan.seeds.clear();
      for (const auto& s : detail::split_list(*v)) plan.seeds.push_back(Seed{detail::parse_u64("experiment.seeds", s)});
      if (plan.seeds.empty()) detail::bad_key("experiment.seeds", "seed list is empty");
    }
    if (auto v = get(*exp, "seed_count")) {
      const auto n = detail::parse_u64("experiment.seed_count", *v);
      if (n == 0) detail::bad_key("experiment.seed_count", "must be >= 1");
      plan.seeds = expand_seed_count(n);
    }
    if (auto v = get(*exp, "n_clocks")) {
      const auto n = detail::parse_u64("experiment.n_clocks", *v);
      if (n == 0 || n > 1'000'000) detail::bad_key("experiment.n_clocks", "must lie in [1, 1000000]");
      plan.n_clocks = static_cast<std::uint32_t>(n);
    }
    if (auto v = get(*exp, "horizon")) {
      plan.horizon = detail::parse_real("experiment.horizon", *v);
      if (!(plan.horizon > 0.0)) detail::bad_key("experiment.horizon", "must be > 0");
    }
    if (auto v = get(*exp, "alpha")) {
      plan.alpha = detail::parse_real("experiment.alpha", *v);
      if (!(plan.alpha > 0.0 && plan.alpha < 1.0)) detail::bad_key("experiment.alpha", "must lie in (0,1)");
    }
    if (auto v = get(*exp, "samples")) {
      cfg.samples = detail::parse_u64("experiment.samples", *v);
      if (cfg.samples < kMinAbSamples) detail::bad_key("experiment.samples", "must be >= 1000");
    }
    if (auto v = get(*exp, "fix_samples")) {
      plan.fix_samples = detail::parse_u64("experiment.fix_samples", *v);
      if (plan.fix_samples < kMinFixSamples) detail::bad_key("experiment.fix_samples", "must be >= 10000");
    }
  }

  if (auto fault = root.get_child_optional("fault")) {
    cfg.has_fault_section = true;
    detail::check_keys("fault", *fault, {"kind", "gamma", "c", "q"});
    const std::string kind = get(*fault, "kind").value_or("ideal");
    auto require = [&](const char* key) {
      auto v = get(*fault, key);
      if (!v) detail::bad_key(std::string("fault.") + key, "required for kind " + kind);
      return detail::parse_real(std::string("fault.") + key, *v);
    };
    auto forbid = [&](std::initializer_list<const char*> keys) {
      for (const char* k : keys) {
        if (get(*fault, k)) detail::bad_key(std::string("fault.") + k, "not used by kind " + kind);
      }
    };
    if (kind == "ideal") {
      forbid({"gamma", "c", "q"});
      plan.fault = Ideal{};
    } else if (kind == "power_bias") {
      forbid({"c", "q"});
      const double g = require("gamma");
      if (!(g > 0.0)) detail::bad_key("fault.gamma", "must be > 0");
      plan.fault = PowerBias{g};
    } else if (kind == "low_thinning") {
      forbid({"gamma"});
      const double c = require("c");
      const double q = require("q");
      if (!(c > 0.0 && c < 1.0)) detail::bad_key("fault.c", "must lie in (0,1)");
      if (!(q >= 0.0 && q <= 1.0)) detail::bad_key("fault.q", "must lie in [0,1]");
      plan.fault = LowThinning{c, q};
    } else {
      detail::bad_key("fault.kind", "unknown fault kind '" + kind + "'");
    }
  }

  if (auto tr = root.get_child_optional("transform")) {
    cfg.has_transform_section = true;
    detail::check_keys("transform", *tr, {"names", "simulate"});
    if (auto v = get(*tr, "names")) {
      for (const auto& name : detail::split_list(*v)) {
        try {
          cfg.transforms.push_back(MeasurePreservingMap::parse(name));
        } catch (const ConfigError& e) {
          detail::bad_key("transform.names", e.what());
        }
      }
    }
    if (auto v = get(*tr, "simulate")) cfg.transform_in_simulation = detail::parse_bool("transform.simulate", *v);
    if (cfg.transform_in_simulation) {
      if (cfg.transforms.empty()) detail::bad_key("transform.simulate", "needs at least one entry in transform.names");
      plan.map = cfg.transforms.front();
    }
  }

  if (auto fix = root.get_child_optional("fix")) {
    cfg.has_fix_section = true;
    detail::check_keys("fix", *fix, {"a", "b"});
    auto a = get(*fix, "a");
    auto b = get(*fix, "b");
    if (!a) detail::bad_key("fix.a", "missing window bound");
    if (!b) detail::bad_key("fix.b", "missing window bound");
    FixWindow w{detail::parse_real("fix.a", *a), detail::parse_real("fix.b", *b)};
    if (!(w.a >= 0.0)) detail::bad_key("fix.a", "must be >= 0");
    if (!(w.b <= 1.0)) detail::bad_key("fix.b", "must be <= 1");
    if (!(w.a < w.b)) detail::bad_key("fix.a", "window requires a < b");
    plan.fix = w;
  }

  if (auto par = root.get_child_optional("parallel")) {
    detail::check_keys("parallel", *par, {"workers", "mappings", "stream_modes"});
    if (auto v = get(*par, "workers")) {
      plan.workers.clear();
      for (const auto& s : detail::split_list(*v)) {
        const auto w = detail::parse_u64("parallel.workers", s);
        if (w == 0 || w > 4096) detail::bad_key("parallel.workers", "worker counts must lie in [1, 4096]");
        plan.workers.push_back(static_cast<std::uint32_t>(w));
      }
      if (plan.workers.empty()) detail::bad_key("parallel.workers", "list is empty");
    }
    if (auto v = get(*par, "mappings")) {
      plan.mappings.clear();
      for (const auto& s : detail::split_list(*v)) {
        try {
          plan.mappings.push_back(parse_mapping(s));
        } catch (const ConfigError& e) {
          detail::bad_key("parallel.mappings", e.what());
        }
      }
      if (plan.mappings.empty()) detail::bad_key("parallel.mappings", "list is empty");
    }
    if (auto v = get(*par, "stream_modes")) {
      plan.stream_modes.clear();
      for (const auto& s : detail::split_list(*v)) {
        try {
          plan.stream_modes.push_back(parse_stream_mode(s));
        } catch (const ConfigError& e) {
          detail::bad_key("parallel.stream_modes", e.what());
        }
      }
      if (plan.stream_modes.empty()) detail::bad_key("parallel.stream_modes", "list is empty");
    }
  }

  if (auto out = root.get_child_optional("output")) {
    detail::check_keys("output", *out, {"directory", "formats"});
    if (auto v = get(*out, "directory")) cfg.output.directory = *v;
    if (auto v = get(*out, "formats")) {
      cfg.output.json = cfg.output.summary_csv = cfg.output.events_csv = false;
      for (const auto& f : detail::split_list(*v)) {
        if (f == "json") {
          cfg.output.json = true;
        } else if (f == "summary_csv") {
          cfg.output.summary_csv = true;
        } else if (f == "events_csv") {
          cfg.output.events_csv = true;
        } else {
          detail::bad_key("output.formats", "unknown format '" + f + "'");
        }
      }
    }
  }

  if (auto diag = root.get_child_optional("diagnostics")) {
    detail::check_keys("diagnostics", *diag, {"inject_determinism_fault"});
    if (auto v = get(*diag, "inject_determinism_fault")) {
      plan.inject_determinism_fault = detail::parse_bool("diagnostics.inject_determinism_fault", *v);
    }
  }

  plan.validate();
  return cfg;
}

}  // namespace mcfault
